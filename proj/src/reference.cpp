#include "peig/reference.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace peig {

namespace {

using State = std::array<double, 2>;

void require_p(double p, double min_p, const char* what)
{
    if (!(p >= min_p) || !std::isfinite(p)) {
        throw ReferenceError(std::string(what) + ": p = " + std::to_string(p) + " is out of range");
    }
}

struct SinPSystem {
    double p;
    void operator()(const State& s, State& ds, double /*t*/) const
    {
        const double v = s[0];
        const double w = s[1];
        ds[0] = std::copysign(std::pow(std::abs(w), 1.0 / (p - 1.0)), w);
        ds[1] = -(p - 1.0) * std::copysign(std::pow(std::abs(v), p - 1.0), v);
    }
};

// Integrates from 0 through the sorted times, stepping exactly onto each.
std::vector<double> integrate_sorted(const std::vector<double>& times, double p, double tol)
{
    namespace odeint = boost::numeric::odeint;
    std::vector<double> out(times.size(), 0.0);
    if (times.empty()) {
        return out;
    }
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
    State s{0.0, 1.0};
    std::vector<double> obs;
    obs.reserve(times.size() + 1);
    obs.push_back(0.0);
    obs.insert(obs.end(), times.begin(), times.end());
    std::size_t k = 0;
    const double dt0 = std::min(1e-3, std::max(times.back(), 1e-12));
    odeint::integrate_times(stepper, SinPSystem{p}, s, obs.begin(), obs.end(), dt0,
                            [&](const State& st, double) {
                                if (k > 0) {
                                    out[k - 1] = std::clamp(st[0], 0.0, 1.0);
                                }
                                ++k;
                            });
    return out;
}

} // namespace

double pi_p(double p)
{
    if (!(p > 1.0) || !std::isfinite(p)) {
        throw ReferenceError("pi_p requires p > 1");
    }
    return 2.0 * std::numbers::pi / (p * std::sin(std::numbers::pi / p));
}

double sin_p(double t, double p, double tol)
{
    const double t_arr[] = {t};
    return sin_p_many(t_arr, p, tol)[0];
}

std::vector<double> sin_p_many(std::span<const double> ts, double p, double tol)
{
    require_p(p, 2.0, "sin_p");
    const double half = 0.5 * pi_p(p);
    const double slack = 1e-14 * half;
    std::vector<std::size_t> order(ts.size());
    std::iota(order.begin(), order.end(), 0);
    for (double t : ts) {
        if (!(t >= -slack && t <= half + slack)) {
            throw ReferenceError("sin_p argument " + std::to_string(t) + " outside [0, pi_p/2]");
        }
    }
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return ts[i] < ts[j]; });
    std::vector<double> sorted;
    sorted.reserve(ts.size());
    for (auto i : order) {
        sorted.push_back(std::clamp(ts[i], 0.0, half));
    }
    // integrate_times needs strictly increasing observation times.
    std::vector<double> uniq;
    for (double t : sorted) {
        if (t > 0.0 && (uniq.empty() || t > uniq.back())) {
            uniq.push_back(t);
        }
    }
    const auto vals = integrate_sorted(uniq, p, tol);
    std::vector<double> out(ts.size(), 0.0);
    std::size_t u = 0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double t = sorted[k];
        if (t == 0.0) {
            out[order[k]] = 0.0;
            continue;
        }
        while (uniq[u] < t) {
            ++u;
        }
        out[order[k]] = vals[u];
    }
    return out;
}

double F_p(double x, double p)
{
    require_p(p, 2.0, "F_p");
    if (!(x >= 0.0 && x <= 1.0)) {
        throw ReferenceError("F_p argument outside [0, 1]");
    }
    if (x == 0.0) {
        return 0.0;
    }
    // s = 1 - tau^q with q = p/(p-1) removes the endpoint singularity at s = 1.
    const double q = p / (p - 1.0);
    const double tau_lo = std::pow(1.0 - x, 1.0 / q);
    auto integrand = [p, q](double tau) {
        if (tau <= 0.0) {
            // limit of q tau^(q-1) (1 - s^p)^(-1/p) as tau -> 0
            return q * std::pow(p, -1.0 / p);
        }
        const double tq = std::pow(tau, q);
        if (tq < 1e-14) {
            return q * std::pow(p, -1.0 / p);
        }
        const double one_minus_sp = -std::expm1(p * std::log1p(-tq));
        return q * std::pow(tau, q - 1.0) * std::pow(one_minus_sp, -1.0 / p);
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate(integrand, tau_lo, 1.0, 1e-15);
}

double F_p_inverse(double t, double p)
{
    require_p(p, 2.0, "F_p_inverse");
    const double half = 0.5 * pi_p(p);
    if (!(t >= 0.0 && t <= half * (1.0 + 1e-14))) {
        throw ReferenceError("F_p_inverse argument outside [0, pi_p/2]");
    }
    if (t <= 0.0) {
        return 0.0;
    }
    if (t >= half) {
        return 1.0;
    }
    std::uintmax_t max_iter = 200;
    auto f = [&](double x) { return F_p(x, p) - t; };
    const auto tol = boost::math::tools::eps_tolerance<double>(52);
    const auto [lo, hi] = boost::math::tools::toms748_solve(f, 0.0, 1.0, -t, half - t, tol, max_iter);
    return 0.5 * (lo + hi);
}

PTrigTable::PTrigTable(double p, std::size_t intervals, double grading) : p_(p)
{
    require_p(p, 2.0, "PTrigTable");
    if (intervals < 2 || !(grading >= 1.0)) {
        throw ReferenceError("PTrigTable needs at least 2 intervals and grading >= 1");
    }
    half_ = 0.5 * pi_p(p);
    t_.resize(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
        const double s = 1.0 - static_cast<double>(k) / static_cast<double>(intervals);
        t_[k] = half_ * (1.0 - std::pow(s, grading));
    }
    t_.back() = half_;
    std::vector<double> inner(t_.begin() + 1, t_.end() - 1);
    const auto vals = integrate_sorted(inner, p, 1e-13);
    v_.assign(t_.size(), 0.0);
    std::copy(vals.begin(), vals.end(), v_.begin() + 1);
    v_.back() = 1.0;
    // Near the top the graded nodes get closer than the values can resolve;
    // drop interior nodes whose value does not strictly increase.
    std::size_t keep = 1;
    for (std::size_t k = 1; k < t_.size(); ++k) {
        const bool last = k + 1 == t_.size();
        if (last || (v_[k] > v_[keep - 1] && v_[k] < 1.0)) {
            t_[keep] = t_[k];
            v_[keep] = v_[k];
            ++keep;
        }
    }
    t_.resize(keep);
    v_.resize(keep);
    d_.resize(t_.size());
    for (std::size_t k = 0; k < t_.size(); ++k) {
        d_[k] = std::pow(std::max(0.0, -std::expm1(p * std::log(std::max(v_[k], 1e-300)))), 1.0 / p);
    }
    d_.front() = 1.0;
    d_.back() = 0.0;
}

double PTrigTable::operator()(double t) const
{
    if (!(t >= -1e-14 * half_ && t <= half_ * (1.0 + 1e-14))) {
        throw ReferenceError("PTrigTable argument outside [0, pi_p/2]");
    }
    t = std::clamp(t, 0.0, half_);
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t k = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    k = std::min(k, t_.size() - 2);
    const double h = t_[k + 1] - t_[k];
    const double s = (t - t_[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    const double v = h00 * v_[k] + h10 * h * d_[k] + h01 * v_[k + 1] + h11 * h * d_[k + 1];
    return std::clamp(v, 0.0, 1.0);
}

double exact_1d_eigenvalue(double p, double a, double b)
{
    require_p(p, 2.0, "exact_1d_eigenvalue");
    if (!(a < b)) {
        throw ReferenceError("exact_1d_eigenvalue requires a < b");
    }
    return std::exp(std::log(p - 1.0) + p * std::log(pi_p(p) / (b - a)));
}

Exact1dEigenpair exact_1d_eigenpair(double p, double a, double b)
{
    const double lambda = exact_1d_eigenvalue(p, a, b);
    auto u = [p, a, b](double x) {
        const double xs[] = {x};
        return exact_1d_eigenfunction(p, a, b, xs)[0];
    };
    return {lambda, u};
}

std::vector<double> exact_1d_eigenfunction(double p, double a, double b, std::span<const double> xs)
{
    require_p(p, 2.0, "exact_1d_eigenfunction");
    if (!(a < b)) {
        throw ReferenceError("exact_1d_eigenfunction requires a < b");
    }
    const double pp = pi_p(p);
    const double tol = 1e-12 * (b - a);
    std::vector<double> ts;
    ts.reserve(xs.size());
    for (double x : xs) {
        if (!(x >= a - tol && x <= b + tol)) {
            throw ReferenceError("point " + std::to_string(x) + " outside the interval");
        }
        const double xr = std::clamp(x, a, b);
        const double d = std::min(xr - a, b - xr);
        ts.push_back(std::min(pp * d / (b - a), 0.5 * pp));
    }
    return sin_p_many(ts, p);
}

double lambda_expansion(double p, double a, double b)
{
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double series = p + (pi2 - 6.0) / 6.0 + pi2 * (pi2 - 12.0) / (72.0 * p);
    return std::exp(p * std::log(2.0 / (b - a))) * series;
}

double lambda_root_expansion(double p, double a, double b)
{
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double lp = std::log(p);
    return (2.0 / (b - a)) * (1.0 + lp / p + (pi2 - 6.0 + 3.0 * lp * lp) / (6.0 * p * p));
}

CuspModel cusp_model(double p, double a, double b)
{
    if (!(p > 2.0) || !std::isfinite(p)) {
        throw ReferenceError("cusp model requires p > 2");
    }
    if (!(a < b)) {
        throw ReferenceError("cusp model requires a < b");
    }
    const double e = p / (p - 1.0);
    const double k = std::pow(p - 1.0, e) * std::pow(pi_p(p) / (b - a), e) / p;
    return {k, e};
}

double limit_distance_function(const DomainDescriptor& domain, const Point& x)
{
    constexpr double tol = 1e-9;
    auto outside = [] { throw ReferenceError("point lies outside the domain"); };
    switch (domain.kind) {
    case DomainKind::interval: {
        const double a = domain.param0;
        const double b = domain.param1;
        if (x.x() < a - tol || x.x() > b + tol) {
            outside();
        }
        return std::max(0.0, std::min(x.x() - a, b - x.x())) / (0.5 * (b - a));
    }
    case DomainKind::disk: {
        const double r = domain.param0;
        const double rho = x.head<2>().norm();
        if (rho > r + tol || std::abs(x.z()) > tol) {
            outside();
        }
        return std::max(0.0, r - rho) / r;
    }
    case DomainKind::hemisphere: {
        const double r = domain.param0;
        if (std::abs(x.norm() - r) > tol || x.z() < -tol) {
            outside();
        }
        const double c = std::clamp(x.z() / r, 0.0, 1.0);
        return (2.0 / std::numbers::pi) * (0.5 * std::numbers::pi - std::acos(c));
    }
    case DomainKind::half_torus: {
        const double major = domain.param0;
        const double tube = domain.param1;
        const double rho = x.head<2>().norm();
        const double dr = rho - major;
        if (std::abs(std::hypot(dr, x.z()) - tube) > tol || x.z() < -tol) {
            outside();
        }
        const double phi = std::atan2(std::max(x.z(), 0.0), dr);
        return std::min(phi, std::numbers::pi - phi) / (0.5 * std::numbers::pi);
    }
    case DomainKind::square:
        break;
    }
    throw ReferenceError("no known limit eigenfunction for this domain");
}

} // namespace peig
