#include "peig/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace peig {

void SolverConfig::validate() const
{
    auto fail = [](const std::string& what) { throw SolverError("invalid solver config: " + what); };
    if (!(eta > 0.0)) {
        fail("eta must be positive");
    }
    if (!(tol_newton > 0.0)) {
        fail("tol_newton must be positive");
    }
    if (!(tol_cg > 0.0 && tol_cg < 1.0)) {
        fail("tol_cg must lie in (0, 1)");
    }
    if (!(c1 > 0.0 && c1 < 1.0)) {
        fail("c1 must lie in (0, 1)");
    }
    if (!(delta_p > 0.0)) {
        fail("delta_p must be positive");
    }
    if (!(min_delta_p > 0.0 && min_delta_p <= delta_p)) {
        fail("min_delta_p must lie in (0, delta_p]");
    }
    if (!(p_max >= 2.0) || !std::isfinite(p_max)) {
        fail("p_max must be at least 2");
    }
    if (!(tau_minus > 0.0 && tau_minus < tau_plus)) {
        fail("thresholds must satisfy 0 < tau_minus < tau_plus");
    }
    if (max_newton_iters < 1) {
        fail("max_newton_iters must be at least 1");
    }
    if (cg_max_iter < 0) {
        fail("cg_max_iter must be non-negative");
    }
    if (quad_points < 1 || quad_points > 5 || quad_points_high_p < 1 || quad_points_high_p > 5) {
        fail("quadrature points per axis must lie in 1..5");
    }
}

int SolverConfig::assembly_quad_points(double p) const
{
    return (high_p_in_assembly && p > high_p_threshold) ? quad_points_high_p : quad_points;
}

int SolverConfig::rayleigh_quad_points(double p) const
{
    return p > high_p_threshold ? quad_points_high_p : quad_points;
}

double EigenResult::lambda_root() const
{
    return std::exp(std::log(lambda_original) / p);
}

LineSearchResult line_search(const std::function<double(double)>& phi, double phi0, double dphi0, double c1)
{
    if (!(dphi0 < 0.0)) {
        throw SolverError("not a descent direction");
    }
    LineSearchResult res;
    double beta = 1.0;
    while (beta >= 1e-12) {
        res.trials.push_back(beta);
        const double val = phi(beta);
        if (val <= phi0 + c1 * beta * dphi0) {
            res.beta = beta;
            return res;
        }
        // Minimizer of the quadratic through phi0, dphi0 and phi(beta).
        double next = 0.5 * beta;
        const double curv = val - phi0 - dphi0 * beta;
        if (std::isfinite(val) && curv > 0.0) {
            next = -dphi0 * beta * beta / (2.0 * curv);
        } else {
            next = 0.1 * beta;
        }
        beta = std::clamp(next, 0.1 * beta, 0.5 * beta);
    }
    throw SolverError("line search failed");
}

double line_search(const FeSpace& space, const FeFunction& u, const FeFunction& du, double p, double c1)
{
    const double phi0 = rayleigh_quotient(space, u, p);
    const double dphi0 = rayleigh_directional_derivative(space, u, du, p);
    FeFunction trial(u.coeffs);
    auto phi = [&](double beta) {
        for (std::size_t i = 0; i < trial.size(); ++i) {
            trial.coeffs[i] = u.coeffs[i] + beta * du.coeffs[i];
        }
        try {
            return rayleigh_quotient(space, trial, p);
        } catch (const FemError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    return line_search(phi, phi0, dphi0, c1).beta;
}

SolverSpaces::SolverSpaces(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh))
{
    if (!mesh_) {
        throw SolverError("solver needs a mesh");
    }
    spaces_.resize(6);
}

const FeSpace& SolverSpaces::space(int quad_points) const
{
    if (quad_points < 1 || quad_points > 5) {
        throw SolverError("unsupported quadrature order");
    }
    auto& slot = spaces_[static_cast<std::size_t>(quad_points)];
    if (!slot) {
        slot = std::make_unique<FeSpace>(mesh_, quad_points);
    }
    return *slot;
}

namespace {

double alpha_pow(double alpha, double p)
{
    return alpha == 1.0 ? 1.0 : std::exp(p * std::log(alpha));
}

double relative_change(const FeFunction& a, const FeFunction& b)
{
    double d = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = a.coeffs[i] - b.coeffs[i];
        d += e * e;
        n += a.coeffs[i] * a.coeffs[i];
    }
    return std::sqrt(d / n);
}

} // namespace

EigenResult initial_eigenpair(const SolverSpaces& spaces, const SolverConfig& cfg)
{
    const auto& space = spaces.space(cfg.quad_points);
    if (space.num_free() == 0) {
        throw SolverError("mesh has no interior nodes");
    }
    const auto pencil = assemble_linear_pencil(space);
    const auto pair = smallest_generalized_eigenpair(pencil.k, pencil.m, cfg.init_tol, 5000, cfg.precond);
    EigenResult r;
    r.p = 2.0;
    r.u = normalize_sup(FeFunction(space.extend_from_free(pair.vector)));
    r.lambda = rayleigh_quotient(space, r.u, 2.0);
    r.lambda_original = r.lambda;
    r.newton_iters = pair.iterations;
    r.converged = true;
    r.rayleigh_history = {r.lambda};
    return r;
}

EigenResult newton_solve_fixed_p(const SolverSpaces& spaces, double p, const EigenResult& init,
                                 const SolverConfig& cfg)
{
    cfg.validate();
    if (!(p >= 2.0)) {
        throw SolverError("p must be at least 2");
    }
    const FeSpace& aspace = spaces.space(cfg.assembly_quad_points(p));
    const FeSpace& rspace = spaces.space(cfg.rayleigh_quad_points(p));
    if (init.u.size() != spaces.mesh().num_vertices()) {
        throw SolverError("initial function does not match the mesh");
    }

    EigenResult out;
    out.p = p;
    out.alpha = init.alpha;
    FeFunction u = normalize_sup(init.u);
    double r_cur = rayleigh_quotient(rspace, u, p);
    double lambda = init.lambda > 0.0 ? init.lambda : r_cur;
    out.rayleigh_history.push_back(r_cur);
    const int cg_max =
        cfg.cg_max_iter > 0 ? cfg.cg_max_iter : default_cg_max_iter(aspace.num_free());

    auto finish = [&](bool ok, std::string why) {
        out.u = u;
        out.lambda = r_cur;
        out.lambda_original = alpha_pow(out.alpha, p) * r_cur;
        out.converged = ok;
        out.failure = std::move(why);
        return out;
    };

    FeFunction du(std::vector<double>(u.size(), 0.0));
    FeFunction next(u.coeffs);
    for (int it = 1; it <= cfg.max_newton_iters; ++it) {
        out.newton_iters = it;
        std::vector<double> step;
        try {
            const auto sys = assemble_newton_system(aspace, u, p, cfg.eta, lambda);
            const auto a = add(sys.k, sys.m, 1.0, lambda);
            // An unconverged CG iterate is still a descent direction, so it is used as is.
            step = cg_solve(a, sys.b, cfg.tol_cg, cg_max, cfg.precond).x;
        } catch (const std::exception& e) {
            return finish(false, std::string("linear solve failed: ") + e.what());
        }
        du.coeffs = aspace.extend_from_free(step);

        const double slope = rayleigh_directional_derivative(rspace, u, du, p);
        const double du_rel = norm2(du.coeffs) / norm2(u.coeffs);
        // A step already below tol_newton that no longer descends (or whose line
        // search fails) only carries rounding noise: stop at the current iterate.
        double beta = 1.0;
        if (!(slope < 0.0)) {
            if (lambda != r_cur) {
                lambda = r_cur;
                continue;
            }
            if (du_rel <= cfg.tol_newton) {
                return finish(true, "");
            }
            return finish(false, "not a descent direction");
        }
        try {
            beta = line_search(rspace, u, du, p, cfg.c1);
        } catch (const SolverError& e) {
            if (du_rel <= cfg.tol_newton) {
                return finish(true, "");
            }
            return finish(false, e.what());
        }

        for (std::size_t i = 0; i < u.size(); ++i) {
            next.coeffs[i] = u.coeffs[i] + beta * du.coeffs[i];
        }
        try {
            next = normalize_sup(next);
        } catch (const FemError& e) {
            return finish(false, e.what());
        }
        const double change = relative_change(next, u);
        u = next;
        r_cur = rayleigh_quotient(rspace, u, p);
        lambda = r_cur;
        out.rayleigh_history.push_back(r_cur);
        if (!std::isfinite(r_cur)) {
            return finish(false, "Rayleigh quotient is not finite");
        }
        if (change <= cfg.tol_newton) {
            return finish(true, "");
        }
    }
    return finish(false, "maximum Newton iterations reached");
}

EigenResult newton_solve_fixed_p(std::shared_ptr<const Mesh> mesh, double p, const EigenResult& init,
                                 const SolverConfig& cfg)
{
    SolverSpaces spaces(std::move(mesh));
    return newton_solve_fixed_p(spaces, p, init, cfg);
}

ContinuationResult run_continuation(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg,
                                    const ContinuationOptions& opts)
{
    cfg.validate();
    if (!mesh) {
        throw SolverError("continuation needs a mesh");
    }
    if (opts.rescale == RescaleMode::fixed && !(opts.fixed_alpha > 0.0 && std::isfinite(opts.fixed_alpha))) {
        throw SolverError("fixed rescaling needs a positive alpha");
    }
    const auto original = mesh;
    double alpha = opts.rescale == RescaleMode::fixed ? opts.fixed_alpha : 1.0;
    auto spaces = std::make_unique<SolverSpaces>(
        alpha == 1.0 ? original : std::make_shared<const Mesh>(scale_mesh(*original, alpha)));

    ContinuationResult out;
    EigenResult prev = initial_eigenpair(*spaces, cfg);
    prev.alpha = alpha;
    prev.lambda_original = alpha_pow(alpha, 2.0) * prev.lambda;
    out.results.push_back(prev);
    if (opts.observer) {
        opts.observer(prev);
    }

    std::vector<double> stops = opts.checkpoints;
    std::sort(stops.begin(), stops.end());
    constexpr double eps = 1e-12;
    auto next_stop = [&](double p) {
        double target = cfg.p_max;
        const double k = std::floor((p - 2.0) / cfg.delta_p + eps) + 1.0;
        target = std::min(target, 2.0 + k * cfg.delta_p);
        for (double c : stops) {
            if (c > p + eps) {
                target = std::min(target, c);
                break;
            }
        }
        return target;
    };

    double step = cfg.delta_p;
    while (prev.p < cfg.p_max - eps) {
        double p = std::min(prev.p + step, next_stop(prev.p));
        if (std::abs(p - cfg.p_max) < eps) {
            p = cfg.p_max;
        }

        EigenResult start = prev;
        double new_alpha = alpha;
        if (opts.rescale == RescaleMode::adaptive) {
            if (start.lambda > cfg.tau_plus) {
                new_alpha *= std::exp2(1.0 / p);
                start.lambda *= 0.5;
            }
            if (start.lambda < cfg.tau_minus) {
                new_alpha *= std::exp2(-1.0 / p);
                start.lambda *= 2.0;
            }
        }
        std::unique_ptr<SolverSpaces> trial_spaces;
        if (new_alpha != alpha) {
            trial_spaces = std::make_unique<SolverSpaces>(std::make_shared<const Mesh>(scale_mesh(*original, new_alpha)));
        }
        start.alpha = new_alpha;

        auto res = newton_solve_fixed_p(trial_spaces ? *trial_spaces : *spaces, p, start, cfg);
        if (res.converged) {
            if (trial_spaces) {
                spaces = std::move(trial_spaces);
                alpha = new_alpha;
            }
            prev = res;
            out.results.push_back(res);
            if (opts.observer) {
                opts.observer(res);
            }
            step = std::min(cfg.delta_p, 2.0 * step);
            continue;
        }
        if (step * 0.5 >= cfg.min_delta_p - eps) {
            step *= 0.5;
            continue;
        }
        std::ostringstream why;
        why << "no convergence at p = " << p << " after " << res.newton_iters << " iterations: " << res.failure;
        out.truncated = true;
        out.reason = why.str();
        break;
    }
    return out;
}

ContinuationResult continuation(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg)
{
    return run_continuation(std::move(mesh), cfg, {});
}

ContinuationResult continuation_with_rescaling(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg)
{
    ContinuationOptions opts;
    opts.rescale = RescaleMode::adaptive;
    return run_continuation(std::move(mesh), cfg, opts);
}

} // namespace peig
