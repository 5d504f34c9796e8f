#pragma once

#include "peig/mesh.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace peig {

class ReferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Half period of sin_p times two: 2 pi / (p sin(pi / p)).
double pi_p(double p);

/// sin_p on [0, pi_p / 2] by integrating
///   v' = |w|^(1/(p-1)) sgn w,  w' = -(p-1) |v|^(p-1) sgn v,  v(0) = 0, w(0) = 1.
double sin_p(double t, double p, double tol = 1e-13);

/// sin_p at many points in one integration pass. Points may be unsorted.
std::vector<double> sin_p_many(std::span<const double> ts, double p, double tol = 1e-13);

/// F_p(x) = int_0^x (1 - s^p)^(-1/p) ds for x in [0, 1], by adaptive quadrature.
double F_p(double x, double p);

/// Inverse of F_p by bracketed root finding; an ODE-free route to sin_p.
double F_p_inverse(double t, double p);

/// sin_p tabulated on nodes graded towards pi_p / 2, with cubic Hermite
/// interpolation using the exact derivative (1 - sin_p^p)^(1/p).
class PTrigTable {
public:
    explicit PTrigTable(double p, std::size_t intervals = 4096, double grading = 3.0);

    double p() const { return p_; }
    double half_period() const { return half_; }
    std::span<const double> nodes() const { return t_; }
    std::span<const double> values() const { return v_; }

    /// sin_p(t) for t in [0, pi_p / 2].
    double operator()(double t) const;

private:
    double p_;
    double half_;
    std::vector<double> t_;
    std::vector<double> v_;
    std::vector<double> d_;
};

/// lambda_p = (p - 1) (pi_p / (b - a))^p, evaluated in log space.
double exact_1d_eigenvalue(double p, double a, double b);

struct Exact1dEigenpair {
    double lambda;
    std::function<double(double)> u;
};

/// Exact first eigenpair on (a, b): u(x) = sin_p(pi_p (x - a) / (b - a)),
/// using the reflection u(x) = u(a + b - x) past the midpoint.
Exact1dEigenpair exact_1d_eigenpair(double p, double a, double b);

/// The exact eigenfunction at many points in a single ODE pass.
std::vector<double> exact_1d_eigenfunction(double p, double a, double b, std::span<const double> xs);

/// Large-p expansion of lambda_p through the 1/p term.
double lambda_expansion(double p, double a, double b);
/// Large-p expansion of lambda_p^(1/p) through the 1/p^2 term.
double lambda_root_expansion(double p, double a, double b);

struct CuspModel {
    double k;
    double exponent;
};

/// u_p(x) ~ 1 - K_p |x - x0|^(p/(p-1)) near the maximum of the 1D eigenfunction.
CuspModel cusp_model(double p, double a, double b);

/// Normalized distance to the boundary, the p -> infinity eigenfunction on
/// domains whose ridge set equals the maximal set. Rejects points more than
/// 1e-9 outside the domain and the square, whose limit is not known.
double limit_distance_function(const DomainDescriptor& domain, const Point& x);

} // namespace peig
