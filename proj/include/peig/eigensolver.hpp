#pragma once

#include "peig/fem.hpp"
#include "peig/mesh.hpp"
#include "peig/sparse.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace peig {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    double eta = 1e-5;
    double tol_newton = 1e-7;
    double tol_cg = 1e-6;
    double c1 = 1e-3;
    double delta_p = 1.0;
    double min_delta_p = 0.125;
    double p_max = 2.0;
    double tau_minus = 2.0;
    double tau_plus = 20.0;
    int max_newton_iters = 200;
    int cg_max_iter = 0; // 0: 10 sqrt(n) + 100
    PreconditionerSpec precond{};
    // Gauss points per axis. Above high_p_threshold, `quad_points_high_p` is
    // used for the Rayleigh quotient and, if `high_p_in_assembly`, for the
    // Newton system as well.
    int quad_points = 2;
    int quad_points_high_p = 3;
    double high_p_threshold = 10.0;
    bool high_p_in_assembly = true;
    double init_tol = 1e-10;

    /// Throws SolverError naming the first invalid field.
    void validate() const;
    int assembly_quad_points(double p) const;
    int rayleigh_quad_points(double p) const;
};

struct EigenResult {
    double p = 2.0;
    double lambda = 0.0;
    FeFunction u;
    double alpha = 1.0;
    double lambda_original = 0.0;
    int newton_iters = 0;
    bool converged = false;
    std::string failure;
    /// R_p after each accepted step, starting with the initial iterate.
    std::vector<double> rayleigh_history;

    /// lambda_original^(1/p).
    double lambda_root() const;
};

struct LineSearchResult {
    double beta = 1.0;
    std::vector<double> trials;
};

/// Backtracking with quadratic interpolation on phi(beta) = R(u + beta du),
/// starting at beta = 1 and accepting the first beta with
/// phi(beta) <= phi0 + c1 beta dphi0. Throws SolverError when dphi0 >= 0
/// ("not a descent direction") or when beta drops below 1e-12.
LineSearchResult line_search(const std::function<double(double)>& phi, double phi0, double dphi0, double c1);
double line_search(const FeSpace& space, const FeFunction& u, const FeFunction& du, double p, double c1);

/// Spaces for one mesh at one p: assembly and Rayleigh quotient quadratures.
class SolverSpaces {
public:
    explicit SolverSpaces(std::shared_ptr<const Mesh> mesh);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    /// Space with the given points per axis, built on first use.
    const FeSpace& space(int quad_points) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    mutable std::vector<std::unique_ptr<FeSpace>> spaces_;
};

/// The p = 2 eigenpair from the linear pencil by inverse power iteration.
EigenResult initial_eigenpair(const SolverSpaces& spaces, const SolverConfig& cfg);

/// Damped Newton inverse-power iteration at fixed p, warm-started from
/// init.u and init.lambda. Failures are reported via converged = false.
EigenResult newton_solve_fixed_p(const SolverSpaces& spaces, double p, const EigenResult& init,
                                 const SolverConfig& cfg);
EigenResult newton_solve_fixed_p(std::shared_ptr<const Mesh> mesh, double p, const EigenResult& init,
                                 const SolverConfig& cfg);

enum class RescaleMode { off, fixed, adaptive };

struct ContinuationOptions {
    RescaleMode rescale = RescaleMode::off;
    double fixed_alpha = 1.0;
    /// p values that must be hit exactly (in addition to 2 + k delta_p and p_max).
    std::vector<double> checkpoints;
    std::function<void(const EigenResult&)> observer;
};

struct ContinuationResult {
    std::vector<EigenResult> results;
    bool truncated = false;
    std::string reason;
};

/// Continuation in p from the p = 2 eigenpair up to cfg.p_max, with optional
/// fixed or adaptive domain rescaling. A failed step is retried with half the
/// step size down to cfg.min_delta_p; after that the sweep is truncated.
ContinuationResult run_continuation(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg,
                                    const ContinuationOptions& opts = {});

ContinuationResult continuation(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg);
ContinuationResult continuation_with_rescaling(std::shared_ptr<const Mesh> mesh, const SolverConfig& cfg);

} // namespace peig
