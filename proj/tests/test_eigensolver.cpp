#include "peig/eigensolver.hpp"
#include "peig/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace peig;

namespace {

std::shared_ptr<const Mesh> interval(int n)
{
    return std::make_shared<const Mesh>(build_interval_mesh(-1.0, 1.0, n));
}

const EigenResult* at_p(const ContinuationResult& c, double p)
{
    for (const auto& r : c.results) {
        if (std::abs(r.p - p) < 1e-12) {
            return &r;
        }
    }
    return nullptr;
}

void expect_valid(const EigenResult& r)
{
    EXPECT_TRUE(r.converged) << r.failure;
    EXPECT_GT(r.lambda, 0.0);
    EXPECT_NEAR(sup_norm(r.u), 1.0, 1e-14);
    for (double v : r.u.coeffs) {
        EXPECT_GE(v, -1e-12);
    }
    EXPECT_NEAR(r.lambda_original / (std::pow(r.alpha, r.p) * r.lambda), 1.0, 1e-13);
}

} // namespace

TEST(SolverConfig, DefaultsAndValidation)
{
    SolverConfig cfg;
    EXPECT_EQ(cfg.eta, 1e-5);
    EXPECT_EQ(cfg.tol_newton, 1e-7);
    EXPECT_EQ(cfg.tol_cg, 1e-6);
    EXPECT_EQ(cfg.c1, 1e-3);
    EXPECT_EQ(cfg.delta_p, 1.0);
    EXPECT_EQ(cfg.tau_minus, 2.0);
    EXPECT_EQ(cfg.tau_plus, 20.0);
    EXPECT_EQ(cfg.max_newton_iters, 200);
    EXPECT_NO_THROW(cfg.validate());

    auto bad = [](auto mutate) {
        SolverConfig c;
        mutate(c);
        EXPECT_THROW(c.validate(), SolverError);
    };
    bad([](SolverConfig& c) { c.eta = 0.0; });
    bad([](SolverConfig& c) { c.tol_newton = -1.0; });
    bad([](SolverConfig& c) { c.c1 = 1.0; });
    bad([](SolverConfig& c) { c.c1 = 0.0; });
    bad([](SolverConfig& c) { c.delta_p = 0.0; });
    bad([](SolverConfig& c) { c.tau_minus = 30.0; });
    bad([](SolverConfig& c) { c.tau_minus = 0.0; });
    bad([](SolverConfig& c) { c.p_max = 1.5; });
    bad([](SolverConfig& c) { c.max_newton_iters = 0; });
    bad([](SolverConfig& c) { c.quad_points = 6; });
}

TEST(SolverConfig, QuadratureSelection)
{
    SolverConfig cfg;
    EXPECT_EQ(cfg.assembly_quad_points(10.0), 2);
    EXPECT_EQ(cfg.rayleigh_quad_points(10.0), 2);
    EXPECT_EQ(cfg.assembly_quad_points(10.5), 3);
    EXPECT_EQ(cfg.rayleigh_quad_points(10.5), 3);
    cfg.high_p_in_assembly = false;
    EXPECT_EQ(cfg.assembly_quad_points(50.0), 2);
    EXPECT_EQ(cfg.rayleigh_quad_points(50.0), 3);
}

TEST(LineSearch, FullStepAccepted)
{
    auto phi = [](double b) { return 1.0 - b + 0.1 * b * b; };
    const auto r = line_search(phi, 1.0, -1.0, 1e-3);
    EXPECT_EQ(r.beta, 1.0);
    EXPECT_EQ(r.trials.size(), 1u);
}

TEST(LineSearch, QuadraticInterpolationFindsMinimum)
{
    // phi(b) = (b - 0.3)^2 - 0.09: the interpolant is exact, so the first backtrack is 0.3.
    auto phi = [](double b) { return (b - 0.3) * (b - 0.3) - 0.09; };
    const auto r = line_search(phi, 0.0, -0.6, 1e-3);
    ASSERT_EQ(r.trials.size(), 2u);
    EXPECT_NEAR(r.trials[1], 0.3, 1e-15);
    EXPECT_NEAR(r.beta, 0.3, 1e-15);
}

TEST(LineSearch, ShrinkingSequence)
{
    auto phi = [](double b) { return -0.01 * b + 10.0 * b * b; };
    const auto r = line_search(phi, 0.0, -0.01, 1e-3);
    ASSERT_GE(r.trials.size(), 3u);
    for (std::size_t i = 1; i < r.trials.size(); ++i) {
        EXPECT_LT(r.trials[i], r.trials[i - 1]);
        EXPECT_GE(r.trials[i], 0.1 * r.trials[i - 1] * (1 - 1e-15));
        EXPECT_LE(r.trials[i], 0.5 * r.trials[i - 1] * (1 + 1e-15));
    }
    EXPECT_LE(phi(r.beta), 1e-3 * r.beta * -0.01);
    EXPECT_EQ(r.beta, r.trials.back());
}

TEST(LineSearch, Errors)
{
    auto flat = [](double) { return 0.0; };
    try {
        line_search(flat, 0.0, 0.0, 1e-3);
        FAIL();
    } catch (const SolverError& e) {
        EXPECT_STREQ(e.what(), "not a descent direction");
    }
    auto up = [](double b) { return b; };
    try {
        line_search(up, 0.0, -1.0, 1e-3);
        FAIL();
    } catch (const SolverError& e) {
        EXPECT_STREQ(e.what(), "line search failed");
    }
}

TEST(LineSearch, HomogeneousDirectionIsNotDescent)
{
    auto m = interval(16);
    FeSpace s(m);
    std::vector<double> c(m->num_vertices());
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = 1.0 - std::abs(m->vertex(i).x());
    }
    const FeFunction u(c);
    FeFunction du(c);
    for (auto& v : du.coeffs) {
        v = -v;
    }
    // R_p is 0-homogeneous, so du = -u has zero slope.
    EXPECT_THROW(line_search(s, u, du, 3.0, 1e-3), SolverError);
}

TEST(Newton, PTwoFixedPoint)
{
    SolverSpaces spaces(interval(256));
    SolverConfig cfg;
    const auto init = initial_eigenpair(spaces, cfg);
    expect_valid(init);
    const auto r = newton_solve_fixed_p(spaces, 2.0, init, cfg);
    expect_valid(r);
    EXPECT_LE(r.newton_iters, 2);
    EXPECT_NEAR(r.lambda, init.lambda, 1e-9 * init.lambda);
}

TEST(Newton, TableOneAtP3)
{
    auto m = interval(2048);
    SolverSpaces spaces(m);
    SolverConfig cfg;
    const auto init = initial_eigenpair(spaces, cfg);
    const auto r = newton_solve_fixed_p(spaces, 3.0, init, cfg);
    expect_valid(r);
    EXPECT_LE(std::abs(r.lambda - 3.5360952470) / 3.5360952470, 3.5e-7);
}

TEST(Newton, RayleighQuotientDecreasesAndResolveIsCheap)
{
    auto m = interval(512);
    SolverSpaces spaces(m);
    SolverConfig cfg;
    auto cur = initial_eigenpair(spaces, cfg);
    for (double p : {3.0, 4.0, 5.0}) {
        const auto r = newton_solve_fixed_p(spaces, p, cur, cfg);
        expect_valid(r);
        ASSERT_GE(r.rayleigh_history.size(), 2u);
        for (std::size_t i = 1; i < r.rayleigh_history.size(); ++i) {
            EXPECT_LT(r.rayleigh_history[i], r.rayleigh_history[i - 1]) << "p = " << p << ", step " << i;
        }
        const auto again = newton_solve_fixed_p(spaces, p, r, cfg);
        EXPECT_TRUE(again.converged);
        EXPECT_LE(again.newton_iters, 2);
        cur = r;
    }
}

TEST(Newton, ScalingEquivariance)
{
    const auto base = build_disk_mesh(1.0, 2);
    SolverConfig cfg;
    SolverSpaces s1(std::make_shared<const Mesh>(base));
    const auto init = initial_eigenpair(s1, cfg);
    const double p = 3.0;
    const auto r1 = newton_solve_fixed_p(s1, p, init, cfg);
    ASSERT_TRUE(r1.converged);
    for (double alpha : {0.5, 3.0}) {
        SolverSpaces sa(std::make_shared<const Mesh>(scale_mesh(base, alpha)));
        EigenResult start = init;
        start.lambda = init.lambda / (alpha * alpha);
        const auto ra = newton_solve_fixed_p(sa, p, start, cfg);
        ASSERT_TRUE(ra.converged);
        EXPECT_LE(std::abs(std::pow(alpha, p) * ra.lambda - r1.lambda), 1e-6 * r1.lambda);
        for (std::size_t i = 0; i < base.num_vertices(); ++i) {
            EXPECT_NEAR(ra.u.coeffs[i], r1.u.coeffs[i], 1e-7);
        }
    }
}

TEST(Newton, FailureIsReportedNotThrown)
{
    SolverSpaces spaces(interval(128));
    SolverConfig cfg;
    cfg.max_newton_iters = 1;
    const auto init = initial_eigenpair(spaces, cfg);
    const auto r = newton_solve_fixed_p(spaces, 6.0, init, cfg);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.failure.empty());
    EXPECT_THROW(newton_solve_fixed_p(spaces, 1.5, init, cfg), SolverError);
}

TEST(Continuation, GridAndMonotonicity)
{
    SolverConfig cfg;
    cfg.p_max = 12.0;
    const auto c = continuation(interval(256), cfg);
    ASSERT_FALSE(c.truncated) << c.reason;
    ASSERT_EQ(c.results.size(), 11u);
    for (std::size_t i = 0; i < c.results.size(); ++i) {
        EXPECT_DOUBLE_EQ(c.results[i].p, 2.0 + double(i));
        expect_valid(c.results[i]);
        EXPECT_EQ(c.results[i].alpha, 1.0);
    }
    for (std::size_t i = 1; i < c.results.size(); ++i) {
        const auto& a = c.results[i - 1];
        const auto& b = c.results[i];
        EXPECT_GT(b.p * b.lambda_root(), a.p * a.lambda_root());
    }
}

TEST(Continuation, NonIntegerEndpointAndCheckpoints)
{
    SolverConfig cfg;
    cfg.p_max = 4.5;
    ContinuationOptions opts;
    opts.checkpoints = {2.25};
    const auto c = run_continuation(interval(128), cfg, opts);
    ASSERT_FALSE(c.truncated);
    std::vector<double> ps;
    for (const auto& r : c.results) {
        ps.push_back(r.p);
    }
    EXPECT_EQ(ps, (std::vector<double>{2.0, 2.25, 3.0, 4.0, 4.5}));
}

TEST(Continuation, TableOneAtP10)
{
    SolverConfig cfg;
    cfg.p_max = 10.0;
    const auto c = continuation(interval(2048), cfg);
    ASSERT_FALSE(c.truncated);
    const double exact = exact_1d_eigenvalue(10.0, -1.0, 1.0);
    EXPECT_LE(std::abs(c.results.back().lambda - exact) / exact, 1.9e-6);
}

TEST(Continuation, TruncatesWithReason)
{
    SolverConfig cfg;
    cfg.p_max = 6.0;
    cfg.max_newton_iters = 2;
    const auto c = continuation(interval(128), cfg);
    EXPECT_TRUE(c.truncated);
    EXPECT_FALSE(c.reason.empty());
    ASSERT_FALSE(c.results.empty());
    EXPECT_EQ(c.results.front().p, 2.0);
    for (const auto& r : c.results) {
        EXPECT_TRUE(r.converged);
    }
}

TEST(Continuation, RootGapFollowsLogPOverP)
{
    SolverConfig cfg;
    cfg.p_max = 100.0;
    const auto c = continuation(interval(512), cfg);
    ASSERT_FALSE(c.truncated) << c.reason;
    for (double p : {20.0, 50.0, 100.0}) {
        const auto* r = at_p(c, p);
        ASSERT_NE(r, nullptr);
        const double ratio = (r->lambda_root() - 1.0) / (std::log(p) / p);
        EXPECT_GE(ratio, 0.8) << "p = " << p;
        EXPECT_LE(ratio, 1.3) << "p = " << p;
    }
}

TEST(Rescaling, OptimallyScaledDomainIsUnchanged)
{
    SolverConfig cfg;
    cfg.p_max = 15.0;
    auto m = interval(256);
    const auto plain = continuation(m, cfg);
    const auto scaled = continuation_with_rescaling(m, cfg);
    ASSERT_EQ(plain.results.size(), scaled.results.size());
    for (std::size_t i = 0; i < plain.results.size(); ++i) {
        EXPECT_EQ(scaled.results[i].alpha, 1.0);
        EXPECT_EQ(scaled.results[i].lambda, plain.results[i].lambda);
    }
}

TEST(Rescaling, OriginalEigenvalueMatchesPlainRun)
{
    SolverConfig cfg;
    cfg.p_max = 6.0;
    auto m = std::make_shared<const Mesh>(build_disk_mesh(0.5, 2));
    const auto plain = continuation(m, cfg);
    const auto scaled = continuation_with_rescaling(m, cfg);
    ASSERT_FALSE(plain.truncated);
    ASSERT_FALSE(scaled.truncated);
    bool rescaled = false;
    for (double p : {3.0, 4.0, 5.0, 6.0}) {
        const auto* a = at_p(plain, p);
        const auto* b = at_p(scaled, p);
        ASSERT_TRUE(a && b);
        expect_valid(*b);
        rescaled = rescaled || b->alpha > 1.0;
        EXPECT_NEAR(b->lambda_original / a->lambda, 1.0, 1e-8) << "p = " << p;
    }
    EXPECT_TRUE(rescaled);
}

TEST(Rescaling, FixedAlpha)
{
    SolverConfig cfg;
    cfg.p_max = 4.0;
    auto m = std::make_shared<const Mesh>(build_disk_mesh(1.0, 2));
    ContinuationOptions opts;
    opts.rescale = RescaleMode::fixed;
    opts.fixed_alpha = 2.0;
    const auto fixed = run_continuation(m, cfg, opts);
    const auto plain = continuation(m, cfg);
    ASSERT_EQ(fixed.results.size(), plain.results.size());
    for (std::size_t i = 0; i < fixed.results.size(); ++i) {
        EXPECT_EQ(fixed.results[i].alpha, 2.0);
        EXPECT_NEAR(fixed.results[i].lambda_original / plain.results[i].lambda, 1.0, 1e-8);
    }
    opts.fixed_alpha = -1.0;
    EXPECT_THROW(run_continuation(m, cfg, opts), SolverError);
}
