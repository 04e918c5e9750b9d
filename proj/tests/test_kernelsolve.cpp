#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ebs/kernelsolve.hpp"
#include "ebs/parallel.hpp"

using namespace ebs;
using std::numbers::pi;

namespace {

GridSpec make_grid(Index nx, Index ny) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    return g;
}

GoursatProblem transport_problem(const GridSpec& g, double lambda, double mu) {
    ModelScaling s;
    s.lambda = lambda;
    s.mu = mu;
    GoursatProblem p;
    p.grid = g;
    p.speeds = scaled(pure_transport_model(), s);
    p.a = TriField(g.nx, g.ny);
    p.e = TriField(g.nx, g.ny);
    p.d = TriScalarField(g.nx);
    p.f = [g](double x, Index k) { return std::sin(3.0 * x) + g.y(k); };
    p.g = [](double, Index) { return 0.0; };
    return p;
}

}  // namespace

TEST_CASE("decoupled Goursat problem transports the diagonal datum") {
    const GridSpec g = make_grid(30, 4);
    const double lambda = 2.0, mu = 1.0;
    const GoursatSolution s = solve_goursat(transport_problem(g, lambda, mu));
    CHECK(s.iterations == 2);
    CHECK(s.G.values().cwiseAbs().maxCoeff() == 0.0);
    double err = 0.0;
    s.F.index().for_each([&](Index i, Index j) {
        const double launch = (lambda * g.x(i) + mu * g.x(j)) / (lambda + mu);
        for (Index k = 0; k < g.ny; ++k) err = std::max(err, std::abs(s.F(i, j, k) - (std::sin(3.0 * launch) + g.y(k))));
    });
    CHECK(err <= 1e-10);
}

TEST_CASE("zero data give the zero fixed point") {
    const GridSpec g = make_grid(20, 3);
    GoursatProblem p = transport_problem(g, 1.0, 1.0);
    p.f = [](double, Index) { return 0.0; };
    const GoursatSolution s = solve_goursat(p);
    CHECK(s.F.values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.G.values().cwiseAbs().maxCoeff() == 0.0);

    const KernelSolution k = solve_backstepping_kernels(pure_transport_model(), g);
    CHECK(k.k.values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(k.ktilde.values().cwiseAbs().maxCoeff() == 0.0);
    const KernelResidual r = kernel_pde_residual(k, sample(pure_transport_model(), g));
    CHECK(r.k_abs == 0.0);
    CHECK(r.ktilde_abs == 0.0);
}

TEST_CASE("toy kernels against the closed form") {
    const GridSpec g = make_grid(100, 61);
    const PlantModel model = toy_model();
    const SampledCoefficients c = sample(model, g);
    const KernelSolution sol = solve_backstepping_kernels(model, c);
    CHECK(sol.final_delta < 1e-10);

    const double kt = 35.0 / (2.0 * pi * pi);
    CHECK((sol.ktilde.values().array() / kt - 1.0).abs().maxCoeff() <= 0.02);
    const double k_mid = -8.75 * std::exp(17.5 / (pi * pi));
    CHECK(k_mid == doctest::Approx(-51.53).epsilon(1e-3));
    CHECK(sol.k(100, 50, 30) == doctest::Approx(k_mid).epsilon(0.02));

    const OracleError e = compare_with_analytic(sol, toy_analytic_kernels());
    CHECK(e.max_rel <= 0.02);
    CHECK(e.edge_abs <= 1e-3);

    SUBCASE("boundary identities") {
        CHECK(diagonal_boundary_residual(sol, c) <= 1e-12);
        CHECK(edge_boundary_residual(sol, c) <= 10.0 * 1e-10);
        for (Index i = 0; i <= g.nx; ++i)
            for (Index k = 0; k < g.ny; ++k)
                CHECK(sol.k(i, i, k) == -c.xi(i, k) / (c.lambda(i, k) + c.mu[i]));
    }
    SUBCASE("gain row is the x = 1 slice") {
        const GainRow gain = sol.gain_row();
        CHECK(gain.k.rows() == 101);
        CHECK(gain.k(37, 5) == sol.k(100, 37, 5));
        CHECK(gain.ktilde[37] == sol.ktilde(100, 37));
    }
    SUBCASE("residual bounded by 10 h") {
        const KernelResidual r = kernel_pde_residual(sol, c);
        CHECK(r.k <= 10.0 / g.nx);
        CHECK(r.ktilde <= 10.0 / g.nx);
    }
}

TEST_CASE("increments decay factorially") {
    const GridSpec g = make_grid(50, 31);
    const PlantModel model = toy_model();
    const SampledCoefficients c = sample(model, g);
    const KernelSolution sol = solve_backstepping_kernels(model, c);
    const auto& d = sol.delta_history;
    REQUIRE(d.size() > 10);
    // K from coefficient bounds: longest characteristic time times the largest coupling
    const double coupling = c.xi.cwiseAbs().maxCoeff() + c.w.cwiseAbs().maxCoeff() +
                            c.theta.back().cwiseAbs().maxCoeff() + c.mu_x.cwiseAbs().maxCoeff();
    const double K = coupling / c.mu_lower_bound;
    for (std::size_t n = 5; n + 1 < d.size(); ++n) CHECK(d[n + 1] / d[n] * static_cast<double>(n + 1) <= K);
    for (std::size_t n = 12; n + 1 < d.size(); ++n) CHECK(d[n + 1] / d[n] <= 0.2);
}

TEST_CASE("analytic kernels have O(h) residual") {
    const PlantModel model = toy_model();
    auto residual = [&](Index nx) {
        const GridSpec g = make_grid(nx, 31);
        const KernelResidual r = kernel_pde_residual(sample_kernels(toy_analytic_kernels(), g), sample(model, g));
        return std::max(r.k, r.ktilde);
    };
    const double r1 = residual(50), r2 = residual(100);
    CHECK(r2 <= 10.0 / 100);
    CHECK(r2 / r1 == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("nonconvergence is reported with the last increment") {
    GoursatOptions o;
    o.max_iter = 3;
    try {
        solve_backstepping_kernels(toy_model(), make_grid(20, 11), o);
        FAIL("expected NonconvergenceError");
    } catch (const NonconvergenceError& e) {
        CHECK(e.final_delta > 1e-10);
        CHECK(e.iterations == 3);
    }
}

TEST_CASE("B is linear") {
    const GridSpec g = make_grid(10, 9);
    const PlantModel model = toy_model();
    const GoursatProblem p = backstepping_problem(model, sample(model, g));
    REQUIRE(p.b.size() == 11);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 10; ++n) {
        const Eigen::VectorXd a = Eigen::VectorXd::NullaryExpr(9, [&] { return u(rng); });
        const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(9, [&] { return u(rng); });
        const double al = u(rng), be = u(rng);
        const Eigen::MatrixXd& B = p.b[7];
        CHECK((B * (al * a + be * b) - (al * (B * a) + be * (B * b))).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("solution does not depend on the thread count") {
    const GridSpec g = make_grid(40, 21);
    const PlantModel model = toy_model();
    set_thread_count(1);
    const KernelSolution a = solve_backstepping_kernels(model, g);
    set_thread_count(3);
    const KernelSolution b = solve_backstepping_kernels(model, g);
    set_thread_count(0);
    CHECK(a.k.values() == b.k.values());
    CHECK(a.ktilde.values() == b.ktilde.values());
    CHECK(a.delta_history == b.delta_history);
}
