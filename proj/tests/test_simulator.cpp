#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ebs/simulator.hpp"

using namespace ebs;
using std::numbers::pi;

namespace {

GridSpec make_grid(Index nx, Index ny, double dt = 0.0, double t_final = 1.0) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.dt = dt > 0.0 ? dt : 1.0 / nx;
    g.t_final = t_final;
    return g;
}

EnsembleState constant_state(const GridSpec& g, double u, double v) {
    return {RowMatrix::Constant(g.nx + 1, g.ny, u), Eigen::VectorXd::Constant(g.nx + 1, v), 0.0};
}

}  // namespace

TEST_CASE("zero state stays zero") {
    const GridSpec g = make_grid(40, 5);
    const SampledCoefficients c = sample(toy_model(), g);
    const EnsembleState s = step_plant(EnsembleState::zero(g), c, 0.0, g.dt);
    CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.t == doctest::Approx(g.dt));
}

TEST_CASE("pure transport moves a Gaussian at unit speed") {
    const GridSpec g = make_grid(200, 3, 0.005);
    const SampledCoefficients c = sample(pure_transport_model(), g);
    InitialCondition ic;
    ic.kind = "gaussian";
    ic.amplitude_u = 1.0;
    ic.amplitude_v = 0.0;
    ic.center = 0.2;
    ic.width = 0.05;
    EnsembleState s = initial_state(g, ic);
    for (int n = 0; n < 100; ++n) s = step_plant(s, c, 0.0, g.dt);
    Index peak;
    s.u.col(1).maxCoeff(&peak);
    CHECK(std::abs(g.x(peak) - 0.7) <= g.hx() + 1e-12);
    CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("control value of the toy gain") {
    const GridSpec g = make_grid(200, 121);
    const KernelSolution k = sample_kernels(toy_analytic_kernels(), g);
    const GainRow gain = k.gain_row();

    EnsembleState s = EnsembleState::zero(g);
    for (Index j = 0; j < g.ny; ++j) s.u.col(j).setConstant(g.y(j) * (g.y(j) - 1.0));
    const double want = pi * pi / 30.0 * (std::exp(35.0 / (pi * pi)) - 1.0);
    CHECK(control_value(s, gain, g) == doctest::Approx(want).epsilon(1e-3));

    const EnsembleState v1 = constant_state(g, 0.0, 1.0);
    CHECK(control_value(v1, gain, g) == doctest::Approx(1.773122).epsilon(1e-5));
    CHECK(control_value(EnsembleState::zero(g), gain, g) == 0.0);
}

TEST_CASE("zero initial data give zero norms") {
    const GridSpec g = make_grid(30, 5, 1.0 / 30, 0.5);
    InitialCondition ic;
    ic.kind = "zero";
    const SimulationRecord r = simulate(toy_model(), g, nullptr, Mode::open, initial_state(g, ic), {});
    for (double n : r.joint_norms) CHECK(n == 0.0);
    for (double u : r.control) CHECK(u == 0.0);
    CHECK_FALSE(r.decay_rate.has_value());
    CHECK(r.lyapunov.empty());
}

TEST_CASE("transform with zero kernels is the identity") {
    const GridSpec g = make_grid(20, 4);
    const KernelSolution zero = solve_backstepping_kernels(pure_transport_model(), g);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    EnsembleState s{RowMatrix::NullaryExpr(21, 4, [&] { return u(rng); }),
                    Eigen::VectorXd::NullaryExpr(21, [&] { return u(rng); }), 0.0};
    const EnsembleState ab = forward_transform(s, zero);
    CHECK(ab.u == s.u);
    CHECK(ab.v == s.v);
}

TEST_CASE("transform leaves the value at x = 0 alone") {
    const GridSpec g = make_grid(40, 11);
    const KernelSolution k = sample_kernels(toy_analytic_kernels(), g);
    const EnsembleState s = initial_state(g, InitialCondition{"sin-cos", 1.0, 0.7, 0.3, 0.1});
    const EnsembleState ab = forward_transform(s, k);
    CHECK(ab.v[0] == s.v[0]);
    CHECK(ab.u == s.u);
}

TEST_CASE("Lyapunov functional") {
    const GridSpec g = make_grid(200, 5);
    const SampledCoefficients c = sample(toy_model(), g);
    CHECK(lyapunov_value(EnsembleState::zero(g), c, 0.3, 2.0) == 0.0);
    CHECK(lyapunov_value(constant_state(g, 0.0, 1.0), c, 0.3, 2.0) == doctest::Approx(1.5).epsilon(1e-10));
    const double p = 0.3, delta = 2.0;
    CHECK(lyapunov_value(constant_state(g, 1.0, 0.0), c, p, delta) ==
          doctest::Approx(p * (1.0 - std::exp(-delta)) / delta).epsilon(1e-6));
}

TEST_CASE("joint norm") {
    const GridSpec g = make_grid(20, 5);
    CHECK(joint_norm(constant_state(g, 1.0, 1.0), g) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    EnsembleState s = EnsembleState::zero(g);
    for (Index i = 0; i <= g.nx; ++i) s.v[i] = g.x(i);
    // trapezoid in x: ∫x² picks up h²/6
    const double h = g.hx();
    CHECK(joint_norm(s, g) == doctest::Approx(std::sqrt(1.0 / 3.0 + h * h / 6.0)).epsilon(1e-12));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 10; ++n) {
        const EnsembleState r{RowMatrix::NullaryExpr(21, 5, [&] { return u(rng); }),
                              Eigen::VectorXd::NullaryExpr(21, [&] { return u(rng); }), 0.0};
        const double j = joint_norm(r, g), a = u_norm(r, g), b = v_norm(r, g);
        CHECK(std::abs(j * j - a * a - b * b) <= 1e-12);
    }
}

TEST_CASE("CFL guard") {
    const GridSpec g = make_grid(100, 5);
    const SampledCoefficients c = sample(toy_model(), g);
    CHECK(courant_number(c, 0.01) == doctest::Approx(1.0));
    CHECK_NOTHROW(check_cfl(c, 0.01));
    CHECK_THROWS_AS(check_cfl(c, 0.0101), ConfigError);
    CHECK_THROWS_AS(step_plant(EnsembleState::zero(g), c, 0.0, 0.02), ConfigError);
}

TEST_CASE("pure transport never increases the norm") {
    const GridSpec g = make_grid(80, 7, 0.01, 2.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        const EnsembleState s{RowMatrix::NullaryExpr(81, 7, [&] { return u(rng); }),
                              Eigen::VectorXd::NullaryExpr(81, [&] { return u(rng); }), 0.0};
        const SimulationRecord r = simulate(pure_transport_model(), g, nullptr, Mode::open, s, {});
        // q = 0 feeds nothing back, so after the first step the norm can only shrink
        for (std::size_t n = 2; n < r.joint_norms.size(); ++n) CHECK(r.joint_norms[n] <= r.joint_norms[n - 1] + 1e-14);
    }
}

TEST_CASE("feedback turns growth into decay") {
    // Courant number 0.8; at exactly 1 the undamped odd-even mode destabilises the closed loop
    const GridSpec g = make_grid(100, 31, 0.008, 5.0);
    const PlantModel m = toy_model();
    const KernelSolution k = solve_backstepping_kernels(m, g);
    const EnsembleState init = initial_state(g, {});
    const SimulationRecord open = simulate(m, g, &k, Mode::open, init, {});
    const SimulationRecord closed = simulate(m, g, &k, Mode::closed, init, {});
    REQUIRE(open.decay_rate.has_value());
    REQUIRE(closed.decay_rate.has_value());
    CHECK(*open.decay_rate > 0.0);
    CHECK(*closed.decay_rate < 0.0);
    CHECK(closed.joint_norms.back() < 1e-2 * open.joint_norms.back());
}

TEST_CASE("non-finite states raise DivergenceError") {
    const GridSpec g = make_grid(10, 3);
    const SampledCoefficients c = sample(toy_model(), g);
    EnsembleState s = EnsembleState::zero(g);
    s.u(4, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(step_plant(s, c, 0.0, g.dt), DivergenceError);

    ModelScaling huge;
    huge.xi = 1e300;
    CHECK_THROWS_AS(simulate(scaled(toy_model(), huge), g, nullptr, Mode::open, initial_state(g, {}), {}),
                    DivergenceError);
}

TEST_CASE("target system transports beta out at speed mu") {
    const GridSpec g = make_grid(100, 5, 0.01);
    const PlantModel m = pure_transport_model();
    const SampledCoefficients c = sample(m, g);
    const KernelSolution k = solve_backstepping_kernels(m, g);
    const TargetSystem target = make_target_system(k, c);
    CHECK(step_target(EnsembleState::zero(g), c, target, g.dt).v.cwiseAbs().maxCoeff() == 0.0);

    EnsembleState ab = EnsembleState::zero(g);
    for (Index i = 0; i <= g.nx; ++i) ab.v[i] = std::sin(pi * g.x(i));
    for (int n = 0; n < 30; ++n) ab = step_target(ab, c, target, g.dt);
    // unit Courant number: exact shift by 30 cells
    for (Index i = 0; i + 30 < g.nx; ++i) CHECK(ab.v[i] == doctest::Approx(std::sin(pi * g.x(i + 30))));
    for (Index i = g.nx - 30; i <= g.nx; ++i) CHECK(std::abs(ab.v[i]) <= 1e-15);
}

TEST_CASE("modes and slope fit") {
    CHECK(parse_mode("closed") == Mode::closed);
    CHECK(to_string(Mode::target) == "target");
    CHECK_THROWS_AS(parse_mode("verify"), ConfigError);
    std::vector<double> t, n;
    for (int k = 0; k <= 50; ++k) {
        t.push_back(0.1 * k);
        n.push_back(3.0 * std::exp(-0.7 * t.back()));
    }
    CHECK(*fit_log_slope(t, n, 2.0, 5.0) == doctest::Approx(-0.7).epsilon(1e-10));
    CHECK_FALSE(fit_log_slope(t, std::vector<double>(51, 0.0), 0.0, 5.0).has_value());
}
