#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <ostream>

#include "ebs/characteristics.hpp"
#include "ebs/cli.hpp"
#include "ebs/io.hpp"

namespace ebs {

namespace {

using json = nlohmann::ordered_json;

constexpr double pi = std::numbers::pi;

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool is_plain_toy(const RunConfig& c) {
    const ModelScaling& s = c.scaling;
    return c.model == "toy" && s.lambda == 1.0 && s.mu == 1.0 && s.theta == 1.0 && s.w == 1.0 && s.xi == 1.0 &&
           s.q == 1.0;
}

GoursatOptions kernel_options(const RunConfig& c) {
    GoursatOptions o;
    o.tol = c.kernel_tol;
    o.max_iter = c.kernel_max_iter;
    return o;
}

KernelSolution obtain_kernels(const RunConfig& c, const PlantModel& model, const SampledCoefficients& coeff,
                              std::ostream& log) {
    if (!c.kernels_file.empty()) {
        fmt::print(log, "reading kernels from {}\n", c.kernels_file.string());
        return read_kernels_csv(c.kernels_file, c.grid);
    }
    fmt::print(log, "solving kernels on {}x{} nodes\n", c.grid.nx, c.grid.ny);
    KernelSolution sol = solve_backstepping_kernels(model, coeff, kernel_options(c));
    fmt::print(log, "kernels converged in {} sweeps, delta {:.3g}\n", sol.iterations, sol.final_delta);
    return sol;
}

json residual_json(const KernelSolution& sol, const SampledCoefficients& coeff) {
    const KernelResidual r = kernel_pde_residual(sol, coeff);
    return json{{"diagonal", diagonal_boundary_residual(sol, coeff)},
                {"edge", edge_boundary_residual(sol, coeff)},
                {"pde_k", r.k},
                {"pde_ktilde", r.ktilde},
                {"pde_k_abs", r.k_abs},
                {"pde_ktilde_abs", r.ktilde_abs}};
}

VerifyCheck check(std::string name, double value, double limit, std::string detail = {}) {
    return VerifyCheck{std::move(name), value <= limit, value, limit, std::move(detail)};
}

}  // namespace

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

EnsembleState random_smooth_state(const GridSpec& grid, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0), phase(0.0, 2.0 * pi);
    EnsembleState s = EnsembleState::zero(grid);
    const Eigen::VectorXd x = grid.x_nodes(), y = grid.y_nodes();
    for (int a = 1; a <= 3; ++a)
        for (int b = 0; b <= 2; ++b) {
            const double c = coef(rng) / (a + b), px = phase(rng), py = phase(rng);
            const Eigen::VectorXd fx = (a * pi * x.array() + px).sin().matrix();
            const Eigen::RowVectorXd fy = (b * pi * y.array() + py).cos().matrix().transpose();
            s.u.noalias() += c * fx * fy;
        }
    for (int a = 0; a <= 3; ++a) {
        const double c = coef(rng) / (1 + a), px = phase(rng);
        s.v += c * (a * pi * x.array() + px).cos().matrix();
    }
    return s;
}

VerifyReport run_verification(const RunConfig& config, std::ostream& log) {
    config.grid.validate();
    const GridSpec& grid = config.grid;
    const PlantModel model = config_model(config);
    const SampledCoefficients coeff = sample(model, grid);
    std::mt19937_64 rng(config.seed);
    VerifyReport rep;
    auto add = [&](VerifyCheck c) {
        fmt::print(log, "{:<30} {}  value {:.4g}  limit {:.4g}{}\n", c.name, c.passed ? "pass" : "FAIL", c.value,
                   c.limit, c.detail.empty() ? "" : "  (" + c.detail + ")");
        rep.checks.push_back(std::move(c));
    };

    const double courant = courant_number(coeff, grid.dt);
    add(check("cfl", courant, 1.0 + 1e-12, "dt*max_speed*nx"));

    {
        ModelScaling s;
        s.lambda = 1.5;
        s.mu = 0.75;
        const PlantModel flat = scaled(pure_transport_model(), s);
        const CharacteristicFlows flows(flat, grid);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double err = 0.0;
        for (int n = 0; n < 1000; ++n) {
            const double x = u01(rng), xi = x * u01(rng), y = u01(rng);
            const FlowCrossing f = flows.f_crossing(x, xi, 0);
            const FlowCrossing g = flows.g_crossing(x, xi);
            err = std::max({err, std::abs(f.s_end - (x - xi) / 2.25), std::abs(g.s_end - xi / 0.75)});
            if (n % 50 == 0) {
                const CharCrossing t = trace_f_curve(flat, x, xi, y, 1e-3);
                err = std::max(err, std::abs(t.s_end - (x - xi) / 2.25));
            }
        }
        add(check("characteristics_constant_speed", err, 1e-8, "lambda = 1.5, mu = 0.75"));

        PlantModel ramp = pure_transport_model();
        ramp.mu = [](double x) { return 1.0 + x; };
        const CharacteristicFlows ramp_flows(ramp, grid);
        add(check("characteristics_ramp_speed", std::abs(ramp_flows.g_crossing(1.0, 0.5).s_end - std::log(1.5)), 1e-8,
                  "mu = 1 + x, s_F(1, 0.5) = ln 1.5"));
    }

    {
        // quadrature error is O(h^4); below 200 cells it would dominate the check
        const Index n = std::max<Index>(grid.nx, 200);
        const double h = 1.0 / static_cast<double>(n);
        const ResolventKernel r = resolvent(TriScalarField(n, 1.0));
        double err = 0.0;
        r.values.index().for_each(
            [&](Index i, Index j) { err = std::max(err, std::abs(r.values(i, j) - std::exp(h * static_cast<double>(i - j)))); });
        add(check("volterra_resolvent", err, 1e-6, "unit kernel against exp(x - xi)"));
    }

    std::optional<KernelSolution> kernels;
    try {
        kernels = solve_backstepping_kernels(model, coeff, kernel_options(config));
        add(check("kernel_convergence", kernels->final_delta, config.kernel_tol,
                  fmt::format("{} sweeps", kernels->iterations)));
    } catch (const NonconvergenceError& e) {
        add(VerifyCheck{"kernel_convergence", false, e.final_delta, config.kernel_tol, e.what()});
    }
    if (kernels) {
        const double h_limit = 10.0 / static_cast<double>(grid.nx);
        add(check("kernel_boundary_diagonal", diagonal_boundary_residual(*kernels, coeff), 1e-12));
        add(check("kernel_boundary_edge", edge_boundary_residual(*kernels, coeff), 1e-6));
        const KernelResidual res = kernel_pde_residual(*kernels, coeff);
        add(check("kernel_pde_residual", std::max(res.k, res.ktilde), h_limit, "relative, limit 10/nx"));
        if (is_plain_toy(config)) {
            const AnalyticKernels exact = toy_analytic_kernels();
            const OracleError e = compare_with_analytic(*kernels, exact);
            add(check("kernel_analytic_error", e.max_rel, 0.02, fmt::format("zero lines abs {:.2g}", e.edge_abs)));
            const KernelResidual ar = kernel_pde_residual(sample_kernels(exact, grid), coeff);
            add(check("analytic_kernel_residual", std::max(ar.k, ar.ktilde), h_limit, "closed-form pair as input"));
        }

        const InverseKernels inv = inverse_transform_kernels(kernels->k, kernels->ktilde);
        double worst = 0.0;
        for (int n = 0; n < 20; ++n) {
            const EnsembleState s = random_smooth_state(grid, rng);
            const EnsembleState back = inverse_transform(forward_transform(s, *kernels), inv);
            worst = std::max(worst, (back.v - s.v).cwiseAbs().maxCoeff() / s.v.cwiseAbs().maxCoeff());
        }
        add(check("transform_round_trip", worst, 1e-3, "20 random smooth states"));

        if (courant <= 1.0 + 1e-12) {
            const SimulationRecord rec =
                simulate(model, grid, &*kernels, Mode::target, initial_state(grid, config.initial), {});
            const LyapunovParameters& lp = *rec.lyapunov_params;
            double growth = 0.0;
            int outside = 0;
            for (std::size_t n = 0; n < rec.lyapunov.size(); ++n) {
                const double V = rec.lyapunov[n], n2 = rec.joint_norms[n] * rec.joint_norms[n];
                if (!(lp.m * n2 <= V && V <= lp.M * n2)) ++outside;
                if (n >= 1 && n + 1 < rec.lyapunov.size()) {
                    const double next = rec.lyapunov[n + 1];
                    if (V > 0.0)
                        growth = std::max(growth, next / V - 1.0);
                    else if (next > 0.0)
                        growth = std::numeric_limits<double>::infinity();
                }
            }
            add(check("lyapunov_monotone", growth, 1e-3, fmt::format("p = {:.4g}, delta = {:.4g}", lp.p, lp.delta)));
            add(check("lyapunov_norm_equivalence", outside, 0.0,
                      fmt::format("m = {:.4g}, M = {:.4g}", lp.m, lp.M)));
        } else {
            add(VerifyCheck{"lyapunov_monotone", false, 0.0, 1e-3, "not run: CFL violated"});
        }
    }
    return rep;
}

int cmd_kernels(const RunConfig& config, std::ostream& log) {
    precheck(config);
    std::filesystem::create_directories(config.output_dir);
    const PlantModel model = config_model(config);
    const SampledCoefficients coeff = sample(model, config.grid);
    KernelSolution sol;
    try {
        sol = solve_backstepping_kernels(model, coeff, kernel_options(config));
    } catch (const NonconvergenceError& e) {
        write_json(config.output_dir / "kernels.json",
                   json{{"converged", false}, {"iterations", e.iterations}, {"final_delta", e.final_delta}});
        throw;
    }
    fmt::print(log, "kernels converged in {} sweeps, delta {:.3g}\n", sol.iterations, sol.final_delta);
    write_kernels_csv(config.output_dir / "kernels.csv", sol);

    json j{{"converged", true},
           {"iterations", sol.iterations},
           {"final_delta", sol.final_delta},
           {"residuals", residual_json(sol, coeff)},
           {"analytic_max_rel_error", nullptr}};
    if (is_plain_toy(config)) {
        const OracleError e = compare_with_analytic(sol, toy_analytic_kernels());
        j["analytic_max_rel_error"] = e.max_rel;
        j["analytic_zero_line_abs_error"] = e.edge_abs;
        fmt::print(log, "max relative error against the closed form: {:.4g}\n", e.max_rel);
    }
    write_json(config.output_dir / "kernels.json", j);
    return exit_ok;
}

int cmd_simulate(const RunConfig& config, std::ostream& log) {
    if (config.mode == "verify") return cmd_verify(config, log);
    precheck(config);
    std::filesystem::create_directories(config.output_dir);
    const Mode mode = parse_mode(config.mode);
    const PlantModel model = config_model(config);
    std::optional<KernelSolution> kernels;
    if (mode != Mode::open) kernels = obtain_kernels(config, model, sample(model, config.grid), log);

    fmt::print(log, "simulating {} loop to t = {}\n", to_string(mode), config.grid.t_final);
    const EnsembleState init = initial_state(config.grid, config.initial);
    const SimulationRecord rec =
        simulate(model, config.grid, kernels ? &*kernels : nullptr, mode, init, config.snapshot_times);

    write_timeseries_csv(config.output_dir / "timeseries.csv", rec);
    for (const auto& [t, state] : rec.snapshots)
        write_snapshot_csv(config.output_dir / snapshot_filename(t), state, config.grid);

    double max_abs_u = 0.0;
    for (double u : rec.control) max_abs_u = std::max(max_abs_u, std::abs(u));
    json j{{"mode", to_string(mode)},
           {"decay_rate", optional_real(rec.decay_rate)},
           {"initial_norm", rec.joint_norms.front()},
           {"max_norm", *std::max_element(rec.joint_norms.begin(), rec.joint_norms.end())},
           {"final_norm", rec.joint_norms.back()},
           {"max_abs_U", max_abs_u}};
    if (rec.lyapunov_params) {
        const LyapunovParameters& lp = *rec.lyapunov_params;
        j["lyapunov"] = json{{"p", lp.p}, {"delta", lp.delta}, {"m", lp.m}, {"M", lp.M}};
    }
    write_json(config.output_dir / "summary.json", j);
    fmt::print(log, "final norm {:.4g}, max norm {:.4g}\n", rec.joint_norms.back(), j["max_norm"].get<double>());
    return exit_ok;
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
    std::filesystem::create_directories(config.output_dir);
    const VerifyReport rep = run_verification(config, log);
    json checks = json::array();
    for (const VerifyCheck& c : rep.checks)
        checks.push_back(
            json{{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"limit", c.limit}, {"detail", c.detail}});
    write_json(config.output_dir / "verify.json", json{{"passed", rep.passed()}, {"checks", checks}});
    return rep.passed() ? exit_ok : exit_verify;
}

int run_command(std::string_view command, const RunConfig& config, std::ostream& log) {
    try {
        if (command == "kernels") return cmd_kernels(config, log);
        if (command == "simulate") return cmd_simulate(config, log);
        if (command == "verify") return cmd_verify(config, log);
        throw ConfigError("unknown command '" + std::string(command) + "'");
    } catch (const NonconvergenceError& e) {
        fmt::print(log, "error: {} (delta {:.3g})\n", e.what(), e.final_delta);
        return exit_nonconvergence;
    } catch (const DivergenceError& e) {
        fmt::print(log, "error: {} (last finite t = {})\n", e.what(), e.t);
        return exit_divergence;
    } catch (const ConfigError& e) {
        fmt::print(log, "error: {}\n", e.what());
        return exit_bad_config;
    } catch (const DimensionError& e) {
        fmt::print(log, "error: {}\n", e.what());
        return exit_bad_config;
    } catch (const DomainError& e) {
        fmt::print(log, "error: {}\n", e.what());
        return exit_bad_config;
    } catch (const std::filesystem::filesystem_error& e) {
        fmt::print(log, "error: {}\n", e.what());
        return exit_bad_config;
    }
}

}  // namespace ebs
