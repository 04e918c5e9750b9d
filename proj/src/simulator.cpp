#include "ebs/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "ebs/parallel.hpp"

namespace ebs {

namespace {

constexpr double pi = std::numbers::pi;

void check_shape(const EnsembleState& s, const GridSpec& grid) {
    if (s.u.rows() != grid.nx + 1 || s.u.cols() != grid.ny || s.v.size() != grid.nx + 1)
        throw DimensionError("state does not match the grid");
}

RowMatrix weighted_rows(const RowMatrix& u, const Eigen::VectorXd& wy) {
    return (u.array().rowwise() * wy.transpose().array()).matrix();
}

// P_i = ∫₀^{x_i} ⟨k[x_i,ξ], a(ξ)⟩ dξ with wa = a already multiplied by the y-weights.
Eigen::VectorXd partial_inner(const TriField& k, const RowMatrix& wa, const SegmentRule& rule) {
    const Index nx = k.nx();
    Eigen::VectorXd out(nx + 1);
    for (Index i = 0; i <= nx; ++i) {
        const auto block = k.values().middleRows(TriangularIndex::offset(i, 0), i + 1);
        const Eigen::VectorXd dots = (block.array() * wa.topRows(i + 1).array()).rowwise().sum();
        out[i] = rule.weights(i).dot(dots);
    }
    return out;
}

Eigen::VectorXd partial_scalar(const TriScalarField& kt, const Eigen::VectorXd& v, const SegmentRule& rule) {
    const Index nx = kt.nx();
    Eigen::VectorXd out(nx + 1);
    for (Index i = 0; i <= nx; ++i) out[i] = rule.weights(i).dot(kt.row(i).cwiseProduct(v.head(i + 1)));
    return out;
}

void add_theta(RowMatrix& src, const RowMatrix& wu, const SampledCoefficients& c) {
    if (c.theta_zero) return;
    parallel_for(src.rows(), [&](Index i) { src.row(i).noalias() += wu.row(i) * c.theta[i].transpose(); });
}

void require_finite(const EnsembleState& s, double t_last) {
    if (!s.u.allFinite() || !s.v.allFinite())
        throw DivergenceError(fmt::format("state became non-finite after t = {}", t_last), t_last);
}

}  // namespace

EnsembleState EnsembleState::zero(const GridSpec& grid) {
    return {RowMatrix::Zero(grid.nx + 1, grid.ny), Eigen::VectorXd::Zero(grid.nx + 1), 0.0};
}

EnsembleState initial_state(const GridSpec& grid, const InitialCondition& ic) {
    EnsembleState s = EnsembleState::zero(grid);
    for (Index i = 0; i <= grid.nx; ++i) {
        const double x = grid.x(i);
        for (Index j = 0; j < grid.ny; ++j) {
            const double y = grid.y(j);
            double value;
            if (ic.kind == "sin-cos")
                value = std::sin(pi * x) * std::cos(2.0 * pi * y);
            else if (ic.kind == "sin-odd")
                value = (y - 0.5) * std::sin(pi * x);
            else if (ic.kind == "gaussian")
                value = std::exp(-std::pow((x - ic.center) / ic.width, 2));
            else if (ic.kind == "zero")
                value = 0.0;
            else
                throw ConfigError("unknown initial condition '" + ic.kind + "'");
            s.u(i, j) = ic.amplitude_u * value;
        }
        double profile = 0.0;
        if (ic.kind == "sin-cos" || ic.kind == "sin-odd")
            profile = std::sin(pi * x);
        else if (ic.kind == "gaussian")
            profile = std::exp(-std::pow((x - ic.center) / ic.width, 2));
        s.v[i] = ic.amplitude_v * profile;
    }
    return s;
}

double courant_number(const SampledCoefficients& c, double dt) {
    return dt * c.max_speed * static_cast<double>(c.grid.nx);
}

void check_cfl(const SampledCoefficients& c, double dt) {
    const double nu = courant_number(c, dt);
    if (!(nu <= 1.0 + 1e-12))
        throw ConfigError(fmt::format("CFL violated: dt*max_speed*nx = {:.6g} > 1", nu));
}

EnsembleState step_plant(const EnsembleState& s, const SampledCoefficients& c, double boundary_v1, double dt) {
    const GridSpec& grid = c.grid;
    check_shape(s, grid);
    check_cfl(c, dt);
    const Index nx = grid.nx;
    const double r = dt / grid.hx();

    const RowMatrix wu = weighted_rows(s.u, c.y_weights);
    RowMatrix src = (c.w.array().colwise() * s.v.array()).matrix();
    add_theta(src, wu, c);
    const Eigen::VectorXd src_v = (c.xi.array() * wu.array()).rowwise().sum().matrix();

    EnsembleState out;
    out.t = s.t + dt;
    out.v.resize(nx + 1);
    out.v.head(nx) = s.v.head(nx) + r * c.mu.head(nx).cwiseProduct(s.v.tail(nx) - s.v.head(nx)) + dt * src_v.head(nx);
    out.v[nx] = boundary_v1;

    out.u.resize(nx + 1, grid.ny);
    out.u.bottomRows(nx) =
        s.u.bottomRows(nx) -
        r * (c.lambda.bottomRows(nx).array() * (s.u.bottomRows(nx) - s.u.topRows(nx)).array()).matrix() +
        dt * src.bottomRows(nx);
    out.u.row(0) = c.q.transpose() * out.v[0];
    require_finite(out, s.t);
    return out;
}

double control_value(const EnsembleState& s, const GainRow& gain, const GridSpec& grid) {
    check_shape(s, grid);
    const Eigen::VectorXd w = newton_cotes_weights(grid.nx, grid.hx());
    const Eigen::VectorXd inner =
        (gain.k.array() * weighted_rows(s.u, grid.y_weights()).array()).rowwise().sum().matrix() +
        gain.ktilde.cwiseProduct(s.v);
    return w.dot(inner);
}

EnsembleState forward_transform(const EnsembleState& s, const KernelSolution& kernels) {
    const GridSpec& grid = kernels.grid;
    check_shape(s, grid);
    const SegmentRule rule(grid.nx);
    EnsembleState out{s.u, s.v, s.t};
    out.v -= partial_inner(kernels.k, weighted_rows(s.u, grid.y_weights()), rule);
    out.v -= partial_scalar(kernels.ktilde, s.v, rule);
    return out;
}

EnsembleState inverse_transform(const EnsembleState& ab, const InverseKernels& inv) {
    const Index nx = inv.ltilde.nx();
    GridSpec grid;
    grid.nx = nx;
    grid.ny = inv.l.ny();
    check_shape(ab, grid);
    const SegmentRule rule(nx);
    EnsembleState out{ab.u, ab.v, ab.t};
    out.v += partial_inner(inv.l, weighted_rows(ab.u, grid.y_weights()), rule);
    out.v += partial_scalar(inv.ltilde, ab.v, rule);
    return out;
}

TargetSystem make_target_system(const KernelSolution& kernels, const SampledCoefficients& coeff, double tol) {
    return TargetSystem{kernels, solve_kappa(coeff.w, kernels.ktilde, tol)};
}

RowMatrix target_sources(const EnsembleState& ab, const SampledCoefficients& c, const TargetSystem& target) {
    const GridSpec& grid = c.grid;
    check_shape(ab, grid);
    const Index nx = grid.nx;
    const SegmentRule rule(nx);
    const RowMatrix wa = weighted_rows(ab.u, c.y_weights);

    // ∫₀ˣ C{α} = W[x] P(x) + ∫₀ˣ κ[x,s] P(s) ds with P(s) = ∫₀^s ⟨k[s,ξ], α(ξ)⟩ dξ
    const Eigen::VectorXd P = partial_inner(target.kernels.k, wa, rule);
    const Eigen::VectorXd z = ab.v + P;
    RowMatrix src = (c.w.array().colwise() * z.array()).matrix();
    parallel_for(nx + 1, [&](Index i) {
        const auto block = target.kappa.values().middleRows(TriangularIndex::offset(i, 0), i + 1);
        src.row(i).noalias() += rule.weights(i).cwiseProduct(z.head(i + 1)).transpose() * block;
    });
    add_theta(src, wa, c);
    return src;
}

EnsembleState step_target(const EnsembleState& ab, const SampledCoefficients& c, const TargetSystem& target,
                          double dt) {
    const GridSpec& grid = c.grid;
    check_shape(ab, grid);
    check_cfl(c, dt);
    const Index nx = grid.nx;
    const double r = dt / grid.hx();
    const RowMatrix src = target_sources(ab, c, target);

    EnsembleState out;
    out.t = ab.t + dt;
    out.v.resize(nx + 1);
    out.v.head(nx) = ab.v.head(nx) + r * c.mu.head(nx).cwiseProduct(ab.v.tail(nx) - ab.v.head(nx));
    out.v[nx] = 0.0;
    out.u.resize(nx + 1, grid.ny);
    out.u.bottomRows(nx) =
        ab.u.bottomRows(nx) -
        r * (c.lambda.bottomRows(nx).array() * (ab.u.bottomRows(nx) - ab.u.topRows(nx)).array()).matrix() +
        dt * src.bottomRows(nx);
    out.u.row(0) = c.q.transpose() * out.v[0];
    require_finite(out, ab.t);
    return out;
}

double u_norm(const EnsembleState& s, const GridSpec& grid) {
    check_shape(s, grid);
    const Eigen::VectorXd rows = s.u.array().square().matrix() * grid.y_weights();
    return std::sqrt(grid.x_weights().dot(rows));
}

double v_norm(const EnsembleState& s, const GridSpec& grid) {
    check_shape(s, grid);
    return std::sqrt(grid.x_weights().dot(s.v.cwiseAbs2()));
}

double joint_norm(const EnsembleState& s, const GridSpec& grid) {
    const double a = u_norm(s, grid), b = v_norm(s, grid);
    return std::sqrt(a * a + b * b);
}

Mode parse_mode(const std::string& name) {
    if (name == "open") return Mode::open;
    if (name == "closed") return Mode::closed;
    if (name == "target") return Mode::target;
    throw ConfigError("unknown mode '" + name + "'");
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::open: return "open";
        case Mode::closed: return "closed";
        case Mode::target: return "target";
    }
    return "open";
}

std::optional<double> fit_log_slope(const std::vector<double>& t, const std::vector<double>& norm, double t0,
                                    double t1) {
    double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t0 - 1e-12 || t[k] > t1 + 1e-12 || !(norm[k] > 0.0)) continue;
        const double y = std::log(norm[k]);
        n += 1;
        st += t[k];
        sy += y;
        stt += t[k] * t[k];
        sty += t[k] * y;
    }
    const double den = n * stt - st * st;
    if (n < 2 || !(den > 0.0)) return std::nullopt;
    return (n * sty - st * sy) / den;
}

SimulationRecord simulate(const PlantModel& model, const GridSpec& grid, const KernelSolution* kernels, Mode mode,
                          const EnsembleState& initial, const std::vector<double>& snapshot_times) {
    grid.validate();
    const SampledCoefficients coeff = sample(model, grid);
    check_cfl(coeff, grid.dt);
    check_shape(initial, grid);
    if (mode != Mode::open && kernels == nullptr) throw ConfigError("closed and target modes need kernels");
    if (kernels && (kernels->grid.nx != grid.nx || kernels->grid.ny != grid.ny))
        throw DimensionError("kernels were solved on a different grid");

    SimulationRecord rec;
    rec.mode = mode;
    std::optional<TargetSystem> target;
    GainRow gain;
    if (kernels) {
        target.emplace(make_target_system(*kernels, coeff));
        rec.lyapunov_params = lyapunov_parameters(coeff, *target);
        gain = kernels->gain_row();
    }

    const Index steps = grid.steps();
    std::vector<Index> snap_steps;
    for (double ts : snapshot_times)
        snap_steps.push_back(std::clamp<Index>(static_cast<Index>(std::llround(ts / grid.dt)), 0, steps));

    EnsembleState state = mode == Mode::target ? forward_transform(initial, *kernels) : initial;
    state.t = 0.0;
    for (Index n = 0;; ++n) {
        const double u = mode == Mode::closed ? control_value(state, gain, grid) : 0.0;
        const double a = u_norm(state, grid), b = v_norm(state, grid);
        rec.times.push_back(state.t);
        rec.u_norms.push_back(a);
        rec.v_norms.push_back(b);
        rec.joint_norms.push_back(std::sqrt(a * a + b * b));
        rec.control.push_back(u);
        if (target) {
            const LyapunovParameters& lp = *rec.lyapunov_params;
            const EnsembleState ab = mode == Mode::target ? state : forward_transform(state, *kernels);
            rec.lyapunov.push_back(lyapunov_value(ab, coeff, lp.p, lp.delta));
        }
        for (std::size_t k = 0; k < snap_steps.size(); ++k)
            if (snap_steps[k] == n) rec.snapshots.emplace_back(snapshot_times[k], state);
        if (n == steps) break;

        state = mode == Mode::target ? step_target(state, coeff, *target, grid.dt)
                                     : step_plant(state, coeff, u, grid.dt);
        state.t = static_cast<double>(n + 1) * grid.dt;
    }

    const double t_end = rec.times.back();
    rec.decay_rate = fit_log_slope(rec.times, rec.joint_norms, t_end > 2.0 ? 2.0 : 0.0, t_end);
    return rec;
}

}  // namespace ebs
