#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ebs/kernelsolve.hpp"
#include "ebs/volterra.hpp"

namespace ebs {

/// Joint state (u(x_i,y_j), v(x_i)) at time t. Also carries target states (α, β).
struct EnsembleState {
    RowMatrix u;
    Eigen::VectorXd v;
    double t = 0.0;

    static EnsembleState zero(const GridSpec& grid);
};

/// Named initial data.
///   sin-cos:  u = A_u sin(πx) cos(2πy),            v = A_v sin(πx)
///   sin-odd:  u = A_u (y − ½) sin(πx),              v = A_v sin(πx)
///   gaussian: u = A_u exp(−((x − c)/w)²),           v = A_v exp(−((x − c)/w)²)
///   zero
struct InitialCondition {
    std::string kind = "sin-cos";
    double amplitude_u = 1.0;
    double amplitude_v = 0.0;
    double center = 0.3;
    double width = 0.1;
};

EnsembleState initial_state(const GridSpec& grid, const InitialCondition& ic);

/// Courant number dt·max speed·nx.
double courant_number(const SampledCoefficients& coeff, double dt);

/// Throws ConfigError when the Courant number exceeds 1.
void check_cfl(const SampledCoefficients& coeff, double dt);

/// One explicit upwind step of the plant with v(1) ← boundary_v1 and u(0,·) ← q v(0).
EnsembleState step_plant(const EnsembleState& s, const SampledCoefficients& coeff, double boundary_v1, double dt);

/// U = ∫₀¹ ⟨k(1,ξ,·), u(ξ,·)⟩ + k̃(1,ξ) v(ξ) dξ.
double control_value(const EnsembleState& s, const GainRow& gain, const GridSpec& grid);

/// (α, β) = (u, v − ∫₀ˣ ⟨k[x,ξ], u(ξ)⟩ dξ − ∫₀ˣ k̃(x,ξ) v(ξ) dξ).
EnsembleState forward_transform(const EnsembleState& s, const KernelSolution& kernels);

/// (u, v) = (α, β + ∫₀ˣ l̃(x,ξ) β(ξ) dξ + ∫₀ˣ ⟨l[x,ξ], α(ξ)⟩ dξ).
EnsembleState inverse_transform(const EnsembleState& target, const InverseKernels& inverse);

/// Kernel data of the target system.
struct TargetSystem {
    const KernelSolution& kernels;
    TriField kappa;
};

TargetSystem make_target_system(const KernelSolution& kernels, const SampledCoefficients& coeff, double tol = 1e-12);

/// Sources of the α-equation: Θα + Wβ + ∫₀ˣ κβ dξ + ∫₀ˣ C{α} dξ at every x-node.
RowMatrix target_sources(const EnsembleState& ab, const SampledCoefficients& coeff, const TargetSystem& target);

/// One explicit upwind step of the target system; β(1) ← 0, α(0,·) ← q β(0).
EnsembleState step_target(const EnsembleState& ab, const SampledCoefficients& coeff, const TargetSystem& target,
                          double dt);

/// ‖(u, v)‖ = sqrt(∫∫ u² dy dx + ∫ v² dx), and its two parts.
double joint_norm(const EnsembleState& s, const GridSpec& grid);
double u_norm(const EnsembleState& s, const GridSpec& grid);
double v_norm(const EnsembleState& s, const GridSpec& grid);

/// V = p ∫ e^{−δx} ⟨α, α/λ⟩ dx + ∫ (1+x)/μ β² dx.
double lyapunov_value(const EnsembleState& ab, const SampledCoefficients& coeff, double p, double delta);

/// Weights of V and the constants of m‖·‖² ≤ V ≤ M‖·‖², from sampled bounds.
struct LyapunovParameters {
    double p = 0.0;
    double delta = 0.0;
    double delta_star = 0.0;
    double m = 0.0;
    double M = 0.0;
    double bound_C = 0.0;
    double bound_kappa = 0.0;
    double bound_W = 0.0;
    double bound_Theta = 0.0;
    double bound_Linv = 0.0;
    double q_norm = 0.0;
};

LyapunovParameters lyapunov_parameters(const SampledCoefficients& coeff, const TargetSystem& target);

enum class Mode { open, closed, target };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

struct SimulationRecord {
    Mode mode = Mode::open;
    std::vector<double> times;
    std::vector<double> joint_norms;
    std::vector<double> u_norms;
    std::vector<double> v_norms;
    std::vector<double> control;
    std::vector<double> lyapunov;  // empty when no kernels are available
    std::vector<std::pair<double, EnsembleState>> snapshots;
    std::optional<double> decay_rate;
    std::optional<LyapunovParameters> lyapunov_params;
};

/// Runs from t = 0 to grid.t_final. Closed and target modes need kernels.
/// In target mode the initial state is mapped by forward_transform and the
/// target system is stepped; norms then refer to (α, β).
SimulationRecord simulate(const PlantModel& model, const GridSpec& grid, const KernelSolution* kernels, Mode mode,
                          const EnsembleState& initial, const std::vector<double>& snapshot_times);

/// Least-squares slope of log(norm) over t ∈ [t0, t1]; empty if fewer than two positive samples.
std::optional<double> fit_log_slope(const std::vector<double>& t, const std::vector<double>& norm, double t0,
                                    double t1);

}  // namespace ebs
