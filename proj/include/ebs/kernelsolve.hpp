#pragma once

#include <functional>
#include <vector>

#include "ebs/model.hpp"

namespace ebs {

/// The Goursat system on T
///   μ(x)F_x − L(ξ){F_ξ} = a[x,ξ] G + B(ξ){F},   F[x,x] = f[x],
///   μ(x)G_x + μ(ξ)G_ξ = d(x,ξ) G + ⟨e[x,ξ], F⟩,  G(x,0) = ⟨g[x], F[x,0]⟩.
/// B acts on y-profiles and may depend on ξ only: b[j] is its ny × ny matrix
/// at ξ_j (an empty vector means B = 0).
struct GoursatProblem {
    GridSpec grid;
    PlantModel speeds;  // only lambda and mu are used
    TriField a;
    TriScalarField d;
    TriField e;
    std::vector<Eigen::MatrixXd> b;
    std::function<double(double x, Index y_index)> f;
    std::function<double(double x, Index y_index)> g;
};

struct GoursatOptions {
    double tol = 1e-10;
    int max_iter = 60;
    double step = 0.0;  // characteristic step; 0 selects 1/(4·nx·max speed)
};

struct GoursatSolution {
    TriField F;
    TriScalarField G;
    int iterations = 0;
    double final_delta = 0.0;
    std::vector<double> delta_history;
};

/// Successive approximation from the zero functions, integrating along the
/// characteristics. Throws NonconvergenceError after max_iter sweeps and
/// NumericError on a non-finite iterate.
GoursatSolution solve_goursat(const GoursatProblem& problem, const GoursatOptions& options = {});

/// The controller's slice of the kernels at x = 1.
struct GainRow {
    RowMatrix k;             // (nx+1) × ny, k(1, ξ_j, y_m)
    Eigen::VectorXd ktilde;  // k̃(1, ξ_j)
};

struct KernelSolution {
    GridSpec grid;
    TriField k;
    TriScalarField ktilde;
    int iterations = 0;
    double final_delta = 0.0;
    std::vector<double> delta_history;

    GainRow gain_row() const;
};

/// Goursat data for the backstepping kernels:
/// a = Ξ[ξ], d = −μ′(ξ), e = W[ξ], B = L′(ξ) + Θᵗ(ξ), f = −Ξ/(λ+μ), g = λ(0,·)q/μ(0).
GoursatProblem backstepping_problem(const PlantModel& model, const SampledCoefficients& coeff);

KernelSolution solve_backstepping_kernels(const PlantModel& model, const GridSpec& grid,
                                          const GoursatOptions& options = {});
KernelSolution solve_backstepping_kernels(const PlantModel& model, const SampledCoefficients& coeff,
                                          const GoursatOptions& options = {});

/// Samples closed-form kernels on the grid.
KernelSolution sample_kernels(const AnalyticKernels& kernels, const GridSpec& grid);

/// Upwind finite-difference residuals of the two kernel PDEs at the interior
/// nodes (ξ_j with j ≥ 1 and i − j ≥ 2). The relative values divide by the
/// natural scales (max μ + max λ)·max|k| and 2·max μ·max|k̃|.
struct KernelResidual {
    double k = 0.0;
    double ktilde = 0.0;
    double k_abs = 0.0;
    double ktilde_abs = 0.0;
};
KernelResidual kernel_pde_residual(const KernelSolution& sol, const SampledCoefficients& coeff);

/// max |(λ+μ)k(x,x,y) + Ξ(x,y)| over the diagonal.
double diagonal_boundary_residual(const KernelSolution& sol, const SampledCoefficients& coeff);

/// max_x |μ(0)k̃(x,0) − ∫ q λ(0,·) k(x,0,·) dy|.
double edge_boundary_residual(const KernelSolution& sol, const SampledCoefficients& coeff);

/// Error against closed-form kernels. Relative error excludes the y = 0 and
/// y = 1 lines, where the absolute error is reported instead.
struct OracleError {
    double max_rel = 0.0;
    double k_max_rel = 0.0;
    double ktilde_max_rel = 0.0;
    double edge_abs = 0.0;
};
OracleError compare_with_analytic(const KernelSolution& sol, const AnalyticKernels& exact);

}  // namespace ebs
