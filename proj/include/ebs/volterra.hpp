#pragma once

#include <vector>

#include "ebs/grid.hpp"

namespace ebs {

/// Resolvent of a scalar Volterra kernel: the sum of its iterated kernels.
struct ResolventKernel {
    TriScalarField values;
    int n_terms_used = 0;
    double tail_bound = 0.0;           // sup-norm of the last summed term
    std::vector<double> term_norms;    // sup-norm of every summed term
};

/// (a ⋆ b)(x,ξ) = ∫_ξ^x a(s,ξ) b(x,s) ds on the grid of T.
TriScalarField volterra_compose(const TriScalarField& a, const TriScalarField& b);

/// k^{n+1} = k̃ ⋆ kⁿ summed from k¹ = k̃ until the last term's sup-norm is
/// below tol, or max_terms terms. Throws NumericError on non-finite input.
ResolventKernel resolvent(const TriScalarField& ktilde, double tol = 1e-12, int max_terms = 60);

/// κ[x,ξ] = W[x]k̃(x,ξ) + ∫_ξ^x k̃(s,ξ)κ[x,s] ds, solved through the resolvent.
/// w_grid is (nx+1) × ny.
TriField solve_kappa(const RowMatrix& w_grid, const TriScalarField& ktilde, double tol = 1e-12);
TriField solve_kappa(const RowMatrix& w_grid, const TriScalarField& ktilde, const ResolventKernel& r);

/// Data of the target-system operator C(x,ξ).
struct CascadeKernels {
    const TriField& kappa;
    const TriField& k;
    const RowMatrix& w;
    Eigen::VectorXd y_weights;
};

/// C(x_i,ξ_j){a} = ⟨k[x,ξ],a⟩W[x] + ∫_ξ^x ⟨k[s,ξ],a⟩ κ[x,s] ds.
Eigen::VectorXd apply_C(const CascadeKernels& c, Index x_index, Index xi_index,
                        const Eigen::Ref<const Eigen::VectorXd>& a);

/// Kernels of the inverse transform v = β + ∫ l̃ β + ∫ ⟨l, α⟩.
struct InverseKernels {
    TriField l;
    TriScalarField ltilde;
    int n_terms_used = 0;
};

/// l̃ is the resolvent of k̃ and l[x,ξ] = k[x,ξ] + ∫_ξ^x l̃(x,s) k[s,ξ] ds.
InverseKernels inverse_transform_kernels(const TriField& k, const TriScalarField& ktilde, double tol = 1e-12);

}  // namespace ebs
