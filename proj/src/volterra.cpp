#include "ebs/volterra.hpp"

#include "ebs/parallel.hpp"

namespace ebs {

TriScalarField volterra_compose(const TriScalarField& a, const TriScalarField& b) {
    if (a.nx() != b.nx()) throw DimensionError("volterra_compose: grid mismatch");
    const Index nx = a.nx();
    const SegmentRule rule(nx);
    TriScalarField out(nx);
    parallel_for(nx + 1, [&](Index i) {
        for (Index j = 0; j <= i; ++j) {
            const auto w = rule.weights(i - j);
            double acc = 0.0;
            for (Index m = j; m <= i; ++m) acc += w[m - j] * a(m, j) * b(i, m);
            out(i, j) = acc;
        }
    });
    return out;
}

ResolventKernel resolvent(const TriScalarField& ktilde, double tol, int max_terms) {
    if (!ktilde.values().allFinite()) throw NumericError("resolvent: non-finite kernel");
    if (!(tol > 0.0)) throw DomainError("resolvent: tol must be positive");
    ResolventKernel r;
    r.values = ktilde;
    TriScalarField term = ktilde;
    r.n_terms_used = 1;
    r.tail_bound = term.values().cwiseAbs().maxCoeff();
    r.term_norms.push_back(r.tail_bound);
    while (r.tail_bound >= tol && r.n_terms_used < max_terms) {
        term = volterra_compose(ktilde, term);
        r.values.values() += term.values();
        ++r.n_terms_used;
        r.tail_bound = term.values().cwiseAbs().maxCoeff();
        r.term_norms.push_back(r.tail_bound);
    }
    if (!r.values.values().allFinite()) throw NumericError("resolvent: series overflowed");
    return r;
}

TriField solve_kappa(const RowMatrix& w_grid, const TriScalarField& ktilde, double tol) {
    return solve_kappa(w_grid, ktilde, resolvent(ktilde, tol));
}

TriField solve_kappa(const RowMatrix& w_grid, const TriScalarField& ktilde, const ResolventKernel& r) {
    const Index nx = ktilde.nx();
    if (w_grid.rows() != nx + 1 || r.values.nx() != nx) throw DimensionError("solve_kappa: grid mismatch");
    // κ[x,·] = W[x] σ(x,·) with σ = k̃ + (resolvent ⋆ k̃)
    TriScalarField sigma = volterra_compose(r.values, ktilde);
    sigma.values() += ktilde.values();
    TriField kappa(nx, w_grid.cols());
    ktilde.index().for_each([&](Index i, Index j) { kappa.node(i, j) = sigma(i, j) * w_grid.row(i); });
    return kappa;
}

Eigen::VectorXd apply_C(const CascadeKernels& c, Index i, Index j, const Eigen::Ref<const Eigen::VectorXd>& a) {
    if (!c.k.index().contains(i, j)) throw DomainError("apply_C: need xi index <= x index");
    if (a.size() != c.k.ny()) throw DimensionError("apply_C: expected ny samples");
    const Eigen::VectorXd wa = c.y_weights.cwiseProduct(a);
    Eigen::VectorXd out = (c.k.node(i, j).dot(wa)) * c.w.row(i).transpose();
    const SegmentRule rule(c.k.nx());
    const auto w = rule.weights(i - j);
    for (Index m = j; m <= i; ++m) out += (w[m - j] * c.k.node(m, j).dot(wa)) * c.kappa.node(i, m).transpose();
    return out;
}

InverseKernels inverse_transform_kernels(const TriField& k, const TriScalarField& ktilde, double tol) {
    if (k.nx() != ktilde.nx()) throw DimensionError("inverse_transform_kernels: grid mismatch");
    InverseKernels inv;
    ResolventKernel r = resolvent(ktilde, tol);
    inv.ltilde = std::move(r.values);
    inv.n_terms_used = r.n_terms_used;
    const Index nx = k.nx();
    const SegmentRule rule(nx);
    inv.l = k;
    parallel_for(nx + 1, [&](Index i) {
        for (Index j = 0; j <= i; ++j) {
            const auto w = rule.weights(i - j);
            auto out = inv.l.node(i, j);
            for (Index m = j; m <= i; ++m) out += (w[m - j] * inv.ltilde(i, m)) * k.node(m, j);
        }
    });
    return inv;
}

}  // namespace ebs
