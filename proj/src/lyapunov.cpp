#include <algorithm>
#include <cmath>
#include <limits>

#include "ebs/simulator.hpp"

namespace ebs {

double lyapunov_value(const EnsembleState& ab, const SampledCoefficients& c, double p, double delta) {
    const GridSpec& grid = c.grid;
    if (!(p > 0.0) || !(delta > 0.0)) throw DomainError("lyapunov_value needs p > 0 and delta > 0");
    if (ab.u.rows() != grid.nx + 1 || ab.u.cols() != grid.ny || ab.v.size() != grid.nx + 1)
        throw DimensionError("state does not match the grid");
    const Eigen::VectorXd wx = grid.x_weights();
    double va = 0.0, vb = 0.0;
    for (Index i = 0; i <= grid.nx; ++i) {
        const double x = grid.x(i);
        const double weight = std::exp(-delta * x);
        if (weight > 0.0) {
            const double inner = (ab.u.row(i).array().square() / c.lambda.row(i).array()).matrix().dot(c.y_weights);
            va += wx[i] * weight * inner;
        }
        vb += wx[i] * (1.0 + x) / c.mu[i] * ab.v[i] * ab.v[i];
    }
    return p * va + vb;
}

LyapunovParameters lyapunov_parameters(const SampledCoefficients& c, const TargetSystem& target) {
    const GridSpec& grid = c.grid;
    const Index nx = grid.nx;
    const TriField& k = target.kernels.k;
    const TriField& kappa = target.kappa;
    auto enorm = [&](const auto& row) { return std::sqrt(row.array().square().matrix().dot(c.y_weights)); };

    LyapunovParameters lp;
    TriScalarField k_norm(nx), kappa_norm(nx);
    k.index().for_each([&](Index i, Index j) {
        k_norm(i, j) = enorm(k.node(i, j));
        kappa_norm(i, j) = enorm(kappa.node(i, j));
    });
    Eigen::VectorXd w_norm(nx + 1);
    for (Index i = 0; i <= nx; ++i) w_norm[i] = enorm(c.w.row(i));
    lp.bound_kappa = kappa_norm.values().maxCoeff();
    lp.bound_W = w_norm.maxCoeff();

    // ‖C(x,ξ)‖ ≤ ‖k[x,ξ]‖‖W[x]‖ + ∫_ξ^x ‖k[s,ξ]‖‖κ[x,s]‖ ds
    const SegmentRule rule(nx);
    k.index().for_each([&](Index i, Index j) {
        const auto w = rule.weights(i - j);
        double bound = k_norm(i, j) * w_norm[i];
        for (Index m = j; m <= i; ++m) bound += w[m - j] * k_norm(m, j) * kappa_norm(i, m);
        lp.bound_C = std::max(lp.bound_C, bound);
    });

    // Hilbert–Schmidt norm of Θ(x)
    for (Index i = 0; i <= nx; ++i) {
        const double hs = (c.y_weights.transpose() * c.theta[i].array().square().matrix() * c.y_weights)(0, 0);
        lp.bound_Theta = std::max(lp.bound_Theta, std::sqrt(hs));
    }
    lp.bound_Linv = 1.0 / c.lambda_lower_bound;
    lp.q_norm = std::sqrt(c.q.array().square().matrix().dot(c.y_weights));

    lp.delta_star = 1.0 + lp.bound_C * lp.bound_C + 2.0 * lp.bound_Linv * lp.bound_Theta + lp.bound_Linv;
    lp.delta = 2.0 * lp.delta_star;
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double by_q = lp.q_norm > 0.0 ? std::exp(lp.delta) / lp.q_norm : inf;
    const double den = lp.bound_kappa * lp.bound_kappa + lp.delta * lp.bound_W * lp.bound_W;
    const double by_kappa = den > 0.0 ? lp.delta / den : inf;
    lp.p = 0.5 * std::min({1.0, by_q, by_kappa});

    const double lambda_max = c.lambda.maxCoeff();
    const double mu_max = c.mu.maxCoeff();
    lp.m = std::min(lp.p * std::exp(-lp.delta) / lambda_max, 1.0 / mu_max);
    lp.M = lp.p / c.lambda_lower_bound + 2.0 / c.mu_lower_bound;
    return lp;
}

}  // namespace ebs
