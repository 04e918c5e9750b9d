#include "ebs/grid.hpp"

#include <algorithm>

namespace ebs {

void GridSpec::validate() const {
    if (nx < 2) throw ConfigError("nx must be at least 2");
    if (ny < 2) throw ConfigError("ny must be at least 2");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be positive");
}

Eigen::VectorXd GridSpec::x_nodes() const {
    Eigen::VectorXd out(nx + 1);
    for (Index i = 0; i <= nx; ++i) out[i] = x(i);
    return out;
}

Eigen::VectorXd GridSpec::y_nodes() const {
    Eigen::VectorXd out(ny);
    for (Index j = 0; j < ny; ++j) out[j] = y(j);
    return out;
}

Eigen::VectorXd GridSpec::x_weights() const { return trapezoid_weights(nx, hx()); }
Eigen::VectorXd GridSpec::y_weights() const { return trapezoid_weights(ny - 1, hy()); }

Index GridSpec::steps() const {
    return static_cast<Index>(std::ceil(t_final / dt - 1e-9));
}

Eigen::VectorXd trapezoid_weights(Index n, double h) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, h);
    if (n == 0) return Eigen::VectorXd::Zero(1);
    w[0] = w[n] = 0.5 * h;
    return w;
}

Eigen::VectorXd newton_cotes_weights(Index n, double h) {
    if (n < 3) {
        if (n == 2) return Eigen::Vector3d(h / 3.0, 4.0 * h / 3.0, h / 3.0);
        return trapezoid_weights(n, h);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
    Index start = 0;
    if (n % 2 == 1) {
        const double c = 3.0 * h / 8.0;
        w[0] += c;
        w[1] += 3.0 * c;
        w[2] += 3.0 * c;
        w[3] += c;
        start = 3;
    }
    for (Index k = start; k < n; k += 2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    return w;
}

SegmentRule::SegmentRule(Index nx) : table_(nx) {
    const double h = 1.0 / static_cast<double>(nx);
    for (Index n = 0; n <= nx; ++n) table_.row(n) = newton_cotes_weights(n, h);
}

TriStencil tri_stencil(Index nx, double x, double xi) {
    constexpr double slack = 1e-12;
    if (!(x >= -slack && x <= 1.0 + slack && xi >= -slack && xi <= 1.0 + slack))
        throw DomainError("triangle query outside [0,1]^2");
    x = std::clamp(x, 0.0, 1.0);
    xi = std::clamp(xi, 0.0, x);

    const double n = static_cast<double>(nx);
    const double u = x * n;
    const double w = xi * n;
    const Index i0 = std::clamp<Index>(static_cast<Index>(u), 0, nx - 1);
    const Index j0 = std::min<Index>(static_cast<Index>(w), i0);
    const double tx = u - static_cast<double>(i0);
    const double tw = std::clamp(w - static_cast<double>(j0), 0.0, 1.0);

    TriStencil s;
    if (j0 < i0) {
        s.count = 4;
        s.node[0] = TriangularIndex::offset(i0, j0);
        s.node[1] = TriangularIndex::offset(i0 + 1, j0);
        s.node[2] = TriangularIndex::offset(i0, j0 + 1);
        s.node[3] = TriangularIndex::offset(i0 + 1, j0 + 1);
        s.weight[0] = (1.0 - tx) * (1.0 - tw);
        s.weight[1] = tx * (1.0 - tw);
        s.weight[2] = (1.0 - tx) * tw;
        s.weight[3] = tx * tw;
    } else {
        // lower half of a diagonal cell: corners (i0,i0), (i0+1,i0), (i0+1,i0+1)
        const double t = std::min(tw, tx);
        s.count = 3;
        s.node[0] = TriangularIndex::offset(i0, i0);
        s.node[1] = TriangularIndex::offset(i0 + 1, i0);
        s.node[2] = TriangularIndex::offset(i0 + 1, i0 + 1);
        s.weight[0] = 1.0 - tx;
        s.weight[1] = tx - t;
        s.weight[2] = t;
    }
    return s;
}

}  // namespace ebs
