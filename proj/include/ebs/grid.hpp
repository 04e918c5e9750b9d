#pragma once

#include <Eigen/Core>

#include <cmath>

#include "ebs/errors.hpp"

namespace ebs {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = RowMatrixT<double>;

/// Uniform discretization of x, ξ ∈ [0,1] (nx intervals) and y ∈ [0,1]
/// (ny nodes, both endpoints included), plus the time step.
struct GridSpec {
    Index nx = 200;
    Index ny = 120;
    double dt = 0.004;
    double t_final = 5.0;

    /// Throws ConfigError unless nx ≥ 2, ny ≥ 2, dt > 0, t_final > 0.
    void validate() const;

    double hx() const { return 1.0 / static_cast<double>(nx); }
    double hy() const { return 1.0 / static_cast<double>(ny - 1); }
    double x(Index i) const { return static_cast<double>(i) / static_cast<double>(nx); }
    double y(Index j) const { return static_cast<double>(j) / static_cast<double>(ny - 1); }

    Eigen::VectorXd x_nodes() const;
    Eigen::VectorXd y_nodes() const;
    Eigen::VectorXd x_weights() const;
    Eigen::VectorXd y_weights() const;

    /// Number of time steps needed to reach t_final.
    Index steps() const;
};

/// Addresses the nodes (x_i, ξ_j), 0 ≤ j ≤ i ≤ nx, of the triangle T, row-major in i.
class TriangularIndex {
public:
    TriangularIndex() = default;
    explicit TriangularIndex(Index nx) : nx_(nx) {}

    Index nx() const { return nx_; }
    Index size() const { return (nx_ + 1) * (nx_ + 2) / 2; }
    bool contains(Index i, Index j) const { return 0 <= j && j <= i && i <= nx_; }

    static constexpr Index offset(Index i, Index j) { return i * (i + 1) / 2 + j; }
    Index operator()(Index i, Index j) const { return offset(i, j); }

    /// Checked lookup.
    Index at(Index i, Index j) const {
        if (!contains(i, j)) throw DomainError("triangle index out of range");
        return offset(i, j);
    }

    template <typename F>
    void for_each(F&& f) const {
        for (Index i = 0; i <= nx_; ++i)
            for (Index j = 0; j <= i; ++j) f(i, j);
    }

private:
    Index nx_ = 0;
};

/// Scalar quantity on T, e.g. k̃(x,ξ).
template <typename Scalar>
class TriScalarFieldT {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    TriScalarFieldT() = default;
    explicit TriScalarFieldT(Index nx, Scalar fill = Scalar(0))
        : index_(nx), values_(Vector::Constant(index_.size(), fill)) {}

    template <typename F>
    static TriScalarFieldT generate(Index nx, F&& f) {
        TriScalarFieldT out(nx);
        out.index_.for_each([&](Index i, Index j) { out(i, j) = f(i, j); });
        return out;
    }

    Index nx() const { return index_.nx(); }
    const TriangularIndex& index() const { return index_; }

    Scalar& operator()(Index i, Index j) { return values_[index_(i, j)]; }
    const Scalar& operator()(Index i, Index j) const { return values_[index_(i, j)]; }

    /// Entries (x_i, ξ_0..ξ_i).
    auto row(Index i) { return values_.segment(index_(i, 0), i + 1); }
    auto row(Index i) const { return values_.segment(index_(i, 0), i + 1); }

    Vector& values() { return values_; }
    const Vector& values() const { return values_; }

private:
    TriangularIndex index_;
    Vector values_;
};

/// Quantity on T × y-grid, e.g. k(x,ξ,y). One row of values() per triangle node.
template <typename Scalar>
class TriFieldT {
public:
    using Matrix = RowMatrixT<Scalar>;

    TriFieldT() = default;
    TriFieldT(Index nx, Index ny, Scalar fill = Scalar(0))
        : index_(nx), values_(Matrix::Constant(index_.size(), ny, fill)) {}

    template <typename F>
    static TriFieldT generate(Index nx, Index ny, F&& f) {
        TriFieldT out(nx, ny);
        out.index_.for_each([&](Index i, Index j) {
            for (Index k = 0; k < ny; ++k) out(i, j, k) = f(i, j, k);
        });
        return out;
    }

    Index nx() const { return index_.nx(); }
    Index ny() const { return values_.cols(); }
    const TriangularIndex& index() const { return index_; }

    Scalar& operator()(Index i, Index j, Index k) { return values_(index_(i, j), k); }
    const Scalar& operator()(Index i, Index j, Index k) const { return values_(index_(i, j), k); }

    /// The y-profile at (x_i, ξ_j).
    auto node(Index i, Index j) { return values_.row(index_(i, j)); }
    auto node(Index i, Index j) const { return values_.row(index_(i, j)); }

    Matrix& values() { return values_; }
    const Matrix& values() const { return values_; }

private:
    TriangularIndex index_;
    Matrix values_;
};

using TriField = TriFieldT<double>;
using TriScalarField = TriScalarFieldT<double>;

/// Composite trapezoid weights on n intervals of width h (n + 1 entries).
Eigen::VectorXd trapezoid_weights(Index n, double h);

/// Composite fourth-order Newton–Cotes weights on n intervals of width h:
/// Simpson's rule, with one 3/8 panel at the start when n is odd, and the
/// trapezoid rule when n = 1.
Eigen::VectorXd newton_cotes_weights(Index n, double h);

/// Newton–Cotes weights for every segment length 0..nx on the x-grid.
/// weights(n) integrates over n consecutive intervals of width 1/nx.
class SegmentRule {
public:
    SegmentRule() = default;
    explicit SegmentRule(Index nx);

    Index nx() const { return table_.nx(); }
    auto weights(Index n) const { return table_.row(n); }

private:
    TriScalarField table_;
};

namespace detail {
inline void check_length(Index got, Index want, const char* what) {
    if (got != want) throw DimensionError(what);
}
}  // namespace detail

/// Composite trapezoid value of ∫₀¹ f(y) dy.
template <typename Derived>
double integrate_y(const GridSpec& grid, const Eigen::DenseBase<Derived>& f) {
    detail::check_length(f.size(), grid.ny, "integrate_y: expected ny samples");
    const Index n = f.size();
    return grid.hy() * (f.sum() - 0.5 * (f(0) + f(n - 1)));
}

/// Composite trapezoid value of ∫₀^{x_upper} f(x) dx from nx + 1 samples.
template <typename Derived>
double integrate_x(const GridSpec& grid, const Eigen::DenseBase<Derived>& f, Index upper) {
    detail::check_length(f.size(), grid.nx + 1, "integrate_x: expected nx+1 samples");
    if (upper < 0 || upper > grid.nx) throw DomainError("integrate_x: upper index out of range");
    if (upper == 0) return 0.0;
    return grid.hx() * (f.head(upper + 1).sum() - 0.5 * (f(0) + f(upper)));
}

template <typename Derived>
double integrate_x(const GridSpec& grid, const Eigen::DenseBase<Derived>& f) {
    return integrate_x(grid, f, grid.nx);
}

/// Interpolation stencil on T: up to four node offsets with weights.
struct TriStencil {
    Index node[4] = {0, 0, 0, 0};
    double weight[4] = {0, 0, 0, 0};
    int count = 0;
};

/// Locates (x, ξ) on the triangle grid. Queries slightly above the diagonal
/// are projected onto it; queries outside [0,1]² throw DomainError.
TriStencil tri_stencil(Index nx, double x, double xi);

/// Bilinear interpolation over T; diagonal cells are split and interpolated linearly.
template <typename Scalar>
Scalar bilinear_tri(const TriFieldT<Scalar>& field, double x, double xi, Index y_index) {
    if (y_index < 0 || y_index >= field.ny()) throw DomainError("bilinear_tri: y index out of range");
    const TriStencil s = tri_stencil(field.nx(), x, xi);
    Scalar acc(0);
    for (int c = 0; c < s.count; ++c) acc += s.weight[c] * field.values()(s.node[c], y_index);
    return acc;
}

template <typename Scalar>
Scalar bilinear_tri(const TriScalarFieldT<Scalar>& field, double x, double xi) {
    const TriStencil s = tri_stencil(field.nx(), x, xi);
    Scalar acc(0);
    for (int c = 0; c < s.count; ++c) acc += s.weight[c] * field.values()[s.node[c]];
    return acc;
}

}  // namespace ebs
