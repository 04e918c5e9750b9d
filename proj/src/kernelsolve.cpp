#include "ebs/kernelsolve.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "ebs/characteristics.hpp"
#include "ebs/parallel.hpp"

namespace ebs {

namespace {

using SparseOp = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Entry {
    Index col;
    double w;
};
using EntryRows = std::vector<std::vector<Entry>>;

void add_point(std::vector<Entry>& row, Index nx, double x, double xi, double weight) {
    const TriStencil st = tri_stencil(nx, x, xi);
    for (int c = 0; c < st.count; ++c)
        if (st.weight[c] != 0.0) row.push_back({st.node[c], weight * st.weight[c]});
}

void merge(std::vector<Entry>& row) {
    std::stable_sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    std::size_t out = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (out > 0 && row[out - 1].col == row[k].col)
            row[out - 1].w += row[k].w;
        else
            row[out++] = row[k];
    }
    row.resize(out);
}

SparseOp assemble(const EntryRows& rows, Index cols) {
    std::vector<Eigen::Triplet<double>> triplets;
    std::size_t nnz = 0;
    for (const auto& r : rows) nnz += r.size();
    triplets.reserve(nnz);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const Entry& e : rows[r]) triplets.emplace_back(static_cast<int>(r), static_cast<int>(e.col), e.w);
    SparseOp op(static_cast<Index>(rows.size()), cols);
    op.setFromTriplets(triplets.begin(), triplets.end());
    return op;
}

Index path_intervals(double s_end, double step) {
    if (s_end <= 0.0) return 0;
    return std::max<Index>(1, static_cast<Index>(std::ceil(s_end / step - 1e-9)));
}

// Trapezoid rule along s ↦ (px(s), pxi(s)) on [0, s_end]; the endpoint is the node itself.
template <typename PathX, typename PathXi>
void integrate_path(std::vector<Entry>& row, Index nx, Index node, double s_end, double step, PathX&& px,
                    PathXi&& pxi) {
    const Index n = path_intervals(s_end, step);
    if (n == 0) return;
    const double ds = s_end / static_cast<double>(n);
    for (Index k = 0; k < n; ++k) {
        const double s = ds * static_cast<double>(k);
        add_point(row, nx, px(s), pxi(s), k == 0 ? 0.5 * ds : ds);
    }
    row.push_back({node, 0.5 * ds});
    merge(row);
}

// out += op · in, split into row blocks.
void multiply_add(const SparseOp& op, const RowMatrix& in, RowMatrix& out) {
    const Index rows = op.rows();
    const Index block = 256;
    const Index blocks = (rows + block - 1) / block;
    parallel_for(blocks, [&](Index b) {
        const Index r0 = b * block;
        const Index n = std::min(block, rows - r0);
        out.middleRows(r0, n).noalias() += op.middleRows(r0, n) * in;
    });
}

void multiply_add(const SparseOp& op, const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    const Index rows = op.rows();
    const Index block = 256;
    const Index blocks = (rows + block - 1) / block;
    parallel_for(blocks, [&](Index b) {
        const Index r0 = b * block;
        const Index n = std::min(block, rows - r0);
        out.segment(r0, n).noalias() += op.middleRows(r0, n) * in;
    });
}

double max_speed(const PlantModel& m, const GridSpec& grid) {
    double s = 0.0;
    for (Index i = 0; i <= grid.nx; ++i) {
        const double x = grid.x(i);
        s = std::max(s, m.mu(x));
        for (Index j = 0; j < grid.ny; ++j) s = std::max(s, m.lambda(x, grid.y(j)));
    }
    return s;
}

}  // namespace

GoursatSolution solve_goursat(const GoursatProblem& p, const GoursatOptions& opt) {
    const GridSpec& grid = p.grid;
    grid.validate();
    const Index nx = grid.nx, ny = grid.ny;
    const TriangularIndex tri(nx);
    const Index ntri = tri.size();
    if (p.a.nx() != nx || p.a.ny() != ny || p.e.nx() != nx || p.e.ny() != ny || p.d.nx() != nx)
        throw DimensionError("solve_goursat: coefficient fields do not match the grid");
    if (!p.b.empty() && static_cast<Index>(p.b.size()) != nx + 1)
        throw DimensionError("solve_goursat: B needs one matrix per xi node");
    if (!(opt.tol > 0.0) || opt.max_iter < 1) throw ConfigError("solve_goursat: bad tolerance or iteration cap");

    const double auto_step = 1.0 / (4.0 * static_cast<double>(nx) * max_speed(p.speeds, grid));
    const double step = opt.step > 0.0 ? std::min(opt.step, auto_step) : auto_step;
    const CharacteristicFlows flows(p.speeds, grid);
    const Index classes = flows.classes();
    const Eigen::VectorXd wy = grid.y_weights();

    // Path quadratures, one sparse operator per λ-class, plus the launch data.
    std::vector<SparseOp> f_ops(classes);
    TriField launch(nx, ny);
    for (Index c = 0; c < classes; ++c) {
        EntryRows rows(ntri);
        std::vector<double> launch_point(ntri);
        parallel_for(nx + 1, [&](Index i) {
            for (Index j = 0; j <= i; ++j) {
                const Index node = tri(i, j);
                const FlowCrossing fc = flows.f_crossing(grid.x(i), grid.x(j), c);
                launch_point[node] = j == i ? grid.x(i) : fc.launch;
                if (j == i) continue;
                integrate_path(
                    rows[node], nx, node, fc.s_end, step, [&](double s) { return flows.f_x(fc, s); },
                    [&](double s) { return flows.f_xi(fc, s, c); });
            }
        });
        f_ops[c] = assemble(rows, ntri);
        for (Index k = 0; k < ny; ++k) {
            if (flows.y_class(k) != c) continue;
            for (Index node = 0; node < ntri; ++node) launch.values()(node, k) = p.f(launch_point[node], k);
        }
    }

    SparseOp g_op, edge_op;
    {
        EntryRows rows(ntri), edge(ntri);
        parallel_for(nx + 1, [&](Index i) {
            for (Index j = 0; j <= i; ++j) {
                const Index node = tri(i, j);
                if (j == 0) {
                    edge[node].push_back({i, 1.0});
                    continue;
                }
                const FlowCrossing gc = flows.g_crossing(grid.x(i), grid.x(j));
                const double u = std::clamp(gc.launch, 0.0, 1.0) * static_cast<double>(nx);
                const Index i0 = std::clamp<Index>(static_cast<Index>(u), 0, nx - 1);
                const double t = u - static_cast<double>(i0);
                edge[node].push_back({i0, 1.0 - t});
                edge[node].push_back({i0 + 1, t});
                integrate_path(
                    rows[node], nx, node, gc.s_end, step, [&](double s) { return flows.g_x(gc, s); },
                    [&](double s) { return flows.g_xi(s); });
            }
        });
        g_op = assemble(rows, ntri);
        edge_op = assemble(edge, nx + 1);
    }

    RowMatrix g_grid(nx + 1, ny);
    for (Index i = 0; i <= nx; ++i)
        for (Index k = 0; k < ny; ++k) g_grid(i, k) = p.g(grid.x(i), k) * wy[k];

    std::vector<std::vector<Index>> class_cols(classes);
    for (Index k = 0; k < ny; ++k) class_cols[flows.y_class(k)].push_back(k);

    GoursatSolution sol;
    sol.F = TriField(nx, ny);
    sol.G = TriScalarField(nx);
    RowMatrix H(ntri, ny);
    Eigen::VectorXd Q(ntri), edge_values(nx + 1);

    for (int n = 1; n <= opt.max_iter; ++n) {
        const RowMatrix& F = sol.F.values();
        const Eigen::VectorXd& G = sol.G.values();

        // integrands at the nodes from the previous iterate
        H = p.a.values().array().colwise() * G.array();
        if (!p.b.empty()) {
            parallel_for(nx + 1, [&](Index j) {
                const Index m = nx - j + 1;
                RowMatrix col(m, ny);
                for (Index i = j; i <= nx; ++i) col.row(i - j) = F.row(tri(i, j));
                RowMatrix out = col * p.b[j].transpose();
                for (Index i = j; i <= nx; ++i) H.row(tri(i, j)) += out.row(i - j);
            });
        }
        Q = p.d.values().cwiseProduct(G) + (p.e.values().array() * F.array()).matrix() * wy;

        TriField F_next(nx, ny);
        F_next.values() = launch.values();
        if (classes == 1) {
            multiply_add(f_ops[0], H, F_next.values());
        } else {
            for (Index c = 0; c < classes; ++c) {
                RowMatrix Hc = H(Eigen::all, class_cols[c]);
                RowMatrix Fc = F_next.values()(Eigen::all, class_cols[c]);
                multiply_add(f_ops[c], Hc, Fc);
                F_next.values()(Eigen::all, class_cols[c]) = Fc;
            }
        }

        for (Index i = 0; i <= nx; ++i) edge_values[i] = F_next.node(i, 0).dot(g_grid.row(i));
        TriScalarField G_next(nx);
        G_next.values() = edge_op * edge_values;
        multiply_add(g_op, Q, G_next.values());

        if (!F_next.values().allFinite() || !G_next.values().allFinite())
            throw NumericError(fmt::format("solve_goursat: non-finite iterate at sweep {}", n));

        const double delta = std::max((F_next.values() - F).cwiseAbs().maxCoeff(),
                                      (G_next.values() - G).cwiseAbs().maxCoeff());
        sol.F = std::move(F_next);
        sol.G = std::move(G_next);
        sol.iterations = n;
        sol.final_delta = delta;
        sol.delta_history.push_back(delta);
        if (delta < opt.tol) return sol;
    }
    throw NonconvergenceError(
        fmt::format("kernel iteration did not converge in {} sweeps (delta {:.3e})", opt.max_iter, sol.final_delta),
        sol.final_delta, sol.iterations);
}

GainRow KernelSolution::gain_row() const {
    const Index nx = grid.nx;
    GainRow g;
    g.k.resize(nx + 1, k.ny());
    g.ktilde.resize(nx + 1);
    for (Index j = 0; j <= nx; ++j) {
        g.k.row(j) = k.node(nx, j);
        g.ktilde[j] = ktilde(nx, j);
    }
    return g;
}

GoursatProblem backstepping_problem(const PlantModel& model, const SampledCoefficients& c) {
    const GridSpec& grid = c.grid;
    const Index nx = grid.nx, ny = grid.ny;
    GoursatProblem p;
    p.grid = grid;
    p.speeds = model;
    p.a = TriField(nx, ny);
    p.e = TriField(nx, ny);
    p.d = TriScalarField(nx);
    p.a.index().for_each([&](Index i, Index j) {
        p.a.node(i, j) = c.xi.row(j);
        p.e.node(i, j) = c.w.row(j);
        p.d(i, j) = -c.mu_x[j];
    });
    p.b.resize(nx + 1);
    for (Index j = 0; j <= nx; ++j) {
        Eigen::MatrixXd m = c.theta[j].transpose() * c.y_weights.asDiagonal();
        m.diagonal() += c.lambda_x.row(j).transpose();
        p.b[j] = std::move(m);
    }
    p.f = [xi = model.xi, lambda = model.lambda, mu = model.mu, grid](double x, Index k) {
        const double y = grid.y(k);
        return -xi(x, y) / (lambda(x, y) + mu(x));
    };
    const double mu0 = c.mu[0];
    p.g = [lam0 = Eigen::VectorXd(c.lambda.row(0).transpose()), q = c.q, mu0](double, Index k) {
        return lam0[k] * q[k] / mu0;
    };
    return p;
}

KernelSolution solve_backstepping_kernels(const PlantModel& model, const GridSpec& grid,
                                          const GoursatOptions& options) {
    return solve_backstepping_kernels(model, sample(model, grid), options);
}

KernelSolution solve_backstepping_kernels(const PlantModel& model, const SampledCoefficients& coeff,
                                          const GoursatOptions& options) {
    GoursatSolution s = solve_goursat(backstepping_problem(model, coeff), options);
    KernelSolution out;
    out.grid = coeff.grid;
    out.k = std::move(s.F);
    out.ktilde = std::move(s.G);
    out.iterations = s.iterations;
    out.final_delta = s.final_delta;
    out.delta_history = std::move(s.delta_history);
    return out;
}

KernelSolution sample_kernels(const AnalyticKernels& kernels, const GridSpec& grid) {
    KernelSolution out;
    out.grid = grid;
    out.k = TriField::generate(grid.nx, grid.ny,
                               [&](Index i, Index j, Index m) { return kernels.k(grid.x(i), grid.x(j), grid.y(m)); });
    out.ktilde = TriScalarField::generate(grid.nx, [&](Index i, Index j) { return kernels.ktilde(grid.x(i), grid.x(j)); });
    return out;
}

KernelResidual kernel_pde_residual(const KernelSolution& sol, const SampledCoefficients& c) {
    const GridSpec& grid = sol.grid;
    const Index nx = grid.nx, ny = grid.ny;
    const double h = grid.hx();
    KernelResidual r;
    Eigen::VectorXd res(ny);
    for (Index i = 2; i <= nx; ++i) {
        for (Index j = 1; j <= i - 2; ++j) {
            const auto k = sol.k.node(i, j).transpose();
            const Eigen::VectorXd kx = (k - sol.k.node(i - 1, j).transpose()) / h;
            const Eigen::VectorXd kxi = (sol.k.node(i, j + 1).transpose() - k) / h;
            const Eigen::VectorXd rhs = c.lambda_x.row(j).transpose().cwiseProduct(k) +
                                        c.theta[j].transpose() * c.y_weights.cwiseProduct(k) +
                                        c.xi.row(j).transpose() * sol.ktilde(i, j);
            res = c.mu[i] * kx - c.lambda.row(j).transpose().cwiseProduct(kxi) - rhs;
            r.k_abs = std::max(r.k_abs, res.cwiseAbs().maxCoeff());

            const double kt = sol.ktilde(i, j);
            const double ktx = (kt - sol.ktilde(i - 1, j)) / h;
            const double ktxi = (kt - sol.ktilde(i, j - 1)) / h;
            const double rt = c.mu[i] * ktx + c.mu[j] * ktxi + c.mu_x[j] * kt -
                              integrate_y(grid, c.w.row(j).cwiseProduct(sol.k.node(i, j)));
            r.ktilde_abs = std::max(r.ktilde_abs, std::abs(rt));
        }
    }
    const double k_scale = (c.mu.maxCoeff() + c.lambda.maxCoeff()) * sol.k.values().cwiseAbs().maxCoeff();
    const double kt_scale = 2.0 * c.mu.maxCoeff() * sol.ktilde.values().cwiseAbs().maxCoeff();
    r.k = r.k_abs / (k_scale > 0.0 ? k_scale : 1.0);
    r.ktilde = r.ktilde_abs / (kt_scale > 0.0 ? kt_scale : 1.0);
    return r;
}

double diagonal_boundary_residual(const KernelSolution& sol, const SampledCoefficients& c) {
    double r = 0.0;
    for (Index i = 0; i <= sol.grid.nx; ++i) {
        const Eigen::ArrayXd res = (c.lambda.row(i).array() + c.mu[i]) * sol.k.node(i, i).array() + c.xi.row(i).array();
        r = std::max(r, res.abs().maxCoeff());
    }
    return r;
}

double edge_boundary_residual(const KernelSolution& sol, const SampledCoefficients& c) {
    double r = 0.0;
    const Eigen::RowVectorXd ql = c.q.transpose().cwiseProduct(c.lambda.row(0));
    for (Index i = 0; i <= sol.grid.nx; ++i) {
        const double rhs = integrate_y(sol.grid, ql.cwiseProduct(sol.k.node(i, 0)));
        r = std::max(r, std::abs(c.mu[0] * sol.ktilde(i, 0) - rhs));
    }
    return r;
}

OracleError compare_with_analytic(const KernelSolution& sol, const AnalyticKernels& exact) {
    const GridSpec& grid = sol.grid;
    OracleError e;
    sol.k.index().for_each([&](Index i, Index j) {
        const double x = grid.x(i), xi = grid.x(j);
        for (Index m = 0; m < grid.ny; ++m) {
            const double ref = exact.k(x, xi, grid.y(m));
            const double err = std::abs(sol.k(i, j, m) - ref);
            if (m == 0 || m == grid.ny - 1 || ref == 0.0)
                e.edge_abs = std::max(e.edge_abs, err);
            else
                e.k_max_rel = std::max(e.k_max_rel, err / std::abs(ref));
        }
        const double ref = exact.ktilde(x, xi);
        const double err = std::abs(sol.ktilde(i, j) - ref);
        if (ref == 0.0)
            e.edge_abs = std::max(e.edge_abs, err);
        else
            e.ktilde_max_rel = std::max(e.ktilde_max_rel, err / std::abs(ref));
    });
    e.max_rel = std::max(e.k_max_rel, e.ktilde_max_rel);
    return e;
}

}  // namespace ebs
