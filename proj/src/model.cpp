#include "ebs/model.hpp"

#include <cmath>
#include <numbers>

namespace ebs {

namespace {

constexpr double pi = std::numbers::pi;

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace

SampledCoefficients sample(const PlantModel& model, const GridSpec& grid) {
    grid.validate();
    const Index nx = grid.nx, ny = grid.ny;
    SampledCoefficients c;
    c.grid = grid;
    c.lambda.resize(nx + 1, ny);
    c.w.resize(nx + 1, ny);
    c.xi.resize(nx + 1, ny);
    c.lambda_x.resize(nx + 1, ny);
    c.mu.resize(nx + 1);
    c.mu_x.resize(nx + 1);
    c.q.resize(ny);
    c.theta.assign(nx + 1, Eigen::MatrixXd(ny, ny));
    c.y_weights = grid.y_weights();

    for (Index i = 0; i <= nx; ++i) {
        const double x = grid.x(i);
        c.mu[i] = model.mu(x);
        for (Index j = 0; j < ny; ++j) {
            const double y = grid.y(j);
            c.lambda(i, j) = model.lambda(x, y);
            c.w(i, j) = model.w(x, y);
            c.xi(i, j) = model.xi(x, y);
            for (Index m = 0; m < ny; ++m) c.theta[i](j, m) = model.theta(x, y, grid.y(m));
        }
    }
    for (Index j = 0; j < ny; ++j) c.q[j] = model.q(grid.y(j));

    const double h = grid.hx();
    auto diff = [&](auto&& at, Index i) {
        if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        if (i == nx) return (3.0 * at(nx) - 4.0 * at(nx - 1) + at(nx - 2)) / (2.0 * h);
        return (at(i + 1) - at(i - 1)) / (2.0 * h);
    };
    for (Index i = 0; i <= nx; ++i) {
        c.mu_x[i] = model.mu_x ? model.mu_x(grid.x(i)) : diff([&](Index r) { return c.mu[r]; }, i);
        for (Index j = 0; j < ny; ++j) {
            c.lambda_x(i, j) = model.lambda_x
                                   ? model.lambda_x(grid.x(i), grid.y(j))
                                   : diff([&](Index r) { return c.lambda(r, j); }, i);
        }
    }

    bool finite = all_finite(c.lambda) && all_finite(c.mu) && all_finite(c.w) && all_finite(c.xi) &&
                  all_finite(c.q) && all_finite(c.lambda_x) && all_finite(c.mu_x);
    c.theta_zero = true;
    for (const auto& t : c.theta) {
        finite = finite && t.allFinite();
        c.theta_zero = c.theta_zero && (t.array() == 0.0).all();
    }
    if (!finite) throw DomainError("model '" + model.name + "' produced non-finite coefficients");

    c.mu_lower_bound = c.mu.minCoeff();
    c.lambda_lower_bound = c.lambda.minCoeff();
    if (!(c.mu_lower_bound > 0.0)) throw DomainError("mu must be strictly positive on the grid");
    if (!(c.lambda_lower_bound > 0.0)) throw DomainError("lambda must be strictly positive on the grid");
    c.max_speed = std::max(c.mu.maxCoeff(), c.lambda.maxCoeff());

    c.lambda_uniform_in_y = true;
    for (Index j = 1; j < ny && c.lambda_uniform_in_y; ++j)
        c.lambda_uniform_in_y = (c.lambda.col(j).array() == c.lambda.col(0).array()).all();
    return c;
}

namespace {
void check_theta_args(const SampledCoefficients& c, Index i, Index n) {
    if (i < 0 || i > c.grid.nx) throw DomainError("x index out of range");
    if (n != c.grid.ny) throw DimensionError("expected ny samples");
}
}  // namespace

Eigen::VectorXd apply_theta(const SampledCoefficients& c, Index i, const Eigen::Ref<const Eigen::VectorXd>& a) {
    check_theta_args(c, i, a.size());
    return c.theta[i] * c.y_weights.cwiseProduct(a);
}

Eigen::VectorXd apply_theta_transpose(const SampledCoefficients& c, Index i,
                                      const Eigen::Ref<const Eigen::VectorXd>& a) {
    check_theta_args(c, i, a.size());
    return c.theta[i].transpose() * c.y_weights.cwiseProduct(a);
}

PlantModel toy_model() {
    PlantModel m;
    m.name = "toy";
    m.lambda = [](double, double) { return 1.0; };
    m.mu = [](double) { return 1.0; };
    m.theta = [](double x, double y, double eta) { return x * x * x * (x + 1.0) * (y - 0.5) * (eta - 0.5); };
    m.w = [](double x, double y) { return x * (x + 1.0) * (y - 0.5) * std::exp(x); };
    m.xi = [](double x, double y) { return -70.0 * std::exp(35.0 * x / (pi * pi)) * y * (y - 1.0); };
    m.q = [](double y) { return std::cos(2.0 * pi * y); };
    m.lambda_x = [](double, double) { return 0.0; };
    m.mu_x = [](double) { return 0.0; };
    return m;
}

PlantModel pure_transport_model() {
    PlantModel m;
    m.name = "pure-transport";
    m.lambda = [](double, double) { return 1.0; };
    m.mu = [](double) { return 1.0; };
    m.theta = [](double, double, double) { return 0.0; };
    m.w = [](double, double) { return 0.0; };
    m.xi = [](double, double) { return 0.0; };
    m.q = [](double) { return 0.0; };
    m.lambda_x = [](double, double) { return 0.0; };
    m.mu_x = [](double) { return 0.0; };
    return m;
}

AnalyticKernels toy_analytic_kernels() {
    const double c = 35.0 / (2.0 * pi * pi);
    return {[](double, double xi, double y) { return 35.0 * y * (y - 1.0) * std::exp(35.0 * xi / (pi * pi)); },
            [c](double, double) { return c; }};
}

PlantModel scaled(PlantModel m, const ModelScaling& s) {
    auto scale2 = [](auto f, double a) { return [f, a](double x, double y) { return a * f(x, y); }; };
    if (s.lambda != 1.0) {
        m.lambda = scale2(m.lambda, s.lambda);
        if (m.lambda_x) m.lambda_x = scale2(m.lambda_x, s.lambda);
    }
    if (s.mu != 1.0) {
        m.mu = [f = m.mu, a = s.mu](double x) { return a * f(x); };
        if (m.mu_x) m.mu_x = [f = m.mu_x, a = s.mu](double x) { return a * f(x); };
    }
    if (s.theta != 1.0)
        m.theta = [f = m.theta, a = s.theta](double x, double y, double e) { return a * f(x, y, e); };
    if (s.w != 1.0) m.w = scale2(m.w, s.w);
    if (s.xi != 1.0) m.xi = scale2(m.xi, s.xi);
    if (s.q != 1.0) m.q = [f = m.q, a = s.q](double y) { return a * f(y); };
    return m;
}

PlantModel builtin_model(std::string_view name, const ModelScaling& s) {
    if (name == "toy") return scaled(toy_model(), s);
    if (name == "pure-transport") return scaled(pure_transport_model(), s);
    throw ConfigError("unknown model '" + std::string(name) + "'");
}

}  // namespace ebs
