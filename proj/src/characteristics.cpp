#include "ebs/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ebs {

namespace {

constexpr double crossing_tol = 1e-12;

double clamp01(double z) { return std::clamp(z, 0.0, 1.0); }

double hermite(double y0, double m0, double y1, double m1, double h, double t) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * m1;
}

double hermite_slope(double y0, double m0, double y1, double m1, double h, double t) {
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * m0 + (-6 * t2 + 6 * t) * y1 +
            (3 * t2 - 2 * t) * h * m1) /
           h;
}

double rk4(const std::function<double(double)>& f, double z, double h) {
    const double k1 = f(z);
    const double k2 = f(z + 0.5 * h * k1);
    const double k3 = f(z + 0.5 * h * k2);
    const double k4 = f(z + h * k3);
    return z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

void check_query(double x, double xi, double step) {
    if (!(x >= 0.0 && x <= 1.0 && xi >= 0.0 && xi <= 1.0)) throw DomainError("characteristic query outside [0,1]");
    if (xi > x) throw DomainError("characteristic query requires xi <= x");
    if (!(step > 0.0)) throw DomainError("characteristic step must be positive");
}

double sampled_min(const std::function<double(double)>& f) {
    double m = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 128; ++k) m = std::min(m, f(k / 128.0));
    return m;
}

struct Trajectory {
    std::vector<double> s, z, w;
};

struct Meeting {
    double t, z, w;
};

// Integrates (z, w) until gap(z, w) ≤ 0, then bisects on the length of a
// partial RK4 step from the last state before the crossing until
// |gap| ≤ crossing_tol. Re-integrating keeps the refinement clear of the
// speed clamping that the overshooting full step may hit.
Meeting integrate_until(Trajectory& tr, const std::function<double(double)>& fz,
                        const std::function<double(double)>& fw, double step, double s_max,
                        const std::function<double(double, double)>& gap) {
    if (gap(tr.z.back(), tr.w.back()) <= 0.0) return {0.0, tr.z.back(), tr.w.back()};
    for (;;) {
        const double s0 = tr.s.back();
        if (s0 > s_max) throw NonconvergenceError("characteristics do not cross; check the speed fields", s0);
        const double z0 = tr.z.back(), w0 = tr.w.back();
        const double z1 = rk4(fz, z0, step);
        const double w1 = rk4(fw, w0, step);
        if (gap(z1, w1) > 0.0) {
            tr.s.push_back(s0 + step);
            tr.z.push_back(z1);
            tr.w.push_back(w1);
            continue;
        }

        double lo = 0.0, hi = step, h = step, zm = z1, wm = w1;
        for (int it = 0; it < 200; ++it) {
            h = 0.5 * (lo + hi);
            zm = rk4(fz, z0, h);
            wm = rk4(fw, w0, h);
            const double g = gap(zm, wm);
            if (std::abs(g) <= crossing_tol) break;
            (g > 0.0 ? lo : hi) = h;
        }
        return {s0 + h, zm, wm};
    }
}

CharCrossing reversed(const Trajectory& tr, const Meeting& m, double x_end, double xi_end) {
    CharCrossing out;
    out.s_end = m.t;
    out.launch = m.z;
    out.path_s.push_back(0.0);
    out.path_x.push_back(m.z);
    out.path_xi.push_back(m.w);
    for (std::size_t k = tr.s.size(); k-- > 0;) {
        if (tr.s[k] >= m.t) continue;
        out.path_s.push_back(m.t - tr.s[k]);
        out.path_x.push_back(tr.z[k]);
        out.path_xi.push_back(tr.w[k]);
    }
    if (out.path_s.size() == 1 && m.t == 0.0) {
        out.path_x[0] = x_end;
        out.path_xi[0] = xi_end;
    }
    out.n_steps = static_cast<Index>(out.path_s.size()) - 1;
    return out;
}

}  // namespace

CharCrossing trace_f_curve(const PlantModel& model, double x, double xi, double y, double step) {
    check_query(x, xi, step);
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError("ensemble variable outside [0,1]");
    const double eps = sampled_min([&](double z) { return model.mu(z); }) +
                       sampled_min([&](double z) { return model.lambda(z, y); });
    if (!(eps > 0.0)) throw DomainError("characteristic speeds must be positive");

    std::function<double(double)> fz = [&](double z) { return -model.mu(clamp01(z)); };
    std::function<double(double)> fw = [&](double w) { return model.lambda(clamp01(w), y); };
    Trajectory tr{{0.0}, {x}, {xi}};
    const Meeting m = integrate_until(tr, fz, fw, step, 2.0 / eps, [](double z, double w) { return z - w; });
    return reversed(tr, m, x, xi);
}

CharCrossing trace_g_curve(const PlantModel& model, double x, double xi, double step) {
    check_query(x, xi, step);
    const double eps = sampled_min([&](double z) { return model.mu(z); });
    if (!(eps > 0.0)) throw DomainError("characteristic speeds must be positive");

    std::function<double(double)> f = [&](double z) { return -model.mu(clamp01(z)); };
    Trajectory tr{{0.0}, {x}, {xi}};
    const Meeting m = integrate_until(tr, f, f, step, 2.0 / eps, [](double, double w) { return w; });
    return reversed(tr, m, x, xi);
}

FlowTable::FlowTable(const std::function<double(double)>& speed, Index resolution) {
    const Index n = std::max<Index>(resolution, 16);
    dz_ = 1.0 / static_cast<double>(n);
    t_.resize(n + 1);
    dt_dz_.resize(n + 1);
    t_[0] = 0.0;
    for (Index k = 0; k <= n; ++k) dt_dz_[k] = 1.0 / speed(k * dz_);
    for (Index k = 0; k < n; ++k) {
        const double mid = 1.0 / speed((k + 0.5) * dz_);
        t_[k + 1] = t_[k] + dz_ / 6.0 * (dt_dz_[k] + 4.0 * mid + dt_dz_[k + 1]);
    }

    dtau_ = t_.back() / static_cast<double>(n);
    x_.resize(n + 1);
    dx_dtau_.resize(n + 1);
    std::function<double(double)> f = [&](double z) { return speed(clamp01(z)); };
    x_[0] = 0.0;
    for (Index k = 0; k < n; ++k) x_[k + 1] = rk4(f, x_[k], dtau_);
    for (Index k = 0; k <= n; ++k) dx_dtau_[k] = f(x_[k]);
}

namespace {
template <typename F>
double table_eval(const std::vector<double>& v, const std::vector<double>& dv, double h, double arg, F&& kernel) {
    const Index n = static_cast<Index>(v.size()) - 1;
    const double u = arg / h;
    const Index k = std::clamp<Index>(static_cast<Index>(u), 0, n - 1);
    const double t = std::clamp(u - static_cast<double>(k), 0.0, 1.0);
    return kernel(v[k], dv[k], v[k + 1], dv[k + 1], h, t);
}
}  // namespace

double FlowTable::time_to(double z) const { return table_eval(t_, dt_dz_, dz_, clamp01(z), hermite); }

double FlowTable::slowness(double z) const { return table_eval(t_, dt_dz_, dz_, clamp01(z), hermite_slope); }

double FlowTable::position_at(double tau) const {
    return table_eval(x_, dx_dtau_, dtau_, std::clamp(tau, 0.0, t_.back()), hermite);
}

CharacteristicFlows::CharacteristicFlows(const PlantModel& model, const GridSpec& grid, Index resolution) {
    const Index n = resolution > 0 ? resolution : std::max<Index>(4096, 8 * grid.nx);
    mu_ = FlowTable([&](double x) { return model.mu(x); }, n);
    const Index ny = grid.ny;
    RowMatrix lam(grid.nx + 1, ny);
    for (Index i = 0; i <= grid.nx; ++i)
        for (Index j = 0; j < ny; ++j) lam(i, j) = model.lambda(grid.x(i), grid.y(j));
    class_of_.assign(ny, 0);
    for (Index j = 0; j < ny; ++j) {
        Index cls = -1;
        for (std::size_t c = 0; c < representative_.size() && cls < 0; ++c) {
            if ((lam.col(representative_[c]).array() == lam.col(j).array()).all()) cls = static_cast<Index>(c);
        }
        if (cls < 0) {
            cls = static_cast<Index>(representative_.size());
            representative_.push_back(j);
            const double y = grid.y(j);
            lambda_.emplace_back([&](double x) { return model.lambda(x, y); }, n);
        }
        class_of_[j] = cls;
    }
}

FlowCrossing CharacteristicFlows::f_crossing(double x, double xi, Index cls) const {
    const FlowTable& lam = lambda_[cls];
    const double tmx = mu_.time_to(x);
    const double tlxi = lam.time_to(xi);
    auto phi = [&](double p) { return tmx - mu_.time_to(p) - lam.time_to(p) + tlxi; };

    double lo = xi, hi = x;
    double p = xi;
    if (x > xi) {
        // φ is decreasing with φ(ξ) ≥ 0 ≥ φ(x); safeguarded Newton
        const double f_lo = phi(lo), f_hi = phi(hi);
        p = lo + (hi - lo) * f_lo / (f_lo - f_hi);
        if (!(p >= lo && p <= hi)) p = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
            const double f = phi(p);
            if (f == 0.0) break;
            (f > 0.0 ? lo : hi) = p;
            const double slope = mu_.slowness(p) + lam.slowness(p);
            double next = p + f / slope;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - p) <= 1e-16 || hi - lo <= 1e-16) {
                p = next;
                break;
            }
            p = next;
        }
    }
    FlowCrossing c;
    c.launch = p;
    c.tau_x = mu_.time_to(p);
    c.tau_xi = lam.time_to(p);
    c.s_end = std::max(0.0, tmx - c.tau_x);
    return c;
}

FlowCrossing CharacteristicFlows::g_crossing(double x, double xi) const {
    FlowCrossing c;
    c.s_end = mu_.time_to(xi);
    c.tau_x = std::max(0.0, mu_.time_to(x) - c.s_end);
    c.tau_xi = 0.0;
    c.launch = mu_.position_at(c.tau_x);
    return c;
}

}  // namespace ebs
