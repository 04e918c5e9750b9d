#pragma once

#include <functional>
#include <vector>

#include "ebs/model.hpp"

namespace ebs {

/// A traced characteristic pair in forward parametrization.
/// F-type: path_x = x̂(s), path_xi = ξ̂(s), launch = x̂₀, s_end = s_f.
/// G-type: path_x = χ(s),  path_xi = ζ(s),  launch = χ₀, s_end = s_F.
struct CharCrossing {
    double s_end = 0.0;
    double launch = 0.0;
    std::vector<double> path_s;
    std::vector<double> path_x;
    std::vector<double> path_xi;
    Index n_steps = 0;
};

/// Traces z' = −μ(z) from x and w' = λ(w,y) from ξ with RK4 of the given step
/// until w meets z, refines the meeting time by bisection on the cubic Hermite
/// interpolants, and returns the curves reversed so that s runs from the
/// diagonal launch point (s = 0) to (x, ξ) (s = s_f).
CharCrossing trace_f_curve(const PlantModel& model, double x, double xi, double y, double step);

/// Traces z' = −μ(z) from x and w' = −μ(w) from ξ until w reaches 0.
CharCrossing trace_g_curve(const PlantModel& model, double x, double xi, double step);

/// Tabulated flow dz/dτ = c(z) on [0,1] started at z = 0: the arrival time
/// T(z) = ∫₀^z dζ/c(ζ) and its inverse X(τ), both as cubic Hermite tables.
class FlowTable {
public:
    FlowTable() = default;
    FlowTable(const std::function<double(double)>& speed, Index resolution);

    double time_to(double z) const;
    double position_at(double tau) const;
    double total_time() const { return t_.back(); }
    /// 1/c(z) from the table.
    double slowness(double z) const;

private:
    double dz_ = 0.0;
    double dtau_ = 0.0;
    std::vector<double> t_, dt_dz_;
    std::vector<double> x_, dx_dtau_;
};

/// Crossing of a characteristic pair expressed in flow time.
struct FlowCrossing {
    double s_end = 0.0;
    double launch = 0.0;
    double tau_x = 0.0;   // flow time of the x-component at s = 0
    double tau_xi = 0.0;  // flow time of the ξ-component at s = 0
};

/// Flow tables for μ and for λ(·,y), shared across y-nodes whose λ profiles
/// coincide. Replaces per-node path storage for the kernel solver: any point of
/// any characteristic is two table lookups.
class CharacteristicFlows {
public:
    CharacteristicFlows(const PlantModel& model, const GridSpec& grid, Index resolution = 0);

    Index classes() const { return static_cast<Index>(lambda_.size()); }
    Index y_class(Index y_index) const { return class_of_[y_index]; }
    /// A y-node representative of the class.
    Index representative(Index cls) const { return representative_[cls]; }

    FlowCrossing f_crossing(double x, double xi, Index cls) const;
    FlowCrossing g_crossing(double x, double xi) const;

    /// x̂(s) and ξ̂(s) on an F-type curve.
    double f_x(const FlowCrossing& c, double s) const { return mu_.position_at(c.tau_x + s); }
    double f_xi(const FlowCrossing& c, double s, Index cls) const {
        return lambda_[cls].position_at(c.tau_xi - s);
    }
    /// χ(s) and ζ(s) on a G-type curve.
    double g_x(const FlowCrossing& c, double s) const { return mu_.position_at(c.tau_x + s); }
    double g_xi(double s) const { return mu_.position_at(s); }

private:
    FlowTable mu_;
    std::vector<FlowTable> lambda_;
    std::vector<Index> class_of_;
    std::vector<Index> representative_;
};

}  // namespace ebs
