#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ebs/grid.hpp"

namespace ebs {

/// Coefficients of one ensemble plant
///   u_t + λ u_x = ∫ θ(x,y,η) u(η) dη + W v,   v_t − μ v_x = ∫ Ξ u dy,
///   u(t,0,y) = q(y) v(t,0),                     v(t,1) = U(t).
/// The operator L is multiplication by λ; it is never discretized as a delta kernel.
struct PlantModel {
    std::string name;
    std::function<double(double x, double y)> lambda;
    std::function<double(double x)> mu;
    std::function<double(double x, double y, double eta)> theta;
    std::function<double(double x, double y)> w;
    std::function<double(double x, double y)> xi;
    std::function<double(double y)> q;
    // Optional analytic derivatives; finite differences of the samples are used otherwise.
    std::function<double(double x, double y)> lambda_x;
    std::function<double(double x)> mu_x;
};

/// Scalar multipliers applied to a builtin model's coefficients.
struct ModelScaling {
    double lambda = 1.0;
    double mu = 1.0;
    double theta = 1.0;
    double w = 1.0;
    double xi = 1.0;
    double q = 1.0;
};

/// Grid samples of a PlantModel. Field rows are x-nodes, columns y-nodes;
/// theta[i](j, m) = θ(x_i, y_j, y_m).
struct SampledCoefficients {
    GridSpec grid;
    RowMatrix lambda;
    Eigen::VectorXd mu;
    std::vector<Eigen::MatrixXd> theta;
    RowMatrix w;
    RowMatrix xi;
    Eigen::VectorXd q;
    RowMatrix lambda_x;
    Eigen::VectorXd mu_x;
    Eigen::VectorXd y_weights;
    double mu_lower_bound = 0.0;
    double lambda_lower_bound = 0.0;
    double max_speed = 0.0;
    bool lambda_uniform_in_y = false;
    bool theta_zero = false;
};

/// Samples every coefficient on the grid. Throws DomainError if λ or μ is not
/// strictly positive at some node.
SampledCoefficients sample(const PlantModel& model, const GridSpec& grid);

/// Θ(x_i){a}(y) = ∫ θ(x_i,y,η) a(η) dη.
Eigen::VectorXd apply_theta(const SampledCoefficients& coeff, Index x_index,
                            const Eigen::Ref<const Eigen::VectorXd>& a);

/// Θᵗ(x_i){a}(y) = ∫ θ(x_i,η,y) a(η) dη.
Eigen::VectorXd apply_theta_transpose(const SampledCoefficients& coeff, Index x_index,
                                      const Eigen::Ref<const Eigen::VectorXd>& a);

/// Closed-form kernel pair (k, k̃).
struct AnalyticKernels {
    std::function<double(double x, double xi, double y)> k;
    std::function<double(double x, double xi)> ktilde;
};

/// λ = μ = 1, θ = x³(x+1)(y−½)(η−½), W = x(x+1)(y−½)eˣ,
/// Ξ = −70 e^{35x/π²} y(y−1), q = cos 2πy.
PlantModel toy_model();

/// λ = μ = 1 with every coupling and the boundary gain q set to zero.
PlantModel pure_transport_model();

/// k = 35 y(y−1) e^{35ξ/π²}, k̃ = 35/(2π²).
AnalyticKernels toy_analytic_kernels();

PlantModel scaled(PlantModel model, const ModelScaling& s);

/// "toy" or "pure-transport"; throws ConfigError otherwise.
PlantModel builtin_model(std::string_view name, const ModelScaling& s = {});

}  // namespace ebs
