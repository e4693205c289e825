#pragma once

#include "sembench/dataset.hpp"
#include "sembench/ram.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace sembench {

struct FitOptions {
    int max_iter = 1000;
    double tol = 1e-8;        // on |f_k - f_{k-1}|
    double grad_tol = 1e-5;   // on the Euclidean gradient norm
    int restarts = 0;         // extra jittered starts
    std::uint64_t seed = 0;   // jitter seed for restarts
    GradientMethod gradient = GradientMethod::Analytic;
};

struct FitResult {
    Eigen::VectorXd theta;
    double f_min = 0.0;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    std::vector<std::string> warnings;
};

/// Starting point: free loadings 1, regressions and covariances 0, observed variances
/// 0.5 * diag(S), latent variances 0.5 * the variance of the latent's first indicator.
Eigen::VectorXd initial_values(const RamMatrices& ram, const CovInput& input);

/// Minimizes F_ML with BFGS and Armijo backtracking; inadmissible trial points count as
/// +infinity. Converged when |delta f| <= tol and the gradient norm <= grad_tol. Throws
/// NotPositiveDefinite when the starting point is inadmissible.
FitResult fit_ml(const RamMatrices& ram, const CovInput& input, const FitOptions& options = {});

/// Single BFGS run from an explicit start.
FitResult minimize_from(const MlObjective& objective, const Eigen::VectorXd& start, const FitOptions& options);

}  // namespace sembench
