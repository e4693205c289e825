#pragma once

#include "sembench/dataset.hpp"
#include "sembench/ram.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace sembench {

/// Standard normal CDF, via std::erfc.
double normal_cdf(double z);

/// Upper tail of the chi-square distribution, Q(df/2, x/2). Throws std::invalid_argument
/// for df < 1 or x < 0.
double chisq_sf(double x, int df);

/// T = (n - 1) * F_ML
double chi_square_stat(double f_min, int n);

struct BaselineFit {
    double chi2 = 0.0;
    int df = 0;
};

/// Independence model. Its ML optimum is diag(S), so F_b = -ln det R for the sample
/// correlation matrix R and df_b = p(p - 1)/2.
BaselineFit baseline_discrepancy(const CovInput& input);

struct FitIndices {
    double chi2 = 0.0;
    int df = 0;
    double pvalue = 1.0;
    double baseline_chi2 = 0.0;
    int baseline_df = 0;
    double cfi = 0.0;
    double rmsea = 0.0;
    std::vector<std::string> warnings;
};

struct FitIndexOptions {
    bool clamp_cfi = false;
};

/// CFI = 1 - (T - df)/(T_b - df_b), left unclamped unless requested, so it can exceed 1.
/// RMSEA = sqrt(max(T - df, 0) / (df (n - 1))), reported as 0 for df = 0.
FitIndices fit_indices(double chi2, int df, double baseline_chi2, int baseline_df, int n,
                       const FitIndexOptions& options = {});

/// Central-difference Hessian of F_ML built from the analytic gradient, step
/// 1e-4 * max(1, |theta_j|), symmetrized.
Eigen::MatrixXd discrepancy_hessian(const RamMatrices& ram, const Eigen::VectorXd& theta, const CovInput& input);

struct StandardErrors {
    Eigen::VectorXd se;
    std::vector<std::string> warnings;
};

/// SE_j = sqrt([2/(n - 1) H^-1]_jj). H counts as singular when its unit-diagonal rescaling
/// has an eigenvalue <= 1e-6; a singular or indefinite H gives NaN everywhere and a warning.
StandardErrors standard_errors_from_hessian(const Eigen::MatrixXd& hessian, int n);

enum class Information {
    Expected,  // Hessian of F_ML with S replaced by Sigma(theta)
    Observed,  // Hessian of F_ML at the sample covariance
};

/// Both variants difference the same discrepancy; they differ only in the covariance the
/// Hessian is taken against. At an exact fit they coincide.
StandardErrors standard_errors(const RamMatrices& ram, const Eigen::VectorXd& theta, const CovInput& input,
                               Information information = Information::Expected);

struct ParameterTest {
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double pvalue = 1.0;
};

/// Wald tests: z = estimate / se, p = 2 (1 - Phi(|z|)).
std::vector<ParameterTest> parameter_tests(std::span<const double> estimates, std::span<const double> ses);

struct StandardizedLoading {
    std::string latent;
    std::string indicator;
    double value = 0.0;
};

struct StandardizedSolution {
    Eigen::VectorXd estimates;  // one per free parameter
    std::vector<StandardizedLoading> loadings;
    std::vector<std::string> latent_names;
    Eigen::MatrixXd latent_correlations;
    std::vector<std::string> warnings;

    /// Correlation between two latents by name; throws std::out_of_range if unknown.
    double correlation(std::string_view a, std::string_view b) const;
};

/// Rescales every variable to unit model-implied variance. Paths become
/// lambda * sd(source) / sd(target), covariances become correlations of the matching
/// residual terms, variances become proportions of total variance. Non-positive
/// variances yield NaN and a Heywood warning.
StandardizedSolution standardized_solution(const RamMatrices& ram, const Eigen::VectorXd& theta);

}  // namespace sembench
