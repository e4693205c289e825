#pragma once

#include "sembench/dataset.hpp"
#include "sembench/model_spec.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sembench {

enum class RamMatrix { A, S };

/// One cell of A or S driven by a free parameter.
struct ParameterEntry {
    RamMatrix matrix;
    int row;
    int col;
    int index;
};

struct ParameterInfo {
    std::string label;
    ParameterKind kind;
    int row;  // variable indices into RamMatrices::variables
    int col;
};

/// Reticular action model: Sigma = F (I - A)^-1 S (I - A)^-T F^T.
///
/// Variables are ordered observed first, then latents. A(i, j) is the path from j to i,
/// so a loading of indicator x on latent L sits at A(x, L). Symmetric free entries in S
/// appear twice in `entries` with the same index.
struct RamMatrices {
    int observed_count = 0;
    int latent_count = 0;
    std::vector<std::string> variables;
    Eigen::MatrixXd a_fixed;  // fixed values, zero at free cells
    Eigen::MatrixXd s_fixed;
    Eigen::MatrixXd filter;   // F, p x m
    std::vector<ParameterEntry> entries;
    std::vector<ParameterInfo> parameters;
    std::vector<int> first_indicator;  // per latent, variable index of its first listed indicator

    int size() const { return observed_count + latent_count; }
    int parameter_count() const { return static_cast<int>(parameters.size()); }

    Eigen::MatrixXd a_matrix(const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd s_matrix(const Eigen::VectorXd& theta) const;
    int variable_index(std::string_view name) const;  // -1 if absent
};

RamMatrices build_ram(const ModelSpec& spec);

/// Model-implied covariance of the observed variables (exactly symmetric). Throws
/// std::invalid_argument on a wrong-length theta and NumericalError if I - A is singular.
Eigen::MatrixXd implied_covariance(const RamMatrices& ram, const Eigen::VectorXd& theta);

/// Implied covariance of all m variables, observed and latent.
Eigen::MatrixXd implied_full_covariance(const RamMatrices& ram, const Eigen::VectorXd& theta);

/// F_ML = ln|Sigma| - ln|S| + tr(S Sigma^-1) - p. Throws NotPositiveDefinite when either
/// matrix fails the PD test (smallest eigenvalue > 1e-12 * largest).
double ml_discrepancy(const Eigen::MatrixXd& sigma, const CovInput& input);

enum class GradientMethod {
    CentralDifference,
    Analytic,
};

/// dF_ML/dtheta. Central differences use h_j = 1e-6 * max(1, |theta_j|), halving h up to
/// three times when a perturbed point leaves the PD region.
Eigen::VectorXd discrepancy_gradient(const RamMatrices& ram, const Eigen::VectorXd& theta, const CovInput& input,
                                     GradientMethod method = GradientMethod::CentralDifference);

/// Reusable evaluator for one (model, data) pair; caches the sample-side terms. Holds
/// references, so `ram` and `input` must outlive it.
class MlObjective {
public:
    MlObjective(const RamMatrices& ram, const CovInput& input);

    /// F_ML at theta, or +infinity when Sigma(theta) is not PD or I - A is singular.
    double value(const Eigen::VectorXd& theta) const;

    /// Analytic gradient tr(W dSigma/dtheta_k), W = Sigma^-1 (Sigma - S) Sigma^-1.
    /// Throws NotPositiveDefinite outside the admissible region.
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;

    const RamMatrices& ram() const { return ram_; }
    const CovInput& input() const { return input_; }

private:
    const RamMatrices& ram_;
    const CovInput& input_;
    double log_det_sample_ = 0.0;
};

/// True when the symmetric matrix passes the PD tolerance test.
bool is_positive_definite(const Eigen::MatrixXd& m);

}  // namespace sembench
