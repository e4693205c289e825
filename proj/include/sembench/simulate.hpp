#pragma once

#include "sembench/dataset.hpp"
#include "sembench/model_spec.hpp"
#include "sembench/optimizer.hpp"
#include "sembench/ram.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sembench {

/// Lower-triangular L with L L^T = sigma. Throws NotPositiveDefinite.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma);

/// Standard normal draws: mt19937_64 feeding the Box-Muller transform. The second
/// variate of each pair is cached.
class NormalGenerator {
public:
    explicit NormalGenerator(std::uint64_t seed) : engine_(seed) {}

    double operator()();

private:
    double uniform_open();  // (0, 1]

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct TrueModel {
    RamMatrices ram;
    Eigen::VectorXd theta;
    int n = 0;
    std::uint64_t seed = 0;
};

/// n independent rows x = L z, z ~ N(0, I), with row ids sim_0001, sim_0002, ...
/// Throws std::invalid_argument for n < 1 and NotPositiveDefinite if Sigma(theta) is not PD.
ScoreTable sample_scores(const TrueModel& model);

struct RecoveryRun {
    std::uint64_t seed = 0;
    Eigen::VectorXd theta;                // estimates (empty on error)
    Eigen::VectorXd latent_correlations;  // upper triangle, row-major
    bool converged = false;
    std::string error;
};

struct RecoverySummary {
    int runs_used = 0;  // runs without an error
    std::vector<std::string> parameter_labels;
    Eigen::VectorXd parameter_mean;
    Eigen::VectorXd parameter_sd;
    std::vector<std::string> correlation_labels;
    Eigen::VectorXd correlation_mean;
    Eigen::VectorXd correlation_sd;
};

struct RecoveryStudy {
    std::vector<RecoveryRun> runs;
    RecoverySummary summary;
};

/// For every seed: simulate n rows from (spec, theta_true), fit, record estimates and
/// latent correlations. Failures are recorded per run and excluded from the summary.
/// Seeds run on a small thread pool; results do not depend on scheduling.
RecoveryStudy recovery_study(const ModelSpec& spec, const Eigen::VectorXd& theta_true, int n,
                             std::span<const std::uint64_t> seeds, const FitOptions& options = {});

}  // namespace sembench
