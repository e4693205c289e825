#include "sembench/simulate.hpp"

#include "sembench/errors.hpp"
#include "sembench/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace sembench {

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) throw std::invalid_argument("cholesky_factor: matrix is not square");
    if (sigma != sigma.transpose()) throw NotPositiveDefinite("cholesky_factor: matrix is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success || !is_positive_definite(sigma)) {
        throw NotPositiveDefinite("cholesky_factor: matrix is not positive definite");
    }
    return llt.matrixL();
}

double NormalGenerator::uniform_open() {
    // 53 random bits mapped to (0, 1]
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double NormalGenerator::operator()() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
    const double angle = 2.0 * std::numbers::pi * uniform_open();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

ScoreTable sample_scores(const TrueModel& model) {
    if (model.n < 1) throw std::invalid_argument("number of simulated rows must be at least 1");
    const Eigen::MatrixXd lower = cholesky_factor(implied_covariance(model.ram, model.theta));
    const int p = model.ram.observed_count;

    ScoreTable table;
    table.columns.assign(model.ram.variables.begin(), model.ram.variables.begin() + p);
    table.values.resize(model.n, p);
    table.missing.setConstant(model.n, p, false);

    const int width = std::max(4, static_cast<int>(std::to_string(model.n).size()));
    NormalGenerator normal(model.seed);
    Eigen::VectorXd z(p);
    for (int i = 0; i < model.n; ++i) {
        for (int j = 0; j < p; ++j) z(j) = normal();
        table.values.row(i) = (lower * z).transpose();
        const std::string number = std::to_string(i + 1);
        table.row_ids.push_back("sim_" + std::string(width - number.size(), '0') + number);
    }
    return table;
}

namespace {

RecoveryRun run_one(const ModelSpec& spec, const RamMatrices& ram, const Eigen::VectorXd& theta_true, int n,
                    std::uint64_t seed, const FitOptions& options) {
    RecoveryRun run;
    run.seed = seed;
    try {
        const ScoreTable table = sample_scores({ram, theta_true, n, seed});
        const CovInput input = align_and_covariance(table, spec);
        const FitResult fit = fit_ml(ram, input, options);
        const StandardizedSolution standardized = standardized_solution(ram, fit.theta);
        const auto q = standardized.latent_correlations.rows();
        run.latent_correlations.resize(q * (q - 1) / 2);
        Eigen::Index at = 0;
        for (Eigen::Index r = 0; r < q; ++r) {
            for (Eigen::Index c = r + 1; c < q; ++c) run.latent_correlations(at++) = standardized.latent_correlations(r, c);
        }
        run.theta = fit.theta;
        run.converged = fit.converged;
    } catch (const std::exception& e) {
        run.error = e.what();
        run.theta.resize(0);
        run.latent_correlations.resize(0);
    }
    return run;
}

void mean_and_sd(const std::vector<const Eigen::VectorXd*>& samples, Eigen::Index size, Eigen::VectorXd& mean,
                 Eigen::VectorXd& sd) {
    mean = Eigen::VectorXd::Zero(size);
    sd = Eigen::VectorXd::Zero(size);
    if (samples.empty()) return;
    for (const auto* s : samples) mean += *s;
    mean /= static_cast<double>(samples.size());
    if (samples.size() < 2) return;
    for (const auto* s : samples) sd += (*s - mean).cwiseAbs2();
    sd = (sd / static_cast<double>(samples.size() - 1)).cwiseSqrt();
}

}  // namespace

RecoveryStudy recovery_study(const ModelSpec& spec, const Eigen::VectorXd& theta_true, int n,
                             std::span<const std::uint64_t> seeds, const FitOptions& options) {
    const RamMatrices ram = build_ram(spec);
    if (theta_true.size() != ram.parameter_count()) {
        throw std::invalid_argument("true parameter vector has length " + std::to_string(theta_true.size()) +
                                    ", model has " + std::to_string(ram.parameter_count()) + " free parameters");
    }

    RecoveryStudy study;
    study.runs.resize(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            study.runs[i] = run_one(spec, ram, theta_true, n, seeds[i], options);
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(seeds.size(), std::max(1u, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    auto& summary = study.summary;
    for (const auto& info : ram.parameters) summary.parameter_labels.push_back(info.label);
    for (std::size_t r = 0; r < spec.latents.size(); ++r) {
        for (std::size_t c = r + 1; c < spec.latents.size(); ++c) {
            summary.correlation_labels.push_back(spec.latents[r] + "~~" + spec.latents[c]);
        }
    }
    std::vector<const Eigen::VectorXd*> thetas;
    std::vector<const Eigen::VectorXd*> correlations;
    for (const auto& run : study.runs) {
        if (!run.error.empty()) continue;
        thetas.push_back(&run.theta);
        correlations.push_back(&run.latent_correlations);
    }
    summary.runs_used = static_cast<int>(thetas.size());
    if (!thetas.empty()) {
        mean_and_sd(thetas, ram.parameter_count(), summary.parameter_mean, summary.parameter_sd);
        mean_and_sd(correlations, static_cast<Eigen::Index>(summary.correlation_labels.size()),
                    summary.correlation_mean, summary.correlation_sd);
    }
    return study;
}

}  // namespace sembench
