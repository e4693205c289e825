#include "sembench/optimizer.hpp"

#include "sembench/errors.hpp"

#include <cmath>
#include <random>

namespace sembench {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
// Once converged, keep stepping (up to kPolishSteps) until the gradient norm falls below
// grad_tol * kPolishFactor. The converged flag still follows the documented rule.
constexpr int kPolishSteps = 20;
constexpr double kPolishFactor = 1e-3;

Eigen::VectorXd objective_gradient(const MlObjective& objective, const Eigen::VectorXd& theta,
                                   GradientMethod method) {
    if (method == GradientMethod::Analytic) return objective.gradient(theta);
    return discrepancy_gradient(objective.ram(), theta, objective.input(), method);
}

bool is_variance(const ParameterInfo& info) {
    return info.kind == ParameterKind::Variance;
}

Eigen::VectorXd jittered(const RamMatrices& ram, const Eigen::VectorXd& start, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd out = start;
    for (int j = 0; j < ram.parameter_count(); ++j) {
        const double z = normal(rng);
        if (is_variance(ram.parameters[j])) {
            out(j) = start(j) * std::exp(0.3 * z);
        } else {
            out(j) = start(j) + 0.3 * z;
        }
    }
    return out;
}

}  // namespace

Eigen::VectorXd initial_values(const RamMatrices& ram, const CovInput& input) {
    const int p = ram.observed_count;
    Eigen::VectorXd theta(ram.parameter_count());
    for (int j = 0; j < ram.parameter_count(); ++j) {
        const auto& info = ram.parameters[j];
        switch (info.kind) {
            case ParameterKind::Loading:
                theta(j) = 1.0;
                break;
            case ParameterKind::Regression:
            case ParameterKind::Covariance:
                theta(j) = 0.0;
                break;
            case ParameterKind::Variance:
                if (info.row < p) {
                    theta(j) = 0.5 * input.covariance(info.row, info.row);
                } else {
                    const int marker = ram.first_indicator[info.row - p];
                    theta(j) = marker >= 0 ? 0.5 * input.covariance(marker, marker) : 1.0;
                }
                break;
        }
    }
    return theta;
}

FitResult minimize_from(const MlObjective& objective, const Eigen::VectorXd& start, const FitOptions& options) {
    FitResult result;
    Eigen::VectorXd x = start;
    double f = objective.value(x);
    if (!std::isfinite(f)) {
        throw NotPositiveDefinite("implied covariance is not positive definite at the starting values");
    }
    const auto k = x.size();
    Eigen::VectorXd g = objective_gradient(objective, x, options.gradient);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(k, k);
    bool fresh_hessian = true;

    int iter = 0;
    bool converged = k == 0 || g.norm() <= options.grad_tol * kPolishFactor;
    int polish = 0;
    while (iter < options.max_iter) {
        if (converged && (g.norm() <= options.grad_tol * kPolishFactor || polish >= kPolishSteps)) break;
        if (converged) ++polish;
        Eigen::VectorXd direction = -h_inv * g;
        double slope = g.dot(direction);
        if (!(slope < 0.0)) {
            h_inv.setIdentity();
            fresh_hessian = true;
            direction = -g;
            slope = -g.squaredNorm();
        }

        double step = 1.0;
        Eigen::VectorXd x_new;
        double f_new = f;
        bool accepted = false;
        for (int halving = 0; halving < kMaxHalvings; ++halving, step *= 0.5) {
            x_new = x + step * direction;
            f_new = objective.value(x_new);
            if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (fresh_hessian) break;  // steepest descent made no progress either
            h_inv.setIdentity();
            fresh_hessian = true;
            continue;
        }
        ++iter;

        const Eigen::VectorXd g_new = objective_gradient(objective, x_new, options.gradient);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh_hessian) {
                h_inv *= sy / y.squaredNorm();
                fresh_hessian = false;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd i_k = Eigen::MatrixXd::Identity(k, k);
            h_inv = (i_k - rho * s * y.transpose()) * h_inv * (i_k - rho * y * s.transpose()) +
                    rho * s * s.transpose();
        }

        const double df = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        converged = converged || (std::abs(df) <= options.tol && g.norm() <= options.grad_tol);
    }
    if (!converged && g.norm() <= options.grad_tol && iter < options.max_iter) {
        // line search stalled at a stationary point
        converged = true;
    }
    converged = converged && (k == 0 || g.norm() <= options.grad_tol);

    result.theta = x;
    result.f_min = f;
    result.iterations = iter;
    result.gradient_norm = g.norm();
    result.converged = converged;
    if (!converged) {
        result.warnings.push_back("optimizer did not converge after " + std::to_string(iter) +
                                  " iteration(s); gradient norm " + std::to_string(result.gradient_norm));
    }
    return result;
}

FitResult fit_ml(const RamMatrices& ram, const CovInput& input, const FitOptions& options) {
    const MlObjective objective(ram, input);
    const Eigen::VectorXd start = initial_values(ram, input);
    FitResult best = minimize_from(objective, start, options);

    for (int r = 0; r < options.restarts; ++r) {
        const Eigen::VectorXd alt_start = jittered(ram, start, options.seed + static_cast<std::uint64_t>(r));
        if (!std::isfinite(objective.value(alt_start))) continue;
        FitResult candidate = minimize_from(objective, alt_start, options);
        const bool better = (candidate.converged && !best.converged) ||
                            (candidate.converged == best.converged &&
                             (candidate.f_min < best.f_min ||
                              (candidate.f_min == best.f_min && candidate.iterations < best.iterations)));
        if (better) best = std::move(candidate);
    }

    for (int j = 0; j < ram.parameter_count(); ++j) {
        if (is_variance(ram.parameters[j]) && best.theta(j) < 0.0) {
            best.warnings.push_back("Heywood case: negative variance estimate for " + ram.parameters[j].label);
        }
    }
    return best;
}

}  // namespace sembench
