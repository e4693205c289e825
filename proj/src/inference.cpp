#include "sembench/inference.hpp"

#include "sembench/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sembench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSingularHessian = 1e-6;

}  // namespace

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double chisq_sf(double x, int df) {
    if (df < 1) throw std::invalid_argument("chi-square degrees of freedom must be >= 1");
    if (!(x >= 0.0)) throw std::invalid_argument("chi-square statistic must be non-negative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double chi_square_stat(double f_min, int n) {
    return (n - 1) * f_min;
}

BaselineFit baseline_discrepancy(const CovInput& input) {
    const Eigen::MatrixXd& s = input.covariance;
    if (!is_positive_definite(s)) throw NotPositiveDefinite("sample covariance matrix is not positive definite");
    const Eigen::VectorXd inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd r = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
    const Eigen::LLT<Eigen::MatrixXd> llt(r);
    const double log_det_r = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const auto p = static_cast<int>(s.rows());
    return {chi_square_stat(-log_det_r, input.n), p * (p - 1) / 2};
}

FitIndices fit_indices(double chi2, int df, double baseline_chi2, int baseline_df, int n,
                       const FitIndexOptions& options) {
    if (df < 0) throw std::invalid_argument("model degrees of freedom must be >= 0");
    if (baseline_df < 1) throw std::invalid_argument("baseline degrees of freedom must be >= 1");

    FitIndices out;
    out.chi2 = chi2;
    out.df = df;
    out.baseline_chi2 = baseline_chi2;
    out.baseline_df = baseline_df;
    out.pvalue = df == 0 ? 1.0 : chisq_sf(std::max(chi2, 0.0), df);

    if (baseline_chi2 <= baseline_df) {
        out.cfi = kNaN;
        out.warnings.push_back("baseline model fits as well as its degrees of freedom allow; CFI undefined");
    } else {
        out.cfi = 1.0 - (chi2 - df) / (baseline_chi2 - baseline_df);
        if (options.clamp_cfi) out.cfi = std::clamp(out.cfi, 0.0, 1.0);
    }

    if (df == 0) {
        out.rmsea = 0.0;
        out.warnings.push_back("model has zero degrees of freedom; RMSEA reported as 0");
    } else {
        out.rmsea = std::sqrt(std::max(chi2 - df, 0.0) / (static_cast<double>(df) * (n - 1)));
    }
    return out;
}

Eigen::MatrixXd discrepancy_hessian(const RamMatrices& ram, const Eigen::VectorXd& theta, const CovInput& input) {
    const MlObjective objective(ram, input);
    const auto k = theta.size();
    Eigen::MatrixXd h(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double step = 1e-4 * std::max(1.0, std::abs(theta(j)));
        bool done = false;
        for (int attempt = 0; attempt < 4 && !done; ++attempt, step *= 0.5) {
            Eigen::VectorXd plus = theta;
            Eigen::VectorXd minus = theta;
            plus(j) += step;
            minus(j) -= step;
            if (!std::isfinite(objective.value(plus)) || !std::isfinite(objective.value(minus))) continue;
            h.col(j) = (objective.gradient(plus) - objective.gradient(minus)) / (2.0 * step);
            done = true;
        }
        if (!done) {
            throw NotPositiveDefinite("implied covariance left the positive definite region while differencing " +
                                      ram.parameters[j].label);
        }
    }
    return 0.5 * (h + h.transpose());
}

StandardErrors standard_errors_from_hessian(const Eigen::MatrixXd& hessian, int n) {
    StandardErrors out;
    const auto k = hessian.rows();
    out.se = Eigen::VectorXd::Constant(k, kNaN);
    if (k == 0) return out;

    // Judge singularity on the unit-diagonal rescaling so parameter units do not matter;
    // differencing noise in a null direction sits around 1e-9 relative.
    const Eigen::VectorXd diag = hessian.diagonal();
    bool singular = !hessian.allFinite() || (diag.array() <= 0.0).any();
    if (!singular) {
        const Eigen::VectorXd inv_sqrt = diag.cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd scaled = inv_sqrt.asDiagonal() * hessian * inv_sqrt.asDiagonal();
        singular = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(scaled, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() <=
                   kSingularHessian;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    const auto& ev = eig.eigenvalues();
    if (singular) {
        out.warnings.push_back(
            "Hessian of the discrepancy is singular or not positive definite; possible under-identification");
        return out;
    }
    const Eigen::MatrixXd inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    out.se = ((2.0 / (n - 1)) * inv.diagonal()).cwiseSqrt();
    return out;
}

StandardErrors standard_errors(const RamMatrices& ram, const Eigen::VectorXd& theta, const CovInput& input,
                               Information information) {
    try {
        if (information == Information::Expected) {
            CovInput implied = input;
            implied.covariance = implied_covariance(ram, theta);
            if (!is_positive_definite(implied.covariance)) {
                throw NotPositiveDefinite("implied covariance matrix is not positive definite at the estimate");
            }
            return standard_errors_from_hessian(discrepancy_hessian(ram, theta, implied), input.n);
        }
        return standard_errors_from_hessian(discrepancy_hessian(ram, theta, input), input.n);
    } catch (const NumericalError& e) {
        StandardErrors out;
        out.se = Eigen::VectorXd::Constant(theta.size(), kNaN);
        out.warnings.push_back(std::string("standard errors unavailable: ") + e.what());
        return out;
    }
}

std::vector<ParameterTest> parameter_tests(std::span<const double> estimates, std::span<const double> ses) {
    if (estimates.size() != ses.size()) throw std::invalid_argument("estimates and standard errors differ in length");
    std::vector<ParameterTest> out;
    out.reserve(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        ParameterTest t;
        t.estimate = estimates[i];
        t.se = ses[i];
        if (std::isnan(t.se)) {
            t.z = kNaN;
            t.pvalue = kNaN;
        } else if (t.se == 0.0) {
            t.z = std::copysign(std::numeric_limits<double>::infinity(), t.estimate);
            t.pvalue = 0.0;
        } else {
            t.z = t.estimate / t.se;
            t.pvalue = 2.0 * (1.0 - normal_cdf(std::abs(t.z)));
        }
        out.push_back(t);
    }
    return out;
}

double StandardizedSolution::correlation(std::string_view a, std::string_view b) const {
    auto index = [this](std::string_view name) {
        for (std::size_t i = 0; i < latent_names.size(); ++i) {
            if (latent_names[i] == name) return static_cast<Eigen::Index>(i);
        }
        throw std::out_of_range("unknown latent '" + std::string(name) + "'");
    };
    return latent_correlations(index(a), index(b));
}

StandardizedSolution standardized_solution(const RamMatrices& ram, const Eigen::VectorXd& theta) {
    StandardizedSolution out;
    const Eigen::MatrixXd total = implied_full_covariance(ram, theta);
    const Eigen::MatrixXd a = ram.a_matrix(theta);
    const Eigen::MatrixXd s = ram.s_matrix(theta);
    bool heywood = false;

    auto sd = [&](int i) {
        if (!(total(i, i) > 0.0)) {
            heywood = true;
            return kNaN;
        }
        return std::sqrt(total(i, i));
    };

    out.estimates.resize(ram.parameter_count());
    for (int j = 0; j < ram.parameter_count(); ++j) {
        const auto& info = ram.parameters[j];
        switch (info.kind) {
            case ParameterKind::Loading:
            case ParameterKind::Regression:
                out.estimates(j) = theta(j) * sd(info.col) / sd(info.row);
                break;
            case ParameterKind::Variance:
                sd(info.row);
                out.estimates(j) = total(info.row, info.row) > 0.0 ? theta(j) / total(info.row, info.row) : kNaN;
                break;
            case ParameterKind::Covariance: {
                const double vr = s(info.row, info.row);
                const double vc = s(info.col, info.col);
                if (vr > 0.0 && vc > 0.0) {
                    out.estimates(j) = theta(j) / std::sqrt(vr * vc);
                } else {
                    heywood = true;
                    out.estimates(j) = kNaN;
                }
                break;
            }
        }
    }

    const int p = ram.observed_count;
    for (int l = 0; l < ram.latent_count; ++l) {
        out.latent_names.push_back(ram.variables[p + l]);
        for (int i = 0; i < p; ++i) {
            if (a(i, p + l) != 0.0) {
                out.loadings.push_back({ram.variables[p + l], ram.variables[i], a(i, p + l) * sd(p + l) / sd(i)});
            }
        }
    }
    const int q = ram.latent_count;
    out.latent_correlations.resize(q, q);
    for (int r = 0; r < q; ++r) {
        for (int c = 0; c < q; ++c) {
            out.latent_correlations(r, c) = total(p + r, p + c) / (sd(p + r) * sd(p + c));
        }
    }
    if (heywood) out.warnings.push_back("Heywood case: non-positive variance in the standardized solution");
    return out;
}

}  // namespace sembench
