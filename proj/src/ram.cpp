#include "sembench/ram.hpp"

#include "sembench/errors.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace sembench {

namespace {

void check_theta(const RamMatrices& ram, const Eigen::VectorXd& theta) {
    if (theta.size() != ram.parameter_count()) {
        throw std::invalid_argument("parameter vector has length " + std::to_string(theta.size()) + ", expected " +
                                    std::to_string(ram.parameter_count()));
    }
}

// (I - A)^-1, or nullopt if singular.
std::optional<Eigen::MatrixXd> path_inverse(const RamMatrices& ram, const Eigen::VectorXd& theta) {
    const int m = ram.size();
    const Eigen::MatrixXd i_minus_a = Eigen::MatrixXd::Identity(m, m) - ram.a_matrix(theta);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(i_minus_a);
    if (!lu.isInvertible()) return std::nullopt;
    return lu.inverse();
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

struct Evaluation {
    Eigen::MatrixXd paths;  // (I - A)^-1
    Eigen::MatrixXd sigma;
    Eigen::LLT<Eigen::MatrixXd> llt;
};

std::optional<Evaluation> evaluate(const RamMatrices& ram, const Eigen::VectorXd& theta) {
    auto paths = path_inverse(ram, theta);
    if (!paths) return std::nullopt;
    const Eigen::MatrixXd projected = ram.filter * *paths;
    Eigen::MatrixXd sigma = symmetrized(projected * ram.s_matrix(theta) * projected.transpose());
    if (!is_positive_definite(sigma)) return std::nullopt;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) return std::nullopt;
    return Evaluation{std::move(*paths), std::move(sigma), std::move(llt)};
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double sample_log_det(const CovInput& input) {
    if (!is_positive_definite(input.covariance)) {
        throw NotPositiveDefinite("sample covariance matrix is not positive definite");
    }
    return log_det(Eigen::LLT<Eigen::MatrixXd>(input.covariance));
}

double discrepancy(const Eigen::LLT<Eigen::MatrixXd>& sigma_llt, double sample_log_det, const CovInput& input) {
    const auto p = input.covariance.rows();
    const double trace = sigma_llt.solve(input.covariance).trace();
    return log_det(sigma_llt) - sample_log_det + trace - static_cast<double>(p);
}

}  // namespace

bool is_positive_definite(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return true;
    if (!m.allFinite()) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    return ev.maxCoeff() > 0.0 && ev.minCoeff() > 1e-12 * ev.maxCoeff();
}

Eigen::MatrixXd RamMatrices::a_matrix(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd a = a_fixed;
    for (const auto& e : entries) {
        if (e.matrix == RamMatrix::A) a(e.row, e.col) = theta(e.index);
    }
    return a;
}

Eigen::MatrixXd RamMatrices::s_matrix(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd s = s_fixed;
    for (const auto& e : entries) {
        if (e.matrix == RamMatrix::S) s(e.row, e.col) = theta(e.index);
    }
    return s;
}

int RamMatrices::variable_index(std::string_view name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i] == name) return static_cast<int>(i);
    }
    return -1;
}

RamMatrices build_ram(const ModelSpec& spec) {
    RamMatrices ram;
    ram.observed_count = static_cast<int>(spec.observed.size());
    ram.latent_count = static_cast<int>(spec.latents.size());
    ram.variables = spec.observed;
    ram.variables.insert(ram.variables.end(), spec.latents.begin(), spec.latents.end());

    const int m = ram.size();
    const int p = ram.observed_count;
    ram.a_fixed = Eigen::MatrixXd::Zero(m, m);
    ram.s_fixed = Eigen::MatrixXd::Zero(m, m);
    ram.filter = Eigen::MatrixXd::Zero(p, m);
    for (int i = 0; i < p; ++i) ram.filter(i, i) = 1.0;

    for (const auto& decl : enumerate_parameters(spec)) {
        int row = ram.variable_index(decl.lhs);
        int col = ram.variable_index(decl.rhs);
        RamMatrix matrix = RamMatrix::S;
        if (decl.kind == ParameterKind::Loading) {
            std::swap(row, col);  // indicator row, latent column
            matrix = RamMatrix::A;
        } else if (decl.kind == ParameterKind::Regression) {
            matrix = RamMatrix::A;
        }

        if (decl.fixed) {
            auto& target = matrix == RamMatrix::A ? ram.a_fixed : ram.s_fixed;
            target(row, col) = *decl.fixed;
            if (matrix == RamMatrix::S) target(col, row) = *decl.fixed;
            continue;
        }
        const int index = ram.parameter_count();
        ram.entries.push_back({matrix, row, col, index});
        if (matrix == RamMatrix::S && row != col) ram.entries.push_back({matrix, col, row, index});
        ram.parameters.push_back({decl.label(), decl.kind, row, col});
    }

    ram.first_indicator.assign(ram.latent_count, -1);
    for (const auto& l : spec.loadings) {
        const int latent = ram.variable_index(l.latent) - p;
        if (ram.first_indicator[latent] < 0) ram.first_indicator[latent] = ram.variable_index(l.indicator);
    }
    return ram;
}

Eigen::MatrixXd implied_full_covariance(const RamMatrices& ram, const Eigen::VectorXd& theta) {
    check_theta(ram, theta);
    const auto paths = path_inverse(ram, theta);
    if (!paths) throw NumericalError("I - A is singular: the path structure has no unique solution");
    return symmetrized(*paths * ram.s_matrix(theta) * paths->transpose());
}

Eigen::MatrixXd implied_covariance(const RamMatrices& ram, const Eigen::VectorXd& theta) {
    check_theta(ram, theta);
    const auto paths = path_inverse(ram, theta);
    if (!paths) throw NumericalError("I - A is singular: the path structure has no unique solution");
    const Eigen::MatrixXd projected = ram.filter * *paths;
    return symmetrized(projected * ram.s_matrix(theta) * projected.transpose());
}

double ml_discrepancy(const Eigen::MatrixXd& sigma, const CovInput& input) {
    if (sigma.rows() != input.covariance.rows() || sigma.cols() != input.covariance.cols()) {
        throw std::invalid_argument("implied and sample covariance have different shapes");
    }
    if (!is_positive_definite(sigma)) {
        throw NotPositiveDefinite("implied covariance matrix is not positive definite");
    }
    const double sample_ld = sample_log_det(input);
    return discrepancy(Eigen::LLT<Eigen::MatrixXd>(sigma), sample_ld, input);
}

MlObjective::MlObjective(const RamMatrices& ram, const CovInput& input)
    : ram_(ram), input_(input), log_det_sample_(sample_log_det(input)) {
    if (ram.observed_count != input.covariance.rows()) {
        throw std::invalid_argument("model has " + std::to_string(ram.observed_count) +
                                    " observed variables but the covariance is " +
                                    std::to_string(input.covariance.rows()) + "x" +
                                    std::to_string(input.covariance.cols()));
    }
}

double MlObjective::value(const Eigen::VectorXd& theta) const {
    check_theta(ram_, theta);
    const auto eval = evaluate(ram_, theta);
    if (!eval) return std::numeric_limits<double>::infinity();
    return discrepancy(eval->llt, log_det_sample_, input_);
}

Eigen::VectorXd MlObjective::gradient(const Eigen::VectorXd& theta) const {
    check_theta(ram_, theta);
    const auto eval = evaluate(ram_, theta);
    if (!eval) throw NotPositiveDefinite("implied covariance matrix is not positive definite");

    const Eigen::MatrixXd sigma_inv = eval->llt.solve(Eigen::MatrixXd::Identity(eval->sigma.rows(), eval->sigma.cols()));
    const Eigen::MatrixXd weight = sigma_inv * (eval->sigma - input_.covariance) * sigma_inv;
    const Eigen::MatrixXd g = ram_.filter.transpose() * weight * ram_.filter;
    const Eigen::MatrixXd& b = eval->paths;
    const Eigen::MatrixXd n_mat = b.transpose() * g * b;
    const Eigen::MatrixXd m_mat = b * ram_.s_matrix(theta) * n_mat;

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
    for (const auto& e : ram_.entries) {
        if (e.matrix == RamMatrix::S) {
            grad(e.index) += n_mat(e.row, e.col);
        } else {
            grad(e.index) += 2.0 * m_mat(e.col, e.row);
        }
    }
    return grad;
}

Eigen::VectorXd discrepancy_gradient(const RamMatrices& ram, const Eigen::VectorXd& theta, const CovInput& input,
                                     GradientMethod method) {
    const MlObjective objective(ram, input);
    if (method == GradientMethod::Analytic) return objective.gradient(theta);

    check_theta(ram, theta);
    if (!std::isfinite(objective.value(theta))) {
        throw NotPositiveDefinite("implied covariance matrix is not positive definite");
    }
    Eigen::VectorXd grad(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        double h = 1e-6 * std::max(1.0, std::abs(theta(j)));
        bool done = false;
        for (int attempt = 0; attempt < 4 && !done; ++attempt, h *= 0.5) {
            Eigen::VectorXd plus = theta;
            Eigen::VectorXd minus = theta;
            plus(j) += h;
            minus(j) -= h;
            const double fp = objective.value(plus);
            const double fm = objective.value(minus);
            if (std::isfinite(fp) && std::isfinite(fm)) {
                grad(j) = (fp - fm) / (2.0 * h);
                done = true;
            }
        }
        if (!done) {
            throw NotPositiveDefinite("implied covariance left the positive definite region while differencing " +
                                      ram.parameters[j].label);
        }
    }
    return grad;
}

}  // namespace sembench
