#include "catch_amalgamated.hpp"

#include "sembench/inference.hpp"
#include "sembench/model_spec.hpp"
#include "sembench/optimizer.hpp"
#include "sembench/simulate.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace sembench;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Composite Simpson rule.
template <class F>
double simpson(F f, double a, double b, int intervals = 20000) {
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return sum * h / 3.0;
}

double phi_oracle(double z) {
    const double pdf_norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const double half = simpson([&](double t) { return pdf_norm * std::exp(-0.5 * t * t); }, 0.0, std::abs(z));
    return z >= 0 ? 0.5 + half : 0.5 - half;
}

// P(X > x) for X ~ chi2(k), integrating the density over t = u^2 so the integrand is
// smooth at the origin.
double chisq_sf_oracle(double x, int k) {
    const double c = 1.0 / (std::pow(2.0, 0.5 * k) * std::tgamma(0.5 * k));
    auto g = [&](double u) { return c * 2.0 * std::pow(u, k - 1) * std::exp(-0.5 * u * u); };
    return 1.0 - simpson(g, 0.0, std::sqrt(x));
}

}  // namespace

TEST_CASE("normal cdf", "[inference]") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK_THAT(normal_cdf(1.959964), WithinAbs(0.975, 1e-6));
    for (double z : {-3.5, -1.2, -0.3, 0.4, 1.0, 2.2, 4.0}) {
        CHECK_THAT(normal_cdf(z), WithinAbs(phi_oracle(z), 1e-10));
        CHECK_THAT(normal_cdf(z) + normal_cdf(-z), WithinAbs(1.0, 1e-15));
    }
}

TEST_CASE("chi-square survival function", "[inference]") {
    CHECK_THAT(chisq_sf(3.841, 1), WithinAbs(0.05004, 1e-4));
    for (double x : {0.01, 0.5, 1.0, 3.0, 7.5, 20.0, 60.0}) CHECK_THAT(chisq_sf(x, 2), WithinAbs(std::exp(-x / 2), 1e-10));
    for (int k : {1, 3, 4, 7, 15}) {
        for (double x : {0.2, 1.5, 4.0, 9.0, 25.0}) {
            INFO("df=" << k << " x=" << x);
            CHECK_THAT(chisq_sf(x, k), WithinAbs(chisq_sf_oracle(x, k), 1e-9));
        }
    }
    CHECK(chisq_sf(0.0, 3) == 1.0);
    CHECK_THROWS_AS(chisq_sf(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(chisq_sf(-1.0, 2), std::invalid_argument);
}

TEST_CASE("chi-square tail decreases in x", "[inference][property]") {
    for (int k : {1, 2, 5, 9}) {
        double previous = 1.0;
        for (double x = 0.1; x < 40.0; x += 0.37) {
            const double p = chisq_sf(x, k);
            CHECK(p <= previous);
            previous = p;
        }
    }
}

TEST_CASE("fit index arithmetic", "[inference]") {
    const FitIndices a = fit_indices(0.5, 1, 100.0, 6, 45);
    CHECK_THAT(a.cfi, WithinAbs(1.0053191489, 1e-9));
    CHECK(a.rmsea == 0.0);
    CHECK_THAT(a.pvalue, WithinAbs(chisq_sf(0.5, 1), 1e-15));

    FitIndexOptions clamp;
    clamp.clamp_cfi = true;
    CHECK(fit_indices(0.5, 1, 100.0, 6, 45, clamp).cfi == 1.0);

    const FitIndices b = fit_indices(10.0, 1, 100.0, 6, 45);
    CHECK_THAT(b.rmsea, WithinAbs(std::sqrt(9.0 / 44.0), 1e-12));
    CHECK_THAT(b.rmsea, WithinAbs(0.45227, 1e-5));
    CHECK_THAT(b.cfi, WithinAbs(1.0 - 9.0 / 94.0, 1e-12));

    const FitIndices c = fit_indices(0.0, 0, 50.0, 3, 100);
    CHECK(c.rmsea == 0.0);
    CHECK(c.pvalue == 1.0);
    CHECK_FALSE(c.warnings.empty());

    const FitIndices d = fit_indices(2.0, 1, 4.0, 6, 100);
    CHECK(std::isnan(d.cfi));
    CHECK_FALSE(d.warnings.empty());

    CHECK_THROWS(fit_indices(1.0, -1, 10.0, 3, 50));
    CHECK_THROWS(fit_indices(1.0, 1, 10.0, 0, 50));
}

TEST_CASE("baseline discrepancy", "[inference]") {
    const Eigen::Matrix2d s = (Eigen::Matrix2d() << 4.0, 1.0, 1.0, 1.0).finished();  // r = 0.5
    const BaselineFit b = baseline_discrepancy(testing::cov_input(s, 101));
    CHECK(b.df == 1);
    CHECK_THAT(b.chi2, WithinAbs(-100.0 * std::log(0.75), 1e-10));
}

TEST_CASE("Wald tests", "[inference]") {
    const std::vector<double> est{2.0, -2.0, 1.0, 0.3, 5.0};
    const std::vector<double> se{1.0, 1.0, std::nan(""), 0.0, 2.0};
    const auto t = parameter_tests(est, se);
    CHECK_THAT(t[0].pvalue, WithinAbs(0.0455002639, 1e-9));
    CHECK(t[0].pvalue == t[1].pvalue);
    CHECK(t[1].z == -2.0);
    CHECK(std::isnan(t[2].z));
    CHECK(std::isnan(t[2].pvalue));
    CHECK(std::isinf(t[3].z));
    CHECK(t[3].pvalue == 0.0);
    CHECK(t[4].z == 2.5);
    CHECK_THROWS(parameter_tests(est, std::vector<double>{1.0}));
}

TEST_CASE("p-values fall as |z| grows", "[inference][property]") {
    double previous = 1.0;
    for (double z = 0.0; z < 8.0; z += 0.05) {
        const std::vector<double> e{z}, s{1.0};
        const double p = parameter_tests(e, s)[0].pvalue;
        CHECK(p <= previous);
        CHECK(p >= 0.0);
        previous = p;
    }
}

TEST_CASE("standard errors from a known Hessian", "[inference]") {
    const Eigen::Matrix2d h = Eigen::Vector2d(2.0, 8.0).asDiagonal();
    const StandardErrors se = standard_errors_from_hessian(h, 101);
    CHECK_THAT(se.se(0), WithinAbs(0.1, 1e-15));
    CHECK_THAT(se.se(1), WithinAbs(0.05, 1e-15));
    CHECK(se.warnings.empty());

    const StandardErrors bad = standard_errors_from_hessian((Eigen::Matrix2d() << 1, 1, 1, 1).finished(), 101);
    CHECK(std::isnan(bad.se(0)));
    CHECK_FALSE(bad.warnings.empty());
}

TEST_CASE("under-identified model yields NaN standard errors", "[inference]") {
    const RamMatrices ram = build_ram(parse_model("A =~ x + y"));
    Eigen::VectorXd theta(4);
    theta << 0.8, 0.5, 0.5, 1.0;
    const CovInput in = testing::cov_input(implied_covariance(ram, theta), 100);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(discrepancy_hessian(ram, theta, in)).eigenvalues();
    INFO("Hessian eigenvalues " << ev.transpose());
    for (auto info : {Information::Expected, Information::Observed}) {
        const StandardErrors se = standard_errors(ram, theta, in, info);
        CHECK(se.se.array().isNaN().all());
        bool flagged = false;
        for (const auto& w : se.warnings) flagged = flagged || w.find("under-identification") != std::string::npos;
        CHECK(flagged);
    }
}

TEST_CASE("numerical Hessian matches the analytic one for a one-factor model", "[inference]") {
    // At an exact fit the Hessian of F_ML is tr(Sigma^-1 dSigma_i Sigma^-1 dSigma_j).
    const RamMatrices ram = build_ram(parse_model(testing::kToyModel));
    const Eigen::VectorXd theta = testing::toy_theta();
    const Eigen::MatrixXd sigma = implied_covariance(ram, theta);
    const CovInput in = testing::cov_input(sigma, 200);
    const Eigen::MatrixXd inv = sigma.inverse();
    std::vector<Eigen::MatrixXd> d(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(j) += 1e-6;
        tm(j) -= 1e-6;
        d[j] = (implied_covariance(ram, tp) - implied_covariance(ram, tm)) / 2e-6;
    }
    const Eigen::MatrixXd h = discrepancy_hessian(ram, theta, in);
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        for (Eigen::Index j = 0; j < theta.size(); ++j)
            CHECK_THAT(h(i, j), WithinAbs((inv * d[i] * inv * d[j]).trace(), 1e-5));

    const StandardErrors expected = standard_errors(ram, theta, in, Information::Expected);
    const StandardErrors observed = standard_errors(ram, theta, in, Information::Observed);
    CHECK((expected.se - observed.se).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("standardized latent correlation", "[inference]") {
    const RamMatrices ram = build_ram(parse_model(testing::kToyModel));
    Eigen::VectorXd theta = testing::toy_theta(0.8, 1.0);
    theta(7) = 4.0;  // Var(DCK); Cov = 1, Var(ECK) = 1  =>  rho = 1 / (2 * 1)
    const StandardizedSolution st = standardized_solution(ram, theta);
    CHECK_THAT(st.correlation("DCK", "ECK"), WithinAbs(0.5, 1e-14));
    CHECK_THAT(st.estimates(2), WithinAbs(0.5, 1e-14));
    CHECK_THAT(st.correlation("DCK", "DCK"), WithinAbs(1.0, 1e-14));
    CHECK_THROWS_AS(st.correlation("DCK", "nope"), std::out_of_range);
    // loading of danske_talemaader: 0.8 * 2 / sqrt(0.64 * 4 + 0.5)
    CHECK_THAT(st.estimates(0), WithinAbs(1.6 / std::sqrt(3.06), 1e-14));
    CHECK_THAT(st.estimates(3), WithinAbs(0.5 / 4.5, 1e-14));
    CHECK(st.loadings.size() == 4);
    CHECK(st.warnings.empty());
}

TEST_CASE("standardized solution does not depend on identification", "[inference][property]") {
    const ModelSpec marker = parse_model(testing::kToyModel);
    const ModelSpec stdlv = parse_model(testing::kToyModel, Identification::StdLv);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ScoreTable data = sample_scores({build_ram(marker), testing::toy_theta(), 300, seed});
        const CovInput in = align_and_covariance(data, marker);
        const RamMatrices ram_m = build_ram(marker);
        const RamMatrices ram_s = build_ram(stdlv);
        const FitResult fm = fit_ml(ram_m, in);
        const FitResult fs = fit_ml(ram_s, in);
        CHECK_THAT(fm.f_min, WithinAbs(fs.f_min, 1e-9));
        const auto sm = standardized_solution(ram_m, fm.theta);
        const auto ss = standardized_solution(ram_s, fs.theta);
        CHECK_THAT(sm.correlation("DCK", "ECK"), WithinAbs(ss.correlation("DCK", "ECK"), 1e-5));
        // Under std.lv the covariance parameter is the correlation itself.
        int cov = -1;
        for (int j = 0; j < ram_s.parameter_count(); ++j)
            if (ram_s.parameters[j].label == "DCK~~ECK") cov = j;
        REQUIRE(cov >= 0);
        CHECK_THAT(fs.theta(cov), WithinAbs(ss.correlation("DCK", "ECK"), 1e-12));
    }
}

TEST_CASE("negative variance gives a Heywood warning", "[inference]") {
    const RamMatrices ram = build_ram(parse_model(testing::kToyModel));
    Eigen::VectorXd theta = testing::toy_theta();
    theta(8) = -0.5;
    CHECK_FALSE(standardized_solution(ram, theta).warnings.empty());
}

TEST_CASE("standard errors match the sampling spread", "[inference][property]") {
    // Under std.lv the covariance parameter is rho; its mean SE should track the Monte
    // Carlo SD of the estimates.
    const ModelSpec marker = parse_model(testing::kToyModel);
    const ModelSpec stdlv = parse_model(testing::kToyModel, Identification::StdLv);
    const RamMatrices truth = build_ram(marker);
    const RamMatrices ram = build_ram(stdlv);
    int cov = -1;
    for (int j = 0; j < ram.parameter_count(); ++j)
        if (ram.parameters[j].label == "DCK~~ECK") cov = j;
    REQUIRE(cov >= 0);

    const int runs = 200;
    double sum = 0.0, sum2 = 0.0, se_sum = 0.0;
    for (int seed = 1; seed <= runs; ++seed) {
        const CovInput in = align_and_covariance(sample_scores({truth, testing::toy_theta(), 500, static_cast<std::uint64_t>(seed)}), stdlv);
        const FitResult fit = fit_ml(ram, in);
        REQUIRE(fit.converged);
        const StandardErrors se = standard_errors(ram, fit.theta, in);
        sum += fit.theta(cov);
        sum2 += fit.theta(cov) * fit.theta(cov);
        se_sum += se.se(cov);
    }
    const double mean = sum / runs;
    const double sd = std::sqrt((sum2 - runs * mean * mean) / (runs - 1));
    const double mean_se = se_sum / runs;
    INFO("sd = " << sd << ", mean se = " << mean_se);
    CHECK(std::abs(sd / mean_se - 1.0) < 0.25);
    CHECK_THAT(mean, WithinAbs(0.48, 0.02));
}
