#include "sembench/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace sembench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view kind_name(ParameterKind kind) {
    switch (kind) {
        case ParameterKind::Loading: return "loading";
        case ParameterKind::Regression: return "regression";
        case ParameterKind::Variance: return "variance";
        case ParameterKind::Covariance: return "covariance";
    }
    return "unknown";
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
    to.insert(to.end(), from.begin(), from.end());
}

std::string fmt(const char* format, double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string dot_text(const ModelSpec& spec, const std::map<std::string, double>* estimates) {
    std::ostringstream out;
    auto label = [&](const std::string& key, const std::optional<double>& fixed) -> std::string {
        if (!estimates) return "";
        double value = kNaN;
        if (fixed) {
            value = *fixed;
        } else if (auto it = estimates->find(key); it != estimates->end()) {
            value = it->second;
        }
        return ", label=\"" + fmt("%.2f", value) + "\"";
    };

    out << "digraph sem {\n";
    out << "  rankdir=TB;\n";
    for (const auto& latent : spec.latents) out << "  " << quoted(latent) << " [shape=ellipse];\n";
    for (const auto& observed : spec.observed) out << "  " << quoted(observed) << " [shape=box];\n";
    for (const auto& l : spec.loadings) {
        out << "  " << quoted(l.latent) << " -> " << quoted(l.indicator) << " [style=solid"
            << label(l.latent + "=~" + l.indicator, l.fixed) << "];\n";
    }
    for (const auto& r : spec.regressions) {
        out << "  " << quoted(r.predictor) << " -> " << quoted(r.dependent) << " [style=solid"
            << label(r.dependent + "~" + r.predictor, r.fixed) << "];\n";
    }
    for (const auto& c : spec.covariances) {
        if (c.is_variance()) continue;
        out << "  " << quoted(c.lhs) << " -> " << quoted(c.rhs) << " [dir=both, style=dashed"
            << label(c.lhs + "~~" + c.rhs, c.fixed) << "];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace

Verdicts threshold_verdicts(double cfi, double rmsea) {
    return {cfi > kCfiThreshold, rmsea < kRmseaThreshold};
}

FitReport analyze(const std::string& model_source, const ModelSpec& spec, const CovInput& input,
                  const AnalysisOptions& options) {
    FitReport report;
    report.model_source = model_source;
    report.n = input.n;
    report.p = static_cast<int>(input.covariance.rows());
    report.deleted_rows = input.deleted_rows;
    report.identification = validate_identification(spec);
    append(report.warnings, input.warnings);
    append(report.warnings, report.identification.warnings);

    const RamMatrices ram = build_ram(spec);
    report.fit = fit_ml(ram, input, options.fit);
    append(report.warnings, report.fit.warnings);

    const double chi2 = chi_square_stat(report.fit.f_min, input.n);
    const int df = report.identification.degrees_of_freedom;
    if (df >= 0 && report.p >= 2) {
        const BaselineFit baseline = baseline_discrepancy(input);
        report.indices = fit_indices(chi2, df, baseline.chi2, baseline.df, input.n, options.indices);
    } else {
        report.indices.chi2 = chi2;
        report.indices.df = df;
        report.indices.pvalue = kNaN;
        report.indices.cfi = kNaN;
        report.indices.rmsea = kNaN;
        report.indices.warnings.push_back("fit indices undefined for this model (negative df or single variable)");
    }
    append(report.warnings, report.indices.warnings);

    const StandardErrors ses = standard_errors(ram, report.fit.theta, input, options.information);
    append(report.warnings, ses.warnings);
    const auto tests = parameter_tests(std::span<const double>(report.fit.theta.data(), report.fit.theta.size()),
                                       std::span<const double>(ses.se.data(), ses.se.size()));

    report.standardized = standardized_solution(ram, report.fit.theta);
    append(report.warnings, report.standardized.warnings);

    for (int j = 0; j < ram.parameter_count(); ++j) {
        report.parameters.push_back({ram.parameters[j].label, ram.parameters[j].kind, tests[j].estimate, tests[j].se,
                                     tests[j].z, tests[j].pvalue, report.standardized.estimates(j)});
    }
    return report;
}

nlohmann::json to_json(const FitReport& report) {
    using nlohmann::json;
    json j;
    j["model"] = report.model_source;
    j["n"] = report.n;
    j["p"] = report.p;
    j["deleted_rows"] = report.deleted_rows;

    const auto& id = report.identification;
    j["identification"] = {{"free_parameters", id.free_parameters},
                           {"moments", id.moments},
                           {"df", id.degrees_of_freedom},
                           {"status", std::string(to_string(id.status))},
                           {"warnings", id.warnings}};

    const auto& ix = report.indices;
    j["fit"] = {{"chi2", ix.chi2},
                {"df", ix.df},
                {"pvalue", ix.pvalue},
                {"cfi", ix.cfi},
                {"rmsea", ix.rmsea},
                {"baseline_chi2", ix.baseline_chi2},
                {"baseline_df", ix.baseline_df},
                {"fmin", report.fit.f_min},
                {"converged", report.fit.converged},
                {"iterations", report.fit.iterations},
                {"gradient_norm", report.fit.gradient_norm}};

    json params = json::array();
    for (const auto& row : report.parameters) {
        params.push_back({{"label", row.label},
                          {"kind", std::string(kind_name(row.kind))},
                          {"estimate", row.estimate},
                          {"se", row.se},
                          {"z", row.z},
                          {"pvalue", row.pvalue},
                          {"std", row.standardized}});
    }
    j["parameters"] = params;

    const auto& st = report.standardized;
    json correlations = json::array();
    for (std::size_t r = 0; r < st.latent_names.size(); ++r) {
        for (std::size_t c = r + 1; c < st.latent_names.size(); ++c) {
            correlations.push_back({{"lhs", st.latent_names[r]},
                                    {"rhs", st.latent_names[c]},
                                    {"value", st.latent_correlations(r, c)}});
        }
    }
    json loadings = json::array();
    for (const auto& l : st.loadings) {
        loadings.push_back({{"latent", l.latent}, {"indicator", l.indicator}, {"value", l.value}});
    }
    j["standardized"] = {{"latent_correlations", correlations}, {"loadings", loadings}};

    const Verdicts v = report.verdicts();
    j["thresholds"] = {{"cfi", kCfiThreshold}, {"rmsea", kRmseaThreshold}};
    j["verdicts"] = {{"cfi_ok", v.cfi_ok}, {"rmsea_ok", v.rmsea_ok}};
    j["warnings"] = report.warnings;
    j["note"] = kThresholdNote;
    return j;
}

std::string format_report(const FitReport& report) {
    std::ostringstream out;
    const auto& id = report.identification;
    const auto& ix = report.indices;
    char line[256];

    out << "Observations: " << report.n << " (rows removed by listwise deletion: " << report.deleted_rows
        << "), observed variables: " << report.p << "\n";
    out << "Identification: " << to_string(id.status) << ", " << id.free_parameters << " free parameters, "
        << id.moments << " moments, df = " << id.degrees_of_freedom << "\n";
    out << "Optimizer: " << (report.fit.converged ? "converged" : "NOT converged") << " after "
        << report.fit.iterations << " iterations, F_ML = " << fmt("%.6g", report.fit.f_min)
        << ", |gradient| = " << fmt("%.2e", report.fit.gradient_norm) << "\n\n";

    const Verdicts v = report.verdicts();
    out << "Model fit\n";
    out << "  chi-square      " << fmt("%.4f", ix.chi2) << "  (df = " << ix.df << ", p = " << fmt("%.4f", ix.pvalue)
        << ")\n";
    out << "  baseline chi2   " << fmt("%.4f", ix.baseline_chi2) << "  (df = " << ix.baseline_df << ")\n";
    out << "  CFI             " << fmt("%.4f", ix.cfi) << "  " << (v.cfi_ok ? "[> 0.95 ok]" : "[> 0.95 not met]")
        << "\n";
    out << "  RMSEA           " << fmt("%.4f", ix.rmsea) << "  "
        << (v.rmsea_ok ? "[< 0.06 ok]" : "[< 0.06 not met]") << "\n\n";

    std::snprintf(line, sizeof(line), "%-44s %10s %10s %9s %9s %9s\n", "Parameter", "Estimate", "Std.Err", "z",
                  "P(>|z|)", "Std.all");
    out << line;
    for (const auto& row : report.parameters) {
        std::snprintf(line, sizeof(line), "%-44s %10s %10s %9s %9s %9s\n", row.label.c_str(),
                      fmt("%.4f", row.estimate).c_str(), fmt("%.4f", row.se).c_str(), fmt("%.3f", row.z).c_str(),
                      fmt("%.4f", row.pvalue).c_str(), fmt("%.4f", row.standardized).c_str());
        out << line;
    }

    const auto& st = report.standardized;
    if (st.latent_names.size() > 1) {
        out << "\nLatent correlations\n";
        for (std::size_t r = 0; r < st.latent_names.size(); ++r) {
            for (std::size_t c = r + 1; c < st.latent_names.size(); ++c) {
                out << "  " << st.latent_names[r] << " ~~ " << st.latent_names[c] << "  "
                    << fmt("%.4f", st.latent_correlations(r, c)) << "\n";
            }
        }
    }

    if (!report.warnings.empty()) {
        out << "\nWarnings\n";
        for (const auto& w : report.warnings) out << "  - " << w << "\n";
    }
    out << "\nNote: " << kThresholdNote << "\n";
    return out.str();
}

std::string export_dot(const ModelSpec& spec) {
    return dot_text(spec, nullptr);
}

std::string export_dot(const ModelSpec& spec, const FitResult& fit) {
    const RamMatrices ram = build_ram(spec);
    std::map<std::string, double> estimates;
    for (int j = 0; j < ram.parameter_count() && j < fit.theta.size(); ++j) {
        estimates[ram.parameters[j].label] = fit.theta(j);
    }
    return dot_text(spec, &estimates);
}

}  // namespace sembench
