#pragma once

#include "sembench/dataset.hpp"
#include "sembench/inference.hpp"
#include "sembench/model_spec.hpp"
#include "sembench/optimizer.hpp"
#include "sembench/ram.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace sembench {

inline constexpr double kCfiThreshold = 0.95;
inline constexpr double kRmseaThreshold = 0.06;

struct Verdicts {
    bool cfi_ok = false;    // CFI > 0.95
    bool rmsea_ok = false;  // RMSEA < 0.06
};

/// NaN indices never pass.
Verdicts threshold_verdicts(double cfi, double rmsea);

struct ParameterRow {
    std::string label;
    ParameterKind kind;
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double pvalue = 0.0;
    double standardized = 0.0;
};

struct FitReport {
    std::string model_source;
    int n = 0;
    int p = 0;
    int deleted_rows = 0;
    IdentificationReport identification;
    FitResult fit;
    FitIndices indices;
    std::vector<ParameterRow> parameters;
    StandardizedSolution standardized;
    std::vector<std::string> warnings;  // everything collected along the pipeline

    Verdicts verdicts() const { return threshold_verdicts(indices.cfi, indices.rmsea); }
};

struct AnalysisOptions {
    FitOptions fit;
    FitIndexOptions indices;
    Information information = Information::Expected;
};

/// Fit, standard errors, indices and standardized solution for one (model, data) pair.
FitReport analyze(const std::string& model_source, const ModelSpec& spec, const CovInput& input,
                  const AnalysisOptions& options = {});

/// Keys: model, n, p, deleted_rows, identification, fit, parameters, standardized,
/// thresholds, verdicts, warnings, note.
nlohmann::json to_json(const FitReport& report);

/// Human-readable summary table.
std::string format_report(const FitReport& report);

/// Graphviz path diagram: latents as ellipses, observed as boxes, paths as arrows,
/// covariances as dashed two-headed arrows. With estimates, edges carry 2-decimal labels.
std::string export_dot(const ModelSpec& spec);
std::string export_dot(const ModelSpec& spec, const FitResult& fit);

/// Caveat printed with every report.
inline constexpr const char* kThresholdNote =
    "Fit thresholds (CFI > 0.95, RMSEA < 0.06) are conventions, not proofs; "
    "interpret them alongside the substantive model.";

}  // namespace sembench
