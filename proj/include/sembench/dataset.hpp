#pragma once

#include "sembench/model_spec.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sembench {

/// Benchmark scores: one row per evaluated model, one column per benchmark.
struct ScoreTable {
    std::vector<std::string> row_ids;
    std::vector<std::string> columns;
    Eigen::MatrixXd values;  // n x p, NaN where missing
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> missing;

    int rows() const { return static_cast<int>(row_ids.size()); }
    int cols() const { return static_cast<int>(columns.size()); }
    int column_index(std::string_view name) const;  // -1 if absent
};

/// Sample covariance (n - 1 denominator) aligned to a model's observed variables.
struct CovInput {
    Eigen::MatrixXd covariance;
    int n = 0;
    std::vector<std::string> columns;
    int deleted_rows = 0;
    std::vector<std::string> warnings;
};

/// Reads the scores CSV: header `model,<benchmark>,...`, one row per model, empty cell =
/// missing. Throws DataError naming the file and line on malformed input.
ScoreTable load_scores(const std::filesystem::path& path);
ScoreTable read_scores(std::istream& in, const std::string& source_name = "<input>");

/// Writes the same CSV format load_scores reads (full round-trip precision).
void write_scores(std::ostream& out, const ScoreTable& table);

struct CovarianceOptions {
    bool standardize = false;  // z-score columns after listwise deletion
};

/// Listwise deletion over the model's observed columns, then the unbiased covariance in
/// spec.observed order. Throws DataError on a missing column or fewer than 3 complete rows.
CovInput align_and_covariance(const ScoreTable& table, const ModelSpec& spec,
                              const CovarianceOptions& options = {});

/// Wraps an externally supplied covariance matrix after checking symmetry, PSD and n >= 2.
CovInput make_cov_input(Eigen::MatrixXd covariance, int n, std::vector<std::string> columns);

}  // namespace sembench
