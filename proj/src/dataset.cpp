#include "sembench/dataset.hpp"

#include "sembench/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace sembench {

namespace {

std::string trim_copy(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

// Comma split with minimal double-quote support ("a,b" and "" escapes).
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim_copy(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(trim_copy(cell));
    return cells;
}

bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

int ScoreTable::column_index(std::string_view name) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] == name) return static_cast<int>(j);
    }
    return -1;
}

ScoreTable read_scores(std::istream& in, const std::string& source_name) {
    std::string line;
    int line_no = 0;
    bool have_header = false;
    ScoreTable table;
    std::vector<std::vector<double>> rows;
    std::set<std::string> seen_ids;

    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (blank(line)) continue;
        auto cells = split_csv_line(line);
        if (!have_header) {
            if (cells.front() != "model") {
                throw DataError(source_name + ":" + std::to_string(line_no) +
                                ": malformed header: first column must be 'model'");
            }
            std::set<std::string> names;
            for (std::size_t j = 1; j < cells.size(); ++j) {
                if (cells[j].empty()) {
                    throw DataError(source_name + ":" + std::to_string(line_no) + ": malformed header: empty column " +
                                    std::to_string(j + 1));
                }
                if (!names.insert(cells[j]).second) {
                    throw DataError(source_name + ":" + std::to_string(line_no) +
                                    ": malformed header: duplicate column '" + cells[j] + "'");
                }
                table.columns.push_back(cells[j]);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != table.columns.size() + 1) {
            throw DataError(source_name + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size() + 1) + " cells, found " +
                            std::to_string(cells.size()));
        }
        if (!seen_ids.insert(cells.front()).second) {
            throw DataError(source_name + ":" + std::to_string(line_no) + ": duplicate row id '" + cells.front() + "'");
        }
        std::vector<double> values;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const std::string& cell = cells[j];
            if (cell.empty()) {
                values.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
                throw DataError(source_name + ":" + std::to_string(line_no) + ": non-numeric value '" + cell +
                                "' in column '" + table.columns[j - 1] + "'");
            }
            values.push_back(v);
        }
        table.row_ids.push_back(cells.front());
        rows.push_back(std::move(values));
    }
    if (!have_header) throw DataError(source_name + ": malformed header: file is empty");
    if (rows.empty()) throw DataError(source_name + ": no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(table.columns.size());
    table.values.resize(n, p);
    table.missing.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            table.values(i, j) = rows[i][j];
            table.missing(i, j) = std::isnan(rows[i][j]);
        }
    }
    return table;
}

ScoreTable load_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open scores file " + path.string());
    return read_scores(in, path.string());
}

void write_scores(std::ostream& out, const ScoreTable& table) {
    out << "model";
    for (const auto& c : table.columns) out << ',' << quote_if_needed(c);
    out << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < table.rows(); ++i) {
        out << quote_if_needed(table.row_ids[i]);
        for (int j = 0; j < table.cols(); ++j) {
            out << ',';
            if (!table.missing(i, j)) out << table.values(i, j);
        }
        out << '\n';
    }
}

CovInput make_cov_input(Eigen::MatrixXd covariance, int n, std::vector<std::string> columns) {
    if (covariance.rows() != covariance.cols()) throw DataError("covariance matrix is not square");
    if (static_cast<std::size_t>(covariance.rows()) != columns.size()) {
        throw DataError("covariance matrix size does not match the number of column names");
    }
    if (n < 2) throw DataError("sample size must be at least 2");
    if (covariance != covariance.transpose()) throw DataError("covariance matrix is not symmetric");
    if (covariance.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
        const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
        if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
            throw DataError("covariance matrix is not positive semidefinite");
        }
    }
    CovInput input;
    input.covariance = std::move(covariance);
    input.n = n;
    input.columns = std::move(columns);
    return input;
}

CovInput align_and_covariance(const ScoreTable& table, const ModelSpec& spec, const CovarianceOptions& options) {
    std::vector<int> used;
    for (const auto& name : spec.observed) {
        const int j = table.column_index(name);
        if (j < 0) throw DataError("benchmark column '" + name + "' required by the model is missing from the data");
        used.push_back(j);
    }

    std::vector<int> complete;
    for (int i = 0; i < table.rows(); ++i) {
        bool ok = true;
        for (int j : used) ok = ok && !table.missing(i, j);
        if (ok) complete.push_back(i);
    }

    const int n = static_cast<int>(complete.size());
    const int p = static_cast<int>(used.size());
    std::vector<std::string> warnings;
    const int deleted = table.rows() - n;
    if (deleted > 0) warnings.push_back("listwise deletion removed " + std::to_string(deleted) + " row(s)");
    if (n < 3) {
        throw DataError("only " + std::to_string(n) + " complete row(s) after listwise deletion; at least 3 required");
    }
    if (n < p + 1) {
        warnings.push_back("only " + std::to_string(n) + " complete rows for " + std::to_string(p) +
                           " variables; the sample covariance is singular");
    }

    Eigen::MatrixXd x(n, p);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < p; ++c) x(r, c) = table.values(complete[r], used[c]);
    }
    x.rowwise() -= x.colwise().mean();

    if (options.standardize) {
        for (int c = 0; c < p; ++c) {
            const double sd = std::sqrt(x.col(c).squaredNorm() / (n - 1));
            if (sd > 0.0) x.col(c) /= sd;
        }
    }

    Eigen::MatrixXd cov(p, p);
    for (int a = 0; a < p; ++a) {
        for (int b = a; b < p; ++b) {
            cov(a, b) = x.col(a).dot(x.col(b)) / (n - 1);
            cov(b, a) = cov(a, b);
        }
    }
    for (int c = 0; c < p; ++c) {
        if (cov(c, c) == 0.0) warnings.push_back("column '" + spec.observed[c] + "' is constant (zero variance)");
    }

    CovInput input = make_cov_input(std::move(cov), n, spec.observed);
    input.deleted_rows = deleted;
    input.warnings = std::move(warnings);
    return input;
}

}  // namespace sembench
