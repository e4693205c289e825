#include "sembench/cli.hpp"

#include "sembench/dataset.hpp"
#include "sembench/errors.hpp"
#include "sembench/model_spec.hpp"
#include "sembench/report.hpp"
#include "sembench/simulate.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace sembench {

namespace {

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(std::string("cannot open ") + what + " " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << contents;
    if (!out) throw DataError("failed writing " + path);
}

double parse_double(const std::string& token, int line_no) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        throw DataError("theta line " + std::to_string(line_no) + ": invalid number '" + token + "'");
    }
    return v;
}

struct FitFlags {
    std::string model;
    std::string data;
    std::string out;
    std::string dot;
    bool std_lv = false;
    bool standardize = false;
    bool clamp_cfi = false;
    bool force = false;
    int restarts = 0;
    std::uint64_t seed = 0;
    int max_iter = 1000;
    double tol = 1e-8;
    Information information = Information::Expected;
};

struct SimulateFlags {
    std::string model;
    std::string theta;
    std::string out;
    bool std_lv = false;
    int n = 0;
    std::uint64_t seed = 0;
};

struct DotFlags {
    std::string model;
    std::string out;
};

ModelSpec load_model(const std::string& path, Identification mode, std::string* source) {
    const std::string text = read_file(path, "model file");
    if (source) *source = text;
    try {
        return parse_model(text, mode);
    } catch (const ParseError& e) {
        throw DataError(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                        e.message());
    }
}

int cmd_fit(const FitFlags& flags, std::ostream& out, std::ostream& err) {
    std::string source;
    const Identification mode = flags.std_lv ? Identification::StdLv : Identification::Marker;
    const ModelSpec spec = load_model(flags.model, mode, &source);

    const IdentificationReport id = validate_identification(spec);
    if (id.status == IdentificationStatus::UnderIdentified && !flags.force) {
        err << "error: model is under-identified (" << id.free_parameters << " free parameters, " << id.moments
            << " moments, df = " << id.degrees_of_freedom << ")\n";
        for (const auto& w : id.warnings) err << "  - " << w << "\n";
        err << "use --force to fit anyway\n";
        return kExitUnderIdentified;
    }

    const ScoreTable table = load_scores(flags.data);
    const CovInput input = align_and_covariance(table, spec, {flags.standardize});

    AnalysisOptions options;
    options.fit.max_iter = flags.max_iter;
    options.fit.tol = flags.tol;
    options.fit.restarts = flags.restarts;
    options.fit.seed = flags.seed;
    options.indices.clamp_cfi = flags.clamp_cfi;
    options.information = flags.information;
    const FitReport report = analyze(source, spec, input, options);

    out << format_report(report);
    if (!flags.out.empty()) write_file(flags.out, to_json(report).dump(2) + "\n");
    if (!flags.dot.empty()) write_file(flags.dot, export_dot(spec, report.fit));
    return report.fit.converged ? kExitOk : kExitNotConverged;
}

int cmd_simulate(const SimulateFlags& flags, std::ostream& out) {
    const Identification mode = flags.std_lv ? Identification::StdLv : Identification::Marker;
    const ModelSpec spec = load_model(flags.model, mode, nullptr);
    if (flags.n < 1) throw DataError("--n must be at least 1");

    TrueModel model;
    model.ram = build_ram(spec);
    std::ifstream theta_in(flags.theta);
    if (!theta_in) throw DataError("cannot open theta file " + flags.theta);
    model.theta = read_theta(theta_in, model.ram);
    model.n = flags.n;
    model.seed = flags.seed;

    std::ostringstream csv;
    write_scores(csv, sample_scores(model));
    if (flags.out.empty()) {
        out << csv.str();
    } else {
        write_file(flags.out, csv.str());
    }
    return kExitOk;
}

int cmd_dot(const DotFlags& flags, std::ostream& out) {
    const ModelSpec spec = load_model(flags.model, Identification::Marker, nullptr);
    const std::string dot = export_dot(spec);
    if (flags.out.empty()) {
        out << dot;
    } else {
        write_file(flags.out, dot);
    }
    return kExitOk;
}

}  // namespace

Eigen::VectorXd read_theta(std::istream& in, const RamMatrices& ram) {
    std::vector<double> bare;
    std::map<std::string, double> labelled;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = line.substr(0, line.find('#'));
        for (char& c : line) {
            if (c == ',' || c == '\t' || c == '\r') c = ' ';
        }
        std::istringstream tokens(line);
        std::vector<std::string> parts;
        for (std::string t; tokens >> t;) parts.push_back(t);
        if (parts.empty()) continue;
        if (parts.size() == 1) {
            bare.push_back(parse_double(parts[0], line_no));
        } else if (parts.size() == 2) {
            if (!labelled.emplace(parts[0], parse_double(parts[1], line_no)).second) {
                throw DataError("theta line " + std::to_string(line_no) + ": duplicate label '" + parts[0] + "'");
            }
        } else {
            throw DataError("theta line " + std::to_string(line_no) + ": expected 'value' or 'label value'");
        }
    }
    if (!bare.empty() && !labelled.empty()) throw DataError("theta file mixes labelled and bare values");

    const int k = ram.parameter_count();
    Eigen::VectorXd theta(k);
    if (labelled.empty()) {
        if (static_cast<int>(bare.size()) != k) {
            throw DataError("theta has " + std::to_string(bare.size()) + " values but the model has " +
                            std::to_string(k) + " free parameters");
        }
        for (int j = 0; j < k; ++j) theta(j) = bare[j];
        return theta;
    }
    if (static_cast<int>(labelled.size()) != k) {
        throw DataError("theta has " + std::to_string(labelled.size()) + " values but the model has " +
                        std::to_string(k) + " free parameters");
    }
    for (int j = 0; j < k; ++j) {
        const auto it = labelled.find(ram.parameters[j].label);
        if (it == labelled.end()) throw DataError("theta file has no value for " + ram.parameters[j].label);
        theta(j) = it->second;
    }
    return theta;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structural equation models over benchmark score tables", "sembench"};
    app.require_subcommand(1);

    FitFlags fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a scores CSV and report fit statistics");
    fit_cmd->add_option("--model", fit.model, "Model specification file")->required();
    fit_cmd->add_option("--data", fit.data, "Scores CSV (first column 'model')")->required();
    fit_cmd->add_option("--out", fit.out, "Write the JSON report here");
    fit_cmd->add_option("--dot", fit.dot, "Write a Graphviz path diagram with estimates here");
    fit_cmd->add_flag("--std-lv", fit.std_lv, "Fix latent variances to 1 instead of marker loadings");
    fit_cmd->add_flag("--standardize", fit.standardize, "z-score columns before computing the covariance");
    fit_cmd->add_flag("--clamp-cfi", fit.clamp_cfi, "Truncate CFI to [0, 1]");
    fit_cmd->add_flag("--force", fit.force, "Fit even if the model is under-identified");
    fit_cmd->add_option("--restarts", fit.restarts, "Additional jittered starts")->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--seed", fit.seed, "Seed for restart jitter");
    fit_cmd->add_option("--max-iter", fit.max_iter, "Maximum optimizer iterations")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--tol", fit.tol, "Objective change tolerance")->check(CLI::PositiveNumber);
    const std::map<std::string, Information> information_names{{"expected", Information::Expected},
                                                                {"observed", Information::Observed}};
    fit_cmd->add_option("--information", fit.information, "Standard errors from 'expected' or 'observed' information")
        ->transform(CLI::CheckedTransformer(information_names, CLI::ignore_case));

    SimulateFlags sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Draw a synthetic scores table from a model");
    sim_cmd->add_option("--model", sim.model, "Model specification file")->required();
    sim_cmd->add_option("--theta", sim.theta, "Free parameter values")->required();
    sim_cmd->add_option("--n", sim.n, "Number of rows")->required();
    sim_cmd->add_option("--seed", sim.seed, "Generator seed");
    sim_cmd->add_option("--out", sim.out, "Output CSV (default: standard output)");
    sim_cmd->add_flag("--std-lv", sim.std_lv, "Interpret the model with latent variances fixed to 1");

    DotFlags dot;
    auto* dot_cmd = app.add_subcommand("dot", "Write a Graphviz path diagram of a model");
    dot_cmd->add_option("--model", dot.model, "Model specification file")->required();
    dot_cmd->add_option("--out", dot.out, "Output file (default: standard output)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsageOrData;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit, out, err);
        if (*sim_cmd) return cmd_simulate(sim, out);
        if (*dot_cmd) return cmd_dot(dot, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsageOrData;
    }
    return kExitUsageOrData;
}

}  // namespace sembench
