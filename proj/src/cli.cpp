#include "sigpal/cli.hpp"

#include "sigpal/error.hpp"
#include "sigpal/parallel.hpp"
#include "sigpal/serialize.hpp"
#include "sigpal/theory.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace sigpal::cli {
namespace {

namespace fs = std::filesystem;

struct TestArgs {
    std::string method = "sigpal";
    std::string assigner = "cop-kmeans";
    std::string sim_assigner;
    std::string eigen = "soft";
    int n_sim = 100;
    int n_perm = 100;
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    bool rotate = false;
    std::string input;
    std::string output;
    std::string format = "json";
    std::string label_col = "label";
    std::string statistic = "mean-diff";
    std::string null_csv;
    std::string placement = "preserve-counts";
    bool add_one = false;
    AssignerSpec tuning;
};

struct SimulateArgs {
    std::string preset;
    std::string config;
    bool desk_scale = false;
    bool list = false;
    std::optional<int> reps;
    std::optional<int> n_sim;
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    std::string output;
};

struct TheoryArgs {
    std::optional<double> r;
    std::string grid = "0:1:0.01";
    std::string output;
    bool sweep = false;
    theory::AsymptoticStudyConfig study;
    std::optional<std::uint64_t> seed;
};

std::uint64_t materialize_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void check_input_file(const std::string& path, const char* flag) {
    if (path.empty()) throw InvalidInput(std::string(flag) + " is required");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw InvalidInput(std::string(flag) + ": cannot read '" + path + "'");
}

void check_output_path(const std::string& path, const char* flag) {
    if (path.empty()) return;
    const fs::path parent = fs::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty() && !fs::is_directory(parent, ec))
        throw InvalidInput(std::string(flag) + ": directory '" + parent.string() + "' does not exist");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidInput("cannot open '" + path + "' for writing");
    return f;
}

/// Writes to `path`, or to `out` when the path is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& out, Fn&& write) {
    if (path.empty()) {
        write(out);
        return;
    }
    auto f = open_output(path);
    write(f);
    if (!f) throw InvalidInput("failed writing '" + path + "'");
}

std::string lower_dash(std::string s) {
    for (auto& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (c == '_') c = '-';
    }
    return s;
}

EigenSpectrum read_known_spectrum(const std::string& path) {
    check_input_file(path, "--eigen known:<file>");
    std::ifstream f(path);
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string text = buf.str();
    if (fs::path(path).extension() == ".json") {
        try {
            return spectrum_from_json(Json::parse(text));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput("spectrum file '" + path + "': " + e.what());
        }
    }
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto start = text.find_first_not_of(" \t\r\n,", pos);
        if (start == std::string::npos) break;
        auto end = text.find_first_of(" \t\r\n,", start);
        if (end == std::string::npos) end = text.size();
        double v = 0.0;
        const char* first = text.data() + start;
        if (*first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, text.data() + end, v);
        if (ec != std::errc() || ptr != text.data() + end)
            throw InvalidInput("spectrum file '" + path + "': cannot parse '" + text.substr(start, end - start) + "'");
        values.push_back(v);
        pos = end;
    }
    if (values.empty()) throw InvalidInput("spectrum file '" + path + "' holds no values");
    return known_spectrum(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
}

LabelColumn parse_label_column(const std::string& s) {
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        return static_cast<std::size_t>(std::stoul(s));
    return s;
}

Json config_json(const TestArgs& a, std::uint64_t seed, const AssignerSpec& assigner, const AssignerSpec& sim_assigner) {
    Json c;
    c["subcommand"] = "test";
    c["method"] = a.method;
    if (a.method != "diproperm") {
        c["assigner"] = to_json(assigner);
        if (a.method == "sigpal") c["sim_assigner"] = to_json(sim_assigner);
        c["eigen"] = a.eigen;
        c["n_sim"] = a.n_sim;
        if (a.method == "sigpal") c["label_placement"] = a.placement;
    } else {
        c["statistic"] = a.statistic;
        c["n_perm"] = a.n_perm;
    }
    c["alpha"] = a.alpha;
    c["seed"] = seed;
    c["add_one"] = a.add_one;
    c["rotate"] = a.rotate;
    c["input"] = a.input;
    c["label_col"] = a.label_col;
    c["format"] = a.format;
    return c;
}

int cmd_test(const TestArgs& a, int threads, std::ostream& out) {
    const std::string method = lower_dash(a.method);
    if (method != "sigpal" && method != "sigclust" && method != "diproperm")
        throw InvalidInput("--method must be sigpal, sigclust or diproperm");
    if (a.format != "json" && a.format != "csv") throw InvalidInput("--format must be json or csv");
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw InvalidInput("--alpha must lie in (0, 1)");
    check_input_file(a.input, "--input");
    check_output_path(a.output, "--output");
    check_output_path(a.null_csv, "--null-csv");

    AssignerSpec assigner = a.tuning;
    assigner.kind = parse_assigner_kind(a.assigner);
    AssignerSpec sim_assigner = assigner;
    if (!a.sim_assigner.empty()) sim_assigner.kind = parse_assigner_kind(a.sim_assigner);
    assigner.validate();

    EigenMethod eigen;
    if (a.eigen == "hard") eigen = EigenMethod::hard();
    else if (a.eigen == "soft") eigen = EigenMethod::soft();
    else if (a.eigen.starts_with("known:")) eigen = EigenMethod::with_known(read_known_spectrum(a.eigen.substr(6)));
    else throw InvalidInput("--eigen must be hard, soft or known:<file>");

    LabelPlacement placement;
    if (lower_dash(a.placement) == "preserve-counts") placement = LabelPlacement::preserve_counts;
    else if (lower_dash(a.placement) == "uniform-signs") placement = LabelPlacement::uniform_signs;
    else throw InvalidInput("--label-placement must be preserve-counts or uniform-signs");

    ProjectionStatistic statistic;
    if (lower_dash(a.statistic) == "mean-diff") statistic = ProjectionStatistic::mean_diff;
    else if (lower_dash(a.statistic) == "t-stat") statistic = ProjectionStatistic::t_stat;
    else throw InvalidInput("--statistic must be mean-diff or t-stat");

    const std::uint64_t seed = materialize_seed(a.seed);
    TestArgs resolved = a;
    resolved.method = method;

    PartiallyLabeledDataset data = load_csv(a.input, parse_label_column(a.label_col));
    if (a.rotate) data = rotate_to_diagonal(data).rotated;

    TestResult result;
    if (method == "diproperm") {
        PermutationOptions po;
        po.n_perm = a.n_perm;
        po.seed = seed;
        po.threads = threads;
        po.add_one = a.add_one;
        result = diproperm(data, statistic, po);
    } else {
        SimulationOptions so;
        so.n_sim = a.n_sim;
        so.seed = seed;
        so.threads = threads;
        so.add_one = a.add_one;
        so.placement = placement;
        if (method == "sigclust") {
            assigner.kind = AssignerKind::two_means;
            result = sigclust(data.x(), eigen, assigner, so);
        } else {
            result = sigpal(data, assigner, sim_assigner, eigen, so);
        }
    }

    const bool reject = result.p_value < a.alpha;
    const Json config = config_json(resolved, seed, assigner, sim_assigner);
    if (!a.output.empty()) {
        emit(a.output, out, [&](std::ostream& os) {
            if (a.format == "json") {
                Json doc;
                doc["config"] = config;
                doc["decision"] = reject ? "reject" : "retain";
                doc["result"] = to_json(result);
                os << doc.dump(2) << '\n';
            } else {
                os << "field,value\n";
                for (const auto& [k, v] : config.items())
                    os << "config." << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
                os << "observed_stat," << format_double(result.observed_stat) << '\n';
                os << "p_value," << format_double(result.p_value) << '\n';
                os << "n_sim_or_perm," << result.n_sim_or_perm << '\n';
                os << "decision," << (reject ? "reject" : "retain") << '\n';
                for (const auto& [k, v] : result.metadata) os << "metadata." << k << ',' << v << '\n';
            }
        });
    }
    if (!a.null_csv.empty()) emit(a.null_csv, out, [&](std::ostream& os) { write_null_stats_csv(os, result); });

    out << "method: " << to_string(result.method) << '\n'
        << "seed: " << seed << '\n'
        << "observed statistic: " << format_double(result.observed_stat) << '\n'
        << "p-value: " << format_double(result.p_value) << '\n'
        << "decision at alpha=" << format_double(a.alpha) << ": " << (reject ? "reject" : "retain") << '\n';
    return kExitOk;
}

fs::path summary_path(const std::string& output) {
    fs::path p(output);
    p.replace_extension(".summary.json");
    return p;
}

int cmd_simulate(const SimulateArgs& a, int threads, std::ostream& out) {
    if (a.list) {
        for (const auto& name : sim::preset_names()) out << name << '\n';
        return kExitOk;
    }
    if (a.preset.empty() == a.config.empty()) throw InvalidInput("give exactly one of --preset or --config");
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw InvalidInput("--alpha must lie in (0, 1)");
    check_output_path(a.output, "--output");

    sim::Preset p;
    if (!a.preset.empty()) {
        p = sim::preset(a.preset);
    } else {
        check_input_file(a.config, "--config");
        std::ifstream f(a.config);
        try {
            p = sim::preset_from_json(Json::parse(f));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput("--config '" + a.config + "': " + e.what());
        }
    }
    if (a.desk_scale) p = sim::desk_scale(std::move(p));
    if (a.reps) p.reps = *a.reps;
    if (a.n_sim) p.n_sim = *a.n_sim;
    if (p.reps < 1 || p.n_sim < 1) throw InvalidInput("--reps and --n-sim must be >= 1");
    const std::uint64_t seed = materialize_seed(a.seed);

    sim::ExperimentReport all;
    all.alpha = a.alpha;
    all.reps = p.reps;
    Json settings = Json::array();
    for (std::size_t k = 0; k < p.settings.size(); ++k) {
        sim::ExperimentOptions eo;
        eo.reps = p.reps;
        eo.n_sim = p.n_sim;
        eo.alpha = a.alpha;
        eo.seed = p.settings.size() == 1 ? seed : derive_seed(seed, {k});
        eo.threads = threads;
        if (p.settings.size() > 1) eo.label = p.settings[k].label;
        auto report = sim::run_experiment(p.settings[k].spec, p.methods, eo);
        Json s = sim::summary_json(report);
        settings.push_back(Json{{"label", p.settings[k].label}, {"seed", eo.seed}, {"summary", std::move(s)}});
        for (auto& row : report.rows) all.rows.push_back(std::move(row));
    }

    Json summary;
    Json config;
    config["subcommand"] = "simulate";
    config["preset"] = sim::to_json(p);
    config["alpha"] = a.alpha;
    config["seed"] = seed;
    summary["config"] = std::move(config);
    summary["desk_scale"] = p.desk_scale;
    summary["settings"] = std::move(settings);

    if (a.output.empty()) {
        sim::write_report_csv(out, all);
    } else {
        emit(a.output, out, [&](std::ostream& os) { sim::write_report_csv(os, all); });
        emit(summary_path(a.output).string(), out, [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
    }
    for (const auto& s : summary["settings"])
        for (const auto& m : s["summary"]["methods"])
            out << "# " << m["method"].get<std::string>() << ": " << m["rejections"].get<int>() << "/" << p.reps
                << " rejections at alpha=" << format_double(a.alpha) << '\n';
    out << "# seed: " << seed << '\n';
    return kExitOk;
}

std::vector<double> parse_grid(const std::string& grid) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (pos <= grid.size()) {
        auto end = grid.find(':', pos);
        if (end == std::string::npos) end = grid.size();
        const std::string tok = grid.substr(pos, end - pos);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
            throw InvalidInput("--grid must be start:stop:step, got '" + grid + "'");
        parts.push_back(v);
        pos = end + 1;
    }
    if (parts.size() != 3) throw InvalidInput("--grid must be start:stop:step, got '" + grid + "'");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || stop < start) throw InvalidInput("--grid '" + grid + "' is empty");
    if (start < 0.0 || stop > 1.0) throw InvalidInput("--grid values must lie in [0, 1]");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> thetas;
    thetas.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) thetas.push_back(std::min(stop, start + static_cast<double>(i) * step));
    return thetas;
}

std::string sig17(double v) {
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

int cmd_theory(const TheoryArgs& a, int threads, std::ostream& out) {
    check_output_path(a.output, "--output");
    if (a.sweep) {
        a.study.validate();
        const std::uint64_t seed = materialize_seed(a.seed);
        const auto rows = theory::asymptotic_pvalue_study(a.study, seed, threads);
        emit(a.output, out, [&](std::ostream& os) {
            os << "d,mean_p,sd_p,reps,n,labeled_per_class,n_sim,a,eta,lambda,seed\n";
            for (const auto& r : rows)
                os << r.d << ',' << sig17(r.mean_p) << ',' << sig17(r.sd_p) << ',' << a.study.reps << ',' << a.study.n
                   << ',' << a.study.labeled_per_class << ',' << a.study.n_sim << ',' << sig17(a.study.a) << ','
                   << sig17(a.study.eta) << ',' << sig17(a.study.lambda) << ',' << seed << '\n';
        });
        return kExitOk;
    }
    if (!a.r) throw InvalidInput("--r is required");
    const double r = *a.r;
    if (!(r > 0.0 && r <= 1.0)) throw InvalidInput("--r must lie in (0, 1]");
    const auto thetas = parse_grid(a.grid);
    emit(a.output, out, [&](std::ostream& os) {
        os << "theta,tci_sigpal,tci_sigclust,difference\n";
        for (double t : thetas)
            os << sig17(t) << ',' << sig17(theory::tci_sigpal(t, r)) << ',' << sig17(theory::tci_sigclust(r)) << ','
               << sig17(theory::tci_difference(t, r)) << '\n';
    });
    return kExitOk;
}

std::vector<Eigen::Index> parse_d_list(const std::string& s) {
    std::vector<Eigen::Index> ds;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        long v = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || v < 1)
            throw InvalidInput("--d must be a comma-separated list of positive integers");
        ds.push_back(v);
    }
    return ds;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Significance tests for two-class structure in partially labeled high-dimensional data", "sigpal"};
    app.require_subcommand(1);
    int threads = default_threads();
    app.add_option("--threads", threads, "Worker threads (default: SIGPAL_THREADS or 1); never changes results")
        ->check(CLI::PositiveNumber);

    TestArgs t;
    auto* test = app.add_subcommand("test", "Run sigpal, sigclust or diproperm on a CSV file");
    test->add_option("--method", t.method, "sigpal | sigclust | diproperm")->capture_default_str();
    test->add_option("--assigner", t.assigner, "two-means | cop-kmeans | s3lda | l1-lda")->capture_default_str();
    test->add_option("--sim-assigner", t.sim_assigner, "Assigner for simulated data (default: --assigner)");
    test->add_option("--eigen", t.eigen, "hard | soft | known:<file>")->capture_default_str();
    test->add_option("--n-sim", t.n_sim, "Simulated null replicates")->capture_default_str();
    test->add_option("--n-perm", t.n_perm, "Permutations (diproperm)")->capture_default_str();
    test->add_option("--alpha", t.alpha, "Decision level")->capture_default_str();
    test->add_option("--seed", t.seed, "RNG seed (random when omitted; always echoed)");
    test->add_flag("--rotate", t.rotate, "Rotate data onto its covariance eigenbasis first");
    test->add_option("--input", t.input, "Input CSV")->required();
    test->add_option("--output", t.output, "Result file");
    test->add_option("--format", t.format, "json | csv")->capture_default_str();
    test->add_option("--label-col", t.label_col, "Label column name or 0-based index")->capture_default_str();
    test->add_option("--statistic", t.statistic, "diproperm statistic: mean-diff | t-stat")->capture_default_str();
    test->add_option("--null-csv", t.null_csv, "Also write the null statistics here");
    test->add_option("--label-placement", t.placement, "preserve-counts | uniform-signs")->capture_default_str();
    test->add_flag("--add-one", t.add_one, "Use (count + 1)/(N + 1) p-values");
    test->add_option("--C", t.tuning.c, "s3lda unlabeled weight")->capture_default_str();
    test->add_option("--penalty", t.tuning.penalty, "l1-lda penalty")->capture_default_str();
    test->add_option("--restarts", t.tuning.restarts, "k-means restarts")->capture_default_str();
    test->add_option("--max-iters", t.tuning.max_iters, "k-means iterations")->capture_default_str();
    test->add_option("--steps", t.tuning.steps, "s3lda subgradient steps")->capture_default_str();

    SimulateArgs s;
    auto* simulate = app.add_subcommand("simulate", "Run a simulation preset or JSON config");
    simulate->add_option("--preset", s.preset, "Named preset (see --list-presets)");
    simulate->add_option("--config", s.config, "Preset JSON file");
    simulate->add_flag("--desk-scale", s.desk_scale, "Halve replicates and null simulations");
    simulate->add_flag("--list-presets", s.list, "Print preset names and exit");
    simulate->add_option("--reps", s.reps, "Override replicate count");
    simulate->add_option("--n-sim", s.n_sim, "Override null simulations per test");
    simulate->add_option("--alpha", s.alpha, "Rejection level")->capture_default_str();
    simulate->add_option("--seed", s.seed, "RNG seed (random when omitted; always echoed)");
    simulate->add_option("--output", s.output, "Report CSV; the summary goes next to it as .summary.json");

    TheoryArgs th;
    std::string d_list = "50,200,800";
    auto* theory_cmd = app.add_subcommand("theory", "Closed-form cluster-index curves and the dimension sweep");
    theory_cmd->add_option("--r", th.r, "lambda_1 / sum(lambda), in (0, 1]");
    theory_cmd->add_option("--grid", th.grid, "theta grid start:stop:step")->capture_default_str();
    theory_cmd->add_option("--output", th.output, "CSV file (default: stdout)");
    theory_cmd->add_flag("--sweep", th.sweep, "Run the p-value versus dimension study instead");
    theory_cmd->add_option("--d", d_list, "Sweep dimensions")->capture_default_str();
    theory_cmd->add_option("--a", th.study.a, "Sweep mean shift per coordinate")->capture_default_str();
    theory_cmd->add_option("--eta", th.study.eta, "Sweep mixing weight")->capture_default_str();
    theory_cmd->add_option("--lambda", th.study.lambda, "Sweep noise variance")->capture_default_str();
    theory_cmd->add_option("--reps", th.study.reps, "Sweep replicates per dimension")->capture_default_str();
    theory_cmd->add_option("--n", th.study.n, "Sweep sample size")->capture_default_str();
    theory_cmd->add_option("--labeled-per-class", th.study.labeled_per_class, "Sweep labeled rows per class")
        ->capture_default_str();
    theory_cmd->add_option("--n-sim", th.study.n_sim, "Sweep null simulations")->capture_default_str();
    theory_cmd->add_option("--seed", th.seed, "RNG seed for the sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalidInput;
    }

    try {
        if (*test) return cmd_test(t, threads, out);
        if (*simulate) return cmd_simulate(s, threads, out);
        th.study.d_grid = parse_d_list(d_list);
        return cmd_theory(th, threads, out);
    } catch (const EngineFailure& e) {
        err << "error: " << e.what() << '\n';
        return kExitEngineFailure;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitEngineFailure;
    }
}

}  // namespace sigpal::cli
