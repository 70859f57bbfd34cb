// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.

#include "sigpal/cli.hpp"
#include "sigpal/cluster_index.hpp"
#include "sigpal/engines.hpp"
#include "sigpal/error.hpp"
#include "sigpal/sim_harness.hpp"
#include "sigpal/theory.hpp"
#include "support.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

using namespace sigpal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// 1. Closed-form identities.
Outcome closed_form_identities() {
    using namespace theory;
    Outcome o;
    const double pi = std::numbers::pi;
    double worst = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double r = i / 100.0;
        worst = std::max(worst, std::abs(tci_sigpal(0.0, r) - tci_sigclust(r)));
        worst = std::max(worst, std::abs(tci_difference(0.5, r) - (0.5 + 7.0 * r / (4.0 * pi))));
        worst = std::max(worst, std::abs(tci_difference(0.0, r)));
        worst = std::max(worst, std::abs(tci_sigpal(1.0, r) - 2.0));
    }
    double prev = -1.0;
    bool increasing = true;
    for (int i = 0; i <= 100; ++i) {
        const double t = i / 100.0;
        const double cubic = (t * t * t - 3.0 * t * t + (pi + 3.0) * t) / pi;
        worst = std::max(worst, std::abs(tci_difference(t, 0.5) - cubic));
        const double u = 1.0 - t;
        worst = std::max(worst, std::abs(wss_lambda1_coefficient(t) - ((1.0 + t) / 2.0 - u * u * u / pi)));
        const double diff = tci_difference(t, 0.5);
        increasing = increasing && diff > prev;
        prev = diff;
    }
    worst = std::max(worst, std::abs(tci_sigpal(0.5, 0.5) - (1.5 - 1.0 / (8.0 * pi))));
    worst = std::max(worst, std::abs(tci_sigclust(1.0) - (1.0 - 2.0 / pi)));
    // theta = 0: the per-class coefficient doubled reproduces the SigClust constant.
    worst = std::max(worst, std::abs(2.0 * wss_lambda1_coefficient(0.0) - (1.0 - 2.0 / pi)));
    o.require(worst <= 1e-12, "max identity error " + fmt(worst));
    o.require(increasing, "difference not strictly increasing in theta");
    o.detail = o.detail.empty() ? "max identity error " + fmt(worst, 3) : o.detail;
    return o;
}

// 2. Cluster index properties.
Outcome cluster_index_properties() {
    Outcome o;
    Rng rng(11);
    double worst_loc = 0.0, worst_rot = 0.0, worst_scale = 0.0;
    bool in_range = true;
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 5 + trial % 20, d = 1 + trial % 7;
        const Matrix x = testing::random_normal(n, d, rng);
        std::vector<int> a(static_cast<std::size_t>(n));
        for (auto& c : a) c = 1 + static_cast<int>(rng() % 2);
        a[0] = 1;
        a[1] = 2;
        const double ci = cluster_index(x, a);
        in_range = in_range && ci >= 0.0 && ci <= 1.0;
        Matrix shifted = x;
        shifted.rowwise() += 100.0 * testing::random_normal(1, d, rng).row(0);
        worst_loc = std::max(worst_loc, rel_diff(cluster_index(shifted, a), ci));
        const Matrix rotated = x * testing::random_orthogonal(d, rng);
        worst_rot = std::max(worst_rot, rel_diff(cluster_index(rotated, a), ci));
        for (double s : {-3.5, 1e-3, 7.0}) {
            const Matrix scaled = s * x;
            worst_scale = std::max(worst_scale, rel_diff(cluster_index(scaled, a), ci));
        }
    }
    o.require(worst_loc <= 1e-9, "location " + fmt(worst_loc));
    o.require(worst_rot <= 1e-9, "rotation " + fmt(worst_rot));
    o.require(worst_scale <= 1e-12, "scale " + fmt(worst_scale));
    o.require(in_range, "CI outside [0,1]");

    Matrix line(4, 1);
    line << 0, 1, 2, 3;
    const std::vector<int> split{1, 1, 2, 2};
    o.require(std::abs(cluster_index(line, split) - 0.2) <= 1e-15, "hand case CI != 0.2");

    int instances = 0;
    double worst_gap = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 4 + trial % 9, d = 1 + trial % 4;  // n up to 12
        const Matrix x = testing::random_normal(n, d, rng);
        const double best = brute_force_min_ci(x).ci;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            std::vector<int> a(static_cast<std::size_t>(n));
            int n1 = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                a[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1 : 2;
                n1 += a[static_cast<std::size_t>(i)] == 1;
            }
            if (n1 == 0 || n1 == n) continue;
            worst_gap = std::max(worst_gap, best - cluster_index(x, a));
            ++instances;
        }
    }
    o.require(worst_gap <= 1e-12, "oracle dominated by " + fmt(worst_gap));
    if (o.pass)
        o.detail = "invariance errors " + fmt(worst_loc, 2) + "/" + fmt(worst_rot, 2) + "/" + fmt(worst_scale, 2) + ", " +
                   std::to_string(instances) + " enumerated assignments";
    return o;
}

// 3. Spectral estimation.
Outcome spectral_suite() {
    Outcome o;
    Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix x = testing::random_normal(10, 50, rng);
        center_columns(x);
        const EigenSpectrum gram = sample_eigenvalues(x);
        const Matrix cov = x.transpose() * x / 9.0;
        Eigen::SelfAdjointEigenSolver<Matrix> dense(cov);
        Vector oracle = dense.eigenvalues().reverse();
        for (Eigen::Index j = 0; j < 9; ++j) worst = std::max(worst, rel_diff(gram.values(j), oracle(j)));
        for (Eigen::Index j = 9; j < 50; ++j)
            o.require(gram.values(j) <= 1e-12 * gram.values(0), "nonzero tail eigenvalue");

        const double noise = background_noise(x);
        const EigenSpectrum hard = hard_threshold(gram, noise);
        const EigenSpectrum soft = soft_threshold(gram, noise);
        o.require(hard.values.minCoeff() >= noise && soft.values.minCoeff() >= noise * (1 - 1e-15), "noise floor");
        if (soft.energy_preserved)
            o.require(rel_diff(soft.sum(), gram.sum()) <= 1e-8, "soft energy " + fmt(rel_diff(soft.sum(), gram.sum())));
    }
    o.require(worst <= 1e-8, "gram vs dense " + fmt(worst));

    Vector v(3);
    v << 10, 0.5, 0.5;
    EigenSpectrum hand;
    hand.values = v;
    const EigenSpectrum soft = soft_threshold(hand, 1.0);
    Vector want(3);
    want << 9, 1, 1;
    o.require((soft.values - want).cwiseAbs().maxCoeff() <= 1e-8 * 11, "hand case soft values");
    o.require(soft.tau && std::abs(*soft.tau - 1.0) <= 1e-8, "hand case tau");
    o.require(soft.energy_preserved && rel_diff(soft.sum(), 11.0) <= 1e-8, "hand case energy");
    Vector h(3);
    h << 5, 2, 0.5;
    hand.values = h;
    Vector hard_want(3);
    hard_want << 5, 2, 1;
    o.require(hard_threshold(hand, 1.0).values == hard_want, "hard floor hand case");
    if (o.pass) o.detail = "gram vs dense max rel " + fmt(worst, 2);
    return o;
}

// 4. theta = 0 reduction.
Outcome theta_zero_reduction() {
    Outcome o;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed * 7919);
        const Matrix x = testing::random_normal(30, 60, rng);
        AssignerSpec two;
        two.kind = AssignerKind::two_means;
        SimulationOptions so;
        so.n_sim = 50;
        so.seed = seed;
        const TestResult a = sigclust(x, EigenMethod::soft(), two, so);
        const TestResult b = sigpal::sigpal(PartiallyLabeledDataset::unlabeled(x), two, two, EigenMethod::soft(), so);
        const bool same = a.observed_stat == b.observed_stat && a.null_stats == b.null_stats &&
                          a.p_value == b.p_value && a.seed == b.seed && a.n_sim_or_perm == b.n_sim_or_perm;
        o.require(same, "seed " + std::to_string(seed) + " differs");
    }
    if (o.pass) o.detail = "10/10 seeds bit-identical";
    return o;
}

// 5. Size calibration.
Outcome size_calibration() {
    Outcome o;
    const std::vector<std::pair<double, Eigen::Index>> settings{{100, 1}, {50, 2}, {1, 1}, {10, 10}};
    std::string summary;
    for (std::size_t k = 0; k < settings.size(); ++k) {
        sim::GeneratorSpec g;
        g.kind = sim::Case::one_cluster;
        g.v = settings[k].first;
        g.w = settings[k].second;
        sim::ExperimentOptions eo;
        eo.reps = 100;
        eo.n_sim = 100;
        eo.seed = 1000 + k;
        const auto report = sim::run_experiment(g, {sim::method_sigpal_cop(), sim::method_sigclust()}, eo);
        for (const auto& [method, count] : report.rejections()) {
            o.require(count <= 9, "(" + fmt(g.v) + "," + std::to_string(g.w) + ") " + method + " rejected " +
                                      std::to_string(count));
            summary += (summary.empty() ? "" : " ") + method + "(" + fmt(g.v) + "," + std::to_string(g.w) +
                       ")=" + std::to_string(count);
        }
        for (const auto& row : report.rows) o.require(row.error.empty(), "engine error: " + row.error);
    }
    if (o.pass) o.detail = "rejections " + summary;
    else o.detail += " | " + summary;
    return o;
}

// 6. Uniform p-values with the known spectrum.
Outcome known_covariance_uniformity() {
    Outcome o;
    sim::GeneratorSpec g;
    g.kind = sim::Case::one_cluster;
    g.v = 10;
    g.w = 10;
    sim::MethodConfig m = sim::method_sigpal_cop();
    m.eigen = EigenMethodKind::known;
    sim::ExperimentOptions eo;
    eo.reps = 200;
    eo.n_sim = 100;
    eo.seed = 606;
    const auto report = sim::run_experiment(g, {m}, eo);
    const auto p = report.p_values(m.id);
    const double ks = testing::ks_uniform_pvalue(p);
    o.require(ks > 0.01, "KS p = " + fmt(ks));
    for (const auto& row : report.rows) o.require(row.error.empty(), "engine error: " + row.error);
    o.detail = "KS p = " + fmt(ks) + " over " + std::to_string(p.size()) + " replicates" +
               (o.pass ? "" : " | failed: " + o.detail);
    return o;
}

// 7. Power ordering.
Outcome power_ordering() {
    Outcome o;
    sim::GeneratorSpec g;
    g.kind = sim::Case::mixture_one_direction;
    g.v = 2;
    g.w = 50;
    g.a = 2;
    sim::ExperimentOptions eo;
    eo.reps = 100;
    eo.n_sim = 100;
    eo.seed = 404;
    const auto report = sim::run_experiment(g, {sim::method_sigpal_cop(), sim::method_sigclust()}, eo);
    const int pal = report.rejections("sigpal_cop", 0.05);
    const int clust = report.rejections("sigclust", 0.05);
    o.require(pal - clust >= 15, "rate gap " + fmt((pal - clust) / 100.0));
    o.require(clust <= 15, "sigclust rejected " + std::to_string(clust));
    for (const auto& row : report.rows) o.require(row.error.empty(), "engine error: " + row.error);
    o.detail = "sigpal_cop " + std::to_string(pal) + "/100, sigclust " + std::to_string(clust) + "/100" +
               (o.pass ? "" : " | failed: " + o.detail);
    return o;
}

// 8. Two-dimensional regime with a weak mean shift.
Outcome weak_shift_2d() {
    Outcome o;
    sim::GeneratorSpec g;
    g.kind = sim::Case::mixture_one_direction;
    g.n = 100;
    g.d = 2;
    g.v = 1;
    g.w = 1;
    g.a = 0.5;
    g.labeled_per_class = 25;
    std::vector<double> p_clust, p_pal;
    int dpp_zero = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng = derive_stream(seed, {8});
        const auto mix = sim::gen_mixture(g, rng);
        SimulationOptions so;
        so.n_sim = 100;
        so.seed = seed;
        AssignerSpec two;
        two.kind = AssignerKind::two_means;
        p_clust.push_back(sigclust(mix.data.x(), EigenMethod::soft(), two, so).p_value);
        p_pal.push_back(sigpal::sigpal(mix.data, AssignerSpec{}, AssignerSpec{}, EigenMethod::soft(), so).p_value);
        PermutationOptions po;
        po.n_perm = 1000;
        po.seed = seed;
        const PartiallyLabeledDataset full(mix.data.x(), mix.truth);
        dpp_zero += diproperm(full, ProjectionStatistic::mean_diff, po).p_value == 0.0;
    }
    const double mc = testing::median(p_clust), mp = testing::median(p_pal);
    o.require(mc > 0.05, "median sigclust p " + fmt(mc));
    o.require(mp < 0.05, "median sigpal p " + fmt(mp));
    o.require(dpp_zero >= 18, "diproperm p=0 in " + std::to_string(dpp_zero) + "/20");
    o.detail = "median p sigclust " + fmt(mc) + ", sigpal " + fmt(mp) + ", diproperm p=0 in " +
               std::to_string(dpp_zero) + "/20" + (o.pass ? "" : " | failed: " + o.detail);
    return o;
}

// 9. p-value trend in the dimension.
Outcome dimension_trend() {
    Outcome o;
    theory::AsymptoticStudyConfig c;
    c.a = 1.0;
    c.lambda = 1.0;
    c.d_grid = {50, 200, 800};
    c.reps = 20;
    const auto rows = theory::asymptotic_pvalue_study(c, 909);
    std::string means;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        means += (k ? "," : "") + fmt(rows[k].mean_p);
        if (k > 0) o.require(rows[k].mean_p < rows[k - 1].mean_p, "mean p not strictly decreasing");
    }
    o.require(rows.back().mean_p < 0.05, "mean p at d=800 is " + fmt(rows.back().mean_p));

    theory::AsymptoticStudyConfig null_c = c;
    null_c.a = 0.0;
    const auto null_rows = theory::asymptotic_pvalue_study(null_c, 910);
    std::vector<double> x, y;
    std::string null_means;
    for (const auto& r : null_rows) {
        null_means += (null_means.empty() ? "" : ",") + fmt(r.mean_p);
        for (double p : r.p_values) {
            x.push_back(std::log(static_cast<double>(r.d)));
            y.push_back(p);
        }
    }
    const auto slope = testing::slope_test(x, y);
    o.require(slope.p_decreasing > 0.05, "null control trend p = " + fmt(slope.p_decreasing));
    o.detail = "mean p (d=50,200,800) " + means + "; null " + null_means + ", trend p " +
               fmt(slope.p_decreasing) + (o.pass ? "" : " | failed: " + o.detail);
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"sigpal"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// 10. CLI determinism across worker counts.
Outcome cli_determinism() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "sigpal_acceptance";
    fs::create_directories(dir);
    {
        Rng rng(77);
        sim::GeneratorSpec g;
        g.kind = sim::Case::mixture_one_direction;
        g.n = 30;
        g.d = 40;
        g.a = 1.5;
        g.labeled_per_class = 5;
        write_csv(dir / "data.csv", sim::gen_mixture(g, rng).data);
        g.labeled_per_class = 15;
        Rng rng2(78);
        const auto full = sim::gen_mixture(g, rng2);
        write_csv(dir / "full.csv", PartiallyLabeledDataset(full.data.x(), full.truth));
    }
    const std::string data = (dir / "data.csv").string(), full = (dir / "full.csv").string();
    const std::vector<std::vector<std::string>> commands{
        {"test", "--method", "sigpal", "--assigner", "cop-kmeans", "--n-sim", "40", "--seed", "7", "--input", data},
        {"test", "--method", "sigpal", "--assigner", "s3lda", "--sim-assigner", "l1-lda", "--n-sim", "20", "--seed",
         "8", "--input", data, "--format", "csv"},
        {"test", "--method", "sigclust", "--eigen", "hard", "--n-sim", "40", "--seed", "9", "--rotate", "--input", data},
        {"test", "--method", "diproperm", "--n-perm", "200", "--seed", "10", "--input", full},
        {"simulate", "--preset", "fig4", "--reps", "3", "--n-sim", "10", "--seed", "11"},
        {"theory", "--sweep", "--d", "20,40", "--reps", "2", "--n-sim", "10", "--seed", "12"},
        {"theory", "--r", "0.3", "--grid", "0:1:0.05"},
    };
    int compared = 0;
    for (std::size_t k = 0; k < commands.size(); ++k) {
        std::vector<std::string> outputs;
        for (const char* threads : {"1", "3", "1"}) {
            const fs::path out = dir / ("out" + std::to_string(k) + "_" + threads + ".txt");
            std::vector<std::string> args{"--threads", threads};
            args.insert(args.end(), commands[k].begin(), commands[k].end());
            args.insert(args.end(), {"--output", out.string()});
            const int code = run_cli(args);
            o.require(code == 0, "command " + std::to_string(k) + " exit " + std::to_string(code));
            std::string bytes = slurp(out);
            const fs::path summary = fs::path(out).replace_extension(".summary.json");
            if (fs::exists(summary)) bytes += slurp(summary);
            outputs.push_back(std::move(bytes));
        }
        o.require(!outputs[0].empty(), "command " + std::to_string(k) + " wrote nothing");
        o.require(outputs[0] == outputs[1] && outputs[1] == outputs[2],
                  "command " + std::to_string(k) + " output differs across runs");
        ++compared;
    }
    fs::remove_all(dir);
    if (o.pass) o.detail = std::to_string(compared) + " commands byte-identical at 1 and 3 threads";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"closed-form identity suite", closed_form_identities},
        {"cluster index property suite", cluster_index_properties},
        {"spectral suite", spectral_suite},
        {"theta=0 reduction", theta_zero_reduction},
        {"size calibration", size_calibration},
        {"known-covariance uniformity", known_covariance_uniformity},
        {"power ordering", power_ordering},
        {"weak-shift 2-d regime", weak_shift_2d},
        {"dimension trend", dimension_trend},
        {"CLI determinism", cli_determinism},
    };
    const std::vector<double> budgets{1, 30, 10, 60, 1800, 900, 1800, 600, 1200, 600};
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > budgets[k]) {
            o.pass = false;
            o.detail += "; runtime " + fmt(secs) + " s exceeds " + fmt(budgets[k]) + " s";
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << criteria[k].first << " ("
                  << o.detail << ", " << fmt(secs, 3) << " s)" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
