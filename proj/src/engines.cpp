#include "sigpal/engines.hpp"

#include "sigpal/error.hpp"
#include "sigpal/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace sigpal {

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::sigpal: return "sigpal";
        case Method::sigclust: return "sigclust";
        case Method::diproperm: return "diproperm";
    }
    return "unknown";
}

std::string_view to_string(EigenMethodKind k) noexcept {
    switch (k) {
        case EigenMethodKind::hard: return "hard";
        case EigenMethodKind::soft: return "soft";
        case EigenMethodKind::known: return "known";
    }
    return "unknown";
}

std::string_view to_string(ProjectionStatistic s) noexcept {
    return s == ProjectionStatistic::mean_diff ? "mean-diff" : "t-stat";
}

double empirical_pvalue(double observed, const std::vector<double>& nulls, PValueRule rule, bool add_one) {
    if (nulls.empty()) throw InvalidInput("empirical_pvalue: empty null set");
    std::size_t count = 0;
    for (double v : nulls)
        if (rule == PValueRule::less ? v < observed : v > observed) ++count;
    if (add_one) return static_cast<double>(count + 1) / static_cast<double>(nulls.size() + 1);
    return static_cast<double>(count) / static_cast<double>(nulls.size());
}

EigenSpectrum estimate_null_spectrum(const Matrix& centered_x, const EigenMethod& method) {
    if (method.kind == EigenMethodKind::known) {
        if (!method.known) throw InvalidInput("known eigen method requires a spectrum");
        if (method.known->size() != centered_x.cols())
            throw InvalidInput("known spectrum has " + std::to_string(method.known->size()) + " values but data has " +
                               std::to_string(centered_x.cols()) + " columns");
        return *method.known;
    }
    const EigenSpectrum sample = sample_eigenvalues(centered_x);
    const double noise = background_noise(centered_x);
    return method.kind == EigenMethodKind::hard ? hard_threshold(sample, noise) : soft_threshold(sample, noise);
}

namespace {

// Stream tags under the engine seed.
constexpr std::uint64_t kObservedStream = 0;
constexpr std::uint64_t kSimulationStream = 1;
constexpr std::uint64_t kAssignerStream = 2;
constexpr std::uint64_t kLabelStream = 3;
constexpr std::uint64_t kPermutationStream = 4;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void describe_spectrum(TestResult& r, const EigenMethod& eigen, const EigenSpectrum& s) {
    r.metadata["eigen_method"] = std::string(to_string(eigen.kind));
    if (eigen.kind != EigenMethodKind::known)
        r.metadata["noise_estimator"] = "squared MAD of centered entries / 0.6744897501960817";
    if (s.noise_level) r.metadata["noise_level"] = fmt(*s.noise_level);
    if (s.tau) r.metadata["tau"] = fmt(*s.tau);
    if (eigen.kind == EigenMethodKind::soft) r.metadata["energy_preserved"] = s.energy_preserved ? "true" : "false";
    r.metadata["lambda1"] = fmt(s.values(0));
    r.metadata["eigen_sum"] = fmt(s.sum());
}

void describe_assigner(TestResult& r, const std::string& prefix, const AssignerSpec& a) {
    r.metadata[prefix] = std::string(to_string(a.kind));
    switch (a.kind) {
        case AssignerKind::two_means:
        case AssignerKind::cop_kmeans:
            r.metadata[prefix + ".restarts"] = std::to_string(a.restarts);
            r.metadata[prefix + ".max_iters"] = std::to_string(a.max_iters);
            break;
        case AssignerKind::s3lda:
            r.metadata[prefix + ".C"] = fmt(a.c);
            r.metadata[prefix + ".steps"] = std::to_string(a.steps);
            r.metadata[prefix + ".solver"] = "projected subgradient, step 0.5/sqrt(t), best iterate";
            break;
        case AssignerKind::l1_lda:
            r.metadata[prefix + ".penalty"] = fmt(a.penalty);
            break;
    }
}

Matrix centered_copy(const Matrix& x) {
    Matrix c = x;
    center_columns(c);
    return c;
}

void require_simulation_input(const Matrix& x, const SimulationOptions& o) {
    if (x.rows() < 3) throw InvalidInput("simulation tests need at least 3 rows");
    if (o.n_sim < 1) throw InvalidInput("n_sim must be >= 1");
}

template <typename Replicate>
std::vector<double> run_replicates(int count, int threads, Replicate&& replicate) {
    std::vector<double> out(static_cast<std::size_t>(count));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        try {
            out[i] = replicate(i);
        } catch (const std::exception& e) {
            throw EngineFailure("null replicate " + std::to_string(i) + ": " + e.what());
        }
    });
    return out;
}

}  // namespace

TestResult sigclust(const Matrix& x, const EigenMethod& eigen, const AssignerSpec& spec, const SimulationOptions& options) {
    require_simulation_input(x, options);
    AssignerSpec km = spec;
    km.kind = AssignerKind::two_means;
    km.validate();

    const Matrix xc = centered_copy(x);
    Rng observed_rng = derive_stream(options.seed, {kObservedStream});
    const double observed = two_means(xc, km, observed_rng).ci;
    const EigenSpectrum spectrum = estimate_null_spectrum(xc, eigen);
    const auto n = x.rows();

    TestResult r;
    r.method = Method::sigclust;
    r.observed_stat = observed;
    r.null_stats = run_replicates(options.n_sim, options.threads, [&](std::size_t i) {
        Rng sim_rng = derive_stream(options.seed, {kSimulationStream, i});
        Matrix sim = simulate_null(spectrum, n, sim_rng);
        center_columns(sim);
        Rng asg_rng = derive_stream(options.seed, {kAssignerStream, i});
        return two_means(sim, km, asg_rng).ci;
    });
    r.p_value = empirical_pvalue(observed, r.null_stats, PValueRule::less, options.add_one);
    r.n_sim_or_perm = options.n_sim;
    r.seed = options.seed;
    r.metadata["statistic"] = "cluster-index";
    r.metadata["p_rule"] = options.add_one ? "(#{null < observed} + 1) / (N + 1)" : "#{null < observed} / N";
    r.metadata["n"] = std::to_string(n);
    r.metadata["d"] = std::to_string(x.cols());
    r.metadata["centered"] = "true";
    r.metadata["rescaled"] = "false";
    describe_assigner(r, "assigner", km);
    describe_spectrum(r, eigen, spectrum);
    return r;
}

namespace {

std::vector<Label> place_labels(Eigen::Index n, Eigen::Index n_pos, Eigen::Index n_neg, LabelPlacement placement,
                                bool need_both, Rng& rng) {
    std::vector<Label> labels(static_cast<std::size_t>(n), Label::Unlabeled);
    const auto n_l = n_pos + n_neg;
    if (n_l == 0) return labels;
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<Label> drawn(static_cast<std::size_t>(n_l));
    if (placement == LabelPlacement::preserve_counts) {
        std::fill_n(drawn.begin(), n_pos, Label::Pos);
        std::fill(drawn.begin() + n_pos, drawn.end(), Label::Neg);
        std::shuffle(drawn.begin(), drawn.end(), rng);
    } else {
        std::bernoulli_distribution coin(0.5);
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (auto& l : drawn) l = coin(rng) ? Label::Pos : Label::Neg;
            const bool has_pos = std::find(drawn.begin(), drawn.end(), Label::Pos) != drawn.end();
            const bool has_neg = std::find(drawn.begin(), drawn.end(), Label::Neg) != drawn.end();
            if (!need_both || n_l < 2 || (has_pos && has_neg)) break;
        }
    }
    for (Eigen::Index k = 0; k < n_l; ++k) labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])] = drawn[static_cast<std::size_t>(k)];
    return labels;
}

}  // namespace

TestResult sigpal(const PartiallyLabeledDataset& data, const AssignerSpec& assigner, const AssignerSpec& sim_assigner,
                  const EigenMethod& eigen, const SimulationOptions& options) {
    require_simulation_input(data.x(), options);
    assigner.validate();
    sim_assigner.validate();
    for (const auto* a : {&assigner, &sim_assigner})
        if (a->needs_labels() && (data.n_pos() == 0 || data.n_neg() == 0))
            throw InvalidInput(std::string(to_string(a->kind)) + " needs labeled rows from both classes");

    const Matrix xc = centered_copy(data.x());
    const PartiallyLabeledDataset centered = data.with_x(xc);
    Rng observed_rng = derive_stream(options.seed, {kObservedStream});
    ClusterAssignment observed;
    try {
        observed = assign(centered, assigner, observed_rng);
    } catch (const EngineFailure& e) {
        throw EngineFailure(std::string("observed data: ") + e.what());
    }
    const EigenSpectrum spectrum = estimate_null_spectrum(xc, eigen);
    const auto n = data.n();

    TestResult r;
    r.method = Method::sigpal;
    r.observed_stat = observed.ci;
    r.null_stats = run_replicates(options.n_sim, options.threads, [&](std::size_t i) {
        Rng sim_rng = derive_stream(options.seed, {kSimulationStream, i});
        Matrix sim = simulate_null(spectrum, n, sim_rng);
        center_columns(sim);
        Rng label_rng = derive_stream(options.seed, {kLabelStream, i});
        auto labels = place_labels(n, data.n_pos(), data.n_neg(), options.placement, sim_assigner.needs_labels(), label_rng);
        Rng asg_rng = derive_stream(options.seed, {kAssignerStream, i});
        return assign(PartiallyLabeledDataset(std::move(sim), std::move(labels)), sim_assigner, asg_rng).ci;
    });
    r.p_value = empirical_pvalue(r.observed_stat, r.null_stats, PValueRule::less, options.add_one);
    r.n_sim_or_perm = options.n_sim;
    r.seed = options.seed;
    r.metadata["statistic"] = "cluster-index";
    r.metadata["p_rule"] = options.add_one ? "(#{null < observed} + 1) / (N + 1)" : "#{null < observed} / N";
    r.metadata["n"] = std::to_string(n);
    r.metadata["d"] = std::to_string(data.d());
    r.metadata["n_labeled"] = std::to_string(data.n_labeled());
    r.metadata["n_pos"] = std::to_string(data.n_pos());
    r.metadata["n_neg"] = std::to_string(data.n_neg());
    r.metadata["theta"] = fmt(data.theta());
    r.metadata["label_placement"] =
        options.placement == LabelPlacement::preserve_counts ? "preserve-counts" : "uniform-signs";
    r.metadata["centered"] = "true";
    r.metadata["rescaled"] = "false";
    describe_assigner(r, "assigner", assigner);
    describe_assigner(r, "sim_assigner", sim_assigner);
    describe_spectrum(r, eigen, spectrum);
    return r;
}

namespace {

struct ProjectionOutcome {
    double stat;
    bool fallback;
};

ProjectionOutcome projection_statistic(const Matrix& x, const std::vector<Label>& labels, ProjectionStatistic which,
                                       const Vector& fallback_axis) {
    const auto d = x.cols();
    Vector pos = Vector::Zero(d), neg = Vector::Zero(d);
    double np = 0, nn = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (labels[static_cast<std::size_t>(i)] == Label::Pos) {
            pos += x.row(i).transpose();
            ++np;
        } else {
            neg += x.row(i).transpose();
            ++nn;
        }
    }
    Vector dir = pos / np - neg / nn;
    bool fallback = false;
    if (!(dir.norm() > 0.0)) {
        dir = fallback_axis;
        fallback = true;
    } else {
        dir.normalize();
    }
    const Vector z = x * dir;
    double sp = 0, sn = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) (labels[static_cast<std::size_t>(i)] == Label::Pos ? sp : sn) += z(i);
    const double mp = sp / np, mn = sn / nn;
    if (which == ProjectionStatistic::mean_diff) return {mp - mn, fallback};
    double vp = 0, vn = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (labels[static_cast<std::size_t>(i)] == Label::Pos) vp += (z(i) - mp) * (z(i) - mp);
        else vn += (z(i) - mn) * (z(i) - mn);
    }
    vp /= (np - 1);
    vn /= (nn - 1);
    const double se = std::sqrt(vp / np + vn / nn);
    if (!(se > 0.0)) {
        const double diff = mp - mn;
        return {diff > 0 ? std::numeric_limits<double>::infinity() : diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0,
                fallback};
    }
    return {(mp - mn) / se, fallback};
}

}  // namespace

TestResult diproperm(const PartiallyLabeledDataset& data, ProjectionStatistic statistic, const PermutationOptions& options) {
    if (!data.fully_labeled()) throw InvalidInput("diproperm requires full labels");
    if (data.n_pos() == 0 || data.n_neg() == 0) throw InvalidInput("diproperm requires both classes");
    if (statistic == ProjectionStatistic::t_stat && (data.n_pos() < 2 || data.n_neg() < 2))
        throw InvalidInput("diproperm t-statistic needs at least 2 rows per class");
    if (options.n_perm < 1) throw InvalidInput("n_perm must be >= 1");

    const Matrix& x = data.x();
    Matrix xc = x;
    center_columns(xc);
    Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinV);
    Vector axis = svd.matrixV().col(0);

    const auto observed = projection_statistic(x, data.labels(), statistic, axis);
    std::vector<char> fell_back(static_cast<std::size_t>(options.n_perm), 0);

    TestResult r;
    r.method = Method::diproperm;
    r.observed_stat = observed.stat;
    r.null_stats = run_replicates(options.n_perm, options.threads, [&](std::size_t i) {
        Rng perm_rng = derive_stream(options.seed, {kPermutationStream, i});
        std::vector<Label> labels = data.labels();
        std::shuffle(labels.begin(), labels.end(), perm_rng);
        const auto out = projection_statistic(x, labels, statistic, axis);
        fell_back[i] = out.fallback;
        return out.stat;
    });
    r.p_value = empirical_pvalue(observed.stat, r.null_stats, PValueRule::greater, options.add_one);
    r.n_sim_or_perm = options.n_perm;
    r.seed = options.seed;
    r.metadata["direction"] = "mean-difference";
    r.metadata["statistic"] = std::string(to_string(statistic));
    r.metadata["p_rule"] = options.add_one ? "(#{null > observed} + 1) / (N + 1)" : "#{null > observed} / N";
    r.metadata["n"] = std::to_string(data.n());
    r.metadata["d"] = std::to_string(data.d());
    const auto fallbacks = std::count(fell_back.begin(), fell_back.end(), 1);
    if (observed.fallback)
        r.metadata["warning"] = "class means coincide; observed direction fell back to the first principal axis";
    if (fallbacks > 0) r.metadata["permutation_fallbacks"] = std::to_string(fallbacks);
    return r;
}

}  // namespace sigpal
