#include "sigpal/theory.hpp"

#include "sigpal/cluster_index.hpp"
#include "sigpal/engines.hpp"
#include "sigpal/error.hpp"
#include "sigpal/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sigpal::theory {

double top_ratio(const EigenSpectrum& spectrum) {
    if (spectrum.values.size() == 0) throw InvalidInput("spectrum is empty");
    const double sum = spectrum.values.sum();
    if (!(sum > 0.0)) throw InvalidInput("spectrum sum must be positive");
    return spectrum.values.maxCoeff() / sum;
}

EigenBias eigen_bias(const EigenSpectrum& est, const EigenSpectrum& truth) {
    if (est.values.size() == 0 || truth.values.size() == 0) throw InvalidInput("eigen_bias: empty spectrum");
    const double est_sum = est.values.sum();
    const double true_sum = truth.values.sum();
    if (!(est_sum > 0.0) || !(true_sum > 0.0)) throw InvalidInput("eigen_bias: spectrum sums must be positive");
    const double est_top = est.values.maxCoeff();
    const double true_top = truth.values.maxCoeff();

    EigenBias b{};
    b.e = est_top / est_sum - true_top / true_sum;
    b.delta1 = est_top - true_top;
    b.delta = est_sum - true_sum;
    const double numerator = true_sum * b.delta1 - true_top * b.delta;
    b.predicted_sign = (numerator > 0.0) - (numerator < 0.0);
    return b;
}

McEstimate monte_carlo_tci(double theta, const EigenSpectrum& spectrum, Eigen::Index n, int reps, std::uint64_t seed,
                           int threads) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidInput("theta must lie in [0, 1]");
    if (n < 100) throw InvalidInput("monte_carlo_tci needs n >= 100");
    if (reps < 1) throw InvalidInput("monte_carlo_tci needs reps >= 1");
    const Eigen::Index top = std::max_element(spectrum.values.begin(), spectrum.values.end()) - spectrum.values.begin();
    const auto n_labeled = static_cast<Eigen::Index>(std::llround(theta * static_cast<double>(n)));

    std::vector<double> ci(static_cast<std::size_t>(reps));
    parallel_for(ci.size(), threads, [&](std::size_t r) {
        Rng rng = derive_stream(seed, {r});
        const Matrix x = simulate_null(spectrum, n, rng);
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), Eigen::Index{0});
        std::shuffle(rows.begin(), rows.end(), rng);
        std::vector<int> clusters(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) clusters[static_cast<std::size_t>(i)] = x(i, top) >= 0.0 ? 1 : 2;
        std::bernoulli_distribution coin(0.5);
        for (Eigen::Index k = 0; k < n_labeled; ++k) clusters[static_cast<std::size_t>(rows[static_cast<std::size_t>(k)])] = coin(rng) ? 1 : 2;
        ci[r] = cluster_index(x, std::span<const int>(clusters));
    });

    const double mean = std::accumulate(ci.begin(), ci.end(), 0.0) / static_cast<double>(reps);
    double ss = 0.0;
    for (double v : ci) ss += (v - mean) * (v - mean);
    const double se = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps)) : 0.0;
    return {mean, se};
}

void AsymptoticStudyConfig::validate() const {
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("eta must lie in (0, 1)");
    if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
    if (!std::isfinite(a)) throw InvalidInput("a must be finite");
    if (d_grid.empty()) throw InvalidInput("d_grid is empty");
    for (std::size_t i = 0; i < d_grid.size(); ++i) {
        if (d_grid[i] < 1) throw InvalidInput("d_grid entries must be >= 1");
        if (i > 0 && d_grid[i] <= d_grid[i - 1]) throw InvalidInput("d_grid must be strictly increasing");
    }
    if (reps < 1) throw InvalidInput("reps must be >= 1");
    if (n < 3) throw InvalidInput("n must be >= 3");
    if (labeled_per_class < 1 || 2 * labeled_per_class > n) throw InvalidInput("labeled_per_class out of range");
    if (n_sim < 1) throw InvalidInput("n_sim must be >= 1");
}

namespace {

// eta N(0, D) + (1 - eta) N(mu, D); rows from N(mu, D) are the Pos class.
PartiallyLabeledDataset draw_asymptotic_mixture(const AsymptoticStudyConfig& c, Eigen::Index d, Rng& rng) {
    std::bernoulli_distribution from_shifted(1.0 - c.eta);
    std::vector<char> shifted(static_cast<std::size_t>(c.n));
    for (int attempt = 0;; ++attempt) {
        for (auto& s : shifted) s = from_shifted(rng);
        const auto pos = std::count(shifted.begin(), shifted.end(), 1);
        if (pos >= c.labeled_per_class && c.n - pos >= c.labeled_per_class) break;
        if (attempt == 99) throw EngineFailure("mixture draw never produced enough rows per component");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(c.lambda);
    Matrix x(c.n, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < c.n; ++i) x(i, j) = sd * normal(rng) + (shifted[static_cast<std::size_t>(i)] ? c.a : 0.0);

    std::vector<Label> labels(static_cast<std::size_t>(c.n), Label::Unlabeled);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(c.n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::Index pos = 0, neg = 0;
    for (Eigen::Index i : order) {
        if (shifted[static_cast<std::size_t>(i)] && pos < c.labeled_per_class) {
            labels[static_cast<std::size_t>(i)] = Label::Pos;
            ++pos;
        } else if (!shifted[static_cast<std::size_t>(i)] && neg < c.labeled_per_class) {
            labels[static_cast<std::size_t>(i)] = Label::Neg;
            ++neg;
        }
    }
    return {std::move(x), std::move(labels)};
}

}  // namespace

std::vector<AsymptoticRow> asymptotic_pvalue_study(const AsymptoticStudyConfig& config, std::uint64_t seed, int threads) {
    config.validate();
    AssignerSpec cop;
    cop.kind = AssignerKind::cop_kmeans;
    const double marginal = config.lambda + config.eta * (1.0 - config.eta) * config.a * config.a;

    std::vector<AsymptoticRow> rows;
    for (std::size_t k = 0; k < config.d_grid.size(); ++k) {
        const Eigen::Index d = config.d_grid[k];
        const EigenMethod eigen = EigenMethod::with_known(known_spectrum(Vector::Constant(d, marginal)));
        std::vector<double> p(static_cast<std::size_t>(config.reps));
        parallel_for(p.size(), threads, [&](std::size_t r) {
            Rng gen = derive_stream(seed, {k, r, 0});
            const auto data = draw_asymptotic_mixture(config, d, gen);
            SimulationOptions opts;
            opts.n_sim = config.n_sim;
            opts.seed = derive_seed(seed, {k, r, 1});
            p[r] = sigpal::sigpal(data, cop, cop, eigen, opts).p_value;
        });
        const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
        double ss = 0.0;
        for (double v : p) ss += (v - mean) * (v - mean);
        const double sd = p.size() > 1 ? std::sqrt(ss / static_cast<double>(p.size() - 1)) : 0.0;
        rows.push_back({d, mean, sd, std::move(p)});
    }
    return rows;
}

}  // namespace sigpal::theory
