#include "sigpal/sim_harness.hpp"

#include "sigpal/error.hpp"
#include "sigpal/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace sigpal::sim {

std::string_view to_string(Case c) noexcept {
    switch (c) {
        case Case::one_cluster: return "one_cluster";
        case Case::mixture_one_direction: return "mixture_one_direction";
        case Case::mixture_all_directions: return "mixture_all_directions";
    }
    return "unknown";
}

Case parse_case(std::string_view name) {
    if (name == "one_cluster") return Case::one_cluster;
    if (name == "mixture_one_direction") return Case::mixture_one_direction;
    if (name == "mixture_all_directions") return Case::mixture_all_directions;
    throw InvalidInput("unknown generator case '" + std::string(name) + "'");
}

void GeneratorSpec::validate() const {
    if (n < 3) throw InvalidInput("generator n must be >= 3");
    if (d < 1) throw InvalidInput("generator d must be >= 1");
    if (w < 1 || w > d) throw InvalidInput("generator w must satisfy 1 <= w <= d");
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("generator v must be positive");
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidInput("generator a must be >= 0");
    if (kind == Case::one_cluster) {
        if (labeled_total < 0 || labeled_total > n) throw InvalidInput("labeled_total must lie in [0, n]");
    } else if (labeled_per_class < 0 || 2 * labeled_per_class > n) {
        throw InvalidInput("labeled_per_class must lie in [0, n/2]");
    }
}

Vector GeneratorSpec::diagonal() const {
    Vector diag = Vector::Ones(d);
    diag.head(w).setConstant(v);
    return diag;
}

Vector GeneratorSpec::mean_shift() const {
    Vector mu = Vector::Zero(d);
    if (kind == Case::mixture_one_direction) mu(0) = a;
    else if (kind == Case::mixture_all_directions) mu.setConstant(a);
    return mu;
}

namespace {

Matrix draw_gaussian(const Vector& diag, Eigen::Index n, Rng& rng) {
    EigenSpectrum s;
    s.values = diag;
    return simulate_null(s, n, rng);
}

std::vector<Eigen::Index> shuffled_rows(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    return rows;
}

}  // namespace

PartiallyLabeledDataset gen_one_cluster(const GeneratorSpec& spec, Rng& rng) {
    spec.validate();
    Matrix x = draw_gaussian(spec.diagonal(), spec.n, rng);
    std::vector<Label> labels(static_cast<std::size_t>(spec.n), Label::Unlabeled);
    const auto rows = shuffled_rows(spec.n, rng);
    std::vector<Label> drawn(static_cast<std::size_t>(spec.labeled_total));
    if (spec.balanced_null_labels) {
        const auto n_pos = spec.labeled_total / 2;
        std::fill_n(drawn.begin(), n_pos, Label::Pos);
        std::fill(drawn.begin() + n_pos, drawn.end(), Label::Neg);
        std::shuffle(drawn.begin(), drawn.end(), rng);
    } else {
        std::bernoulli_distribution coin(0.5);
        for (auto& l : drawn) l = coin(rng) ? Label::Pos : Label::Neg;
    }
    for (std::size_t k = 0; k < drawn.size(); ++k) labels[static_cast<std::size_t>(rows[k])] = drawn[k];
    return {std::move(x), std::move(labels)};
}

Mixture gen_mixture(const GeneratorSpec& spec, Rng& rng) {
    spec.validate();
    if (spec.kind == Case::one_cluster) throw InvalidInput("gen_mixture called with a one_cluster spec");
    std::bernoulli_distribution coin(0.5);
    std::vector<Label> truth(static_cast<std::size_t>(spec.n));
    for (int attempt = 0;; ++attempt) {
        for (auto& t : truth) t = coin(rng) ? Label::Pos : Label::Neg;
        const auto pos = std::count(truth.begin(), truth.end(), Label::Pos);
        if (pos >= spec.labeled_per_class && spec.n - pos >= spec.labeled_per_class) break;
        if (attempt == 99)
            throw EngineFailure("gen_mixture: could not draw " + std::to_string(spec.labeled_per_class) +
                                " rows per component in 100 attempts");
    }
    Matrix x = draw_gaussian(spec.diagonal(), spec.n, rng);
    const Eigen::RowVectorXd mu = spec.mean_shift().transpose();
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        if (truth[static_cast<std::size_t>(i)] == Label::Pos) x.row(i) += mu;
        else x.row(i) -= mu;
    }

    std::vector<Label> labels(static_cast<std::size_t>(spec.n), Label::Unlabeled);
    Eigen::Index pos = 0, neg = 0;
    for (Eigen::Index i : shuffled_rows(spec.n, rng)) {
        const Label t = truth[static_cast<std::size_t>(i)];
        if (t == Label::Pos && pos < spec.labeled_per_class) {
            labels[static_cast<std::size_t>(i)] = t;
            ++pos;
        } else if (t == Label::Neg && neg < spec.labeled_per_class) {
            labels[static_cast<std::size_t>(i)] = t;
            ++neg;
        }
    }
    return {PartiallyLabeledDataset(std::move(x), std::move(labels)), std::move(truth)};
}

Mixture generate(const GeneratorSpec& spec, Rng& rng) {
    if (spec.kind == Case::one_cluster) return {gen_one_cluster(spec, rng), {}};
    return gen_mixture(spec, rng);
}

EigenSpectrum population_spectrum(const GeneratorSpec& spec) {
    spec.validate();
    Vector diag = spec.diagonal();
    if (spec.kind == Case::mixture_all_directions && spec.a > 0.0) {
        const Vector mu = spec.mean_shift();
        Matrix cov = mu * mu.transpose();
        cov.diagonal() += diag;
        return known_spectrum(sorted_symmetric_eigen(cov).values.cwiseMax(0.0));
    }
    if (spec.kind == Case::mixture_one_direction) diag(0) += spec.a * spec.a;
    return known_spectrum(std::move(diag));
}

MethodConfig method_sigpal_cop() {
    MethodConfig m{"sigpal_cop", Method::sigpal, {}, {}, EigenMethodKind::soft};
    m.assigner.kind = m.sim_assigner.kind = AssignerKind::cop_kmeans;
    return m;
}

MethodConfig method_sigpal_s3lda() {
    MethodConfig m{"sigpal_s3lda", Method::sigpal, {}, {}, EigenMethodKind::soft};
    m.assigner.kind = m.sim_assigner.kind = AssignerKind::s3lda;
    return m;
}

MethodConfig method_sigpal_l1() {
    MethodConfig m{"sigpal_l1", Method::sigpal, {}, {}, EigenMethodKind::soft};
    m.assigner.kind = AssignerKind::s3lda;
    m.sim_assigner.kind = AssignerKind::l1_lda;
    return m;
}

MethodConfig method_sigclust() {
    MethodConfig m{"sigclust", Method::sigclust, {}, {}, EigenMethodKind::soft};
    m.assigner.kind = m.sim_assigner.kind = AssignerKind::two_means;
    return m;
}

MethodConfig method_by_id(std::string_view id) {
    if (id == "sigpal_cop") return method_sigpal_cop();
    if (id == "sigpal_s3lda") return method_sigpal_s3lda();
    if (id == "sigpal_l1") return method_sigpal_l1();
    if (id == "sigclust") return method_sigclust();
    throw InvalidInput("unknown method id '" + std::string(id) + "' (sigpal_cop, sigpal_s3lda, sigpal_l1, sigclust)");
}

std::vector<std::pair<std::string, int>> ExperimentReport::rejections() const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& row : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == row.method; });
        if (it == out.end()) {
            out.emplace_back(row.method, 0);
            it = out.end() - 1;
        }
        if (row.p_value < alpha) ++it->second;
    }
    return out;
}

int ExperimentReport::rejections(std::string_view method, double at_alpha) const {
    int count = 0;
    for (const auto& row : rows)
        if (row.method == method && row.p_value < at_alpha) ++count;
    return count;
}

std::vector<double> ExperimentReport::p_values(std::string_view method) const {
    std::vector<double> out;
    for (const auto& row : rows)
        if (row.method == method) out.push_back(row.p_value);
    return out;
}

ExperimentReport run_experiment(const GeneratorSpec& spec, const std::vector<MethodConfig>& methods,
                                const ExperimentOptions& options) {
    spec.validate();
    if (options.reps < 1) throw InvalidInput("reps must be >= 1");
    if (methods.empty()) throw InvalidInput("run_experiment needs at least one method");
    const bool needs_population =
        std::any_of(methods.begin(), methods.end(), [](const MethodConfig& m) { return m.eigen == EigenMethodKind::known; });
    const std::optional<EigenSpectrum> population =
        needs_population ? std::optional(population_spectrum(spec)) : std::nullopt;

    std::vector<std::vector<ReportRow>> per_rep(static_cast<std::size_t>(options.reps));
    parallel_for(per_rep.size(), options.threads, [&](std::size_t r) {
        Rng data_rng = derive_stream(options.seed, {r, 0});
        std::optional<PartiallyLabeledDataset> data;
        std::string gen_error;
        try {
            data.emplace(generate(spec, data_rng).data);
        } catch (const std::exception& e) {
            gen_error = std::string("generation: ") + e.what();
        }
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const MethodConfig& method = methods[m];
            ReportRow row{static_cast<int>(r), options.label.empty() ? method.id : options.label + ":" + method.id,
                          std::numeric_limits<double>::quiet_NaN(), derive_seed(options.seed, {r, m + 1}), gen_error};
            if (data) {
                try {
                    const EigenMethod eigen = method.eigen == EigenMethodKind::known ? EigenMethod::with_known(*population)
                                              : EigenMethod{method.eigen, std::nullopt};
                    SimulationOptions so;
                    so.n_sim = options.n_sim;
                    so.seed = row.seed;
                    if (method.engine == Method::sigclust) {
                        row.p_value = sigclust(data->x(), eigen, method.assigner, so).p_value;
                    } else if (method.engine == Method::sigpal) {
                        row.p_value = sigpal(*data, method.assigner, method.sim_assigner, eigen, so).p_value;
                    } else {
                        throw InvalidInput("run_experiment supports sigpal and sigclust engines");
                    }
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
            per_rep[r].push_back(std::move(row));
        }
    });

    ExperimentReport report;
    report.alpha = options.alpha;
    report.reps = options.reps;
    for (auto& rows : per_rep)
        for (auto& row : rows) report.rows.push_back(std::move(row));
    return report;
}

namespace {

std::string number_label(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

Preset table_preset(std::string name, const std::vector<std::pair<double, Eigen::Index>>& vw) {
    Preset p;
    p.name = std::move(name);
    p.description = "one cluster, n=40, d=300, 20 labeled rows, spiked covariance (v, w)";
    for (auto [v, w] : vw) {
        GeneratorSpec g;
        g.kind = Case::one_cluster;
        g.v = v;
        g.w = w;
        p.settings.push_back({"v" + number_label(v) + "_w" + std::to_string(w), g});
    }
    p.methods = {method_sigpal_l1(), method_sigpal_s3lda(), method_sigpal_cop(), method_sigclust()};
    return p;
}

Preset figure_preset(std::string name, Case kind, double v, Eigen::Index w, const std::vector<double>& signals) {
    Preset p;
    p.name = std::move(name);
    p.description = std::string(to_string(kind)) + ", n=40, d=300, 10 labeled per class, v=" + number_label(v) +
                    ", w=" + std::to_string(w);
    for (double a : signals) {
        GeneratorSpec g;
        g.kind = kind;
        g.v = v;
        g.w = w;
        g.a = a;
        p.settings.push_back({"a" + number_label(a), g});
    }
    p.methods = {method_sigpal_l1(), method_sigpal_s3lda(), method_sigpal_cop(), method_sigclust()};
    return p;
}

const std::vector<std::pair<double, Eigen::Index>>& table1_settings() {
    static const std::vector<std::pair<double, Eigen::Index>> rows = {
        {100, 1}, {50, 2}, {20, 5}, {10, 10}, {1, 1}, {3, 1},  {5, 1},
        {10, 1},  {20, 1}, {50, 1}, {1, 5},   {10, 5}, {20, 5}, {50, 5}};
    return rows;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names{"table1"};
    for (std::size_t i = 1; i <= table1_settings().size(); ++i) names.push_back("table1-row" + std::to_string(i));
    for (const char* f : {"fig4", "fig5", "fig7", "fig8"}) names.emplace_back(f);
    return names;
}

Preset preset(std::string_view name) {
    if (name == "table1") return table_preset("table1", table1_settings());
    if (name.starts_with("table1-row")) {
        std::size_t row = 0;
        try {
            row = std::stoul(std::string(name.substr(10)));
        } catch (const std::exception&) {
        }
        if (row >= 1 && row <= table1_settings().size())
            return table_preset(std::string(name), {table1_settings()[row - 1]});
    }
    if (name == "fig4") return figure_preset("fig4", Case::mixture_one_direction, 2, 50, {0, 1, 2, 3, 4, 5});
    if (name == "fig5") return figure_preset("fig5", Case::mixture_one_direction, 100, 1, {0, 5, 10, 15, 18, 20});
    if (name == "fig7") return figure_preset("fig7", Case::mixture_all_directions, 2, 50, {0, 0.05, 0.1, 0.15, 0.2, 0.25});
    if (name == "fig8") return figure_preset("fig8", Case::mixture_all_directions, 100, 1, {0, 0.2, 0.4, 0.6, 0.8, 1.0});
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw InvalidInput("unknown preset '" + std::string(name) + "'; available: " + list);
}

Preset desk_scale(Preset p) {
    p.reps = std::max(1, p.reps / 2);
    p.n_sim = std::max(1, p.n_sim / 2);
    p.desk_scale = true;
    return p;
}

}  // namespace sigpal::sim
