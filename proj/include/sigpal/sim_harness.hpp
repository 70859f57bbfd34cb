#pragma once

#include "sigpal/engines.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sigpal::sim {

enum class Case { one_cluster, mixture_one_direction, mixture_all_directions };
std::string_view to_string(Case c) noexcept;
Case parse_case(std::string_view name);

/// Spiked diagonal covariance diag(v x w, 1 x (d - w)); mixtures are
/// 0.5 N(-mu, D) + 0.5 N(mu, D) with mu = (a, 0, ..., 0) or (a, ..., a).
struct GeneratorSpec {
    Case kind = Case::one_cluster;
    Eigen::Index n = 40;
    Eigen::Index d = 300;
    double v = 1.0;
    Eigen::Index w = 1;
    double a = 0.0;
    Eigen::Index labeled_per_class = 10;  ///< mixtures
    Eigen::Index labeled_total = 20;      ///< one_cluster
    bool balanced_null_labels = true;     ///< one_cluster: split labeled_total evenly

    void validate() const;
    Vector diagonal() const;
    Vector mean_shift() const;
};

PartiallyLabeledDataset gen_one_cluster(const GeneratorSpec& spec, Rng& rng);

struct Mixture {
    PartiallyLabeledDataset data;
    std::vector<Label> truth;  ///< component of every row: Pos for +mu, Neg for -mu
};
Mixture gen_mixture(const GeneratorSpec& spec, Rng& rng);

/// Dispatch on spec.kind (one_cluster returns an empty truth vector).
Mixture generate(const GeneratorSpec& spec, Rng& rng);

/// Eigenvalues of the population covariance of the generated data (D, plus mu mu' for
/// mixtures).
EigenSpectrum population_spectrum(const GeneratorSpec& spec);

/// One test applied in every replicate.
struct MethodConfig {
    std::string id;
    Method engine = Method::sigpal;
    AssignerSpec assigner;
    AssignerSpec sim_assigner;
    EigenMethodKind eigen = EigenMethodKind::soft;  ///< known -> population_spectrum
};

/// The three semi-supervised variants plus the unsupervised baseline.
MethodConfig method_sigpal_cop();
MethodConfig method_sigpal_s3lda();
MethodConfig method_sigpal_l1();
MethodConfig method_sigclust();
/// Looks up one of "sigpal_cop", "sigpal_s3lda", "sigpal_l1", "sigclust".
MethodConfig method_by_id(std::string_view id);

struct ReportRow {
    int replicate;
    std::string method;
    double p_value;  ///< NaN when the engine failed
    std::uint64_t seed;
    std::string error;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    double alpha = 0.05;
    int reps = 0;
    /// Rejection counts #{p < alpha} keyed by method id, in first-seen order.
    std::vector<std::pair<std::string, int>> rejections() const;
    int rejections(std::string_view method, double alpha) const;
    std::vector<double> p_values(std::string_view method) const;
};

struct ExperimentOptions {
    int reps = 100;
    int n_sim = 100;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = 1;
    /// Prefix added to method ids in the report ("<prefix>:<id>").
    std::string label;
};

/// Per replicate: one dataset from stream (seed, r), then every method on it with its
/// own stream (seed, r, m). Engine errors are recorded in the row, not thrown.
ExperimentReport run_experiment(const GeneratorSpec& spec, const std::vector<MethodConfig>& methods,
                                const ExperimentOptions& options);

struct Setting {
    std::string label;
    GeneratorSpec spec;
};

/// A named batch of settings sharing methods and replicate counts.
struct Preset {
    std::string name;
    std::string description;
    std::vector<Setting> settings;
    std::vector<MethodConfig> methods;
    int reps = 100;
    int n_sim = 1000;
    bool desk_scale = false;
};

std::vector<std::string> preset_names();
/// Throws InvalidInput on unknown names.
Preset preset(std::string_view name);

/// Halves replicate and simulation counts.
Preset desk_scale(Preset p);

}  // namespace sigpal::sim
