#pragma once

#include "sigpal/assigners.hpp"
#include "sigpal/dataset.hpp"
#include "sigpal/spectrum.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sigpal {

enum class Method { sigpal, sigclust, diproperm };
std::string_view to_string(Method m) noexcept;

enum class PValueRule { less, greater };

/// #{nulls < observed}/N for `less`, #{nulls > observed}/N for `greater`.
/// With add_one the count and N are both incremented. Throws InvalidInput on empty nulls.
double empirical_pvalue(double observed, const std::vector<double>& nulls, PValueRule rule,
                        bool add_one = false);

enum class EigenMethodKind { hard, soft, known };

struct EigenMethod {
    EigenMethodKind kind = EigenMethodKind::soft;
    std::optional<EigenSpectrum> known;  ///< required when kind == known

    static EigenMethod hard() { return {EigenMethodKind::hard, std::nullopt}; }
    static EigenMethod soft() { return {EigenMethodKind::soft, std::nullopt}; }
    static EigenMethod with_known(EigenSpectrum s) { return {EigenMethodKind::known, std::move(s)}; }
};
std::string_view to_string(EigenMethodKind k) noexcept;

/// Null spectrum used by the simulation engines for centered data.
EigenSpectrum estimate_null_spectrum(const Matrix& centered_x, const EigenMethod& method);

struct TestResult {
    Method method = Method::sigclust;
    double observed_stat = 0.0;
    std::vector<double> null_stats;
    double p_value = 0.0;
    int n_sim_or_perm = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> metadata;
};

/// How null replicates receive labels.
enum class LabelPlacement { preserve_counts, uniform_signs };

struct SimulationOptions {
    int n_sim = 100;
    std::uint64_t seed = 0;
    int threads = 1;
    bool add_one = false;
    LabelPlacement placement = LabelPlacement::preserve_counts;
};

/// Cluster-index test of a single Gaussian: observed CI from two_means, nulls from
/// two_means on Gaussian draws with the estimated spectrum, p by the `less` rule.
TestResult sigclust(const Matrix& x, const EigenMethod& eigen, const AssignerSpec& spec,
                    const SimulationOptions& options);

/// Partially labeled variant: `assigner` on the observed data; each null replicate
/// labels a random subset with the observed class counts and runs `sim_assigner`.
TestResult sigpal(const PartiallyLabeledDataset& data, const AssignerSpec& assigner,
                  const AssignerSpec& sim_assigner, const EigenMethod& eigen,
                  const SimulationOptions& options);

enum class ProjectionStatistic { mean_diff, t_stat };
std::string_view to_string(ProjectionStatistic s) noexcept;

struct PermutationOptions {
    int n_perm = 100;
    std::uint64_t seed = 0;
    int threads = 1;
    bool add_one = false;
};

/// Direction-projection-permutation test on fully labeled data. The direction is the
/// normalized class-mean difference, recomputed inside every permutation.
TestResult diproperm(const PartiallyLabeledDataset& data, ProjectionStatistic statistic,
                     const PermutationOptions& options);

}  // namespace sigpal
