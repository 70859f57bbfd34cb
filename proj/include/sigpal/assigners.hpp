#pragma once

#include "sigpal/cluster_index.hpp"
#include "sigpal/dataset.hpp"
#include "sigpal/rng.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sigpal {

enum class AssignerKind { two_means, cop_kmeans, s3lda, l1_lda };

std::string_view to_string(AssignerKind k) noexcept;
/// Accepts "two-means"/"two_means", "cop-kmeans", "s3lda", "l1-lda". Throws InvalidInput.
AssignerKind parse_assigner_kind(std::string_view name);

/// Tuning for one label-assignment strategy.
struct AssignerSpec {
    AssignerKind kind = AssignerKind::cop_kmeans;
    int restarts = 10;
    int max_iters = 100;
    double c = 1.0;          ///< weight of the unlabeled hinge term (s3lda)
    double penalty = 0.05;   ///< L1 penalty (l1_lda)
    int steps = 500;         ///< projected subgradient iterations (s3lda)

    /// Throws InvalidInput when restarts/max_iters/steps < 1 or c/penalty negative.
    void validate() const;
    bool needs_labels() const noexcept { return kind == AssignerKind::s3lda || kind == AssignerKind::l1_lda; }
};

/// Unit-norm linear direction through the origin.
struct Direction {
    Vector omega;
    double intercept = 0.0;
    double objective = 0.0;          ///< final objective of the fit
    double initial_objective = 0.0;  ///< objective at the starting iterate
};

/// Best-of-restarts 2-means (k-means++ seeding, Lloyd iterations). Ignores labels.
/// Cluster 1 is the cluster holding row 0.
ClusterAssignment two_means(const Matrix& x, const AssignerSpec& spec, Rng& rng);

/// Must-link among rows sharing a label, cannot-link across Pos/Neg pairs.
Constraints derive_constraints(const std::vector<Label>& labels);

/// Constrained 2-means. Must-link components are collapsed into weighted super-points;
/// each Lloyd assignment step places units in the nearest clusters that keep every
/// cannot-link satisfied. Cluster 1 holds the Pos component. With no labels this is
/// two_means with the same random draws.
ClusterAssignment cop_kmeans(const PartiallyLabeledDataset& data, const AssignerSpec& spec, Rng& rng);

/// Same machinery for arbitrary constraints on raw rows (used by tests and oracles).
/// `objective_trace`, when given, receives the weighted within-cluster SS after each
/// assignment step of the best restart.
ClusterAssignment constrained_two_means(const Matrix& x, const Constraints& constraints,
                                        const AssignerSpec& spec, Rng& rng,
                                        std::vector<double>* objective_trace = nullptr);

/// Empirical semi-supervised LDA objective on the unit sphere:
/// mean over labeled (y - w'x)^2 + c * mean over all (1 - |w'x|)_+ .
double s3lda_objective(const PartiallyLabeledDataset& data, const Vector& omega, double c);

/// Projected subgradient on the sphere, step 0.5/sqrt(t) along the normalized tangent
/// subgradient, started from the normalized class-mean difference. Returns the best
/// iterate. Throws InvalidInput unless both classes are labeled.
Direction s3lda_fit(const PartiallyLabeledDataset& data, const AssignerSpec& spec, Rng& rng);

/// Lasso least squares on labels (coordinate descent), then scaled to unit norm.
/// Throws EngineFailure when the penalty zeroes every coordinate.
Direction l1_lda_fit(const PartiallyLabeledDataset& data, const AssignerSpec& spec);

/// Labeled rows keep their labels (Pos -> 1, Neg -> 2); unlabeled rows go to cluster 1
/// when w'(x - xbar) >= 0, with w oriented so labeled Pos projections have
/// nonnegative mean.
ClusterAssignment assign_by_direction(const PartiallyLabeledDataset& data, const Direction& direction);

/// Dispatches on spec.kind and fills in the CI.
ClusterAssignment assign(const PartiallyLabeledDataset& data, const AssignerSpec& spec, Rng& rng);

}  // namespace sigpal
