#pragma once

#include "sigpal/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sigpal {

enum class Provenance : std::uint8_t { observed, predicted };

/// Per-row cluster ids in {1, 2}. Cluster 1 is the Pos side whenever labels exist.
struct ClusterAssignment {
    std::vector<int> clusters;
    std::vector<Provenance> provenance;
    double ci = std::numeric_limits<double>::quiet_NaN();
};

/// Pairwise constraints over zero-based row indices.
struct Constraints {
    std::vector<std::pair<int, int>> must_link;
    std::vector<std::pair<int, int>> cannot_link;
};

/// Within-cluster sum of squares over total sum of squares for a 2-partition.
/// Throws InvalidInput for an empty cluster or bad ids, DegenerateData when all rows
/// coincide.
template <typename Derived>
double cluster_index(const Eigen::MatrixBase<Derived>& x, std::span<const int> clusters) {
    using Scalar = typename Derived::Scalar;
    const auto n = x.rows();
    if (static_cast<Eigen::Index>(clusters.size()) != n)
        throw InvalidInput("cluster_index: assignment length does not match row count");

    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sum1 = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(x.cols());
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sum2 = sum1;
    Eigen::Index n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = clusters[static_cast<std::size_t>(i)];
        if (c == 1) {
            sum1 += x.row(i);
            ++n1;
        } else if (c == 2) {
            sum2 += x.row(i);
        } else {
            throw InvalidInput("cluster_index: cluster ids must be 1 or 2");
        }
    }
    const Eigen::Index n2 = n - n1;
    if (n1 == 0 || n2 == 0) throw InvalidInput("cluster_index: empty cluster");

    const auto mean = ((sum1 + sum2) / Scalar(n)).eval();
    const auto mean1 = (sum1 / Scalar(n1)).eval();
    const auto mean2 = (sum2 / Scalar(n2)).eval();
    Scalar tss(0), wss(0), raw(0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& own = clusters[static_cast<std::size_t>(i)] == 1 ? mean1 : mean2;
        tss += (x.row(i) - mean).squaredNorm();
        wss += (x.row(i) - own).squaredNorm();
        raw += x.row(i).squaredNorm();
    }
    if (!(tss > Scalar(0)) || tss <= raw * Scalar(1e-24))
        throw DegenerateData("cluster_index: zero total sum of squares");
    return std::clamp(wss / tss, Scalar(0), Scalar(1));
}

template <typename Derived>
double cluster_index(const Eigen::MatrixBase<Derived>& x, const ClusterAssignment& a) {
    return cluster_index(x, std::span<const int>(a.clusters));
}

/// True when the assignment satisfies every constraint.
bool satisfies(std::span<const int> clusters, const Constraints& constraints);

/// Exhaustive minimum-CI 2-partition for n <= 16. Ties go to the lexicographically
/// smallest cluster-1 index set, which always contains row 0. Throws InvalidInput when
/// n > 16 and EngineFailure when no partition satisfies the constraints.
ClusterAssignment brute_force_min_ci(const Eigen::MatrixXd& x,
                                     const std::optional<Constraints>& constraints = std::nullopt);

}  // namespace sigpal
