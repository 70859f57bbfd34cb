#include "sigpal/cluster_index.hpp"

#include <cstdint>
#include <string>

namespace sigpal {

bool satisfies(std::span<const int> clusters, const Constraints& constraints) {
    auto at = [&](int i) { return clusters[static_cast<std::size_t>(i)]; };
    for (auto [a, b] : constraints.must_link)
        if (at(a) != at(b)) return false;
    for (auto [a, b] : constraints.cannot_link)
        if (at(a) == at(b)) return false;
    return true;
}

namespace {

// Lexicographic comparison of the sorted cluster-1 index sets of two masks
// (bit i set means row i is in cluster 2).
bool cluster1_lex_less(std::uint32_t a, std::uint32_t b, int n) {
    int ia = 0, ib = 0;
    while (true) {
        while (ia < n && (a >> ia & 1u)) ++ia;
        while (ib < n && (b >> ib & 1u)) ++ib;
        if (ia == n || ib == n) return ia == n && ib != n;
        if (ia != ib) return ia < ib;
        ++ia;
        ++ib;
    }
}

}  // namespace

ClusterAssignment brute_force_min_ci(const Eigen::MatrixXd& x, const std::optional<Constraints>& constraints) {
    const auto n = static_cast<int>(x.rows());
    if (n > 16) throw InvalidInput("brute_force_min_ci: n must be <= 16, got " + std::to_string(n));
    if (n < 2) throw InvalidInput("brute_force_min_ci: need at least 2 rows");
    for (const auto* set : {constraints ? &constraints->must_link : nullptr, constraints ? &constraints->cannot_link : nullptr}) {
        if (!set) continue;
        for (auto [a, b] : *set)
            if (a < 0 || b < 0 || a >= n || b >= n) throw InvalidInput("brute_force_min_ci: constraint index out of range");
    }

    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd gram = centered * centered.transpose();
    const double tss = gram.trace();
    if (!(tss > 0.0)) throw DegenerateData("brute_force_min_ci: zero total sum of squares");

    std::vector<int> clusters(static_cast<std::size_t>(n));
    auto decode = [&](std::uint32_t mask) {
        for (int i = 0; i < n; ++i) clusters[static_cast<std::size_t>(i)] = (mask >> i & 1u) ? 2 : 1;
    };

    // WSS_k = sum_{i in k} G_ii - (sum_{i,j in k} G_ij) / n_k on centered data.
    auto wss_of = [&](std::uint32_t mask) {
        double total = 0.0;
        for (int side = 0; side < 2; ++side) {
            double diag = 0.0, block = 0.0;
            int count = 0;
            for (int i = 0; i < n; ++i) {
                if (((mask >> i) & 1u) != static_cast<std::uint32_t>(side)) continue;
                ++count;
                diag += gram(i, i);
                for (int j = 0; j < n; ++j)
                    if (((mask >> j) & 1u) == static_cast<std::uint32_t>(side)) block += gram(i, j);
            }
            total += diag - block / count;
        }
        return total;
    };

    bool found = false;
    std::uint32_t best_mask = 0;
    double best = 0.0;
    // Row 0 stays in cluster 1: this enumerates every unordered partition once and picks
    // the labeling whose cluster-1 set is lexicographically smaller.
    const std::uint32_t limit = 1u << n;
    for (std::uint32_t mask = 2; mask < limit; mask += 2) {
        if (constraints) {
            decode(mask);
            if (!satisfies(clusters, *constraints)) continue;
        }
        const double ci = std::max(0.0, wss_of(mask)) / tss;
        if (!found || ci < best || (ci == best && cluster1_lex_less(mask, best_mask, n))) {
            found = true;
            best = ci;
            best_mask = mask;
        }
    }
    if (!found) throw EngineFailure("brute_force_min_ci: no 2-partition satisfies the constraints");

    decode(best_mask);
    ClusterAssignment out;
    out.clusters = clusters;
    out.provenance.assign(static_cast<std::size_t>(n), Provenance::predicted);
    out.ci = cluster_index(x, std::span<const int>(out.clusters));
    return out;
}

}  // namespace sigpal
