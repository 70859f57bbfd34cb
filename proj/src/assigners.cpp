#include "sigpal/assigners.hpp"

#include "sigpal/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

namespace sigpal {

std::string_view to_string(AssignerKind k) noexcept {
    switch (k) {
        case AssignerKind::two_means: return "two-means";
        case AssignerKind::cop_kmeans: return "cop-kmeans";
        case AssignerKind::s3lda: return "s3lda";
        case AssignerKind::l1_lda: return "l1-lda";
    }
    return "unknown";
}

AssignerKind parse_assigner_kind(std::string_view name) {
    std::string s(name);
    std::replace(s.begin(), s.end(), '_', '-');
    if (s == "two-means" || s == "kmeans" || s == "2-means") return AssignerKind::two_means;
    if (s == "cop-kmeans") return AssignerKind::cop_kmeans;
    if (s == "s3lda") return AssignerKind::s3lda;
    if (s == "l1-lda") return AssignerKind::l1_lda;
    throw InvalidInput("unknown assigner '" + std::string(name) + "' (two-means, cop-kmeans, s3lda, l1-lda)");
}

void AssignerSpec::validate() const {
    if (restarts < 1) throw InvalidInput("assigner restarts must be >= 1");
    if (max_iters < 1) throw InvalidInput("assigner max_iters must be >= 1");
    if (steps < 1) throw InvalidInput("assigner steps must be >= 1");
    if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidInput("assigner C must be a nonnegative number");
    if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw InvalidInput("assigner penalty must be a nonnegative number");
}

// ---------------------------------------------------------------------------
// Constrained 2-means

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int i) {
        while (parent[static_cast<std::size_t>(i)] != i) {
            auto& p = parent[static_cast<std::size_t>(i)];
            p = parent[static_cast<std::size_t>(p)];
            i = p;
        }
        return i;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
};

// Must-link components collapsed to weighted points, grouped by cannot-link
// connectivity. Inside a group every unit has a fixed color; the only freedom is
// which color goes to cluster 1.
struct UnitProblem {
    std::vector<int> unit_of_row;
    std::vector<double> weight;
    Matrix means;                    // unit x d
    double internal_ss = 0.0;        // sum of within-unit scatter
    std::vector<std::vector<int>> groups;  // unit ids per cannot-link group
    std::vector<int> color;          // per unit, 0 or 1
};

UnitProblem build_units(const Matrix& x, const Constraints& constraints) {
    const auto n = static_cast<int>(x.rows());
    auto check = [&](std::pair<int, int> p) {
        if (p.first < 0 || p.second < 0 || p.first >= n || p.second >= n)
            throw InvalidInput("constraint index out of range");
    };
    UnionFind uf(n);
    for (auto p : constraints.must_link) {
        check(p);
        uf.unite(p.first, p.second);
    }

    UnitProblem up;
    up.unit_of_row.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> unit_of_root(static_cast<std::size_t>(n), -1);
    int units = 0;
    for (int i = 0; i < n; ++i) {
        int r = uf.find(i);
        if (unit_of_root[static_cast<std::size_t>(r)] < 0) unit_of_root[static_cast<std::size_t>(r)] = units++;
        up.unit_of_row[static_cast<std::size_t>(i)] = unit_of_root[static_cast<std::size_t>(r)];
    }
    up.weight.assign(static_cast<std::size_t>(units), 0.0);
    up.means = Matrix::Zero(units, x.cols());
    for (int i = 0; i < n; ++i) {
        const int u = up.unit_of_row[static_cast<std::size_t>(i)];
        up.weight[static_cast<std::size_t>(u)] += 1.0;
        up.means.row(u) += x.row(i);
    }
    for (int u = 0; u < units; ++u) up.means.row(u) /= up.weight[static_cast<std::size_t>(u)];
    for (int i = 0; i < n; ++i)
        up.internal_ss += (x.row(i) - up.means.row(up.unit_of_row[static_cast<std::size_t>(i)])).squaredNorm();

    std::vector<std::vector<int>> adj(static_cast<std::size_t>(units));
    for (auto p : constraints.cannot_link) {
        check(p);
        const int a = up.unit_of_row[static_cast<std::size_t>(p.first)];
        const int b = up.unit_of_row[static_cast<std::size_t>(p.second)];
        if (a == b)
            throw InvalidInput("contradictory constraints: rows " + std::to_string(p.first) + " and " +
                               std::to_string(p.second) + " are must-linked and cannot-linked");
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }

    up.color.assign(static_cast<std::size_t>(units), -1);
    for (int s = 0; s < units; ++s) {
        if (up.color[static_cast<std::size_t>(s)] >= 0) continue;
        std::vector<int> group{s};
        up.color[static_cast<std::size_t>(s)] = 0;
        std::queue<int> q;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[static_cast<std::size_t>(u)]) {
                auto& cv = up.color[static_cast<std::size_t>(v)];
                const int want = 1 - up.color[static_cast<std::size_t>(u)];
                if (cv < 0) {
                    cv = want;
                    group.push_back(v);
                    q.push(v);
                } else if (cv != want) {
                    throw InvalidInput("contradictory constraints: cannot-links admit no 2-cluster split");
                }
            }
        }
        up.groups.push_back(std::move(group));
    }
    return up;
}

struct Partition {
    std::vector<int> orientation;  // per group
    std::vector<int> unit_cluster; // per unit, 0 or 1
};

// Weighted within-cluster SS of a unit partition, including within-unit scatter.
double partition_wss(const UnitProblem& up, const std::vector<int>& unit_cluster) {
    const auto d = up.means.cols();
    Eigen::RowVectorXd sum[2] = {Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Zero(d)};
    double w[2] = {0.0, 0.0};
    double sq = 0.0;
    for (std::size_t u = 0; u < up.weight.size(); ++u) {
        const int c = unit_cluster[u];
        sum[c] += up.weight[u] * up.means.row(static_cast<Eigen::Index>(u));
        w[c] += up.weight[u];
        sq += up.weight[u] * up.means.row(static_cast<Eigen::Index>(u)).squaredNorm();
    }
    double between = 0.0;
    for (int c = 0; c < 2; ++c)
        if (w[c] > 0.0) between += sum[c].squaredNorm() / w[c];
    return up.internal_ss + std::max(0.0, sq - between);
}

// Optimal feasible assignment for fixed centroids: each group takes its cheaper orientation.
void assign_units(const UnitProblem& up, const Matrix& centroids, Partition& p) {
    const auto units = static_cast<Eigen::Index>(up.weight.size());
    Eigen::MatrixX2d cost(units, 2);
    for (Eigen::Index u = 0; u < units; ++u)
        for (int c = 0; c < 2; ++c)
            cost(u, c) = up.weight[static_cast<std::size_t>(u)] * (up.means.row(u) - centroids.row(c)).squaredNorm();
    for (std::size_t g = 0; g < up.groups.size(); ++g) {
        double orient_cost[2] = {0.0, 0.0};
        for (int u : up.groups[g]) {
            const int col = up.color[static_cast<std::size_t>(u)];
            orient_cost[0] += cost(u, col);
            orient_cost[1] += cost(u, 1 - col);
        }
        int o = orient_cost[1] < orient_cost[0] ? 1 : 0;
        if (orient_cost[1] == orient_cost[0] && !p.orientation.empty() && p.orientation[g] >= 0) o = p.orientation[g];
        p.orientation[g] = o;
        for (int u : up.groups[g])
            p.unit_cluster[static_cast<std::size_t>(u)] = o == 0 ? up.color[static_cast<std::size_t>(u)]
                                                                  : 1 - up.color[static_cast<std::size_t>(u)];
    }

    // An empty cluster receives the free single-unit group farthest from its centroid.
    double w[2] = {0.0, 0.0};
    for (std::size_t u = 0; u < up.weight.size(); ++u) w[p.unit_cluster[u]] += up.weight[u];
    for (int empty = 0; empty < 2; ++empty) {
        if (w[empty] > 0.0) continue;
        int best_group = -1;
        double best_cost = -1.0;
        for (std::size_t g = 0; g < up.groups.size(); ++g) {
            if (up.groups[g].size() != 1) continue;
            const int u = up.groups[g][0];
            if (cost(u, 1 - empty) > best_cost) {
                best_cost = cost(u, 1 - empty);
                best_group = static_cast<int>(g);
            }
        }
        if (best_group < 0) break;
        const int u = up.groups[static_cast<std::size_t>(best_group)][0];
        p.unit_cluster[static_cast<std::size_t>(u)] = empty;
        p.orientation[static_cast<std::size_t>(best_group)] = empty == up.color[static_cast<std::size_t>(u)] ? 0 : 1;
    }
}

Matrix unit_centroids(const UnitProblem& up, const std::vector<int>& unit_cluster) {
    Matrix c = Matrix::Zero(2, up.means.cols());
    double w[2] = {0.0, 0.0};
    for (std::size_t u = 0; u < up.weight.size(); ++u) {
        c.row(unit_cluster[u]) += up.weight[u] * up.means.row(static_cast<Eigen::Index>(u));
        w[unit_cluster[u]] += up.weight[u];
    }
    for (int k = 0; k < 2; ++k)
        if (w[k] > 0.0) c.row(k) /= w[k];
    return c;
}

// Weighted k-means++ seeding over units.
Matrix seed_centroids(const UnitProblem& up, Rng& rng) {
    const auto units = up.weight.size();
    Matrix c(2, up.means.cols());
    std::discrete_distribution<std::size_t> first(up.weight.begin(), up.weight.end());
    const std::size_t a = first(rng);
    c.row(0) = up.means.row(static_cast<Eigen::Index>(a));
    std::vector<double> score(units);
    double total = 0.0;
    for (std::size_t u = 0; u < units; ++u) {
        score[u] = up.weight[u] * (up.means.row(static_cast<Eigen::Index>(u)) - c.row(0)).squaredNorm();
        total += score[u];
    }
    std::size_t b = a;
    if (total > 0.0) {
        std::discrete_distribution<std::size_t> second(score.begin(), score.end());
        b = second(rng);
    } else if (units > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, units - 2);
        b = pick(rng);
        if (b >= a) ++b;
    }
    c.row(1) = up.means.row(static_cast<Eigen::Index>(b));
    return c;
}

}  // namespace

ClusterAssignment constrained_two_means(const Matrix& x, const Constraints& constraints, const AssignerSpec& spec,
                                        Rng& rng, std::vector<double>* objective_trace) {
    spec.validate();
    if (x.rows() < 2) throw InvalidInput("two-means needs at least 2 rows");
    const UnitProblem up = build_units(x, constraints);
    if (up.weight.size() < 2)
        throw InvalidInput("constraints merge every row into one cluster; no 2-cluster split exists");

    const std::uint64_t base = rng();
    ClusterAssignment best;
    std::vector<double> best_trace;
    for (int r = 0; r < spec.restarts; ++r) {
        Rng restart_rng = derive_stream(base, {static_cast<std::uint64_t>(r)});
        Matrix centroids = seed_centroids(up, restart_rng);
        Partition p{std::vector<int>(up.groups.size(), -1), std::vector<int>(up.weight.size(), 0)};
        std::vector<double> trace;
        std::vector<int> previous;
        for (int it = 0; it < spec.max_iters; ++it) {
            assign_units(up, centroids, p);
            trace.push_back(partition_wss(up, p.unit_cluster));
            if (p.unit_cluster == previous) break;
            previous = p.unit_cluster;
            centroids = unit_centroids(up, p.unit_cluster);
        }

        std::vector<int> rows(static_cast<std::size_t>(x.rows()));
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = p.unit_cluster[static_cast<std::size_t>(up.unit_of_row[i])] + 1;
        if (std::count(rows.begin(), rows.end(), 1) == 0 || std::count(rows.begin(), rows.end(), 2) == 0) continue;
        if (rows[0] != 1)
            for (int& c : rows) c = 3 - c;
        const double ci = cluster_index(x, std::span<const int>(rows));
        if (best.clusters.empty() || ci < best.ci) {
            best.clusters = std::move(rows);
            best.ci = ci;
            best_trace = std::move(trace);
        }
    }
    if (best.clusters.empty()) throw EngineFailure("constrained 2-means: every restart was infeasible");
    best.provenance.assign(best.clusters.size(), Provenance::predicted);
    if (objective_trace) *objective_trace = std::move(best_trace);
    return best;
}

ClusterAssignment two_means(const Matrix& x, const AssignerSpec& spec, Rng& rng) {
    return constrained_two_means(x, Constraints{}, spec, rng);
}

Constraints derive_constraints(const std::vector<Label>& labels) {
    Constraints c;
    const auto n = static_cast<int>(labels.size());
    for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == Label::Unlabeled) continue;
        for (int j = i + 1; j < n; ++j) {
            if (labels[static_cast<std::size_t>(j)] == Label::Unlabeled) continue;
            (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? c.must_link : c.cannot_link)
                .emplace_back(i, j);
        }
    }
    return c;
}

namespace {

void mark_observed(ClusterAssignment& a, const std::vector<Label>& labels) {
    a.provenance.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        a.provenance[i] = labels[i] == Label::Unlabeled ? Provenance::predicted : Provenance::observed;
}

}  // namespace

ClusterAssignment cop_kmeans(const PartiallyLabeledDataset& data, const AssignerSpec& spec, Rng& rng) {
    ClusterAssignment a = constrained_two_means(data.x(), derive_constraints(data.labels()), spec, rng);
    const auto& labels = data.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == Label::Unlabeled) continue;
        const bool pos_in_2 = labels[i] == Label::Pos && a.clusters[i] == 2;
        const bool neg_in_1 = labels[i] == Label::Neg && a.clusters[i] == 1;
        if (pos_in_2 || neg_in_1)
            for (int& c : a.clusters) c = 3 - c;
        break;
    }
    mark_observed(a, labels);
    return a;
}

// ---------------------------------------------------------------------------
// Direction-based assigners

double s3lda_objective(const PartiallyLabeledDataset& data, const Vector& omega, double c) {
    const Vector z = data.x() * omega;
    double sq = 0.0, hinge = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const Label l = data.labels()[static_cast<std::size_t>(i)];
        if (l != Label::Unlabeled) {
            const double r = static_cast<double>(static_cast<int>(l)) - z(i);
            sq += r * r;
        }
        hinge += std::max(0.0, 1.0 - std::abs(z(i)));
    }
    const double nl = static_cast<double>(data.n_labeled());
    return (nl > 0 ? sq / nl : 0.0) + c * hinge / static_cast<double>(data.n());
}

namespace {

Vector class_mean_difference(const PartiallyLabeledDataset& data) {
    Vector pos = Vector::Zero(data.d()), neg = Vector::Zero(data.d());
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const Label l = data.labels()[static_cast<std::size_t>(i)];
        if (l == Label::Pos) pos += data.x().row(i).transpose();
        else if (l == Label::Neg) neg += data.x().row(i).transpose();
    }
    return pos / static_cast<double>(data.n_pos()) - neg / static_cast<double>(data.n_neg());
}

void require_both_classes(const PartiallyLabeledDataset& data, const char* who) {
    if (data.n_pos() == 0 || data.n_neg() == 0)
        throw InvalidInput(std::string(who) + ": labeled rows must include both classes");
}

}  // namespace

Direction s3lda_fit(const PartiallyLabeledDataset& data, const AssignerSpec& spec, [[maybe_unused]] Rng& rng) {
    spec.validate();
    require_both_classes(data, "s3lda");
    const Matrix& x = data.x();
    const auto n = x.rows();
    const double nl = static_cast<double>(data.n_labeled());

    Vector omega = class_mean_difference(data);
    if (!(omega.norm() > 0.0)) omega = Vector::Unit(data.d(), 0);
    omega.normalize();

    Vector y = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = static_cast<double>(static_cast<int>(data.labels()[static_cast<std::size_t>(i)]));

    Direction best{omega, 0.0, 0.0, 0.0};
    Vector coef(n);
    for (int t = 1; t <= spec.steps + 1; ++t) {
        const Vector z = x * omega;
        double sq = 0.0, hinge = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double g = 0.0;
            if (y(i) != 0.0) {
                const double r = y(i) - z(i);
                sq += r * r;
                g -= 2.0 * r / nl;
            }
            const double az = std::abs(z(i));
            if (az < 1.0) {
                hinge += 1.0 - az;
                if (z(i) != 0.0) g -= spec.c * (z(i) > 0.0 ? 1.0 : -1.0) / static_cast<double>(n);
            }
            coef(i) = g;
        }
        const double objective = sq / nl + spec.c * hinge / static_cast<double>(n);
        if (t == 1) {
            best.initial_objective = objective;
            best.objective = objective;
        } else if (objective < best.objective) {
            best.objective = objective;
            best.omega = omega;
        }
        if (t == spec.steps + 1) break;

        Vector grad = x.transpose() * coef;
        grad -= grad.dot(omega) * omega;
        const double gn = grad.norm();
        if (!(gn > 1e-15)) break;
        omega -= (0.5 / std::sqrt(static_cast<double>(t))) * grad / gn;
        omega.normalize();
    }
    return best;
}

Direction l1_lda_fit(const PartiallyLabeledDataset& data, const AssignerSpec& spec) {
    spec.validate();
    require_both_classes(data, "l1-lda");
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < data.n(); ++i)
        if (data.labels()[static_cast<std::size_t>(i)] != Label::Unlabeled) rows.push_back(i);
    const auto nl = static_cast<Eigen::Index>(rows.size());
    Matrix xl(nl, data.d());
    Vector y(nl);
    for (Eigen::Index r = 0; r < nl; ++r) {
        xl.row(r) = data.x().row(rows[static_cast<std::size_t>(r)]);
        y(r) = static_cast<double>(static_cast<int>(data.labels()[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])]));
    }

    const double inv_n = 1.0 / static_cast<double>(nl);
    const Vector col_sq = xl.colwise().squaredNorm().transpose() * inv_n;
    const double half_penalty = spec.penalty / 2.0;
    Vector w = Vector::Zero(data.d());
    Vector resid = y;
    for (int sweep = 0; sweep < 10000; ++sweep) {
        double max_change = 0.0, max_w = 0.0;
        for (Eigen::Index j = 0; j < data.d(); ++j) {
            if (col_sq(j) <= 0.0) continue;
            const double rho = xl.col(j).dot(resid) * inv_n + col_sq(j) * w(j);
            const double shrunk = std::copysign(std::max(0.0, std::abs(rho) - half_penalty), rho);
            const double updated = shrunk / col_sq(j);
            const double delta = updated - w(j);
            if (delta != 0.0) {
                resid -= delta * xl.col(j);
                w(j) = updated;
            }
            max_change = std::max(max_change, std::abs(delta));
            max_w = std::max(max_w, std::abs(updated));
        }
        if (max_change <= 1e-10 * std::max(1.0, max_w)) break;
    }
    const double norm = w.norm();
    if (!(norm > 0.0)) throw EngineFailure("l1-lda: penalty zeroes every coordinate");
    w /= norm;

    Direction out{w, 0.0, 0.0, 0.0};
    out.objective = (y - xl * w).squaredNorm() * inv_n;
    out.initial_objective = y.squaredNorm() * inv_n;
    return out;
}

ClusterAssignment assign_by_direction(const PartiallyLabeledDataset& data, const Direction& direction) {
    if (direction.omega.size() != data.d()) throw InvalidInput("direction length does not match dataset dimension");
    const Eigen::RowVectorXd mean = data.x().colwise().mean();
    Vector proj = (data.x().rowwise() - mean) * direction.omega;

    double pos_sum = 0.0, neg_sum = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const Label l = data.labels()[static_cast<std::size_t>(i)];
        if (l == Label::Pos) pos_sum += proj(i);
        else if (l == Label::Neg) neg_sum += proj(i);
    }
    if ((data.n_pos() > 0 && pos_sum < 0.0) || (data.n_pos() == 0 && neg_sum > 0.0)) proj = -proj;

    ClusterAssignment a;
    a.clusters.resize(static_cast<std::size_t>(data.n()));
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const Label l = data.labels()[static_cast<std::size_t>(i)];
        int c = proj(i) >= 0.0 ? 1 : 2;
        if (l == Label::Pos) c = 1;
        else if (l == Label::Neg) c = 2;
        a.clusters[static_cast<std::size_t>(i)] = c;
    }
    mark_observed(a, data.labels());
    const auto n1 = std::count(a.clusters.begin(), a.clusters.end(), 1);
    if (n1 > 0 && n1 < data.n()) a.ci = cluster_index(data.x(), std::span<const int>(a.clusters));
    return a;
}

ClusterAssignment assign(const PartiallyLabeledDataset& data, const AssignerSpec& spec, Rng& rng) {
    switch (spec.kind) {
        case AssignerKind::two_means: return two_means(data.x(), spec, rng);
        case AssignerKind::cop_kmeans: return cop_kmeans(data, spec, rng);
        case AssignerKind::s3lda: {
            ClusterAssignment a = assign_by_direction(data, s3lda_fit(data, spec, rng));
            if (std::isnan(a.ci)) throw EngineFailure("s3lda produced a single cluster");
            return a;
        }
        case AssignerKind::l1_lda: {
            ClusterAssignment a = assign_by_direction(data, l1_lda_fit(data, spec));
            if (std::isnan(a.ci)) throw EngineFailure("l1-lda produced a single cluster");
            return a;
        }
    }
    throw InvalidInput("unknown assigner kind");
}

}  // namespace sigpal
