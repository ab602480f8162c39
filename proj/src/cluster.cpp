#include "colrec/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "colrec/errors.hpp"
#include "colrec/math.hpp"
#include "colrec/rng.hpp"

namespace colrec {

ClusteringMethod clustering_method_from_string(const std::string& name) {
    if (name == "kmeans") return ClusteringMethod::kKmeans;
    if (name == "dbscan") return ClusteringMethod::kDbscan;
    if (name == "hdbscan") return ClusteringMethod::kHdbscan;
    throw ValidationError("unknown clustering method: " + name);
}

std::string to_string(ClusteringMethod method) {
    switch (method) {
        case ClusteringMethod::kKmeans: return "kmeans";
        case ClusteringMethod::kDbscan: return "dbscan";
        case ClusteringMethod::kHdbscan: return "hdbscan";
    }
    return "?";
}

double wcss(const Eigen::MatrixXd& points, const ClusterAssignment& assignment) {
    if (assignment.labels.size() != static_cast<size_t>(points.rows()))
        throw ValidationError("wcss: label count does not match point count");
    const int m = assignment.n_clusters;
    const int dim = static_cast<int>(points.cols());
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(m, dim);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = assignment.labels[static_cast<size_t>(i)];
        if (c < 0) continue;
        centroids.row(c) += points.row(i);
        counts(c) += 1.0;
    }
    for (int c = 0; c < m; ++c)
        if (counts(c) > 0.0) centroids.row(c) /= counts(c);
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = assignment.labels[static_cast<size_t>(i)];
        if (c < 0) continue;
        total += (points.row(i) - centroids.row(c)).squaredNorm();
    }
    return total;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

ClusterAssignment kmeans(const Eigen::MatrixXd& points, const KmeansParams& params) {
    const int n = static_cast<int>(points.rows());
    if (params.k < 1) throw ValidationError("kmeans: k must be >= 1");
    if (params.k > n) throw ValidationError("kmeans: k exceeds the number of points");
    if (params.max_iters < 1) throw ValidationError("kmeans: max_iters must be >= 1");

    const int k = params.k;
    const int dim = static_cast<int>(points.cols());
    Rng rng(params.seed);

    // k-means++ seeding.
    Eigen::MatrixXd centroids(k, dim);
    std::vector<double> best_d2(static_cast<size_t>(n), std::numeric_limits<double>::max());
    {
        const int first = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        centroids.row(0) = points.row(first);
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                best_d2[static_cast<size_t>(i)] =
                    std::min(best_d2[static_cast<size_t>(i)],
                             (points.row(i) - centroids.row(c - 1)).squaredNorm());
                total += best_d2[static_cast<size_t>(i)];
            }
            int pick = -1;
            if (total > 0.0) {
                const double r = rng.uniform01() * total;
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    acc += best_d2[static_cast<size_t>(i)];
                    if (acc >= r) {
                        pick = i;
                        break;
                    }
                }
                if (pick < 0) pick = n - 1;
            } else {
                // All remaining mass at distance zero (duplicates).
                pick = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            }
            centroids.row(c) = points.row(pick);
        }
    }

    std::vector<int> labels(static_cast<size_t>(n), 0);
    std::vector<int> prev(static_cast<size_t>(n), -1);
    for (int iter = 0; iter < params.max_iters; ++iter) {
        // Assignment: nearest centroid, ties to the lowest id.
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bd = (points.row(i) - centroids.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (points.row(i) - centroids.row(c)).squaredNorm();
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            labels[static_cast<size_t>(i)] = best;
        }
        if (labels == prev) break;
        prev = labels;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < n; ++i) {
            sums.row(labels[static_cast<size_t>(i)]) += points.row(i);
            counts(labels[static_cast<size_t>(i)]) += 1.0;
        }
        for (int c = 0; c < k; ++c)
            if (counts(c) > 0.0) centroids.row(c) = sums.row(c) / counts(c);

        // Refill empty clusters with the point farthest from its centroid.
        std::vector<char> stolen(static_cast<size_t>(n), 0);
        for (int c = 0; c < k; ++c) {
            if (counts(c) > 0.0) continue;
            int far = -1;
            double fd = -1.0;
            for (int i = 0; i < n; ++i) {
                if (stolen[static_cast<size_t>(i)]) continue;
                const double d =
                    (points.row(i) - centroids.row(labels[static_cast<size_t>(i)])).squaredNorm();
                if (d > fd) {
                    fd = d;
                    far = i;
                }
            }
            centroids.row(c) = points.row(far);
            labels[static_cast<size_t>(far)] = c;
            stolen[static_cast<size_t>(far)] = 1;
        }
    }

    ClusterAssignment out;
    out.labels = std::move(labels);
    out.n_clusters = k;
    return out;
}

// ---------------------------------------------------------------------------
// DBSCAN
// ---------------------------------------------------------------------------

ClusterAssignment dbscan(const Eigen::MatrixXd& points, const DbscanParams& params) {
    if (params.eps <= 0.0) throw ValidationError("dbscan: eps must be > 0");
    if (params.min_pts < 1) throw ValidationError("dbscan: min_pts must be >= 1");

    const int n = static_cast<int>(points.rows());
    const double eps2 = params.eps * params.eps;
    const Eigen::MatrixXd d2 = pairwise_sq_dists(points);

    std::vector<std::vector<int>> neighbors(static_cast<size_t>(n));
    std::vector<char> core(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        auto& nb = neighbors[static_cast<size_t>(i)];
        for (int j = 0; j < n; ++j)
            if (j != i && d2(i, j) <= eps2) nb.push_back(j);
        core[static_cast<size_t>(i)] = (static_cast<int>(nb.size()) + 1 >= params.min_pts) ? 1 : 0;
    }

    std::vector<int> labels(static_cast<size_t>(n), -1);
    int next_cluster = 0;
    for (int i = 0; i < n; ++i) {
        if (!core[static_cast<size_t>(i)] || labels[static_cast<size_t>(i)] != -1) continue;
        const int cluster = next_cluster++;
        std::deque<int> queue{i};
        labels[static_cast<size_t>(i)] = cluster;
        while (!queue.empty()) {
            const int p = queue.front();
            queue.pop_front();
            for (int q : neighbors[static_cast<size_t>(p)]) {
                if (core[static_cast<size_t>(q)] && labels[static_cast<size_t>(q)] == -1) {
                    labels[static_cast<size_t>(q)] = cluster;
                    queue.push_back(q);
                }
            }
        }
    }

    // Borders: lowest cluster id among in-range cores.
    for (int i = 0; i < n; ++i) {
        if (core[static_cast<size_t>(i)] || labels[static_cast<size_t>(i)] != -1) continue;
        int best = std::numeric_limits<int>::max();
        for (int q : neighbors[static_cast<size_t>(i)])
            if (core[static_cast<size_t>(q)]) best = std::min(best, labels[static_cast<size_t>(q)]);
        if (best != std::numeric_limits<int>::max()) labels[static_cast<size_t>(i)] = best;
    }

    ClusterAssignment out;
    out.labels = std::move(labels);
    out.n_clusters = next_cluster;
    return out;
}

// ---------------------------------------------------------------------------
// HDBSCAN
// ---------------------------------------------------------------------------

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// lambda differences with an inf - inf = 0 convention (zero-distance merges
// produce infinite lambdas).
double lambda_gap(double high, double low) {
    if (high == low) return 0.0;
    return high - low;
}

struct MstEdge {
    int a;  // a < b
    int b;
    double weight;
};

std::vector<double> core_distances(const Eigen::MatrixXd& dist, int min_samples) {
    const int n = static_cast<int>(dist.rows());
    std::vector<double> core(static_cast<size_t>(n));
    std::vector<double> row(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) row[static_cast<size_t>(j)] = dist(i, j);
        std::nth_element(row.begin(), row.begin() + (min_samples - 1), row.end());
        core[static_cast<size_t>(i)] = row[static_cast<size_t>(min_samples - 1)];
    }
    return core;
}

std::vector<MstEdge> mutual_reachability_mst(const Eigen::MatrixXd& dist,
                                             const std::vector<double>& core) {
    const int n = static_cast<int>(dist.rows());
    auto mreach = [&](int i, int j) {
        return std::max({core[static_cast<size_t>(i)], core[static_cast<size_t>(j)], dist(i, j)});
    };

    std::vector<char> in_tree(static_cast<size_t>(n), 0);
    std::vector<double> best(static_cast<size_t>(n), kInf);
    std::vector<int> parent(static_cast<size_t>(n), 0);
    in_tree[0] = 1;
    for (int j = 1; j < n; ++j) best[static_cast<size_t>(j)] = mreach(0, j);

    auto edge_key = [&](int v) {
        const int p = parent[static_cast<size_t>(v)];
        return std::make_pair(std::min(p, v), std::max(p, v));
    };

    std::vector<MstEdge> edges;
    edges.reserve(static_cast<size_t>(n - 1));
    for (int step = 1; step < n; ++step) {
        int pick = -1;
        for (int v = 0; v < n; ++v) {
            if (in_tree[static_cast<size_t>(v)]) continue;
            if (pick < 0 || best[static_cast<size_t>(v)] < best[static_cast<size_t>(pick)] ||
                (best[static_cast<size_t>(v)] == best[static_cast<size_t>(pick)] &&
                 edge_key(v) < edge_key(pick)))
                pick = v;
        }
        const int p = parent[static_cast<size_t>(pick)];
        edges.push_back({std::min(p, pick), std::max(p, pick), best[static_cast<size_t>(pick)]});
        in_tree[static_cast<size_t>(pick)] = 1;
        for (int v = 0; v < n; ++v) {
            if (in_tree[static_cast<size_t>(v)]) continue;
            const double w = mreach(pick, v);
            if (w < best[static_cast<size_t>(v)] ||
                (w == best[static_cast<size_t>(v)] &&
                 std::make_pair(std::min(pick, v), std::max(pick, v)) < edge_key(v))) {
                best[static_cast<size_t>(v)] = w;
                parent[static_cast<size_t>(v)] = pick;
            }
        }
    }
    return edges;
}

// Single-linkage dendrogram over the MST: nodes 0..n-1 are leaves, merge k
// creates node n+k.
struct Dendrogram {
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> dist;
    std::vector<int> size;
    int n_leaves = 0;

    int root() const { return n_leaves + static_cast<int>(left.size()) - 1; }
    int node_size(int v) const {
        return v < n_leaves ? 1 : size[static_cast<size_t>(v - n_leaves)];
    }
};

Dendrogram single_linkage(std::vector<MstEdge> edges, int n) {
    std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
        if (x.weight != y.weight) return x.weight < y.weight;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    Dendrogram dg;
    dg.n_leaves = n;
    std::vector<int> find_root(static_cast<size_t>(2 * n - 1));
    std::iota(find_root.begin(), find_root.end(), 0);
    std::function<int(int)> find = [&](int v) {
        while (find_root[static_cast<size_t>(v)] != v) {
            find_root[static_cast<size_t>(v)] =
                find_root[static_cast<size_t>(find_root[static_cast<size_t>(v)])];
            v = find_root[static_cast<size_t>(v)];
        }
        return v;
    };

    for (const auto& e : edges) {
        const int ra = find(e.a);
        const int rb = find(e.b);
        const int node = n + static_cast<int>(dg.left.size());
        dg.left.push_back(ra);
        dg.right.push_back(rb);
        dg.dist.push_back(e.weight);
        dg.size.push_back(dg.node_size(ra) + dg.node_size(rb));
        find_root[static_cast<size_t>(ra)] = node;
        find_root[static_cast<size_t>(rb)] = node;
    }
    return dg;
}

// Condensed tree: clusters are ids 0.. (0 = root); each point falls out of
// exactly one cluster at some lambda.
struct CondensedTree {
    std::vector<int> cluster_parent;        // per cluster, -1 for root
    std::vector<double> birth_lambda;       // lambda at which the cluster appeared
    std::vector<double> split_lambda;       // lambda of the split creating the children
    std::vector<std::vector<int>> children; // cluster children
    std::vector<int> point_cluster;         // per point: cluster it fell out of
    std::vector<double> point_lambda;       // per point: lambda at fall-out

    int n_clusters() const { return static_cast<int>(cluster_parent.size()); }
};

void collect_leaves(const Dendrogram& dg, int node, std::vector<int>& out) {
    std::vector<int> stack{node};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v < dg.n_leaves) {
            out.push_back(v);
        } else {
            stack.push_back(dg.left[static_cast<size_t>(v - dg.n_leaves)]);
            stack.push_back(dg.right[static_cast<size_t>(v - dg.n_leaves)]);
        }
    }
}

CondensedTree condense(const Dendrogram& dg, int min_cluster_size) {
    CondensedTree ct;
    ct.cluster_parent.push_back(-1);
    ct.birth_lambda.push_back(0.0);
    ct.split_lambda.push_back(kInf);
    ct.children.emplace_back();
    ct.point_cluster.assign(static_cast<size_t>(dg.n_leaves), 0);
    ct.point_lambda.assign(static_cast<size_t>(dg.n_leaves), kInf);

    if (dg.n_leaves == 1) {
        ct.point_lambda[0] = kInf;
        return ct;
    }

    struct Frame {
        int node;     // SLT internal node
        int cluster;  // condensed cluster it belongs to
    };
    std::vector<Frame> stack{{dg.root(), 0}};
    std::vector<int> leaves;
    while (!stack.empty()) {
        const auto [node, cluster] = stack.back();
        stack.pop_back();
        const int k = node - dg.n_leaves;
        const double d = dg.dist[static_cast<size_t>(k)];
        const double lambda = d > 0.0 ? 1.0 / d : kInf;
        const int left = dg.left[static_cast<size_t>(k)];
        const int right = dg.right[static_cast<size_t>(k)];
        const bool keep_left = dg.node_size(left) >= min_cluster_size;
        const bool keep_right = dg.node_size(right) >= min_cluster_size;

        auto fall_out = [&](int subtree) {
            leaves.clear();
            collect_leaves(dg, subtree, leaves);
            for (int p : leaves) {
                ct.point_cluster[static_cast<size_t>(p)] = cluster;
                ct.point_lambda[static_cast<size_t>(p)] = lambda;
            }
        };
        auto descend = [&](int subtree, int into_cluster) {
            if (subtree < dg.n_leaves) {
                // A kept subtree is never a bare leaf (min_cluster_size >= 2).
                ct.point_cluster[static_cast<size_t>(subtree)] = into_cluster;
                ct.point_lambda[static_cast<size_t>(subtree)] = lambda;
                return;
            }
            stack.push_back({subtree, into_cluster});
        };

        if (keep_left && keep_right) {
            for (int side : {left, right}) {
                const int child = ct.n_clusters();
                ct.cluster_parent.push_back(cluster);
                ct.birth_lambda.push_back(lambda);
                ct.split_lambda.push_back(kInf);
                ct.children.emplace_back();
                ct.children[static_cast<size_t>(cluster)].push_back(child);
                descend(side, child);
            }
            ct.split_lambda[static_cast<size_t>(cluster)] =
                std::min(ct.split_lambda[static_cast<size_t>(cluster)], lambda);
        } else if (keep_left) {
            fall_out(right);
            descend(left, cluster);
        } else if (keep_right) {
            fall_out(left);
            descend(right, cluster);
        } else {
            fall_out(left);
            fall_out(right);
        }
    }
    return ct;
}

}  // namespace

std::vector<double> hdbscan_core_distances(const Eigen::MatrixXd& points, int min_samples) {
    const int n = static_cast<int>(points.rows());
    if (min_samples < 1) throw ValidationError("hdbscan: min_samples must be >= 1");
    if (min_samples > n) throw ValidationError("hdbscan: min_samples exceeds the number of points");
    return core_distances(pairwise_dists(points), min_samples);
}

double hdbscan_mst_weight(const Eigen::MatrixXd& points, int min_samples) {
    const Eigen::MatrixXd dist = pairwise_dists(points);
    const auto core = core_distances(dist, min_samples);
    const auto edges = mutual_reachability_mst(dist, core);
    double total = 0.0;
    for (const auto& e : edges) total += e.weight;
    return total;
}

ClusterAssignment hdbscan(const Eigen::MatrixXd& points, const HdbscanParams& params) {
    const int n = static_cast<int>(points.rows());
    if (params.min_samples < 1) throw ValidationError("hdbscan: min_samples must be >= 1");
    if (params.min_cluster_size < 2)
        throw ValidationError("hdbscan: min_cluster_size must be >= 2");
    if (n < params.min_cluster_size)
        throw ValidationError("hdbscan: fewer points than min_cluster_size");
    if (params.min_samples > n)
        throw ValidationError("hdbscan: min_samples exceeds the number of points");

    const Eigen::MatrixXd dist = pairwise_dists(points);
    const auto core = core_distances(dist, params.min_samples);
    const auto edges = mutual_reachability_mst(dist, core);
    const Dendrogram dg = single_linkage(edges, n);
    const CondensedTree ct = condense(dg, params.min_cluster_size);

    // Stability: every point contributes (lambda_p - lambda_birth) to the
    // cluster it fell out of; every child cluster contributes its size times
    // (lambda_split - lambda_birth) to its parent.
    std::vector<double> stability(static_cast<size_t>(ct.n_clusters()), 0.0);
    std::vector<int> cluster_size(static_cast<size_t>(ct.n_clusters()), 0);
    for (size_t p = 0; p < ct.point_cluster.size(); ++p) {
        int c = ct.point_cluster[p];
        stability[static_cast<size_t>(c)] +=
            lambda_gap(ct.point_lambda[p], ct.birth_lambda[static_cast<size_t>(c)]);
        while (c >= 0) {
            ++cluster_size[static_cast<size_t>(c)];
            c = ct.cluster_parent[static_cast<size_t>(c)];
        }
    }
    for (int c = 1; c < ct.n_clusters(); ++c) {
        const int parent = ct.cluster_parent[static_cast<size_t>(c)];
        stability[static_cast<size_t>(parent)] +=
            static_cast<double>(cluster_size[static_cast<size_t>(c)]) *
            lambda_gap(ct.birth_lambda[static_cast<size_t>(c)],
                       ct.birth_lambda[static_cast<size_t>(parent)]);
    }

    // Excess-of-mass selection, bottom-up; the root only wins when the tree
    // has no other cluster (e.g. fully degenerate data).
    std::vector<char> selected(static_cast<size_t>(ct.n_clusters()), 0);
    std::vector<double> subtree_stability = stability;
    for (int c = ct.n_clusters() - 1; c >= 1; --c) {
        if (ct.children[static_cast<size_t>(c)].empty()) {
            selected[static_cast<size_t>(c)] = 1;
            continue;
        }
        double child_sum = 0.0;
        for (int ch : ct.children[static_cast<size_t>(c)])
            child_sum += subtree_stability[static_cast<size_t>(ch)];
        if (child_sum > stability[static_cast<size_t>(c)]) {
            subtree_stability[static_cast<size_t>(c)] = child_sum;
        } else {
            selected[static_cast<size_t>(c)] = 1;
            // Deselect the whole subtree below c.
            std::vector<int> stack(ct.children[static_cast<size_t>(c)].begin(),
                                   ct.children[static_cast<size_t>(c)].end());
            while (!stack.empty()) {
                const int v = stack.back();
                stack.pop_back();
                selected[static_cast<size_t>(v)] = 0;
                stack.insert(stack.end(), ct.children[static_cast<size_t>(v)].begin(),
                             ct.children[static_cast<size_t>(v)].end());
            }
        }
    }
    if (ct.n_clusters() == 1 && n >= params.min_cluster_size) selected[0] = 1;

    // Output labels in ascending condensed-cluster id order.
    std::vector<int> out_label(static_cast<size_t>(ct.n_clusters()), -1);
    int m = 0;
    for (int c = 0; c < ct.n_clusters(); ++c)
        if (selected[static_cast<size_t>(c)]) out_label[static_cast<size_t>(c)] = m++;

    ClusterAssignment out;
    out.n_clusters = m;
    out.labels.assign(static_cast<size_t>(n), -1);
    for (int p = 0; p < n; ++p) {
        int c = ct.point_cluster[static_cast<size_t>(p)];
        while (c >= 0) {
            if (selected[static_cast<size_t>(c)]) {
                out.labels[static_cast<size_t>(p)] = out_label[static_cast<size_t>(c)];
                break;
            }
            c = ct.cluster_parent[static_cast<size_t>(c)];
        }
    }
    return out;
}

ClusterAssignment cluster_points(const Eigen::MatrixXd& points, ClusteringMethod method,
                                 const KmeansParams& km, const DbscanParams& db,
                                 const HdbscanParams& hdb);

}  // namespace colrec
