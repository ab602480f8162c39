#include "colrec/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "colrec/errors.hpp"
#include "colrec/math.hpp"
#include "colrec/rng.hpp"

namespace colrec {

DimRedMethod dimred_method_from_string(const std::string& name) {
    if (name == "none") return DimRedMethod::kNone;
    if (name == "pca") return DimRedMethod::kPca;
    if (name == "umap") return DimRedMethod::kUmap;
    throw ValidationError("unknown dimensionality-reduction method: " + name);
}

std::string to_string(DimRedMethod method) {
    switch (method) {
        case DimRedMethod::kNone: return "none";
        case DimRedMethod::kPca: return "pca";
        case DimRedMethod::kUmap: return "umap";
    }
    return "?";
}

void UmapParams::validate(int n_points) const {
    if (n_components < 1) throw ValidationError("umap: n_components must be >= 1");
    if (n_neighbors < 2) throw ValidationError("umap: n_neighbors must be >= 2");
    if (n_points <= n_neighbors)
        throw ValidationError("umap: need more points than n_neighbors");
    if (min_dist < 0.0) throw ValidationError("umap: min_dist must be >= 0");
    if (n_epochs < 1) throw ValidationError("umap: n_epochs must be >= 1");
}

PcaModel pca_fit(const EmbeddingMatrix& points, int r) {
    const int n = points.rows();
    const int d = points.dim();
    if (n < 2) throw ValidationError("pca: need at least 2 points");
    if (r < 1 || r > std::min(n, d))
        throw ValidationError("pca: r must be in [1, min(n_points, dim)]");

    const Eigen::MatrixXd x = points.vectors.cast<double>();
    PcaModel model;
    model.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw ValidationError("pca: eigendecomposition failed");

    // Eigen returns ascending eigenvalues; take the top r in descending order.
    model.components.resize(d, r);
    model.explained_variance.resize(r);
    const double total = std::max(solver.eigenvalues().sum(), 0.0);
    for (int k = 0; k < r; ++k) {
        Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);
        int arg_max = 0;
        for (int j = 1; j < d; ++j)
            if (std::abs(v(j)) > std::abs(v(arg_max))) arg_max = j;
        if (v(arg_max) < 0.0) v = -v;
        model.components.col(k) = v;
        model.explained_variance(k) = std::max(solver.eigenvalues()(d - 1 - k), 0.0);
    }
    model.explained_variance_ratio =
        total > 0.0 ? (model.explained_variance / total).eval()
                    : Eigen::VectorXd::Zero(r).eval();
    return model;
}

ReducedPoints pca_fit_transform(const EmbeddingMatrix& points, int r) {
    const PcaModel model = pca_fit(points, r);
    ReducedPoints out;
    out.item_ids = points.index.ids();
    const Eigen::MatrixXd x = points.vectors.cast<double>();
    out.coords = (x.rowwise() - model.mean.transpose()) * model.components;
    return out;
}

SmoothKnn smooth_knn(const std::vector<double>& neighbor_dists) {
    if (neighbor_dists.empty()) throw ValidationError("smooth_knn: no neighbors");
    const double target = std::log2(static_cast<double>(neighbor_dists.size()));
    SmoothKnn result{};
    result.rho = *std::min_element(neighbor_dists.begin(), neighbor_dists.end());

    auto membership_sum = [&](double sigma) {
        double s = 0.0;
        for (double d : neighbor_dists) s += std::exp(-std::max(0.0, d - result.rho) / sigma);
        return s;
    };

    double lo = 0.0;
    double hi = 1.0;
    while (membership_sum(hi) < target && hi < 1e12) hi *= 2.0;
    double sigma = hi;
    for (int it = 0; it < 64; ++it) {
        sigma = 0.5 * (lo + hi);
        const double s = membership_sum(sigma);
        if (std::abs(s - target) <= 1e-5) break;
        if (s > target)
            hi = sigma;
        else
            lo = sigma;
    }
    if (sigma <= 0.0) sigma = std::numeric_limits<double>::min();
    result.sigma = sigma;
    result.residual = std::abs(membership_sum(sigma) - target);
    return result;
}

AbCurve fit_ab(double min_dist) {
    // Sample the target membership curve on [0, 3] and fit
    // f(x) = 1 / (1 + a x^(2b)) by Levenberg-Marquardt.
    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples), ys(kSamples);
    for (int k = 0; k < kSamples; ++k) {
        const double x = 3.0 * (k + 1) / kSamples;
        xs[static_cast<size_t>(k)] = x;
        ys[static_cast<size_t>(k)] = x <= min_dist ? 1.0 : std::exp(-(x - min_dist));
    }

    double a = 1.0, b = 1.0, lambda = 1e-3;
    auto sse = [&](double pa, double pb) {
        double s = 0.0;
        for (int k = 0; k < kSamples; ++k) {
            const double f = 1.0 / (1.0 + pa * std::pow(xs[static_cast<size_t>(k)], 2.0 * pb));
            const double r = f - ys[static_cast<size_t>(k)];
            s += r * r;
        }
        return s;
    };

    double err = sse(a, b);
    for (int it = 0; it < 200; ++it) {
        double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, jtr0 = 0.0, jtr1 = 0.0;
        for (int k = 0; k < kSamples; ++k) {
            const double x = xs[static_cast<size_t>(k)];
            const double p = std::pow(x, 2.0 * b);
            const double denom = 1.0 + a * p;
            const double f = 1.0 / denom;
            const double r = f - ys[static_cast<size_t>(k)];
            const double dfda = -p / (denom * denom);
            const double dfdb = -2.0 * a * p * std::log(x) / (denom * denom);
            jtj00 += dfda * dfda;
            jtj01 += dfda * dfdb;
            jtj11 += dfdb * dfdb;
            jtr0 += dfda * r;
            jtr1 += dfdb * r;
        }
        const double m00 = jtj00 * (1.0 + lambda), m11 = jtj11 * (1.0 + lambda);
        const double det = m00 * m11 - jtj01 * jtj01;
        if (std::abs(det) < 1e-300) break;
        const double da = (-jtr0 * m11 + jtr1 * jtj01) / det;
        const double db = (-jtr1 * m00 + jtr0 * jtj01) / det;
        const double na = a + da, nb = b + db;
        if (na > 0.0 && nb > 0.0 && sse(na, nb) < err) {
            a = na;
            b = nb;
            err = sse(a, b);
            lambda = std::max(lambda * 0.5, 1e-12);
        } else {
            lambda *= 4.0;
        }
        if (std::abs(da) + std::abs(db) < 1e-12) break;
    }
    return {a, b};
}

FuzzyGraph fuzzy_graph(const Eigen::MatrixXd& points, int n_neighbors) {
    const int n = static_cast<int>(points.rows());
    if (n_neighbors < 2) throw ValidationError("umap: n_neighbors must be >= 2");
    if (n <= n_neighbors) throw ValidationError("umap: need more points than n_neighbors");
    const Eigen::MatrixXd d2 = pairwise_sq_dists(points);

    // Exact kNN (Euclidean), self excluded, ties broken by index.
    struct Directed {
        int to;
        double weight;
    };
    std::vector<std::vector<Directed>> memberships(static_cast<size_t>(n));
    std::vector<int> order(static_cast<size_t>(n));
    std::vector<double> dists(static_cast<size_t>(n_neighbors));
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        order.erase(order.begin() + i);
        std::partial_sort(order.begin(), order.begin() + n_neighbors, order.end(),
                          [&](int a, int b) {
                              if (d2(i, a) != d2(i, b)) return d2(i, a) < d2(i, b);
                              return a < b;
                          });
        for (int k = 0; k < n_neighbors; ++k)
            dists[static_cast<size_t>(k)] = std::sqrt(d2(i, order[static_cast<size_t>(k)]));
        const SmoothKnn calib = smooth_knn(dists);
        auto& row = memberships[static_cast<size_t>(i)];
        row.reserve(static_cast<size_t>(n_neighbors));
        for (int k = 0; k < n_neighbors; ++k) {
            const double d = dists[static_cast<size_t>(k)];
            const double w = std::exp(-std::max(0.0, d - calib.rho) / calib.sigma);
            row.push_back({order[static_cast<size_t>(k)], w});
        }
    }

    // Fuzzy union a + b - a*b, computed once per unordered pair so the
    // result is symmetric exactly.
    std::map<std::pair<int, int>, double> undirected;
    for (int i = 0; i < n; ++i) {
        for (const auto& [j, w] : memberships[static_cast<size_t>(i)]) {
            const auto key = std::minmax(i, j);
            auto [it, fresh] = undirected.try_emplace({key.first, key.second}, 0.0);
            it->second = fresh ? w : fuzzy_union(it->second, w);
        }
    }

    FuzzyGraph graph;
    graph.edges.reserve(undirected.size() * 2);
    for (const auto& [pair, w] : undirected) {
        graph.edges.push_back({pair.first, pair.second, w});
        graph.edges.push_back({pair.second, pair.first, w});
    }
    return graph;
}

namespace {

// umap-learn's optimize_layout_euclidean, single-threaded: edges are visited
// on their epochs_per_sample schedule, with per-edge negative sampling and
// per-dimension gradient clipping to [-4, 4].
Eigen::MatrixXd optimize_layout(const FuzzyGraph& graph, int n, const UmapParams& params) {
    const AbCurve curve = fit_ab(params.min_dist);
    const double a = curve.a;
    const double b = curve.b;
    const int dim = params.n_components;

    // Both directions of every undirected edge run on their own schedule,
    // matching the reference optimizer's per-node force balance.
    std::vector<FuzzyGraph::Edge> edges = graph.edges;
    double max_w = 0.0;
    for (const auto& e : edges) max_w = std::max(max_w, e.weight);
    // Edges sampled less than once over the whole schedule are dropped.
    const double cutoff = max_w / static_cast<double>(params.n_epochs);
    std::erase_if(edges, [&](const FuzzyGraph::Edge& e) { return e.weight < cutoff; });

    std::vector<double> epochs_per_sample(edges.size());
    std::vector<double> next_sample(edges.size());
    std::vector<double> next_neg(edges.size());
    const double neg_rate = static_cast<double>(params.negative_sample_rate);
    for (size_t e = 0; e < edges.size(); ++e) {
        epochs_per_sample[e] = max_w / edges[e].weight;
        next_sample[e] = epochs_per_sample[e];
        next_neg[e] = epochs_per_sample[e] / neg_rate;
    }

    Rng rng(derive_seed(params.seed, 0x756d6170ULL));
    Eigen::MatrixXd y(n, dim);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < dim; ++c) y(i, c) = rng.uniform(-10.0, 10.0);

    auto clip = [](double v) { return std::clamp(v, -4.0, 4.0); };

    for (int epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double alpha =
            params.learning_rate * (1.0 - static_cast<double>(epoch) / params.n_epochs);
        for (size_t e = 0; e < edges.size(); ++e) {
            if (next_sample[e] > epoch + 1.0) continue;
            const int i = edges[e].from;
            const int j = edges[e].to;

            double d2 = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double diff = y(i, c) - y(j, c);
                d2 += diff * diff;
            }
            if (d2 > 0.0) {
                const double pd = std::pow(d2, b);
                const double coeff = (-2.0 * a * b * pd / d2) / (a * pd + 1.0);
                for (int c = 0; c < dim; ++c) {
                    const double g = clip(coeff * (y(i, c) - y(j, c)));
                    y(i, c) += alpha * g;
                    y(j, c) -= alpha * g;
                }
            }
            next_sample[e] += epochs_per_sample[e];

            const double eps_neg = epochs_per_sample[e] / neg_rate;
            const int n_negative = static_cast<int>((epoch + 1.0 - next_neg[e]) / eps_neg);
            for (int s = 0; s < n_negative; ++s) {
                const int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
                if (k == i) continue;
                double nd2 = 0.0;
                for (int c = 0; c < dim; ++c) {
                    const double diff = y(i, c) - y(k, c);
                    nd2 += diff * diff;
                }
                if (nd2 > 0.0) {
                    const double coeff = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
                    for (int c = 0; c < dim; ++c)
                        y(i, c) += alpha * clip(coeff * (y(i, c) - y(k, c)));
                } else {
                    for (int c = 0; c < dim; ++c) y(i, c) += alpha * 4.0;
                }
            }
            next_neg[e] += n_negative * eps_neg;
        }
    }
    return y;
}

}  // namespace

ReducedPoints umap_fit_transform(const EmbeddingMatrix& points, const UmapParams& params) {
    const int n = points.rows();
    params.validate(n);

    const Eigen::MatrixXd x = points.vectors.cast<double>();
    const FuzzyGraph graph = fuzzy_graph(x, params.n_neighbors);

    ReducedPoints out;
    out.item_ids = points.index.ids();
    out.coords = optimize_layout(graph, n, params);
    return out;
}

ReducedPoints reduce(const EmbeddingMatrix& points, DimRedMethod method, int r,
                     const UmapParams& umap_params) {
    switch (method) {
        case DimRedMethod::kNone: {
            ReducedPoints out;
            out.item_ids = points.index.ids();
            out.coords = points.vectors.cast<double>();
            return out;
        }
        case DimRedMethod::kPca:
            return pca_fit_transform(points, r);
        case DimRedMethod::kUmap: {
            UmapParams p = umap_params;
            p.n_components = r;
            return umap_fit_transform(points, p);
        }
    }
    throw ValidationError("unknown dimensionality-reduction method");
}

}  // namespace colrec
