#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "colrec/types.hpp"

namespace colrec {

/// Reduced coordinates, row k aligned with input row k.
struct ReducedPoints {
    std::vector<std::string> item_ids;
    Eigen::MatrixXd coords;  // n x r
};

enum class DimRedMethod { kNone, kPca, kUmap };

DimRedMethod dimred_method_from_string(const std::string& name);
std::string to_string(DimRedMethod method);

struct UmapParams {
    int n_neighbors = 15;
    int n_components = 3;
    double min_dist = 0.0;
    int n_epochs = 200;
    double learning_rate = 1.0;
    int negative_sample_rate = 5;
    std::uint64_t seed = 0;

    void validate(int n_points) const;
};

struct PcaModel {
    Eigen::VectorXd mean;             // d
    Eigen::MatrixXd components;       // d x r, orthonormal columns
    Eigen::VectorXd explained_variance;        // r, non-increasing
    Eigen::VectorXd explained_variance_ratio;  // r
};

/// Principal components of the sample covariance (denominator n - 1),
/// components ordered by descending eigenvalue. Sign convention: the
/// largest-magnitude coordinate of each component is positive.
PcaModel pca_fit(const EmbeddingMatrix& points, int r);
ReducedPoints pca_fit_transform(const EmbeddingMatrix& points, int r);

/// The smooth-kNN graph weights of one point: rho is the distance to the
/// nearest neighbor and sigma solves
///   sum_j exp(-max(0, d_j - rho) / sigma) = log2(k)
/// by bisection (tolerance 1e-5, at most 64 iterations). Exposed for tests.
struct SmoothKnn {
    double rho;
    double sigma;
    double residual;  // |sum - log2(k)| at the returned sigma
};
SmoothKnn smooth_knn(const std::vector<double>& neighbor_dists);

/// Fuzzy set union of two directed memberships: a + b - a*b.
inline double fuzzy_union(double a, double b) { return a + b - a * b; }

/// Least-squares fit of the rational curve 1 / (1 + a x^(2b)) to the
/// min_dist-derived target over x in [0, 3].
struct AbCurve {
    double a;
    double b;
};
AbCurve fit_ab(double min_dist);

/// Undirected fuzzy graph built from the exact Euclidean kNN graph;
/// exposed for the symmetry property and reused by the optimizer.
struct FuzzyGraph {
    struct Edge {
        int from;
        int to;
        double weight;
    };
    std::vector<Edge> edges;  // both directions present, weights symmetric
};
FuzzyGraph fuzzy_graph(const Eigen::MatrixXd& points, int n_neighbors);

/// Standard UMAP pipeline: exact kNN graph, smooth-kNN calibration, fuzzy
/// union, seeded uniform layout in [-10, 10], then negative-sampling SGD
/// with the min_dist-derived a, b curve. Deterministic for a fixed seed.
ReducedPoints umap_fit_transform(const EmbeddingMatrix& points, const UmapParams& params);

ReducedPoints reduce(const EmbeddingMatrix& points, DimRedMethod method, int r,
                     const UmapParams& umap_params);

}  // namespace colrec
