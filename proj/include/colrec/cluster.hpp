#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace colrec {

/// Per-point labels: -1 is noise, 0..n_clusters-1 are clusters (every
/// cluster id has at least one member). k-means never emits -1.
struct ClusterAssignment {
    std::vector<int> labels;
    int n_clusters = 0;
};

enum class ClusteringMethod { kKmeans, kDbscan, kHdbscan };

ClusteringMethod clustering_method_from_string(const std::string& name);
std::string to_string(ClusteringMethod method);

struct KmeansParams {
    int k = 8;
    int max_iters = 100;
    std::uint64_t seed = 0;
};

struct DbscanParams {
    double eps = 0.5;
    int min_pts = 8;  // neighbor count includes the point itself
};

struct HdbscanParams {
    int min_samples = 8;       // core distance = distance to the
                               // min_samples-th nearest neighbor, self included
    int min_cluster_size = 30;
};

/// Lloyd's algorithm with k-means++ seeding. Runs to an assignment fixpoint
/// or max_iters; within-cluster sum of squares is non-increasing per
/// iteration; deterministic for a fixed seed. Empty clusters are refilled
/// with the point farthest from its centroid.
ClusterAssignment kmeans(const Eigen::MatrixXd& points, const KmeansParams& params);

/// Classic DBSCAN. Core point: >= min_pts neighbors within eps, self
/// included. Clusters are connected components of core points; border
/// points attach to the lowest cluster id among in-range cores. Cluster ids
/// follow the input order of their first core point.
ClusterAssignment dbscan(const Eigen::MatrixXd& points, const DbscanParams& params);

/// HDBSCAN: mutual-reachability MST (ties broken on (min index, max index)),
/// single-linkage hierarchy, condense at min_cluster_size, excess-of-mass
/// cluster selection. Points outside every selected cluster get -1.
ClusterAssignment hdbscan(const Eigen::MatrixXd& points, const HdbscanParams& params);

/// Core distances for every point (distance to the min_samples-th nearest
/// neighbor, self included). Exposed for the monotonicity property.
std::vector<double> hdbscan_core_distances(const Eigen::MatrixXd& points, int min_samples);

/// Sum of mutual-reachability MST edge weights; exposed for oracle checks.
double hdbscan_mst_weight(const Eigen::MatrixXd& points, int min_samples);

/// Within-cluster sum of squares for a given assignment (noise excluded).
double wcss(const Eigen::MatrixXd& points, const ClusterAssignment& assignment);

}  // namespace colrec
