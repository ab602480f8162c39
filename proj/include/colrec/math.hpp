#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace colrec {

/// Dot product accumulated left-to-right in double. Retrieval scores and
/// predicted ratings all flow through this one kernel so that every code
/// path (index, exact scan, tests) produces bit-identical values.
inline double dot_accum(const float* a, const float* b, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
    return s;
}

template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                         const Eigen::MatrixBase<DerivedB>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        double x = static_cast<double>(a(k));
        double y = static_cast<double>(b(k));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Full n x n matrix of squared Euclidean distances between rows.
/// Computed per pair as |x_i - x_j|^2 (no Gram expansion), which keeps it
/// accurate for near-duplicate points.
template <typename Derived>
Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixBase<Derived>& pts) {
    const Eigen::MatrixXd x = pts.template cast<double>();
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d2(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = (x.row(i) - x.row(j)).squaredNorm();
            d2(i, j) = v;
            d2(j, i) = v;
        }
    }
    return d2;
}

template <typename Derived>
Eigen::MatrixXd pairwise_dists(const Eigen::MatrixBase<Derived>& pts) {
    return pairwise_sq_dists(pts).cwiseSqrt();
}

}  // namespace colrec
