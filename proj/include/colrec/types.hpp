#pragma once

#include <Eigen/Dense>

#include <string>
#include <unordered_map>
#include <vector>

#include "colrec/errors.hpp"

namespace colrec {

// Embedding rows are stored row-major so a row view is contiguous; that is
// also the layout of the on-disk embedding format.
using MatrixXfRM =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bijection between opaque string ids and dense 0-based indices,
/// in first-appearance order.
class IdIndex {
public:
    int add(const std::string& id) {
        auto it = pos_.find(id);
        if (it != pos_.end()) return it->second;
        int k = static_cast<int>(ids_.size());
        ids_.push_back(id);
        pos_.emplace(id, k);
        return k;
    }

    bool contains(const std::string& id) const { return pos_.count(id) > 0; }

    int at(const std::string& id) const {
        auto it = pos_.find(id);
        if (it == pos_.end()) throw LookupError("unknown id: " + id);
        return it->second;
    }

    const std::string& id_of(int k) const { return ids_.at(static_cast<size_t>(k)); }
    int size() const { return static_cast<int>(ids_.size()); }
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, int> pos_;
};

/// Ordered set of ids with fixed-width dense vectors, one row per id.
struct EmbeddingMatrix {
    IdIndex index;
    MatrixXfRM vectors;  // index.size() x dim

    int dim() const { return static_cast<int>(vectors.cols()); }
    int rows() const { return static_cast<int>(vectors.rows()); }

    Eigen::Ref<const Eigen::RowVectorXf> row_of(const std::string& id) const {
        return vectors.row(index.at(id));
    }
};

}  // namespace colrec
