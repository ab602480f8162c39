#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "colrec/types.hpp"

namespace colrec {

/// Per-user ranked items with predicted scores and dense 1-based ranks.
struct RecommendationList {
    struct Entry {
        std::string item_id;
        double score;
        int rank;  // 1-based, no gaps
    };
    std::string user_id;
    std::vector<Entry> entries;
};

/// Forest of random-projection split trees over item embeddings. Scores are
/// raw dot products (they are the predicted ratings), so no normalization
/// happens at retrieval time. Build once, query concurrently.
class AnnIndex {
public:
    struct Node {
        // leaf when left < 0; internal nodes split on dot(dir, x) < threshold
        int left = -1;
        int right = -1;
        Eigen::VectorXf dir;
        float threshold = 0.0f;
        std::vector<int> leaf_items;
    };

    AnnIndex(EmbeddingMatrix items, int n_trees, std::uint64_t seed);

    /// Top n by descending dot product with the query, ties broken by
    /// ascending item id, excluded ids filtered out. search_k < 0 uses the
    /// default candidate budget n_trees * n * 2; a budget >= the catalog
    /// size makes the result exact.
    RecommendationList top_n(const Eigen::Ref<const Eigen::VectorXf>& query, int n,
                             const std::unordered_set<std::string>& exclude = {},
                             int search_k = -1) const;

    int size() const { return items_.rows(); }
    int dim() const { return items_.dim(); }
    int n_trees() const { return static_cast<int>(trees_.size()); }
    const std::vector<std::vector<Node>>& trees() const { return trees_; }
    const EmbeddingMatrix& items() const { return items_; }

private:
    EmbeddingMatrix items_;
    std::vector<std::vector<Node>> trees_;
};

AnnIndex build_index(EmbeddingMatrix items, int n_trees, std::uint64_t seed);

/// Exact full-scan top n with the same ordering contract as AnnIndex::top_n.
RecommendationList exact_top_n(const EmbeddingMatrix& items,
                               const Eigen::Ref<const Eigen::VectorXf>& query, int n,
                               const std::unordered_set<std::string>& exclude = {});

}  // namespace colrec
