#include "colrec/ann.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "colrec/errors.hpp"
#include "colrec/math.hpp"
#include "colrec/rng.hpp"

namespace colrec {

namespace {

constexpr int kLeafSize = 16;

struct TreeBuilder {
    const MatrixXfRM& points;
    Rng& rng;
    std::vector<AnnIndex::Node> nodes;

    int build(std::vector<int>& ids, int begin, int end) {
        const int count = end - begin;
        const int node_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (count <= kLeafSize) {
            nodes[static_cast<size_t>(node_id)].leaf_items.assign(ids.begin() + begin,
                                                                  ids.begin() + end);
            return node_id;
        }

        const int d = static_cast<int>(points.cols());
        Eigen::VectorXf dir(d);
        for (int k = 0; k < d; ++k) dir(k) = static_cast<float>(rng.gaussian());
        const float norm = dir.norm();
        if (norm > 0.0f) dir /= norm;

        std::vector<float> proj(static_cast<size_t>(count));
        for (int k = 0; k < count; ++k)
            proj[static_cast<size_t>(k)] = points.row(ids[static_cast<size_t>(begin + k)]).dot(dir);

        std::vector<float> sorted = proj;
        std::nth_element(sorted.begin(), sorted.begin() + count / 2, sorted.end());
        const float threshold = sorted[static_cast<size_t>(count / 2)];

        // Partition: strictly-less goes left, preserving relative order.
        std::vector<int> left, right;
        left.reserve(static_cast<size_t>(count));
        right.reserve(static_cast<size_t>(count));
        for (int k = 0; k < count; ++k) {
            if (proj[static_cast<size_t>(k)] < threshold)
                left.push_back(ids[static_cast<size_t>(begin + k)]);
            else
                right.push_back(ids[static_cast<size_t>(begin + k)]);
        }
        if (left.empty() || right.empty()) {
            // Degenerate split (duplicate projections): keep as leaf.
            nodes[static_cast<size_t>(node_id)].leaf_items.assign(ids.begin() + begin,
                                                                  ids.begin() + end);
            return node_id;
        }
        std::copy(left.begin(), left.end(), ids.begin() + begin);
        std::copy(right.begin(), right.end(), ids.begin() + begin + static_cast<int>(left.size()));

        const int mid = begin + static_cast<int>(left.size());
        const int l = build(ids, begin, mid);
        const int r = build(ids, mid, end);
        auto& node = nodes[static_cast<size_t>(node_id)];
        node.dir = std::move(dir);
        node.threshold = threshold;
        node.left = l;
        node.right = r;
        return node_id;
    }
};

}  // namespace

AnnIndex::AnnIndex(EmbeddingMatrix items, int n_trees, std::uint64_t seed)
    : items_(std::move(items)) {
    if (items_.rows() < 1) throw ValidationError("ann: need at least one item");
    if (n_trees < 1) throw ValidationError("ann: n_trees must be >= 1");
    if (items_.index.size() != items_.rows())
        throw ValidationError("ann: id count does not match vector count");

    trees_.reserve(static_cast<size_t>(n_trees));
    for (int t = 0; t < n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> ids(static_cast<size_t>(items_.rows()));
        for (int k = 0; k < items_.rows(); ++k) ids[static_cast<size_t>(k)] = k;
        TreeBuilder builder{items_.vectors, rng, {}};
        builder.build(ids, 0, items_.rows());
        trees_.push_back(std::move(builder.nodes));
    }
}

AnnIndex build_index(EmbeddingMatrix items, int n_trees, std::uint64_t seed) {
    return AnnIndex(std::move(items), n_trees, seed);
}

namespace {

RecommendationList rank_candidates(const EmbeddingMatrix& items,
                                   const Eigen::Ref<const Eigen::VectorXf>& query,
                                   const std::vector<int>& candidates, int n,
                                   const std::unordered_set<std::string>& exclude) {
    struct Scored {
        double score;
        int item;
    };
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (int c : candidates) {
        const std::string& id = items.index.id_of(c);
        if (exclude.count(id) > 0) continue;
        scored.push_back({dot_accum(items.vectors.row(c).data(), query.data(),
                                    static_cast<int>(query.size())),
                          c});
    }
    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return items.index.id_of(a.item) < items.index.id_of(b.item);
    });

    RecommendationList out;
    const size_t take = std::min(static_cast<size_t>(n), scored.size());
    out.entries.reserve(take);
    for (size_t k = 0; k < take; ++k)
        out.entries.push_back(
            {items.index.id_of(scored[k].item), scored[k].score, static_cast<int>(k) + 1});
    return out;
}

}  // namespace

RecommendationList AnnIndex::top_n(const Eigen::Ref<const Eigen::VectorXf>& query, int n,
                                   const std::unordered_set<std::string>& exclude,
                                   int search_k) const {
    if (query.size() != items_.dim()) throw ValidationError("ann: query dimension mismatch");
    if (n < 1) throw ValidationError("ann: n must be >= 1");
    if (search_k < 0) search_k = n_trees() * n * 2;

    // Best-first traversal across all trees: priority is the smallest
    // split margin seen along the path, so near-boundary branches are
    // explored before far ones.
    using Item = std::tuple<float, int, int>;  // (path margin, tree, node)
    auto cmp = [](const Item& a, const Item& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
        return std::get<2>(a) > std::get<2>(b);
    };
    std::priority_queue<Item, std::vector<Item>, decltype(cmp)> frontier(cmp);
    for (int t = 0; t < n_trees(); ++t)
        frontier.emplace(std::numeric_limits<float>::infinity(), t, 0);

    std::vector<char> seen(static_cast<size_t>(items_.rows()), 0);
    std::vector<int> candidates;
    candidates.reserve(static_cast<size_t>(std::min(search_k, items_.rows())));

    while (!frontier.empty() && static_cast<int>(candidates.size()) < search_k) {
        auto [priority, tree, node_id] = frontier.top();
        frontier.pop();
        const Node& node = trees_[static_cast<size_t>(tree)][static_cast<size_t>(node_id)];
        if (node.left < 0) {
            for (int item : node.leaf_items) {
                if (!seen[static_cast<size_t>(item)]) {
                    seen[static_cast<size_t>(item)] = 1;
                    candidates.push_back(item);
                }
            }
            continue;
        }
        const float margin = query.dot(node.dir) - node.threshold;
        const int near = margin < 0.0f ? node.left : node.right;
        const int far = margin < 0.0f ? node.right : node.left;
        frontier.emplace(priority, tree, near);
        frontier.emplace(std::min(priority, std::abs(margin)), tree, far);
    }

    RecommendationList out = rank_candidates(items_, query, candidates, n, exclude);
    return out;
}

RecommendationList exact_top_n(const EmbeddingMatrix& items,
                               const Eigen::Ref<const Eigen::VectorXf>& query, int n,
                               const std::unordered_set<std::string>& exclude) {
    if (query.size() != items.dim()) throw ValidationError("ann: query dimension mismatch");
    if (n < 1) throw ValidationError("ann: n must be >= 1");
    std::vector<int> all(static_cast<size_t>(items.rows()));
    for (int k = 0; k < items.rows(); ++k) all[static_cast<size_t>(k)] = k;
    return rank_candidates(items, query, all, n, exclude);
}

}  // namespace colrec
