#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "colrec/types.hpp"

namespace colrec {

/// One (user, item, rating) consumption triple.
struct InteractionRecord {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;  // non-negative implicit consumption strength
};

struct ItemMetadata {
    std::string item_id;
    std::string artist;    // possibly several names, ';'-separated; may be empty
    std::string language;  // may be empty
    std::optional<int> release_year;
};

struct MetadataTable {
    std::unordered_map<std::string, ItemMetadata> by_item;

    const ItemMetadata* find(const std::string& item_id) const {
        auto it = by_item.find(item_id);
        return it == by_item.end() ? nullptr : &it->second;
    }
};

/// Interaction records plus dense user/item indices. Records are merged
/// (duplicate (user, item) pairs summed) and kept in first-appearance order,
/// so writing and re-loading reproduces the dataset exactly.
struct InteractionDataset {
    std::vector<InteractionRecord> records;
    IdIndex users;
    IdIndex items;

    int n_users() const { return users.size(); }
    int n_items() const { return items.size(); }

    /// Records as dense (user_idx, item_idx, rating) triples.
    struct Triple {
        int user;
        int item;
        double rating;
    };
    std::vector<Triple> dense_triples() const;

    /// item indices consumed by each user, grouped on demand.
    std::vector<std::vector<std::pair<int, double>>> by_user() const;
};

struct SyntheticGroundTruth {
    std::map<std::string, int> theme_of_item;
    std::map<std::string, std::set<int>> themes_of_user;
};

struct SyntheticParams {
    int n_users = 0;
    int n_items = 0;
    int n_themes = 0;
    int themes_per_user = 0;
    int interactions_per_user = 0;
    double noise_fraction = 0.0;
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    InteractionDataset interactions;
    MetadataTable metadata;
    SyntheticGroundTruth ground_truth;
};

/// Builds a merged, indexed dataset from raw triples (shared by the loader
/// and the generator so both agree on merge order).
InteractionDataset make_dataset(const std::vector<InteractionRecord>& raw);

// File format: UTF-8 text, one record per line, comma-delimited, lines
// starting with '#' ignored. Ids may not contain commas.
InteractionDataset load_interactions(const std::string& path);
void save_interactions(const InteractionDataset& dataset, const std::string& path);

MetadataTable load_metadata(const std::string& path);
void save_metadata(const MetadataTable& table, const std::vector<std::string>& item_order,
                   const std::string& path);

SyntheticGroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const SyntheticGroundTruth& gt, const std::string& path);

/// Planted-theme corpus for desk-scale verification: items are partitioned
/// evenly across themes, each theme has 5 artists and one language, and each
/// user samples (1 - noise_fraction) of their interactions from their own
/// themes. Deterministic for a fixed seed. Every user's interactions are
/// distinct (user, item) pairs.
SyntheticCorpus generate_synthetic(const SyntheticParams& params);

/// Artist fields may carry several names separated by ';'.
std::vector<std::string> split_artists(const std::string& field);

}  // namespace colrec
