#include "colrec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "colrec/errors.hpp"
#include "colrec/rng.hpp"

#include <nlohmann/json.hpp>

namespace colrec {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t p = line.find(delim, start);
        if (p == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& path, size_t line_no) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

bool is_comment_or_blank(const std::string& line) {
    return line.empty() || line[0] == '#';
}

}  // namespace

std::vector<InteractionDataset::Triple> InteractionDataset::dense_triples() const {
    std::vector<Triple> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back({users.at(r.user_id), items.at(r.item_id), r.rating});
    return out;
}

std::vector<std::vector<std::pair<int, double>>> InteractionDataset::by_user() const {
    std::vector<std::vector<std::pair<int, double>>> out(static_cast<size_t>(n_users()));
    for (const auto& r : records)
        out[static_cast<size_t>(users.at(r.user_id))].emplace_back(items.at(r.item_id), r.rating);
    return out;
}

InteractionDataset make_dataset(const std::vector<InteractionRecord>& raw) {
    InteractionDataset ds;
    // Merge duplicates by summing, keeping first-appearance order of pairs.
    std::unordered_map<std::uint64_t, size_t> slot;
    slot.reserve(raw.size());
    for (const auto& r : raw) {
        if (r.user_id.empty() || r.item_id.empty())
            throw ValidationError("empty user or item id");
        if (r.rating < 0.0)
            throw ValidationError("negative rating for (" + r.user_id + "," + r.item_id + ")");
        int u = ds.users.add(r.user_id);
        int i = ds.items.add(r.item_id);
        std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
                            static_cast<std::uint32_t>(i);
        auto it = slot.find(key);
        if (it == slot.end()) {
            slot.emplace(key, ds.records.size());
            ds.records.push_back(r);
        } else {
            ds.records[it->second].rating += r.rating;
        }
    }
    return ds;
}

InteractionDataset load_interactions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open interactions file: " + path);
    std::vector<InteractionRecord> raw;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        auto fields = split(line, ',');
        if (fields.size() != 3)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                             std::to_string(fields.size()));
        if (fields[0].empty() || fields[1].empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty id");
        double rating = parse_double(fields[2], path, line_no);
        if (rating < 0.0)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": negative rating");
        raw.push_back({fields[0], fields[1], rating});
    }
    return make_dataset(raw);
}

void save_interactions(const InteractionDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write interactions file: " + path);
    for (const auto& r : dataset.records)
        out << r.user_id << ',' << r.item_id << ',' << format_double(r.rating) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

MetadataTable load_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metadata file: " + path);
    MetadataTable table;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        auto fields = split(line, ',');
        if (fields.size() != 4)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(fields.size()));
        if (fields[0].empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty item id");
        ItemMetadata md;
        md.item_id = fields[0];
        md.artist = fields[1];
        md.language = fields[2];
        if (!fields[3].empty()) {
            int year = 0;
            auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), year);
            if (ec != std::errc{} || ptr != fields[3].data() + fields[3].size())
                throw ParseError(path + ":" + std::to_string(line_no) + ": bad year '" + fields[3] + "'");
            if (year < 1900 || year > 2100)
                throw ValidationError(path + ":" + std::to_string(line_no) + ": year out of range");
            md.release_year = year;
        }
        // Later rows replace earlier ones.
        table.by_item[md.item_id] = std::move(md);
    }
    return table;
}

void save_metadata(const MetadataTable& table, const std::vector<std::string>& item_order,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metadata file: " + path);
    for (const auto& id : item_order) {
        const ItemMetadata* md = table.find(id);
        if (md == nullptr) continue;
        out << md->item_id << ',' << md->artist << ',' << md->language << ',';
        if (md->release_year) out << *md->release_year;
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

SyntheticGroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ground-truth file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    SyntheticGroundTruth gt;
    for (auto& [k, v] : j.at("theme_of_item").items()) gt.theme_of_item[k] = v.get<int>();
    for (auto& [k, v] : j.at("themes_of_user").items()) {
        std::set<int> themes;
        for (const auto& t : v) themes.insert(t.get<int>());
        gt.themes_of_user[k] = std::move(themes);
    }
    return gt;
}

void save_ground_truth(const SyntheticGroundTruth& gt, const std::string& path) {
    nlohmann::ordered_json j;
    auto& items = j["theme_of_item"];
    for (const auto& [id, theme] : gt.theme_of_item) items[id] = theme;
    auto& users = j["themes_of_user"];
    for (const auto& [id, themes] : gt.themes_of_user) {
        users[id] = std::vector<int>(themes.begin(), themes.end());
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write ground-truth file: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> split_artists(const std::string& field) {
    std::vector<std::string> out;
    for (auto& part : split(field, ';')) {
        size_t b = part.find_first_not_of(' ');
        if (b == std::string::npos) continue;
        size_t e = part.find_last_not_of(' ');
        out.push_back(part.substr(b, e - b + 1));
    }
    return out;
}

SyntheticCorpus generate_synthetic(const SyntheticParams& p) {
    if (p.n_users < 1 || p.n_items < 1) throw ValidationError("need at least 1 user and 1 item");
    if (p.n_themes < 1 || p.n_themes > p.n_items)
        throw ValidationError("n_themes must be in [1, n_items]");
    if (p.themes_per_user < 1 || p.themes_per_user > p.n_themes)
        throw ValidationError("themes_per_user must be in [1, n_themes]");
    if (p.noise_fraction < 0.0 || p.noise_fraction > 1.0)
        throw ValidationError("noise_fraction must be in [0, 1]");
    if (p.interactions_per_user < 1) throw ValidationError("interactions_per_user must be >= 1");

    // Items are sampled without replacement per user, so the pools must be
    // large enough to fill interactions_per_user distinct picks.
    int min_block = p.n_items / p.n_themes;  // smallest theme block size
    if (p.noise_fraction < 1.0 && p.interactions_per_user > p.themes_per_user * min_block)
        throw ValidationError("interactions_per_user exceeds the user's own-theme item pool");
    if (p.interactions_per_user > p.n_items)
        throw ValidationError("interactions_per_user exceeds the catalog size");

    static const std::vector<std::string> kLanguages = {"en", "hi", "es", "ta", "pa",
                                                        "fr", "de", "it", "pt", "bn"};
    constexpr int kArtistsPerTheme = 5;

    SyntheticCorpus corpus;
    Rng rng(p.seed);

    // Theme of item k: contiguous blocks whose sizes differ by at most one.
    auto theme_of = [&](int k) {
        return static_cast<int>((static_cast<std::int64_t>(k) * p.n_themes) / p.n_items);
    };
    std::vector<std::vector<int>> theme_items(static_cast<size_t>(p.n_themes));
    std::vector<std::string> item_ids(static_cast<size_t>(p.n_items));
    for (int k = 0; k < p.n_items; ++k) {
        int t = theme_of(k);
        theme_items[static_cast<size_t>(t)].push_back(k);
        item_ids[static_cast<size_t>(k)] = "item" + std::to_string(k);
        corpus.ground_truth.theme_of_item[item_ids[static_cast<size_t>(k)]] = t;
    }

    // Metadata: 5 artists per theme assigned round-robin, one language per theme.
    std::vector<int> within_theme_pos(static_cast<size_t>(p.n_themes), 0);
    for (int k = 0; k < p.n_items; ++k) {
        int t = theme_of(k);
        int a = within_theme_pos[static_cast<size_t>(t)]++ % kArtistsPerTheme;
        ItemMetadata md;
        md.item_id = item_ids[static_cast<size_t>(k)];
        md.artist = "artist_t" + std::to_string(t) + "_" + std::to_string(a);
        md.language = kLanguages[static_cast<size_t>(t) % kLanguages.size()];
        md.release_year = 1960 + static_cast<int>(rng.uniform_int(60));
        corpus.metadata.by_item[md.item_id] = std::move(md);
    }

    std::vector<InteractionRecord> raw;
    raw.reserve(static_cast<size_t>(p.n_users) * static_cast<size_t>(p.interactions_per_user));
    for (int u = 0; u < p.n_users; ++u) {
        std::string user_id = "user" + std::to_string(u);

        // Draw themes_per_user distinct themes.
        std::vector<int> pool(static_cast<size_t>(p.n_themes));
        for (int t = 0; t < p.n_themes; ++t) pool[static_cast<size_t>(t)] = t;
        std::set<int> own;
        for (int c = 0; c < p.themes_per_user; ++c) {
            size_t pick = static_cast<size_t>(rng.uniform_int(pool.size()));
            own.insert(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        corpus.ground_truth.themes_of_user[user_id] = own;

        std::vector<int> own_items;
        for (int t : own)
            own_items.insert(own_items.end(), theme_items[static_cast<size_t>(t)].begin(),
                             theme_items[static_cast<size_t>(t)].end());

        std::set<int> used;
        size_t own_used = 0;  // own-theme items consumed so far, by either branch
        for (int c = 0; c < p.interactions_per_user; ++c) {
            bool in_theme = rng.uniform01() >= p.noise_fraction;
            // Noise draws can exhaust the own-theme pool; fall back to a
            // global draw rather than spinning.
            if (in_theme && own_used == own_items.size()) in_theme = false;
            int item = -1;
            while (true) {
                if (in_theme) {
                    item = own_items[static_cast<size_t>(rng.uniform_int(own_items.size()))];
                } else {
                    item = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(p.n_items)));
                }
                if (used.insert(item).second) break;
            }
            if (own.count(theme_of(item)) > 0) ++own_used;
            double rating = 1.0 + rng.exponential(0.5);
            raw.push_back({user_id, item_ids[static_cast<size_t>(item)], rating});
        }
    }

    corpus.interactions = make_dataset(raw);
    return corpus;
}

}  // namespace colrec
