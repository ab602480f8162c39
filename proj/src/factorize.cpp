#include "colrec/factorize.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "colrec/errors.hpp"
#include "colrec/math.hpp"
#include "colrec/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "embedding file I/O assumes a little-endian host");

namespace colrec {

void AlsConfig::validate() const {
    if (dim < 1) throw ValidationError("als: dim must be >= 1");
    if (sweeps < 1) throw ValidationError("als: sweeps must be >= 1");
    if (regularization <= 0.0) throw ValidationError("als: regularization must be > 0");
    if (alpha < 0.0) throw ValidationError("als: alpha must be >= 0");
}

namespace {

// Solves one side of the alternation: for every entity on the active side,
//   x = (G + sum_obs (c-1) y y^T + reg I)^-1  (sum_obs c y)
// where G is the Gramian of the fixed side. The system is SPD for reg > 0.
void solve_side(MatrixXfRM& active, const MatrixXfRM& fixed,
                const std::vector<std::vector<std::pair<int, double>>>& observed,
                double reg, double alpha) {
    const int d = static_cast<int>(active.cols());
    const Eigen::MatrixXd fixed_d = fixed.cast<double>();
    const Eigen::MatrixXd gram = fixed_d.transpose() * fixed_d;

    Eigen::MatrixXd a(d, d);
    Eigen::VectorXd b(d);
    for (int e = 0; e < active.rows(); ++e) {
        a = gram;
        a.diagonal().array() += reg;
        b.setZero();
        for (const auto& [other, rating] : observed[static_cast<size_t>(e)]) {
            const double c = 1.0 + alpha * rating;
            a.selfadjointView<Eigen::Lower>().rankUpdate(fixed_d.row(other).transpose(), c - 1.0);
            b += c * fixed_d.row(other).transpose();
        }
        Eigen::VectorXd x = a.selfadjointView<Eigen::Lower>().ldlt().solve(b);
        active.row(e) = x.cast<float>().transpose();
    }
}

std::vector<std::vector<std::pair<int, double>>> group_by_item(const InteractionDataset& ds) {
    std::vector<std::vector<std::pair<int, double>>> out(static_cast<size_t>(ds.n_items()));
    for (const auto& t : ds.dense_triples())
        out[static_cast<size_t>(t.item)].emplace_back(t.user, t.rating);
    return out;
}

void check_model_matches(const FactorModel& model, const InteractionDataset& ds) {
    if (model.user_embeddings.rows() != ds.n_users() ||
        model.item_embeddings.rows() != ds.n_items())
        throw ValidationError("model entity counts do not match the dataset");
    if (model.user_embeddings.dim() != model.dim || model.item_embeddings.dim() != model.dim)
        throw ValidationError("model dimension mismatch");
}

}  // namespace

FactorModel train_als(const InteractionDataset& dataset, const AlsConfig& config,
                      std::vector<double>* per_sweep_objective) {
    config.validate();
    if (dataset.records.empty()) throw ValidationError("als: dataset is empty");

    FactorModel model;
    model.dim = config.dim;
    for (const auto& id : dataset.users.ids()) model.user_embeddings.index.add(id);
    for (const auto& id : dataset.items.ids()) model.item_embeddings.index.add(id);

    const double scale = 1.0 / std::sqrt(static_cast<double>(config.dim));
    Rng rng(config.seed);
    auto init = [&](MatrixXfRM& m, int rows) {
        m.resize(rows, config.dim);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < config.dim; ++c)
                m(r, c) = static_cast<float>(rng.uniform(-scale, scale));
    };
    init(model.user_embeddings.vectors, dataset.n_users());
    init(model.item_embeddings.vectors, dataset.n_items());

    const auto by_user = dataset.by_user();
    const auto by_item = group_by_item(dataset);

    for (int sweep = 0; sweep < config.sweeps; ++sweep) {
        solve_side(model.user_embeddings.vectors, model.item_embeddings.vectors, by_user,
                   config.regularization, config.alpha);
        solve_side(model.item_embeddings.vectors, model.user_embeddings.vectors, by_item,
                   config.regularization, config.alpha);
        if (per_sweep_objective != nullptr)
            per_sweep_objective->push_back(als_objective(model, dataset, config));
    }
    return model;
}

double als_objective(const FactorModel& model, const InteractionDataset& dataset,
                     const AlsConfig& config) {
    check_model_matches(model, dataset);

    const Eigen::MatrixXd users = model.user_embeddings.vectors.cast<double>();
    const Eigen::MatrixXd items = model.item_embeddings.vectors.cast<double>();

    // Background term: every pair contributes (u.i)^2 at c = 1, p = 0.
    const Eigen::MatrixXd item_gram = items.transpose() * items;
    double obj = ((users * item_gram).cwiseProduct(users)).sum();

    // Observed pairs swap their background contribution for c (1 - u.i)^2.
    for (const auto& t : dataset.dense_triples()) {
        const double s = dot_accum(model.user_embeddings.vectors.row(t.user).data(),
                                   model.item_embeddings.vectors.row(t.item).data(), model.dim);
        const double c = 1.0 + config.alpha * t.rating;
        obj += c * (1.0 - s) * (1.0 - s) - s * s;
    }

    obj += config.regularization * (users.squaredNorm() + items.squaredNorm());
    return obj;
}

double predict_rating(const FactorModel& model, const std::string& user_id,
                      const std::string& item_id) {
    const int u = model.user_embeddings.index.at(user_id);
    const int i = model.item_embeddings.index.at(item_id);
    return dot_accum(model.user_embeddings.vectors.row(u).data(),
                     model.item_embeddings.vectors.row(i).data(), model.dim);
}

namespace {

constexpr char kMagic[4] = {'C', 'E', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("embedding file truncated while reading " + what);
    return v;
}

void write_section(std::ostream& out, std::uint8_t tag, const EmbeddingMatrix& m) {
    write_pod<std::uint8_t>(out, tag);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    for (int r = 0; r < m.rows(); ++r) {
        const std::string& id = m.index.id_of(r);
        if (id.size() > 0xffff) throw ValidationError("id longer than 65535 bytes: " + id);
        write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        out.write(reinterpret_cast<const char*>(m.vectors.row(r).data()),
                  static_cast<std::streamsize>(sizeof(float)) * m.dim());
    }
}

EmbeddingMatrix read_section(std::istream& in, std::uint8_t expected_tag) {
    const auto tag = read_pod<std::uint8_t>(in, "section tag");
    if (tag != expected_tag)
        throw FormatError("unexpected section tag " + std::to_string(tag) + ", expected " +
                          std::to_string(expected_tag));
    const auto dim = read_pod<std::uint32_t>(in, "dim");
    const auto rows = read_pod<std::uint64_t>(in, "row count");
    if (dim == 0) throw FormatError("embedding file declares dim = 0");

    EmbeddingMatrix m;
    m.vectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    std::string id;
    for (std::uint64_t r = 0; r < rows; ++r) {
        const auto len = read_pod<std::uint16_t>(in, "id length");
        id.resize(len);
        in.read(id.data(), len);
        if (!in) throw FormatError("embedding file truncated while reading id");
        if (m.index.contains(id)) throw FormatError("duplicate id in embedding file: " + id);
        m.index.add(id);
        in.read(reinterpret_cast<char*>(m.vectors.row(static_cast<Eigen::Index>(r)).data()),
                static_cast<std::streamsize>(sizeof(float)) * dim);
        if (!in) throw FormatError("embedding file truncated while reading vector for " + id);
    }
    return m;
}

}  // namespace

void export_embeddings(const FactorModel& model, const std::string& path) {
    if (model.user_embeddings.dim() != model.dim || model.item_embeddings.dim() != model.dim)
        throw ValidationError("model dimension mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embedding file: " + path);
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_section(out, 0, model.user_embeddings);
    write_section(out, 1, model.item_embeddings);
    if (!out) throw IoError("write failed: " + path);
}

FactorModel import_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("not an embedding file (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion)
        throw FormatError("unsupported embedding file version " + std::to_string(version));

    FactorModel model;
    model.user_embeddings = read_section(in, 0);
    model.item_embeddings = read_section(in, 1);
    if (model.user_embeddings.dim() != model.item_embeddings.dim())
        throw FormatError("user and item sections disagree on dim");
    model.dim = model.user_embeddings.dim();
    return model;
}

}  // namespace colrec
