#pragma once

#include <cstdint>
#include <string>

#include "colrec/corpus.hpp"
#include "colrec/types.hpp"

namespace colrec {

struct AlsConfig {
    int dim = 100;
    double regularization = 0.1;
    double alpha = 40.0;  // implicit-confidence scale, c_ui = 1 + alpha * r_ui
    int sweeps = 15;
    std::uint64_t seed = 0;

    void validate() const;
};

/// User and item embeddings sharing one dimension; dot products predict
/// ratings.
struct FactorModel {
    EmbeddingMatrix user_embeddings;
    EmbeddingMatrix item_embeddings;
    int dim = 0;
};

/// Alternating least squares on implicit-feedback data. Preferences are
/// p_ui = 1 for observed pairs and 0 elsewhere; confidences are
/// c_ui = 1 + alpha * r_ui for observed pairs and 1 elsewhere. Each half
/// sweep solves one side's regularized least squares in closed form, so the
/// objective is non-increasing across sweeps. Deterministic for a fixed
/// seed (solves run in index order, single-threaded).
///
/// per_sweep_objective, when given, receives the objective after every full
/// sweep (e.g. for the CLI's progress column).
FactorModel train_als(const InteractionDataset& dataset, const AlsConfig& config,
                      std::vector<double>* per_sweep_objective = nullptr);

/// Full implicit-feedback loss: sum over the entire user x item grid of
/// c_ui * (p_ui - u.i)^2, plus regularization * (|U|_F^2 + |I|_F^2).
/// Unobserved pairs contribute (u.i)^2 each; that part is evaluated through
/// the d x d item Gramian rather than by enumerating the grid.
double als_objective(const FactorModel& model, const InteractionDataset& dataset,
                     const AlsConfig& config);

double predict_rating(const FactorModel& model, const std::string& user_id,
                      const std::string& item_id);

// Embedding file format: magic "CEMB", u32 version = 1, then two sections
// (tag u8: 0 = users, 1 = items), each of u32 dim, u64 row count, and per
// row a u16 id length, the id bytes, and dim little-endian f32 values.
void export_embeddings(const FactorModel& model, const std::string& path);
FactorModel import_embeddings(const std::string& path);

}  // namespace colrec
