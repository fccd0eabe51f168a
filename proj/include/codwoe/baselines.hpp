#pragma once

#include <span>

#include "codwoe/checkpoint.hpp"
#include "codwoe/dataset.hpp"
#include "codwoe/layers.hpp"
#include "codwoe/optim.hpp"
#include "codwoe/tokenizer.hpp"

namespace codwoe {

struct TrainConfig {
    size_t max_epochs = 100;
    size_t patience = 5;                // epochs
    double min_rel_improvement = 0.001; // 0.1%
    size_t batch_size = 8;
    size_t grad_accum = 1;
    double dropout = 0.1;
    double label_smoothing = 0.1; // defmod only
    OptimizerConfig optimizer;
    size_t warmup_steps = 0;
    uint64_t seed = 0;

    // d_model echoes the task's embedding size; heads and layers are
    // placeholders meant to be tuned through the hyperopt module.
    size_t d_model = 256;
    size_t heads = 4;
    size_t layers = 2;
    size_t d_ff = 1024;

    void validate() const;
    static TrainConfig from_json(const nlohmann::json& doc);
    nlohmann::ordered_json to_json() const;
};

// Gloss encoder: <bos, w_1..w_n, eos> through a Transformer encoder stack,
// hidden states summed over time, then p = W_p(ReLU(sum)).
struct RevdictModel {
    size_t d_model = 0, heads = 0, n_layers = 0, d_ff = 0, target_dim = 0;
    double dropout_rate = 0.0;
    Tensor tok_emb; // [V, d_model]
    std::vector<EncoderLayerParams> encoder;
    Tensor w_p; // [d_model, target_dim], bias-free projection
    SubwordVocab vocab;

    NamedParams named_params() const;
};

RevdictModel make_revdict_model(const SubwordVocab& vocab, size_t target_dim,
                                const TrainConfig& cfg, SplitMix64& rng);
// content_ids: the encoded gloss without specials; bos/eos are added here.
Tensor revdict_forward(const RevdictModel& model, const std::vector<int>& content_ids,
                       SplitMix64* dropout_rng);
std::vector<double> predict_revdict(const RevdictModel& model,
                                    const std::vector<int>& content_ids);

// Causal Transformer over <d_i, bos, w_1..w_m> predicting <bos, w_1..w_m, eos>.
// The definiendum vector enters through a learned affine map when its
// dimension differs from d_model, unchanged otherwise.
struct DefmodModel {
    size_t d_model = 0, heads = 0, n_layers = 0, d_ff = 0, emb_dim = 0;
    double dropout_rate = 0.0;
    double label_smoothing = 0.0;
    Tensor tok_emb;
    LinearParams input_proj; // weight null when emb_dim == d_model
    std::vector<EncoderLayerParams> encoder;
    LinearParams out_proj; // [d_model, V]
    SubwordVocab vocab;

    NamedParams named_params() const;
};

DefmodModel make_defmod_model(const SubwordVocab& vocab, size_t emb_dim, const TrainConfig& cfg,
                              SplitMix64& rng);
// Rows of the result align with <d_i, emitted...>: row k is the distribution
// over the token following emitted[0..k-1].
Tensor defmod_logits(const DefmodModel& model, std::span<const double> def_vec,
                     const std::vector<int>& emitted, SplitMix64* dropout_rng);

struct BeamTrace {
    // Ranked normalized scores of the surviving beams, one entry per step.
    std::vector<std::vector<double>> step_scores;
};

// Length-normalized beam search; stops when every beam has produced eos or
// max_len is hit. Returns the emitted sequence (bos ... eos) of the best
// finished beam, or the best unfinished one if none finished.
std::vector<int> generate_defmod(const DefmodModel& model, std::span<const double> def_vec,
                                 size_t beam_width, size_t max_len, BeamTrace* trace = nullptr);

struct TrainResult {
    Checkpoint checkpoint; // parameters at the best validation loss
    size_t epochs_run = 0;
    size_t steps_run = 0;
    double best_val_loss = 0.0;
    std::vector<double> val_losses;
    bool early_stopped = false;
};

TrainResult train_revdict(const Dataset& train, const Dataset& valid, ArchTag arch,
                          const SubwordVocab& vocab, const TrainConfig& cfg);
TrainResult train_defmod(const Dataset& train, const Dataset& valid, ArchTag arch,
                         const SubwordVocab& vocab, const TrainConfig& cfg);

RevdictModel revdict_from_checkpoint(const Checkpoint& ckpt);
DefmodModel defmod_from_checkpoint(const Checkpoint& ckpt);

// Mean per-item MSE of the frozen model over a dataset.
double revdict_dataset_mse(const RevdictModel& model, const Dataset& ds, ArchTag arch);
// Teacher-forced next-token accuracy; the trivial d_i -> bos position is
// excluded from the count (it stays in the training loss).
double defmod_token_accuracy(const DefmodModel& model, const Dataset& ds, ArchTag arch);

} // namespace codwoe
