#pragma once

#include <string>
#include <vector>

#include "codwoe/checkpoint.hpp"
#include "codwoe/layers.hpp"
#include "codwoe/optim.hpp"

namespace codwoe {

struct CharAeConfig {
    size_t hidden = 64;   // representation dimension
    size_t char_emb = 32;
    bool share_embeddings = true; // one character matrix for encoder and decoder
    bool affine_init = false;     // map the representation into (h0, c0) through
                                  // learned affine layers instead of using it
                                  // as h0 directly
    // The tuned hyperparameters: lr, weight decay, dropout, beta1, beta2,
    // batch size, epoch count and the embedding-sharing flag.
    size_t max_epochs = 80;
    size_t batch_size = 64;
    double dropout = 0.0;
    OptimizerConfig optimizer{3e-3, 0.01, 0.9, 0.999, 1e-8};
    uint64_t seed = 0;
    // Stop as soon as exact-match reconstruction on the training words
    // reaches this level; 1.1 disables the shortcut.
    double stop_at_accuracy = 1.1;

    void validate() const;
    static CharAeConfig from_json(const nlohmann::json& doc);
    nlohmann::ordered_json to_json() const;
};

// LSTM autoencoder over character sequences. A word embeds as the sum of the
// encoder's output hidden states; the decoder starts from that sum and is
// trained with teacher forcing to reconstruct the characters.
struct CharAutoencoder {
    CharAeConfig cfg;
    std::vector<std::string> alphabet; // code points; ids offset by 4 specials
    Tensor enc_emb;                    // [V, char_emb]
    Tensor dec_emb;                    // == enc_emb when shared
    LstmParams encoder;
    LstmParams decoder;
    LinearParams out_proj; // [hidden, V]
    LinearParams init_h;   // affine_init only
    LinearParams init_c;   // affine_init only

    size_t vocab_size() const { return 4 + alphabet.size(); }
    int char_id(const std::string& cp) const; // unk when unseen
    NamedParams named_params() const;
};

struct CharAeTrainResult {
    CharAutoencoder model;
    std::vector<double> epoch_losses;
    std::vector<double> epoch_accuracies; // exact-match on the training words
    size_t epochs_run = 0;
};

CharAeTrainResult train_char_ae(const std::vector<std::string>& words, const CharAeConfig& cfg);

// Sum over time of encoder output hidden states; errors on the empty word.
std::vector<double> embed_word(const CharAutoencoder& model, const std::string& word);

// Greedy decode from embed_word(word).
std::string reconstruct(const CharAutoencoder& model, const std::string& word);

// Fraction of words whose reconstruction matches exactly.
double reconstruction_accuracy(const CharAutoencoder& model,
                               const std::vector<std::string>& words);

Checkpoint char_ae_to_checkpoint(const CharAutoencoder& model);
CharAutoencoder char_ae_from_checkpoint(const Checkpoint& ckpt);

} // namespace codwoe
