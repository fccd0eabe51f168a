#include "codwoe/char_ae.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "codwoe/error.hpp"
#include "codwoe/text.hpp"
#include "codwoe/tokenizer.hpp"

namespace codwoe {

void CharAeConfig::validate() const {
    if (hidden == 0 || char_emb == 0) throw Error("char-ae config: dimensions must be positive");
    if (max_epochs == 0) throw Error("char-ae config: max_epochs must be >= 1");
    if (batch_size == 0) throw Error("char-ae config: batch size must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw Error("char-ae config: dropout must be in [0,1)");
    optimizer.validate();
}

CharAeConfig CharAeConfig::from_json(const nlohmann::json& doc) {
    CharAeConfig cfg;
    auto get = [&](const char* key, auto& field) {
        if (doc.contains(key)) field = doc[key].template get<std::decay_t<decltype(field)>>();
    };
    get("hidden", cfg.hidden);
    get("char_emb", cfg.char_emb);
    get("share_embeddings", cfg.share_embeddings);
    get("affine_init", cfg.affine_init);
    get("max_epochs", cfg.max_epochs);
    get("batch_size", cfg.batch_size);
    get("dropout", cfg.dropout);
    get("seed", cfg.seed);
    get("stop_at_accuracy", cfg.stop_at_accuracy);
    get("lr", cfg.optimizer.lr);
    get("weight_decay", cfg.optimizer.weight_decay);
    get("beta1", cfg.optimizer.beta1);
    get("beta2", cfg.optimizer.beta2);
    get("adam_eps", cfg.optimizer.eps);
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json CharAeConfig::to_json() const {
    return {{"hidden", hidden},
            {"char_emb", char_emb},
            {"share_embeddings", share_embeddings},
            {"affine_init", affine_init},
            {"max_epochs", max_epochs},
            {"batch_size", batch_size},
            {"dropout", dropout},
            {"seed", seed},
            {"stop_at_accuracy", stop_at_accuracy},
            {"lr", optimizer.lr},
            {"weight_decay", optimizer.weight_decay},
            {"beta1", optimizer.beta1},
            {"beta2", optimizer.beta2},
            {"adam_eps", optimizer.eps}};
}

int CharAutoencoder::char_id(const std::string& cp) const {
    auto it = std::lower_bound(alphabet.begin(), alphabet.end(), cp);
    if (it == alphabet.end() || *it != cp) return SubwordVocab::kUnk;
    return static_cast<int>(4 + (it - alphabet.begin()));
}

NamedParams CharAutoencoder::named_params() const {
    NamedParams out;
    out.emplace_back("enc_emb", enc_emb);
    if (!cfg.share_embeddings) out.emplace_back("dec_emb", dec_emb);
    collect_params(out, "encoder", encoder);
    collect_params(out, "decoder", decoder);
    collect_params(out, "out_proj", out_proj);
    if (cfg.affine_init) {
        collect_params(out, "init_h", init_h);
        collect_params(out, "init_c", init_c);
    }
    return out;
}

namespace {

CharAutoencoder build_model(std::vector<std::string> alphabet, const CharAeConfig& cfg,
                            SplitMix64& rng) {
    CharAutoencoder m;
    m.cfg = cfg;
    m.alphabet = std::move(alphabet);
    const size_t v = m.vocab_size();
    m.enc_emb = make_tensor(v, cfg.char_emb, true);
    for (double& w : m.enc_emb->value) w = 0.1 * rng.normal();
    if (cfg.share_embeddings) {
        m.dec_emb = m.enc_emb;
    } else {
        m.dec_emb = make_tensor(v, cfg.char_emb, true);
        for (double& w : m.dec_emb->value) w = 0.1 * rng.normal();
    }
    m.encoder = make_lstm(cfg.char_emb, cfg.hidden, rng);
    m.decoder = make_lstm(cfg.char_emb, cfg.hidden, rng);
    m.out_proj = make_linear(cfg.hidden, v, true, rng);
    if (cfg.affine_init) {
        m.init_h = make_linear(cfg.hidden, cfg.hidden, true, rng);
        m.init_c = make_linear(cfg.hidden, cfg.hidden, true, rng);
    }
    return m;
}

std::vector<int> word_ids(const CharAutoencoder& m, const std::string& word) {
    std::vector<int> ids;
    for (const std::string& cp : utf8_chars(word)) ids.push_back(m.char_id(cp));
    return ids;
}

// Batched encoder over words of equal length; returns the summed hidden
// states [B, H].
Tensor encode_batch(const CharAutoencoder& m, const std::vector<std::vector<int>>& batch_ids,
                    SplitMix64* drop_rng) {
    const size_t bsz = batch_ids.size();
    const size_t len = batch_ids[0].size();
    LstmState state{make_tensor(bsz, m.cfg.hidden), make_tensor(bsz, m.cfg.hidden)};
    Tensor repr;
    for (size_t t = 0; t < len; ++t) {
        std::vector<int> ids_t(bsz);
        for (size_t r = 0; r < bsz; ++r) ids_t[r] = batch_ids[r][t];
        Tensor x = embedding_lookup(m.enc_emb, ids_t);
        if (drop_rng && m.cfg.dropout > 0.0) x = dropout(x, m.cfg.dropout, *drop_rng);
        state = lstm_cell(m.encoder, x, state);
        repr = repr ? add(repr, state.h) : state.h;
    }
    return repr;
}

LstmState decoder_start(const CharAutoencoder& m, const Tensor& repr) {
    if (m.cfg.affine_init) return {linear(m.init_h, repr), linear(m.init_c, repr)};
    return {repr, make_tensor(repr->rows(), repr->cols())};
}

// Teacher-forced loss for one equal-length batch: inputs <bos, c_1..c_k>,
// targets <c_1..c_k, eos>, mean cross entropy per position.
Tensor batch_loss(const CharAutoencoder& m, const std::vector<std::vector<int>>& batch_ids,
                  SplitMix64* drop_rng) {
    const size_t bsz = batch_ids.size();
    const size_t len = batch_ids[0].size();
    Tensor repr = encode_batch(m, batch_ids, drop_rng);
    LstmState state = decoder_start(m, repr);

    Tensor loss;
    std::vector<int> in_ids(bsz, SubwordVocab::kBos);
    for (size_t t = 0; t <= len; ++t) {
        Tensor x = embedding_lookup(m.dec_emb, in_ids);
        if (drop_rng && m.cfg.dropout > 0.0) x = dropout(x, m.cfg.dropout, *drop_rng);
        state = lstm_cell(m.decoder, x, state);
        Tensor logits = linear(m.out_proj, state.h);
        std::vector<int> targets(bsz);
        for (size_t r = 0; r < bsz; ++r)
            targets[r] = t < len ? batch_ids[r][t] : SubwordVocab::kEos;
        Tensor step_loss = cross_entropy(logits, targets);
        loss = loss ? add(loss, step_loss) : step_loss;
        in_ids = targets;
    }
    return scale(loss, 1.0 / static_cast<double>(len + 1));
}

size_t decode_budget(size_t word_len) { return 2 * word_len + 4; }

// Batched greedy decode for equal-length words. Per-row arithmetic is
// identical to the single-word path, so results agree exactly.
std::vector<std::string> greedy_batch(const CharAutoencoder& m,
                                      const std::vector<std::vector<int>>& batch_ids) {
    const size_t bsz = batch_ids.size();
    const size_t len = batch_ids[0].size();
    Tensor repr = encode_batch(m, batch_ids, nullptr);
    LstmState state = decoder_start(m, repr);

    std::vector<std::string> out(bsz);
    std::vector<char> done(bsz, 0);
    std::vector<int> in_ids(bsz, SubwordVocab::kBos);
    const size_t budget = decode_budget(len);
    for (size_t step = 0; step < budget; ++step) {
        Tensor x = embedding_lookup(m.dec_emb, in_ids);
        state = lstm_cell(m.decoder, x, state);
        Tensor logits = linear(m.out_proj, state.h);
        bool all_done = true;
        for (size_t r = 0; r < bsz; ++r) {
            if (done[r]) continue;
            const double* row = logits->row_ptr(r);
            size_t argmax = 0;
            for (size_t j = 1; j < m.vocab_size(); ++j)
                if (row[j] > row[argmax]) argmax = j;
            in_ids[r] = static_cast<int>(argmax);
            if (argmax == SubwordVocab::kEos) {
                done[r] = 1;
            } else {
                if (argmax >= 4) out[r] += m.alphabet[argmax - 4];
                all_done = false;
            }
        }
        if (all_done) break;
    }
    return out;
}

} // namespace

CharAeTrainResult train_char_ae(const std::vector<std::string>& words, const CharAeConfig& cfg) {
    cfg.validate();
    if (words.empty()) throw Error("train_char_ae: empty word list");
    for (const auto& w : words)
        if (w.empty()) throw Error("train_char_ae: empty word in list");

    std::set<std::string> alpha_set;
    for (const auto& w : words)
        for (const auto& cp : utf8_chars(w)) alpha_set.insert(cp);

    SplitMix64 rng(cfg.seed);
    CharAeTrainResult result;
    result.model = build_model({alpha_set.begin(), alpha_set.end()}, cfg, rng);
    CharAutoencoder& m = result.model;

    std::vector<std::vector<int>> all_ids;
    all_ids.reserve(words.size());
    for (const auto& w : words) all_ids.push_back(word_ids(m, w));

    NamedParams named = m.named_params();
    std::vector<Tensor> params;
    for (auto& [name, t] : named) params.push_back(t);
    AdamW opt(params, cfg.optimizer);

    std::vector<size_t> order(words.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        // Walk the shuffled words, flushing same-length buffers as batches.
        std::map<size_t, std::vector<std::vector<int>>> pending;
        double epoch_loss = 0.0;
        size_t seen = 0;
        auto flush = [&](std::vector<std::vector<int>>& batch) {
            opt.zero_grad();
            Tensor loss = batch_loss(m, batch, &rng);
            backward(loss);
            opt.step(cfg.optimizer.lr);
            epoch_loss += loss->value[0] * static_cast<double>(batch.size());
            seen += batch.size();
            batch.clear();
        };
        for (size_t idx : order) {
            auto& bucket = pending[all_ids[idx].size()];
            bucket.push_back(all_ids[idx]);
            if (bucket.size() >= cfg.batch_size) flush(bucket);
        }
        for (auto& [len, bucket] : pending)
            if (!bucket.empty()) flush(bucket);

        result.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
        result.epoch_accuracies.push_back(reconstruction_accuracy(m, words));
        result.epochs_run = epoch;
        if (result.epoch_accuracies.back() >= cfg.stop_at_accuracy) break;
    }
    return result;
}

std::vector<double> embed_word(const CharAutoencoder& model, const std::string& word) {
    if (word.empty()) throw Error("embed_word: empty word");
    Tensor repr = encode_batch(model, {word_ids(model, word)}, nullptr);
    return repr->value;
}

std::string reconstruct(const CharAutoencoder& model, const std::string& word) {
    if (word.empty()) throw Error("reconstruct: empty word");
    return greedy_batch(model, {word_ids(model, word)})[0];
}

double reconstruction_accuracy(const CharAutoencoder& model,
                               const std::vector<std::string>& words) {
    if (words.empty()) return 0.0;
    // Bucket by length; exact match against the original strings.
    std::map<size_t, std::vector<size_t>> buckets;
    std::vector<std::vector<int>> all_ids(words.size());
    for (size_t i = 0; i < words.size(); ++i) {
        all_ids[i] = word_ids(model, words[i]);
        buckets[all_ids[i].size()].push_back(i);
    }
    size_t correct = 0;
    for (const auto& [len, indices] : buckets) {
        for (size_t begin = 0; begin < indices.size(); begin += model.cfg.batch_size) {
            size_t end = std::min(indices.size(), begin + model.cfg.batch_size);
            std::vector<std::vector<int>> batch;
            for (size_t k = begin; k < end; ++k) batch.push_back(all_ids[indices[k]]);
            auto decoded = greedy_batch(model, batch);
            for (size_t k = begin; k < end; ++k)
                if (decoded[k - begin] == words[indices[k]]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(words.size());
}

Checkpoint char_ae_to_checkpoint(const CharAutoencoder& model) {
    nlohmann::ordered_json header;
    header["kind"] = "char_ae";
    header["config"] = model.cfg.to_json();
    header["alphabet"] = model.alphabet;
    return checkpoint_from_params(std::move(header), model.named_params());
}

CharAutoencoder char_ae_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.header.at("kind") != "char_ae") throw Error("checkpoint is not a char-ae model");
    CharAeConfig cfg = CharAeConfig::from_json(ckpt.header.at("config"));
    std::vector<std::string> alphabet;
    for (const auto& s : ckpt.header.at("alphabet")) alphabet.push_back(s.get<std::string>());
    SplitMix64 rng(cfg.seed);
    CharAutoencoder model = build_model(std::move(alphabet), cfg, rng);
    load_params_from_checkpoint(ckpt, model.named_params());
    return model;
}

} // namespace codwoe
