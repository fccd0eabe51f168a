#include "codwoe/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "codwoe/error.hpp"

namespace codwoe {

void TrainConfig::validate() const {
    if (max_epochs == 0) throw Error("train config: max_epochs must be >= 1");
    if (patience == 0) throw Error("train config: patience must be >= 1");
    if (batch_size == 0 || grad_accum == 0)
        throw Error("train config: batch size and accumulation must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw Error("train config: dropout must be in [0,1)");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
        throw Error("train config: label smoothing must be in [0,1)");
    if (d_model == 0 || heads == 0 || layers == 0 || d_ff == 0)
        throw Error("train config: model dimensions must be positive");
    if (d_model % heads != 0)
        throw Error("train config: heads (" + std::to_string(heads) + ") must divide d_model (" +
                    std::to_string(d_model) + ")");
    optimizer.validate();
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
    TrainConfig cfg;
    auto get = [&](const char* key, auto& field) {
        if (doc.contains(key)) field = doc[key].template get<std::decay_t<decltype(field)>>();
    };
    get("max_epochs", cfg.max_epochs);
    get("patience", cfg.patience);
    get("min_rel_improvement", cfg.min_rel_improvement);
    get("batch_size", cfg.batch_size);
    get("grad_accum", cfg.grad_accum);
    get("dropout", cfg.dropout);
    get("label_smoothing", cfg.label_smoothing);
    get("warmup_steps", cfg.warmup_steps);
    get("seed", cfg.seed);
    get("d_model", cfg.d_model);
    get("heads", cfg.heads);
    get("layers", cfg.layers);
    get("d_ff", cfg.d_ff);
    get("lr", cfg.optimizer.lr);
    get("weight_decay", cfg.optimizer.weight_decay);
    get("beta1", cfg.optimizer.beta1);
    get("beta2", cfg.optimizer.beta2);
    get("adam_eps", cfg.optimizer.eps);
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json TrainConfig::to_json() const {
    return {{"max_epochs", max_epochs},
            {"patience", patience},
            {"min_rel_improvement", min_rel_improvement},
            {"batch_size", batch_size},
            {"grad_accum", grad_accum},
            {"dropout", dropout},
            {"label_smoothing", label_smoothing},
            {"warmup_steps", warmup_steps},
            {"seed", seed},
            {"d_model", d_model},
            {"heads", heads},
            {"layers", layers},
            {"d_ff", d_ff},
            {"lr", optimizer.lr},
            {"weight_decay", optimizer.weight_decay},
            {"beta1", optimizer.beta1},
            {"beta2", optimizer.beta2},
            {"adam_eps", optimizer.eps}};
}

namespace {

Tensor make_embedding_table(size_t vocab, size_t dim, SplitMix64& rng) {
    Tensor t = make_tensor(vocab, dim, true);
    for (double& w : t->value) w = 0.1 * rng.normal();
    return t;
}

} // namespace

NamedParams RevdictModel::named_params() const {
    NamedParams out;
    out.emplace_back("tok_emb", tok_emb);
    for (size_t i = 0; i < encoder.size(); ++i)
        collect_params(out, "encoder." + std::to_string(i), encoder[i]);
    out.emplace_back("w_p", w_p);
    return out;
}

RevdictModel make_revdict_model(const SubwordVocab& vocab, size_t target_dim,
                                const TrainConfig& cfg, SplitMix64& rng) {
    cfg.validate();
    if (target_dim == 0) throw Error("revdict model: target dimension must be positive");
    RevdictModel m;
    m.d_model = cfg.d_model;
    m.heads = cfg.heads;
    m.n_layers = cfg.layers;
    m.d_ff = cfg.d_ff;
    m.target_dim = target_dim;
    m.dropout_rate = cfg.dropout;
    m.vocab = vocab;
    m.tok_emb = make_embedding_table(vocab.size(), cfg.d_model, rng);
    for (size_t i = 0; i < cfg.layers; ++i)
        m.encoder.push_back(make_encoder_layer(cfg.d_model, cfg.heads, cfg.d_ff, rng));
    double bound = std::sqrt(6.0 / static_cast<double>(cfg.d_model + target_dim));
    m.w_p = make_tensor(cfg.d_model, target_dim, true);
    for (double& w : m.w_p->value) w = rng.uniform(-bound, bound);
    return m;
}

Tensor revdict_forward(const RevdictModel& model, const std::vector<int>& content_ids,
                       SplitMix64* dropout_rng) {
    std::vector<int> ids;
    ids.reserve(content_ids.size() + 2);
    ids.push_back(SubwordVocab::kBos);
    ids.insert(ids.end(), content_ids.begin(), content_ids.end());
    ids.push_back(SubwordVocab::kEos);

    Tensor x = embedding_lookup(model.tok_emb, ids);
    x = add(x, sinusoidal_encoding(ids.size(), model.d_model));
    for (const auto& layer : model.encoder)
        x = encoder_layer(layer, x, /*causal=*/false, model.dropout_rate, dropout_rng);
    return matmul(relu(sum_rows(x)), model.w_p);
}

std::vector<double> predict_revdict(const RevdictModel& model,
                                    const std::vector<int>& content_ids) {
    Tensor out = revdict_forward(model, content_ids, nullptr);
    return out->value;
}

NamedParams DefmodModel::named_params() const {
    NamedParams out;
    out.emplace_back("tok_emb", tok_emb);
    if (input_proj.weight) collect_params(out, "input_proj", input_proj);
    for (size_t i = 0; i < encoder.size(); ++i)
        collect_params(out, "encoder." + std::to_string(i), encoder[i]);
    collect_params(out, "out_proj", out_proj);
    return out;
}

DefmodModel make_defmod_model(const SubwordVocab& vocab, size_t emb_dim, const TrainConfig& cfg,
                              SplitMix64& rng) {
    cfg.validate();
    if (emb_dim == 0) throw Error("defmod model: embedding dimension must be positive");
    DefmodModel m;
    m.d_model = cfg.d_model;
    m.heads = cfg.heads;
    m.n_layers = cfg.layers;
    m.d_ff = cfg.d_ff;
    m.emb_dim = emb_dim;
    m.dropout_rate = cfg.dropout;
    m.label_smoothing = cfg.label_smoothing;
    m.vocab = vocab;
    m.tok_emb = make_embedding_table(vocab.size(), cfg.d_model, rng);
    if (emb_dim != cfg.d_model) m.input_proj = make_linear(emb_dim, cfg.d_model, true, rng);
    for (size_t i = 0; i < cfg.layers; ++i)
        m.encoder.push_back(make_encoder_layer(cfg.d_model, cfg.heads, cfg.d_ff, rng));
    m.out_proj = make_linear(cfg.d_model, vocab.size(), true, rng);
    // Keep initial logits near-uniform (loss starts at ln V).
    for (double& w : m.out_proj.weight->value) w *= 0.1;
    return m;
}

Tensor defmod_logits(const DefmodModel& model, std::span<const double> def_vec,
                     const std::vector<int>& emitted, SplitMix64* dropout_rng) {
    if (def_vec.size() != model.emb_dim)
        throw Error("defmod: definiendum vector has dimension " + std::to_string(def_vec.size()) +
                    ", model expects " + std::to_string(model.emb_dim));
    Tensor d = make_row(def_vec);
    Tensor d_in = model.input_proj.weight ? linear(model.input_proj, d) : d;
    Tensor x = emitted.empty()
                   ? d_in
                   : concat_rows({d_in, embedding_lookup(model.tok_emb, emitted)});
    x = add(x, sinusoidal_encoding(x->rows(), model.d_model));
    for (const auto& layer : model.encoder)
        x = encoder_layer(layer, x, /*causal=*/true, model.dropout_rate, dropout_rng);
    return linear(model.out_proj, x);
}

namespace {

struct Hypothesis {
    std::vector<int> tokens;
    double logp_sum = 0.0;
    bool finished = false;
    double norm_score() const {
        return logp_sum / static_cast<double>(std::max<size_t>(1, tokens.size()));
    }
};

std::vector<double> log_softmax_row(const double* x, size_t v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < v; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (size_t j = 0; j < v; ++j) z += std::exp(x[j] - mx);
    double logz = mx + std::log(z);
    std::vector<double> out(v);
    for (size_t j = 0; j < v; ++j) out[j] = x[j] - logz;
    return out;
}

} // namespace

std::vector<int> generate_defmod(const DefmodModel& model, std::span<const double> def_vec,
                                 size_t beam_width, size_t max_len, BeamTrace* trace) {
    if (beam_width < 1) throw Error("generate: beam width must be >= 1");
    if (max_len < 1) throw Error("generate: max_len must be >= 1");
    const size_t v = model.vocab.size();

    std::vector<Hypothesis> beams{Hypothesis{}};
    for (size_t step = 0; step < max_len; ++step) {
        bool all_finished = true;
        for (const auto& h : beams) all_finished = all_finished && h.finished;
        if (all_finished) break;

        std::vector<Hypothesis> candidates;
        for (const auto& h : beams) {
            if (h.finished) {
                candidates.push_back(h);
                continue;
            }
            Tensor logits = defmod_logits(model, def_vec, h.tokens, nullptr);
            auto logp = log_softmax_row(logits->row_ptr(h.tokens.size()), v);
            for (size_t tok = 0; tok < v; ++tok) {
                Hypothesis next = h;
                next.tokens.push_back(static_cast<int>(tok));
                next.logp_sum += logp[tok];
                next.finished = static_cast<int>(tok) == SubwordVocab::kEos;
                candidates.push_back(std::move(next));
            }
        }
        // Stable sort keeps expansion order (beam order, then ascending token
        // id) on ties, so beam_width == 1 matches greedy argmax exactly.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Hypothesis& a, const Hypothesis& b) {
                             return a.norm_score() > b.norm_score();
                         });
        if (candidates.size() > beam_width) candidates.resize(beam_width);
        beams = std::move(candidates);
        if (trace) {
            std::vector<double> scores;
            for (const auto& h : beams) scores.push_back(h.norm_score());
            trace->step_scores.push_back(std::move(scores));
        }
    }

    const Hypothesis* best = nullptr;
    for (const auto& h : beams)
        if (h.finished && (!best || h.norm_score() > best->norm_score())) best = &h;
    if (!best)
        for (const auto& h : beams)
            if (!best || h.norm_score() > best->norm_score()) best = &h;
    return best->tokens;
}

namespace {

struct PreparedItem {
    std::vector<int> content;
    const std::vector<double>* vec = nullptr;
};

std::vector<PreparedItem> prepare_items(const Dataset& ds, ArchTag arch,
                                        const SubwordVocab& vocab, const char* what) {
    if (ds.items.empty()) throw Error(std::string(what) + ": empty dataset");
    if (!ds.has_arch(arch))
        throw Error(std::string(what) + ": architecture \"" + to_string(arch) +
                    "\" absent from dataset");
    std::vector<PreparedItem> items;
    items.reserve(ds.items.size());
    for (const auto& dp : ds.items) {
        auto it = dp.embeddings.find(arch);
        if (it == dp.embeddings.end())
            throw Error(std::string(what) + ": item \"" + dp.id + "\" lacks \"" +
                        to_string(arch) + "\" vector");
        items.push_back({encode(vocab, dp.gloss), &it->second});
    }
    return items;
}

// Shared epoch scaffolding for both baselines. `item_loss` builds the graph
// for one item; `val_loss` scores one item without dropout.
template <typename LossFn, typename ValFn>
TrainResult run_training(const std::vector<PreparedItem>& train_items,
                         const std::vector<PreparedItem>& valid_items, const TrainConfig& cfg,
                         const NamedParams& named, SplitMix64& rng, LossFn item_loss,
                         ValFn val_loss) {
    std::vector<Tensor> params;
    for (const auto& [name, t] : named) params.push_back(t);
    AdamW opt(params, cfg.optimizer);

    const size_t n = train_items.size();
    const size_t step_items = cfg.batch_size * cfg.grad_accum;
    const size_t steps_per_epoch = (n + step_items - 1) / step_items;
    LrSchedule schedule{cfg.warmup_steps, cfg.max_epochs * steps_per_epoch, cfg.optimizer.lr};
    if (schedule.warmup_steps > schedule.total_steps)
        throw Error("train config: warmup exceeds the total step budget");

    EarlyStopper stopper(cfg.patience, cfg.min_rel_improvement);
    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_values;

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    size_t step = 0;
    for (size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        // Fisher-Yates off the pinned stream.
        for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        for (size_t begin = 0; begin < n; begin += step_items) {
            size_t end = std::min(n, begin + step_items);
            opt.zero_grad();
            for (size_t mb = begin; mb < end; mb += cfg.batch_size) {
                size_t mb_end = std::min(end, mb + cfg.batch_size);
                Tensor loss;
                for (size_t k = mb; k < mb_end; ++k) {
                    Tensor l = item_loss(train_items[order[k]], &rng);
                    loss = loss ? add(loss, l) : l;
                }
                loss = scale(loss, 1.0 / static_cast<double>(end - begin));
                backward(loss);
            }
            ++step;
            opt.step(lr_at(schedule, std::min(step, schedule.total_steps)));
        }

        const auto& eval_items = valid_items.empty() ? train_items : valid_items;
        double vloss = 0.0;
        for (const auto& item : eval_items) vloss += val_loss(item);
        vloss /= static_cast<double>(eval_items.size());
        result.val_losses.push_back(vloss);
        result.epochs_run = epoch;

        if (vloss < result.best_val_loss) {
            result.best_val_loss = vloss;
            best_values.clear();
            for (const auto& p : params) best_values.push_back(p->value);
        }
        if (stopper.update(vloss)) {
            result.early_stopped = true;
            break;
        }
    }
    result.steps_run = step;

    for (size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
    return result;
}

} // namespace

TrainResult train_revdict(const Dataset& train, const Dataset& valid, ArchTag arch,
                          const SubwordVocab& vocab, const TrainConfig& cfg) {
    cfg.validate();
    auto train_items = prepare_items(train, arch, vocab, "train_revdict");
    std::vector<PreparedItem> valid_items;
    if (!valid.items.empty()) valid_items = prepare_items(valid, arch, vocab, "train_revdict (valid)");

    const size_t target_dim = train.declared_dim.at(arch);
    SplitMix64 rng(cfg.seed);
    RevdictModel model = make_revdict_model(vocab, target_dim, cfg, rng);
    NamedParams named = model.named_params();

    TrainResult result = run_training(
        train_items, valid_items, cfg, named, rng,
        [&](const PreparedItem& item, SplitMix64* r) {
            return mse_loss(revdict_forward(model, item.content, r), *item.vec);
        },
        [&](const PreparedItem& item) {
            return mse_loss(revdict_forward(model, item.content, nullptr), *item.vec)->value[0];
        });

    nlohmann::ordered_json header;
    header["kind"] = "revdict";
    header["arch"] = to_string(arch);
    header["target_dim"] = target_dim;
    header["config"] = cfg.to_json();
    header["tokenizer"] = vocab_to_json(vocab);
    result.checkpoint = checkpoint_from_params(std::move(header), named);
    return result;
}

namespace {

std::vector<int> defmod_inputs(const PreparedItem& item) {
    std::vector<int> in{SubwordVocab::kBos};
    in.insert(in.end(), item.content.begin(), item.content.end());
    return in;
}

std::vector<int> defmod_targets(const PreparedItem& item) {
    std::vector<int> tgt{SubwordVocab::kBos};
    tgt.insert(tgt.end(), item.content.begin(), item.content.end());
    tgt.push_back(SubwordVocab::kEos);
    return tgt;
}

} // namespace

TrainResult train_defmod(const Dataset& train, const Dataset& valid, ArchTag arch,
                         const SubwordVocab& vocab, const TrainConfig& cfg) {
    cfg.validate();
    auto train_items = prepare_items(train, arch, vocab, "train_defmod");
    std::vector<PreparedItem> valid_items;
    if (!valid.items.empty()) valid_items = prepare_items(valid, arch, vocab, "train_defmod (valid)");

    const size_t emb_dim = train.declared_dim.at(arch);
    SplitMix64 rng(cfg.seed);
    DefmodModel model = make_defmod_model(vocab, emb_dim, cfg, rng);
    NamedParams named = model.named_params();

    auto loss_for = [&](const PreparedItem& item, SplitMix64* r) {
        Tensor logits = defmod_logits(model, *item.vec, defmod_inputs(item), r);
        return cross_entropy(logits, defmod_targets(item), cfg.label_smoothing);
    };
    TrainResult result = run_training(
        train_items, valid_items, cfg, named, rng, loss_for,
        [&](const PreparedItem& item) { return loss_for(item, nullptr)->value[0]; });

    nlohmann::ordered_json header;
    header["kind"] = "defmod";
    header["arch"] = to_string(arch);
    header["emb_dim"] = emb_dim;
    header["config"] = cfg.to_json();
    header["tokenizer"] = vocab_to_json(vocab);
    result.checkpoint = checkpoint_from_params(std::move(header), named);
    return result;
}

namespace {

TrainConfig config_from_checkpoint(const Checkpoint& ckpt) {
    TrainConfig cfg = TrainConfig::from_json(ckpt.header.at("config"));
    return cfg;
}

} // namespace

RevdictModel revdict_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.header.at("kind") != "revdict") throw Error("checkpoint is not a revdict model");
    TrainConfig cfg = config_from_checkpoint(ckpt);
    SubwordVocab vocab = vocab_from_json(ckpt.header.at("tokenizer"));
    SplitMix64 rng(cfg.seed);
    RevdictModel model =
        make_revdict_model(vocab, ckpt.header.at("target_dim").get<size_t>(), cfg, rng);
    load_params_from_checkpoint(ckpt, model.named_params());
    return model;
}

DefmodModel defmod_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.header.at("kind") != "defmod") throw Error("checkpoint is not a defmod model");
    TrainConfig cfg = config_from_checkpoint(ckpt);
    SubwordVocab vocab = vocab_from_json(ckpt.header.at("tokenizer"));
    SplitMix64 rng(cfg.seed);
    DefmodModel model = make_defmod_model(vocab, ckpt.header.at("emb_dim").get<size_t>(), cfg, rng);
    load_params_from_checkpoint(ckpt, model.named_params());
    return model;
}

double revdict_dataset_mse(const RevdictModel& model, const Dataset& ds, ArchTag arch) {
    auto items = prepare_items(ds, arch, model.vocab, "revdict_dataset_mse");
    double total = 0.0;
    for (const auto& item : items)
        total += mse_loss(revdict_forward(model, item.content, nullptr), *item.vec)->value[0];
    return total / static_cast<double>(items.size());
}

double defmod_token_accuracy(const DefmodModel& model, const Dataset& ds, ArchTag arch) {
    auto items = prepare_items(ds, arch, model.vocab, "defmod_token_accuracy");
    size_t correct = 0, total = 0;
    for (const auto& item : items) {
        auto targets = defmod_targets(item);
        Tensor logits = defmod_logits(model, *item.vec, defmod_inputs(item), nullptr);
        for (size_t pos = 1; pos < targets.size(); ++pos) {
            const double* row = logits->row_ptr(pos);
            size_t argmax = 0;
            for (size_t j = 1; j < model.vocab.size(); ++j)
                if (row[j] > row[argmax]) argmax = j;
            correct += static_cast<int>(argmax) == targets[pos] ? 1 : 0;
            ++total;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

} // namespace codwoe
