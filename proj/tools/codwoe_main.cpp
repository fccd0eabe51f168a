#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "codwoe/baselines.hpp"
#include "codwoe/char_ae.hpp"
#include "codwoe/dataset.hpp"
#include "codwoe/error.hpp"
#include "codwoe/harness.hpp"
#include "codwoe/hyperopt.hpp"
#include "codwoe/service.hpp"
#include "codwoe/tokenizer.hpp"

namespace {

using namespace codwoe;
using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open file for writing");
    out << contents;
    if (!out) throw Error(path + ": write failed");
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
}

std::vector<std::string> default_vocab() {
    return {"stone", "water", "light", "sound", "metal", "cloth", "berry", "field",
            "horse", "knife", "river", "cloud", "grain", "torch", "wheel", "glass"};
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

// Corpus for tokenizer training: a dataset file (glosses) or a plain text
// file, one gloss per line.
std::vector<std::string> load_corpus(const std::string& path) {
    std::string text = read_file(path);
    try {
        json doc = json::parse(text);
        Dataset ds = parse_dataset(doc, path);
        std::vector<std::string> corpus;
        for (const auto& dp : ds.items) corpus.push_back(dp.gloss);
        return corpus;
    } catch (const std::exception&) {
        return read_lines(path);
    }
}

SubwordVocab tokenizer_for_training(const std::string& tokenizer_path, const Dataset& train,
                                    size_t vocab_size) {
    if (!tokenizer_path.empty()) return load_vocab(tokenizer_path);
    std::vector<std::string> corpus;
    for (const auto& dp : train.items) corpus.push_back(dp.gloss);
    return train_tokenizer(corpus, vocab_size);
}

int run(int argc, char** argv) {
    CLI::App app{"CODWOE toolkit: datasets, metrics, baselines and the scoring service"};
    app.require_subcommand(1);

    // ---------------- dataset ----------------
    auto* dataset_cmd = app.add_subcommand("dataset", "Synthesize, validate and compare datasets");
    dataset_cmd->require_subcommand(1);

    auto* gen = dataset_cmd->add_subcommand("gen", "Generate a synthetic dataset");
    uint64_t gen_seed = 0;
    size_t gen_n = 100, gen_dim = 16;
    std::string gen_lang = "en", gen_vocab_file, gen_out;
    std::vector<std::string> gen_archs{"sgns", "char", "electra"};
    gen->add_option("--seed", gen_seed, "PRNG seed");
    gen->add_option("--n", gen_n, "Number of items");
    gen->add_option("--dim", gen_dim, "Embedding dimension");
    gen->add_option("--lang", gen_lang, "Language code used in ids");
    gen->add_option("--vocab-file", gen_vocab_file, "Word list, one per line");
    gen->add_option("--arch", gen_archs, "Architectures to generate");
    gen->add_option("--out", gen_out, "Output path (stdout if omitted)");
    gen->callback([&] {
        std::vector<ArchTag> tags;
        for (const auto& a : gen_archs) tags.push_back(parse_arch(a));
        auto vocab = gen_vocab_file.empty() ? default_vocab() : read_lines(gen_vocab_file);
        Dataset ds = gen_synthetic(gen_seed, gen_n, gen_dim, vocab, gen_lang, tags);
        emit(dataset_to_json(ds).dump(2) + "\n", gen_out);
    });

    auto* validate_ds = dataset_cmd->add_subcommand("validate", "Check a dataset file");
    std::string vd_input;
    validate_ds->add_option("--input", vd_input, "Dataset file")->required();
    validate_ds->callback([&] {
        Dataset ds = load_dataset(vd_input);
        std::cout << "ok: " << ds.items.size() << " items";
        for (const auto& [tag, dim] : ds.declared_dim)
            std::cout << ", " << to_string(tag) << " dim " << dim;
        std::cout << "\n";
    });

    auto* disjoint = dataset_cmd->add_subcommand("disjoint", "Report identical vectors across splits");
    std::string dj_a, dj_b, dj_arch = "sgns";
    double dj_tol = 0.0;
    disjoint->add_option("--a", dj_a, "First dataset")->required();
    disjoint->add_option("--b", dj_b, "Second dataset")->required();
    disjoint->add_option("--arch", dj_arch, "Architecture tag");
    disjoint->add_option("--tol", dj_tol, "Component-wise tolerance (0 = exact)");
    disjoint->callback([&] {
        auto pairs =
            check_split_disjointness(load_dataset(dj_a), load_dataset(dj_b), parse_arch(dj_arch), dj_tol);
        ordered_json out = ordered_json::array();
        for (const auto& p : pairs)
            out.push_back({{"index_a", p.index_a},
                           {"index_b", p.index_b},
                           {"id_a", p.id_a},
                           {"id_b", p.id_b}});
        std::cout << out.dump(2) << "\n";
        if (!pairs.empty()) std::exit(1);
    });

    // ---------------- tokenizer ----------------
    auto* tok_cmd = app.add_subcommand("tokenizer", "Train and use the subword tokenizer");
    tok_cmd->require_subcommand(1);

    auto* tok_train = tok_cmd->add_subcommand("train", "Train a byte-pair vocabulary");
    std::string tt_input, tt_out;
    size_t tt_vocab = 15000;
    tok_train->add_option("--input", tt_input, "Dataset JSON or text, one gloss per line")->required();
    tok_train->add_option("--vocab-size", tt_vocab, "Maximum vocabulary size");
    tok_train->add_option("--out", tt_out, "Vocabulary output path")->required();
    tok_train->callback([&] {
        SubwordVocab vocab = train_tokenizer(load_corpus(tt_input), tt_vocab);
        save_vocab(vocab, tt_out);
        std::cout << "trained " << vocab.size() << " tokens (" << vocab.merges.size()
                  << " merges)\n";
    });

    auto* tok_encode = tok_cmd->add_subcommand("encode", "Encode text to ids");
    std::string te_vocab, te_text, te_input;
    tok_encode->add_option("--tokenizer", te_vocab, "Vocabulary file")->required();
    tok_encode->add_option("--text", te_text, "Text to encode");
    tok_encode->add_option("--input", te_input, "File of lines to encode");
    tok_encode->callback([&] {
        SubwordVocab vocab = load_vocab(te_vocab);
        auto emit_ids = [&](const std::string& line) {
            auto ids = encode(vocab, line);
            for (size_t i = 0; i < ids.size(); ++i) std::cout << (i ? " " : "") << ids[i];
            std::cout << "\n";
        };
        if (!te_input.empty())
            for (const auto& line : read_lines(te_input)) emit_ids(line);
        else
            emit_ids(te_text);
    });

    auto* tok_decode = tok_cmd->add_subcommand("decode", "Decode ids to text");
    std::string td_vocab, td_ids;
    tok_decode->add_option("--tokenizer", td_vocab, "Vocabulary file")->required();
    tok_decode->add_option("--ids", td_ids, "Space-separated ids")->required();
    tok_decode->callback([&] {
        SubwordVocab vocab = load_vocab(td_vocab);
        std::vector<int> ids;
        std::istringstream ss(td_ids);
        for (int id; ss >> id;) ids.push_back(id);
        std::cout << decode(vocab, ids) << "\n";
    });

    // ---------------- validate ----------------
    auto* validate_cmd = app.add_subcommand("validate", "Validate a submission against a reference");
    std::string v_sub, v_ref;
    validate_cmd->add_option("--submission", v_sub, "Submission file")->required();
    validate_cmd->add_option("--reference", v_ref, "Reference dataset")->required();
    validate_cmd->callback([&] {
        auto report = validate_submission(load_submission(v_sub), load_dataset(v_ref));
        std::cout << report.to_json().dump(2) << "\n";
        if (!report.valid()) std::exit(1);
    });

    // ---------------- score ----------------
    auto* score_cmd = app.add_subcommand("score", "Score a submission");
    score_cmd->require_subcommand(1);

    auto* score_rev = score_cmd->add_subcommand("revdict", "Reverse-dictionary metrics");
    std::string sr_preds, sr_targets, sr_arch, sr_out;
    unsigned sr_threads = 1;
    bool sr_verbose = false;
    score_rev->add_option("--preds", sr_preds, "Submission file")->required();
    score_rev->add_option("--targets", sr_targets, "Reference dataset")->required();
    score_rev->add_option("--arch", sr_arch, "Architecture tag (defaults to the submission's)");
    score_rev->add_option("--threads", sr_threads, "Row-blocked ranking threads");
    score_rev->add_flag("--verbose", sr_verbose, "Include per-item arrays");
    score_rev->add_option("--out", sr_out, "Report output path (stdout if omitted)");
    score_rev->callback([&] {
        Submission sub = load_submission(sr_preds);
        if (!sr_arch.empty()) sub.arch = sr_arch;
        ScoreConfigs configs;
        configs.rank_threads = sr_threads;
        ScoreReport report = score_submission(sub, load_dataset(sr_targets), configs);
        emit(render_report(report, sr_verbose), sr_out);
    });

    auto* score_def = score_cmd->add_subcommand("defmod", "Definition-modeling metrics");
    std::string sd_preds, sd_refs, sd_emb, sd_idf, sd_out;
    double sd_epsilon = 0.01;
    int sd_order = 4;
    bool sd_verbose = false;
    score_def->add_option("--preds", sd_preds, "Submission file")->required();
    score_def->add_option("--refs", sd_refs, "Reference dataset")->required();
    score_def->add_option("--embeddings", sd_emb, "Token embedding table (JSON map)");
    score_def->add_option("--idf", sd_idf, "Token idf table (JSON map)");
    score_def->add_option("--epsilon", sd_epsilon, "Sinkhorn regularization");
    score_def->add_option("--max-order", sd_order, "BLEU maximum n-gram order");
    score_def->add_flag("--verbose", sd_verbose, "Include per-item arrays");
    score_def->add_option("--out", sd_out, "Report output path (stdout if omitted)");
    score_def->callback([&] {
        ScoreConfigs configs;
        configs.bleu.max_order = sd_order;
        configs.mover.epsilon = sd_epsilon;
        if (!sd_emb.empty()) {
            configs.mover.embeddings = load_embedding_table(sd_emb);
            configs.mover_one_hot = false;
        }
        if (!sd_idf.empty()) configs.mover.idf = load_idf_table(sd_idf);
        ScoreReport report =
            score_submission(load_submission(sd_preds), load_dataset(sd_refs), configs);
        emit(render_report(report, sd_verbose), sd_out);
    });

    // ---------------- leaderboard ----------------
    auto* board_cmd = app.add_subcommand("leaderboard", "Aggregate stored reports into rankings");
    std::string lb_store, lb_out;
    std::vector<std::string> lb_reports;
    board_cmd->add_option("--store", lb_store, "Submission store directory");
    board_cmd->add_option("--reports", lb_reports, "Individual report files");
    board_cmd->add_option("--out", lb_out, "Output path (stdout if omitted)");
    board_cmd->callback([&] {
        std::vector<ScoreReport> reports;
        if (!lb_store.empty()) {
            SubmissionStore store(lb_store);
            reports = store.all_reports();
        }
        for (const auto& path : lb_reports)
            reports.push_back(ScoreReport::from_json(ordered_json::parse(read_file(path))));
        if (reports.empty()) throw Error("leaderboard: no reports (use --store or --reports)");
        emit(build_leaderboard(reports).to_json().dump(2) + "\n", lb_out);
    });

    // ---------------- serve ----------------
    auto* serve_cmd = app.add_subcommand("serve", "Run the scoring service");
    std::string serve_config;
    serve_cmd->add_option("--config", serve_config, "Service configuration JSON")->required();
    serve_cmd->callback([&] {
        ServiceConfig cfg = ServiceConfig::load(serve_config);
        HarnessService service(cfg);
        std::cout << "serving on " << cfg.bind << " (reference: " << cfg.reference_path << ", "
                  << service.reference().items.size() << " items)\n";
        if (!service.run()) throw Error("serve: could not bind " + cfg.bind);
    });

    // ---------------- baseline ----------------
    auto* baseline_cmd = app.add_subcommand("baseline", "Train and run the baseline models");
    baseline_cmd->require_subcommand(1);

    auto* btrain = baseline_cmd->add_subcommand("train", "Train a baseline model");
    std::string bt_track, bt_arch = "sgns", bt_train, bt_valid, bt_config, bt_tokenizer, bt_out;
    size_t bt_vocab_size = 15000;
    bool bt_tune_objective = false;
    ordered_json bt_overrides = ordered_json::object();
    btrain->add_option("--track", bt_track, "revdict or defmod")->required();
    btrain->add_option("--arch", bt_arch, "Architecture tag");
    btrain->add_option("--train", bt_train, "Training dataset")->required();
    btrain->add_option("--valid", bt_valid, "Validation dataset");
    btrain->add_option("--config", bt_config, "TrainConfig JSON file");
    btrain->add_option("--tokenizer", bt_tokenizer, "Pretrained vocabulary (default: train one)");
    btrain->add_option("--vocab-size", bt_vocab_size, "Vocabulary size when training one");
    btrain->add_option("--out", bt_out, "Checkpoint output path")->required();
    btrain->add_flag("--tune-objective", bt_tune_objective,
                     "Print the best validation loss alone on the last line (for `tune`)");
    // Per-flag overrides of the config file, matching the tuned search space.
    auto add_override = [&](const char* flag, const char* key, const char* help) {
        btrain
            ->add_option_function<double>(
                flag, [&bt_overrides, key](double v) { bt_overrides[key] = v; }, help)
            ->expected(1);
    };
    add_override("--lr", "lr", "Peak learning rate");
    add_override("--weight-decay", "weight_decay", "Decoupled weight decay");
    add_override("--beta1", "beta1", "Adam beta1");
    add_override("--beta2", "beta2", "Adam beta2");
    add_override("--dropout", "dropout", "Dropout rate");
    add_override("--label-smoothing", "label_smoothing", "Label smoothing (defmod)");
    add_override("--warmup-steps", "warmup_steps", "Warmup steps");
    add_override("--batch-size", "batch_size", "Batch size");
    add_override("--grad-accum", "grad_accum", "Gradient accumulation count");
    add_override("--heads", "heads", "Attention heads");
    add_override("--layers", "layers", "Encoder layers");
    add_override("--d-model", "d_model", "Model width");
    add_override("--d-ff", "d_ff", "Feed-forward width");
    add_override("--max-epochs", "max_epochs", "Epoch cap");
    add_override("--seed", "seed", "Training seed");
    btrain->callback([&] {
        Dataset train = load_dataset(bt_train);
        Dataset valid = bt_valid.empty() ? Dataset{} : load_dataset(bt_valid);
        ordered_json cfg_doc =
            bt_config.empty() ? ordered_json::object() : ordered_json::parse(read_file(bt_config));
        for (auto it = bt_overrides.begin(); it != bt_overrides.end(); ++it)
            cfg_doc[it.key()] = it.value();
        TrainConfig cfg = TrainConfig::from_json(cfg_doc);
        SubwordVocab vocab = tokenizer_for_training(bt_tokenizer, train, bt_vocab_size);
        ArchTag arch = parse_arch(bt_arch);
        TrainResult result;
        if (bt_track == "revdict")
            result = train_revdict(train, valid, arch, vocab, cfg);
        else if (bt_track == "defmod")
            result = train_defmod(train, valid, arch, vocab, cfg);
        else
            throw Error("baseline train: unknown track \"" + bt_track + "\"");
        save_checkpoint(result.checkpoint, bt_out);
        std::cout << "epochs " << result.epochs_run << ", steps " << result.steps_run
                  << ", best val loss " << result.best_val_loss
                  << (result.early_stopped ? " (early stop)" : "") << "\n";
        if (bt_tune_objective) std::cout << result.best_val_loss << "\n";
    });

    auto* bpredict = baseline_cmd->add_subcommand("predict", "Produce a submission from a checkpoint");
    std::string bp_ckpt, bp_input, bp_out, bp_participant = "baseline", bp_timestamp = "0";
    size_t bp_beam = 4, bp_max_len = 32;
    bpredict->add_option("--ckpt", bp_ckpt, "Model checkpoint")->required();
    bpredict->add_option("--input", bp_input, "Dataset to predict for")->required();
    bpredict->add_option("--out", bp_out, "Submission output path")->required();
    bpredict->add_option("--beam", bp_beam, "Beam width (defmod)");
    bpredict->add_option("--max-len", bp_max_len, "Maximum generated tokens (defmod)");
    bpredict->add_option("--participant", bp_participant, "Participant name in the submission");
    bpredict->add_option("--timestamp", bp_timestamp, "Timestamp field");
    bpredict->callback([&] {
        Checkpoint ckpt = load_checkpoint(bp_ckpt);
        Dataset input = load_dataset(bp_input);
        const std::string kind = ckpt.header.at("kind").get<std::string>();
        const std::string arch = ckpt.header.at("arch").get<std::string>();
        Submission sub;
        sub.participant = bp_participant;
        sub.language = input.language;
        sub.timestamp = bp_timestamp;
        sub.id = bp_participant + "-" + bp_timestamp;
        if (kind == "revdict") {
            sub.track = "revdict";
            sub.arch = arch;
            RevdictModel model = revdict_from_checkpoint(ckpt);
            for (const auto& dp : input.items)
                sub.items.emplace_back(dp.id,
                                       json(predict_revdict(model, encode(model.vocab, dp.gloss))));
        } else if (kind == "defmod") {
            sub.track = "defmod";
            DefmodModel model = defmod_from_checkpoint(ckpt);
            ArchTag tag = parse_arch(arch);
            for (const auto& dp : input.items) {
                auto it = dp.embeddings.find(tag);
                if (it == dp.embeddings.end())
                    throw Error("predict: item \"" + dp.id + "\" lacks \"" + arch + "\" vector");
                auto ids = generate_defmod(model, it->second, bp_beam, bp_max_len);
                sub.items.emplace_back(dp.id, json(decode(model.vocab, ids)));
            }
        } else {
            throw Error("predict: checkpoint kind \"" + kind + "\" is not a baseline model");
        }
        write_file(bp_out, sub.to_json().dump(2) + "\n");
        std::cout << "wrote " << sub.items.size() << " predictions to " << bp_out << "\n";
    });

    // ---------------- char-ae ----------------
    auto* char_cmd = app.add_subcommand("char-ae", "Character autoencoder embeddings");
    char_cmd->require_subcommand(1);

    auto* ctrain = char_cmd->add_subcommand("train", "Train the character autoencoder");
    std::string ct_words, ct_config, ct_out, ct_tune;
    ordered_json ct_overrides = ordered_json::object();
    ctrain->add_option("--words", ct_words, "Word list, one per line")->required();
    ctrain->add_option("--config", ct_config, "CharAeConfig JSON file");
    ctrain->add_option("--out", ct_out, "Checkpoint output path")->required();
    ctrain->add_option("--tune-objective", ct_tune,
                       "Print `loss` or `error` (1 - accuracy) alone on the last line");
    auto ct_override = [&](const char* flag, const char* key, const char* help) {
        ctrain
            ->add_option_function<double>(
                flag, [&ct_overrides, key](double v) { ct_overrides[key] = v; }, help)
            ->expected(1);
    };
    // The tuned hyperparameters of the character autoencoder.
    ct_override("--lr", "lr", "Learning rate");
    ct_override("--weight-decay", "weight_decay", "Decoupled weight decay");
    ct_override("--dropout", "dropout", "Dropout rate");
    ct_override("--beta1", "beta1", "Adam beta1");
    ct_override("--beta2", "beta2", "Adam beta2");
    ct_override("--batch-size", "batch_size", "Batch size");
    ct_override("--epochs", "max_epochs", "Epoch count");
    ct_override("--hidden", "hidden", "Representation dimension");
    ct_override("--char-emb", "char_emb", "Character embedding dimension");
    ct_override("--seed", "seed", "Training seed");
    ctrain
        ->add_option_function<bool>(
            "--share-embeddings",
            [&ct_overrides](bool v) { ct_overrides["share_embeddings"] = v; },
            "Share one character matrix between encoder and decoder")
        ->expected(1);
    ctrain->callback([&] {
        ordered_json cfg_doc =
            ct_config.empty() ? ordered_json::object() : ordered_json::parse(read_file(ct_config));
        for (auto it = ct_overrides.begin(); it != ct_overrides.end(); ++it)
            cfg_doc[it.key()] = it.value();
        CharAeConfig cfg = CharAeConfig::from_json(cfg_doc);
        auto result = train_char_ae(read_lines(ct_words), cfg);
        save_checkpoint(char_ae_to_checkpoint(result.model), ct_out);
        std::cout << "epochs " << result.epochs_run << ", reconstruction accuracy "
                  << result.epoch_accuracies.back() << "\n";
        if (ct_tune == "loss")
            std::cout << result.epoch_losses.back() << "\n";
        else if (ct_tune == "error")
            std::cout << 1.0 - result.epoch_accuracies.back() << "\n";
        else if (!ct_tune.empty())
            throw Error("char-ae train: --tune-objective must be loss or error");
    });

    auto* cembed = char_cmd->add_subcommand("embed", "Embed words with a trained model");
    std::string ce_ckpt, ce_words, ce_out;
    cembed->add_option("--ckpt", ce_ckpt, "Model checkpoint")->required();
    cembed->add_option("--words", ce_words, "Word list, one per line")->required();
    cembed->add_option("--out", ce_out, "Output JSON map word -> vector")->required();
    cembed->callback([&] {
        CharAutoencoder model = char_ae_from_checkpoint(load_checkpoint(ce_ckpt));
        ordered_json table;
        for (const auto& word : read_lines(ce_words)) table[word] = embed_word(model, word);
        write_file(ce_out, table.dump(2) + "\n");
    });

    // ---------------- tune ----------------
    auto* tune_cmd = app.add_subcommand("tune", "Bayesian-optimize a black-box command");
    std::string tn_space, tn_cmd, tn_log;
    size_t tn_budget = 100, tn_init = 10;
    uint64_t tn_seed = 0;
    tune_cmd->add_option("--space", tn_space, "Search space JSON")->required();
    tune_cmd->add_option("--budget", tn_budget, "Total configurations to evaluate");
    tune_cmd->add_option("--init", tn_init, "Initial quasi-random samples");
    tune_cmd->add_option("--seed", tn_seed, "PRNG seed");
    tune_cmd->add_option("--cmd", tn_cmd,
                         "Command template; {name} expands to the parameter value and the "
                         "objective is read from the last stdout line")
        ->required();
    tune_cmd->add_option("--log", tn_log, "Trial log (JSON), enables resume");
    tune_cmd->callback([&] {
        SearchSpace space = SearchSpace::from_json(json::parse(read_file(tn_space)));
        std::vector<TrialRecord> history;
        if (!tn_log.empty() && std::ifstream(tn_log).good())
            history = trials_from_json(json::parse(read_file(tn_log)));

        auto objective = [&](const ordered_json& cfg) {
            std::string cmd = tn_cmd;
            for (auto it = cfg.begin(); it != cfg.end(); ++it) {
                std::string placeholder = "{" + it.key() + "}";
                std::string value = it.value().dump();
                for (size_t pos = cmd.find(placeholder); pos != std::string::npos;
                     pos = cmd.find(placeholder))
                    cmd.replace(pos, placeholder.size(), value);
            }
            FILE* pipe = popen(cmd.c_str(), "r");
            if (!pipe) throw Error("tune: cannot run \"" + cmd + "\"");
            std::string output;
            char buffer[4096];
            while (size_t got = fread(buffer, 1, sizeof buffer, pipe)) output.append(buffer, got);
            int status = pclose(pipe);
            std::string last;
            std::istringstream lines(output);
            for (std::string line; std::getline(lines, line);)
                if (!line.empty()) last = line;
            double value = std::numeric_limits<double>::quiet_NaN();
            if (status == 0 && !last.empty()) {
                try {
                    value = std::stod(last);
                } catch (const std::exception&) {
                }
            }
            std::cout << "trial " << history.size() + 1 << ": " << cfg.dump() << " -> " << value
                      << "\n";
            if (!tn_log.empty()) write_file(tn_log, trials_to_json(history).dump(2) + "\n");
            return value;
        };
        TrialRecord best = optimize(objective, space, tn_budget, tn_init, tn_seed, &history);
        if (!tn_log.empty()) write_file(tn_log, trials_to_json(history).dump(2) + "\n");
        std::cout << "best: " << best.config.dump() << " objective " << best.objective << "\n";
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
