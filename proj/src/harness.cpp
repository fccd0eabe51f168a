#include "codwoe/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "codwoe/error.hpp"

namespace codwoe {

namespace {

const std::vector<std::string>& track_metrics(const std::string& track) {
    static const std::vector<std::string> revdict{"mse", "cosine", "rank"};
    static const std::vector<std::string> defmod{"sense_bleu", "lemma_bleu", "mover_sim"};
    if (track == "revdict") return revdict;
    if (track == "defmod") return defmod;
    throw Error("unknown track \"" + track + "\" (expected revdict or defmod)");
}

// Higher is better for cosine and all defmod metrics; mse and the cosine
// ranking measure improve downwards.
bool metric_higher_is_better(const std::string& metric) {
    return metric == "cosine" || metric == "sense_bleu" || metric == "lemma_bleu" ||
           metric == "mover_sim";
}

} // namespace

Submission Submission::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error("submission: expected a JSON object");
    Submission sub;
    auto str = [&](const char* key, bool required) {
        if (!doc.contains(key)) {
            if (required) throw Error(std::string("submission: missing key \"") + key + "\"");
            return std::string();
        }
        if (!doc[key].is_string())
            throw Error(std::string("submission: key \"") + key + "\" must be a string");
        return doc[key].get<std::string>();
    };
    sub.participant = str("participant", true);
    sub.track = str("track", true);
    track_metrics(sub.track); // validates the name
    sub.language = str("language", false);
    sub.arch = str("arch", sub.track == "revdict");
    sub.timestamp = str("timestamp", false);
    sub.id = str("id", false);
    if (sub.id.empty()) sub.id = sub.participant + "-" + (sub.timestamp.empty() ? "0" : sub.timestamp);

    if (!doc.contains("items") || !doc["items"].is_object())
        throw Error("submission: missing \"items\" object");
    for (auto it = doc["items"].begin(); it != doc["items"].end(); ++it)
        sub.items.emplace_back(it.key(), it.value());
    return sub;
}

nlohmann::ordered_json Submission::to_json() const {
    nlohmann::ordered_json doc;
    doc["id"] = id;
    doc["participant"] = participant;
    doc["track"] = track;
    doc["language"] = language;
    if (!arch.empty()) doc["arch"] = arch;
    doc["timestamp"] = timestamp;
    nlohmann::ordered_json items_doc = nlohmann::ordered_json::object();
    for (const auto& [key, value] : items) items_doc[key] = value;
    doc["items"] = std::move(items_doc);
    return doc;
}

Submission load_submission(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path + ": malformed JSON: " + e.what());
    }
    return Submission::from_json(doc);
}

nlohmann::ordered_json ValidationReport::to_json() const {
    return {{"valid", valid()},
            {"missing_ids", missing_ids},
            {"extra_ids", extra_ids},
            {"type_errors", type_errors},
            {"dimension_errors", dimension_errors}};
}

ValidationReport validate_submission(const Submission& sub, const Dataset& reference) {
    ValidationReport report;
    const bool revdict = sub.track == "revdict";

    size_t expected_dim = 0;
    if (revdict) {
        try {
            ArchTag tag = parse_arch(sub.arch);
            if (!reference.has_arch(tag)) {
                report.type_errors.push_back("reference has no \"" + sub.arch + "\" vectors");
            } else {
                expected_dim = reference.declared_dim.at(tag);
            }
        } catch (const Error& e) {
            report.type_errors.push_back(e.what());
        }
    }

    std::set<std::string> reference_ids;
    for (const auto& dp : reference.items) reference_ids.insert(dp.id);

    std::set<std::string> submitted;
    for (const auto& [id, value] : sub.items) {
        submitted.insert(id);
        if (!reference_ids.count(id)) {
            report.extra_ids.push_back(id);
            continue;
        }
        if (revdict) {
            if (!value.is_array()) {
                report.type_errors.push_back("item \"" + id + "\": expected a vector");
                continue;
            }
            bool numeric = true;
            for (const auto& x : value)
                if (!x.is_number()) numeric = false;
            if (!numeric) {
                report.type_errors.push_back("item \"" + id + "\": non-numeric vector entry");
                continue;
            }
            if (expected_dim != 0 && value.size() != expected_dim)
                report.dimension_errors.push_back("item \"" + id + "\": vector of dimension " +
                                                  std::to_string(value.size()) + ", expected " +
                                                  std::to_string(expected_dim));
        } else {
            if (!value.is_string())
                report.type_errors.push_back("item \"" + id + "\": expected a gloss string");
        }
    }
    for (const auto& dp : reference.items)
        if (!submitted.count(dp.id)) report.missing_ids.push_back(dp.id);
    return report;
}

std::optional<double> ScoreReport::aggregate(const std::string& metric) const {
    for (const auto& [name, value] : aggregates)
        if (name == metric) return value;
    return std::nullopt;
}

nlohmann::ordered_json ScoreReport::to_json(bool verbose) const {
    nlohmann::ordered_json doc;
    doc["submission_id"] = submission_id;
    doc["participant"] = participant;
    doc["track"] = track;
    doc["language"] = language;
    if (!arch.empty()) doc["arch"] = arch;
    nlohmann::ordered_json agg;
    for (const auto& [name, value] : aggregates) agg[name] = value;
    doc["aggregates"] = std::move(agg);
    doc["flags"] = {{"zero_norm_vectors", flags.zero_norm_vectors},
                    {"degenerate_references", flags.degenerate_references},
                    {"mover_oov_items", flags.mover_oov_items},
                    {"mover_solver", flags.mover_solver},
                    {"mover_table", flags.mover_table},
                    {"tie_ranking", "competition-min"}};
    if (verbose) {
        nlohmann::ordered_json per;
        for (const auto& [name, values] : per_item) per[name] = values;
        doc["per_item"] = std::move(per);
    }
    return doc;
}

ScoreReport ScoreReport::from_json(const nlohmann::ordered_json& doc) {
    ScoreReport report;
    report.submission_id = doc.at("submission_id").get<std::string>();
    report.participant = doc.at("participant").get<std::string>();
    report.track = doc.at("track").get<std::string>();
    report.language = doc.value("language", "");
    report.arch = doc.value("arch", "");
    for (auto it = doc.at("aggregates").begin(); it != doc.at("aggregates").end(); ++it)
        report.aggregates.emplace_back(it.key(), it.value().get<double>());
    if (doc.contains("flags")) {
        const auto& f = doc["flags"];
        report.flags.zero_norm_vectors = f.value("zero_norm_vectors", false);
        report.flags.degenerate_references = f.value("degenerate_references", false);
        report.flags.mover_oov_items = f.value("mover_oov_items", size_t{0});
        report.flags.mover_solver = f.value("mover_solver", "");
        report.flags.mover_table = f.value("mover_table", "");
    }
    if (doc.contains("per_item"))
        for (auto it = doc["per_item"].begin(); it != doc["per_item"].end(); ++it)
            report.per_item.emplace_back(it.key(), it.value().get<std::vector<double>>());
    return report;
}

std::string render_report(const ScoreReport& report, bool verbose) {
    return report.to_json(verbose).dump(2) + "\n";
}

namespace {

ScoreReport score_revdict_submission(const Submission& sub, const Dataset& reference,
                                     const ScoreConfigs& configs) {
    ArchTag tag = parse_arch(sub.arch);
    std::map<std::string, const nlohmann::json*> by_id;
    for (const auto& [id, value] : sub.items) by_id[id] = &value;

    VectorBatch preds, targets;
    for (const auto& dp : reference.items) {
        targets.push_row(dp.embeddings.at(tag));
        std::vector<double> vec = by_id.at(dp.id)->get<std::vector<double>>();
        preds.push_row(vec);
    }
    RevdictScores s = score_revdict_batch(preds, targets, configs.rank_threads);

    ScoreReport report;
    report.aggregates = {{"mse", s.mean_mse}, {"cosine", s.mean_cosine}, {"rank", s.mean_rank}};
    report.per_item = {{"mse", s.mse}, {"cosine", s.cosine}, {"rank", s.rank}};
    report.flags.zero_norm_vectors = s.zero_norm_seen;
    return report;
}

ScoreReport score_defmod_submission(const Submission& sub, const Dataset& reference,
                                    const ScoreConfigs& configs) {
    std::map<std::string, const nlohmann::json*> by_id;
    for (const auto& [id, value] : sub.items) by_id[id] = &value;

    // Reference gloss groups per definiendum, for L-BLEU.
    std::map<std::string, std::vector<std::vector<std::string>>> groups;
    for (const auto& dp : reference.items)
        groups[dp.word].push_back(tokenize_gloss(dp.gloss));

    ScoreReport report;
    std::vector<double> sense, lemma, mover;
    bool any_exact = false, any_sinkhorn = false;
    for (const auto& dp : reference.items) {
        auto hyp = tokenize_gloss(by_id.at(dp.id)->get<std::string>());
        auto ref = tokenize_gloss(dp.gloss);
        if (ref.size() == 1) report.flags.degenerate_references = true;
        sense.push_back(sense_bleu(hyp, ref, configs.bleu));
        lemma.push_back(lemma_bleu(hyp, groups.at(dp.word), configs.bleu));

        double mv = 0.0;
        try {
            MoverResult r;
            if (configs.mover_one_hot) {
                // Identity embeddings over the pair's own tokens: cost 0 for
                // an exact token match, 1 otherwise.
                MoverConfig one_hot;
                one_hot.idf = configs.mover.idf;
                one_hot.epsilon = configs.mover.epsilon;
                one_hot.oov_policy = configs.mover.oov_policy;
                one_hot.exact_size_cap = configs.mover.exact_size_cap;
                std::set<std::string> vocab(hyp.begin(), hyp.end());
                vocab.insert(ref.begin(), ref.end());
                size_t dim = vocab.size(), k = 0;
                for (const auto& tok : vocab) {
                    std::vector<double> e(dim, 0.0);
                    e[k++] = 1.0;
                    one_hot.embeddings[tok] = std::move(e);
                }
                r = mover_sim(hyp, ref, one_hot);
            } else {
                r = mover_sim(hyp, ref, configs.mover);
            }
            mv = r.score;
            (r.used_sinkhorn ? any_sinkhorn : any_exact) = true;
        } catch (const Error&) {
            // Empty or fully out-of-vocabulary side: score 0, keep going.
            ++report.flags.mover_oov_items;
        }
        mover.push_back(mv);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    report.aggregates = {{"sense_bleu", mean(sense)},
                         {"lemma_bleu", mean(lemma)},
                         {"mover_sim", mean(mover)}};
    report.per_item = {{"sense_bleu", sense}, {"lemma_bleu", lemma}, {"mover_sim", mover}};
    report.flags.mover_solver =
        any_exact && any_sinkhorn ? "mixed" : (any_sinkhorn ? "sinkhorn" : "exact");
    report.flags.mover_table = configs.mover_one_hot ? "one-hot" : "external";
    return report;
}

} // namespace

ScoreReport score_submission(const Submission& sub, const Dataset& reference,
                             const ScoreConfigs& configs) {
    ValidationReport validation = validate_submission(sub, reference);
    if (!validation.valid())
        throw Error("cannot score an invalid submission: " + validation.to_json().dump());

    ScoreReport report = sub.track == "revdict"
                             ? score_revdict_submission(sub, reference, configs)
                             : score_defmod_submission(sub, reference, configs);
    report.submission_id = sub.id;
    report.participant = sub.participant;
    report.track = sub.track;
    report.language = sub.language;
    report.arch = sub.arch;
    return report;
}

nlohmann::ordered_json Leaderboard::to_json() const {
    nlohmann::ordered_json doc;
    doc["tie_ranking"] = "competition-min";
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& setup : setups) {
        nlohmann::ordered_json s;
        s["track"] = setup.track;
        if (!setup.language.empty()) s["language"] = setup.language;
        if (!setup.arch.empty()) s["arch"] = setup.arch;
        s["pooled"] = setup.pooled;
        nlohmann::ordered_json entries = nlohmann::ordered_json::array();
        for (const auto& e : setup.entries) {
            nlohmann::ordered_json row;
            row["rank"] = e.display_rank;
            row["participant"] = e.participant;
            row["avg_best_rank"] = e.avg_best_rank;
            row["best_ranks"] = e.best_ranks;
            row["submissions"] = e.submissions;
            entries.push_back(std::move(row));
        }
        s["entries"] = std::move(entries);
        s["excluded"] = setup.excluded;
        arr.push_back(std::move(s));
    }
    doc["setups"] = std::move(arr);
    return doc;
}

namespace {

LeaderboardSetup rank_setup(const std::string& track, const std::string& language,
                            const std::string& arch, bool pooled,
                            const std::vector<const ScoreReport*>& reports) {
    LeaderboardSetup setup;
    setup.track = track;
    setup.language = language;
    setup.arch = arch;
    setup.pooled = pooled;

    const auto& metrics = track_metrics(track);

    // Competition (min) rank of each report per metric: 1 + number of
    // strictly better reports. Order-invariant by construction.
    std::map<std::string, std::map<std::string, double>> best_rank; // participant -> metric -> rank
    std::map<std::string, size_t> submission_count;
    for (const ScoreReport* r : reports) ++submission_count[r->participant];

    for (const auto& metric : metrics) {
        std::vector<std::pair<const ScoreReport*, double>> scored;
        for (const ScoreReport* r : reports) {
            auto v = r->aggregate(metric);
            if (v) scored.emplace_back(r, *v);
        }
        const bool higher = metric_higher_is_better(metric);
        for (const auto& [r, v] : scored) {
            size_t better = 0;
            for (const auto& [r2, v2] : scored)
                if (higher ? v2 > v : v2 < v) ++better;
            double rank = static_cast<double>(1 + better);
            auto it = best_rank[r->participant].find(metric);
            if (it == best_rank[r->participant].end() || rank < it->second)
                best_rank[r->participant][metric] = rank;
        }
    }

    for (const auto& [participant, ranks] : best_rank) {
        if (ranks.size() != metrics.size()) {
            setup.excluded.push_back(participant);
            continue;
        }
        LeaderboardEntry entry;
        entry.participant = participant;
        entry.best_ranks = ranks;
        entry.submissions = submission_count[participant];
        double sum = 0.0;
        for (const auto& [m, r] : ranks) sum += r;
        entry.avg_best_rank = sum / static_cast<double>(metrics.size());
        setup.entries.push_back(std::move(entry));
    }
    // Participants present in the setup but missing every metric
    // (e.g. reports with no aggregates at all) are excluded too.
    for (const auto& [participant, count] : submission_count)
        if (!best_rank.count(participant)) setup.excluded.push_back(participant);

    std::sort(setup.entries.begin(), setup.entries.end(),
              [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
                  if (a.avg_best_rank != b.avg_best_rank) return a.avg_best_rank < b.avg_best_rank;
                  return a.participant < b.participant;
              });
    for (auto& entry : setup.entries) {
        size_t better = 0;
        for (const auto& other : setup.entries)
            if (other.avg_best_rank < entry.avg_best_rank) ++better;
        entry.display_rank = 1 + better;
    }
    std::sort(setup.excluded.begin(), setup.excluded.end());
    return setup;
}

} // namespace

Leaderboard build_leaderboard(const std::vector<ScoreReport>& reports) {
    // Group by (track, language, arch) and by track for the pooled view.
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const ScoreReport*>>
        setups;
    std::map<std::string, std::vector<const ScoreReport*>> pooled;
    for (const auto& r : reports) {
        track_metrics(r.track);
        setups[{r.track, r.language, r.arch}].push_back(&r);
        pooled[r.track].push_back(&r);
    }

    Leaderboard board;
    for (const auto& [key, group] : setups) {
        const auto& [track, language, arch] = key;
        board.setups.push_back(rank_setup(track, language, arch, false, group));
    }
    for (const auto& [track, group] : pooled)
        board.setups.push_back(rank_setup(track, "", "", true, group));
    return board;
}

namespace {

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string record_filename(const std::string& id) {
    std::string safe;
    for (char c : id)
        safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')
                    ? c
                    : '_';
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(id)));
    return safe + "-" + std::string(hash, 8) + ".json";
}

} // namespace

SubmissionStore::SubmissionStore(std::string dir) : dir_(std::move(dir)) {
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        if (entry.path().filename() == "index.json") continue;
        std::ifstream in(entry.path());
        nlohmann::ordered_json doc;
        try {
            doc = nlohmann::ordered_json::parse(in);
        } catch (const nlohmann::json::parse_error&) {
            continue; // foreign file in the store directory
        }
        if (!doc.contains("report")) continue;
        ScoreReport report = ScoreReport::from_json(doc["report"]);
        reports_.emplace(report.submission_id, std::move(report));
    }
}

bool SubmissionStore::contains(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return reports_.count(id) != 0;
}

size_t SubmissionStore::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return reports_.size();
}

void SubmissionStore::put(const Submission& sub, const ScoreReport& report) {
    std::lock_guard<std::mutex> lock(mu_);
    if (reports_.count(sub.id)) throw Error("store: duplicate submission id \"" + sub.id + "\"");
    nlohmann::ordered_json bundle;
    bundle["submission"] = sub.to_json();
    bundle["report"] = report.to_json(true);
    const std::string path = dir_ + "/" + record_filename(sub.id);
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open file for writing");
    out << bundle.dump(2) << "\n";
    if (!out) throw Error(path + ": write failed");
    reports_.emplace(sub.id, report);
    write_index_locked();
}

void SubmissionStore::write_index_locked() const {
    nlohmann::ordered_json index = nlohmann::ordered_json::array();
    for (const auto& [id, report] : reports_)
        index.push_back({{"id", id}, {"file", record_filename(id)}});
    std::ofstream out(dir_ + "/index.json");
    out << index.dump(2) << "\n";
}

std::optional<ScoreReport> SubmissionStore::report(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = reports_.find(id);
    if (it == reports_.end()) return std::nullopt;
    return it->second;
}

std::vector<ScoreReport> SubmissionStore::all_reports() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<ScoreReport> out;
    out.reserve(reports_.size());
    for (const auto& [id, report] : reports_) out.push_back(report);
    return out;
}

} // namespace codwoe
