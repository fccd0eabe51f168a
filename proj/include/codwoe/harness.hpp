#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "codwoe/dataset.hpp"
#include "codwoe/metrics_defmod.hpp"
#include "codwoe/metrics_revdict.hpp"

namespace codwoe {

// A participant's predictions for one (track, language, arch) setup. Items
// are kept as raw JSON until validation so type errors can be reported
// instead of failing the load.
struct Submission {
    std::string id; // derived from participant + timestamp when absent
    std::string participant;
    std::string track; // "revdict" | "defmod"
    std::string language;
    std::string arch; // revdict only
    std::string timestamp;
    std::vector<std::pair<std::string, nlohmann::json>> items; // id -> prediction

    static Submission from_json(const nlohmann::json& doc);
    nlohmann::ordered_json to_json() const;
};

Submission load_submission(const std::string& path);

struct ValidationReport {
    std::vector<std::string> missing_ids;
    std::vector<std::string> extra_ids;
    std::vector<std::string> type_errors;
    std::vector<std::string> dimension_errors;

    bool valid() const {
        return missing_ids.empty() && extra_ids.empty() && type_errors.empty() &&
               dimension_errors.empty();
    }
    nlohmann::ordered_json to_json() const;
};

// A submission is valid iff the report is empty: every reference id covered,
// no unknown ids, predictions typed for the track, vectors of the declared
// dimension.
ValidationReport validate_submission(const Submission& sub, const Dataset& reference);

struct ScoreConfigs {
    BleuConfig bleu;
    MoverConfig mover;   // embeddings may be empty: one-hot fallback
    bool mover_one_hot = true; // set false when an external table was supplied
    unsigned rank_threads = 1;
};

struct ScoreReport {
    std::string submission_id;
    std::string participant;
    std::string track;
    std::string language;
    std::string arch;
    // Metric order is fixed per track: revdict mse,cosine,rank;
    // defmod sense_bleu,lemma_bleu,mover_sim.
    std::vector<std::pair<std::string, double>> aggregates;
    std::vector<std::pair<std::string, std::vector<double>>> per_item;
    struct Flags {
        bool zero_norm_vectors = false;
        bool degenerate_references = false; // some reference gloss has a single token
        size_t mover_oov_items = 0;         // items scored 0 because no token was in the table
        std::string mover_solver;           // "", "exact", "sinkhorn", "mixed"
        std::string mover_table;            // "one-hot" | "external"
    } flags;

    std::optional<double> aggregate(const std::string& metric) const;
    nlohmann::ordered_json to_json(bool verbose) const;
    // Takes ordered_json so the metric order survives the round trip.
    static ScoreReport from_json(const nlohmann::ordered_json& doc);
};

// Serialized form shared verbatim by the CLI and the HTTP service.
std::string render_report(const ScoreReport& report, bool verbose);

// Scores a valid submission in reference order; throws on an invalid one.
ScoreReport score_submission(const Submission& sub, const Dataset& reference,
                             const ScoreConfigs& configs);

struct LeaderboardEntry {
    std::string participant;
    double avg_best_rank = 0.0;
    std::map<std::string, double> best_ranks; // per metric
    size_t submissions = 0;
    size_t display_rank = 0; // competition (min) ties
};

struct LeaderboardSetup {
    std::string track;
    std::string language; // empty in the pooled view
    std::string arch;     // empty for defmod and pooled
    bool pooled = false;
    std::vector<LeaderboardEntry> entries;
    std::vector<std::string> excluded; // participants missing a metric
};

struct Leaderboard {
    std::vector<LeaderboardSetup> setups;
    nlohmann::ordered_json to_json() const;
};

// Ranks every report per metric (competition ties share the minimum rank),
// takes each participant's best rank per metric and averages. Emits one
// setup per (track, language, arch) plus a pooled per-track view.
Leaderboard build_leaderboard(const std::vector<ScoreReport>& reports);

// Append-only directory of {submission, report} JSON bundles plus a
// rebuildable index. Writes are serialized; reads see consistent snapshots.
class SubmissionStore {
public:
    explicit SubmissionStore(std::string dir);

    bool contains(const std::string& id) const;
    void put(const Submission& sub, const ScoreReport& report);
    std::optional<ScoreReport> report(const std::string& id) const;
    std::vector<ScoreReport> all_reports() const;
    size_t size() const;

private:
    void write_index_locked() const;
    std::string dir_;
    mutable std::mutex mu_;
    std::map<std::string, ScoreReport> reports_;
};

} // namespace codwoe
