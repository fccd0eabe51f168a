#pragma once

#include <memory>
#include <string>

#include "codwoe/harness.hpp"

namespace codwoe {

// Scoring service configuration, loaded from a JSON file with keys
// reference_path, store_path, bind and an optional metrics object
// {embeddings_path, idf_path, epsilon, max_order, rank_threads}.
struct ServiceConfig {
    std::string reference_path;
    std::string store_path;
    std::string bind = "127.0.0.1:8080";
    std::string embeddings_path; // empty: one-hot mover fallback
    std::string idf_path;
    double epsilon = 0.01;
    int max_order = 4;
    unsigned rank_threads = 1;

    static ServiceConfig from_json(const nlohmann::json& doc);
    static ServiceConfig load(const std::string& path);
};

std::unordered_map<std::string, std::vector<double>> load_embedding_table(const std::string& path);
std::unordered_map<std::string, double> load_idf_table(const std::string& path);
ScoreConfigs score_configs_for(const ServiceConfig& cfg);

// HTTP front end over the scoring pipeline:
//   POST /submissions       validate, score, persist; the ScoreReport body
//                           is byte-identical to offline CLI scoring
//   GET  /leaderboard       leaderboard over every stored report
//   GET  /submissions/<id>  one stored report
// 400 carries the ValidationReport; 409 flags a duplicate id; 404 an
// unknown one. The hidden reference is loaded at startup and never served.
class HarnessService {
public:
    explicit HarnessService(const ServiceConfig& cfg);
    ~HarnessService();

    // Serves until stop(); returns false if binding failed.
    bool run();
    // Binds to an ephemeral port and serves on a background thread.
    int start_for_testing();
    void stop();

    const Dataset& reference() const { return reference_; }
    SubmissionStore& store() { return *store_; }

private:
    struct Impl;
    void install_routes();
    ServiceConfig cfg_;
    Dataset reference_;
    std::unique_ptr<SubmissionStore> store_;
    ScoreConfigs score_configs_;
    std::unique_ptr<Impl> impl_;
};

} // namespace codwoe
