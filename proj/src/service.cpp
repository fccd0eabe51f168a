#include "codwoe/service.hpp"

#include <fstream>
#include <thread>

#include <httplib.h>

#include "codwoe/error.hpp"

namespace codwoe {

ServiceConfig ServiceConfig::from_json(const nlohmann::json& doc) {
    ServiceConfig cfg;
    cfg.reference_path = doc.at("reference_path").get<std::string>();
    cfg.store_path = doc.at("store_path").get<std::string>();
    cfg.bind = doc.value("bind", cfg.bind);
    if (doc.contains("metrics")) {
        const auto& m = doc["metrics"];
        cfg.embeddings_path = m.value("embeddings_path", "");
        cfg.idf_path = m.value("idf_path", "");
        cfg.epsilon = m.value("epsilon", cfg.epsilon);
        cfg.max_order = m.value("max_order", cfg.max_order);
        cfg.rank_threads = m.value("rank_threads", cfg.rank_threads);
    }
    return cfg;
}

ServiceConfig ServiceConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path + ": malformed JSON: " + e.what());
    }
    return from_json(doc);
}

std::unordered_map<std::string, std::vector<double>> load_embedding_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path + ": malformed JSON: " + e.what());
    }
    if (!doc.is_object()) throw Error(path + ": expected a JSON object token -> number array");
    std::unordered_map<std::string, std::vector<double>> table;
    for (auto it = doc.begin(); it != doc.end(); ++it)
        table[it.key()] = it.value().get<std::vector<double>>();
    return table;
}

std::unordered_map<std::string, double> load_idf_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, true);
    std::unordered_map<std::string, double> idf;
    for (auto it = doc.begin(); it != doc.end(); ++it) idf[it.key()] = it.value().get<double>();
    return idf;
}

ScoreConfigs score_configs_for(const ServiceConfig& cfg) {
    ScoreConfigs configs;
    configs.bleu.max_order = cfg.max_order;
    configs.mover.epsilon = cfg.epsilon;
    configs.rank_threads = cfg.rank_threads;
    if (!cfg.embeddings_path.empty()) {
        configs.mover.embeddings = load_embedding_table(cfg.embeddings_path);
        configs.mover_one_hot = false;
    }
    if (!cfg.idf_path.empty()) configs.mover.idf = load_idf_table(cfg.idf_path);
    return configs;
}

struct HarnessService::Impl {
    httplib::Server server;
    std::thread thread;
};

HarnessService::HarnessService(const ServiceConfig& cfg)
    : cfg_(cfg), reference_(load_dataset(cfg.reference_path)),
      store_(std::make_unique<SubmissionStore>(cfg.store_path)),
      score_configs_(score_configs_for(cfg)), impl_(std::make_unique<Impl>()) {
    install_routes();
}

HarnessService::~HarnessService() { stop(); }

void HarnessService::install_routes() {
    auto& server = impl_->server;

    server.Post("/submissions", [this](const httplib::Request& req, httplib::Response& res) {
        res.set_header("Content-Type", "application/json");
        Submission sub;
        try {
            sub = Submission::from_json(nlohmann::json::parse(req.body));
        } catch (const std::exception& e) {
            res.status = 400;
            res.body = nlohmann::ordered_json{{"error", e.what()}}.dump(2) + "\n";
            return;
        }
        if (store_->contains(sub.id)) {
            res.status = 409;
            res.body = nlohmann::ordered_json{{"error", "duplicate submission id"}, {"id", sub.id}}
                           .dump(2) +
                       "\n";
            return;
        }
        ValidationReport validation = validate_submission(sub, reference_);
        if (!validation.valid()) {
            res.status = 400;
            res.body = validation.to_json().dump(2) + "\n";
            return;
        }
        try {
            ScoreReport report = score_submission(sub, reference_, score_configs_);
            store_->put(sub, report);
            res.status = 200;
            res.body = render_report(report, false);
        } catch (const std::exception& e) {
            res.status = 500;
            res.body = nlohmann::ordered_json{{"error", e.what()}}.dump(2) + "\n";
        }
    });

    server.Get("/leaderboard", [this](const httplib::Request&, httplib::Response& res) {
        res.set_header("Content-Type", "application/json");
        res.body = build_leaderboard(store_->all_reports()).to_json().dump(2) + "\n";
    });

    server.Get(R"(/submissions/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        res.set_header("Content-Type", "application/json");
        auto report = store_->report(req.matches[1]);
        if (!report) {
            res.status = 404;
            res.body = nlohmann::ordered_json{{"error", "unknown submission id"},
                                              {"id", std::string(req.matches[1])}}
                           .dump(2) +
                       "\n";
            return;
        }
        res.body = render_report(*report, true);
    });
}

namespace {

std::pair<std::string, int> split_bind(const std::string& bind) {
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) return {bind, 8080};
    return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

} // namespace

bool HarnessService::run() {
    auto [host, port] = split_bind(cfg_.bind);
    return impl_->server.listen(host, port);
}

int HarnessService::start_for_testing() {
    auto [host, port] = split_bind(cfg_.bind);
    int bound = impl_->server.bind_to_any_port(host);
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HarnessService::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace codwoe
