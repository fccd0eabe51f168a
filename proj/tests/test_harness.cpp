#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include <httplib.h>

#include "codwoe/error.hpp"
#include "codwoe/harness.hpp"
#include "codwoe/prng.hpp"
#include "codwoe/service.hpp"

using namespace codwoe;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> small_vocab() {
    return {"stone", "water", "light", "sound", "metal", "cloth"};
}

Dataset reference_fixture(uint64_t seed = 42, size_t n = 12) {
    return gen_synthetic(seed, n, 6, small_vocab(), "en");
}

Submission perfect_revdict(const Dataset& ref) {
    Submission sub;
    sub.id = "alice-1";
    sub.participant = "alice";
    sub.track = "revdict";
    sub.language = "en";
    sub.arch = "sgns";
    sub.timestamp = "1";
    for (const auto& dp : ref.items)
        sub.items.emplace_back(dp.id, json(dp.embeddings.at(ArchTag::Sgns)));
    return sub;
}

Submission perfect_defmod(const Dataset& ref, const std::string& participant = "alice") {
    Submission sub;
    sub.id = participant + "-defmod-1";
    sub.participant = participant;
    sub.track = "defmod";
    sub.language = "en";
    sub.timestamp = "1";
    for (const auto& dp : ref.items) sub.items.emplace_back(dp.id, json(dp.gloss));
    return sub;
}

ScoreReport fake_report(const std::string& participant, const std::string& track,
                        std::vector<std::pair<std::string, double>> aggregates,
                        const std::string& id_suffix = "1") {
    ScoreReport r;
    r.submission_id = participant + "-" + id_suffix;
    r.participant = participant;
    r.track = track;
    r.language = "en";
    if (track == "revdict") r.arch = "sgns";
    r.aggregates = std::move(aggregates);
    return r;
}

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& name) : path("tmp_" + name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("complete well-formed submission validates cleanly") {
    Dataset ref = reference_fixture();
    CHECK(validate_submission(perfect_revdict(ref), ref).valid());
    CHECK(validate_submission(perfect_defmod(ref), ref).valid());
}

TEST_CASE("missing ids are listed exactly") {
    Dataset ref = reference_fixture();
    Submission sub = perfect_revdict(ref);
    std::set<std::string> dropped{ref.items[2].id, ref.items[5].id, ref.items[9].id};
    std::erase_if(sub.items, [&](const auto& kv) { return dropped.count(kv.first) > 0; });
    auto report = validate_submission(sub, ref);
    CHECK(!report.valid());
    CHECK(std::set<std::string>(report.missing_ids.begin(), report.missing_ids.end()) == dropped);
    CHECK(report.extra_ids.empty());
}

TEST_CASE("extra ids, type errors and dimension errors are reported by id") {
    Dataset ref = reference_fixture();
    Submission sub = perfect_revdict(ref);
    sub.items.emplace_back("en.999", json::array({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
    sub.items[0].second = json("not a vector");
    sub.items[1].second = json::array({1.0, 2.0}); // wrong dimension
    auto report = validate_submission(sub, ref);
    REQUIRE(report.extra_ids.size() == 1);
    CHECK(report.extra_ids[0] == "en.999");
    REQUIRE(report.type_errors.size() == 1);
    CHECK(report.type_errors[0].find(ref.items[0].id) != std::string::npos);
    REQUIRE(report.dimension_errors.size() == 1);
    CHECK(report.dimension_errors[0].find(ref.items[1].id) != std::string::npos);
}

TEST_CASE("revdict identity submission scores mse 0, cosine 1, rank 0") {
    Dataset ref = reference_fixture();
    ScoreReport report = score_submission(perfect_revdict(ref), ref, {});
    CHECK(*report.aggregate("mse") == 0.0);
    CHECK(*report.aggregate("cosine") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*report.aggregate("rank") == 0.0);
}

TEST_CASE("defmod identity submission scores 1 across the board") {
    Dataset ref = reference_fixture();
    ScoreReport report = score_submission(perfect_defmod(ref), ref, {});
    CHECK(*report.aggregate("sense_bleu") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(*report.aggregate("lemma_bleu") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(*report.aggregate("mover_sim") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.flags.mover_table == "one-hot");
}

TEST_CASE("random revdict submissions score near-chance mean rank") {
    Dataset ref = gen_synthetic(7, 500, 16, small_vocab(), "en", {ArchTag::Sgns});
    Submission sub;
    sub.id = "rnd-1";
    sub.participant = "rnd";
    sub.track = "revdict";
    sub.language = "en";
    sub.arch = "sgns";
    SplitMix64 rng(1234);
    for (const auto& dp : ref.items) {
        std::vector<double> v(16);
        for (double& x : v) x = rng.normal();
        sub.items.emplace_back(dp.id, json(v));
    }
    ScoreReport report = score_submission(sub, ref, {});
    CHECK(*report.aggregate("rank") > 0.45);
    CHECK(*report.aggregate("rank") < 0.55);
}

TEST_CASE("scoring an invalid submission throws") {
    Dataset ref = reference_fixture();
    Submission sub = perfect_revdict(ref);
    sub.items.pop_back();
    CHECK_THROWS_AS(score_submission(sub, ref, {}), Error);
}

TEST_CASE("single participant leads a one-entry leaderboard at rank 1") {
    auto board = build_leaderboard(
        {fake_report("solo", "revdict", {{"mse", 0.5}, {"cosine", 0.5}, {"rank", 0.3}})});
    REQUIRE(board.setups.size() == 2); // the setup itself plus the pooled view
    for (const auto& setup : board.setups) {
        REQUIRE(setup.entries.size() == 1);
        CHECK(setup.entries[0].avg_best_rank == 1.0);
        CHECK(setup.entries[0].display_rank == 1);
    }
}

TEST_CASE("dominance: A beats B on every metric") {
    auto board = build_leaderboard({
        fake_report("A", "revdict", {{"mse", 0.1}, {"cosine", 0.9}, {"rank", 0.1}}),
        fake_report("B", "revdict", {{"mse", 0.5}, {"cosine", 0.4}, {"rank", 0.4}}),
    });
    const auto& entries = board.setups[0].entries;
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].participant == "A");
    CHECK(entries[0].avg_best_rank == 1.0);
    CHECK(entries[1].participant == "B");
    CHECK(entries[1].avg_best_rank == 2.0);
}

TEST_CASE("cyclic dominance ties everyone at 2.0") {
    // Best ranks per metric after best-selection: A (1,2,3), B (2,3,1),
    // C (3,1,2) -> all average 2.0.
    auto board = build_leaderboard({
        fake_report("A", "revdict", {{"mse", 0.1}, {"cosine", 0.8}, {"rank", 0.3}}),
        fake_report("B", "revdict", {{"mse", 0.2}, {"cosine", 0.7}, {"rank", 0.1}}),
        fake_report("C", "revdict", {{"mse", 0.3}, {"cosine", 0.9}, {"rank", 0.2}}),
    });
    const auto& entries = board.setups[0].entries;
    REQUIRE(entries.size() == 3);
    for (const auto& e : entries) {
        CHECK(e.avg_best_rank == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(e.display_rank == 1); // three-way tie shares the minimum rank
    }
}

TEST_CASE("ties share the minimum rank and the next rank skips") {
    auto board = build_leaderboard({
        fake_report("A", "revdict", {{"mse", 0.1}, {"cosine", 0.9}, {"rank", 0.1}}, "1"),
        fake_report("B", "revdict", {{"mse", 0.1}, {"cosine", 0.9}, {"rank", 0.1}}, "1"),
        fake_report("C", "revdict", {{"mse", 0.9}, {"cosine", 0.1}, {"rank", 0.9}}, "1"),
    });
    const auto& entries = board.setups[0].entries;
    REQUIRE(entries.size() == 3);
    CHECK(entries[0].avg_best_rank == 1.0); // A and B tie at metric rank 1
    CHECK(entries[1].avg_best_rank == 1.0);
    CHECK(entries[2].participant == "C");
    CHECK(entries[2].avg_best_rank == 3.0); // 1-1-3 competition ranking
    CHECK(entries[2].display_rank == 3);
}

TEST_CASE("best submission per participant is selected per metric") {
    auto board = build_leaderboard({
        fake_report("A", "revdict", {{"mse", 0.5}, {"cosine", 0.2}, {"rank", 0.4}}, "1"),
        fake_report("A", "revdict", {{"mse", 0.9}, {"cosine", 0.9}, {"rank", 0.9}}, "2"),
        fake_report("B", "revdict", {{"mse", 0.6}, {"cosine", 0.5}, {"rank", 0.5}}, "1"),
    });
    const auto& entries = board.setups[0].entries;
    REQUIRE(entries.size() == 2);
    // A's composite takes mse/cosine... from its better submissions: ranks 1,1,1.
    CHECK(entries[0].participant == "A");
    CHECK(entries[0].avg_best_rank == 1.0);
    CHECK(entries[0].submissions == 2);
}

TEST_CASE("leaderboard is invariant to report order") {
    std::vector<ScoreReport> reports{
        fake_report("A", "defmod", {{"sense_bleu", 0.3}, {"lemma_bleu", 0.4}, {"mover_sim", 0.5}}),
        fake_report("B", "defmod", {{"sense_bleu", 0.2}, {"lemma_bleu", 0.6}, {"mover_sim", 0.4}}),
        fake_report("C", "defmod", {{"sense_bleu", 0.5}, {"lemma_bleu", 0.2}, {"mover_sim", 0.6}}),
    };
    auto a = build_leaderboard(reports).to_json().dump();
    std::reverse(reports.begin(), reports.end());
    auto b = build_leaderboard(reports).to_json().dump();
    CHECK(a == b);
}

TEST_CASE("pooled view ranks across languages, per-setup views stay separate") {
    auto en = fake_report("A", "revdict", {{"mse", 0.2}, {"cosine", 0.8}, {"rank", 0.2}});
    auto fr = fake_report("B", "revdict", {{"mse", 0.1}, {"cosine", 0.9}, {"rank", 0.1}});
    fr.language = "fr";
    auto board = build_leaderboard({en, fr});

    size_t per_setup = 0, pooled = 0;
    for (const auto& setup : board.setups) {
        if (!setup.pooled) {
            ++per_setup;
            // Each language setup sees only its own participant.
            REQUIRE(setup.entries.size() == 1);
            CHECK(setup.entries[0].avg_best_rank == 1.0);
        } else {
            ++pooled;
            REQUIRE(setup.entries.size() == 2);
            CHECK(setup.entries[0].participant == "B"); // dominates when pooled
            CHECK(setup.entries[0].avg_best_rank == 1.0);
            CHECK(setup.entries[1].avg_best_rank == 2.0);
        }
    }
    CHECK(per_setup == 2);
    CHECK(pooled == 1);
}

TEST_CASE("participants missing a metric are excluded and reported") {
    auto incomplete = fake_report("L", "defmod", {{"sense_bleu", 0.9}, {"lemma_bleu", 0.9}});
    auto full =
        fake_report("F", "defmod", {{"sense_bleu", 0.1}, {"lemma_bleu", 0.1}, {"mover_sim", 0.1}});
    auto board = build_leaderboard({incomplete, full});
    const auto& setup = board.setups[0];
    REQUIRE(setup.entries.size() == 1);
    CHECK(setup.entries[0].participant == "F");
    REQUIRE(setup.excluded.size() == 1);
    CHECK(setup.excluded[0] == "L");
}

TEST_CASE("store persists, rejects duplicates, survives restart") {
    TempDir dir("store_test");
    Dataset ref = reference_fixture();
    Submission sub = perfect_revdict(ref);
    ScoreReport report = score_submission(sub, ref, {});
    std::string board_before;
    {
        SubmissionStore store(dir.path);
        store.put(sub, report);
        CHECK(store.contains("alice-1"));
        CHECK_THROWS_AS(store.put(sub, report), Error);
        board_before = build_leaderboard(store.all_reports()).to_json().dump(2);
    }
    {
        SubmissionStore reopened(dir.path);
        CHECK(reopened.size() == 1);
        REQUIRE(reopened.report("alice-1").has_value());
        CHECK(reopened.report("alice-1")->aggregates == report.aggregates);
        CHECK(build_leaderboard(reopened.all_reports()).to_json().dump(2) == board_before);
    }
}

TEST_CASE("service scores exactly like the offline pipeline") {
    TempDir dir("service_test");
    Dataset ref = reference_fixture();
    save_dataset(ref, dir.path + "/reference.json");

    ServiceConfig cfg;
    cfg.reference_path = dir.path + "/reference.json";
    cfg.store_path = dir.path + "/store";
    cfg.bind = "127.0.0.1:0";
    HarnessService service(cfg);
    int port = service.start_for_testing();
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);

    Submission sub = perfect_defmod(ref);
    auto res = client.Post("/submissions", sub.to_json().dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);

    // Byte-for-byte equality with offline scoring.
    Dataset offline_ref = load_dataset(cfg.reference_path);
    ScoreReport offline = score_submission(sub, offline_ref, score_configs_for(cfg));
    CHECK(res->body == render_report(offline, false));

    SUBCASE("duplicate id returns 409") {
        auto dup = client.Post("/submissions", sub.to_json().dump(), "application/json");
        REQUIRE(dup);
        CHECK(dup->status == 409);
    }
    SUBCASE("missing ids return 400 with the exact list") {
        Submission partial = perfect_defmod(ref, "bob");
        partial.items.erase(partial.items.begin(), partial.items.begin() + 2);
        auto bad = client.Post("/submissions", partial.to_json().dump(), "application/json");
        REQUIRE(bad);
        CHECK(bad->status == 400);
        auto body = json::parse(bad->body);
        CHECK(body["missing_ids"].size() == 2);
        CHECK(body["missing_ids"][0] == ref.items[0].id);
    }
    SUBCASE("stored reports are retrievable; unknown ids 404") {
        auto got = client.Get("/submissions/alice-defmod-1");
        REQUIRE(got);
        CHECK(got->status == 200);
        CHECK(json::parse(got->body)["participant"] == "alice");
        auto missing = client.Get("/submissions/nobody-9");
        REQUIRE(missing);
        CHECK(missing->status == 404);
    }
    SUBCASE("leaderboard endpoint matches build_leaderboard on stored reports") {
        Submission second = perfect_revdict(ref);
        auto r2 = client.Post("/submissions", second.to_json().dump(), "application/json");
        REQUIRE(r2);
        CHECK(r2->status == 200);
        auto got = client.Get("/leaderboard");
        REQUIRE(got);
        CHECK(got->status == 200);
        auto expected = build_leaderboard(service.store().all_reports()).to_json().dump(2) + "\n";
        CHECK(got->body == expected);
    }
    service.stop();
}

TEST_CASE("concurrent submissions are all scored and stored") {
    TempDir dir("concurrent_test");
    Dataset ref = reference_fixture();
    save_dataset(ref, dir.path + "/reference.json");
    ServiceConfig cfg;
    cfg.reference_path = dir.path + "/reference.json";
    cfg.store_path = dir.path + "/store";
    cfg.bind = "127.0.0.1:0";
    HarnessService service(cfg);
    int port = service.start_for_testing();

    std::vector<std::thread> posters;
    std::vector<int> statuses(6, 0);
    for (int k = 0; k < 6; ++k) {
        posters.emplace_back([&, k] {
            Submission sub = perfect_defmod(ref, "team" + std::to_string(k));
            httplib::Client client("127.0.0.1", port);
            auto res = client.Post("/submissions", sub.to_json().dump(), "application/json");
            statuses[k] = res ? res->status : -1;
        });
    }
    for (auto& t : posters) t.join();
    for (int s : statuses) CHECK(s == 200);
    CHECK(service.store().size() == 6);
    auto board = build_leaderboard(service.store().all_reports());
    bool found = false;
    for (const auto& setup : board.setups)
        if (!setup.pooled) {
            CHECK(setup.entries.size() == 6);
            found = true;
        }
    CHECK(found);
    service.stop();
}

TEST_CASE("service store survives a restart with the leaderboard unchanged") {
    TempDir dir("restart_test");
    Dataset ref = reference_fixture();
    save_dataset(ref, dir.path + "/reference.json");
    ServiceConfig cfg;
    cfg.reference_path = dir.path + "/reference.json";
    cfg.store_path = dir.path + "/store";
    cfg.bind = "127.0.0.1:0";

    std::string board_before;
    {
        HarnessService service(cfg);
        int port = service.start_for_testing();
        httplib::Client client("127.0.0.1", port);
        client.Post("/submissions", perfect_defmod(ref).to_json().dump(), "application/json");
        client.Post("/submissions", perfect_revdict(ref).to_json().dump(), "application/json");
        auto got = client.Get("/leaderboard");
        REQUIRE(got);
        board_before = got->body;
        service.stop();
    }
    {
        HarnessService service(cfg);
        int port = service.start_for_testing();
        httplib::Client client("127.0.0.1", port);
        auto got = client.Get("/leaderboard");
        REQUIRE(got);
        CHECK(got->body == board_before);
        service.stop();
    }
}
