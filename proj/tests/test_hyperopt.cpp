#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "codwoe/error.hpp"
#include "codwoe/hyperopt.hpp"
#include "codwoe/prng.hpp"

using namespace codwoe;

namespace {

SearchSpace unit_interval() {
    SearchSpace s;
    s.params.push_back({"x", 0.0, 1.0, ParamSpec::Scale::Linear, ParamSpec::Type::Real});
    return s;
}

SearchSpace mixed_space() {
    SearchSpace s;
    s.params.push_back({"lr", 1e-5, 1e-1, ParamSpec::Scale::Log, ParamSpec::Type::Real});
    s.params.push_back({"heads", 1, 8, ParamSpec::Scale::Linear, ParamSpec::Type::Int});
    s.params.push_back({"share", 0, 1, ParamSpec::Scale::Linear, ParamSpec::Type::Bool});
    return s;
}

} // namespace

TEST_CASE("empty history suggests a point inside all bounds") {
    auto space = mixed_space();
    auto point = suggest({}, space, 42);
    REQUIRE(point.size() == 3);
    for (double u : point) {
        CHECK(u >= 0.0);
        CHECK(u <= 1.0);
    }
    auto cfg = denormalize(space, point);
    double lr = cfg["lr"].get<double>();
    CHECK(lr >= 1e-5);
    CHECK(lr <= 1e-1);
    long long heads = cfg["heads"].get<long long>();
    CHECK(heads >= 1);
    CHECK(heads <= 8);
    CHECK(cfg["share"].is_boolean());
}

TEST_CASE("quasi-random initial points are distinct and space filling") {
    auto space = unit_interval();
    std::vector<TrialRecord> history;
    std::vector<double> xs;
    for (int i = 0; i < 10; ++i) {
        auto p = suggest(history, space, 7);
        xs.push_back(p[0]);
        history.push_back({p, 1.0, false, {}});
    }
    std::sort(xs.begin(), xs.end());
    for (size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] - xs[i - 1] > 1e-6);
    // Coverage: the 10 points leave no gap wider than half the interval.
    double max_gap = xs.front() + (1.0 - xs.back());
    for (size_t i = 1; i < xs.size(); ++i) max_gap = std::max(max_gap, xs[i] - xs[i - 1]);
    CHECK(max_gap < 0.5);
}

TEST_CASE("GP fit survives duplicated observations") {
    auto space = unit_interval();
    std::vector<TrialRecord> history;
    for (int i = 0; i < 12; ++i) history.push_back({{0.4}, 2.0, false, {}});
    auto p = suggest(history, space, 3);
    REQUIRE(p.size() == 1);
    CHECK(p[0] >= 0.0);
    CHECK(p[0] <= 1.0);
}

TEST_CASE("GP posterior interpolates noiseless training points") {
    SplitMix64 rng(5);
    std::vector<std::vector<double>> points;
    std::vector<double> values;
    for (int i = 0; i < 12; ++i) {
        double x = rng.uniform01();
        points.push_back({x});
        values.push_back(std::sin(5.0 * x) + 2.0);
    }
    GaussianProcess gp;
    gp.fit(points, values);
    for (size_t i = 0; i < points.size(); ++i) {
        auto post = gp.predict(points[i]);
        CHECK(std::fabs(post.mean - values[i]) <= 1e-4);
    }
}

TEST_CASE("EI is about zero at the noiseless incumbent and nonnegative everywhere") {
    SplitMix64 rng(6);
    std::vector<std::vector<double>> points;
    std::vector<double> values;
    for (int i = 0; i < 10; ++i) {
        double x = 0.05 + 0.9 * rng.uniform01();
        points.push_back({x});
        values.push_back((x - 0.3) * (x - 0.3));
    }
    GaussianProcess gp;
    gp.fit(points, values);
    size_t best = 0;
    for (size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    CHECK(gp.expected_improvement(points[best]) <= 1e-6);
    for (int c = 0; c < 200; ++c) CHECK(gp.expected_improvement({rng.uniform01()}) >= 0.0);
}

TEST_CASE("optimize on a 1-d quadratic beats random search") {
    auto space = unit_interval();
    std::vector<double> bo_best, rs_best;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        auto best = optimize(
            [](const nlohmann::ordered_json& cfg) {
                double x = cfg.at("x").get<double>();
                return (x - 0.3) * (x - 0.3);
            },
            space, 30, 10, seed);
        bo_best.push_back(std::fabs(best.config.at("x").get<double>() - 0.3));

        // Pure random search on the same seed and budget.
        SplitMix64 rng(seed);
        double rbest = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 30; ++i) rbest = std::min(rbest, std::fabs(rng.uniform01() - 0.3));
        rs_best.push_back(rbest);
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    };
    double bo = median(bo_best);
    double rs = median(rs_best);
    CHECK(bo <= 0.05);
    CHECK(bo < rs);
}

TEST_CASE("constant objective still returns a valid record") {
    auto space = unit_interval();
    auto best = optimize([](const nlohmann::ordered_json&) { return 1.0; }, space, 15, 5, 9);
    CHECK(best.objective == 1.0);
    CHECK(best.point[0] >= 0.0);
    CHECK(best.point[0] <= 1.0);
}

TEST_CASE("budget equal to init count never fits a GP") {
    auto space = unit_interval();
    size_t calls = 0;
    auto best = optimize(
        [&](const nlohmann::ordered_json& cfg) {
            ++calls;
            double x = cfg.at("x").get<double>();
            return x * x;
        },
        space, 10, 10, 4);
    CHECK(calls == 10);
    CHECK(best.objective >= 0.0);
}

TEST_CASE("integrality and bounds hold after denormalization for every suggestion") {
    auto space = mixed_space();
    std::vector<TrialRecord> history;
    SplitMix64 noise(2);
    for (int i = 0; i < 25; ++i) {
        auto p = suggest(history, space, 11);
        auto cfg = denormalize(space, p);
        double lr = cfg["lr"].get<double>();
        CHECK(lr >= 1e-5);
        CHECK(lr <= 1e-1);
        long long heads = cfg["heads"].get<long long>();
        CHECK(heads >= 1);
        CHECK(heads <= 8);
        // The recorded point must be the snapped representative.
        CHECK(p == snap_point(space, p));
        history.push_back({p, noise.normal(), false, cfg});
    }
}

TEST_CASE("failed trials are penalized, not fatal") {
    auto space = unit_interval();
    size_t calls = 0;
    auto best = optimize(
        [&](const nlohmann::ordered_json& cfg) {
            ++calls;
            double x = cfg.at("x").get<double>();
            if (calls % 3 == 0) return std::numeric_limits<double>::quiet_NaN();
            return (x - 0.5) * (x - 0.5);
        },
        space, 12, 4, 8);
    CHECK(calls == 12);
    CHECK(std::isfinite(best.objective));
    CHECK(!best.failed);
}

TEST_CASE("degenerate spaces are rejected") {
    SearchSpace empty;
    CHECK_THROWS_AS(suggest({}, empty, 1), Error);
    SearchSpace bad;
    bad.params.push_back({"x", 2.0, 1.0, ParamSpec::Scale::Linear, ParamSpec::Type::Real});
    CHECK_THROWS_AS(suggest({}, bad, 1), Error);
    SearchSpace neg_log;
    neg_log.params.push_back({"x", -1.0, 1.0, ParamSpec::Scale::Log, ParamSpec::Type::Real});
    CHECK_THROWS_AS(suggest({}, neg_log, 1), Error);
}

TEST_CASE("trial log round trips through JSON") {
    auto space = mixed_space();
    std::vector<TrialRecord> history;
    optimize([](const nlohmann::ordered_json&) { return 0.5; }, space, 6, 3, 13, &history);
    auto doc = trials_to_json(history);
    auto back = trials_from_json(doc);
    REQUIRE(back.size() == history.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].point == history[i].point);
        CHECK(back[i].objective == history[i].objective);
    }
    // Resume: extend the same history to a larger budget.
    optimize([](const nlohmann::ordered_json&) { return 0.25; }, space, 9, 3, 13, &back);
    CHECK(back.size() == 9);
}
