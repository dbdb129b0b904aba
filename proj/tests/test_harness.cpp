#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "navlang/harness.hpp"

using namespace navlang;
using namespace navlang::harness;

namespace {

struct GoalSpec {
    std::string type;
    bool success = false;
    bool skipped = false;
};

planner::EpisodeTrace make_trace(const std::vector<GoalSpec>& goals, int actions) {
    planner::EpisodeTrace t;
    for (const auto& g : goals) {
        planner::SubGoalRecord r;
        r.type = g.type;
        r.success = g.success;
        r.skipped = g.skipped;
        t.subgoals.push_back(r);
    }
    for (int i = 0; i < actions; ++i)
        t.actions.push_back(planner::Action::move(planner::ActionKind::MoveAhead));
    return t;
}

const lang::TaggerModel& trained_tagger() {
    static const lang::TaggerModel model = [] {
        auto m = lang::TaggerModel::init();
        lang::TaggerTrainConfig cfg;
        cfg.seed = 5;
        lang::train_tagger(m, lang::generate_corpus(1000, 2024), cfg);
        return m;
    }();
    return model;
}

}  // namespace

TEST_CASE("path weighting follows the expert-over-longer rule", "[harness]") {
    CHECK(path_weight(10, 10) == 1.0);
    CHECK(path_weight(10, 20) == 0.5);
    CHECK(path_weight(10, 5) == 1.0);  // a shorter agent is not rewarded past 1
    CHECK(path_weight(10, 0) == 1.0);
    CHECK(path_weighted(1.0, 10, 20) == 0.5);
    CHECK(path_weighted(0.0, 10, 20) == 0.0);
    CHECK(path_weighted(0.75, 10, 40) == 0.1875);
    CHECK_THROWS_AS(path_weight(0, 5), Error);
    CHECK_THROWS_AS(path_weight(-2, 5), Error);
    CHECK_THROWS_AS(path_weight(5, -1), Error);
}

TEST_CASE("the weight is in (0,1] and non-increasing in agent length", "[harness]") {
    double prev = 1.0;
    for (int agent = 0; agent <= 60; ++agent) {
        const double w = path_weight(17, agent);
        CHECK(w > 0.0);
        CHECK(w <= 1.0);
        CHECK(w <= prev);
        prev = w;
    }
    // Weighting never exceeds the unweighted value.
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        const double value = rng.uniform(0.0, 1.0);
        const int e = rng.uniform_int(1, 40), g = rng.uniform_int(0, 80);
        CHECK(path_weighted(value, e, g) <= value + 1e-15);
    }
}

TEST_CASE("ten fixture traces score to hand-computed values", "[harness]") {
    struct Fixture {
        planner::EpisodeTrace trace;
        int expert;
        int task;
        double goal;
        double weight;
    };
    const std::vector<Fixture> fixtures = {
        // 1. Empty task is vacuously successful.
        {make_trace({}, 0), 5, 1, 1.0, 1.0},
        // 2. Everything succeeds at expert length.
        {make_trace({{"GoTo", true}, {"Pickup", true}, {"GoTo", true}, {"Put", true}}, 10),
         10, 1, 1.0, 1.0},
        // 3. Three of four at double the expert length.
        {make_trace({{"GoTo", true}, {"Pickup", true}, {"GoTo", true}, {"Put", false}}, 20),
         10, 0, 0.75, 0.5},
        // 4. Total failure.
        {make_trace({{"GoTo", false}, {"Pickup", false}, {"GoTo", false}, {"Put", false}}, 16),
         10, 0, 0.0, 0.625},
        // 5. Agent beats the expert; the weight clamps at 1.
        {make_trace({{"Toggle", true}}, 5), 10, 1, 1.0, 1.0},
        // 6. A skipped dependent still counts against task and goal ratio.
        {make_trace({{"GoTo", true}, {"Pickup", false}, {"Put", false, true}}, 8), 8, 0,
         1.0 / 3.0, 1.0},
        // 7. Success at triple the expert length keeps only a third.
        {make_trace({{"GoTo", true}, {"Open", true}, {"Close", true}}, 30), 10, 1, 1.0,
         10.0 / 30.0},
        // 8. Half the goals at expert length.
        {make_trace({{"GoTo", true}, {"Pickup", false}, {"GoTo", true}, {"Put", false}}, 12),
         12, 0, 0.5, 1.0},
        // 9. Single failing goal.
        {make_trace({{"Slice", false}}, 7), 7, 0, 0.0, 1.0},
        // 10. Six of eight at four times the expert length.
        {make_trace({{"GoTo", true}, {"Pickup", true}, {"GoTo", true}, {"Put", true},
                     {"GoTo", true}, {"Pickup", false}, {"GoTo", true}, {"Put", false, true}},
                    40),
         10, 0, 0.75, 0.25},
    };
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
        INFO("fixture " << i + 1);
        const auto& f = fixtures[i];
        const EpisodeMetrics m = score_episode(f.trace, f.expert);
        CHECK(m.task_success == f.task);
        CHECK(m.goal_condition == f.goal);
        CHECK(m.weight == f.weight);
        CHECK(m.weighted_success == f.task * f.weight);
        CHECK(m.weighted_goal == f.goal * f.weight);
        CHECK(task_success(f.trace) == f.task);
        CHECK(goal_condition(f.trace) == f.goal);
    }
}

TEST_CASE("scoring is deterministic given a trace", "[harness]") {
    const auto trace = make_trace({{"GoTo", true}, {"Pickup", false}, {"Put", false, true}}, 9);
    const auto a = score_episode(trace, 6);
    const auto b = score_episode(trace, 6);
    CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("skipped sub-goals leave their type's row untouched", "[harness]") {
    const auto trace = make_trace(
        {{"GoTo", true}, {"Pickup", false}, {"GoTo", true}, {"Put", false, true}}, 10);
    const EpisodeMetrics m = score_episode(trace, 10);
    REQUIRE(m.subgoals.count("GoTo") == 1);
    CHECK(m.subgoals.at("GoTo").attempted == 2);
    CHECK(m.subgoals.at("GoTo").succeeded == 2);
    CHECK(m.subgoals.at("Pickup").attempted == 1);
    CHECK(m.subgoals.at("Pickup").succeeded == 0);
    CHECK(m.subgoals.count("Put") == 0);  // skipped, so never attempted
    CHECK(SubgoalRow{}.rate() == 0.0);
}

TEST_CASE("aggregates are means and tables pool across episodes", "[harness]") {
    std::vector<EpisodeMetrics> eps;
    eps.push_back(score_episode(make_trace({{"GoTo", true}, {"Pickup", true}}, 10), 10));
    eps.push_back(score_episode(make_trace({{"GoTo", false}, {"Pickup", true}}, 20), 10));
    eps.push_back(score_episode(make_trace({{"GoTo", true}}, 10), 10));
    eps.push_back(score_episode(make_trace({{"GoTo", false}}, 40), 10));
    const SuiteMetrics s = aggregate(eps);
    CHECK(s.episodes == 4);
    CHECK(s.task_success == 0.5);
    CHECK(s.goal_condition == 0.625);           // (1 + 0.5 + 1 + 0) / 4
    CHECK(s.weighted_success == 0.5);           // (1 + 0 + 1 + 0) / 4
    CHECK(s.weighted_goal == 0.5625);           // (1 + 0.25 + 1 + 0) / 4
    CHECK(s.subgoals.at("GoTo").attempted == 4);
    CHECK(s.subgoals.at("GoTo").succeeded == 2);
    CHECK(s.subgoals.at("GoTo").rate() == 0.5);
    CHECK(s.subgoals.at("Pickup").attempted == 2);
    CHECK(s.subgoals.at("Pickup").succeeded == 2);
    const SuiteMetrics empty = aggregate({});
    CHECK(empty.episodes == 0);
    CHECK(empty.subgoals.empty());
    CHECK_FALSE(s.table().empty());
    CHECK(s.table().find("GoTo") != std::string::npos);
}

TEST_CASE("suite manifests round-trip through files", "[harness]") {
    SuiteManifest m;
    m.room_seeds = {11, 12};
    m.cluttered = false;
    planner::EpisodeScript e;
    e.room_ref = "1";
    e.start.x = 1.125;
    e.start.z = 0.875;
    e.start.heading = kPi / 2.0;
    e.instructions = {"walk over to the desk", "open the desk"};
    e.expert_action_count = 9;
    m.episodes.push_back(e);
    const std::string path = "harness_manifest_roundtrip.json";
    m.save(path);
    const SuiteManifest back = SuiteManifest::load(path);
    CHECK(back.to_json().dump() == m.to_json().dump());
    std::remove(path.c_str());
    CHECK_THROWS_AS(SuiteManifest::load("no/such/dir/manifest.json"), Error);
}

TEST_CASE("generated suites are deterministic and well-formed", "[harness]") {
    const std::vector<std::uint64_t> seeds = {301, 302};
    planner::PlannerConfig expert;
    const auto a = generate_suite(seeds, false, 6, 99, trained_tagger(), expert);
    const auto b = generate_suite(seeds, false, 6, 99, trained_tagger(), expert);
    CHECK(a.to_json().dump() == b.to_json().dump());
    REQUIRE(a.episodes.size() == 6);
    for (const auto& e : a.episodes) {
        CHECK_FALSE(e.instructions.empty());
        CHECK(e.expert_action_count >= 1);  // the Stop is always emitted
        const int ri = std::stoi(e.room_ref);
        CHECK(ri >= 0);
        CHECK(ri < 2);
    }
    CHECK_THROWS_AS(generate_suite({}, false, 3, 1, trained_tagger(), expert), Error);
    CHECK_THROWS_AS(generate_suite(seeds, false, 0, 1, trained_tagger(), expert), Error);
}

TEST_CASE("replaying a suite with the expert config reproduces expert lengths", "[harness]") {
    const std::vector<std::uint64_t> seeds = {301, 302};
    planner::PlannerConfig cfg;
    const auto manifest = generate_suite(seeds, false, 6, 99, trained_tagger(), cfg);
    const auto rooms = manifest.build_rooms();
    const SuiteReport rep = evaluate_suite(rooms, manifest.episodes, trained_tagger(), cfg, 1);
    REQUIRE(rep.episodes.size() == 6);
    for (const auto& e : rep.episodes) {
        CHECK(e.agent_actions == e.expert_actions);
        CHECK(e.weight == 1.0);
        CHECK(e.safety_violations == 0);
    }
    CHECK(rep.metrics.episodes == 6);
    CHECK(rep.metrics.weighted_success == rep.metrics.task_success);

    // Fan-out across workers returns the identical report.
    const SuiteReport threaded =
        evaluate_suite(rooms, manifest.episodes, trained_tagger(), cfg, 3);
    CHECK(threaded.to_json().dump() == rep.to_json().dump());

    auto broken = manifest.episodes;
    broken[0].room_ref = "7";
    CHECK_THROWS_AS(evaluate_suite(rooms, broken, trained_tagger(), cfg, 1), Error);
}

TEST_CASE("the pipeline report appends the map table when given a model", "[harness]") {
    const std::vector<std::uint64_t> seeds = {301};
    planner::PlannerConfig cfg;
    const auto manifest = generate_suite(seeds, false, 2, 99, trained_tagger(), cfg);
    const auto rooms = manifest.build_rooms();

    const auto bare = full_pipeline_eval(rooms, manifest.episodes, trained_tagger(), cfg);
    CHECK_FALSE(bare.has_mapping);
    CHECK_FALSE(bare.text().empty());
    CHECK(bare.to_json().contains("suite"));
    CHECK_FALSE(bare.to_json().contains("mapping"));

    const auto model = gcn::GcnModel::init({14, 8, 4}, 3);
    const auto samples = gcn::build_mapping_dataset(rooms, 2, 0.0, 17);
    const auto full = full_pipeline_eval(rooms, manifest.episodes, trained_tagger(), cfg,
                                         &model, samples, 2);
    CHECK(full.has_mapping);
    CHECK(full.to_json().contains("mapping"));
    CHECK(full.text().find("Navigable") != std::string::npos);
    CHECK(full.suite.to_json().dump() == bare.suite.to_json().dump());
}
