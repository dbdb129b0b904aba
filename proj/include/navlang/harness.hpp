#pragma once

// Episode scoring and suite evaluation: the binary task metric, the
// goal-condition ratio, their path-weighted variants, per-sub-goal success
// tables, and the plumbing that runs scripted episode suites (optionally
// across worker threads) and formats the reports.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "navlang/gcnfilter.hpp"
#include "navlang/planner.hpp"

namespace navlang::harness {

// Path-length discount: the expert count over the longer of the two paths.
// An agent shorter than the expert is not rewarded beyond 1.
inline double path_weight(int expert_actions, int agent_actions) {
    if (expert_actions <= 0) throw Error("expert action count must be positive");
    if (agent_actions < 0) throw Error("agent action count cannot be negative");
    return static_cast<double>(expert_actions) / std::max(expert_actions, agent_actions);
}

inline double path_weighted(double value, int expert_actions, int agent_actions) {
    return value * path_weight(expert_actions, agent_actions);
}

struct SubgoalRow {
    int attempted = 0;
    int succeeded = 0;
    double rate() const { return attempted > 0 ? static_cast<double>(succeeded) / attempted : 0.0; }
};

// Keyed by sub-goal type name (GoTo, Pickup, Put, ...). Sub-goals skipped
// because an earlier dependency failed are excluded from their type's row;
// they still count against the task and goal-condition metrics.
using SubgoalTable = std::map<std::string, SubgoalRow>;

struct EpisodeMetrics {
    int task_success = 1;        // 1 iff every sub-goal succeeded (vacuously 1)
    double goal_condition = 1.0; // achieved sub-goals / all sub-goals
    double weight = 1.0;         // expert / max(expert, agent)
    double weighted_success = 1.0;
    double weighted_goal = 1.0;
    int agent_actions = 0;
    int expert_actions = 0;
    int collisions = 0;
    int safety_violations = 0;
    SubgoalTable subgoals;

    json to_json() const {
        json table = json::object();
        for (const auto& [type, row] : subgoals)
            table[type] = {{"attempted", row.attempted}, {"succeeded", row.succeeded}};
        return json{{"task_success", task_success},
                    {"goal_condition", goal_condition},
                    {"weight", weight},
                    {"weighted_success", weighted_success},
                    {"weighted_goal", weighted_goal},
                    {"agent_actions", agent_actions},
                    {"expert_actions", expert_actions},
                    {"collisions", collisions},
                    {"safety_violations", safety_violations},
                    {"subgoals", table}};
    }
};

inline int task_success(const planner::EpisodeTrace& trace) {
    for (const auto& g : trace.subgoals)
        if (!g.success) return 0;
    return 1;
}

inline double goal_condition(const planner::EpisodeTrace& trace) {
    if (trace.subgoals.empty()) return 1.0;
    int hit = 0;
    for (const auto& g : trace.subgoals) hit += g.success ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(trace.subgoals.size());
}

inline EpisodeMetrics score_episode(const planner::EpisodeTrace& trace, int expert_actions) {
    EpisodeMetrics m;
    m.task_success = task_success(trace);
    m.goal_condition = goal_condition(trace);
    m.agent_actions = trace.action_count();
    m.expert_actions = expert_actions;
    m.weight = path_weight(expert_actions, m.agent_actions);
    m.weighted_success = path_weighted(m.task_success, expert_actions, m.agent_actions);
    m.weighted_goal = path_weighted(m.goal_condition, expert_actions, m.agent_actions);
    m.collisions = trace.collisions;
    m.safety_violations = trace.safety_violations;
    for (const auto& g : trace.subgoals) {
        if (g.skipped) continue;
        auto& row = m.subgoals[g.type];
        row.attempted += 1;
        row.succeeded += g.success ? 1 : 0;
    }
    return m;
}

struct SuiteMetrics {
    int episodes = 0;
    double task_success = 0.0;  // means over episodes
    double goal_condition = 0.0;
    double weighted_success = 0.0;
    double weighted_goal = 0.0;
    int collisions = 0;  // totals
    int safety_violations = 0;
    SubgoalTable subgoals;  // pooled attempts across episodes

    json to_json() const {
        json table = json::object();
        for (const auto& [type, row] : subgoals)
            table[type] = {{"attempted", row.attempted},
                           {"succeeded", row.succeeded},
                           {"rate", row.rate()}};
        return json{{"episodes", episodes},
                    {"task_success", task_success},
                    {"goal_condition", goal_condition},
                    {"weighted_success", weighted_success},
                    {"weighted_goal", weighted_goal},
                    {"collisions", collisions},
                    {"safety_violations", safety_violations},
                    {"subgoals", table}};
    }

    std::string table() const {
        std::ostringstream out;
        out.setf(std::ios::fixed);
        out.precision(3);
        out << "episodes           " << episodes << "\n"
            << "task success       " << task_success << "\n"
            << "goal condition     " << goal_condition << "\n"
            << "weighted success   " << weighted_success << "\n"
            << "weighted goal      " << weighted_goal << "\n"
            << "collisions         " << collisions << "\n"
            << "safety violations  " << safety_violations << "\n";
        out << "sub-goal     attempted  succeeded   rate\n";
        for (const auto& [type, row] : subgoals) {
            out << type;
            for (std::size_t i = type.size(); i < 13; ++i) out << ' ';
            out.width(9);
            out << row.attempted;
            out.width(11);
            out << row.succeeded << "  " << row.rate() << "\n";
        }
        return out.str();
    }
};

inline SuiteMetrics aggregate(const std::vector<EpisodeMetrics>& episodes) {
    SuiteMetrics s;
    s.episodes = static_cast<int>(episodes.size());
    if (episodes.empty()) return s;
    for (const auto& e : episodes) {
        s.task_success += e.task_success;
        s.goal_condition += e.goal_condition;
        s.weighted_success += e.weighted_success;
        s.weighted_goal += e.weighted_goal;
        s.collisions += e.collisions;
        s.safety_violations += e.safety_violations;
        for (const auto& [type, row] : e.subgoals) {
            auto& pooled = s.subgoals[type];
            pooled.attempted += row.attempted;
            pooled.succeeded += row.succeeded;
        }
    }
    const double n = static_cast<double>(s.episodes);
    s.task_success /= n;
    s.goal_condition /= n;
    s.weighted_success /= n;
    s.weighted_goal /= n;
    return s;
}

// ---------------------------------------------------------------------------
// Episode suite: scripted multi-sub-goal tasks over a fixed room set. A
// manifest carries the room seeds and the scripts so a suite can be saved,
// reloaded, and re-run bit-identically.

struct SuiteManifest {
    std::vector<std::uint64_t> room_seeds;
    bool cluttered = true;
    std::vector<planner::EpisodeScript> episodes;

    std::vector<simworld::Room> build_rooms() const {
        const simworld::RoomGenConfig cfg =
            cluttered ? simworld::RoomGenConfig::cluttered() : simworld::RoomGenConfig{};
        std::vector<simworld::Room> rooms;
        rooms.reserve(room_seeds.size());
        for (const std::uint64_t seed : room_seeds)
            rooms.push_back(simworld::generate_room(seed, cfg));
        return rooms;
    }

    json to_json() const {
        json eps = json::array();
        for (const auto& e : episodes) eps.push_back(e.to_json());
        return json{{"room_seeds", room_seeds}, {"cluttered", cluttered}, {"episodes", eps}};
    }

    static SuiteManifest from_json(const json& j) {
        SuiteManifest m;
        for (const auto& s : j.at("room_seeds")) m.room_seeds.push_back(s.get<std::uint64_t>());
        m.cluttered = j.value("cluttered", true);
        for (const auto& e : j.at("episodes"))
            m.episodes.push_back(planner::EpisodeScript::from_json(e));
        return m;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot write " + path);
        out << to_json().dump(2) << "\n";
    }

    static SuiteManifest load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot read " + path);
        return from_json(json::parse(in));
    }
};

namespace detail {

// Distinct class names present in a room that satisfy a flag predicate,
// in first-appearance order.
template <typename Pred>
std::vector<std::string> present_classes(const simworld::Room& room, Pred pred) {
    std::vector<std::string> names;
    for (const auto& o : room.objects) {
        const auto& info = simworld::class_info(o.class_id);
        if (!pred(info)) continue;
        if (std::find(names.begin(), names.end(), info.name) == names.end())
            names.push_back(info.name);
    }
    return names;
}

// Class names whose every instance can be approached from `start`: breadth
// first search over navigable cells, an instance counting as reached when a
// visited cell is 4-adjacent to its footprint. The planner always walks to
// the nearest instance of a named class, so one stranded instance makes the
// whole class unusable in a script.
inline std::vector<std::string> reachable_classes(const simworld::Room& room,
                                                  const simworld::AgentPose& start) {
    const auto [sx, sz] = room.cell_of(start.pos());
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(room.nx) * room.nz, 0);
    std::vector<std::pair<int, int>> queue;
    if (room.navigable(sx, sz)) {
        seen[static_cast<std::size_t>(sz) * room.nx + sx] = 1;
        queue.push_back({sx, sz});
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto [cx, cz] = queue[head];
        const int dx[4] = {1, -1, 0, 0}, dz[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int nx2 = cx + dx[d], nz2 = cz + dz[d];
            if (!room.navigable(nx2, nz2)) continue;
            auto& mark = seen[static_cast<std::size_t>(nz2) * room.nx + nx2];
            if (mark) continue;
            mark = 1;
            queue.push_back({nx2, nz2});
        }
    }
    const auto adjacent_reached = [&](const Rect& footprint) {
        for (const auto& [cx, cz] : queue) {
            const int dx[4] = {1, -1, 0, 0}, dz[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const int nx2 = cx + dx[d], nz2 = cz + dz[d];
                if (!room.cell_in_bounds(nx2, nz2)) continue;
                if (room.cell_rect(nx2, nz2).overlaps(footprint)) return true;
            }
        }
        return false;
    };
    std::vector<std::string> names;
    std::vector<std::string> stranded;
    for (const auto& o : room.objects) {
        const std::string& name = simworld::class_info(o.class_id).name;
        auto& bucket = adjacent_reached(o.footprint) ? names : stranded;
        if (std::find(bucket.begin(), bucket.end(), name) == bucket.end())
            bucket.push_back(name);
    }
    std::vector<std::string> usable;
    for (const auto& n : names)
        if (std::find(stranded.begin(), stranded.end(), n) == stranded.end())
            usable.push_back(n);
    return usable;
}

}  // namespace detail

// Builds instruction scripts from what each room actually contains. Episode
// flavors cycle through toggle, pick-and-place, open-close, and a two-object
// stack-and-place; rooms missing the needed affordance fall back to
// pick-and-place, then to plain navigation.
inline SuiteManifest generate_suite(const std::vector<std::uint64_t>& room_seeds, bool cluttered,
                                    int episode_count, std::uint64_t seed,
                                    const lang::TaggerModel& tagger,
                                    const planner::PlannerConfig& expert_cfg) {
    if (room_seeds.empty()) throw Error("suite needs at least one room");
    if (episode_count <= 0) throw Error("suite needs at least one episode");
    SuiteManifest manifest;
    manifest.room_seeds = room_seeds;
    manifest.cluttered = cluttered;
    const auto rooms = manifest.build_rooms();
    Rng rng(seed);
    for (int i = 0; i < episode_count; ++i) {
        const std::size_t ri = static_cast<std::size_t>(i) % rooms.size();
        const simworld::Room& room = rooms[ri];
        Rng ep(rng.fork());
        const simworld::AgentPose start = simworld::sample_pose(room, ep);
        // Script only classes every instance of which can be approached from
        // the start; the expert should fail for lack of skill, not geometry.
        const auto usable = detail::reachable_classes(room, start);
        const auto usable_with = [&](auto pred) {
            auto names = detail::present_classes(room, pred);
            std::erase_if(names, [&](const std::string& n) {
                return std::find(usable.begin(), usable.end(), n) == usable.end();
            });
            return names;
        };
        const auto pick =
            usable_with([](const simworld::ClassInfo& c) { return c.pickupable; });
        const auto surf =
            usable_with([](const simworld::ClassInfo& c) { return !c.pickupable; });
        const auto togg =
            usable_with([](const simworld::ClassInfo& c) { return c.toggleable; });
        const auto open =
            usable_with([](const simworld::ClassInfo& c) { return c.openable; });

        int flavor = i % 5;
        if (flavor == 0 && togg.empty()) flavor = 1;
        if (flavor == 3 && open.empty()) flavor = 1;
        if (flavor == 4 && (pick.size() < 2 || surf.empty())) flavor = 1;
        if (flavor == 1 || flavor == 2) {
            if (pick.empty() || surf.empty()) flavor = -1;  // navigation only
        }

        std::vector<std::string> script;
        switch (flavor) {
            case 0: {
                const std::string t = ep.pick(togg);
                script = {"walk over to the " + t, "turn on the " + t};
                break;
            }
            case 3: {
                const std::string t = ep.pick(open);
                script = {"walk over to the " + t, "open the " + t, "close the " + t};
                break;
            }
            case 4: {
                std::string a = ep.pick(pick), b = ep.pick(pick);
                while (b == a) b = ep.pick(pick);
                const std::string s = ep.pick(surf);
                script = {"walk over to the " + a, "pick up the " + a,
                          "walk over to the " + s, "put the " + a + " on the " + s,
                          "walk over to the " + b, "pick up the " + b,
                          "walk over to the " + s, "put the " + b + " on the " + s};
                break;
            }
            case -1: {
                auto any = usable;
                if (any.empty())
                    any = detail::present_classes(
                        room, [](const simworld::ClassInfo&) { return true; });
                script = {"walk over to the " + ep.pick(any)};
                break;
            }
            default: {
                const std::string t = ep.pick(pick);
                const std::string s = ep.pick(surf);
                script = {"walk over to the " + t, "pick up the " + t,
                          "walk over to the " + s, "put the " + t + " on the " + s};
                break;
            }
        }

        planner::EpisodeScript e;
        e.room_ref = std::to_string(ri);
        e.start = start;
        e.instructions = script;
        const auto expert =
            planner::run_episode(room, e.start, e.instructions, tagger, expert_cfg);
        e.expert_action_count = expert.action_count();
        manifest.episodes.push_back(std::move(e));
    }
    return manifest;
}

struct SuiteReport {
    std::vector<EpisodeMetrics> episodes;
    SuiteMetrics metrics;

    json to_json() const {
        json eps = json::array();
        for (const auto& e : episodes) eps.push_back(e.to_json());
        return json{{"episodes", eps}, {"metrics", metrics.to_json()}};
    }
};

// Runs every script against the room set and scores it. Episodes fan out
// across `threads` workers; each episode is self-contained, so the result is
// identical to the single-threaded run.
inline SuiteReport evaluate_suite(const std::vector<simworld::Room>& rooms,
                                  const std::vector<planner::EpisodeScript>& scripts,
                                  const lang::TaggerModel& tagger,
                                  const planner::PlannerConfig& cfg, int threads = 1) {
    SuiteReport report;
    report.episodes.resize(scripts.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= scripts.size() || failed.load()) break;
            try {
                const auto& sc = scripts[i];
                const std::size_t ri = static_cast<std::size_t>(std::stoul(sc.room_ref));
                if (ri >= rooms.size()) throw Error("episode references unknown room " + sc.room_ref);
                const auto trace =
                    planner::run_episode(rooms[ri], sc.start, sc.instructions, tagger, cfg);
                report.episodes[i] = score_episode(trace, sc.expert_action_count);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(scripts.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw Error("suite evaluation failed: " + first_error);
    report.metrics = aggregate(report.episodes);
    return report;
}

// ---------------------------------------------------------------------------
// Combined report: episode metrics plus the map-refinement accuracy table in
// its four-column layout (Navigable / Big / Medium / Small).

inline std::string format_accuracy_table(const gcn::EvalResult& eval) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << "map        Navigable    Big     Medium  Small\n";
    out << "refined    " << eval.refined.navigable << "        " << eval.refined.big << "   "
        << eval.refined.medium << "   " << eval.refined.small << "\n";
    out << "baseline   " << eval.baseline.navigable << "        " << eval.baseline.big << "   "
        << eval.baseline.medium << "   " << eval.baseline.small << "\n";
    return out.str();
}

struct PipelineReport {
    SuiteReport suite;
    bool has_mapping = false;
    gcn::EvalResult mapping;

    json to_json() const {
        json j{{"suite", suite.to_json()}};
        if (has_mapping) {
            auto row = [](const gcn::AccuracyTable& t) {
                return json{{"navigable", t.navigable},
                            {"big", t.big},
                            {"medium", t.medium},
                            {"small", t.small}};
            };
            j["mapping"] = {{"refined", row(mapping.refined)}, {"baseline", row(mapping.baseline)}};
        }
        return j;
    }

    std::string text() const {
        std::string out = suite.metrics.table();
        if (has_mapping) out += format_accuracy_table(mapping);
        return out;
    }
};

// Runs the episode suite and, when a refinement model plus held-out mapping
// samples are supplied, appends the per-class map accuracy table.
inline PipelineReport full_pipeline_eval(const std::vector<simworld::Room>& rooms,
                                         const std::vector<planner::EpisodeScript>& scripts,
                                         const lang::TaggerModel& tagger,
                                         const planner::PlannerConfig& cfg,
                                         const gcn::GcnModel* model = nullptr,
                                         const std::vector<gcn::MappingSample>& mapping_eval = {},
                                         int threads = 1) {
    PipelineReport report;
    report.suite = evaluate_suite(rooms, scripts, tagger, cfg, threads);
    if (model != nullptr && !mapping_eval.empty()) {
        report.mapping = gcn::eval_mapping(*model, mapping_eval);
        report.has_mapping = true;
    }
    return report;
}

}  // namespace navlang::harness
