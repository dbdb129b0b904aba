#pragma once

// Turns tagged instructions into discrete low-level actions. A navigation
// stack plans over a persistent world-frame map stitched from egocentric
// observations; a manipulation stack validates affordances against the
// simulated room. Both report per-sub-goal outcomes for the metrics layer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "navlang/core.hpp"
#include "navlang/disambig.hpp"
#include "navlang/gcnfilter.hpp"
#include "navlang/grounding.hpp"
#include "navlang/language.hpp"
#include "navlang/projection.hpp"
#include "navlang/simworld.hpp"

namespace navlang::planner {

// ---------------------------------------------------------------------------
// Low-level actions

enum class ActionKind {
    MoveAhead,
    RotateRight,
    RotateLeft,
    LookUp,
    LookDown,
    Pickup,
    Put,
    Open,
    Close,
    ToggleOn,
    ToggleOff,
    Slice,
    Stop,
};
inline constexpr int kNumActions = 13;

inline const char* action_name(ActionKind k) {
    static const char* names[kNumActions] = {"MoveAhead", "RotateRight", "RotateLeft", "LookUp",
                                             "LookDown",  "Pickup",      "Put",        "Open",
                                             "Close",     "ToggleOn",    "ToggleOff",  "Slice",
                                             "Stop"};
    return names[static_cast<int>(k)];
}

// Interactions carry an object argument; movement and Stop never do.
inline bool is_interaction(ActionKind k) {
    return k >= ActionKind::Pickup && k <= ActionKind::Slice;
}

struct Action {
    ActionKind kind = ActionKind::Stop;
    std::string object;

    void validate() const {
        if (is_interaction(kind) && object.empty())
            throw Error(std::string(action_name(kind)) + " needs an object argument");
        if (!is_interaction(kind) && !object.empty())
            throw Error(std::string(action_name(kind)) + " takes no object argument");
    }

    static Action move(ActionKind k) {
        Action a{k, {}};
        a.validate();
        return a;
    }
    static Action interact(ActionKind k, std::string obj) {
        Action a{k, std::move(obj)};
        a.validate();
        return a;
    }

    json to_json() const {
        json j{{"action", action_name(kind)}};
        if (!object.empty()) j["object"] = object;
        return j;
    }
};

// ---------------------------------------------------------------------------
// High-level behaviors

enum class BehaviorKind {
    HardMove,
    ArbitraryMove,
    TargetedNav,
    PickupObj,
    PutObj,
    OpenObj,
    CloseObj,
    ToggleObj,
    SliceObj,
    Resolve,
    Explore,
    Remap,
};

inline const char* behavior_name(BehaviorKind k) {
    static const char* names[] = {"HardMove", "ArbitraryMove", "TargetedNav", "PickupObj",
                                  "PutObj",   "OpenObj",       "CloseObj",    "ToggleObj",
                                  "SliceObj", "Resolve",       "Explore",     "Remap"};
    return names[static_cast<int>(k)];
}

struct Behavior {
    BehaviorKind kind = BehaviorKind::HardMove;
    std::vector<Action> script;  // HardMove: the exact commanded primitives
    int steps = 0;               // ArbitraryMove: 0 means use the configured default
    std::string target;          // object (or destination) class name
    std::string surface;         // PutObj: destination surface
    std::string reference;       // grounding anchor
    std::optional<grounding::Relation> relation;
    bool toggle_on = true;
    std::string text;  // original instruction, for trace notes
};

namespace detail {

inline std::vector<std::string> slot_tokens(const lang::TaggedInstruction& tagged, int slot) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tagged.tokens.size(); ++i)
        if (tagged.slots[i] == slot) out.push_back(tagged.tokens[i]);
    return out;
}

inline std::optional<int> parse_count(const std::string& tok) {
    static const std::map<std::string, int> words = {
        {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4}, {"five", 5},
        {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}};
    if (!tok.empty() && std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); }))
        return std::stoi(tok);
    const auto it = words.find(tok);
    if (it != words.end()) return it->second;
    return std::nullopt;
}

inline bool hedged_count(const std::string& tok) {
    return tok == "few" || tok == "couple" || tok == "some" || tok == "several";
}

inline std::optional<grounding::Relation> parse_relation(const std::vector<std::string>& toks) {
    for (const auto& t : toks) {
        if (t == "left") return grounding::Relation::LeftOf;
        if (t == "right") return grounding::Relation::RightOf;
        if (t == "above" || t == "over") return grounding::Relation::Above;
        if (t == "below" || t == "under") return grounding::Relation::Below;
        if (t == "near" || t == "beside" || t == "next" || t == "by" || t == "close")
            return grounding::Relation::Beside;
    }
    return std::nullopt;
}

}  // namespace detail

// Slot pattern to behavior: navigation intent routes through hard, arbitrary,
// or targeted movement; everything else dispatches a manipulation stack entry
// keyed by the action verb.
inline Behavior classify_behavior(const lang::TaggedInstruction& tagged) {
    using namespace lang;
    Behavior b;
    for (const auto& t : tagged.tokens) b.text += (b.text.empty() ? "" : " ") + t;

    const auto targets = detail::slot_tokens(tagged, slot::kTargetObj);
    const auto refs = detail::slot_tokens(tagged, slot::kRefinementObj);
    const auto rels = detail::slot_tokens(tagged, slot::kRefinementRel);
    const auto dirs = detail::slot_tokens(tagged, slot::kDirection);
    const auto counts = detail::slot_tokens(tagged, slot::kCount);
    const auto verbs = detail::slot_tokens(tagged, slot::kActionNNavi);
    const auto navs = detail::slot_tokens(tagged, slot::kActionNavi);
    const auto descs = detail::slot_tokens(tagged, slot::kActionDesc);

    if (tagged.intent == intent::kNavigation) {
        if (!targets.empty()) {
            b.kind = BehaviorKind::TargetedNav;
            b.target = targets.front();
            if (!refs.empty()) {
                b.reference = refs.front();
                b.relation = detail::parse_relation(rels);
                if (!b.relation) b.relation = grounding::Relation::Beside;
            }
            return b;
        }
        if (dirs.empty() && counts.empty()) throw Error("unparseable instruction: " + b.text);

        int count = 1;
        bool hedged = false;
        for (const auto& c : counts) {
            if (const auto n = detail::parse_count(c)) count = *n;
            if (detail::hedged_count(c)) hedged = true;
        }
        const bool walks = std::any_of(navs.begin(), navs.end(), [](const std::string& v) {
            return v == "walk" || v == "move" || v == "go" || v == "step" || v == "head";
        });
        std::vector<Action> script;
        std::string dir = dirs.empty() ? "forward" : dirs.front();
        if (dir == "upwards" || dir == "up") {
            script.push_back(Action::move(ActionKind::LookUp));
        } else if (dir == "downwards" || dir == "down") {
            script.push_back(Action::move(ActionKind::LookDown));
        } else if (dir == "around") {
            script.push_back(Action::move(ActionKind::RotateRight));
            script.push_back(Action::move(ActionKind::RotateRight));
        } else {
            if (dir == "left") script.push_back(Action::move(ActionKind::RotateLeft));
            if (dir == "right") script.push_back(Action::move(ActionKind::RotateRight));
            if (dir == "back" || dir == "backward" || dir == "backwards") {
                script.push_back(Action::move(ActionKind::RotateRight));
                script.push_back(Action::move(ActionKind::RotateRight));
            }
            const bool moves = walks || dir == "forward" || dir == "ahead" || dir == "forwards" ||
                               dir == "straight" || !counts.empty();
            if (hedged) {
                b.kind = BehaviorKind::ArbitraryMove;
                b.script = std::move(script);  // rotation prefix, if any
                b.steps = 0;
                return b;
            }
            if (moves)
                for (int i = 0; i < count; ++i) script.push_back(Action::move(ActionKind::MoveAhead));
        }
        if (script.empty()) throw Error("unparseable instruction: " + b.text);
        b.kind = BehaviorKind::HardMove;
        b.script = std::move(script);
        return b;
    }

    // Manipulation intent: key off the first recognized verb.
    std::string verb = verbs.empty() ? std::string() : verbs.front();
    const bool wants_off = std::any_of(descs.begin(), descs.end(),
                                       [](const std::string& d) { return d == "off"; });
    if (verb == "pick" || verb == "grab" || verb == "take") {
        b.kind = BehaviorKind::PickupObj;
    } else if (verb == "put" || verb == "place") {
        b.kind = BehaviorKind::PutObj;
    } else if (verb == "open") {
        b.kind = BehaviorKind::OpenObj;
    } else if (verb == "close" || verb == "shut") {
        b.kind = BehaviorKind::CloseObj;
    } else if (verb == "turn" || verb == "switch" || verb == "toggle" || verb == "flip") {
        b.kind = BehaviorKind::ToggleObj;
        b.toggle_on = !wants_off;
    } else if (verb == "slice" || verb == "cut") {
        b.kind = BehaviorKind::SliceObj;
    } else {
        throw Error("unparseable instruction: " + b.text);
    }
    if (targets.empty()) throw Error("unparseable instruction: " + b.text);
    b.target = targets.front();
    if (b.kind == BehaviorKind::PutObj) {
        if (refs.empty()) throw Error("unparseable instruction: " + b.text);
        b.surface = refs.front();
        if (refs.size() > 1) {
            b.reference = refs[1];
            b.relation = detail::parse_relation(rels);
            if (!b.relation) b.relation = grounding::Relation::Beside;
        }
    } else if (!refs.empty()) {
        b.reference = refs.front();
        b.relation = detail::parse_relation(rels);
        if (!b.relation) b.relation = grounding::Relation::Beside;
    }
    return b;
}

// Interaction hierarchy for manipulation behaviors: the manipulated item sits
// on top (2), a relation anchor in the middle (1), a destination surface at
// the bottom (0). Every mentioned object receives exactly one level.
inline std::map<std::string, int> interaction_hierarchy(const Behavior& b) {
    std::map<std::string, int> levels;
    switch (b.kind) {
        case BehaviorKind::PickupObj:
        case BehaviorKind::PutObj:
        case BehaviorKind::OpenObj:
        case BehaviorKind::CloseObj:
        case BehaviorKind::ToggleObj:
        case BehaviorKind::SliceObj: break;
        default: throw Error("interaction hierarchy is defined for manipulation behaviors");
    }
    levels[b.target] = 2;
    if (!b.surface.empty()) levels[b.surface] = 0;
    if (!b.reference.empty()) levels[b.reference] = 1;
    return levels;
}

// ---------------------------------------------------------------------------
// Grid search

struct Cell {
    int u = 0, v = 0;
    bool operator==(const Cell& o) const { return u == o.u && v == o.v; }
    bool operator!=(const Cell& o) const { return !(*this == o); }
};

// A* over Navigable cells with the Manhattan heuristic; Unknown and Target
// cells block like Obstacle. Returns the cells after `start` up to and
// including `goal`, or nothing when unreachable.
inline std::optional<std::vector<Cell>> astar(const BevGrid& map, Cell start, Cell goal) {
    if (map.mode != BevGrid::Mode::Labels) throw Error("planning needs a label grid");
    if (!map.in_bounds(start.u, start.v) || !map.in_bounds(goal.u, goal.v))
        throw Error("plan endpoints must lie in the grid");
    if (map.label_at(start.u, start.v) != CellLabel::Navigable)
        throw Error("plan start must be navigable");
    if (start == goal) return std::vector<Cell>{};
    const int s = map.s;
    auto idx = [s](Cell c) { return c.v * s + c.u; };
    auto h = [goal](Cell c) { return std::abs(c.u - goal.u) + std::abs(c.v - goal.v); };
    std::vector<int> g(static_cast<std::size_t>(s) * s, std::numeric_limits<int>::max());
    std::vector<int> parent(static_cast<std::size_t>(s) * s, -1);
    // Priority: lowest f, then deepest g, then insertion order, all encoded
    // so the queue pops deterministically.
    using Entry = std::tuple<int, int, int, int>;  // f, -g, tick, cell index
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    int tick = 0;
    g[static_cast<std::size_t>(idx(start))] = 0;
    open.push({h(start), 0, tick++, idx(start)});
    const int du[4] = {1, -1, 0, 0}, dv[4] = {0, 0, 1, -1};
    while (!open.empty()) {
        const auto [f, neg_g, t, ci] = open.top();
        open.pop();
        const Cell c{ci % s, ci / s};
        const int gc = g[static_cast<std::size_t>(idx(c))];
        if (f != gc + h(c)) continue;  // stale entry
        if (c == goal) {
            std::vector<Cell> path;
            for (int at = idx(c); at != idx(start); at = parent[static_cast<std::size_t>(at)])
                path.push_back({at % s, at / s});
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (int d = 0; d < 4; ++d) {
            const Cell n{c.u + du[d], c.v + dv[d]};
            if (!map.in_bounds(n.u, n.v)) continue;
            if (map.label_at(n.u, n.v) != CellLabel::Navigable) continue;
            if (gc + 1 < g[static_cast<std::size_t>(idx(n))]) {
                g[static_cast<std::size_t>(idx(n))] = gc + 1;
                parent[static_cast<std::size_t>(idx(n))] = idx(c);
                open.push({gc + 1 + h(n), -(gc + 1), tick++, idx(n)});
            }
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// World-frame stitching

// Integer axis vectors per quarter-turn heading index (0 faces +z).
inline void heading_axes(int heading_idx, int& fu, int& fv, int& ru, int& rv) {
    static const int fwd[4][2] = {{0, 1}, {1, 0}, {0, -1}, {-1, 0}};
    static const int rgt[4][2] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    const int h = ((heading_idx % 4) + 4) % 4;
    fu = fwd[h][0];
    fv = fwd[h][1];
    ru = rgt[h][0];
    rv = rgt[h][1];
}

// Write an egocentric label grid into the world map at the agent's cell and
// heading. Latest observation wins, except that Unknown never overwrites.
inline void stitch(BevGrid& world, const BevGrid& ego, int ax, int az, int heading_idx) {
    if (world.mode != BevGrid::Mode::Labels || ego.mode != BevGrid::Mode::Labels)
        throw Error("stitching needs label grids");
    int fu, fv, ru, rv;
    heading_axes(heading_idx, fu, fv, ru, rv);
    const int c = ego.ego();
    for (int v = 0; v < ego.s; ++v)
        for (int u = 0; u < ego.s; ++u) {
            const CellLabel l = ego.label_at(u, v);
            if (l == CellLabel::Unknown) continue;
            const int wx = ax + (u - c) * ru + (v - c) * fu;
            const int wz = az + (u - c) * rv + (v - c) * fv;
            if (!world.in_bounds(wx, wz)) continue;
            world.set_label(wx, wz, l);
        }
}

// 4-connected components of cells carrying a given label, in scan order.
inline std::vector<std::vector<Cell>> label_components(const BevGrid& map, CellLabel want) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(map.s) * map.s, 0);
    std::vector<std::vector<Cell>> comps;
    for (int v = 0; v < map.s; ++v)
        for (int u = 0; u < map.s; ++u) {
            if (seen[static_cast<std::size_t>(v) * map.s + u]) continue;
            if (map.label_at(u, v) != want) continue;
            std::vector<Cell> comp;
            std::vector<Cell> stack = {{u, v}};
            seen[static_cast<std::size_t>(v) * map.s + u] = 1;
            while (!stack.empty()) {
                const Cell cc = stack.back();
                stack.pop_back();
                comp.push_back(cc);
                const int du[4] = {1, -1, 0, 0}, dv[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    const Cell n{cc.u + du[d], cc.v + dv[d]};
                    if (!map.in_bounds(n.u, n.v)) continue;
                    auto& mark = seen[static_cast<std::size_t>(n.v) * map.s + n.u];
                    if (mark || map.label_at(n.u, n.v) != want) continue;
                    mark = 1;
                    stack.push_back(n);
                }
            }
            comps.push_back(std::move(comp));
        }
    return comps;
}

// ---------------------------------------------------------------------------
// Episode world:室 simulation state the agent acts on

struct ObjectState {
    bool removed = false;
    bool open = false;
    bool on = false;
    bool sliced = false;
    std::string placed_on;  // instance name of the supporting surface
};

struct AgentState {
    int ix = 0, iz = 0;
    int heading = 0;  // quarter turns clockwise from +z
    int pitch = 0;    // -1 down, 0 level, 1 up
};

struct Outcome {
    bool ok = false;
    std::string why;
};

class EpisodeWorld {
public:
    EpisodeWorld(simworld::Room room, const simworld::AgentPose& start)
        : base_(std::move(room)) {
        base_.finalize();
        rebuild();
        agent_.ix = static_cast<int>(std::floor(start.x / base_.r));
        agent_.iz = static_cast<int>(std::floor(start.z / base_.r));
        agent_.heading = ((static_cast<int>(std::llround(start.heading / (kPi / 2.0))) % 4) + 4) % 4;
        if (!live_.navigable(agent_.ix, agent_.iz))
            throw Error("episode start pose is not navigable");
    }

    const simworld::Room& live() const { return live_; }
    const AgentState& agent() const { return agent_; }
    int collisions() const { return collisions_; }
    const std::optional<std::string>& held() const { return held_; }

    simworld::AgentPose pose() const {
        simworld::AgentPose p;
        const Vec2 c = live_.cell_center(agent_.ix, agent_.iz);
        p.x = c.x;
        p.z = c.z;
        p.heading = agent_.heading * (kPi / 2.0);
        return p;
    }

    const ObjectState& state_of(const std::string& instance) const {
        static const ObjectState kDefault;
        const auto it = states_.find(instance);
        return it == states_.end() ? kDefault : it->second;
    }

    // Non-removed instances of a class (or the exact instance), nearest first.
    std::vector<const simworld::PlacedObject*> instances_of(const std::string& name) const {
        std::vector<const simworld::PlacedObject*> out;
        for (const auto& o : base_.objects) {
            if (state_of(o.name).removed) continue;
            if (o.name == name || simworld::class_info(o.class_id).name == name)
                out.push_back(&o);
        }
        std::stable_sort(out.begin(), out.end(),
                         [this](const simworld::PlacedObject* a, const simworld::PlacedObject* b) {
                             return range_to(*a) < range_to(*b);
                         });
        return out;
    }

    double range_to(const simworld::PlacedObject& o) const {
        const Vec2 p = live_.cell_center(agent_.ix, agent_.iz);
        const double dx = std::max({o.footprint.x0 - p.x, 0.0, p.x - o.footprint.x1});
        const double dz = std::max({o.footprint.z0 - p.z, 0.0, p.z - o.footprint.z1});
        return std::sqrt(dx * dx + dz * dz);
    }

    bool class_in_range(const std::string& name, double range) const {
        for (const auto* o : instances_of(name))
            if (range_to(*o) <= range) return true;
        return false;
    }

    // True and advance when the cell ahead is free; false records a collision.
    bool move_ahead() {
        int fu, fv, ru, rv;
        heading_axes(agent_.heading, fu, fv, ru, rv);
        const int nx = agent_.ix + fu, nz = agent_.iz + fv;
        if (!live_.navigable(nx, nz)) {
            ++collisions_;
            return false;
        }
        agent_.ix = nx;
        agent_.iz = nz;
        return true;
    }

    void rotate(int quarter_turns) {
        agent_.heading = ((agent_.heading + quarter_turns) % 4 + 4) % 4;
    }

    void look(int dpitch) { agent_.pitch = std::clamp(agent_.pitch + dpitch, -1, 1); }

    Outcome pickup(const std::string& name, double range) {
        if (held_) return {false, "already holding " + *held_};
        // Prefer a placed instance on a reachable surface, then a floor one.
        for (const auto& o : base_.objects) {
            const ObjectState& st = state_of(o.name);
            if (!st.removed || st.placed_on.empty()) continue;
            if (o.name != name && simworld::class_info(o.class_id).name != name) continue;
            const auto surfaces = instances_of(st.placed_on);
            if (surfaces.empty() || range_to(*surfaces.front()) > range) continue;
            if (!o.pickupable) return {false, name + " is not pickupable"};
            states_[o.name].placed_on.clear();
            held_ = o.name;
            return {true, {}};
        }
        const auto cands = instances_of(name);
        if (cands.empty()) return {false, name + " is not visible"};
        const auto* obj = cands.front();
        if (range_to(*obj) > range) return {false, name + " is out of reach"};
        if (!obj->pickupable) return {false, name + " is not pickupable"};
        states_[obj->name].removed = true;
        held_ = obj->name;
        rebuild();
        return {true, {}};
    }

    Outcome put(const std::string& name, const std::string& surface, double range) {
        if (!held_) return {false, "not holding anything"};
        const auto* held_obj = find_instance(*held_);
        const bool name_matches =
            *held_ == name || simworld::class_info(held_obj->class_id).name == name;
        if (!name_matches) return {false, "holding " + *held_ + ", not " + name};
        const auto surfaces = instances_of(surface);
        if (surfaces.empty()) return {false, surface + " is not visible"};
        const auto* dst = surfaces.front();
        if (range_to(*dst) > range) return {false, surface + " is out of reach"};
        if (dst->pickupable) return {false, surface + " cannot support objects"};
        states_[*held_].placed_on = dst->name;
        held_.reset();
        return {true, {}};
    }

    Outcome open_close(const std::string& name, double range, bool open) {
        const auto cands = instances_of(name);
        if (cands.empty()) return {false, name + " is not visible"};
        const auto* obj = cands.front();
        if (range_to(*obj) > range) return {false, name + " is out of reach"};
        if (!obj->openable) return {false, name + " is not openable"};
        states_[obj->name].open = open;
        return {true, {}};
    }

    Outcome toggle(const std::string& name, double range, bool on) {
        const auto cands = instances_of(name);
        if (cands.empty()) return {false, name + " is not visible"};
        const auto* obj = cands.front();
        if (range_to(*obj) > range) return {false, name + " is out of reach"};
        if (!obj->toggleable) return {false, name + " is not toggleable"};
        states_[obj->name].on = on;
        return {true, {}};
    }

    // Slicing is validated against the handleable-item flag.
    Outcome slice(const std::string& name, double range) {
        for (const auto& o : base_.objects) {
            const ObjectState& st = state_of(o.name);
            if (o.name != name && simworld::class_info(o.class_id).name != name) continue;
            if (st.removed && st.placed_on.empty()) continue;
            double d;
            if (st.removed) {
                const auto surfaces = instances_of(st.placed_on);
                if (surfaces.empty()) continue;
                d = range_to(*surfaces.front());
            } else {
                d = range_to(o);
            }
            if (d > range) continue;
            if (!o.pickupable) return {false, name + " cannot be sliced"};
            states_[o.name].sliced = true;
            return {true, {}};
        }
        return {false, name + " is not within reach"};
    }

    const simworld::PlacedObject* find_instance(const std::string& instance) const {
        for (const auto& o : base_.objects)
            if (o.name == instance) return &o;
        return nullptr;
    }

private:
    void rebuild() {
        live_ = base_;
        live_.objects.clear();
        for (const auto& o : base_.objects)
            if (!state_of(o.name).removed) live_.objects.push_back(o);
        live_.finalize();
    }

    simworld::Room base_, live_;
    std::map<std::string, ObjectState> states_;
    std::optional<std::string> held_;
    AgentState agent_;
    int collisions_ = 0;
};

// ---------------------------------------------------------------------------
// Mapping handle

enum class MapSource { GroundTruth, Gcn, Evidence };

struct MapperConfig {
    MapSource source = MapSource::GroundTruth;
    const gcn::GcnModel* model = nullptr;  // required for Gcn
    double seg_noise = 0.0;
    // Fraction of object instances whose reported class is consistently
    // wrong; the same instance lies the same way in every observation.
    double class_flip = 0.0;
    std::uint64_t flip_seed = 0;
    int s = 21;
    double r = 0.25;
};

// One egocentric observation: either the true collision map or the rendered
// panorama pushed through projection and (optionally) the trained filter.
inline BevGrid observe_ego_map(const EpisodeWorld& world, const MapperConfig& cfg,
                               int target_class, std::uint64_t obs_index) {
    const simworld::AgentPose pose = world.pose();
    if (cfg.source == MapSource::GroundTruth)
        return simworld::ground_truth_bev(world.live(), pose, cfg.s, cfg.r, target_class);
    simworld::RenderParams params;
    params.seg_noise = cfg.seg_noise;
    params.noise_seed = obs_index;
    params.class_flip = cfg.class_flip;
    params.class_flip_seed = cfg.flip_seed;
    const auto pano = simworld::render_panorama(world.live(), pose, params);
    const auto intr = projection::default_intrinsics(params.h, params.w, pose.focal,
                                                     params.focal_y, params.max_depth);
    projection::ProjectOptions opt;
    opt.s = cfg.s;
    opt.r = cfg.r;
    const BevGrid evidence = projection::project_panorama(pano, intr, opt);
    if (cfg.source == MapSource::Gcn) {
        if (!cfg.model) throw Error("mapping with a filter requires a model");
        return gcn::refine(*cfg.model, evidence, target_class);
    }
    BevGrid labels(evidence.s, evidence.r, BevGrid::Mode::Labels, kNumLabels);
    for (int v = 0; v < evidence.s; ++v)
        for (int u = 0; u < evidence.s; ++u)
            labels.set_label(
                u, v, gcn::baseline_label(evidence.at(u, v), evidence.channels, target_class));
    labels.set_label(labels.ego(), labels.ego(), CellLabel::Navigable);
    return labels;
}

// ---------------------------------------------------------------------------
// Planner

struct SubGoalRecord {
    std::string type;
    bool success = false;
    bool skipped = false;  // never attempted: an earlier dependency or the approach failed
    std::string note;
};

struct PlannerConfig {
    MapperConfig mapper;
    int collision_budget = 3;
    int arbitrary_steps = 3;
    double interact_range = 0.8;
    int explore_attempts = 2;
    int explore_radius = 5;
    int max_actions_per_goal = 120;
    const disambig::FeatureProvider* resolver = nullptr;
    int resolver_vectors = 3;
    std::uint64_t seed = 7;
};

inline const char* subgoal_type(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::HardMove:
        case BehaviorKind::ArbitraryMove: return "Move";
        case BehaviorKind::TargetedNav: return "GoTo";
        case BehaviorKind::PickupObj: return "Pickup";
        case BehaviorKind::PutObj: return "Put";
        case BehaviorKind::OpenObj: return "Open";
        case BehaviorKind::CloseObj: return "Close";
        case BehaviorKind::ToggleObj: return "Toggle";
        case BehaviorKind::SliceObj: return "Slice";
        default: return "Other";
    }
}

class Planner {
public:
    Planner(EpisodeWorld& world, const PlannerConfig& cfg)
        : world_(world), cfg_(cfg), rng_(cfg.seed) {
        const auto& room = world_.live();
        int s = std::max(room.nx, room.nz);
        if (s % 2 == 0) ++s;
        map_ = BevGrid(s, room.r, BevGrid::Mode::Labels, kNumLabels);
        // A fresh map knows nothing; Unknown everywhere is the default state
        // (all-zero cells argmax to label 0).
    }

    const BevGrid& map() const { return map_; }
    const std::vector<Action>& actions() const { return actions_; }
    int safety_violations() const { return safety_violations_; }

    SubGoalRecord run(const Behavior& b) {
        SubGoalRecord rec;
        rec.type = subgoal_type(b.kind);
        actions_this_goal_ = 0;
        switch (b.kind) {
            case BehaviorKind::HardMove: {
                current_target_class_ = -1;
                remap();
                bool all = true;
                for (const auto& a : b.script) all = exec_primitive(a) && all;
                rec.success = all;
                break;
            }
            case BehaviorKind::ArbitraryMove: {
                current_target_class_ = -1;
                remap();
                for (const auto& a : b.script) exec_primitive(a);
                const int steps = b.steps > 0 ? b.steps : cfg_.arbitrary_steps;
                int advanced = 0;
                for (int i = 0; i < steps; ++i)
                    advanced += exec_primitive(Action::move(ActionKind::MoveAhead)) ? 1 : 0;
                rec.success = advanced > 0;
                if (!rec.success) rec.note = "no step possible";
                break;
            }
            case BehaviorKind::TargetedNav: {
                rec.success = targeted_nav(b, rec.note);
                break;
            }
            case BehaviorKind::PickupObj:
            case BehaviorKind::PutObj:
            case BehaviorKind::OpenObj:
            case BehaviorKind::CloseObj:
            case BehaviorKind::ToggleObj:
            case BehaviorKind::SliceObj: {
                manipulate(b, rec);
                break;
            }
            default:
                rec.success = false;
                rec.note = "behavior is internal";
                break;
        }
        return rec;
    }

private:
    // ---- primitive execution; every emitted action refreshes the map.

    bool exec_primitive(const Action& a) {
        if (actions_this_goal_ >= cfg_.max_actions_per_goal) return false;
        bool ok = true;
        switch (a.kind) {
            case ActionKind::MoveAhead: {
                int fu, fv, ru, rv;
                heading_axes(world_.agent().heading, fu, fv, ru, rv);
                const Cell next{world_.agent().ix + fu, world_.agent().iz + fv};
                if (map_.in_bounds(next.u, next.v) &&
                    map_.label_at(next.u, next.v) == CellLabel::Obstacle) {
                    // Never step into a mapped obstacle: refuse to emit.
                    return false;
                }
                emit(a);
                ok = world_.move_ahead();
                if (!ok && map_.in_bounds(next.u, next.v))
                    map_.set_label(next.u, next.v, CellLabel::Obstacle);
                break;
            }
            case ActionKind::RotateRight:
                emit(a);
                world_.rotate(1);
                break;
            case ActionKind::RotateLeft:
                emit(a);
                world_.rotate(-1);
                break;
            case ActionKind::LookUp:
                emit(a);
                world_.look(1);
                break;
            case ActionKind::LookDown:
                emit(a);
                world_.look(-1);
                break;
            default: throw Error("interactions go through the manipulation stack");
        }
        remap();
        return ok;
    }

    void emit(const Action& a) {
        a.validate();
        if (a.kind == ActionKind::MoveAhead) {
            int fu, fv, ru, rv;
            heading_axes(world_.agent().heading, fu, fv, ru, rv);
            const Cell next{world_.agent().ix + fu, world_.agent().iz + fv};
            if (map_.in_bounds(next.u, next.v) &&
                map_.label_at(next.u, next.v) == CellLabel::Obstacle)
                ++safety_violations_;  // guarded against in exec_primitive
        }
        actions_.push_back(a);
        ++actions_this_goal_;
    }

    void remap() {
        const BevGrid ego = observe_ego_map(world_, cfg_.mapper, current_target_class_,
                                            obs_index_++);
        stitch(map_, ego, world_.agent().ix, world_.agent().iz, world_.agent().heading);
        map_.set_label(world_.agent().ix, world_.agent().iz, CellLabel::Navigable);
    }

    void rotate_to(int heading) {
        const int delta = ((heading - world_.agent().heading) % 4 + 4) % 4;
        if (delta == 1) exec_primitive(Action::move(ActionKind::RotateRight));
        if (delta == 3) exec_primitive(Action::move(ActionKind::RotateLeft));
        if (delta == 2) {
            exec_primitive(Action::move(ActionKind::RotateRight));
            exec_primitive(Action::move(ActionKind::RotateRight));
        }
    }

    // Walk a planned path step by step, replanning when the map invalidates a
    // step or the world blocks one. Budget counts those failures.
    bool follow_path(std::vector<Cell> path, Cell goal, int& budget) {
        std::size_t i = 0;
        while (i < path.size()) {
            if (actions_this_goal_ >= cfg_.max_actions_per_goal) return false;
            const Cell next = path[i];
            const int dx = next.u - world_.agent().ix, dz = next.v - world_.agent().iz;
            int want = -1;
            if (dx == 0 && dz == 1) want = 0;
            if (dx == 1 && dz == 0) want = 1;
            if (dx == 0 && dz == -1) want = 2;
            if (dx == -1 && dz == 0) want = 3;
            if (want < 0) throw Error("path step is not unit 4-connected");
            rotate_to(want);
            if (!exec_primitive(Action::move(ActionKind::MoveAhead))) {
                if (budget <= 0) return false;
                --budget;
                remap();
                const Cell here{world_.agent().ix, world_.agent().iz};
                const auto replan = astar(map_, here, goal);
                if (!replan) return false;
                path = *replan;
                i = 0;
                continue;
            }
            ++i;
        }
        return true;
    }

    std::vector<std::vector<Cell>> target_components() const {
        return label_components(map_, CellLabel::Target);
    }

    static Cell component_centroid(const std::vector<Cell>& comp) {
        long su = 0, sv = 0;
        for (const Cell& c : comp) {
            su += c.u;
            sv += c.v;
        }
        const auto n = static_cast<long>(comp.size());
        return {static_cast<int>(su / n), static_cast<int>(sv / n)};
    }

    int manhattan_to_agent(const std::vector<Cell>& comp) const {
        int best = std::numeric_limits<int>::max();
        for (const Cell& c : comp)
            best = std::min(best,
                            std::abs(c.u - world_.agent().ix) + std::abs(c.v - world_.agent().iz));
        return best;
    }

    // Facing candidates on each of the four sides, ordered nearest side
    // first and clockwise from there.
    std::vector<Cell> facing_goals(const std::vector<Cell>& comp) const {
        const int du[4] = {0, 1, 0, -1}, dv[4] = {1, 0, -1, 0};  // N E S W of the footprint
        std::vector<Cell> reps(4, Cell{-1, -1});
        std::vector<int> dist(4, std::numeric_limits<int>::max());
        std::set<std::pair<int, int>> body;
        for (const Cell& c : comp) body.insert({c.u, c.v});
        for (const Cell& c : comp)
            for (int side = 0; side < 4; ++side) {
                const Cell n{c.u + du[side], c.v + dv[side]};
                if (!map_.in_bounds(n.u, n.v) || body.count({n.u, n.v})) continue;
                if (map_.label_at(n.u, n.v) != CellLabel::Navigable) continue;
                const int d =
                    std::abs(n.u - world_.agent().ix) + std::abs(n.v - world_.agent().iz);
                if (d < dist[static_cast<std::size_t>(side)]) {
                    dist[static_cast<std::size_t>(side)] = d;
                    reps[static_cast<std::size_t>(side)] = n;
                }
            }
        int first = 0;
        for (int side = 1; side < 4; ++side)
            if (dist[static_cast<std::size_t>(side)] < dist[static_cast<std::size_t>(first)])
                first = side;
        std::vector<Cell> out;
        for (int k = 0; k < 4; ++k) {
            const int side = (first + k) % 4;
            if (reps[static_cast<std::size_t>(side)].u >= 0)
                out.push_back(reps[static_cast<std::size_t>(side)]);
        }
        return out;
    }

    // Pick among multiple map components: grounding over the current
    // panorama when the instruction carries a relation, else the nearest.
    std::size_t choose_component(const Behavior& b,
                                 const std::vector<std::vector<Cell>>& comps) {
        if (comps.size() == 1 || !b.relation || b.reference.empty()) return nearest(comps);
        simworld::RenderParams params;
        params.seg_noise = cfg_.mapper.seg_noise;
        params.noise_seed = obs_index_ * 7919 + 17;
        const simworld::AgentPose pose = world_.pose();
        simworld::PanoramaObservation pano;
        try {
            pano = simworld::render_panorama(world_.live(), pose, params);
        } catch (const Error&) {
            return nearest(comps);
        }
        for (std::size_t k = 0; k < pano.frames.size(); ++k) {
            const auto scene = grounding::extract_scene(pano.frames[k].seg);
            grounding::GroundingQuery q;
            q.target = b.target;
            q.relation = b.relation;
            q.reference = b.reference;
            grounding::ResolveReport rep;
            try {
                rep = grounding::resolve(q, scene);
            } catch (const Error&) {
                continue;
            }
            if (rep.status != grounding::ResolveStatus::Resolved) continue;
            const auto* obj = scene.by_component(rep.component_id);
            // Bearing and depth of the resolved crop give a world estimate;
            // the component nearest that estimate is the one meant.
            const double alpha =
                std::atan((obj->cx + 0.5 - params.w / 2.0) / pose.focal);
            double depth = 0.0;
            int counted = 0;
            for (int p : obj->pixels) {
                depth += pano.frames[k].depth.d[static_cast<std::size_t>(p)];
                ++counted;
            }
            depth /= std::max(counted, 1);
            const double theta = pano.frames[k].heading;
            const Vec2 fwd = forward_dir(theta), rgt = right_dir(theta);
            const Vec2 at = pose.pos() + depth * fwd + (depth * std::tan(alpha)) * rgt;
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < comps.size(); ++i) {
                const Cell cc = component_centroid(comps[i]);
                const double cx = (cc.u + 0.5) * map_.r, cz = (cc.v + 0.5) * map_.r;
                const double d = std::abs(cx - at.x) + std::abs(cz - at.z);
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            return best;
        }
        return nearest(comps);
    }

    std::size_t nearest(const std::vector<std::vector<Cell>>& comps) const {
        std::size_t best = 0;
        int best_d = std::numeric_limits<int>::max();
        for (std::size_t i = 0; i < comps.size(); ++i) {
            const int d = manhattan_to_agent(comps[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    bool target_visible_heading(const std::string& name, int& heading_idx) {
        simworld::RenderParams params;
        params.seg_noise = cfg_.mapper.seg_noise;
        params.noise_seed = obs_index_ * 7919 + 29;
        params.class_flip = cfg_.mapper.class_flip;
        params.class_flip_seed = cfg_.mapper.flip_seed;
        simworld::PanoramaObservation pano;
        try {
            pano = simworld::render_panorama(world_.live(), world_.pose(), params);
        } catch (const Error&) {
            return false;
        }
        for (std::size_t k = 0; k < pano.frames.size(); ++k) {
            const auto scene = grounding::extract_scene(pano.frames[k].seg);
            for (const auto& o : scene.objects)
                if (o.name == name) {
                    heading_idx = (world_.agent().heading + static_cast<int>(k)) % 4;
                    return true;
                }
        }
        return false;
    }

    bool explore_once() {
        std::vector<Cell> options;
        for (int v = 0; v < map_.s; ++v)
            for (int u = 0; u < map_.s; ++u) {
                if (map_.label_at(u, v) != CellLabel::Navigable) continue;
                const int d = std::abs(u - world_.agent().ix) + std::abs(v - world_.agent().iz);
                if (d >= 2 && d <= cfg_.explore_radius) options.push_back({u, v});
            }
        if (options.empty()) return false;
        const Cell goal = options[static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<int>(options.size()) - 1))];
        const Cell here{world_.agent().ix, world_.agent().iz};
        const auto path = astar(map_, here, goal);
        if (!path) return false;
        int budget = 1;
        follow_path(*path, goal, budget);
        return true;
    }

    // The navigation decision tree.
    bool targeted_nav(const Behavior& b, std::string& note) {
        std::string target_name = b.target;
        auto cid = simworld::class_by_name(target_name);
        if (!cid) {
            // Unknown word: ask the feature database what it denotes.
            if (!cfg_.resolver) {
                note = "unknown object: " + target_name;
                return false;
            }
            if (!resolve_word(target_name)) {
                note = "could not resolve: " + b.target;
                return false;
            }
            cid = simworld::class_by_name(target_name);
            if (!cid) {
                note = "could not resolve: " + b.target;
                return false;
            }
        }
        current_target_class_ = *cid;
        remap();

        for (int round = 0; round < 2 + cfg_.explore_attempts; ++round) {
            auto comps = target_components();
            if (comps.empty()) {
                // Not on the map: look around, then wander a little.
                int toward = -1;
                if (target_visible_heading(target_name, toward)) {
                    rotate_to(toward);
                    // Blocked ahead: wander instead of burning the round.
                    if (!exec_primitive(Action::move(ActionKind::MoveAhead)) &&
                        !explore_once())
                        break;
                } else if (!explore_once()) {
                    break;
                }
                remap();
                continue;
            }
            const std::size_t pick = choose_component(b, comps);
            if (navigate_to_component(comps[static_cast<std::size_t>(pick)])) {
                refine_step(comps[static_cast<std::size_t>(pick)], target_name);
                const bool near = world_.class_in_range(target_name, cfg_.interact_range);
                if (!near) note = "arrived off target";
                return near;
            }
            note = "unreachable target";
            return false;
        }
        note = "target not found";
        return false;
    }

    bool navigate_to_component(const std::vector<Cell>& comp) {
        int budget = cfg_.collision_budget;
        const auto sides = facing_goals(comp);
        for (const Cell& goal : sides) {
            int side_attempts = 0;
            while (side_attempts++ <= cfg_.collision_budget) {
                const Cell here{world_.agent().ix, world_.agent().iz};
                if (here == goal) {
                    face_component(comp);
                    return true;
                }
                std::optional<std::vector<Cell>> path;
                try {
                    path = astar(map_, here, goal);
                } catch (const Error&) {
                    break;
                }
                if (!path) {
                    if (budget <= 0) break;
                    --budget;
                    remap();
                    continue;
                }
                if (follow_path(*path, goal, budget)) {
                    face_component(comp);
                    return true;
                }
                if (budget <= 0) break;
            }
        }
        return false;
    }

    void face_component(const std::vector<Cell>& comp) {
        const Cell cc = component_centroid(comp);
        const int dx = cc.u - world_.agent().ix, dz = cc.v - world_.agent().iz;
        int want;
        if (std::abs(dx) > std::abs(dz))
            want = dx > 0 ? 1 : 3;
        else
            want = dz >= 0 ? 0 : 2;
        rotate_to(want);
    }

    // The final unit step: among staying put and the adjacent navigable
    // cells, take the one whose view shows the most of the target.
    void refine_step(const std::vector<Cell>& comp, const std::string& target_name) {
        const Cell cc = component_centroid(comp);
        const auto view_area = [&](int ix, int iz) -> long {
            simworld::AgentPose p;
            const Vec2 c = world_.live().cell_center(ix, iz);
            p.x = c.x;
            p.z = c.z;
            const int dx = cc.u - ix, dz = cc.v - iz;
            int want;
            if (std::abs(dx) > std::abs(dz))
                want = dx > 0 ? 1 : 3;
            else
                want = dz >= 0 ? 0 : 2;
            p.heading = want * (kPi / 2.0);
            simworld::RenderParams params;
            try {
                const auto frame = simworld::render_frame(world_.live(), p, p.heading, params);
                long area = 0;
                for (const auto& o : grounding::extract_scene(frame.seg).objects)
                    if (o.name == target_name) area += o.area;
                return area;
            } catch (const Error&) {
                return -1;
            }
        };
        const int ax = world_.agent().ix, az = world_.agent().iz;
        long best = view_area(ax, az);
        int best_h = -1;  // stay
        const int du[4] = {0, 1, 0, -1}, dv[4] = {1, 0, -1, 0};
        for (int h = 0; h < 4; ++h) {
            const Cell n{ax + du[h], az + dv[h]};
            if (!map_.in_bounds(n.u, n.v)) continue;
            if (map_.label_at(n.u, n.v) != CellLabel::Navigable) continue;
            const long area = view_area(n.u, n.v);
            if (area > best) {
                best = area;
                best_h = h;
            }
        }
        if (best_h >= 0) {
            rotate_to(best_h);
            exec_primitive(Action::move(ActionKind::MoveAhead));
            face_component(comp);
        }
    }

    bool resolve_word(std::string& name) {
        simworld::RenderParams params;
        simworld::PanoramaObservation pano;
        try {
            pano = simworld::render_panorama(world_.live(), world_.pose(), params);
        } catch (const Error&) {
            return false;
        }
        for (const auto& frame : pano.frames) {
            const auto scene = grounding::extract_scene(frame.seg);
            if (scene.objects.empty()) continue;
            try {
                const auto res = disambig::disambiguate_by_pixels(name, scene, *cfg_.resolver,
                                                                  cfg_.resolver_vectors);
                name = res.object_name;
                return true;
            } catch (const Error&) {
                continue;
            }
        }
        return false;
    }

    // Manipulation stack: walk into range if needed, then validate and apply.
    void manipulate(const Behavior& b, SubGoalRecord& rec) {
        const double range = cfg_.interact_range;
        // A Put whose item was never picked up is a downstream casualty.
        if (b.kind == BehaviorKind::PutObj) {
            const auto& held = world_.held();
            const bool holding_target =
                held && (*held == b.target ||
                         simworld::class_info(world_.find_instance(*held)->class_id).name ==
                             b.target);
            if (!holding_target) {
                rec.skipped = failed_pickups_.count(b.target) > 0;
                rec.success = false;
                rec.note = "not holding " + b.target;
                return;
            }
        }
        // So is a Pickup blocked by a hand an earlier failed Put left full.
        if (b.kind == BehaviorKind::PickupObj) {
            const auto& held = world_.held();
            const bool holding_other =
                held && *held != b.target &&
                simworld::class_info(world_.find_instance(*held)->class_id).name != b.target;
            if (holding_other) {
                rec.skipped = put_failed_holding_;
                rec.success = false;
                rec.note = "already holding " + *held;
                failed_pickups_.insert(b.target);
                return;
            }
        }
        const std::string& place = b.kind == BehaviorKind::PutObj ? b.surface : b.target;
        if (!world_.class_in_range(place, range)) {
            Behavior nav;
            nav.kind = BehaviorKind::TargetedNav;
            nav.target = place;
            nav.reference = b.reference;
            nav.relation = b.relation;
            std::string nav_note;
            if (!targeted_nav(nav, nav_note) &&
                !world_.class_in_range(place, range)) {
                rec.success = false;
                // The manipulation itself was never attempted; keep it out of
                // the per-type success table but let it fail the task.
                rec.skipped = true;
                rec.note = "could not reach " + place + ": " + nav_note;
                if (b.kind == BehaviorKind::PickupObj) failed_pickups_.insert(b.target);
                if (b.kind == BehaviorKind::PutObj && world_.held())
                    put_failed_holding_ = true;
                return;
            }
        }
        Outcome out;
        switch (b.kind) {
            case BehaviorKind::PickupObj:
                out = world_.pickup(b.target, range);
                emit(Action::interact(ActionKind::Pickup, b.target));
                if (!out.ok) failed_pickups_.insert(b.target);
                break;
            case BehaviorKind::PutObj:
                out = world_.put(b.target, b.surface, range);
                emit(Action::interact(ActionKind::Put, b.target));
                break;
            case BehaviorKind::OpenObj:
                out = world_.open_close(b.target, range, true);
                emit(Action::interact(ActionKind::Open, b.target));
                break;
            case BehaviorKind::CloseObj:
                out = world_.open_close(b.target, range, false);
                emit(Action::interact(ActionKind::Close, b.target));
                break;
            case BehaviorKind::ToggleObj:
                out = world_.toggle(b.target, range, b.toggle_on);
                emit(Action::interact(b.toggle_on ? ActionKind::ToggleOn : ActionKind::ToggleOff,
                                      b.target));
                break;
            case BehaviorKind::SliceObj:
                out = world_.slice(b.target, range);
                emit(Action::interact(ActionKind::Slice, b.target));
                break;
            default: break;
        }
        remap();
        if (b.kind == BehaviorKind::PutObj)
            put_failed_holding_ = !out.ok && world_.held().has_value();
        rec.success = out.ok;
        rec.note = out.why;
    }

    EpisodeWorld& world_;
    PlannerConfig cfg_;
    BevGrid map_;
    Rng rng_;
    std::vector<Action> actions_;
    std::set<std::string> failed_pickups_;
    bool put_failed_holding_ = false;
    int current_target_class_ = -1;
    int safety_violations_ = 0;
    int actions_this_goal_ = 0;
    std::uint64_t obs_index_ = 1;
};

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeTrace {
    std::vector<SubGoalRecord> subgoals;
    std::vector<Action> actions;
    int collisions = 0;
    int safety_violations = 0;

    int action_count() const { return static_cast<int>(actions.size()); }

    json to_json() const {
        json goals = json::array();
        for (const auto& g : subgoals)
            goals.push_back({{"type", g.type},
                             {"success", g.success},
                             {"skipped", g.skipped},
                             {"note", g.note}});
        json acts = json::array();
        for (const auto& a : actions) acts.push_back(a.to_json());
        return json{{"subgoals", goals},
                    {"actions", acts},
                    {"collisions", collisions},
                    {"safety_violations", safety_violations}};
    }
};

inline EpisodeTrace run_episode(const simworld::Room& room, const simworld::AgentPose& start,
                                const std::vector<std::string>& instructions,
                                const lang::TaggerModel& tagger, const PlannerConfig& cfg) {
    EpisodeWorld world(room, start);
    Planner planner(world, cfg);
    EpisodeTrace trace;
    for (const auto& text : instructions) {
        SubGoalRecord rec;
        try {
            const auto tagged = lang::tag(tagger, text);
            const Behavior b = classify_behavior(tagged);
            rec = planner.run(b);
        } catch (const Error& e) {
            rec.type = "Other";
            rec.success = false;
            rec.note = e.what();
        }
        trace.subgoals.push_back(std::move(rec));
    }
    trace.actions = planner.actions();
    trace.actions.push_back(Action::move(ActionKind::Stop));
    trace.collisions = world.collisions();
    trace.safety_violations = planner.safety_violations();
    return trace;
}

// Episode scripts on disk: room reference, start pose, instruction list, and
// the expert action count used by path weighting.
struct EpisodeScript {
    std::string room_ref;
    simworld::AgentPose start;
    std::vector<std::string> instructions;
    int expert_action_count = 0;

    json to_json() const {
        return json{{"room", room_ref},
                    {"start", {{"x", start.x}, {"z", start.z}, {"heading", start.heading}}},
                    {"instructions", instructions},
                    {"expert_action_count", expert_action_count}};
    }

    static EpisodeScript from_json(const json& j) {
        EpisodeScript s;
        s.room_ref = j.at("room").get<std::string>();
        s.start.x = j.at("start").at("x").get<double>();
        s.start.z = j.at("start").at("z").get<double>();
        s.start.heading = j.at("start").at("heading").get<double>();
        for (const auto& t : j.at("instructions")) s.instructions.push_back(t.get<std::string>());
        s.expert_action_count = j.value("expert_action_count", 0);
        return s;
    }
};

}  // namespace navlang::planner
