#pragma once

// Referring-expression resolution over segmentation frames. Objects are
// 4-connected components of the class raster; queries select a component by
// name, optionally filtered through a centroid relation against a reference
// object. A generator emits corpora whose queries are answerable by
// construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "navlang/core.hpp"
#include "navlang/simworld.hpp"

namespace navlang::grounding {

struct SceneObject {
    int component_id = 0;
    int class_id = 0;
    std::string name;
    std::vector<int> pixels;   // row-major indices, ascending
    std::vector<int> contour;  // mask pixels bordering a non-mask pixel or the frame edge
    double cx = 0.0, cy = 0.0;  // centroid in pixel coordinates
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounding box
    int area = 0;

    double bbox_diagonal() const {
        const double dx = x1 - x0 + 1, dy = y1 - y0 + 1;
        return std::sqrt(dx * dx + dy * dy);
    }
};

struct SceneObjects {
    int h = 0, w = 0;
    std::vector<SceneObject> objects;

    const SceneObject* by_component(int id) const {
        for (const auto& o : objects)
            if (o.component_id == id) return &o;
        return nullptr;
    }
};

// Components of queryable classes: everything except floor, wall, and
// background. Components smaller than min_area pixels are dropped.
inline SceneObjects extract_scene(const simworld::SegFrame& seg, int min_area = 4) {
    SceneObjects scene;
    scene.h = seg.h;
    scene.w = seg.w;
    std::vector<int> comp(static_cast<std::size_t>(seg.h) * seg.w, -1);
    int next_id = 0;
    for (int start = 0; start < seg.h * seg.w; ++start) {
        const int cls = seg.cls[static_cast<std::size_t>(start)];
        if (cls == simworld::kBackgroundId || cls == simworld::kFloorClass ||
            cls == simworld::kWallClass)
            continue;
        if (comp[static_cast<std::size_t>(start)] != -1) continue;
        std::vector<int> pixels;
        std::deque<int> queue = {start};
        comp[static_cast<std::size_t>(start)] = next_id;
        while (!queue.empty()) {
            const int p = queue.front();
            queue.pop_front();
            pixels.push_back(p);
            const int x = p % seg.w, y = p / seg.w;
            const int nbrs[4] = {x > 0 ? p - 1 : -1, x + 1 < seg.w ? p + 1 : -1,
                                 y > 0 ? p - seg.w : -1, y + 1 < seg.h ? p + seg.w : -1};
            for (int q : nbrs) {
                if (q < 0 || comp[static_cast<std::size_t>(q)] != -1) continue;
                if (seg.cls[static_cast<std::size_t>(q)] != cls) continue;
                comp[static_cast<std::size_t>(q)] = next_id;
                queue.push_back(q);
            }
        }
        if (static_cast<int>(pixels.size()) < min_area) continue;
        std::sort(pixels.begin(), pixels.end());
        SceneObject obj;
        obj.component_id = next_id++;
        obj.class_id = cls;
        obj.name = simworld::class_info(cls).name;
        obj.area = static_cast<int>(pixels.size());
        obj.x0 = seg.w;
        obj.y0 = seg.h;
        double sx = 0, sy = 0;
        for (int p : pixels) {
            const int x = p % seg.w, y = p / seg.w;
            sx += x;
            sy += y;
            obj.x0 = std::min(obj.x0, x);
            obj.x1 = std::max(obj.x1, x);
            obj.y0 = std::min(obj.y0, y);
            obj.y1 = std::max(obj.y1, y);
            bool border = x == 0 || x == seg.w - 1 || y == 0 || y == seg.h - 1;
            if (!border) {
                for (int q : {p - 1, p + 1, p - seg.w, p + seg.w})
                    border |= seg.cls[static_cast<std::size_t>(q)] != cls;
            }
            if (border) obj.contour.push_back(p);
        }
        obj.cx = sx / obj.area;
        obj.cy = sy / obj.area;
        obj.pixels = std::move(pixels);
        scene.objects.push_back(std::move(obj));
    }
    return scene;
}

enum class Relation { LeftOf, RightOf, Above, Below, Beside };

inline const std::string& relation_name(Relation r) {
    static const std::array<std::string, 5> names = {"left-of", "right-of", "above", "below",
                                                     "beside"};
    return names[static_cast<std::size_t>(r)];
}

inline Relation relation_from(const std::string& name) {
    if (name == "next-to") return Relation::Beside;
    for (int r = 0; r < 5; ++r)
        if (relation_name(static_cast<Relation>(r)) == name) return static_cast<Relation>(r);
    throw Error("unknown relation: " + name);
}

// Centroid predicate of candidate against reference. Pixel y grows
// downward, so "above" means smaller y.
inline bool relation_holds(Relation r, const SceneObject& cand, const SceneObject& ref,
                           double beside_factor = 1.5) {
    switch (r) {
        case Relation::LeftOf: return cand.cx < ref.cx;
        case Relation::RightOf: return cand.cx > ref.cx;
        case Relation::Above: return cand.cy < ref.cy;
        case Relation::Below: return cand.cy > ref.cy;
        case Relation::Beside: {
            const double dx = cand.cx - ref.cx, dy = cand.cy - ref.cy;
            return std::sqrt(dx * dx + dy * dy) <= beside_factor * ref.bbox_diagonal();
        }
    }
    throw Error("unhandled relation");
}

struct GroundingQuery {
    std::string target;
    std::optional<Relation> relation;
    std::string reference;

    void validate() const {
        if (target.empty()) throw Error("query needs a target name");
        if (relation && reference.empty()) throw Error("relational query needs a reference");
    }

    json to_json() const {
        json j{{"target", target}};
        if (relation) {
            j["relation"] = relation_name(*relation);
            j["reference"] = reference;
        }
        return j;
    }

    static GroundingQuery from_json(const json& j) {
        GroundingQuery q;
        q.target = j.at("target").get<std::string>();
        if (j.contains("relation")) {
            q.relation = relation_from(j.at("relation").get<std::string>());
            q.reference = j.at("reference").get<std::string>();
        }
        q.validate();
        return q;
    }
};

enum class ResolveStatus { Resolved, Ambiguous, NotVisible };

struct ResolveReport {
    ResolveStatus status = ResolveStatus::NotVisible;
    int component_id = -1;  // valid when Resolved
    int survivor_count = 0;
    std::string detail;
};

struct ResolveOptions {
    double beside_factor = 1.5;
};

// Name match, optional relation filter, and a verdict: exactly one survivor
// resolves, otherwise the report carries the survivor count. An ambiguous
// reference name denotes its largest visible component.
inline ResolveReport resolve(const GroundingQuery& query, const SceneObjects& scene,
                             const ResolveOptions& opt = {}) {
    query.validate();
    ResolveReport rep;
    std::vector<const SceneObject*> candidates;
    for (const auto& o : scene.objects)
        if (o.name == query.target) candidates.push_back(&o);
    if (candidates.empty()) {
        rep.status = ResolveStatus::NotVisible;
        rep.detail = "target not visible: " + query.target;
        return rep;
    }
    if (query.relation) {
        const SceneObject* ref = nullptr;
        for (const auto& o : scene.objects) {
            if (o.name != query.reference) continue;
            if (!ref || o.area > ref->area) ref = &o;
        }
        if (!ref) {
            rep.status = ResolveStatus::NotVisible;
            rep.detail = "reference not visible: " + query.reference;
            return rep;
        }
        std::vector<const SceneObject*> kept;
        for (const auto* c : candidates) {
            if (c->component_id == ref->component_id) continue;  // a thing is not beside itself
            if (relation_holds(*query.relation, *c, *ref, opt.beside_factor)) kept.push_back(c);
        }
        candidates = std::move(kept);
    }
    rep.survivor_count = static_cast<int>(candidates.size());
    if (candidates.size() == 1) {
        rep.status = ResolveStatus::Resolved;
        rep.component_id = candidates[0]->component_id;
    } else {
        rep.status = ResolveStatus::Ambiguous;
        rep.detail = candidates.empty() ? "no object satisfies the relation"
                                        : "multiple objects satisfy the query";
    }
    return rep;
}

struct GroundingEntry {
    int room_index = 0;
    simworld::AgentPose pose;
    simworld::SegFrame frame;
    GroundingQuery query;
    int answer_component = -1;

    json to_json() const {
        return json{{"room", room_index},
                    {"pose", {{"x", pose.x}, {"z", pose.z}, {"heading", pose.heading}}},
                    {"query", query.to_json()},
                    {"answer", answer_component}};
    }
};

// Corpus whose every entry satisfies resolve(query, scene) == answer; the
// generator only emits queries it has verified against its own frame.
inline std::vector<GroundingEntry> generate_grounding_corpus(
    const std::vector<simworld::Room>& rooms, int count, std::uint64_t seed,
    const ResolveOptions& opt = {}) {
    if (rooms.empty()) throw Error("grounding corpus needs rooms");
    Rng rng(seed);
    std::vector<GroundingEntry> corpus;
    int guard = 0;
    while (static_cast<int>(corpus.size()) < count) {
        if (++guard > count * 200) throw Error("grounding corpus generation stalled");
        const int room_index = rng.uniform_int(0, static_cast<int>(rooms.size()) - 1);
        const simworld::Room& room = rooms[static_cast<std::size_t>(room_index)];
        const simworld::AgentPose pose = simworld::sample_pose(room, rng);
        simworld::RenderParams params;  // oracle frames are noiseless
        const simworld::HeadingFrame rendered =
            simworld::render_frame(room, pose, pose.heading, params);
        const SceneObjects scene = extract_scene(rendered.seg);
        if (scene.objects.empty()) continue;
        const SceneObject& target =
            scene.objects[static_cast<std::size_t>(rng.uniform_int(
                0, static_cast<int>(scene.objects.size()) - 1))];
        int same_name = 0;
        for (const auto& o : scene.objects) same_name += o.name == target.name ? 1 : 0;

        GroundingEntry entry;
        entry.room_index = room_index;
        entry.pose = pose;
        entry.query.target = target.name;
        if (same_name == 1 && rng.bernoulli(0.5)) {
            entry.query.relation.reset();
        } else {
            // Search relation/reference pairs until the query singles out
            // the chosen component.
            std::vector<Relation> rels = {Relation::LeftOf, Relation::RightOf, Relation::Above,
                                          Relation::Below, Relation::Beside};
            for (std::size_t i = rels.size(); i > 1; --i)
                std::swap(rels[i - 1],
                          rels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
            bool found = false;
            for (const Relation r : rels) {
                for (const auto& ref : scene.objects) {
                    if (ref.component_id == target.component_id) continue;
                    GroundingQuery q;
                    q.target = target.name;
                    q.relation = r;
                    q.reference = ref.name;
                    const ResolveReport rep = resolve(q, scene, opt);
                    if (rep.status == ResolveStatus::Resolved &&
                        rep.component_id == target.component_id) {
                        entry.query = q;
                        found = true;
                        break;
                    }
                }
                if (found) break;
            }
            if (!found) {
                if (same_name != 1) continue;  // cannot single it out; resample
                entry.query.relation.reset();
            }
        }
        const ResolveReport check = resolve(entry.query, scene, opt);
        if (check.status != ResolveStatus::Resolved ||
            check.component_id != target.component_id)
            continue;
        entry.frame = rendered.seg;
        entry.answer_component = target.component_id;
        corpus.push_back(std::move(entry));
    }
    return corpus;
}

}  // namespace navlang::grounding
