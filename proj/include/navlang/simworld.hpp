#pragma once

// Synthetic desk-scale 2.5D rooms and their sensors. Rooms are rectangles
// with axis-aligned extruded furniture; the renderer raycasts panoramic
// depth + segmentation frames, and ground_truth_bev emits the true
// egocentric collision map used as training/eval reference.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "navlang/core.hpp"

namespace navlang::simworld {

enum class SizeClass : std::uint8_t { Small = 0, Medium = 1, Big = 2 };

inline const char* size_class_name(SizeClass s) {
    switch (s) {
        case SizeClass::Small: return "small";
        case SizeClass::Medium: return "medium";
        case SizeClass::Big: return "big";
    }
    return "small";
}

struct ClassInfo {
    int id;
    const char* name;
    SizeClass size;
    double typ_w, typ_d;  // typical footprint, meters
    bool pickupable, openable, toggleable;
};

inline constexpr int kFloorClass = 0;
inline constexpr int kWallClass = 1;
inline constexpr int kBackgroundId = 255;

inline const std::vector<ClassInfo>& class_registry() {
    static const std::vector<ClassInfo> table = {
        {0, "floor", SizeClass::Small, 0.0, 0.0, false, false, false},
        {1, "wall", SizeClass::Big, 0.0, 0.0, false, false, false},
        {2, "bed", SizeClass::Big, 2.0, 1.5, false, false, false},
        {3, "sofa", SizeClass::Big, 1.75, 1.0, false, false, false},
        {4, "desk", SizeClass::Medium, 1.25, 0.75, false, false, false},
        {5, "dresser", SizeClass::Medium, 1.0, 0.5, false, true, false},
        {6, "table", SizeClass::Medium, 1.0, 1.0, false, false, false},
        {7, "bookshelf", SizeClass::Medium, 1.0, 0.5, false, false, false},
        {8, "sidetable", SizeClass::Small, 0.5, 0.5, false, false, false},
        {9, "stool", SizeClass::Small, 0.5, 0.5, false, false, false},
        {10, "lamp", SizeClass::Small, 0.25, 0.25, false, false, true},
        {11, "box", SizeClass::Small, 0.5, 0.5, true, true, false},
        {12, "book", SizeClass::Small, 0.25, 0.25, true, false, false},
        {13, "cellphone", SizeClass::Small, 0.25, 0.25, true, false, false},
    };
    return table;
}

inline int num_classes() { return static_cast<int>(class_registry().size()); }

inline const ClassInfo& class_info(int id) {
    const auto& reg = class_registry();
    if (id < 0 || id >= static_cast<int>(reg.size())) throw Error("unknown class id");
    return reg[static_cast<std::size_t>(id)];
}

inline std::optional<int> class_by_name(const std::string& name) {
    for (const auto& c : class_registry())
        if (name == c.name) return c.id;
    return std::nullopt;
}

struct PlacedObject {
    int class_id = 0;
    std::string name;
    Rect footprint;
    SizeClass size_class = SizeClass::Small;
    bool pickupable = false, openable = false, toggleable = false;

    json to_json() const {
        std::vector<std::string> flags;
        if (pickupable) flags.push_back("pickupable");
        if (openable) flags.push_back("openable");
        if (toggleable) flags.push_back("toggleable");
        return json{{"class", class_info(class_id).name},
                    {"name", name},
                    {"rect", {footprint.x0, footprint.z0, footprint.x1, footprint.z1}},
                    {"size_class", size_class_name(size_class)},
                    {"flags", flags}};
    }

    static PlacedObject from_json(const json& j) {
        PlacedObject o;
        auto cid = class_by_name(j.at("class").get<std::string>());
        if (!cid) throw Error("room references unknown class " + j.at("class").get<std::string>());
        o.class_id = *cid;
        o.name = j.at("name").get<std::string>();
        const auto& r = j.at("rect");
        o.footprint = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                       r.at(3).get<double>()};
        const std::string sz = j.at("size_class").get<std::string>();
        o.size_class = sz == "big" ? SizeClass::Big
                                   : (sz == "medium" ? SizeClass::Medium : SizeClass::Small);
        for (const auto& f : j.at("flags")) {
            const std::string s = f.get<std::string>();
            if (s == "pickupable") o.pickupable = true;
            if (s == "openable") o.openable = true;
            if (s == "toggleable") o.toggleable = true;
        }
        return o;
    }
};

// Rectangular room [0,width] x [0,height] with a navigability mask at cell
// resolution r. Mask and dimensions are rebuilt by finalize(); callers that
// edit `objects` must call it again.
struct Room {
    std::int64_t id = 0;
    double width = 0.0, height = 0.0;
    double r = 0.25;
    std::vector<PlacedObject> objects;

    int nx = 0, nz = 0;
    std::vector<std::uint8_t> mask;  // 1 = navigable

    void finalize() {
        nx = static_cast<int>(std::llround(width / r));
        nz = static_cast<int>(std::llround(height / r));
        mask.assign(static_cast<std::size_t>(nx) * nz, 0);
        for (int iz = 0; iz < nz; ++iz)
            for (int ix = 0; ix < nx; ++ix) {
                const Rect cell = cell_rect(ix, iz);
                bool free = true;
                for (const auto& o : objects)
                    if (cell.overlaps(o.footprint)) {
                        free = false;
                        break;
                    }
                mask[static_cast<std::size_t>(iz) * nx + ix] = free ? 1 : 0;
            }
    }

    Rect bounds() const { return {0.0, 0.0, width, height}; }
    Rect cell_rect(int ix, int iz) const {
        return {ix * r, iz * r, (ix + 1) * r, (iz + 1) * r};
    }
    Vec2 cell_center(int ix, int iz) const { return {(ix + 0.5) * r, (iz + 0.5) * r}; }
    bool cell_in_bounds(int ix, int iz) const { return ix >= 0 && ix < nx && iz >= 0 && iz < nz; }

    bool navigable(int ix, int iz) const {
        if (!cell_in_bounds(ix, iz)) return false;
        return mask[static_cast<std::size_t>(iz) * nx + ix] != 0;
    }

    // Cell holding a world position; positions on a boundary belong to the
    // higher cell, matching Rect::contains being closed.
    std::pair<int, int> cell_of(Vec2 p) const {
        return {static_cast<int>(std::floor(p.x / r)), static_cast<int>(std::floor(p.z / r))};
    }

    bool navigable_pos(Vec2 p) const {
        auto [ix, iz] = cell_of(p);
        return navigable(ix, iz);
    }

    json to_json() const {
        json objs = json::array();
        for (const auto& o : objects) objs.push_back(o.to_json());
        return json{{"id", id}, {"width", width}, {"height", height}, {"r", r},
                    {"objects", std::move(objs)}};
    }

    static Room from_json(const json& j) {
        Room room;
        room.id = j.at("id").get<std::int64_t>();
        room.width = j.at("width").get<double>();
        room.height = j.at("height").get<double>();
        room.r = j.value("r", 0.25);
        for (const auto& oj : j.at("objects")) room.objects.push_back(PlacedObject::from_json(oj));
        room.finalize();
        return room;
    }
};

// Invariant audit; returns human-readable violations, empty when sound.
inline std::vector<std::string> audit_room(const Room& room) {
    std::vector<std::string> bad;
    auto near_multiple = [&](double x) {
        const double q = x / room.r;
        return std::abs(q - std::llround(q)) < 1e-9;
    };
    if (room.width <= 0 || room.height <= 0) bad.push_back("non-positive room dimensions");
    if (!near_multiple(room.width) || !near_multiple(room.height))
        bad.push_back("room dimensions not aligned to cell resolution");
    for (std::size_t a = 0; a < room.objects.size(); ++a) {
        const auto& o = room.objects[a];
        if (o.footprint.area() <= 0) bad.push_back(o.name + ": empty footprint");
        if (o.footprint.x0 < 0 || o.footprint.z0 < 0 || o.footprint.x1 > room.width ||
            o.footprint.z1 > room.height)
            bad.push_back(o.name + ": footprint outside room");
        for (std::size_t b = a + 1; b < room.objects.size(); ++b)
            if (o.footprint.overlaps(room.objects[b].footprint))
                bad.push_back(o.name + " overlaps " + room.objects[b].name);
    }
    bool any_nav = false;
    for (int iz = 0; iz < room.nz && !any_nav; ++iz)
        for (int ix = 0; ix < room.nx && !any_nav; ++ix) any_nav = room.navigable(ix, iz);
    if (!any_nav) bad.push_back("no navigable cell");
    return bad;
}

struct RoomGenConfig {
    double r = 0.25;
    double min_width = 4.5, max_width = 6.0;
    double min_height = 4.0, max_height = 5.5;
    int min_objects = 6, max_objects = 9;
    int min_small = 1, min_medium = 1, min_big = 1;
    int min_pickupable = 1;
    double clearance = 0.5;  // minimum gap between footprints and to walls
    int placement_attempts = 60;
    int room_attempts = 25;

    // Densely furnished profile; occlusion makes raw evidence much less
    // reliable, which is the regime map refinement is trained for.
    static RoomGenConfig cluttered() {
        RoomGenConfig cfg;
        cfg.min_objects = 10;
        cfg.max_objects = 13;
        cfg.clearance = 0.35;
        cfg.placement_attempts = 90;
        return cfg;
    }
};

namespace detail {

inline double snap(double x, double r) { return std::llround(x / r) * r; }

inline bool rooms_connected(const Room& room) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(room.nx) * room.nz, 0);
    std::vector<std::pair<int, int>> stack;
    int total = 0;
    for (int iz = 0; iz < room.nz; ++iz)
        for (int ix = 0; ix < room.nx; ++ix)
            if (room.navigable(ix, iz)) {
                ++total;
                if (stack.empty()) {
                    stack.push_back({ix, iz});
                    seen[static_cast<std::size_t>(iz) * room.nx + ix] = 1;
                }
            }
    int reached = 0;
    while (!stack.empty()) {
        auto [ix, iz] = stack.back();
        stack.pop_back();
        ++reached;
        const int dx[] = {1, -1, 0, 0}, dz[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int jx = ix + dx[k], jz = iz + dz[k];
            if (!room.navigable(jx, jz)) continue;
            auto& s = seen[static_cast<std::size_t>(jz) * room.nx + jx];
            if (!s) {
                s = 1;
                stack.push_back({jx, jz});
            }
        }
    }
    return reached == total;
}

}  // namespace detail

// Deterministic room synthesis. A fixed seed yields a byte-identical room;
// throws when the config cannot be satisfied within its retry budgets.
inline Room generate_room(std::uint64_t seed, const RoomGenConfig& cfg = {}) {
    Rng rng(seed);
    for (int attempt = 0; attempt < cfg.room_attempts; ++attempt) {
        Room room;
        room.id = static_cast<std::int64_t>(seed);
        room.r = cfg.r;
        room.width = detail::snap(rng.uniform(cfg.min_width, cfg.max_width), cfg.r);
        room.height = detail::snap(rng.uniform(cfg.min_height, cfg.max_height), cfg.r);

        std::vector<int> by_size[3];
        std::vector<int> pickupables;
        for (const auto& c : class_registry()) {
            if (c.id == kFloorClass || c.id == kWallClass) continue;
            by_size[static_cast<int>(c.size)].push_back(c.id);
            if (c.pickupable) pickupables.push_back(c.id);
        }

        std::vector<int> wanted;
        for (int k = 0; k < cfg.min_big; ++k) wanted.push_back(rng.pick(by_size[2]));
        for (int k = 0; k < cfg.min_medium; ++k) wanted.push_back(rng.pick(by_size[1]));
        for (int k = 0; k < cfg.min_small; ++k) wanted.push_back(rng.pick(by_size[0]));
        for (int k = 0; k < cfg.min_pickupable; ++k) wanted.push_back(rng.pick(pickupables));
        const int total = rng.uniform_int(cfg.min_objects, cfg.max_objects);
        std::vector<int> all;
        for (const auto& c : class_registry())
            if (c.id != kFloorClass && c.id != kWallClass) all.push_back(c.id);
        while (static_cast<int>(wanted.size()) < total) wanted.push_back(rng.pick(all));

        std::vector<int> per_class_count(class_registry().size(), 0);
        bool placed_all_required = true;
        for (std::size_t idx = 0; idx < wanted.size(); ++idx) {
            const auto& info = class_info(wanted[idx]);
            bool placed = false;
            for (int t = 0; t < cfg.placement_attempts && !placed; ++t) {
                const double jw = rng.uniform(0.8, 1.2), jd = rng.uniform(0.8, 1.2);
                const double w = std::max(cfg.r, detail::snap(info.typ_w * jw, cfg.r));
                const double d = std::max(cfg.r, detail::snap(info.typ_d * jd, cfg.r));
                if (w + 2 * cfg.clearance >= room.width || d + 2 * cfg.clearance >= room.height)
                    break;
                const double x0 =
                    detail::snap(rng.uniform(cfg.clearance, room.width - w - cfg.clearance), cfg.r);
                const double z0 = detail::snap(
                    rng.uniform(cfg.clearance, room.height - d - cfg.clearance), cfg.r);
                const Rect rect{x0, z0, x0 + w, z0 + d};
                bool ok = rect.x0 >= cfg.clearance - 1e-9 && rect.z0 >= cfg.clearance - 1e-9 &&
                          rect.x1 <= room.width - cfg.clearance + 1e-9 &&
                          rect.z1 <= room.height - cfg.clearance + 1e-9;
                for (const auto& o : room.objects)
                    if (ok && rect.expanded(cfg.clearance).overlaps(o.footprint)) ok = false;
                if (!ok) continue;
                PlacedObject obj;
                obj.class_id = info.id;
                obj.size_class = info.size;
                obj.pickupable = info.pickupable;
                obj.openable = info.openable;
                obj.toggleable = info.toggleable;
                obj.footprint = rect;
                int& count = per_class_count[static_cast<std::size_t>(info.id)];
                ++count;
                obj.name = count == 1 ? info.name : info.name + std::string("_") + std::to_string(count);
                room.objects.push_back(obj);
                placed = true;
            }
            // The first entries of `wanted` are the hard minimums.
            if (!placed && idx < static_cast<std::size_t>(cfg.min_big + cfg.min_medium +
                                                          cfg.min_small + cfg.min_pickupable))
                placed_all_required = false;
        }
        if (!placed_all_required) continue;
        room.finalize();
        if (!audit_room(room).empty()) continue;
        if (!detail::rooms_connected(room)) continue;
        return room;
    }
    throw Error("unsatisfiable room config for seed " + std::to_string(seed));
}

// Agent camera pose. Positions sit on navigable cell centers; heading is
// clockwise from +z in radians.
struct AgentPose {
    double x = 0.0, z = 0.0;
    double heading = 0.0;
    double camera_height = 1.5;
    double fov = kPi / 2.0;  // horizontal, also the panorama heading step
    double focal = 40.0;     // horizontal focal, pixels

    Vec2 pos() const { return {x, z}; }
};

struct RenderParams {
    int h = 60, w = 80;
    double max_depth = 5.0;
    double wall_height = 2.5;
    double focal_y = 8.0;  // vertical focal, pixels; short so the floor is seen close-in
    // Extrusion height per size class, indexed by SizeClass. Everything sits
    // below the camera so object tops are visible from above.
    std::array<double, 3> size_heights{0.5, 0.95, 0.7};
    double seg_noise = 0.0;  // per-pixel class flip probability
    std::uint64_t noise_seed = 0;
    // Persistent misclassification: each object instance's reported class is
    // redrawn once per (seed, room, instance), so the same object lies the
    // same way in every frame. Geometry is unaffected.
    double class_flip = 0.0;
    std::uint64_t class_flip_seed = 0;
};

struct DepthFrame {
    int h = 0, w = 0;
    std::vector<double> d;  // perpendicular distance of the seen point, meters
    double at(int i, int j) const { return d[static_cast<std::size_t>(i) * w + j]; }
};

struct SegFrame {
    int h = 0, w = 0;
    std::vector<int> cls;
    int at(int i, int j) const { return cls[static_cast<std::size_t>(i) * w + j]; }
};

struct HeadingFrame {
    double heading = 0.0;
    DepthFrame depth;
    SegFrame seg;
};

struct PanoramaObservation {
    double theta = kPi / 2.0;  // angular step between frames
    std::vector<HeadingFrame> frames;
};

namespace detail {

struct RayHit {
    double t_in = 0.0, t_out = 0.0;
    int class_id = 0;
    double height = 0.0;
};

// Slab intersection in the perpendicular-distance parameterization:
// P(t) = origin + t * (forward + tan(alpha) * right), so t is the distance
// along the optical axis and doubles as the stored depth.
inline bool slab(const Rect& rect, Vec2 origin, Vec2 dir, double& t0, double& t1) {
    t0 = 0.0;
    t1 = std::numeric_limits<double>::infinity();
    const double lo[2] = {rect.x0, rect.z0}, hi[2] = {rect.x1, rect.z1};
    const double o[2] = {origin.x, origin.z}, v[2] = {dir.x, dir.z};
    for (int a = 0; a < 2; ++a) {
        if (std::abs(v[a]) < 1e-15) {
            if (o[a] < lo[a] || o[a] > hi[a]) return false;
            continue;
        }
        double ta = (lo[a] - o[a]) / v[a], tb = (hi[a] - o[a]) / v[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

}  // namespace detail

// Raycast one h x w frame at an absolute heading. Depth is perpendicular
// distance (clamped to max_depth); segmentation is the class of the first
// surface along each pixel's sight line, kBackgroundId past the walls or
// out of range.
inline HeadingFrame render_frame(const Room& room, const AgentPose& pose, double heading,
                                 const RenderParams& params) {
    if (!room.navigable_pos(pose.pos())) throw Error("invalid pose: not on a navigable cell");

    HeadingFrame out;
    out.heading = heading;
    out.depth = {params.h, params.w,
                 std::vector<double>(static_cast<std::size_t>(params.h) * params.w, params.max_depth)};
    out.seg = {params.h, params.w,
               std::vector<int>(static_cast<std::size_t>(params.h) * params.w, kBackgroundId)};

    const double cx = (params.w - 1) / 2.0, cy = (params.h - 1) / 2.0;
    const double fx = pose.focal, fy = params.focal_y, hc = pose.camera_height;
    const Vec2 fwd = forward_dir(heading), rgt = right_dir(heading);
    const Vec2 origin = pose.pos();

    std::vector<int> reported(room.objects.size());
    for (std::size_t oi = 0; oi < room.objects.size(); ++oi) {
        reported[oi] = room.objects[oi].class_id;
        if (params.class_flip > 0.0) {
            Rng flip(params.class_flip_seed * 0x9E3779B97F4A7C15ull +
                     static_cast<std::uint64_t>(room.id) * 0x85EBCA77C2B2AE63ull + oi);
            if (flip.bernoulli(params.class_flip))
                reported[oi] = flip.uniform_int(0, num_classes() - 1);
        }
    }

    for (int j = 0; j < params.w; ++j) {
        const double tan_a = (j - cx) / fx;
        const Vec2 dir = fwd + tan_a * rgt;

        double t_wall0, t_wall1;
        detail::slab(room.bounds(), origin, dir, t_wall0, t_wall1);
        const double t_wall = t_wall1;  // exit distance from inside the room

        std::vector<detail::RayHit> hits;
        for (std::size_t oi = 0; oi < room.objects.size(); ++oi) {
            const auto& o = room.objects[oi];
            double t0, t1;
            if (detail::slab(o.footprint, origin, dir, t0, t1) && t1 > 1e-12)
                hits.push_back({std::max(t0, 0.0), t1, reported[oi],
                                params.size_heights[static_cast<int>(o.size_class)]});
        }

        for (int i = 0; i < params.h; ++i) {
            double best_t = std::numeric_limits<double>::infinity();
            int best_cls = kBackgroundId;
            auto consider = [&](double t, int cls) {
                if (t > 1e-12 && t < best_t) {
                    best_t = t;
                    best_cls = cls;
                }
            };
            for (const auto& hit : hits) {
                const double lo = cy + fy * (hc - hit.height) / hit.t_in;
                const double hi = cy + fy * hc / hit.t_in;
                if (i >= lo && i <= hi) consider(hit.t_in, hit.class_id);
                if (hit.height < hc && i > cy) {
                    const double t_top = fy * (hc - hit.height) / (i - cy);
                    if (t_top >= hit.t_in && t_top <= hit.t_out) consider(t_top, hit.class_id);
                }
            }
            {
                const double lo = cy + fy * (hc - params.wall_height) / t_wall;
                const double hi = cy + fy * hc / t_wall;
                if (i >= lo && i <= hi) consider(t_wall, kWallClass);
            }
            if (i > cy) consider(fy * hc / (i - cy), kFloorClass);

            if (std::isfinite(best_t) && best_t <= params.max_depth) {
                out.depth.d[static_cast<std::size_t>(i) * params.w + j] = best_t;
                out.seg.cls[static_cast<std::size_t>(i) * params.w + j] = best_cls;
            }
        }
    }

    if (params.seg_noise > 0.0) {
        Rng noise(params.noise_seed);
        for (auto& c : out.seg.cls)
            if (noise.bernoulli(params.seg_noise)) c = noise.uniform_int(0, num_classes() - 1);
    }
    return out;
}

// Frames at pose.heading + k*fov for k = 0..2pi/fov - 1; fov must divide 2pi
// so the panorama tiles the full azimuth with no gap or overlap.
inline PanoramaObservation render_panorama(const Room& room, const AgentPose& pose,
                                           const RenderParams& params) {
    const double frames_f = kTwoPi / pose.fov;
    const int n = static_cast<int>(std::llround(frames_f));
    if (n <= 0 || std::abs(frames_f - n) > 1e-9)
        throw Error("field of view must divide the full circle");
    PanoramaObservation obs;
    obs.theta = pose.fov;
    for (int k = 0; k < n; ++k) {
        RenderParams p = params;
        p.noise_seed = params.noise_seed * 7919u + static_cast<std::uint64_t>(k);
        obs.frames.push_back(render_frame(room, pose, pose.heading + k * pose.fov, p));
    }
    return obs;
}

// True egocentric collision map around a pose: Unknown outside the room
// (beyond walls), Obstacle for wall-straddling cells and non-target
// footprints, Target for footprints of the queried class, else Navigable.
// Grid axes follow projection conventions: u lateral-right, v forward.
inline BevGrid ground_truth_bev(const Room& room, const AgentPose& pose, int s, double r,
                                int target_class) {
    if (!room.navigable_pos(pose.pos())) throw Error("invalid pose: not on a navigable cell");
    BevGrid g(s, r, BevGrid::Mode::Labels, kNumLabels);
    const int c = g.ego();
    const Vec2 fwd = forward_dir(pose.heading), rgt = right_dir(pose.heading);
    for (int v = 0; v < s; ++v)
        for (int u = 0; u < s; ++u) {
            const Vec2 center = pose.pos() + ((u - c) * r) * rgt + ((v - c) * r) * fwd;
            const Rect cell{center.x - r / 2, center.z - r / 2, center.x + r / 2,
                            center.z + r / 2};
            CellLabel label;
            if (!cell.overlaps(room.bounds())) {
                label = CellLabel::Unknown;
            } else if (cell.x0 < -1e-9 || cell.z0 < -1e-9 || cell.x1 > room.width + 1e-9 ||
                       cell.z1 > room.height + 1e-9) {
                label = CellLabel::Obstacle;  // straddles a wall
            } else {
                label = CellLabel::Navigable;
                for (const auto& o : room.objects)
                    if (cell.overlaps(o.footprint)) {
                        label = o.class_id == target_class ? CellLabel::Target
                                                           : CellLabel::Obstacle;
                        if (label == CellLabel::Target) break;
                    }
            }
            g.set_label(u, v, label);
        }
    return g;
}

// Uniformly draw a navigable cell-center pose with an axis-aligned heading.
inline AgentPose sample_pose(const Room& room, Rng& rng) {
    std::vector<std::pair<int, int>> cells;
    for (int iz = 0; iz < room.nz; ++iz)
        for (int ix = 0; ix < room.nx; ++ix)
            if (room.navigable(ix, iz)) cells.push_back({ix, iz});
    const auto [ix, iz] = rng.pick(cells);
    AgentPose pose;
    const Vec2 p = room.cell_center(ix, iz);
    pose.x = p.x;
    pose.z = p.z;
    pose.heading = rng.uniform_int(0, 3) * (kPi / 2.0);
    return pose;
}

}  // namespace navlang::simworld
