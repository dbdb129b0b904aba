#pragma once

// Shared value types for the desk-scale navigation stack: grid/label
// conventions, planar geometry, seeded RNG helpers and JSON glue.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace navlang {

using json = nlohmann::json;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Cell semantics of refined maps. One-hot order is fixed: Unknown, Navigable,
// Target, Obstacle.
enum class CellLabel : std::uint8_t { Unknown = 0, Navigable = 1, Target = 2, Obstacle = 3 };

inline constexpr int kNumLabels = 4;

inline char label_glyph(CellLabel l) {
    switch (l) {
        case CellLabel::Unknown: return '?';
        case CellLabel::Navigable: return '-';
        case CellLabel::Target: return '*';
        case CellLabel::Obstacle: return 'I';
    }
    return '?';
}

inline const char* label_name(CellLabel l) {
    switch (l) {
        case CellLabel::Unknown: return "unknown";
        case CellLabel::Navigable: return "navigable";
        case CellLabel::Target: return "target";
        case CellLabel::Obstacle: return "obstacle";
    }
    return "unknown";
}

// Round half away from zero; the single rounding convention used for grid
// index assignment.
inline long round_half_away(double x) { return std::lround(x); }

struct Vec2 {
    double x = 0.0;
    double z = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.z}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Planar heading, clockwise from +z ("north"). forward(0) = +z, forward(pi/2) = +x.
inline Vec2 forward_dir(double heading) { return {std::sin(heading), std::cos(heading)}; }
inline Vec2 right_dir(double heading) { return {std::cos(heading), -std::sin(heading)}; }

// Axis-aligned rectangle in floor-plan coordinates, [x0,x1] x [z0,z1].
struct Rect {
    double x0 = 0.0, z0 = 0.0, x1 = 0.0, z1 = 0.0;

    double width() const { return x1 - x0; }
    double depth() const { return z1 - z0; }
    double area() const { return width() * depth(); }
    Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (z0 + z1)}; }

    bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.z >= z0 && p.z <= z1; }

    // Open intersection: shared edges do not count as overlap.
    bool overlaps(const Rect& o) const {
        return x0 < o.x1 && o.x0 < x1 && z0 < o.z1 && o.z0 < z1;
    }

    Rect expanded(double m) const { return {x0 - m, z0 - m, x1 + m, z1 + m}; }
};

// Evidence or label grid over an s x s egocentric cell lattice; ego sits on
// the center cell. Row-major storage, v (forward axis) major, u (lateral
// axis) minor, `channels` values per cell.
struct BevGrid {
    enum class Mode { Evidence, Labels };

    int s = 0;
    double r = 0.0;
    Mode mode = Mode::Evidence;
    int channels = 0;
    std::vector<double> data;

    BevGrid() = default;
    BevGrid(int s_, double r_, Mode mode_, int channels_)
        : s(s_), r(r_), mode(mode_), channels(channels_),
          data(static_cast<std::size_t>(s_) * s_ * channels_, 0.0) {
        if (s_ <= 0 || s_ % 2 == 0) throw Error("grid size must be odd and positive");
        if (r_ <= 0.0) throw Error("cell resolution must be positive");
        if (channels_ <= 0) throw Error("grid needs at least one channel");
    }

    int ego() const { return (s - 1) / 2; }
    bool in_bounds(int u, int v) const { return u >= 0 && u < s && v >= 0 && v < s; }

    double* at(int u, int v) { return data.data() + (static_cast<std::size_t>(v) * s + u) * channels; }
    const double* at(int u, int v) const {
        return data.data() + (static_cast<std::size_t>(v) * s + u) * channels;
    }

    double total_mass(int u, int v) const {
        const double* c = at(u, v);
        double t = 0.0;
        for (int l = 0; l < channels; ++l) t += c[l];
        return t;
    }

    int argmax(int u, int v) const {
        const double* c = at(u, v);
        int best = 0;
        for (int l = 1; l < channels; ++l)
            if (c[l] > c[best]) best = l;
        return best;
    }

    CellLabel label_at(int u, int v) const {
        if (mode != Mode::Labels) throw Error("label_at on evidence grid");
        return static_cast<CellLabel>(argmax(u, v));
    }

    void set_label(int u, int v, CellLabel l) {
        if (mode != Mode::Labels) throw Error("set_label on evidence grid");
        double* c = at(u, v);
        std::fill(c, c + channels, 0.0);
        c[static_cast<int>(l)] = 1.0;
    }

    // Rows printed far-to-near so "ahead" reads upward; ego marked 'A'.
    std::string ascii() const {
        std::string out;
        for (int v = s - 1; v >= 0; --v) {
            for (int u = 0; u < s; ++u) {
                if (u == ego() && v == ego())
                    out.push_back('A');
                else
                    out.push_back(label_glyph(static_cast<CellLabel>(argmax(u, v))));
            }
            out.push_back('\n');
        }
        return out;
    }

    json to_json() const {
        json cells = json::array();
        for (int v = 0; v < s; ++v) {
            json row = json::array();
            for (int u = 0; u < s; ++u) {
                const double* c = at(u, v);
                row.push_back(std::vector<double>(c, c + channels));
            }
            cells.push_back(std::move(row));
        }
        return json{{"s", s},
                    {"r", r},
                    {"mode", mode == Mode::Evidence ? "evidence" : "labels"},
                    {"cells", std::move(cells)}};
    }

    static BevGrid from_json(const json& j) {
        const std::string mode = j.at("mode").get<std::string>();
        const auto& cells = j.at("cells");
        const int s = j.at("s").get<int>();
        if (static_cast<int>(cells.size()) != s || s == 0 || cells[0].empty())
            throw Error("malformed grid dump");
        const int channels = static_cast<int>(cells[0][0].size());
        BevGrid g(s, j.at("r").get<double>(),
                  mode == "evidence" ? Mode::Evidence : Mode::Labels, channels);
        for (int v = 0; v < s; ++v)
            for (int u = 0; u < s; ++u) {
                const auto& vec = cells.at(v).at(u);
                if (static_cast<int>(vec.size()) != channels) throw Error("ragged grid dump");
                std::copy(vec.begin(), vec.end(), g.at(u, v));
            }
        return g;
    }
};

// Seeded RNG wrapper; every stochastic routine takes one of these (or a raw
// seed) so reruns are reproducible.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(std::uint64_t seed) : gen(seed) {}

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return std::uniform_int_distribution<int>(lo, hi)(gen);
    }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(gen); }

    template <typename T>
    const T& pick(const std::vector<T>& xs) {
        if (xs.empty()) throw Error("pick from empty set");
        return xs[static_cast<std::size_t>(uniform_int(0, static_cast<int>(xs.size()) - 1))];
    }

    std::uint64_t fork() { return gen(); }
};

// Stable 64-bit FNV-1a; feature hashing must not depend on std::hash.
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace navlang
