#pragma once

// Egocentric bird's-eye-view projection: backproject depth pixels through the
// calibration matrix, assign them to an s x s cell lattice, accumulate
// per-class evidence counts, and fuse the panorama's headings into one grid.

#include <cmath>
#include <cstdint>
#include <vector>

#include "navlang/core.hpp"
#include "navlang/simworld.hpp"

namespace navlang::projection {

struct Mat3 {
    double m[9] = {0};

    static Mat3 identity() {
        Mat3 k;
        k.m[0] = k.m[4] = k.m[8] = 1.0;
        return k;
    }
    double at(int r, int c) const { return m[r * 3 + c]; }
    double& at(int r, int c) { return m[r * 3 + c]; }
};

// Calibration for backprojection. K maps (i, j, f) * d to metric camera
// coordinates: p_x lateral (right positive), p_y vertical image direction
// (down positive, so height above floor = camera_height - p_y), p_z depth
// along the optical axis. V is the maximum vision range and D the maximum
// depth pixel value, both meters here.
struct CameraIntrinsics {
    Mat3 K;
    double f = 40.0;
    double V = 5.0;
    double D = 5.0;
    int h = 60, w = 80;
};

// Intrinsics matching the renderer: separate horizontal/vertical focals and
// principal point at the pixel-center midline, all folded into K.
inline CameraIntrinsics default_intrinsics(int h = 60, int w = 80, double fx = 40.0,
                                           double fy = 8.0, double V = 5.0, double D = 5.0) {
    CameraIntrinsics intr;
    intr.f = fx;
    intr.V = V;
    intr.D = D;
    intr.h = h;
    intr.w = w;
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    Mat3& K = intr.K;
    K.at(0, 0) = 0.0;
    K.at(0, 1) = 1.0 / fx;
    K.at(0, 2) = -cx / (fx * intr.f);
    K.at(1, 0) = 1.0 / fy;
    K.at(1, 1) = 0.0;
    K.at(1, 2) = -cy / (fy * intr.f);
    K.at(2, 0) = 0.0;
    K.at(2, 1) = 0.0;
    K.at(2, 2) = 1.0 / intr.f;
    return intr;
}

struct PointCloud {
    int h = 0, w = 0;
    std::vector<double> px, py, pz;
    std::size_t size() const { return px.size(); }
};

// p(i,j) = K * (i, j, f)^T * d_ij for every pixel, exactly as written.
inline PointCloud backproject(const simworld::DepthFrame& depth, const Mat3& K, double f) {
    PointCloud pc;
    pc.h = depth.h;
    pc.w = depth.w;
    const std::size_t n = static_cast<std::size_t>(depth.h) * depth.w;
    pc.px.resize(n);
    pc.py.resize(n);
    pc.pz.resize(n);
    for (int i = 0; i < depth.h; ++i)
        for (int j = 0; j < depth.w; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * depth.w + j;
            const double d = depth.d[idx];
            const double vi = i, vj = j;
            pc.px[idx] = (K.at(0, 0) * vi + K.at(0, 1) * vj + K.at(0, 2) * f) * d;
            pc.py[idx] = (K.at(1, 0) * vi + K.at(1, 1) * vj + K.at(1, 2) * f) * d;
            pc.pz[idx] = (K.at(2, 0) * vi + K.at(2, 1) * vj + K.at(2, 2) * f) * d;
        }
    return pc;
}

struct CellAssign {
    int u = 0, v = 0;
    bool in_range = false;
};

// u = V/(D*r) * p_x - (s+1)/2 and likewise for v from p_z, rounded half away
// from zero; anything outside [0, s)^2 is flagged out of range and dropped
// by accumulation. Callers wanting the agent on the center cell shift their
// points by s*D*r/V per axis first (see project_heading).
inline CellAssign grid_assign_one(double p_x, double p_z, const CameraIntrinsics& intr, int s,
                                  double r) {
    const double scale = intr.V / (intr.D * r);
    const double ue = scale * p_x - (s + 1) / 2.0;
    const double ve = scale * p_z - (s + 1) / 2.0;
    CellAssign a;
    const long u = round_half_away(ue), v = round_half_away(ve);
    a.u = static_cast<int>(u);
    a.v = static_cast<int>(v);
    a.in_range = u >= 0 && u < s && v >= 0 && v < s;
    return a;
}

inline std::vector<CellAssign> grid_assign(const PointCloud& pc, const CameraIntrinsics& intr,
                                           int s, double r) {
    std::vector<CellAssign> out(pc.size());
    for (std::size_t i = 0; i < pc.size(); ++i)
        out[i] = grid_assign_one(pc.px[i], pc.pz[i], intr, s, r);
    return out;
}

// Each in-range pixel adds one count to its cell's channel for the pixel's
// segmentation class; competing classes accumulate rather than overwrite.
// Background pixels carry no surface and are skipped.
inline BevGrid accumulate_evidence(const std::vector<CellAssign>& cells,
                                   const simworld::SegFrame& seg, int n_classes, double r, int s,
                                   int background_id = simworld::kBackgroundId,
                                   std::size_t* in_range_count = nullptr) {
    if (cells.size() != seg.cls.size()) throw Error("cell/segmentation size mismatch");
    BevGrid g(s, r, BevGrid::Mode::Evidence, n_classes);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const int cls = seg.cls[i];
        if (cls == background_id) continue;
        if (cls < 0 || cls >= n_classes) throw Error("segmentation class out of range");
        if (!cells[i].in_range) continue;
        g.at(cells[i].u, cells[i].v)[cls] += 1.0;
        ++kept;
    }
    if (in_range_count) *in_range_count = kept;
    return g;
}

// Rotate a grid about its center. Right-angle multiples are exact index
// permutations (lossless); other angles scatter each source cell to the
// nearest target cell, clipping at the borders.
inline BevGrid rotate_grid(const BevGrid& g, double phi) {
    BevGrid out(g.s, g.r, g.mode, g.channels);
    const int c = g.ego();
    const double quarter = phi / (kPi / 2.0);
    const long q = std::lround(quarter);
    if (std::abs(quarter - q) < 1e-9) {
        const int qq = static_cast<int>(((q % 4) + 4) % 4);
        for (int v = 0; v < g.s; ++v)
            for (int u = 0; u < g.s; ++u) {
                const int du = u - c, dv = v - c;
                int u0 = 0, v0 = 0;
                switch (qq) {
                    case 0: u0 = du; v0 = dv; break;
                    case 1: u0 = dv; v0 = -du; break;
                    case 2: u0 = -du; v0 = -dv; break;
                    case 3: u0 = -dv; v0 = du; break;
                }
                double* dst = out.at(u0 + c, v0 + c);
                const double* src = g.at(u, v);
                for (int l = 0; l < g.channels; ++l) dst[l] += src[l];
            }
        return out;
    }
    const double cs = std::cos(phi), sn = std::sin(phi);
    for (int v = 0; v < g.s; ++v)
        for (int u = 0; u < g.s; ++u) {
            const double du = u - c, dv = v - c;
            const int u0 = c + static_cast<int>(round_half_away(du * cs + dv * sn));
            const int v0 = c + static_cast<int>(round_half_away(-du * sn + dv * cs));
            if (!out.in_bounds(u0, v0)) continue;
            double* dst = out.at(u0, v0);
            const double* src = g.at(u, v);
            for (int l = 0; l < g.channels; ++l) dst[l] += src[l];
        }
    return out;
}

// p_uvl = (theta / 2pi) * sum_k R(k*theta) p^k_uvl. Grid k holds the heading
// pose.heading + k*theta; the fused grid is anchored at heading 0 of the
// panorama (the agent's facing).
inline BevGrid fuse_panorama(const std::vector<BevGrid>& grids, double theta) {
    if (grids.empty()) throw Error("no heading grids to fuse");
    const double frames_f = kTwoPi / theta;
    const long n = std::lround(frames_f);
    if (n <= 0 || std::abs(frames_f - n) > 1e-9)
        throw Error("heading step must divide the full circle");
    if (static_cast<long>(grids.size()) != n)
        throw Error("heading grid count does not match the angular step");
    BevGrid fused(grids[0].s, grids[0].r, grids[0].mode, grids[0].channels);
    const double scale = theta / kTwoPi;
    for (std::size_t k = 0; k < grids.size(); ++k) {
        if (grids[k].s != fused.s || grids[k].channels != fused.channels)
            throw Error("heading grids disagree in shape");
        const BevGrid rot = rotate_grid(grids[k], static_cast<double>(k) * theta);
        for (std::size_t i = 0; i < fused.data.size(); ++i) fused.data[i] += scale * rot.data[i];
    }
    return fused;
}

struct ProjectOptions {
    int s = 21;
    double r = 0.25;
    double reach = 2.0;  // height cutoff, meters
    double camera_height = 1.5;
    int n_classes = 14;
    int background_id = simworld::kBackgroundId;
};

// One heading: backproject, drop pixels above the reach cutoff, shift points
// so the agent sits on the center cell, then assign and accumulate.
inline BevGrid project_heading(const simworld::DepthFrame& depth, const simworld::SegFrame& seg,
                               const CameraIntrinsics& intr, const ProjectOptions& opt,
                               std::size_t* in_range_count = nullptr) {
    const PointCloud pc = backproject(depth, intr.K, intr.f);
    const double shift = opt.s * intr.D * opt.r / intr.V;
    std::vector<CellAssign> cells(pc.size());
    simworld::SegFrame filtered = seg;
    for (std::size_t i = 0; i < pc.size(); ++i) {
        const double height = opt.camera_height - pc.py[i];
        if (height > opt.reach) filtered.cls[i] = opt.background_id;
        cells[i] = grid_assign_one(pc.px[i] + shift, pc.pz[i] + shift, intr, opt.s, opt.r);
    }
    return accumulate_evidence(cells, filtered, opt.n_classes, opt.r, opt.s, opt.background_id,
                               in_range_count);
}

// Full panorama to one fused egocentric evidence grid.
inline BevGrid project_panorama(const simworld::PanoramaObservation& obs,
                                const CameraIntrinsics& intr, const ProjectOptions& opt,
                                std::size_t* in_range_total = nullptr) {
    std::vector<BevGrid> grids;
    std::size_t total = 0;
    for (const auto& frame : obs.frames) {
        std::size_t kept = 0;
        grids.push_back(project_heading(frame.depth, frame.seg, intr, opt, &kept));
        total += kept;
    }
    if (in_range_total) *in_range_total = total;
    return fuse_panorama(grids, obs.theta);
}

}  // namespace navlang::projection
