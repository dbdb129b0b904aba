#pragma once

// Graph convolutional map refinement. Nodes are BEV cells on a 4-neighbor
// lattice; each layer sums raw neighbor features into the node (no degree
// normalization) and applies a shared dense layer; the head emits
// log-probabilities over {Unknown, Navigable, Target, Obstacle}. Training is
// plain SGD with exact hand-derived gradients.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "navlang/core.hpp"
#include "navlang/simworld.hpp"
#include "navlang/projection.hpp"

namespace navlang::gcn {

// Channel the queried target class is swapped into before the network sees
// the evidence, so one model serves any target.
inline constexpr int kTargetSlot = 2;

struct Graph {
    int n_nodes = 0;
    int n_features = 0;
    std::vector<std::vector<int>> adj;  // undirected neighbor lists, no self loops
    std::vector<double> X;              // n_nodes x n_features

    double* x(int i) { return X.data() + static_cast<std::size_t>(i) * n_features; }
    const double* x(int i) const { return X.data() + static_cast<std::size_t>(i) * n_features; }
};

// s x s lattice, node v*s+u, edges between cells at Manhattan distance 1.
inline Graph build_lattice_graph(int s, int n_features) {
    Graph g;
    g.n_nodes = s * s;
    g.n_features = n_features;
    g.adj.resize(static_cast<std::size_t>(g.n_nodes));
    g.X.assign(static_cast<std::size_t>(g.n_nodes) * n_features, 0.0);
    for (int v = 0; v < s; ++v)
        for (int u = 0; u < s; ++u) {
            const int i = v * s + u;
            if (u + 1 < s) {
                g.adj[i].push_back(v * s + u + 1);
                g.adj[static_cast<std::size_t>(v) * s + u + 1].push_back(i);
            }
            if (v + 1 < s) {
                g.adj[i].push_back((v + 1) * s + u);
                g.adj[(static_cast<std::size_t>(v) + 1) * s + u].push_back(i);
            }
        }
    return g;
}

// Evidence grid to node features: swap the target class channel into
// kTargetSlot and scale each cell vector by 1/(1 + total mass). Pass a
// negative target class to skip the swap.
inline Graph features_from_evidence(const BevGrid& evidence, int target_class) {
    Graph g = build_lattice_graph(evidence.s, evidence.channels);
    for (int v = 0; v < evidence.s; ++v)
        for (int u = 0; u < evidence.s; ++u) {
            const int node = v * evidence.s + u;
            const double* src = evidence.at(u, v);
            double* dst = g.x(node);
            double total = 0.0;
            for (int l = 0; l < evidence.channels; ++l) total += src[l];
            const double scale = 1.0 / (1.0 + total);
            for (int l = 0; l < evidence.channels; ++l) dst[l] = src[l] * scale;
            if (target_class >= 0 && target_class != kTargetSlot) {
                if (target_class >= evidence.channels) throw Error("target class out of range");
                std::swap(dst[kTargetSlot], dst[target_class]);
            }
        }
    return g;
}

struct DenseLayer {
    int in = 0, out = 0;
    std::vector<double> W;  // out x in
    std::vector<double> b;  // out
};

struct GcnModel {
    std::vector<int> dims;  // e.g. {n, 32, 32, 4}
    std::vector<DenseLayer> layers;
    std::uint64_t seed = 0;

    static GcnModel init(const std::vector<int>& dims, std::uint64_t seed) {
        if (dims.size() < 2 || dims.back() != kNumLabels)
            throw Error("model head must emit the four cell labels");
        GcnModel m;
        m.dims = dims;
        m.seed = seed;
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            DenseLayer layer;
            layer.in = dims[l];
            layer.out = dims[l + 1];
            const double limit = std::sqrt(6.0 / (layer.in + layer.out));
            layer.W.resize(static_cast<std::size_t>(layer.out) * layer.in);
            layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
            for (auto& w : layer.W) w = rng.uniform(-limit, limit);
            m.layers.push_back(std::move(layer));
        }
        return m;
    }

    json to_json() const {
        json layers_j = json::array();
        for (const auto& l : layers)
            layers_j.push_back(json{{"in", l.in}, {"out", l.out}, {"W", l.W}, {"b", l.b}});
        return json{{"dims", dims}, {"layers", std::move(layers_j)}, {"seed", seed}};
    }

    static GcnModel from_json(const json& j) {
        GcnModel m;
        m.dims = j.at("dims").get<std::vector<int>>();
        m.seed = j.value("seed", 0ull);
        for (const auto& lj : j.at("layers")) {
            DenseLayer l;
            l.in = lj.at("in").get<int>();
            l.out = lj.at("out").get<int>();
            l.W = lj.at("W").get<std::vector<double>>();
            l.b = lj.at("b").get<std::vector<double>>();
            m.layers.push_back(std::move(l));
        }
        return m;
    }
};

// Forward pass caches; layout per layer: aggregated input A, pre-activation
// Z, activation H (H of the last layer holds log-probabilities).
struct Forward {
    std::vector<std::vector<double>> A, Z, H;
    const std::vector<double>& logp() const { return H.back(); }
};

namespace detail {

inline void aggregate(const Graph& g, const std::vector<double>& src, int width,
                      std::vector<double>& dst) {
    dst = src;
    for (int i = 0; i < g.n_nodes; ++i) {
        double* d = dst.data() + static_cast<std::size_t>(i) * width;
        for (int j : g.adj[i]) {
            const double* s = src.data() + static_cast<std::size_t>(j) * width;
            for (int k = 0; k < width; ++k) d[k] += s[k];
        }
    }
}

}  // namespace detail

inline Forward forward(const GcnModel& model, const Graph& g) {
    if (g.n_features != model.dims.front()) throw Error("feature width mismatch");
    Forward f;
    std::vector<double> h = g.X;
    const int L = static_cast<int>(model.layers.size());
    for (int l = 0; l < L; ++l) {
        const DenseLayer& layer = model.layers[l];
        std::vector<double> a;
        detail::aggregate(g, h, layer.in, a);
        std::vector<double> z(static_cast<std::size_t>(g.n_nodes) * layer.out);
        for (int i = 0; i < g.n_nodes; ++i) {
            const double* ai = a.data() + static_cast<std::size_t>(i) * layer.in;
            double* zi = z.data() + static_cast<std::size_t>(i) * layer.out;
            for (int o = 0; o < layer.out; ++o) {
                double acc = layer.b[o];
                const double* w = layer.W.data() + static_cast<std::size_t>(o) * layer.in;
                for (int k = 0; k < layer.in; ++k) acc += w[k] * ai[k];
                zi[o] = acc;
            }
        }
        std::vector<double> out(z.size());
        if (l + 1 < L) {
            for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
        } else {
            for (int i = 0; i < g.n_nodes; ++i) {
                const double* zi = z.data() + static_cast<std::size_t>(i) * layer.out;
                double* oi = out.data() + static_cast<std::size_t>(i) * layer.out;
                double mx = zi[0];
                for (int o = 1; o < layer.out; ++o) mx = std::max(mx, zi[o]);
                double sum = 0.0;
                for (int o = 0; o < layer.out; ++o) sum += std::exp(zi[o] - mx);
                const double lse = mx + std::log(sum);
                for (int o = 0; o < layer.out; ++o) oi[o] = zi[o] - lse;
            }
        }
        for (double x : out)
            if (!std::isfinite(x))
                throw Error("numerical failure in layer " + std::to_string(l));
        f.A.push_back(std::move(a));
        f.Z.push_back(std::move(z));
        f.H.push_back(std::move(out));
        h = f.H.back();
    }
    return f;
}

// Negative log-likelihood, optionally weighted per class; weighted mean over
// nodes.
inline double nll_loss(const std::vector<double>& logp, const std::vector<int>& labels,
                       const std::vector<double>& class_weights = {}) {
    const int n = static_cast<int>(labels.size());
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w =
            class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(labels[i])];
        num -= w * logp[static_cast<std::size_t>(i) * kNumLabels + labels[i]];
        den += w;
    }
    if (den == 0.0) throw Error("loss over empty node set");
    return num / den;
}

struct Gradients {
    std::vector<DenseLayer> layers;  // same shapes as the model, W/b hold grads

    static Gradients zeros_like(const GcnModel& m) {
        Gradients g;
        for (const auto& l : m.layers) {
            DenseLayer z;
            z.in = l.in;
            z.out = l.out;
            z.W.assign(l.W.size(), 0.0);
            z.b.assign(l.b.size(), 0.0);
            g.layers.push_back(std::move(z));
        }
        return g;
    }
};

// Exact gradients for nll_loss(forward(...)). The adjoint of the neighbor
// sum is the same neighbor sum (symmetric adjacency).
inline Gradients backward(const GcnModel& model, const Graph& g, const Forward& f,
                          const std::vector<int>& labels,
                          const std::vector<double>& class_weights = {}) {
    Gradients grads = Gradients::zeros_like(model);
    const int L = static_cast<int>(model.layers.size());
    const int n = g.n_nodes;

    double wsum = 0.0;
    for (int i = 0; i < n; ++i)
        wsum += class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(labels[i])];

    // dLoss/dZ for the log-softmax + NLL head: (softmax - onehot) * w_i / wsum.
    std::vector<double> dz(static_cast<std::size_t>(n) * kNumLabels);
    for (int i = 0; i < n; ++i) {
        const double wi =
            (class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(labels[i])]) /
            wsum;
        const double* lp = f.logp().data() + static_cast<std::size_t>(i) * kNumLabels;
        double* d = dz.data() + static_cast<std::size_t>(i) * kNumLabels;
        for (int o = 0; o < kNumLabels; ++o)
            d[o] = (std::exp(lp[o]) - (labels[i] == o ? 1.0 : 0.0)) * wi;
    }

    for (int l = L - 1; l >= 0; --l) {
        const DenseLayer& layer = model.layers[l];
        DenseLayer& grad = grads.layers[l];
        const std::vector<double>& a = f.A[static_cast<std::size_t>(l)];
        for (int i = 0; i < n; ++i) {
            const double* ai = a.data() + static_cast<std::size_t>(i) * layer.in;
            const double* di = dz.data() + static_cast<std::size_t>(i) * layer.out;
            for (int o = 0; o < layer.out; ++o) {
                grad.b[o] += di[o];
                double* gw = grad.W.data() + static_cast<std::size_t>(o) * layer.in;
                for (int k = 0; k < layer.in; ++k) gw[k] += di[o] * ai[k];
            }
        }
        if (l == 0) break;
        // dA = dZ * W, then adjoint aggregation, then the previous ReLU mask.
        std::vector<double> da(static_cast<std::size_t>(n) * layer.in, 0.0);
        for (int i = 0; i < n; ++i) {
            const double* di = dz.data() + static_cast<std::size_t>(i) * layer.out;
            double* dai = da.data() + static_cast<std::size_t>(i) * layer.in;
            for (int o = 0; o < layer.out; ++o) {
                const double* w = layer.W.data() + static_cast<std::size_t>(o) * layer.in;
                for (int k = 0; k < layer.in; ++k) dai[k] += di[o] * w[k];
            }
        }
        std::vector<double> dh;
        detail::aggregate(g, da, layer.in, dh);
        const std::vector<double>& zprev = f.Z[static_cast<std::size_t>(l) - 1];
        dz.assign(dh.size(), 0.0);
        for (std::size_t i = 0; i < dh.size(); ++i) dz[i] = zprev[i] > 0.0 ? dh[i] : 0.0;
    }
    return grads;
}

struct MappingSample {
    BevGrid evidence;
    std::vector<int> labels;  // ground truth per node
    int target_class = -1;
    simworld::SizeClass target_size = simworld::SizeClass::Small;
    int room_index = 0;
};

struct TrainConfig {
    double lr = 0.01;
    double momentum = 0.9;
    double lr_decay = 1.0;  // per-epoch multiplier
    int epochs = 40;
    std::uint64_t seed = 1;
    bool class_reweight = true;
    // Explicit per-class loss weights; overrides class_reweight when set.
    std::vector<double> class_weights;
};

// Settings the shipped map filter is trained with. Loss weights lean on
// Navigable and Target because those are the labels navigation consumes;
// the decay halves the rate three times across the run.
inline TrainConfig mapping_train_recipe(std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.momentum = 0.9;
    cfg.epochs = 80;
    cfg.lr_decay = std::pow(0.5, 3.0 / cfg.epochs);
    cfg.class_weights = {1.0, 2.0, 22.0, 1.0};
    cfg.seed = seed;
    return cfg;
}

struct TrainResult {
    std::vector<double> epoch_loss;
};

inline std::vector<double> inverse_frequency_weights(const std::vector<MappingSample>& data) {
    std::vector<double> counts(kNumLabels, 0.0);
    for (const auto& s : data)
        for (int y : s.labels) counts[static_cast<std::size_t>(y)] += 1.0;
    double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::vector<double> w(kNumLabels, 1.0);
    for (int c = 0; c < kNumLabels; ++c)
        w[static_cast<std::size_t>(c)] = counts[static_cast<std::size_t>(c)] > 0.0
                                             ? total / (kNumLabels * counts[static_cast<std::size_t>(c)])
                                             : 0.0;
    return w;
}

inline TrainResult train(GcnModel& model, const std::vector<MappingSample>& data,
                         const TrainConfig& cfg) {
    if (data.empty()) throw Error("empty training set");
    if (!cfg.class_weights.empty() && cfg.class_weights.size() != kNumLabels)
        throw Error("class weight vector must cover every label");
    const std::vector<double> weights =
        !cfg.class_weights.empty() ? cfg.class_weights
        : cfg.class_reweight       ? inverse_frequency_weights(data)
                                   : std::vector<double>{};
    Rng rng(cfg.seed);
    TrainResult result;
    Gradients velocity = Gradients::zeros_like(model);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    double lr = cfg.lr;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const MappingSample& s = data[idx];
            const Graph g = features_from_evidence(s.evidence, s.target_class);
            const Forward f = forward(model, g);
            const double loss = nll_loss(f.logp(), s.labels, weights);
            if (!std::isfinite(loss)) throw Error("training diverged: non-finite loss");
            epoch_loss += loss;
            const Gradients grads = backward(model, g, f, s.labels, weights);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                DenseLayer& layer = model.layers[l];
                const DenseLayer& gl = grads.layers[l];
                DenseLayer& vel = velocity.layers[l];
                for (std::size_t k = 0; k < layer.W.size(); ++k) {
                    vel.W[k] = cfg.momentum * vel.W[k] - lr * gl.W[k];
                    layer.W[k] += vel.W[k];
                }
                for (std::size_t k = 0; k < layer.b.size(); ++k) {
                    vel.b[k] = cfg.momentum * vel.b[k] - lr * gl.b[k];
                    layer.b[k] += vel.b[k];
                }
            }
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
        lr *= cfg.lr_decay;
    }
    return result;
}

// Refined label grid: per-cell class probabilities from the model, with the
// agent's own cell forced Navigable (the agent stands there).
inline BevGrid refine(const GcnModel& model, const BevGrid& evidence, int target_class) {
    const Graph g = features_from_evidence(evidence, target_class);
    const Forward f = forward(model, g);
    BevGrid out(evidence.s, evidence.r, BevGrid::Mode::Labels, kNumLabels);
    for (int v = 0; v < evidence.s; ++v)
        for (int u = 0; u < evidence.s; ++u) {
            const double* lp = f.logp().data() +
                               (static_cast<std::size_t>(v) * evidence.s + u) * kNumLabels;
            double* dst = out.at(u, v);
            for (int o = 0; o < kNumLabels; ++o) dst[o] = std::exp(lp[o]);
        }
    out.set_label(out.ego(), out.ego(), CellLabel::Navigable);
    return out;
}

// Evidence-argmax baseline: no evidence means Unknown; otherwise floor maps
// to Navigable, the queried class to Target, anything else to Obstacle.
inline CellLabel baseline_label(const double* evidence, int channels, int target_class) {
    double total = 0.0;
    int best = 0;
    for (int l = 0; l < channels; ++l) {
        total += evidence[l];
        if (evidence[l] > evidence[best]) best = l;
    }
    if (total == 0.0) return CellLabel::Unknown;
    if (best == simworld::kFloorClass) return CellLabel::Navigable;
    if (best == target_class) return CellLabel::Target;
    return CellLabel::Obstacle;
}

// Dataset synthesis: panoramas with segmentation noise, projected to fused
// evidence, labeled by the true map, cycling targets over the room's classes.
inline std::vector<MappingSample> build_mapping_dataset(const std::vector<simworld::Room>& rooms,
                                                        int poses_per_room, double noise_p,
                                                        std::uint64_t seed, int s = 21,
                                                        double r = 0.25) {
    using namespace simworld;
    std::vector<MappingSample> data;
    const projection::CameraIntrinsics intr = projection::default_intrinsics();
    projection::ProjectOptions opt;
    opt.s = s;
    opt.r = r;
    opt.n_classes = num_classes();
    Rng rng(seed);
    for (std::size_t ri = 0; ri < rooms.size(); ++ri) {
        const Room& room = rooms[ri];
        std::vector<int> present;
        for (const auto& o : room.objects)
            if (std::find(present.begin(), present.end(), o.class_id) == present.end())
                present.push_back(o.class_id);
        for (int p = 0; p < poses_per_room; ++p) {
            const AgentPose pose = sample_pose(room, rng);
            RenderParams params;
            params.seg_noise = noise_p;
            params.noise_seed = rng.fork();
            const auto obs = render_panorama(room, pose, params);
            MappingSample sample;
            sample.target_class = present[static_cast<std::size_t>(p) % present.size()];
            sample.target_size = class_info(sample.target_class).size;
            sample.room_index = static_cast<int>(ri);
            sample.evidence = projection::project_panorama(obs, intr, opt);
            const BevGrid gt = ground_truth_bev(room, pose, s, r, sample.target_class);
            sample.labels.resize(static_cast<std::size_t>(s) * s);
            for (int v = 0; v < s; ++v)
                for (int u = 0; u < s; ++u)
                    sample.labels[static_cast<std::size_t>(v) * s + u] =
                        static_cast<int>(gt.label_at(u, v));
            data.push_back(std::move(sample));
        }
    }
    return data;
}

// Per-cell recall of the refined (or baseline) map against ground truth:
// `navigable` over true-Navigable cells, the size columns over true-Target
// cells bucketed by the queried target's size class.
struct AccuracyTable {
    double navigable = 0.0, big = 0.0, medium = 0.0, small = 0.0;
};

struct EvalResult {
    AccuracyTable refined, baseline;
    // Per-room overall accuracy (all cells), refined vs baseline.
    std::vector<double> room_refined, room_baseline;
};

inline EvalResult eval_mapping(const GcnModel& model, const std::vector<MappingSample>& data) {
    EvalResult res;
    double nav_hit = 0, nav_tot = 0, size_hit[3] = {0, 0, 0}, size_tot[3] = {0, 0, 0};
    double bnav_hit = 0, bsize_hit[3] = {0, 0, 0};
    std::map<int, std::array<double, 4>> per_room;  // hits_r, hits_b, total, _
    for (const auto& sample : data) {
        const BevGrid refined = refine(model, sample.evidence, sample.target_class);
        auto& acc = per_room[sample.room_index];
        for (int v = 0; v < refined.s; ++v)
            for (int u = 0; u < refined.s; ++u) {
                const int node = v * refined.s + u;
                const auto truth = static_cast<CellLabel>(sample.labels[static_cast<std::size_t>(node)]);
                const CellLabel got = refined.label_at(u, v);
                const CellLabel base = baseline_label(sample.evidence.at(u, v),
                                                      sample.evidence.channels, sample.target_class);
                acc[0] += got == truth ? 1 : 0;
                acc[1] += base == truth ? 1 : 0;
                acc[2] += 1;
                if (truth == CellLabel::Navigable) {
                    nav_tot += 1;
                    nav_hit += got == CellLabel::Navigable ? 1 : 0;
                    bnav_hit += base == CellLabel::Navigable ? 1 : 0;
                } else if (truth == CellLabel::Target) {
                    const int sz = static_cast<int>(sample.target_size);
                    size_tot[sz] += 1;
                    size_hit[sz] += got == CellLabel::Target ? 1 : 0;
                    bsize_hit[sz] += base == CellLabel::Target ? 1 : 0;
                }
            }
    }
    auto ratio = [](double h, double t) { return t > 0 ? h / t : 0.0; };
    res.refined = {ratio(nav_hit, nav_tot), ratio(size_hit[2], size_tot[2]),
                   ratio(size_hit[1], size_tot[1]), ratio(size_hit[0], size_tot[0])};
    res.baseline = {ratio(bnav_hit, nav_tot), ratio(bsize_hit[2], size_tot[2]),
                    ratio(bsize_hit[1], size_tot[1]), ratio(bsize_hit[0], size_tot[0])};
    for (const auto& [room, acc] : per_room) {
        res.room_refined.push_back(acc[0] / acc[2]);
        res.room_baseline.push_back(acc[1] / acc[2]);
    }
    return res;
}

}  // namespace navlang::gcn
