#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "navlang/gcnfilter.hpp"

using namespace navlang;
using namespace navlang::gcn;

namespace {

Graph random_graph(int s, int n_features, std::uint64_t seed) {
    Graph g = build_lattice_graph(s, n_features);
    Rng rng(seed);
    for (auto& x : g.X) x = rng.uniform(-1.0, 1.0);
    return g;
}

std::vector<int> random_labels(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = rng.uniform_int(0, kNumLabels - 1);
    return y;
}

// Central finite differences over every parameter of the model.
void check_gradients(GcnModel model, const Graph& g, const std::vector<int>& labels,
                     const std::vector<double>& weights) {
    const double eps = 1e-5;
    const Forward f = forward(model, g);
    const Gradients grads = backward(model, g, f, labels, weights);
    auto loss_at = [&]() { return nll_loss(forward(model, g).logp(), labels, weights); };
    int checked = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto check_param = [&](double& p, double analytic) {
            const double saved = p;
            p = saved + eps;
            const double up = loss_at();
            p = saved - eps;
            const double down = loss_at();
            p = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-4});
            REQUIRE(std::fabs(analytic - fd) / denom < 1e-4);
            ++checked;
        };
        for (std::size_t k = 0; k < model.layers[l].W.size(); ++k)
            check_param(model.layers[l].W[k], grads.layers[l].W[k]);
        for (std::size_t k = 0; k < model.layers[l].b.size(); ++k)
            check_param(model.layers[l].b[k], grads.layers[l].b[k]);
    }
    REQUIRE(checked > 0);
}

}  // namespace

TEST_CASE("lattice graph wiring") {
    const Graph g = build_lattice_graph(3, 2);
    REQUIRE(g.n_nodes == 9);
    // Center node touches all four sides, corners touch two.
    REQUIRE(g.adj[4].size() == 4);
    REQUIRE(g.adj[0].size() == 2);
    REQUIRE(g.adj[8].size() == 2);
    int edge_ends = 0;
    for (const auto& nbrs : g.adj) edge_ends += static_cast<int>(nbrs.size());
    REQUIRE(edge_ends == 2 * 12);  // 2*s*(s-1) undirected edges on a 3x3 lattice
    for (int i = 0; i < g.n_nodes; ++i)
        for (int j : g.adj[i]) {
            REQUIRE(j != i);
            const int du = std::abs(i % 3 - j % 3), dv = std::abs(i / 3 - j / 3);
            REQUIRE(du + dv == 1);
        }
}

TEST_CASE("feature extraction swaps target channel and scales by mass") {
    BevGrid ev(3, 0.25, BevGrid::Mode::Evidence, 6);
    double* cell = ev.at(1, 2);
    for (int l = 0; l < 6; ++l) cell[l] = l + 1.0;  // total mass 21
    const Graph g = features_from_evidence(ev, 5);
    const double* x = g.x(2 * 3 + 1);
    const double scale = 1.0 / 22.0;
    REQUIRE(x[2] == Catch::Approx(6.0 * scale));  // channel 5 moved into the target slot
    REQUIRE(x[5] == Catch::Approx(3.0 * scale));
    REQUIRE(x[0] == Catch::Approx(1.0 * scale));

    const Graph same = features_from_evidence(ev, kTargetSlot);
    REQUIRE(same.x(2 * 3 + 1)[2] == Catch::Approx(3.0 * scale));
    const Graph raw = features_from_evidence(ev, -1);
    REQUIRE(raw.x(2 * 3 + 1)[5] == Catch::Approx(6.0 * scale));
    REQUIRE(g.x(0)[0] == 0.0);  // empty cells stay zero
    REQUIRE_THROWS_AS(features_from_evidence(ev, 6), Error);
}

TEST_CASE("zero model emits uniform log-probabilities and ln4 loss") {
    GcnModel model = GcnModel::init({3, 8, kNumLabels}, 7);
    for (auto& l : model.layers) {
        std::fill(l.W.begin(), l.W.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    const Graph g = random_graph(3, 3, 11);
    const Forward f = forward(model, g);
    for (double lp : f.logp()) REQUIRE(lp == Catch::Approx(std::log(0.25)).margin(1e-12));
    const std::vector<int> labels = random_labels(g.n_nodes, 13);
    REQUIRE(nll_loss(f.logp(), labels) == Catch::Approx(std::log(4.0)).margin(1e-12));
    REQUIRE(nll_loss(f.logp(), labels) == Catch::Approx(1.3863).margin(5e-4));
}

TEST_CASE("single layer forward matches hand aggregation on a 2x2 lattice") {
    // Nodes 0..3; each corner of a 2x2 lattice has exactly two neighbors.
    Graph g = build_lattice_graph(2, 2);
    const double feats[4][2] = {{1, 2}, {3, 5}, {7, 11}, {13, 17}};
    for (int i = 0; i < 4; ++i) {
        g.x(i)[0] = feats[i][0];
        g.x(i)[1] = feats[i][1];
    }
    GcnModel model = GcnModel::init({2, kNumLabels}, 1);
    std::fill(model.layers[0].W.begin(), model.layers[0].W.end(), 0.0);
    std::fill(model.layers[0].b.begin(), model.layers[0].b.end(), 0.0);
    model.layers[0].W[0 * 2 + 0] = 1.0;  // output 0 copies aggregated x
    model.layers[0].W[1 * 2 + 1] = 1.0;  // output 1 copies aggregated y
    const Forward f = forward(model, g);
    // Node 0 aggregates itself plus neighbors 1 and 2.
    const double ax = 1 + 3 + 7, ay = 2 + 5 + 11;
    const double mx = std::max({ax, ay, 0.0});
    const double lse =
        mx + std::log(std::exp(ax - mx) + std::exp(ay - mx) + 2.0 * std::exp(0.0 - mx));
    REQUIRE(f.logp()[0] == Catch::Approx(ax - lse).margin(1e-12));
    REQUIRE(f.logp()[1] == Catch::Approx(ay - lse).margin(1e-12));
    REQUIRE(f.logp()[2] == Catch::Approx(0.0 - lse).margin(1e-12));
}

TEST_CASE("gradients match central finite differences") {
    const Graph g = random_graph(3, 5, 101);
    const std::vector<int> labels = random_labels(g.n_nodes, 103);
    GcnModel model = GcnModel::init({5, 7, kNumLabels}, 105);

    SECTION("unweighted loss") { check_gradients(model, g, labels, {}); }
    SECTION("class-weighted loss") {
        check_gradients(model, g, labels, {0.5, 2.0, 1.25, 3.0});
    }
    SECTION("three layer model") {
        GcnModel deep = GcnModel::init({5, 6, 6, kNumLabels}, 107);
        check_gradients(deep, g, labels, {});
    }
}

TEST_CASE("permutation equivariance of the forward pass") {
    const int s = 4, d = 6;
    const Graph g = random_graph(s, d, 211);
    const GcnModel model = GcnModel::init({d, 9, kNumLabels}, 213);
    const Forward base = forward(model, g);

    Rng rng(217);
    std::vector<int> perm(static_cast<std::size_t>(g.n_nodes));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);

    Graph pg;  // node i of g becomes node perm[i]
    pg.n_nodes = g.n_nodes;
    pg.n_features = d;
    pg.adj.resize(static_cast<std::size_t>(g.n_nodes));
    pg.X.assign(g.X.size(), 0.0);
    for (int i = 0; i < g.n_nodes; ++i) {
        std::memcpy(pg.x(perm[static_cast<std::size_t>(i)]), g.x(i), sizeof(double) * d);
        for (int j : g.adj[i])
            pg.adj[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])].push_back(
                perm[static_cast<std::size_t>(j)]);
    }
    const Forward permuted = forward(model, pg);
    for (int i = 0; i < g.n_nodes; ++i)
        for (int o = 0; o < kNumLabels; ++o)
            REQUIRE(permuted.logp()[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]) *
                                        kNumLabels +
                                    o] ==
                    Catch::Approx(base.logp()[static_cast<std::size_t>(i) * kNumLabels + o])
                        .margin(1e-11));
}

TEST_CASE("loss edge cases") {
    std::vector<double> logp(kNumLabels, -1e9);
    logp[2] = 0.0;  // certain prediction of class 2
    REQUIRE(nll_loss(logp, {2}) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE_THROWS_AS(nll_loss({}, {}), Error);
}

TEST_CASE("inverse frequency weights") {
    MappingSample s;
    s.labels = {0, 0, 0, 1};
    const auto w = inverse_frequency_weights({s});
    REQUIRE(w[0] == Catch::Approx(4.0 / (4.0 * 3.0)));
    REQUIRE(w[1] == Catch::Approx(1.0));
    REQUIRE(w[2] == 0.0);
    REQUIRE(w[3] == 0.0);
}

TEST_CASE("non-finite activations are reported") {
    BevGrid ev(3, 0.25, BevGrid::Mode::Evidence, 4);
    ev.at(0, 0)[0] = 8.0;
    GcnModel model = GcnModel::init({4, 8, kNumLabels}, 3);
    for (auto& l : model.layers) std::fill(l.W.begin(), l.W.end(), 1e200);
    const Graph g = features_from_evidence(ev, -1);
    REQUIRE_THROWS_AS(forward(model, g), Error);
}

TEST_CASE("training is deterministic for a fixed seed") {
    BevGrid ev(5, 0.25, BevGrid::Mode::Evidence, 6);
    Rng rng(31);
    for (auto& x : ev.data) x = rng.uniform(0.0, 30.0);
    MappingSample sample;
    sample.evidence = ev;
    sample.target_class = 4;
    sample.labels = random_labels(25, 37);

    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 9;
    GcnModel a = GcnModel::init({6, 10, kNumLabels}, 41);
    GcnModel b = GcnModel::init({6, 10, kNumLabels}, 41);
    const TrainResult ra = train(a, {sample}, cfg);
    const TrainResult rb = train(b, {sample}, cfg);
    REQUIRE(std::memcmp(ra.epoch_loss.data(), rb.epoch_loss.data(),
                        ra.epoch_loss.size() * sizeof(double)) == 0);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        REQUIRE(std::memcmp(a.layers[l].W.data(), b.layers[l].W.data(),
                            a.layers[l].W.size() * sizeof(double)) == 0);
        REQUIRE(std::memcmp(a.layers[l].b.data(), b.layers[l].b.data(),
                            a.layers[l].b.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("model memorizes a single sample") {
    const int s = 5;
    BevGrid ev(s, 0.25, BevGrid::Mode::Evidence, 6);
    Rng rng(53);
    for (auto& x : ev.data) x = rng.uniform(0.0, 20.0);
    MappingSample sample;
    sample.evidence = ev;
    sample.target_class = 4;
    sample.labels.resize(s * s);
    for (int v = 0; v < s; ++v)
        for (int u = 0; u < s; ++u)
            sample.labels[static_cast<std::size_t>(v) * s + u] = (u + 2 * v) % kNumLabels;
    sample.labels[static_cast<std::size_t>(s / 2) * s + s / 2] =
        static_cast<int>(CellLabel::Navigable);  // keep the forced ego cell consistent

    GcnModel model = GcnModel::init({6, 64, kNumLabels}, 61);
    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.epochs = 6000;
    cfg.lr_decay = 0.99942;  // five halvings over the run
    cfg.class_reweight = false;
    const TrainResult res = train(model, {sample}, cfg);
    REQUIRE(res.epoch_loss.back() < 0.05);
    REQUIRE(res.epoch_loss.back() < res.epoch_loss.front());

    const BevGrid refined = refine(model, ev, sample.target_class);
    int correct = 0;
    for (int v = 0; v < s; ++v)
        for (int u = 0; u < s; ++u)
            correct += static_cast<int>(refined.label_at(u, v)) ==
                               sample.labels[static_cast<std::size_t>(v) * s + u]
                           ? 1
                           : 0;
    REQUIRE(correct == s * s);
}

TEST_CASE("refine forces the agent cell navigable") {
    BevGrid ev(5, 0.25, BevGrid::Mode::Evidence, 6);
    GcnModel model = GcnModel::init({6, 8, kNumLabels}, 3);
    for (auto& l : model.layers) {
        std::fill(l.W.begin(), l.W.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    const BevGrid out = refine(model, ev, -1);
    REQUIRE(out.label_at(out.ego(), out.ego()) == CellLabel::Navigable);
    REQUIRE(out.label_at(0, 0) == CellLabel::Unknown);  // uniform tie resolves to the first class
    REQUIRE(out.at(0, 0)[1] == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("baseline labeling rule") {
    const int channels = 6;
    double none[channels] = {0, 0, 0, 0, 0, 0};
    double floor_ev[channels] = {5, 1, 0, 0, 0, 0};
    double target_ev[channels] = {1, 0, 0, 0, 7, 0};
    double other_ev[channels] = {1, 0, 6, 0, 2, 0};
    REQUIRE(baseline_label(none, channels, 4) == CellLabel::Unknown);
    REQUIRE(baseline_label(floor_ev, channels, 4) == CellLabel::Navigable);
    REQUIRE(baseline_label(target_ev, channels, 4) == CellLabel::Target);
    REQUIRE(baseline_label(other_ev, channels, 4) == CellLabel::Obstacle);
}

TEST_CASE("checkpoint json round trip preserves behavior") {
    const GcnModel model = GcnModel::init({6, 12, kNumLabels}, 77);
    const GcnModel copy = GcnModel::from_json(model.to_json());
    REQUIRE(copy.dims == model.dims);
    BevGrid ev(5, 0.25, BevGrid::Mode::Evidence, 6);
    Rng rng(79);
    for (auto& x : ev.data) x = rng.uniform(0.0, 10.0);
    const BevGrid a = refine(model, ev, 4);
    const BevGrid b = refine(copy, ev, 4);
    REQUIRE(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
}

TEST_CASE("refinement beats the evidence baseline on rendered rooms") {
    using namespace simworld;
    const RoomGenConfig rc = RoomGenConfig::cluttered();
    std::vector<Room> rooms;
    for (std::uint64_t seed = 300; rooms.size() < 5; ++seed) {
        try {
            rooms.push_back(generate_room(seed, rc));
        } catch (const Error&) {
        }
    }
    const auto train_data =
        build_mapping_dataset({rooms[0], rooms[1], rooms[2], rooms[3]}, 10, 0.05, 401);
    const auto eval_data = build_mapping_dataset({rooms[4]}, 10, 0.05, 403);

    GcnModel model = GcnModel::init({num_classes(), 32, 32, kNumLabels}, 405);
    TrainConfig cfg = mapping_train_recipe(407);
    cfg.epochs = 30;
    const TrainResult res = train(model, train_data, cfg);
    REQUIRE(res.epoch_loss.back() < res.epoch_loss.front());

    const EvalResult ev = eval_mapping(model, eval_data);
    double mean_refined = 0.0, mean_baseline = 0.0;
    for (double x : ev.room_refined) mean_refined += x / static_cast<double>(ev.room_refined.size());
    for (double x : ev.room_baseline)
        mean_baseline += x / static_cast<double>(ev.room_baseline.size());
    INFO("refined " << mean_refined << " baseline " << mean_baseline);
    REQUIRE(mean_refined > mean_baseline);
    REQUIRE(ev.refined.navigable > ev.baseline.navigable);
}
