#include <catch2/catch_amalgamated.hpp>

// End-to-end gate: every release bar in one binary, each case printing one
// [PASS]/[FAIL] line. Heavy fixtures (the trained mapping model, the trained
// tagger) are built once and shared across cases.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>

#include "navlang/harness.hpp"
#include "navlang/priors.hpp"

using namespace navlang;
using Clock = std::chrono::steady_clock;

namespace {

void report(int n, bool ok) {
    std::printf("[%s] criterion %d\n", ok ? "PASS" : "FAIL", n);
    std::fflush(stdout);
}

std::vector<simworld::Room> cluttered_rooms_from(std::uint64_t seed0, int count) {
    const auto rc = simworld::RoomGenConfig::cluttered();
    std::vector<simworld::Room> rooms;
    for (std::uint64_t s = seed0; static_cast<int>(rooms.size()) < count; ++s) {
        try {
            rooms.push_back(simworld::generate_room(s, rc));
        } catch (const Error&) {
        }
    }
    return rooms;
}

struct MappingFixture {
    gcn::GcnModel model;
    gcn::EvalResult eval;
    double train_seconds = 0.0;
};

const MappingFixture& mapping_fixture() {
    static const MappingFixture fx = [] {
        MappingFixture f;
        const auto train_rooms = cluttered_rooms_from(100, 20);
        const auto t0 = Clock::now();
        const auto data = gcn::build_mapping_dataset(train_rooms, 50, 0.05, 401);
        f.model = gcn::GcnModel::init({simworld::num_classes(), 32, 32, kNumLabels}, 405);
        gcn::train(f.model, data, gcn::mapping_train_recipe(407));
        f.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        const auto held = cluttered_rooms_from(5000, 20);
        f.eval = gcn::eval_mapping(f.model, gcn::build_mapping_dataset(held, 10, 0.05, 403));
        return f;
    }();
    return fx;
}

struct TaggerFixture {
    lang::TaggerModel model;
    lang::TaggerReport report;
};

const TaggerFixture& tagger_fixture() {
    static const TaggerFixture fx = [] {
        TaggerFixture f;
        f.model = lang::TaggerModel::init();
        lang::TaggerTrainConfig cfg;
        cfg.seed = 5;
        f.report = lang::train_tagger(f.model, lang::generate_corpus(1000, 2024), cfg);
        return f;
    }();
    return fx;
}

// Independent uniform-cost search used to audit the planner's A*.
std::optional<int> dijkstra_cost(const BevGrid& map, planner::Cell start, planner::Cell goal) {
    const int s = map.s;
    std::vector<int> dist(static_cast<std::size_t>(s) * s, std::numeric_limits<int>::max());
    using E = std::pair<int, int>;
    std::priority_queue<E, std::vector<E>, std::greater<>> pq;
    dist[static_cast<std::size_t>(start.v) * s + start.u] = 0;
    pq.push({0, start.v * s + start.u});
    while (!pq.empty()) {
        const auto [d, ci] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(ci)]) continue;
        const planner::Cell c{ci % s, ci / s};
        if (c == goal) return d;
        const int du[4] = {1, -1, 0, 0}, dv[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const planner::Cell n{c.u + du[k], c.v + dv[k]};
            if (!map.in_bounds(n.u, n.v)) continue;
            if (map.label_at(n.u, n.v) != CellLabel::Navigable) continue;
            const int ni = n.v * s + n.u;
            if (d + 1 < dist[static_cast<std::size_t>(ni)]) {
                dist[static_cast<std::size_t>(ni)] = d + 1;
                pq.push({d + 1, ni});
            }
        }
    }
    return std::nullopt;
}

// Exact rational recomputation of the grid assignment equation for dyadic
// points p = k/1024 and parameters with integer V, D and rational r = rn/rd.
long rational_assign(std::int64_t k, std::int64_t V, std::int64_t D, std::int64_t rn,
                     std::int64_t rd, std::int64_t s) {
    const std::int64_t den = 2 * D * rn * 1024;
    const std::int64_t num = 2 * V * k * rd - (s + 1) * D * rn * 1024;
    if (num >= 0) return static_cast<long>((2 * num + den) / (2 * den));
    return static_cast<long>(-((-2 * num + den) / (2 * den)));
}

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

simworld::SegFrame make_frame(int h, int w) {
    simworld::SegFrame seg;
    seg.h = h;
    seg.w = w;
    seg.cls.assign(static_cast<std::size_t>(h) * w, simworld::kBackgroundId);
    return seg;
}

void paint(simworld::SegFrame& seg, int x0, int y0, int x1, int y1, int cls) {
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            seg.cls[static_cast<std::size_t>(y) * seg.w + x] = cls;
}

grounding::SceneObjects random_scene(Rng& rng) {
    auto seg = make_frame(24, 40);
    const int count = rng.uniform_int(2, 5);
    const int classes[5] = {2, 4, 8, 10, 12};
    for (int i = 0; i < count; ++i) {
        const int x0 = 1 + 8 * i;
        const int y0 = rng.uniform_int(1, 12);
        paint(seg, x0, y0, x0 + rng.uniform_int(1, 5), y0 + rng.uniform_int(1, 6), classes[i]);
    }
    return grounding::extract_scene(seg);
}

std::map<std::string, std::set<std::string>> clusters_of(
    const std::map<std::string, std::string>& table) {
    std::map<std::string, std::set<std::string>> clusters;
    for (const auto& [word, canon] : table) clusters[canon].insert(word);
    return clusters;
}

}  // namespace

TEST_CASE("map refinement clears the held-out accuracy bars within the training budget") {
    const auto& fx = mapping_fixture();
    const auto& r = fx.eval.refined;
    const auto& b = fx.eval.baseline;
    const double refined_mean = (r.navigable + r.big + r.medium + r.small) / 4.0;
    const double baseline_mean = (b.navigable + b.big + b.medium + b.small) / 4.0;
    const bool ok = r.navigable >= 0.90 && r.big >= 0.88 && r.medium >= 0.86 &&
                    r.small >= 0.84 && baseline_mean < 0.75 &&
                    refined_mean - baseline_mean >= 0.25 && fx.train_seconds <= 600.0;
    report(1, ok);
    CHECK(r.navigable >= 0.90);
    CHECK(r.big >= 0.88);
    CHECK(r.medium >= 0.86);
    CHECK(r.small >= 0.84);
    CHECK(baseline_mean < 0.75);
    CHECK(refined_mean - baseline_mean >= 0.25);
    CHECK(fx.train_seconds <= 600.0);
}

TEST_CASE("analytic gradients of both models match central finite differences") {
    const double eps = 1e-5;
    double worst = 0.0;
    int checked = 0;

    {
        gcn::Graph g = gcn::build_lattice_graph(3, 5);
        Rng rng(101);
        for (auto& x : g.X) x = rng.uniform(-1.0, 1.0);
        std::vector<int> labels(static_cast<std::size_t>(g.n_nodes));
        Rng lrng(103);
        for (auto& v : labels) v = lrng.uniform_int(0, kNumLabels - 1);
        gcn::GcnModel model = gcn::GcnModel::init({5, 7, kNumLabels}, 105);
        const gcn::Forward f = gcn::forward(model, g);
        const gcn::Gradients grads = gcn::backward(model, g, f, labels, {});
        auto loss_at = [&]() { return gcn::nll_loss(gcn::forward(model, g).logp(), labels, {}); };
        auto fd_check = [&](double& p, double analytic) {
            const double saved = p;
            p = saved + eps;
            const double up = loss_at();
            p = saved - eps;
            const double down = loss_at();
            p = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-4});
            worst = std::max(worst, std::fabs(analytic - fd) / denom);
            ++checked;
        };
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            for (std::size_t k = 0; k < model.layers[l].W.size(); ++k)
                fd_check(model.layers[l].W[k], grads.layers[l].W[k]);
            for (std::size_t k = 0; k < model.layers[l].b.size(); ++k)
                fd_check(model.layers[l].b[k], grads.layers[l].b[k]);
        }
    }

    {
        lang::TaggerModel m = lang::TaggerModel::init(512, 3);
        Rng rng(7);
        for (auto& w : m.w_slot) w = rng.uniform(-0.3, 0.3);
        for (auto& w : m.w_int) w = rng.uniform(-0.3, 0.3);
        for (auto& b : m.b_slot) b = rng.uniform(-0.1, 0.1);
        for (auto& b : m.b_int) b = rng.uniform(-0.1, 0.1);
        lang::LabeledSentence s;
        s.tokens = {"pick", "up", "the", "cellphone"};
        s.slots = {lang::slot::kActionNNavi, lang::slot::kActionDesc, lang::slot::kO,
                   lang::slot::kTargetObj};
        s.intent = lang::intent::kNotNavigation;
        const lang::TaggerGrads g = lang::tagger_grads(m, s);
        auto fd_check = [&](double& p, double analytic) {
            const double saved = p;
            p = saved + eps;
            const double up = lang::tagger_loss(m, s);
            p = saved - eps;
            const double down = lang::tagger_loss(m, s);
            p = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-4});
            worst = std::max(worst, std::fabs(analytic - fd) / denom);
            ++checked;
        };
        for (const auto& [key, gv] : g.w_slot)
            fd_check(m.w_slot[static_cast<std::size_t>(key.first) * m.dim + key.second], gv);
        for (const auto& [key, gv] : g.w_int)
            fd_check(m.w_int[static_cast<std::size_t>(key.first) * m.dim + key.second], gv);
        for (int r = 0; r < lang::kNumSlots; ++r)
            fd_check(m.b_slot[static_cast<std::size_t>(r)], g.b_slot[static_cast<std::size_t>(r)]);
        for (int r = 0; r < lang::kNumIntents; ++r)
            fd_check(m.b_int[static_cast<std::size_t>(r)], g.b_int[static_cast<std::size_t>(r)]);
    }

    const bool ok = checked > 200 && worst < 1e-4;
    report(2, ok);
    CHECK(checked > 200);
    CHECK(worst < 1e-4);
}

TEST_CASE("projection stages agree with brute-force oracles on randomized inputs") {
    namespace pj = navlang::projection;
    int mismatches = 0;
    long compared = 0;

    // Back-projection against a long-double matrix recomputation.
    {
        Rng rng(555);
        for (int trial = 0; trial < 30; ++trial) {
            pj::Mat3 K;
            for (int e = 0; e < 9; ++e) K.m[e] = rng.uniform(-2.0, 2.0);
            const double f = rng.uniform(1.0, 50.0);
            simworld::DepthFrame depth{6, 7, {}};
            depth.d.resize(42);
            for (auto& d : depth.d) d = rng.uniform(0.0, 5.0);
            const pj::PointCloud pc = pj::backproject(depth, K, f);
            for (int i = 0; i < depth.h; ++i)
                for (int j = 0; j < depth.w; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * depth.w + j;
                    const long double vec[3] = {static_cast<long double>(i),
                                                static_cast<long double>(j),
                                                static_cast<long double>(f)};
                    long double want[3] = {0, 0, 0};
                    for (int r = 0; r < 3; ++r) {
                        for (int c = 2; c >= 0; --c)
                            want[r] += static_cast<long double>(K.at(r, c)) * vec[c];
                        want[r] *= static_cast<long double>(depth.d[idx]);
                    }
                    const double got[3] = {pc.px[idx], pc.py[idx], pc.pz[idx]};
                    for (int r = 0; r < 3; ++r) {
                        const double tol =
                            1e-9 * std::max(1.0, std::abs(static_cast<double>(want[r])));
                        mismatches += std::abs(got[r] - static_cast<double>(want[r])) > tol;
                        ++compared;
                    }
                }
        }
    }

    // Grid assignment against an exact integer-rational oracle.
    {
        const std::tuple<int, int, int, int> combos[] = {{5, 5, 1, 4}, {6, 3, 1, 2}};
        Rng rng(99);
        for (const auto& [V, D, rn, rd] : combos) {
            pj::CameraIntrinsics intr = pj::default_intrinsics();
            intr.V = V;
            intr.D = D;
            const double r = static_cast<double>(rn) / rd;
            for (int s : {21, 9}) {
                for (int n = 0; n < 1500; ++n) {
                    std::int64_t k = rng.uniform_int(-8 * 1024, 8 * 1024);
                    if (n % 5 == 0) k = (k & ~1023) | 512;  // force half-way boundaries
                    const double p = static_cast<double>(k) / 1024.0;
                    const long want = rational_assign(k, V, D, rn, rd, s);
                    const pj::CellAssign got = pj::grid_assign_one(p, 0.0, intr, s, r);
                    mismatches += got.u != static_cast<int>(want);
                    mismatches +=
                        got.in_range != (want >= 0 && want < s && got.v >= 0 && got.v < s);
                    compared += 2;
                }
            }
        }
    }

    // Evidence accumulation against a histogram oracle, exact counts.
    {
        Rng rng(7);
        const int s = 9, n_classes = 6;
        std::vector<pj::CellAssign> cells;
        simworld::SegFrame seg{1, 0, {}};
        std::map<std::tuple<int, int, int>, int> want;
        std::size_t expect_kept = 0;
        for (int i = 0; i < 4000; ++i) {
            pj::CellAssign a;
            a.u = rng.uniform_int(-2, s + 1);
            a.v = rng.uniform_int(-2, s + 1);
            a.in_range = a.u >= 0 && a.u < s && a.v >= 0 && a.v < s;
            const bool bg = rng.bernoulli(0.2);
            const int cls = bg ? simworld::kBackgroundId : rng.uniform_int(0, n_classes - 1);
            cells.push_back(a);
            seg.cls.push_back(cls);
            if (a.in_range && !bg) {
                ++want[{a.u, a.v, cls}];
                ++expect_kept;
            }
        }
        seg.w = static_cast<int>(seg.cls.size());
        std::size_t kept = 0;
        const BevGrid g = pj::accumulate_evidence(cells, seg, n_classes, 0.25, s,
                                                  simworld::kBackgroundId, &kept);
        mismatches += kept != expect_kept;
        for (int v = 0; v < s; ++v)
            for (int u = 0; u < s; ++u)
                for (int l = 0; l < n_classes; ++l) {
                    const auto it = want.find({u, v, l});
                    mismatches += g.at(u, v)[l] != (it == want.end() ? 0.0 : it->second);
                    ++compared;
                }
    }

    const bool ok = mismatches == 0 && compared > 3000;
    report(3, ok);
    CHECK(mismatches == 0);
    CHECK(compared > 3000);
}

TEST_CASE("path search cost equals an independent shortest-path oracle across random grids") {
    Rng rng(801);
    int reachable = 0, blocked = 0, mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        BevGrid g(21, 0.25, BevGrid::Mode::Labels, kNumLabels);
        std::vector<planner::Cell> open_cells;
        for (int v = 0; v < 21; ++v)
            for (int u = 0; u < 21; ++u) {
                const double roll = rng.uniform(0.0, 1.0);
                CellLabel l = CellLabel::Navigable;
                if (roll < 0.20)
                    l = CellLabel::Obstacle;
                else if (roll < 0.32)
                    l = CellLabel::Unknown;
                g.set_label(u, v, l);
                if (l == CellLabel::Navigable) open_cells.push_back({u, v});
            }
        if (open_cells.size() < 2) continue;
        const auto pick_cell = [&]() {
            return open_cells[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(open_cells.size()) - 1))];
        };
        const planner::Cell start = pick_cell();
        const planner::Cell goal = pick_cell();
        const auto path = planner::astar(g, start, goal);
        const auto oracle = dijkstra_cost(g, start, goal);
        if (path.has_value() != oracle.has_value()) {
            ++mismatches;
            continue;
        }
        if (!path) {
            ++blocked;
            continue;
        }
        ++reachable;
        if (static_cast<int>(path->size()) != *oracle) ++mismatches;
        planner::Cell prev = start;
        for (const planner::Cell& c : *path) {
            if (std::abs(c.u - prev.u) + std::abs(c.v - prev.v) != 1 ||
                g.label_at(c.u, c.v) != CellLabel::Navigable)
                ++mismatches;
            prev = c;
        }
    }
    const bool ok = mismatches == 0 && reachable > 50 && blocked > 10;
    report(4, ok);
    CHECK(mismatches == 0);
    CHECK(reachable > 50);
    CHECK(blocked > 10);
}

TEST_CASE("the trained tagger clears token and intent accuracy bars on held-out sentences") {
    const auto& fx = tagger_fixture();
    const bool ok = fx.report.token_accuracy >= 0.90 && fx.report.intent_accuracy >= 0.95 &&
                    fx.report.holdout_sentences == 200;
    report(5, ok);
    CHECK(fx.report.token_accuracy >= 0.90);
    CHECK(fx.report.intent_accuracy >= 0.95);
    CHECK(fx.report.holdout_sentences == 200);
}

TEST_CASE("every generated grounding entry resolves back to its own answer") {
    std::vector<simworld::Room> rooms;
    for (std::uint64_t seed = 70; rooms.size() < 4; ++seed) {
        try {
            rooms.push_back(simworld::generate_room(seed));
        } catch (const Error&) {
        }
    }
    const auto corpus = grounding::generate_grounding_corpus(rooms, 500, 404);
    int mismatches = 0;
    for (const auto& entry : corpus) {
        const auto scene = grounding::extract_scene(entry.frame);
        const auto rep = grounding::resolve(entry.query, scene);
        if (rep.status != grounding::ResolveStatus::Resolved ||
            rep.component_id != entry.answer_component) {
            ++mismatches;
            continue;
        }
        const auto* obj = scene.by_component(entry.answer_component);
        if (obj == nullptr || obj->name != entry.query.target) ++mismatches;
    }
    const bool ok = corpus.size() == 500 && mismatches == 0;
    report(6, ok);
    CHECK(corpus.size() == 500);
    CHECK(mismatches == 0);
}

TEST_CASE("relation canonicalization merges exactly the pick synonyms at the working threshold") {
    const auto corpus = priors::priors_fixture_corpus();
    const priors::FirstPass fp = priors::first_pass(corpus);
    const auto table =
        priors::canonicalize_relations(fp.candidates, priors::default_similarity(), 0.7);
    const auto clusters = clusters_of(table);
    int non_singleton = 0;
    bool merged_right = false;
    for (const auto& [canon, members] : clusters) {
        if (members.size() > 1) {
            non_singleton += 1;
            merged_right = members == std::set<std::string>{"grab", "pick", "take"} &&
                           canon == "pick";
        }
    }
    const priors::KnowledgeGraph g = priors::second_pass(fp, table);
    const auto affordances = priors::derive_affordances(g);
    auto has = [&](const std::string& name, priors::Affordance a) {
        for (const auto& p : affordances)
            if (p.name == name) return p.has(a);
        return false;
    };
    const bool portable_ok = has("cellphone", priors::Affordance::Pickup) &&
                             has("book", priors::Affordance::Pickup) &&
                             has("box", priors::Affordance::Pickup);
    const bool ok =
        corpus.size() == 50 && non_singleton == 1 && merged_right && portable_ok;
    report(7, ok);
    CHECK(corpus.size() == 50);
    CHECK(non_singleton == 1);
    CHECK(merged_right);
    CHECK(portable_ok);
}

TEST_CASE("reference selection matches a brute-force argmax in both modes and survives rescaling") {
    namespace dg = navlang::disambig;
    int mismatches = 0;
    Rng rng(703);
    for (int trial = 0; trial < 100; ++trial) {
        const auto scene = random_scene(rng);
        dg::FixtureProvider db;
        const int n = rng.uniform_int(1, 6);
        const auto& planted = scene.objects[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(scene.objects.size()) - 1))];
        for (int i = 0; i < n; ++i) {
            dg::Vec v = dg::default_embed(planted);
            for (auto& x : v) x += rng.uniform(-0.02, 0.02);
            db.add("target", v);
        }
        for (const auto& o : scene.objects) db.add(o.name, dg::default_embed(o));
        const dg::Aggregate agg = rng.bernoulli(0.5) ? dg::Aggregate::Mean : dg::Aggregate::Min;
        const auto res = dg::disambiguate_by_pixels("target", scene, db, n, {.aggregate = agg});

        const auto qvecs = db.query("target");
        int best_comp = -1;
        double best_score = -1e30;
        int best_area = -1;
        for (const auto& o : scene.objects) {
            const dg::Vec kv = dg::default_embed(o);
            double aggv = agg == dg::Aggregate::Min ? 1e30 : 0.0;
            for (const auto& qv : qvecs) {
                double dot = 0, nq = 0, nk = 0;
                for (std::size_t i = 0; i < kv.size(); ++i) {
                    dot += qv[i] * kv[i];
                    nq += qv[i] * qv[i];
                    nk += kv[i] * kv[i];
                }
                const double c = dot / (std::sqrt(nq) * std::sqrt(nk));
                aggv = agg == dg::Aggregate::Min ? std::min(aggv, c)
                                                 : aggv + c / static_cast<double>(qvecs.size());
            }
            const bool better =
                aggv > best_score ||
                (aggv == best_score &&
                 (o.area > best_area || (o.area == best_area && o.component_id < best_comp)));
            if (better) {
                best_score = aggv;
                best_comp = o.component_id;
                best_area = o.area;
            }
        }
        mismatches += res.component_id != best_comp;
        mismatches += res.component_id != planted.component_id;

        // Label mode sees the exact crop embeddings, so it must agree.
        const auto by_labels = dg::disambiguate_by_labels("target", scene, db, n,
                                                          {.aggregate = agg});
        mismatches += by_labels.component_id != res.component_id;
    }

    // Positive rescaling of every vector must not move scores or winners.
    int scale_breaks = 0;
    {
        Rng srng(704);
        class Rescaled : public dg::FeatureProvider {
        public:
            Rescaled(const dg::FeatureProvider& inner, Rng& rng) : inner_(inner), rng_(rng) {}
            std::vector<dg::Vec> query(const std::string& name) const override {
                auto vecs = inner_.query(name);
                for (auto& v : vecs) scale(v);
                return vecs;
            }
            dg::Vec embed(const grounding::SceneObject& obj) const override {
                dg::Vec v = inner_.embed(obj);
                scale(v);
                return v;
            }

        private:
            void scale(dg::Vec& v) const {
                const double f = rng_.uniform(0.05, 20.0);
                for (auto& x : v) x *= f;
            }
            const dg::FeatureProvider& inner_;
            Rng& rng_;
        };
        for (int trial = 0; trial < 30; ++trial) {
            const auto scene = random_scene(srng);
            dg::FixtureProvider db;
            const int n = srng.uniform_int(1, 4);
            for (int i = 0; i < n; ++i) {
                dg::Vec v(static_cast<std::size_t>(dg::embed_dim()));
                for (auto& x : v) x = srng.uniform(-1.0, 1.0);
                if (std::abs(v[0]) < 1e-3) v[0] = 1.0;
                db.add("thing", v);
            }
            const auto base = dg::disambiguate_by_pixels("thing", scene, db, n);
            Rng scale_rng(srng.fork());
            const Rescaled scaled(db, scale_rng);
            const auto res = dg::disambiguate_by_pixels("thing", scene, scaled, n);
            scale_breaks += res.component_id != base.component_id;
            for (std::size_t a = 0; a < res.scores.size(); ++a)
                for (std::size_t b = 0; b < res.scores[a].size(); ++b)
                    scale_breaks += std::abs(res.scores[a][b] - base.scores[a][b]) > 1e-9;
        }
    }

    const bool ok = mismatches == 0 && scale_breaks == 0;
    report(8, ok);
    CHECK(mismatches == 0);
    CHECK(scale_breaks == 0);
}

TEST_CASE("the episode suite degrades in navigation, not manipulation, under learned maps") {
    const auto& tagger = tagger_fixture().model;
    const auto& model = mapping_fixture().model;

    std::vector<std::uint64_t> seeds;
    {
        const auto rc = simworld::RoomGenConfig::cluttered();
        for (std::uint64_t s = 9000; seeds.size() < 10; ++s) {
            try {
                simworld::generate_room(s, rc);
                seeds.push_back(s);
            } catch (const Error&) {
            }
        }
    }

    planner::PlannerConfig gt_cfg;
    gt_cfg.explore_attempts = 8;
    const auto manifest = harness::generate_suite(seeds, true, 50, 4242, tagger, gt_cfg);
    const auto rooms = manifest.build_rooms();
    const auto gt = harness::evaluate_suite(rooms, manifest.episodes, tagger, gt_cfg, 4);

    planner::PlannerConfig fl_cfg;
    fl_cfg.explore_attempts = 8;
    fl_cfg.mapper.source = planner::MapSource::Gcn;
    fl_cfg.mapper.model = &model;
    fl_cfg.mapper.seg_noise = 0.05;
    fl_cfg.mapper.class_flip = 0.12;
    fl_cfg.mapper.flip_seed = 0x5eed;
    const auto fl = harness::evaluate_suite(rooms, manifest.episodes, tagger, fl_cfg, 4);

    auto rate = [](const harness::SuiteMetrics& m, const char* k) {
        const auto it = m.subgoals.find(k);
        return it == m.subgoals.end() ? 0.0 : it->second.rate();
    };
    const double goto_delta = rate(gt.metrics, "GoTo") - rate(fl.metrics, "GoTo");
    const double pickup_delta = rate(gt.metrics, "Pickup") - rate(fl.metrics, "Pickup");
    const double put_delta = rate(gt.metrics, "Put") - rate(fl.metrics, "Put");

    const bool ok = fl.metrics.task_success >= 0.60 && gt.metrics.task_success >= 0.85 &&
                    goto_delta >= 0.15 && std::abs(pickup_delta) <= 0.05 &&
                    std::abs(put_delta) <= 0.05;
    report(9, ok);
    CHECK(fl.metrics.task_success >= 0.60);
    CHECK(gt.metrics.task_success >= 0.85);
    CHECK(goto_delta >= 0.15);
    CHECK(std::abs(pickup_delta) <= 0.05);
    CHECK(std::abs(put_delta) <= 0.05);
}

TEST_CASE("episode scoring reproduces hand-computed values on fixture traces") {
    struct Fixture {
        planner::EpisodeTrace trace;
        int expert;
        int task;
        double goal;
        double weight;
    };
    const std::vector<Fixture> fixtures = {
        {make_trace({}, 0), 5, 1, 1.0, 1.0},
        {make_trace({{"GoTo", true}, {"Pickup", true}, {"GoTo", true}, {"Put", true}}, 10), 10,
         1, 1.0, 1.0},
        {make_trace({{"GoTo", true}, {"Pickup", true}, {"GoTo", true}, {"Put", false}}, 20), 10,
         0, 0.75, 0.5},
        {make_trace({{"GoTo", false}, {"Pickup", false}, {"GoTo", false}, {"Put", false}}, 16),
         10, 0, 0.0, 0.625},
        {make_trace({{"Toggle", true}}, 5), 10, 1, 1.0, 1.0},
        {make_trace({{"GoTo", true}, {"Pickup", false}, {"Put", false, true}}, 8), 8, 0,
         1.0 / 3.0, 1.0},
        {make_trace({{"GoTo", true}, {"Open", true}, {"Close", true}}, 30), 10, 1, 1.0,
         10.0 / 30.0},
        {make_trace({{"GoTo", true}, {"Pickup", false}, {"GoTo", true}, {"Put", false}}, 12),
         12, 0, 0.5, 1.0},
        {make_trace({{"Slice", false}}, 7), 7, 0, 0.0, 1.0},
        {make_trace({{"GoTo", true}, {"Pickup", true}, {"GoTo", true}, {"Put", true},
                     {"GoTo", true}, {"Pickup", false}, {"GoTo", true}, {"Put", false, true}},
                    40),
         10, 0, 0.75, 0.25},
    };
    int mismatches = 0;
    for (const auto& f : fixtures) {
        const harness::EpisodeMetrics m = harness::score_episode(f.trace, f.expert);
        mismatches += m.task_success != f.task;
        mismatches += m.goal_condition != f.goal;
        mismatches += m.weight != f.weight;
        mismatches += m.weighted_success != f.task * f.weight;
        mismatches += m.weighted_goal != f.goal * f.weight;
        mismatches += harness::task_success(f.trace) != f.task;
        mismatches += harness::goal_condition(f.trace) != f.goal;
    }
    const bool ok = fixtures.size() == 10 && mismatches == 0;
    report(10, ok);
    CHECK(fixtures.size() == 10);
    CHECK(mismatches == 0);
}
