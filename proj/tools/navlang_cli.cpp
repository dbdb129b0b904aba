// Command-line front end for the navigation pipeline: corpus and room
// generation, model training and evaluation, single-episode runs, and full
// suite evaluation. Every verb exits 0 on success and 2 on any failure.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "navlang/harness.hpp"
#include "navlang/priors.hpp"

using namespace navlang;

namespace {

struct Args {
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        const auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    }

    std::string require(const std::string& key) const {
        const auto it = kv.find(key);
        if (it == kv.end()) throw Error("missing required flag --" + key);
        return it->second;
    }

    int geti(const std::string& key, int fallback) const {
        return has(key) ? std::stoi(kv.at(key)) : fallback;
    }

    double getd(const std::string& key, double fallback) const {
        return has(key) ? std::stod(kv.at(key)) : fallback;
    }

    std::uint64_t getu(const std::string& key, std::uint64_t fallback) const {
        return has(key) ? std::stoull(kv.at(key)) : fallback;
    }
};

Args parse_args(int argc, char** argv, int first) {
    Args a;
    for (int i = first; i < argc; ++i) {
        std::string tok = argv[i];
        if (tok.rfind("--", 0) != 0) throw Error("unexpected argument: " + tok);
        tok = tok.substr(2);
        if (tok.empty()) throw Error("empty flag");
        if (i + 1 < argc && std::string(argv[i + 1]).rfind("--", 0) != 0) {
            a.kv[tok] = argv[++i];
        } else {
            a.kv[tok] = "1";  // bare switch
        }
    }
    // A config file supplies defaults; explicit flags win.
    if (a.has("config")) {
        std::ifstream in(a.kv.at("config"));
        if (!in) throw Error("cannot read config " + a.kv.at("config"));
        const json cfg = json::parse(in);
        for (const auto& [key, value] : cfg.items()) {
            if (a.kv.count(key)) continue;
            a.kv[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
    }
    return a;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return json::parse(in);
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::vector<simworld::Room> make_rooms(std::uint64_t base_seed, int count, bool cluttered) {
    const simworld::RoomGenConfig cfg =
        cluttered ? simworld::RoomGenConfig::cluttered() : simworld::RoomGenConfig{};
    std::vector<simworld::Room> rooms;
    for (int i = 0; i < count; ++i)
        rooms.push_back(simworld::generate_room(base_seed + static_cast<std::uint64_t>(i), cfg));
    return rooms;
}

planner::PlannerConfig planner_config_from(const Args& a, const gcn::GcnModel* model) {
    planner::PlannerConfig cfg;
    const std::string map = a.get("map", "gt");
    if (map == "gt") {
        cfg.mapper.source = planner::MapSource::GroundTruth;
    } else if (map == "gcn") {
        if (model == nullptr) throw Error("--map gcn needs --model FILE");
        cfg.mapper.source = planner::MapSource::Gcn;
        cfg.mapper.model = model;
    } else if (map == "evidence") {
        cfg.mapper.source = planner::MapSource::Evidence;
    } else {
        throw Error("unknown --map mode: " + map + " (expected gt, gcn, or evidence)");
    }
    cfg.mapper.seg_noise = a.getd("noise", 0.0);
    cfg.mapper.class_flip = a.getd("flip", 0.0);
    cfg.mapper.flip_seed = a.getu("flip-seed", 0);
    cfg.explore_attempts = a.geti("explore", cfg.explore_attempts);
    cfg.seed = a.getu("seed", cfg.seed);
    return cfg;
}

std::vector<std::string> split_instructions(const std::string& text) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ';')) {
        const auto b = part.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = part.find_last_not_of(" \t");
        out.push_back(part.substr(b, e - b + 1));
    }
    if (out.empty()) throw Error("no instructions given");
    return out;
}

int cmd_gen_rooms(const Args& a) {
    const int count = a.geti("count", 5);
    const std::uint64_t seed = a.getu("seed", 1);
    const bool cluttered = a.has("cluttered");
    const auto rooms = make_rooms(seed, count, cluttered);
    json out_rooms = json::array();
    for (int i = 0; i < count; ++i) {
        const auto& room = rooms[static_cast<std::size_t>(i)];
        std::cout << "room " << i << " (seed " << seed + static_cast<std::uint64_t>(i) << "): "
                  << room.width << " x " << room.height << " m, " << room.objects.size()
                  << " objects:";
        for (const auto& o : room.objects) std::cout << ' ' << o.name;
        std::cout << "\n";
        out_rooms.push_back(room.to_json());
    }
    if (a.has("out"))
        save_json(a.get("out", ""), json{{"seed", seed},
                                         {"count", count},
                                         {"cluttered", cluttered},
                                         {"rooms", out_rooms}});
    return 0;
}

int cmd_train_gcn(const Args& a) {
    const int n_rooms = a.geti("rooms", 20);
    const int poses = a.geti("poses", 50);
    const double noise = a.getd("noise", 0.05);
    const std::uint64_t seed = a.getu("seed", 1);
    const std::string out = a.require("out");
    const auto rooms = make_rooms(seed, n_rooms, true);
    std::cout << "building " << n_rooms << " rooms x " << poses << " poses (noise " << noise
              << ")...\n";
    const auto data = gcn::build_mapping_dataset(rooms, poses, noise, seed + 500);
    auto model = gcn::GcnModel::init({data[0].evidence.channels, 32, 32, 4}, seed);
    const auto recipe = gcn::mapping_train_recipe(seed);
    std::cout << "training " << data.size() << " samples for " << recipe.epochs
              << " epochs...\n";
    const auto result = gcn::train(model, data, recipe);
    std::cout << "loss " << result.epoch_loss.front() << " -> " << result.epoch_loss.back()
              << "\n";
    const auto held = make_rooms(seed + 1000, a.geti("eval-rooms", 5), true);
    const auto held_data =
        gcn::build_mapping_dataset(held, a.geti("eval-poses", 10), noise, seed + 2000);
    std::cout << harness::format_accuracy_table(gcn::eval_mapping(model, held_data));
    save_json(out, model.to_json());
    std::cout << "model saved to " << out << "\n";
    return 0;
}

int cmd_eval_gcn(const Args& a) {
    const auto model = gcn::GcnModel::from_json(load_json(a.require("model")));
    const int n_rooms = a.geti("rooms", 10);
    const int poses = a.geti("poses", 10);
    const double noise = a.getd("noise", 0.05);
    const std::uint64_t seed = a.getu("seed", 2000);
    const auto rooms = make_rooms(seed, n_rooms, true);
    const auto data = gcn::build_mapping_dataset(rooms, poses, noise, seed + 77);
    std::cout << harness::format_accuracy_table(gcn::eval_mapping(model, data));
    return 0;
}

int cmd_train_tagger(const Args& a) {
    const int sentences = a.geti("sentences", 1000);
    const std::uint64_t seed = a.getu("seed", 1);
    const std::string out = a.require("out");
    auto model = lang::TaggerModel::init();
    lang::TaggerTrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = a.geti("epochs", cfg.epochs);
    const auto report = lang::train_tagger(model, lang::generate_corpus(sentences, seed), cfg);
    std::cout << "held-out token accuracy  " << report.token_accuracy << "\n"
              << "held-out intent accuracy " << report.intent_accuracy << "\n";
    save_json(out, model.to_json());
    std::cout << "model saved to " << out << "\n";
    return 0;
}

int cmd_parse(const Args& a) {
    const auto model = lang::TaggerModel::from_json(load_json(a.require("tagger")));
    const auto tagged = lang::tag(model, a.require("text"));
    json out = tagged.to_json();
    try {
        out["behavior"] = planner::behavior_name(planner::classify_behavior(tagged).kind);
    } catch (const Error& e) {
        out["behavior_error"] = e.what();
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_extract_priors(const Args& a) {
    std::vector<lang::LabeledSentence> corpus;
    if (a.has("corpus")) {
        for (const auto& j : load_json(a.get("corpus", ""))) {
            lang::LabeledSentence s;
            for (const auto& t : j.at("tokens")) s.tokens.push_back(t.get<std::string>());
            for (const auto& y : j.at("slots")) s.slots.push_back(y.get<int>());
            s.intent = j.value("intent", 0);
            corpus.push_back(std::move(s));
        }
    } else {
        corpus = priors::priors_fixture_corpus();
    }
    const double tau = a.getd("tau", 0.7);
    const auto graph = priors::extract_graph(corpus, priors::default_similarity(), tau);
    const auto affordances = priors::derive_affordances(graph);
    const json out{{"graph", graph.to_json()}, {"priors", priors::priors_to_json(affordances)}};
    std::cout << out.dump(2) << "\n";
    if (a.has("out")) save_json(a.get("out", ""), out);
    return 0;
}

int cmd_gen_grounding(const Args& a) {
    const int n_rooms = a.geti("rooms", 3);
    const int count = a.geti("count", 50);
    const std::uint64_t seed = a.getu("seed", 1);
    const auto rooms = make_rooms(seed + 300, n_rooms, a.has("cluttered"));
    const auto corpus = grounding::generate_grounding_corpus(rooms, count, seed);
    json out = json::array();
    for (const auto& e : corpus) out.push_back(e.to_json());
    std::cout << "generated " << corpus.size() << " grounding entries\n";
    if (a.has("out")) save_json(a.get("out", ""), out);
    return 0;
}

int cmd_disambiguate(const Args& a) {
    const auto db = disambig::FixtureProvider::from_json(load_json(a.require("db")));
    const std::string query = a.require("query");
    const std::uint64_t seed = a.getu("seed", 1);
    const auto room = simworld::generate_room(a.getu("room-seed", 1),
                                              a.has("cluttered")
                                                  ? simworld::RoomGenConfig::cluttered()
                                                  : simworld::RoomGenConfig{});
    Rng rng(seed);
    const auto pose = simworld::sample_pose(room, rng);
    const int heading = a.geti("heading", 0);
    if (heading < 0 || heading > 3) throw Error("--heading must be 0..3");
    simworld::RenderParams params;
    const auto frame =
        simworld::render_frame(room, pose, heading * (kPi / 2.0), params);
    const auto scene = grounding::extract_scene(frame.seg, 4);
    const int n = a.geti("vectors", 3);
    disambig::DisambigOptions opt;
    if (a.get("aggregate", "mean") == "min") opt.aggregate = disambig::Aggregate::Min;
    const bool by_labels = a.get("mode", "pixels") == "labels";
    const auto result = by_labels
                            ? disambig::disambiguate_by_labels(query, scene, db, n, opt)
                            : disambig::disambiguate_by_pixels(query, scene, db, n, opt);
    json out{{"component", result.component_id},
             {"object", result.object_name},
             {"margin", result.margin},
             {"aggregates", result.aggregates},
             {"warnings", result.warnings}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_run_episode(const Args& a) {
    const auto tagger = lang::TaggerModel::from_json(load_json(a.require("tagger")));
    gcn::GcnModel model;
    const gcn::GcnModel* model_ptr = nullptr;
    if (a.has("model")) {
        model = gcn::GcnModel::from_json(load_json(a.get("model", "")));
        model_ptr = &model;
    }
    const auto cfg = planner_config_from(a, model_ptr);
    const auto room = simworld::generate_room(a.getu("room-seed", 1),
                                              a.has("cluttered")
                                                  ? simworld::RoomGenConfig::cluttered()
                                                  : simworld::RoomGenConfig{});
    Rng rng(a.getu("seed", 1));
    const auto start = simworld::sample_pose(room, rng);
    const auto instructions = split_instructions(a.require("instructions"));
    const auto trace = planner::run_episode(room, start, instructions, tagger, cfg);
    json out = trace.to_json();
    out["task_success"] = harness::task_success(trace);
    out["goal_condition"] = harness::goal_condition(trace);
    std::cout << out.dump(2) << "\n";
    if (a.has("out")) save_json(a.get("out", ""), out);
    return 0;
}

int cmd_eval_suite(const Args& a) {
    const auto tagger = lang::TaggerModel::from_json(load_json(a.require("tagger")));
    gcn::GcnModel model;
    const gcn::GcnModel* model_ptr = nullptr;
    if (a.has("model")) {
        model = gcn::GcnModel::from_json(load_json(a.get("model", "")));
        model_ptr = &model;
    }
    harness::SuiteManifest manifest;
    if (a.has("manifest")) {
        manifest = harness::SuiteManifest::load(a.get("manifest", ""));
    } else {
        const int n_rooms = a.geti("rooms", 10);
        const int episodes = a.geti("episodes", 50);
        const std::uint64_t base = a.getu("room-seed", 9000);
        std::vector<std::uint64_t> seeds;
        for (int i = 0; i < n_rooms; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
        planner::PlannerConfig expert;  // ground-truth maps
        std::cout << "generating " << episodes << "-episode suite over " << n_rooms
                  << " rooms...\n";
        manifest = harness::generate_suite(seeds, !a.has("plain"), episodes,
                                           a.getu("seed", 4242), tagger, expert);
        if (a.has("save-manifest")) manifest.save(a.get("save-manifest", ""));
    }
    const auto rooms = manifest.build_rooms();
    const auto cfg = planner_config_from(a, model_ptr);
    const int threads = a.geti("threads", 1);
    const auto report =
        harness::full_pipeline_eval(rooms, manifest.episodes, tagger, cfg, nullptr, {}, threads);
    std::cout << report.text();
    if (a.has("json")) std::cout << report.to_json().dump(2) << "\n";
    if (a.has("out")) save_json(a.get("out", ""), report.to_json());
    return 0;
}

void usage() {
    std::cout <<
        "usage: navlang <verb> [--flag value ...]\n"
        "\n"
        "verbs:\n"
        "  gen-rooms      --count N --seed S [--cluttered] [--out FILE]\n"
        "  train-gcn      --out FILE [--rooms N --poses P --noise X --seed S]\n"
        "  eval-gcn       --model FILE [--rooms N --poses P --noise X --seed S]\n"
        "  train-tagger   --out FILE [--sentences N --epochs E --seed S]\n"
        "  parse          --tagger FILE --text \"...\"\n"
        "  extract-priors [--corpus FILE --tau T --out FILE]\n"
        "  gen-grounding  [--rooms N --count N --seed S --out FILE]\n"
        "  disambiguate   --db FILE --query NAME [--room-seed S --heading H --mode pixels|labels]\n"
        "  run-episode    --tagger FILE --instructions \"a; b\" [--room-seed S --map gt|gcn|evidence\n"
        "                 --model FILE --noise X --flip Y --flip-seed S --explore N]\n"
        "  eval-suite     --tagger FILE [--manifest FILE | --rooms N --episodes N --room-seed S]\n"
        "                 [--map gt|gcn|evidence --model FILE --noise X --flip Y --flip-seed S\n"
        "                 --explore N --threads N --json --out FILE]\n"
        "\n"
        "global flags: --seed N, --config FILE (JSON of flag defaults)\n";
}

}  // namespace

int main(int argc, char** argv) {
    try {
        if (argc < 2) {
            usage();
            return 2;
        }
        const std::string verb = argv[1];
        if (verb == "--help" || verb == "help") {
            usage();
            return 0;
        }
        const Args a = parse_args(argc, argv, 2);
        if (verb == "gen-rooms") return cmd_gen_rooms(a);
        if (verb == "train-gcn") return cmd_train_gcn(a);
        if (verb == "eval-gcn") return cmd_eval_gcn(a);
        if (verb == "train-tagger") return cmd_train_tagger(a);
        if (verb == "parse") return cmd_parse(a);
        if (verb == "extract-priors") return cmd_extract_priors(a);
        if (verb == "gen-grounding") return cmd_gen_grounding(a);
        if (verb == "disambiguate") return cmd_disambiguate(a);
        if (verb == "run-episode") return cmd_run_episode(a);
        if (verb == "eval-suite") return cmd_eval_suite(a);
        throw Error("unknown verb: " + verb);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
