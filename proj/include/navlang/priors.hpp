#pragma once

// Semantic object priors from a slot-labeled corpus. Two passes: the first
// collects object nodes and raw relation candidates, the second re-emits
// triples under canonical relation names produced by similarity clustering.
// Affordances are then read off the canonical edges.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "navlang/core.hpp"
#include "navlang/language.hpp"

namespace navlang::priors {

struct RelationCandidate {
    std::string relation, subject, object;  // object may be empty (unary)
    int count = 0;
};

struct FirstPass {
    std::map<std::string, int> nodes;  // name -> occurrence count
    std::vector<RelationCandidate> candidates;
};

// Pass one: nodes from target-obj / refinement-obj tokens; relation words
// from the action and relation slots. An action-desc particle directly after
// a verb token belongs to the verb phrase and is absorbed by its head.
inline FirstPass first_pass(const std::vector<lang::LabeledSentence>& corpus) {
    namespace sl = lang::slot;
    FirstPass out;
    std::map<std::tuple<std::string, std::string, std::string>, int> agg;
    for (const auto& s : corpus) {
        std::string subject, object;
        for (std::size_t n = 0; n < s.tokens.size(); ++n) {
            if (s.slots[n] == sl::kTargetObj) {
                out.nodes[s.tokens[n]] += 1;
                if (subject.empty()) subject = s.tokens[n];
            } else if (s.slots[n] == sl::kRefinementObj) {
                out.nodes[s.tokens[n]] += 1;
                if (object.empty()) object = s.tokens[n];
            }
        }
        if (subject.empty()) continue;
        std::vector<std::string> relations;
        for (std::size_t n = 0; n < s.tokens.size(); ++n) {
            const int y = s.slots[n];
            if (y == sl::kActionNNavi) {
                if (relations.empty() || relations.back() != s.tokens[n])
                    relations.push_back(s.tokens[n]);
            } else if (y == sl::kActionDesc) {
                const bool after_verb =
                    n > 0 && (s.slots[n - 1] == sl::kActionNNavi || s.slots[n - 1] == sl::kActionNavi);
                if (!after_verb) relations.push_back(s.tokens[n]);
            } else if (y == sl::kRefinementRel || y == sl::kTargetRel) {
                relations.push_back(s.tokens[n]);
            }
        }
        for (const auto& rel : relations) agg[{rel, subject, object}] += 1;
    }
    for (const auto& [key, count] : agg)
        out.candidates.push_back(
            {std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
    return out;
}

using SimilarityFn = std::function<double(const std::string&, const std::string&)>;

namespace detail {

inline std::map<std::string, int> trigrams(const std::string& word) {
    const std::string padded = "^" + word + "$";
    std::map<std::string, int> grams;
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) grams[padded.substr(i, 3)] += 1;
    if (grams.empty()) grams[padded] = 1;
    return grams;
}

inline double trigram_cosine(const std::string& a, const std::string& b) {
    const auto ga = trigrams(a), gb = trigrams(b);
    double dot = 0, na = 0, nb = 0;
    for (const auto& [g, c] : ga) {
        na += static_cast<double>(c) * c;
        if (auto it = gb.find(g); it != gb.end()) dot += static_cast<double>(c) * it->second;
    }
    for (const auto& [g, c] : gb) nb += static_cast<double>(c) * c;
    return dot == 0 ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace detail

// Character-trigram cosine, boosted by a bundled synonym table for verb
// pairs whose surface forms share no structure.
inline SimilarityFn default_similarity() {
    static const std::map<std::pair<std::string, std::string>, double> synonyms = {
        {{"grab", "pick"}, 0.85}, {{"pick", "take"}, 0.80}, {{"grab", "take"}, 0.80},
        {{"place", "put"}, 0.78}, {{"switch", "toggle"}, 0.75}};
    return [](const std::string& a, const std::string& b) {
        if (a == b) return 1.0;
        const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        double best = detail::trigram_cosine(a, b);
        if (auto it = synonyms.find(key); it != synonyms.end()) best = std::max(best, it->second);
        return best;
    };
}

// Single-linkage clustering over relation words: clusters are the connected
// components of the "similarity strictly above tau" graph. Each cluster is
// renamed to its most frequent member, ties to the lexicographically least.
inline std::map<std::string, std::string> canonicalize_relations(
    const std::vector<RelationCandidate>& candidates, const SimilarityFn& similarity,
    double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw Error("similarity threshold must lie in (0,1)");
    std::map<std::string, int> freq;
    for (const auto& c : candidates) freq[c.relation] += c.count;
    std::vector<std::string> words;
    for (const auto& [w, f] : freq) words.push_back(w);

    std::vector<std::size_t> parent(words.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < words.size(); ++i)
        for (std::size_t j = i + 1; j < words.size(); ++j) {
            const double sim = similarity(words[i], words[j]);
            if (sim > tau) parent[find(i)] = find(j);
        }

    std::map<std::size_t, std::size_t> best;  // root -> representative index
    for (std::size_t i = 0; i < words.size(); ++i) {
        const std::size_t root = find(i);
        auto it = best.find(root);
        if (it == best.end()) {
            best[root] = i;
            continue;
        }
        const int fi = freq[words[i]], fb = freq[words[it->second]];
        if (fi > fb || (fi == fb && words[i] < words[it->second])) it->second = i;
    }
    std::map<std::string, std::string> table;
    for (std::size_t i = 0; i < words.size(); ++i) table[words[i]] = words[best[find(i)]];
    return table;
}

struct Edge {
    std::string subject, relation, object;
    int count = 0;
};

struct KnowledgeGraph {
    std::map<std::string, int> nodes;
    std::vector<Edge> edges;
    std::map<std::string, std::string> canonical;

    std::vector<const Edge*> edges_of(const std::string& node) const {
        std::vector<const Edge*> out;
        for (const auto& e : edges)
            if (e.subject == node || e.object == node) out.push_back(&e);
        return out;
    }

    json to_json() const {
        json nodes_j = json::array(), edges_j = json::array();
        for (const auto& [name, count] : nodes)
            nodes_j.push_back(json{{"name", name}, {"count", count}});
        for (const auto& e : edges)
            edges_j.push_back(json{{"subject", e.subject},
                                   {"relation", e.relation},
                                   {"object", e.object},
                                   {"count", e.count}});
        return json{{"nodes", std::move(nodes_j)},
                    {"edges", std::move(edges_j)},
                    {"canonical", canonical}};
    }

    static KnowledgeGraph from_json(const json& j) {
        KnowledgeGraph g;
        for (const auto& n : j.at("nodes"))
            g.nodes[n.at("name").get<std::string>()] = n.at("count").get<int>();
        for (const auto& e : j.at("edges"))
            g.edges.push_back({e.at("subject").get<std::string>(),
                               e.at("relation").get<std::string>(),
                               e.at("object").get<std::string>(), e.at("count").get<int>()});
        g.canonical = j.at("canonical").get<std::map<std::string, std::string>>();
        return g;
    }
};

// Pass two: rename candidates through the canonical table and collapse
// duplicates. Nodes pass through untouched.
inline KnowledgeGraph second_pass(const FirstPass& fp,
                                  const std::map<std::string, std::string>& table) {
    KnowledgeGraph g;
    g.nodes = fp.nodes;
    g.canonical = table;
    std::map<std::tuple<std::string, std::string, std::string>, int> agg;
    for (const auto& c : fp.candidates) {
        const auto it = table.find(c.relation);
        const std::string rel = it != table.end() ? it->second : c.relation;
        agg[{c.subject, rel, c.object}] += c.count;
    }
    for (const auto& [key, count] : agg)
        g.edges.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
    return g;
}

inline KnowledgeGraph extract_graph(const std::vector<lang::LabeledSentence>& corpus,
                                    const SimilarityFn& similarity, double tau) {
    const FirstPass fp = first_pass(corpus);
    return second_pass(fp, canonicalize_relations(fp.candidates, similarity, tau));
}

enum class Affordance {
    Pickup,
    Place,
    Open,
    Toggle,
    NavigateLandmark,
    Slice,
    Clean,
    Heat,
    Cool
};

inline const std::string& affordance_name(Affordance a) {
    static const std::array<std::string, 9> names = {"pickup", "place", "open",
                                                     "toggle", "navigate-landmark", "slice",
                                                     "clean",  "heat",  "cool"};
    return names[static_cast<std::size_t>(a)];
}

// What a canonical relation implies for its subject and its object.
struct AffordanceRule {
    std::optional<Affordance> subject, object;
};

inline const std::map<std::string, AffordanceRule>& default_affordance_map() {
    static const std::map<std::string, AffordanceRule> rules = {
        {"pick", {Affordance::Pickup, Affordance::Place}},
        {"grab", {Affordance::Pickup, Affordance::Place}},
        {"take", {Affordance::Pickup, Affordance::Place}},
        {"put", {Affordance::Pickup, Affordance::Place}},
        {"place", {Affordance::Pickup, Affordance::Place}},
        {"open", {Affordance::Open, std::nullopt}},
        {"close", {Affordance::Open, std::nullopt}},
        {"turn", {Affordance::Toggle, std::nullopt}},
        {"switch", {Affordance::Toggle, std::nullopt}},
        {"toggle", {Affordance::Toggle, std::nullopt}},
        {"slice", {Affordance::Slice, std::nullopt}},
        {"clean", {Affordance::Clean, std::nullopt}},
        {"heat", {Affordance::Heat, std::nullopt}},
        {"cool", {Affordance::Cool, std::nullopt}}};
    return rules;
}

struct ObjectPrior {
    std::string name;
    std::map<Affordance, int> affordances;  // affordance -> supporting edge count

    bool has(Affordance a) const { return affordances.count(a) > 0; }
};

// Edge-derived affordances; nodes no affordance-bearing edge touches are
// navigation landmarks, supported by their observation count.
inline std::vector<ObjectPrior> derive_affordances(
    const KnowledgeGraph& graph,
    const std::map<std::string, AffordanceRule>& rules = default_affordance_map()) {
    std::map<std::string, std::map<Affordance, int>> acc;
    for (const auto& [name, count] : graph.nodes) acc[name];
    for (const auto& e : graph.edges) {
        const auto it = rules.find(e.relation);
        if (it == rules.end()) continue;
        if (it->second.subject && !e.subject.empty())
            acc[e.subject][*it->second.subject] += e.count;
        if (it->second.object && !e.object.empty()) acc[e.object][*it->second.object] += e.count;
    }
    std::vector<ObjectPrior> out;
    for (auto& [name, affs] : acc) {
        if (affs.empty()) affs[Affordance::NavigateLandmark] = graph.nodes.at(name);
        out.push_back({name, std::move(affs)});
    }
    return out;
}

inline json priors_to_json(const std::vector<ObjectPrior>& priors) {
    json out = json::array();
    for (const auto& p : priors) {
        json affs = json::object();
        for (const auto& [a, count] : p.affordances) affs[affordance_name(a)] = count;
        out.push_back(json{{"name", p.name}, {"affordances", std::move(affs)}});
    }
    return out;
}

// Fifty gold-labeled sentences exercising the synonym cluster {pick, grab,
// take} alongside relations that must stay singletons.
inline std::vector<lang::LabeledSentence> priors_fixture_corpus() {
    namespace sl = lang::slot;
    using L = lang::LabeledSentence;
    auto verb_obj = [](const std::string& verb, const std::string& obj) {
        return L{{verb, "the", obj}, {sl::kActionNNavi, sl::kO, sl::kTargetObj},
                 lang::intent::kNotNavigation};
    };
    auto pick_from = [](const std::string& verb, const std::string& obj,
                        const std::string& ref) {
        return L{{verb, "up", "the", obj, "from", "the", ref},
                 {sl::kActionNNavi, sl::kActionDesc, sl::kO, sl::kTargetObj, sl::kO, sl::kO,
                  sl::kRefinementObj},
                 lang::intent::kNotNavigation};
    };
    auto take_from = [](const std::string& verb, const std::string& obj,
                        const std::string& ref) {
        return L{{verb, "the", obj, "from", "the", ref},
                 {sl::kActionNNavi, sl::kO, sl::kTargetObj, sl::kO, sl::kO, sl::kRefinementObj},
                 lang::intent::kNotNavigation};
    };
    auto put_on = [](const std::string& obj, const std::string& ref) {
        return L{{"put", "the", obj, "on", "the", ref},
                 {sl::kActionNNavi, sl::kO, sl::kTargetObj, sl::kTargetRel, sl::kO,
                  sl::kRefinementObj},
                 lang::intent::kNotNavigation};
    };
    auto switch_on = [](const std::string& obj) {
        return L{{"switch", "on", "the", obj},
                 {sl::kActionNNavi, sl::kActionDesc, sl::kO, sl::kTargetObj},
                 lang::intent::kNotNavigation};
    };
    auto walk_to = [](const std::string& obj) {
        return L{{"walk", "to", "the", obj},
                 {sl::kActionNavi, sl::kO, sl::kO, sl::kTargetObj}, lang::intent::kNavigation};
    };
    auto walk_near = [](const std::string& obj, const std::string& ref) {
        return L{{"walk", "to", "the", obj, "near", "the", ref},
                 {sl::kActionNavi, sl::kO, sl::kO, sl::kTargetObj, sl::kRefinementRel, sl::kO,
                  sl::kRefinementObj},
                 lang::intent::kNavigation};
    };

    std::vector<L> corpus;
    const std::vector<std::string> portables = {"cellphone", "book", "box"};
    const std::vector<std::string> surfaces = {"desk", "table", "dresser"};
    for (int i = 0; i < 6; ++i) {
        corpus.push_back(pick_from("pick", portables[static_cast<std::size_t>(i) % 3],
                                   surfaces[static_cast<std::size_t>(i) % 3]));
        corpus.push_back(verb_obj("grab", portables[static_cast<std::size_t>(i) % 3]));
        corpus.push_back(take_from("take", portables[static_cast<std::size_t>(i + 1) % 3],
                                   surfaces[static_cast<std::size_t>(i + 1) % 3]));
    }
    for (int i = 0; i < 5; ++i)
        corpus.push_back(put_on(portables[static_cast<std::size_t>(i) % 3],
                                surfaces[static_cast<std::size_t>(i) % 3]));
    for (int i = 0; i < 4; ++i) corpus.push_back(switch_on("lamp"));
    corpus.push_back(verb_obj("open", "dresser"));
    corpus.push_back(verb_obj("open", "box"));
    corpus.push_back(verb_obj("close", "dresser"));
    corpus.push_back(verb_obj("close", "box"));
    for (int i = 0; i < 5; ++i) corpus.push_back(walk_to("sofa"));
    corpus.push_back(walk_to("bed"));
    corpus.push_back(walk_to("bookshelf"));
    for (int i = 0; i < 6; ++i)
        corpus.push_back(walk_near(surfaces[static_cast<std::size_t>(i) % 3],
                                   i % 2 == 0 ? "bed" : "sofa"));
    corpus.push_back(verb_obj("slice", "book"));
    corpus.push_back(pick_from("pick", "book", "desk"));
    corpus.push_back(pick_from("pick", "box", "table"));
    corpus.push_back(take_from("take", "box", "table"));
    corpus.push_back(verb_obj("grab", "cellphone"));
    corpus.push_back(walk_to("stool"));
    if (corpus.size() != 50) throw Error("priors fixture must hold exactly 50 sentences");
    return corpus;
}

}  // namespace navlang::priors
