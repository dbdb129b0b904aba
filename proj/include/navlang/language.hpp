#pragma once

// Instruction understanding: a 12-label slot tagger plus a 2-way intent
// classifier over hashed sparse features, trained jointly with
// cross-entropy. The reported joint score is the intent probability times
// the product of per-token slot probabilities.

#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "navlang/core.hpp"

namespace navlang::lang {

inline constexpr int kNumSlots = 12;
inline constexpr int kNumIntents = 2;

inline const std::array<std::string, kNumSlots>& slot_names() {
    static const std::array<std::string, kNumSlots> names = {
        "O",           "target-obj",     "refinement-obj", "action-n-navi",
        "action-desc", "refinement-rel", "target-rel",     "action-navi",
        "direction",   "count",          "location",       "attribute"};
    return names;
}

inline const std::array<std::string, kNumIntents>& intent_names() {
    static const std::array<std::string, kNumIntents> names = {"navigation", "not-navigation"};
    return names;
}

inline int slot_id(const std::string& name) {
    const auto& names = slot_names();
    for (int i = 0; i < kNumSlots; ++i)
        if (names[static_cast<std::size_t>(i)] == name) return i;
    throw Error("unknown slot label: " + name);
}

inline int intent_id(const std::string& name) {
    const auto& names = intent_names();
    for (int i = 0; i < kNumIntents; ++i)
        if (names[static_cast<std::size_t>(i)] == name) return i;
    throw Error("unknown intent label: " + name);
}

// Named slot ids used throughout the planner.
namespace slot {
inline constexpr int kO = 0, kTargetObj = 1, kRefinementObj = 2, kActionNNavi = 3,
                     kActionDesc = 4, kRefinementRel = 5, kTargetRel = 6, kActionNavi = 7,
                     kDirection = 8, kCount = 9, kLocation = 10, kAttribute = 11;
}
namespace intent {
inline constexpr int kNavigation = 0, kNotNavigation = 1;
}

// Lowercase alphanumeric runs; everything else separates tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

struct TaggedInstruction {
    std::vector<std::string> tokens;
    std::vector<int> slots;
    std::vector<double> slot_conf;  // probability of the chosen slot per token
    int intent = 0;
    double intent_conf = 0.0;
    double joint = 0.0;

    json to_json() const {
        json slots_j = json::array();
        for (std::size_t i = 0; i < tokens.size(); ++i)
            slots_j.push_back(json{{"token", tokens[i]},
                                   {"slot", slot_names()[static_cast<std::size_t>(slots[i])]},
                                   {"confidence", slot_conf[i]}});
        return json{{"tokens", std::move(slots_j)},
                    {"intent", intent_names()[static_cast<std::size_t>(intent)]},
                    {"intent_confidence", intent_conf},
                    {"joint_score", joint}};
    }
};

namespace detail {

// Sparse hashed feature indices for token n in context: identity, shape,
// two-sided neighbor windows, adjacent bigrams, and position flags.
inline std::vector<std::uint32_t> token_features(const std::vector<std::string>& toks,
                                                 std::size_t n, int dim) {
    auto h = [dim](const std::string& s) {
        return static_cast<std::uint32_t>(fnv1a(s) % static_cast<std::uint64_t>(dim));
    };
    auto at = [&](std::ptrdiff_t i) -> std::string {
        if (i < 0) return "<s>";
        if (i >= static_cast<std::ptrdiff_t>(toks.size())) return "</s>";
        return toks[static_cast<std::size_t>(i)];
    };
    const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(n);
    const std::string& tok = toks[n];
    bool any_digit = false, any_alpha = false;
    for (char c : tok) {
        any_digit |= c >= '0' && c <= '9';
        any_alpha |= c >= 'a' && c <= 'z';
    }
    const std::string shape = any_digit && any_alpha ? "mixed" : any_digit ? "digit" : "alpha";
    std::vector<std::uint32_t> f;
    f.reserve(11);
    f.push_back(h("bias"));
    f.push_back(h("tok=" + tok));
    f.push_back(h("shape=" + shape));
    f.push_back(h("p1=" + at(i - 1)));
    f.push_back(h("p2=" + at(i - 2)));
    f.push_back(h("n1=" + at(i + 1)));
    f.push_back(h("n2=" + at(i + 2)));
    f.push_back(h("bg_p=" + at(i - 1) + "_" + tok));
    f.push_back(h("bg_n=" + tok + "_" + at(i + 1)));
    f.push_back(h("t0=" + toks[0]));  // sentence predicate, usually the verb
    if (n == 0) f.push_back(h("first"));
    if (n + 1 == toks.size()) f.push_back(h("last"));
    return f;
}

inline void softmax_inplace(std::vector<double>& z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

}  // namespace detail

struct TaggerModel {
    int dim = 16384;
    std::vector<double> w_slot;  // kNumSlots x dim
    std::vector<double> b_slot;  // kNumSlots
    std::vector<double> w_int;   // kNumIntents x dim
    std::vector<double> b_int;   // kNumIntents
    std::uint64_t seed = 0;

    static TaggerModel init(int dim = 16384, std::uint64_t seed = 0) {
        if (dim <= 0) throw Error("feature dimension must be positive");
        TaggerModel m;
        m.dim = dim;
        m.seed = seed;
        m.w_slot.assign(static_cast<std::size_t>(kNumSlots) * dim, 0.0);
        m.b_slot.assign(kNumSlots, 0.0);
        m.w_int.assign(static_cast<std::size_t>(kNumIntents) * dim, 0.0);
        m.b_int.assign(kNumIntents, 0.0);
        return m;
    }

    json to_json() const {
        return json{{"dim", dim},       {"w_slot", w_slot}, {"b_slot", b_slot},
                    {"w_int", w_int},   {"b_int", b_int},   {"seed", seed}};
    }

    static TaggerModel from_json(const json& j) {
        TaggerModel m;
        m.dim = j.at("dim").get<int>();
        m.w_slot = j.at("w_slot").get<std::vector<double>>();
        m.b_slot = j.at("b_slot").get<std::vector<double>>();
        m.w_int = j.at("w_int").get<std::vector<double>>();
        m.b_int = j.at("b_int").get<std::vector<double>>();
        m.seed = j.value("seed", 0ull);
        if (m.w_slot.size() != static_cast<std::size_t>(kNumSlots) * m.dim ||
            m.w_int.size() != static_cast<std::size_t>(kNumIntents) * m.dim)
            throw Error("tagger checkpoint has inconsistent shapes");
        return m;
    }
};

namespace detail {

inline std::vector<double> slot_probs(const TaggerModel& m,
                                      const std::vector<std::uint32_t>& feats) {
    std::vector<double> z(m.b_slot.begin(), m.b_slot.end());
    for (std::uint32_t f : feats)
        for (int s = 0; s < kNumSlots; ++s)
            z[static_cast<std::size_t>(s)] += m.w_slot[static_cast<std::size_t>(s) * m.dim + f];
    softmax_inplace(z);
    return z;
}

// Pooled intent features: mean of the token feature vectors.
inline std::map<std::uint32_t, double> pooled_features(const std::vector<std::string>& toks,
                                                       int dim) {
    std::map<std::uint32_t, double> pooled;
    for (std::size_t n = 0; n < toks.size(); ++n)
        for (std::uint32_t f : token_features(toks, n, dim))
            pooled[f] += 1.0 / static_cast<double>(toks.size());
    return pooled;
}

inline std::vector<double> intent_probs(const TaggerModel& m,
                                        const std::map<std::uint32_t, double>& pooled) {
    std::vector<double> z(m.b_int.begin(), m.b_int.end());
    for (const auto& [f, v] : pooled)
        for (int i = 0; i < kNumIntents; ++i)
            z[static_cast<std::size_t>(i)] += v * m.w_int[static_cast<std::size_t>(i) * m.dim + f];
    softmax_inplace(z);
    return z;
}

}  // namespace detail

inline TaggedInstruction tag(const TaggerModel& model, const std::string& sentence) {
    TaggedInstruction out;
    out.tokens = tokenize(sentence);
    if (out.tokens.empty()) throw Error("cannot tag an empty sentence");
    out.joint = 1.0;
    for (std::size_t n = 0; n < out.tokens.size(); ++n) {
        const auto probs =
            detail::slot_probs(model, detail::token_features(out.tokens, n, model.dim));
        int best = 0;
        for (int s = 1; s < kNumSlots; ++s)
            if (probs[static_cast<std::size_t>(s)] > probs[static_cast<std::size_t>(best)])
                best = s;
        out.slots.push_back(best);
        out.slot_conf.push_back(probs[static_cast<std::size_t>(best)]);
        out.joint *= probs[static_cast<std::size_t>(best)];
    }
    const auto ip = detail::intent_probs(model, detail::pooled_features(out.tokens, model.dim));
    out.intent = ip[0] >= ip[1] ? 0 : 1;
    out.intent_conf = ip[static_cast<std::size_t>(out.intent)];
    out.joint *= out.intent_conf;
    return out;
}

// A labeled training sentence.
struct LabeledSentence {
    std::vector<std::string> tokens;
    std::vector<int> slots;
    int intent = 0;
};

// Cross-entropy of the joint model on one sentence: sum over token slot
// losses plus the intent loss.
inline double tagger_loss(const TaggerModel& m, const LabeledSentence& s) {
    double loss = 0.0;
    for (std::size_t n = 0; n < s.tokens.size(); ++n) {
        const auto p = detail::slot_probs(m, detail::token_features(s.tokens, n, m.dim));
        loss -= std::log(std::max(p[static_cast<std::size_t>(s.slots[n])], 1e-300));
    }
    const auto ip = detail::intent_probs(m, detail::pooled_features(s.tokens, m.dim));
    loss -= std::log(std::max(ip[static_cast<std::size_t>(s.intent)], 1e-300));
    return loss;
}

// Sparse gradients of tagger_loss with respect to every parameter it
// touches; untouched weights have zero gradient.
struct TaggerGrads {
    std::map<std::pair<int, std::uint32_t>, double> w_slot, w_int;  // (row, feature) -> g
    std::array<double, kNumSlots> b_slot{};
    std::array<double, kNumIntents> b_int{};
};

inline TaggerGrads tagger_grads(const TaggerModel& m, const LabeledSentence& s) {
    TaggerGrads g;
    for (std::size_t n = 0; n < s.tokens.size(); ++n) {
        const auto feats = detail::token_features(s.tokens, n, m.dim);
        auto p = detail::slot_probs(m, feats);
        p[static_cast<std::size_t>(s.slots[n])] -= 1.0;  // softmax CE gradient
        for (int row = 0; row < kNumSlots; ++row) {
            g.b_slot[static_cast<std::size_t>(row)] += p[static_cast<std::size_t>(row)];
            for (std::uint32_t f : feats) g.w_slot[{row, f}] += p[static_cast<std::size_t>(row)];
        }
    }
    const auto pooled = detail::pooled_features(s.tokens, m.dim);
    auto ip = detail::intent_probs(m, pooled);
    ip[static_cast<std::size_t>(s.intent)] -= 1.0;
    for (int row = 0; row < kNumIntents; ++row) {
        g.b_int[static_cast<std::size_t>(row)] += ip[static_cast<std::size_t>(row)];
        for (const auto& [f, v] : pooled)
            g.w_int[{row, f}] += ip[static_cast<std::size_t>(row)] * v;
    }
    return g;
}

struct TaggerTrainConfig {
    double lr = 0.25;
    double lr_decay = 0.92;
    int epochs = 15;
    std::uint64_t seed = 1;
    double holdout_fraction = 0.2;
    int dim = 16384;
};

struct TaggerReport {
    double token_accuracy = 0.0;
    double intent_accuracy = 0.0;
    int holdout_sentences = 0;
    std::vector<double> epoch_loss;
};

inline TaggerReport evaluate_tagger(const TaggerModel& m,
                                    const std::vector<LabeledSentence>& data) {
    TaggerReport rep;
    double tok_hit = 0, tok_tot = 0, int_hit = 0;
    for (const auto& s : data) {
        std::string joined;
        for (const auto& t : s.tokens) joined += (joined.empty() ? "" : " ") + t;
        const TaggedInstruction ti = tag(m, joined);
        for (std::size_t n = 0; n < s.tokens.size(); ++n) {
            tok_tot += 1;
            tok_hit += ti.slots[n] == s.slots[n] ? 1 : 0;
        }
        int_hit += ti.intent == s.intent ? 1 : 0;
    }
    rep.token_accuracy = tok_tot > 0 ? tok_hit / tok_tot : 0.0;
    rep.intent_accuracy = data.empty() ? 0.0 : int_hit / static_cast<double>(data.size());
    rep.holdout_sentences = static_cast<int>(data.size());
    return rep;
}

// Joint SGD over slot and intent heads. The trailing holdout fraction of a
// seeded shuffle is held out and scored in the report.
inline TaggerReport train_tagger(TaggerModel& model, std::vector<LabeledSentence> corpus,
                                 const TaggerTrainConfig& cfg) {
    if (corpus.empty()) throw Error("empty tagger corpus");
    for (const auto& s : corpus) {
        if (s.tokens.size() != s.slots.size()) throw Error("token/slot length mismatch");
        for (int y : s.slots)
            if (y < 0 || y >= kNumSlots) throw Error("slot label outside schema");
        if (s.intent < 0 || s.intent >= kNumIntents) throw Error("intent label outside schema");
    }
    Rng rng(cfg.seed);
    for (std::size_t i = corpus.size(); i > 1; --i)
        std::swap(corpus[i - 1],
                  corpus[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    const auto split = static_cast<std::size_t>(
        std::llround(static_cast<double>(corpus.size()) * (1.0 - cfg.holdout_fraction)));
    const std::vector<LabeledSentence> train_set(corpus.begin(), corpus.begin() + split);
    const std::vector<LabeledSentence> holdout(corpus.begin() + split, corpus.end());
    if (train_set.empty()) throw Error("holdout fraction leaves no training data");

    TaggerReport rep;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    double lr = cfg.lr;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const LabeledSentence& s = train_set[idx];
            epoch_loss += tagger_loss(model, s);
            const TaggerGrads g = tagger_grads(model, s);
            for (const auto& [key, gv] : g.w_slot)
                model.w_slot[static_cast<std::size_t>(key.first) * model.dim + key.second] -=
                    lr * gv;
            for (const auto& [key, gv] : g.w_int)
                model.w_int[static_cast<std::size_t>(key.first) * model.dim + key.second] -=
                    lr * gv;
            for (int r = 0; r < kNumSlots; ++r)
                model.b_slot[static_cast<std::size_t>(r)] -= lr * g.b_slot[static_cast<std::size_t>(r)];
            for (int r = 0; r < kNumIntents; ++r)
                model.b_int[static_cast<std::size_t>(r)] -= lr * g.b_int[static_cast<std::size_t>(r)];
        }
        rep.epoch_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
        lr *= cfg.lr_decay;
    }
    const TaggerReport held = evaluate_tagger(model, holdout);
    rep.token_accuracy = held.token_accuracy;
    rep.intent_accuracy = held.intent_accuracy;
    rep.holdout_sentences = held.holdout_sentences;
    return rep;
}

// Registered-name fallback: object names the model left as O are promoted
// so the planner always has something to ground. A parse that already
// carries a target keeps it; promoted extras become refinements.
inline TaggedInstruction lexicon_backstop(TaggedInstruction instr,
                                          const std::vector<std::string>& registry) {
    bool have_target = false;
    for (int s : instr.slots) have_target |= s == slot::kTargetObj;
    for (std::size_t n = 0; n < instr.tokens.size(); ++n) {
        if (instr.slots[n] != slot::kO) continue;
        bool registered = false;
        for (const auto& name : registry) registered |= name == instr.tokens[n];
        if (!registered) continue;
        instr.slots[n] = have_target ? slot::kRefinementObj : slot::kTargetObj;
        have_target = true;
    }
    return instr;
}

// CoNLL-style corpus: "# intent: X" header, "token<TAB>label" lines, blank
// line between sentences.
inline std::string write_corpus(const std::vector<LabeledSentence>& corpus) {
    std::ostringstream out;
    for (const auto& s : corpus) {
        out << "# intent: " << intent_names()[static_cast<std::size_t>(s.intent)] << "\n";
        for (std::size_t n = 0; n < s.tokens.size(); ++n)
            out << s.tokens[n] << "\t" << slot_names()[static_cast<std::size_t>(s.slots[n])]
                << "\n";
        out << "\n";
    }
    return out.str();
}

inline std::vector<LabeledSentence> read_corpus(const std::string& text) {
    std::vector<LabeledSentence> corpus;
    LabeledSentence cur;
    bool have_intent = false;
    std::istringstream in(text);
    std::string line;
    auto flush = [&]() {
        if (cur.tokens.empty() && !have_intent) return;
        if (!have_intent) throw Error("sentence block missing intent header");
        if (cur.tokens.empty()) throw Error("sentence block has no tokens");
        corpus.push_back(std::move(cur));
        cur = LabeledSentence{};
        have_intent = false;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line.rfind("# intent:", 0) == 0) {
            std::string name = line.substr(9);
            while (!name.empty() && name.front() == ' ') name.erase(name.begin());
            cur.intent = intent_id(name);
            have_intent = true;
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("corpus line missing tab: " + line);
        cur.tokens.push_back(line.substr(0, tab));
        cur.slots.push_back(slot_id(line.substr(tab + 1)));
    }
    flush();
    return corpus;
}

// Template-expanded synthetic corpus over the simulated object vocabulary.
inline std::vector<LabeledSentence> generate_corpus(int n_sentences, std::uint64_t seed) {
    using P = std::pair<const char*, int>;
    struct Template {
        std::vector<P> parts;
        int intent;
    };
    namespace sl = slot;
    static const std::vector<Template> templates = {
        {{{"walk", sl::kActionNavi}, {"over", sl::kActionDesc}, {"to", sl::kO}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNavigation},
        {{{"go", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNavigation},
        {{{"navigate", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNavigation},
        {{{"head", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{A}", sl::kAttribute}, {"{T}", sl::kTargetObj}}, intent::kNavigation},
        {{{"walk", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"near", sl::kRefinementRel}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNavigation},
        {{{"go", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"next", sl::kRefinementRel}, {"to", sl::kO}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNavigation},
        {{{"walk", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"beside", sl::kRefinementRel}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNavigation},
        {{{"move", sl::kActionNavi}, {"towards", sl::kActionDesc}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNavigation},
        {{{"walk", sl::kActionNavi}, {"{N}", sl::kCount}, {"steps", sl::kO}, {"{Dm}", sl::kDirection}}, intent::kNavigation},
        {{{"go", sl::kActionNavi}, {"{Dg}", sl::kDirection}}, intent::kNavigation},
        {{{"turn", sl::kActionNavi}, {"{Dt}", sl::kDirection}}, intent::kNavigation},
        {{{"turn", sl::kActionNavi}, {"{Dl}", sl::kDirection}, {"at", sl::kRefinementRel}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNavigation},
        {{{"go", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{L}", sl::kLocation}, {"of", sl::kO}, {"the", sl::kO}, {"room", sl::kO}}, intent::kNavigation},
        {{{"proceed", sl::kActionNavi}, {"to", sl::kO}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNavigation},
        {{{"pick", sl::kActionNNavi}, {"up", sl::kActionDesc}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"pick", sl::kActionNNavi}, {"up", sl::kActionDesc}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"from", sl::kO}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNotNavigation},
        {{{"grab", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"take", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"from", sl::kO}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNotNavigation},
        {{{"pick", sl::kActionNNavi}, {"up", sl::kActionDesc}, {"the", sl::kO}, {"{A}", sl::kAttribute}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"put", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"on", sl::kTargetRel}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNotNavigation},
        {{{"place", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"on", sl::kTargetRel}, {"the", sl::kO}, {"{R}", sl::kRefinementObj}}, intent::kNotNavigation},
        {{{"put", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}, {"down", sl::kActionDesc}}, intent::kNotNavigation},
        {{{"open", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"close", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"turn", sl::kActionNNavi}, {"on", sl::kActionDesc}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"turn", sl::kActionNNavi}, {"off", sl::kActionDesc}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"switch", sl::kActionNNavi}, {"on", sl::kActionDesc}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"switch", sl::kActionNNavi}, {"off", sl::kActionDesc}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"toggle", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"slice", sl::kActionNNavi}, {"the", sl::kO}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
        {{{"gaze", sl::kActionNNavi}, {"{Dz}", sl::kDirection}}, intent::kNotNavigation},
        {{{"look", sl::kActionNNavi}, {"{Dk}", sl::kDirection}}, intent::kNotNavigation},
        {{{"open", sl::kActionNNavi}, {"the", sl::kO}, {"{A}", sl::kAttribute}, {"{T}", sl::kTargetObj}}, intent::kNotNavigation},
    };
    static const std::vector<std::string> objects = {
        "bed",    "sofa",  "desk", "dresser",   "table", "bookshelf", "sidetable", "stool",
        "lamp",   "box",   "book", "cellphone", "light", "couch",     "phone",     "shelf"};
    static const std::vector<std::string> attributes = {"red",   "blue", "green",  "white",
                                                        "small", "big",  "wooden"};
    static const std::vector<std::string> locations = {"corner", "center", "middle", "doorway"};
    static const std::map<std::string, std::vector<std::string>> directions = {
        {"{Dm}", {"forward", "backward"}},
        {"{Dg}", {"left", "right", "forward", "backward"}},
        {"{Dt}", {"left", "right", "around"}},
        {"{Dl}", {"left", "right"}},
        {"{Dz}", {"upwards", "downwards"}},
        {"{Dk}", {"up", "down"}}};

    Rng rng(seed);
    std::vector<LabeledSentence> corpus;
    for (int i = 0; i < n_sentences; ++i) {
        const Template& t = templates[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(templates.size()) - 1))];
        LabeledSentence s;
        s.intent = t.intent;
        std::string target;
        for (const auto& [word, label] : t.parts) {
            std::string w = word;
            if (w == "{T}") {
                target = rng.pick(objects);
                w = target;
            } else if (w == "{R}") {
                do {
                    w = rng.pick(objects);
                } while (w == target);
            } else if (w == "{A}") {
                w = rng.pick(attributes);
            } else if (w == "{L}") {
                w = rng.pick(locations);
            } else if (w == "{N}") {
                w = std::to_string(rng.uniform_int(1, 9));
            } else if (auto it = directions.find(w); it != directions.end()) {
                w = rng.pick(it->second);
            }
            s.tokens.push_back(w);
            s.slots.push_back(label);
        }
        corpus.push_back(std::move(s));
    }
    return corpus;
}

}  // namespace navlang::lang
