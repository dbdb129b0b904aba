#pragma once

// Two-way disambiguation of object names that grounding could not match:
// score every visible object against feature vectors fetched for the query
// word and pick the best aggregate. Pixel mode embeds each object's crop
// descriptor; label mode looks the objects' class names up in the same
// database.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "navlang/core.hpp"
#include "navlang/grounding.hpp"
#include "navlang/simworld.hpp"

namespace navlang::disambig {

using Vec = std::vector<double>;

// Source of feature vectors: query(name) returns the vectors filed under a
// keyword (empty when unknown), embed(object) a deterministic descriptor of
// a scene crop. Implementations must be deterministic per database.
class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    virtual std::vector<Vec> query(const std::string& name) const = 0;
    virtual Vec embed(const grounding::SceneObject& obj) const = 0;
};

// Descriptor dimension: one slot per simulator class plus three shape
// statistics (aspect ratio, bbox fill ratio, log-area).
inline int embed_dim() { return simworld::num_classes() + 3; }

inline Vec default_embed(const grounding::SceneObject& obj) {
    Vec v(static_cast<std::size_t>(embed_dim()), 0.0);
    v[static_cast<std::size_t>(obj.class_id)] = 1.0;
    const double bw = obj.x1 - obj.x0 + 1, bh = obj.y1 - obj.y0 + 1;
    v[static_cast<std::size_t>(simworld::num_classes()) + 0] = bw / bh;
    v[static_cast<std::size_t>(simworld::num_classes()) + 1] = obj.area / (bw * bh);
    v[static_cast<std::size_t>(simworld::num_classes()) + 2] = std::log(double(obj.area));
    return v;
}

// File-backed provider: JSON {"dim": D, "entries": {name: [[...], ...]}}.
class FixtureProvider : public FeatureProvider {
public:
    FixtureProvider() : dim_(embed_dim()) {}
    explicit FixtureProvider(int dim) : dim_(dim) {
        if (dim <= 0) throw Error("feature dimension must be positive");
    }

    void add(const std::string& name, Vec vec) {
        if (static_cast<int>(vec.size()) != dim_)
            throw Error("feature vector dimension mismatch for " + name);
        entries_[name].push_back(std::move(vec));
    }

    std::vector<Vec> query(const std::string& name) const override {
        const auto it = entries_.find(name);
        return it == entries_.end() ? std::vector<Vec>{} : it->second;
    }

    Vec embed(const grounding::SceneObject& obj) const override { return default_embed(obj); }

    int dim() const { return dim_; }

    json to_json() const {
        json entries = json::object();
        for (const auto& [name, vecs] : entries_) entries[name] = vecs;
        return json{{"dim", dim_}, {"entries", entries}};
    }

    static FixtureProvider from_json(const json& j) {
        FixtureProvider p(j.at("dim").get<int>());
        for (const auto& [name, vecs] : j.at("entries").items())
            for (const auto& v : vecs) p.add(name, v.get<Vec>());
        return p;
    }

private:
    int dim_;
    std::map<std::string, std::vector<Vec>> entries_;
};

// Pairwise cosine similarities, rows over the first family. Every vector
// must be nonzero and all dimensions must agree.
inline std::vector<Vec> cosine_matrix(const std::vector<Vec>& n_f, const std::vector<Vec>& k_f) {
    auto norm = [](const Vec& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    std::size_t dim = 0;
    for (const auto* family : {&n_f, &k_f})
        for (const auto& v : *family) {
            if (dim == 0) dim = v.size();
            if (v.size() != dim || v.empty()) throw Error("cosine needs equal-dimension vectors");
            if (norm(v) == 0.0) throw Error("cosine undefined for a zero vector");
        }
    std::vector<Vec> m(n_f.size(), Vec(k_f.size(), 0.0));
    for (std::size_t a = 0; a < n_f.size(); ++a) {
        const double na = norm(n_f[a]);
        for (std::size_t b = 0; b < k_f.size(); ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < dim; ++i) dot += n_f[a][i] * k_f[b][i];
            m[a][b] = dot / (na * norm(k_f[b]));
        }
    }
    return m;
}

enum class DisambigMode { PixelComparison, LabelComparison };
enum class Aggregate { Mean, Min };

struct DisambigOptions {
    Aggregate aggregate = Aggregate::Mean;
};

struct DisambigResult {
    int component_id = -1;
    std::string object_name;
    DisambigMode mode = DisambigMode::PixelComparison;
    std::vector<Vec> scores;             // N query rows x K object columns
    std::vector<int> columns;            // component id per score column
    std::vector<double> aggregates;      // per column
    double margin = 0.0;                 // best minus second-best aggregate
    std::vector<std::string> warnings;   // label-mode exclusions
};

namespace detail {

inline DisambigResult score_and_pick(const std::vector<Vec>& qvecs,
                                     const std::vector<Vec>& kvecs,
                                     const std::vector<const grounding::SceneObject*>& objects,
                                     DisambigMode mode, const DisambigOptions& opt) {
    DisambigResult res;
    res.mode = mode;
    res.scores = cosine_matrix(qvecs, kvecs);
    res.aggregates.resize(kvecs.size());
    for (std::size_t b = 0; b < kvecs.size(); ++b) {
        double agg = opt.aggregate == Aggregate::Min ? std::numeric_limits<double>::infinity()
                                                     : 0.0;
        for (std::size_t a = 0; a < qvecs.size(); ++a) {
            if (opt.aggregate == Aggregate::Min)
                agg = std::min(agg, res.scores[a][b]);
            else
                agg += res.scores[a][b] / static_cast<double>(qvecs.size());
        }
        res.aggregates[b] = agg;
        res.columns.push_back(objects[b]->component_id);
    }
    std::size_t best = 0;
    for (std::size_t b = 1; b < kvecs.size(); ++b) {
        const double d = res.aggregates[b] - res.aggregates[best];
        if (d > 0.0) {
            best = b;
        } else if (d == 0.0) {
            if (objects[b]->area > objects[best]->area ||
                (objects[b]->area == objects[best]->area &&
                 objects[b]->component_id < objects[best]->component_id))
                best = b;
        }
    }
    res.component_id = objects[best]->component_id;
    res.object_name = objects[best]->name;
    res.margin = 0.0;
    if (kvecs.size() > 1) {
        double second = -std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < kvecs.size(); ++b)
            if (b != best) second = std::max(second, res.aggregates[b]);
        res.margin = res.aggregates[best] - second;
    }
    return res;
}

inline std::vector<Vec> fetch_query(const std::string& name, const FeatureProvider& provider,
                                    int n) {
    if (n <= 0) throw Error("need at least one query vector");
    std::vector<Vec> qvecs = provider.query(name);
    if (qvecs.empty()) throw Error("unknown query: " + name);
    if (static_cast<int>(qvecs.size()) > n) qvecs.resize(static_cast<std::size_t>(n));
    return qvecs;
}

}  // namespace detail

// Embed every visible object's crop, fetch up to n vectors for the query
// word, and pick the object with the best aggregate similarity. Ties go to
// the larger pixel area, then the lower component id.
inline DisambigResult disambiguate_by_pixels(const std::string& query,
                                             const grounding::SceneObjects& scene,
                                             const FeatureProvider& provider, int n,
                                             const DisambigOptions& opt = {}) {
    if (scene.objects.empty()) throw Error("nothing visible");
    const std::vector<Vec> qvecs = detail::fetch_query(query, provider, n);
    std::vector<Vec> kvecs;
    std::vector<const grounding::SceneObject*> objects;
    for (const auto& o : scene.objects) {
        kvecs.push_back(provider.embed(o));
        objects.push_back(&o);
    }
    return detail::score_and_pick(qvecs, kvecs, objects, DisambigMode::PixelComparison, opt);
}

// Same selection, but each object is represented by the first database
// vector filed under its class name. Objects whose name is absent are
// excluded with a warning; everything excluded means nothing comparable is
// visible.
inline DisambigResult disambiguate_by_labels(const std::string& query,
                                             const grounding::SceneObjects& scene,
                                             const FeatureProvider& provider, int n,
                                             const DisambigOptions& opt = {}) {
    if (scene.objects.empty()) throw Error("nothing visible");
    const std::vector<Vec> qvecs = detail::fetch_query(query, provider, n);
    std::vector<Vec> kvecs;
    std::vector<const grounding::SceneObject*> objects;
    std::vector<std::string> warnings;
    for (const auto& o : scene.objects) {
        const std::vector<Vec> labeled = provider.query(o.name);
        if (labeled.empty()) {
            warnings.push_back("no database entry for label: " + o.name);
            continue;
        }
        kvecs.push_back(labeled.front());
        objects.push_back(&o);
    }
    if (objects.empty()) throw Error("nothing visible");
    DisambigResult res =
        detail::score_and_pick(qvecs, kvecs, objects, DisambigMode::LabelComparison, opt);
    res.warnings = std::move(warnings);
    return res;
}

}  // namespace navlang::disambig
