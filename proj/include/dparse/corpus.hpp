#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "dparse/discourse_graph.hpp"
#include "dparse/errors.hpp"

namespace dparse {

/// A relation endpoint before CDU flattening: either an elementary-unit
/// index or a CDU id.
struct Endpoint {
    std::variant<int, std::string> ref;

    bool is_cdu() const { return std::holds_alternative<std::string>(ref); }
    int unit() const { return std::get<int>(ref); }
    const std::string& cdu() const { return std::get<std::string>(ref); }

    static Endpoint of_unit(int idx) { return {idx}; }
    static Endpoint of_cdu(std::string id) { return {std::move(id)}; }

    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

struct RawRelation {
    std::string label;
    Endpoint source;
    Endpoint target;

    friend bool operator==(const RawRelation&, const RawRelation&) = default;
};

/// A complex discourse unit: a named group of unit indices and/or nested
/// CDU ids. Eliminated by preprocessing.
struct Cdu {
    std::string cdu_id;
    std::vector<Endpoint> members;  // non-empty; acyclic membership

    friend bool operator==(const Cdu&, const Cdu&) = default;
};

struct RawDialogue {
    std::string dialogue_id;
    std::vector<ElementaryUnit> units;
    std::vector<RawRelation> relations;
    std::vector<Cdu> cdus;

    friend bool operator==(const RawDialogue&, const RawDialogue&) = default;
};

enum class Split { train, dev, test };

inline const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "?";
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw InputError("unknown split: " + s);
}

struct Corpus {
    std::string name;
    Split split = Split::train;
    std::vector<RawDialogue> dialogues;
    Taxonomy taxonomy;

    const RawDialogue& dialogue(const std::string& id) const {
        for (const auto& d : dialogues)
            if (d.dialogue_id == id) return d;
        throw InputError("no dialogue " + id + " in corpus " + name);
    }
};

/// Validates RawDialogue invariants: contiguous indices, endpoints resolve,
/// CDU ids disjoint from unit indices and acyclic. Throws InputError naming
/// the dialogue on the first violation.
inline void check_dialogue(const RawDialogue& d) {
    const auto fail = [&](const std::string& what) {
        throw InputError("dialogue " + d.dialogue_id + ": " + what);
    };
    for (size_t i = 0; i < d.units.size(); ++i) {
        if (d.units[i].index != static_cast<int>(i)) fail("unit indices not contiguous from 0");
        if (d.units[i].text.empty())
            fail("unit " + std::to_string(i) + " has empty text");
        if (i > 0 && d.units[i].turn_id < d.units[i - 1].turn_id)
            fail("turn_id decreases at unit " + std::to_string(i));
    }
    std::set<std::string> cdu_ids;
    for (const auto& c : d.cdus) {
        if (c.members.empty()) fail("CDU " + c.cdu_id + " has empty member set");
        if (!cdu_ids.insert(c.cdu_id).second) fail("duplicate CDU id " + c.cdu_id);
    }
    const auto check_endpoint = [&](const Endpoint& e, const std::string& where) {
        if (e.is_cdu()) {
            if (!cdu_ids.count(e.cdu())) fail(where + " references missing CDU " + e.cdu());
        } else if (e.unit() < 0 || e.unit() >= static_cast<int>(d.units.size())) {
            fail(where + " references missing unit " + std::to_string(e.unit()));
        }
    };
    for (const auto& r : d.relations) {
        check_endpoint(r.source, "relation " + r.label);
        check_endpoint(r.target, "relation " + r.label);
    }
    for (const auto& c : d.cdus)
        for (const auto& m : c.members) check_endpoint(m, "CDU " + c.cdu_id);
    // CDU membership must be acyclic (three-color DFS).
    std::map<std::string, const Cdu*> by_id;
    for (const auto& c : d.cdus) by_id[c.cdu_id] = &c;
    std::map<std::string, int> color;  // 0 unseen, 1 on path, 2 done
    const std::function<void(const Cdu&)> dfs = [&](const Cdu& cur) {
        int& col = color[cur.cdu_id];
        if (col == 1) fail("CDU membership cycle through " + cur.cdu_id);
        if (col == 2) return;
        col = 1;
        for (const auto& m : cur.members)
            if (m.is_cdu()) dfs(*by_id.at(m.cdu()));
        col = 2;
    };
    for (const auto& c : d.cdus) dfs(c);
}

inline void check_corpus(const Corpus& c) {
    std::set<std::string> ids;
    for (const auto& d : c.dialogues) {
        if (!ids.insert(d.dialogue_id).second)
            throw InputError("duplicate dialogue id " + d.dialogue_id);
        check_dialogue(d);
        for (const auto& r : d.relations)
            if (!c.taxonomy.contains(r.label))
                throw InputError("dialogue " + d.dialogue_id + ": relation label " + r.label +
                                 " not in taxonomy");
    }
}

struct CorpusStats {
    long edu_count = 0;
    long eeu_count = 0;
    long mpdu_count = 0;
    long mpdu3_count = 0;
    long mpdu_gt3_count = 0;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Gold graph of a preprocessed dialogue (all endpoints are unit indices).
inline DiscourseGraph gold_graph(const RawDialogue& d) {
    DiscourseGraph g(d.dialogue_id, static_cast<int>(d.units.size()));
    for (const auto& r : d.relations) {
        if (r.source.is_cdu() || r.target.is_cdu())
            throw InputError("dialogue " + d.dialogue_id + " still contains CDU endpoints");
        g.insert({r.label, r.source.unit(), r.target.unit()});
    }
    return g;
}

/// Table-1-style counts over a preprocessed corpus. Errors if CDUs remain.
inline CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats stats;
    for (const auto& d : corpus.dialogues) {
        if (!d.cdus.empty())
            throw InputError("dialogue " + d.dialogue_id + " still contains CDUs; preprocess first");
        for (const auto& u : d.units)
            (u.kind == UnitKind::EDU ? stats.edu_count : stats.eeu_count)++;
        const auto mp = mpdu_set(gold_graph(d));
        stats.mpdu_count += static_cast<long>(mp.units.size());
        stats.mpdu3_count += mp.indegree3_count;
        stats.mpdu_gt3_count += mp.indegree_gt3_count;
    }
    return stats;
}

}  // namespace dparse
