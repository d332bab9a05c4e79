#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dparse/errors.hpp"

namespace dparse {

enum class UnitKind { EDU, EEU };

inline const char* to_string(UnitKind k) {
    return k == UnitKind::EDU ? "EDU" : "EEU";
}

inline UnitKind unit_kind_from_string(const std::string& s) {
    if (s == "EDU") return UnitKind::EDU;
    if (s == "EEU") return UnitKind::EEU;
    throw InputError("unknown unit kind: " + s);
}

/// One elementary unit of a dialogue: an EDU (chat clause) or an EEU
/// (nonlinguistic event), indexed by position after preprocessing.
struct ElementaryUnit {
    int index = 0;
    UnitKind kind = UnitKind::EDU;
    std::string speaker;
    std::string text;
    int turn_id = 0;

    friend bool operator==(const ElementaryUnit&, const ElementaryUnit&) = default;
};

struct RelationLabel {
    std::string code;       // short token, e.g. RES, QAP, NARR
    std::string long_name;  // e.g. "Result"
    std::string taxonomy_id;

    friend bool operator==(const RelationLabel&, const RelationLabel&) = default;
};

inline bool valid_label_code(const std::string& code) {
    if (code.empty()) return false;
    if (code.front() < 'A' || code.front() > 'Z') return false;
    return std::all_of(code.begin(), code.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || c == '-';
    });
}

/// A closed set of relation labels keyed by short code.
class Taxonomy {
public:
    Taxonomy() = default;

    explicit Taxonomy(std::vector<RelationLabel> labels) {
        for (auto& l : labels) add(std::move(l));
    }

    void add(RelationLabel label) {
        if (!valid_label_code(label.code))
            throw InputError("invalid relation code: " + label.code);
        if (by_code_.count(label.code))
            throw InputError("duplicate relation code: " + label.code);
        order_.push_back(label.code);
        by_code_.emplace(label.code, std::move(label));
    }

    bool contains(const std::string& code) const { return by_code_.count(code) > 0; }

    const RelationLabel& at(const std::string& code) const {
        auto it = by_code_.find(code);
        if (it == by_code_.end()) throw InputError("unknown relation code: " + code);
        return it->second;
    }

    /// Long-name lookup, case-insensitive: annotation exports are not
    /// consistent about capitalization ("Confirmation-question" vs
    /// "Confirmation-Question").
    std::optional<std::string> code_for_long_name(const std::string& name) const {
        const auto lower = [](std::string s) {
            for (auto& ch : s) ch = static_cast<char>(tolower(static_cast<unsigned char>(ch)));
            return s;
        };
        const std::string want = lower(name);
        for (const auto& c : order_)
            if (lower(by_code_.at(c).long_name) == want) return c;
        return std::nullopt;
    }

    /// Codes in insertion order (stable across runs).
    const std::vector<std::string>& codes() const { return order_; }

    size_t size() const { return order_.size(); }

private:
    std::vector<std::string> order_;
    std::map<std::string, RelationLabel> by_code_;
};

/// The 16 MSDC relation types. Short codes for the types the corpus
/// literature abbreviates are kept verbatim (RES, ACK, CORR, QAP, CLARIFQ,
/// CONFQ, QELAB); the rest use deterministic prefixes.
inline const Taxonomy& msdc_taxonomy() {
    static const Taxonomy tax{{
        {"RES", "Result", "msdc"},
        {"ACK", "Acknowledgement", "msdc"},
        {"NARR", "Narration", "msdc"},
        {"ELAB", "Elaboration", "msdc"},
        {"CORR", "Correction", "msdc"},
        {"CONT", "Continuation", "msdc"},
        {"QAP", "Question-answer Pair", "msdc"},
        {"COM", "Comment", "msdc"},
        {"CONFQ", "Confirmation-Question", "msdc"},
        {"CLARIFQ", "Clarification-Question", "msdc"},
        {"CONTR", "Contrast", "msdc"},
        {"QELAB", "Question-Elaboration", "msdc"},
        {"ALT", "Alternation", "msdc"},
        {"EXPL", "Explanation", "msdc"},
        {"COND", "Conditional", "msdc"},
        {"SEQ", "Sequence", "msdc"},
    }};
    return tax;
}

/// A typed, directed edge between elementary-unit indices. Edges always
/// point forward in dialogue order (source < target).
struct RelationInstance {
    std::string label;  // short code, resolved against a Taxonomy
    int source = 0;
    int target = 0;

    friend bool operator==(const RelationInstance&, const RelationInstance&) = default;
    friend auto operator<=>(const RelationInstance& a, const RelationInstance& b) {
        return std::tie(a.source, a.target, a.label) <=> std::tie(b.source, b.target, b.label);
    }
};

inline std::string relation_token(const RelationInstance& r) {
    return r.label + "(" + std::to_string(r.source) + "," + std::to_string(r.target) + ")";
}

/// Distance of a relation in post-preprocessing unit indices.
inline int distance(const RelationInstance& r) { return r.target - r.source; }

/// The accumulated relation set over one dialogue. Acyclic by construction
/// (insert enforces source < target). Multi-parent units are permitted.
class DiscourseGraph {
public:
    DiscourseGraph() = default;
    DiscourseGraph(std::string dialogue_id, int unit_count)
        : dialogue_id_(std::move(dialogue_id)), unit_count_(unit_count) {}

    const std::string& dialogue_id() const { return dialogue_id_; }
    int unit_count() const { return unit_count_; }
    const std::set<RelationInstance>& relations() const { return relations_; }
    size_t size() const { return relations_.size(); }
    bool empty() const { return relations_.empty(); }

    bool contains(const RelationInstance& r) const { return relations_.count(r) > 0; }

    /// Inserts a relation; returns false when the exact triple is already
    /// present (duplicates are ignored). Throws on invariant violations.
    bool insert(const RelationInstance& r) {
        check(r);
        return relations_.insert(r).second;
    }

    /// Inserts a relation added by the narration second pass, keeping
    /// provenance separate from first-pass predictions.
    bool insert_second_pass(const RelationInstance& r) {
        check(r);
        if (!relations_.insert(r).second) return false;
        second_pass_.insert(r);
        return true;
    }

    const std::set<RelationInstance>& second_pass_relations() const { return second_pass_; }

    friend bool operator==(const DiscourseGraph& a, const DiscourseGraph& b) {
        return a.dialogue_id_ == b.dialogue_id_ && a.unit_count_ == b.unit_count_ &&
               a.relations_ == b.relations_;
    }

private:
    void check(const RelationInstance& r) const {
        if (r.source >= r.target)
            throw InputError("relation " + relation_token(r) + ": source must precede target");
        if (r.source < 0 || r.target >= unit_count_)
            throw InputError("relation " + relation_token(r) + ": endpoint out of range for " +
                             std::to_string(unit_count_) + " units");
    }

    std::string dialogue_id_;
    int unit_count_ = 0;
    std::set<RelationInstance> relations_;
    std::set<RelationInstance> second_pass_;
};

struct AddResult {
    DiscourseGraph graph;
    bool duplicate = false;  // the exact triple was already present
};

/// Value-semantics insertion: returns a new graph containing rel. Exact
/// duplicates leave the graph unchanged and set the duplicate note.
inline AddResult add_relation(const DiscourseGraph& graph, const RelationInstance& rel) {
    AddResult out{graph, false};
    out.duplicate = !out.graph.insert(rel);
    return out;
}

enum class ViolationKind {
    unknown_label,
    index_order,     // source >= target
    out_of_range,    // endpoint outside [0, unit_count)
    duplicate,
};

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::unknown_label: return "unknown_label";
        case ViolationKind::index_order: return "index_order";
        case ViolationKind::out_of_range: return "out_of_range";
        case ViolationKind::duplicate: return "duplicate";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    RelationInstance relation;
};

struct ValidationReport {
    std::vector<Violation> violations;
    // Pairs (i,j) carrying more than one label. Counted as a statistic,
    // not a violation: gold data may multi-label a pair.
    int multi_label_pairs = 0;

    bool well_formed() const { return violations.empty(); }
};

/// Structural validation of a relation list against a taxonomy. Operates on
/// a raw edge list so it can independently re-check graphs built elsewhere.
inline ValidationReport validate(const std::vector<RelationInstance>& relations, int unit_count,
                                 const Taxonomy& taxonomy) {
    ValidationReport report;
    std::set<RelationInstance> seen;
    std::map<std::pair<int, int>, std::set<std::string>> labels_per_pair;
    for (const auto& r : relations) {
        if (!taxonomy.contains(r.label))
            report.violations.push_back({ViolationKind::unknown_label, r});
        if (r.source >= r.target)
            report.violations.push_back({ViolationKind::index_order, r});
        if (r.source < 0 || r.target >= unit_count)
            report.violations.push_back({ViolationKind::out_of_range, r});
        if (!seen.insert(r).second)
            report.violations.push_back({ViolationKind::duplicate, r});
        labels_per_pair[{r.source, r.target}].insert(r.label);
    }
    for (const auto& [pair, labels] : labels_per_pair)
        if (labels.size() > 1) report.multi_label_pairs++;
    return report;
}

inline ValidationReport validate(const DiscourseGraph& graph, const Taxonomy& taxonomy) {
    std::vector<RelationInstance> rels(graph.relations().begin(), graph.relations().end());
    return validate(rels, graph.unit_count(), taxonomy);
}

struct MpduStats {
    std::set<int> units;       // units with in-degree >= 2
    int indegree3_count = 0;   // units with in-degree exactly 3
    int indegree_gt3_count = 0;
};

/// Units with two or more incoming relations (multi-parent discourse units).
inline MpduStats mpdu_set(const DiscourseGraph& graph) {
    std::map<int, int> indegree;
    for (const auto& r : graph.relations()) indegree[r.target]++;
    MpduStats out;
    for (const auto& [unit, deg] : indegree) {
        if (deg >= 2) out.units.insert(unit);
        if (deg == 3) out.indegree3_count++;
        if (deg > 3) out.indegree_gt3_count++;
    }
    return out;
}

}  // namespace dparse
