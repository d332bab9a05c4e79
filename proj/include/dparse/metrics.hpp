#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dparse/discourse_graph.hpp"
#include "dparse/errors.hpp"

namespace dparse {

using GraphSet = std::map<std::string, DiscourseGraph>;

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
    bool zero_support = false;  // no gold instances after filtering
};

inline double f1_of(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

inline Prf prf_from_counts(long tp, long fp, long fn) {
    Prf out;
    out.tp = tp;
    out.fp = fp;
    out.fn = fn;
    out.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    out.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    out.f1 = f1_of(out.precision, out.recall);
    out.zero_support = tp + fn == 0;
    return out;
}

namespace detail {

inline void check_same_dialogues(const GraphSet& gold, const GraphSet& pred) {
    if (gold.size() != pred.size())
        throw InputError("gold and predicted graphs cover different dialogue sets");
    for (const auto& [id, g] : gold)
        if (!pred.count(id)) throw InputError("dialogue " + id + " missing from predictions");
}

inline bool within_cutoff(const RelationInstance& r, std::optional<int> cutoff) {
    return !cutoff || distance(r) <= *cutoff;
}

}  // namespace detail

/// Micro-averaged link score: a predicted pair (i,j) is a true positive iff
/// some gold relation connects the same pair, label ignored. Relations
/// beyond the cutoff are removed from both sides first; counts are pooled
/// corpus-wide over all dialogues.
inline Prf link_f1(const GraphSet& gold, const GraphSet& pred,
                   std::optional<int> cutoff = std::nullopt) {
    detail::check_same_dialogues(gold, pred);
    long tp = 0, fp = 0, fn = 0;
    for (const auto& [id, g] : gold) {
        std::set<std::pair<int, int>> gold_pairs, pred_pairs;
        for (const auto& r : g.relations())
            if (detail::within_cutoff(r, cutoff)) gold_pairs.insert({r.source, r.target});
        for (const auto& r : pred.at(id).relations())
            if (detail::within_cutoff(r, cutoff)) pred_pairs.insert({r.source, r.target});
        for (const auto& p : pred_pairs)
            gold_pairs.count(p) ? ++tp : ++fp;
        for (const auto& p : gold_pairs)
            if (!pred_pairs.count(p)) ++fn;
    }
    return prf_from_counts(tp, fp, fn);
}

struct PerTypeCell {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long gold_support = 0;
    double f1 = 0.0;
};

struct LinkRelResult {
    double precision = 0.0;   // micro over (label, i, j) triples
    double recall = 0.0;
    double f1 = 0.0;          // gold-support-weighted average of per-type F1
    double micro_f1 = 0.0;
    std::map<std::string, PerTypeCell> per_type;
    bool zero_support = false;
};

/// Link+relation score: a true positive requires pair and label to match.
/// The headline F1 is the gold-support-weighted average of per-type F1
/// (types pooled corpus-wide); micro precision/recall over triples are
/// reported alongside.
inline LinkRelResult link_rel_f1(const GraphSet& gold, const GraphSet& pred,
                                 std::optional<int> cutoff = std::nullopt) {
    detail::check_same_dialogues(gold, pred);
    LinkRelResult out;
    long tp = 0, fp = 0, fn = 0;
    for (const auto& [id, g] : gold) {
        std::set<RelationInstance> gold_rels, pred_rels;
        for (const auto& r : g.relations())
            if (detail::within_cutoff(r, cutoff)) gold_rels.insert(r);
        for (const auto& r : pred.at(id).relations())
            if (detail::within_cutoff(r, cutoff)) pred_rels.insert(r);
        for (const auto& r : pred_rels) {
            auto& cell = out.per_type[r.label];
            gold_rels.count(r) ? (++tp, ++cell.tp) : (++fp, ++cell.fp);
        }
        for (const auto& r : gold_rels)
            if (!pred_rels.count(r)) {
                ++fn;
                ++out.per_type[r.label].fn;
            }
    }
    long total_support = 0;
    double weighted = 0.0;
    for (auto& [label, cell] : out.per_type) {
        cell.gold_support = cell.tp + cell.fn;
        const auto prf = prf_from_counts(cell.tp, cell.fp, cell.fn);
        cell.f1 = prf.f1;
        total_support += cell.gold_support;
        weighted += static_cast<double>(cell.gold_support) * cell.f1;
    }
    const auto micro = prf_from_counts(tp, fp, fn);
    out.precision = micro.precision;
    out.recall = micro.recall;
    out.micro_f1 = micro.f1;
    out.f1 = total_support > 0 ? weighted / static_cast<double>(total_support) : 0.0;
    out.zero_support = total_support == 0;
    return out;
}

/// Per-distance F1 for one relation type: bucket d scores the instances of
/// `label` at exactly distance d. Buckets with no gold and no predicted
/// instances report n/a (nullopt).
inline std::map<int, std::optional<double>> distance_breakdown(const GraphSet& gold,
                                                               const GraphSet& pred,
                                                               const std::string& label,
                                                               int max_distance,
                                                               const Taxonomy& taxonomy) {
    if (!taxonomy.contains(label)) throw InputError("unknown relation label: " + label);
    if (max_distance < 1) throw ConfigError("max_distance must be >= 1");
    detail::check_same_dialogues(gold, pred);

    std::map<int, std::array<long, 3>> counts;  // d -> {tp, fp, fn}
    for (const auto& [id, g] : gold) {
        std::set<RelationInstance> gold_rels, pred_rels;
        for (const auto& r : g.relations())
            if (r.label == label && distance(r) <= max_distance) gold_rels.insert(r);
        for (const auto& r : pred.at(id).relations())
            if (r.label == label && distance(r) <= max_distance) pred_rels.insert(r);
        for (const auto& r : pred_rels) counts[distance(r)][gold_rels.count(r) ? 0 : 1]++;
        for (const auto& r : gold_rels)
            if (!pred_rels.count(r)) counts[distance(r)][2]++;
    }

    std::map<int, std::optional<double>> out;
    for (int d = 1; d <= max_distance; ++d) {
        auto it = counts.find(d);
        if (it == counts.end() || (it->second[0] + it->second[1] + it->second[2]) == 0) {
            out[d] = std::nullopt;
        } else {
            out[d] = prf_from_counts(it->second[0], it->second[1], it->second[2]).f1;
        }
    }
    return out;
}

struct EvalReport {
    Prf link;
    LinkRelResult link_rel;
    std::optional<int> cutoff;
    std::string breakdown_label;  // empty = no distance breakdown
    std::map<int, std::optional<double>> per_distance;
    // How counts are pooled; the alternative (per-dialogue averaging) is not
    // implemented, so the header states it explicitly.
    std::string pooling = "corpus-wide";
};

inline EvalReport evaluate(const GraphSet& gold, const GraphSet& pred,
                           std::optional<int> cutoff = std::nullopt,
                           const std::string& breakdown_label = "", int breakdown_max = 15,
                           const Taxonomy& taxonomy = msdc_taxonomy()) {
    EvalReport report;
    report.cutoff = cutoff;
    report.link = link_f1(gold, pred, cutoff);
    report.link_rel = link_rel_f1(gold, pred, cutoff);
    if (!breakdown_label.empty()) {
        report.breakdown_label = breakdown_label;
        report.per_distance = distance_breakdown(gold, pred, breakdown_label, breakdown_max, taxonomy);
    }
    return report;
}

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["pooling"] = r.pooling;
    if (r.cutoff) j["cutoff"] = *r.cutoff;
    j["link"] = {{"precision", r.link.precision}, {"recall", r.link.recall},
                 {"f1", r.link.f1},               {"tp", r.link.tp},
                 {"fp", r.link.fp},               {"fn", r.link.fn},
                 {"zero_support", r.link.zero_support}};
    j["link_rel"] = {{"precision", r.link_rel.precision},
                     {"recall", r.link_rel.recall},
                     {"f1", r.link_rel.f1},
                     {"micro_f1", r.link_rel.micro_f1},
                     {"zero_support", r.link_rel.zero_support}};
    j["per_type"] = nlohmann::ordered_json::object();
    for (const auto& [label, cell] : r.link_rel.per_type)
        j["per_type"][label] = {{"tp", cell.tp},
                                {"fp", cell.fp},
                                {"fn", cell.fn},
                                {"gold_support", cell.gold_support},
                                {"f1", cell.f1}};
    if (!r.breakdown_label.empty()) {
        j["breakdown_label"] = r.breakdown_label;
        j["per_distance"] = nlohmann::ordered_json::object();
        for (const auto& [d, f1] : r.per_distance) {
            if (f1)
                j["per_distance"][std::to_string(d)] = *f1;
            else
                j["per_distance"][std::to_string(d)] = "n/a";
        }
    }
    return j;
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.pooling = j.value("pooling", "corpus-wide");
    if (j.contains("cutoff")) r.cutoff = j["cutoff"].get<int>();
    const auto& jl = j.at("link");
    r.link.precision = jl.at("precision").get<double>();
    r.link.recall = jl.at("recall").get<double>();
    r.link.f1 = jl.at("f1").get<double>();
    r.link.tp = jl.at("tp").get<long>();
    r.link.fp = jl.at("fp").get<long>();
    r.link.fn = jl.at("fn").get<long>();
    r.link.zero_support = jl.at("zero_support").get<bool>();
    const auto& jr = j.at("link_rel");
    r.link_rel.precision = jr.at("precision").get<double>();
    r.link_rel.recall = jr.at("recall").get<double>();
    r.link_rel.f1 = jr.at("f1").get<double>();
    r.link_rel.micro_f1 = jr.at("micro_f1").get<double>();
    r.link_rel.zero_support = jr.at("zero_support").get<bool>();
    for (const auto& [label, cell] : j.at("per_type").items()) {
        PerTypeCell c;
        c.tp = cell.at("tp").get<long>();
        c.fp = cell.at("fp").get<long>();
        c.fn = cell.at("fn").get<long>();
        c.gold_support = cell.at("gold_support").get<long>();
        c.f1 = cell.at("f1").get<double>();
        r.link_rel.per_type.emplace(label, c);
    }
    if (j.contains("breakdown_label")) {
        r.breakdown_label = j["breakdown_label"].get<std::string>();
        for (const auto& [d, f1] : j.at("per_distance").items()) {
            if (f1.is_number())
                r.per_distance[std::stoi(d)] = f1.get<double>();
            else
                r.per_distance[std::stoi(d)] = std::nullopt;
        }
    }
    return r;
}

}  // namespace dparse
