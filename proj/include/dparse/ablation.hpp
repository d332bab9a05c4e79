#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dparse/backend.hpp"
#include "dparse/corpus.hpp"
#include "dparse/discourse_graph.hpp"
#include "dparse/engine.hpp"
#include "dparse/errors.hpp"
#include "dparse/metrics.hpp"
#include "dparse/sample.hpp"

namespace dparse {

/// Question relation types stripped by the QAP-context ablation.
inline const std::set<std::string>& question_labels() {
    static const std::set<std::string> labels{"CLARIFQ", "CONFQ", "QELAB"};
    return labels;
}

/// Redraws every context relation: uniform label from the taxonomy and
/// uniform endpoints i < j within the window, excluding current-turn
/// targets. Instance count is preserved; deterministic per seed.
inline Sample perturb_random(const Sample& sample, uint64_t seed,
                             const Taxonomy& taxonomy = msdc_taxonomy()) {
    Sample out = sample;
    if (out.context_structure.empty()) return out;
    detail::StepRng rng(seed, sample.dialogue_id, sample.turn_id);
    const auto& codes = taxonomy.codes();
    const int lo = sample.lo();
    const int bound = sample.current_turn_begin;  // targets must stay below the turn
    for (auto& r : out.context_structure) {
        r.label = codes[rng.below(codes.size())];
        if (bound - lo < 2) continue;  // no drawable pair; keep endpoints
        r.target = lo + 1 + static_cast<int>(rng.below(static_cast<size_t>(bound - lo - 1)));
        r.source = lo + static_cast<int>(rng.below(static_cast<size_t>(r.target - lo)));
    }
    return out;
}

/// Empties the context structure, leaving only the unit sequence.
inline Sample strip_structure(const Sample& sample) {
    Sample out = sample;
    out.context_structure.clear();
    return out;
}

/// What a prior run predicted at one step.
struct StepPrediction {
    std::string dialogue_id;
    int turn_id = 0;
    std::vector<RelationInstance> accepted;
};

inline std::vector<StepPrediction> predictions_from_log(const StepLog& log) {
    std::vector<StepPrediction> out;
    for (const auto& s : log.steps)
        out.push_back({log.dialogue_id, s.sample.turn_id, s.accepted});
    return out;
}

namespace detail {

inline std::map<std::pair<std::string, int>, const StepPrediction*> index_predictions(
    const std::vector<StepPrediction>& predictions) {
    std::map<std::pair<std::string, int>, const StepPrediction*> out;
    for (const auto& p : predictions) out[{p.dialogue_id, p.turn_id}] = &p;
    return out;
}

inline const StepPrediction& prediction_for(const Sample& sample,
                                            const std::map<std::pair<std::string, int>,
                                                           const StepPrediction*>& index) {
    auto it = index.find({sample.dialogue_id, sample.turn_id});
    if (it == index.end())
        throw InputError("no prediction for dialogue " + sample.dialogue_id + " turn " +
                         std::to_string(sample.turn_id));
    return *it->second;
}

}  // namespace detail

/// Selects the samples whose step correctly predicted a QAP (pair and label
/// match gold) and removes every question relation from their contexts.
inline std::vector<Sample> ablate_qap(const std::vector<Sample>& samples,
                                      const std::vector<StepPrediction>& predictions,
                                      const GraphSet& gold) {
    const auto index = detail::index_predictions(predictions);
    std::vector<Sample> out;
    for (const auto& s : samples) {
        const auto& pred = detail::prediction_for(s, index);
        const auto& gold_graph = gold.at(s.dialogue_id);
        const bool correct_qap = std::any_of(
            pred.accepted.begin(), pred.accepted.end(),
            [&](const RelationInstance& r) { return r.label == "QAP" && gold_graph.contains(r); });
        if (!correct_qap) continue;
        Sample edited = s;
        std::erase_if(edited.context_structure, [](const RelationInstance& r) {
            return question_labels().count(r.label) > 0;
        });
        out.push_back(std::move(edited));
    }
    return out;
}

/// Selects samples where a correct second CORR(x,z) was predicted and the
/// context holds the matching CORR(x,y) of a triangle CORR(x,y), RES(y,z),
/// CORR(x,z). That CORR(x,y) is relabeled to ACK(x,y); exactly one label
/// changes per selected sample.
inline std::vector<Sample> ablate_correction_triangle(const std::vector<Sample>& samples,
                                                      const std::vector<StepPrediction>& predictions,
                                                      const GraphSet& gold) {
    const auto index = detail::index_predictions(predictions);
    std::vector<Sample> out;
    for (const auto& s : samples) {
        const auto& pred = detail::prediction_for(s, index);
        const auto& gold_graph = gold.at(s.dialogue_id);
        const auto has_res = [&](int y, int z) {
            const RelationInstance res{"RES", y, z};
            if (std::find(s.context_structure.begin(), s.context_structure.end(), res) !=
                s.context_structure.end())
                return true;
            return std::find(pred.accepted.begin(), pred.accepted.end(), res) !=
                   pred.accepted.end();
        };
        std::vector<RelationInstance> correct_corrs;
        for (const auto& r : pred.accepted)
            if (r.label == "CORR" && gold_graph.contains(r)) correct_corrs.push_back(r);
        std::sort(correct_corrs.begin(), correct_corrs.end());

        Sample edited = s;
        bool changed = false;
        for (const auto& corr_xz : correct_corrs) {
            for (auto& ctx : edited.context_structure) {
                if (ctx.label != "CORR" || ctx.source != corr_xz.source) continue;
                if (ctx.target >= corr_xz.target) continue;
                if (!has_res(ctx.target, corr_xz.target)) continue;
                ctx.label = "ACK";
                changed = true;
                break;
            }
            if (changed) break;
        }
        if (changed) out.push_back(std::move(edited));
    }
    return out;
}

/// Post-hoc Narration pass: adds NARR(i,j) between consecutive instruction
/// heads, where a head is an EDU with an outgoing RES to an EEU and no
/// incoming NARR. Monotone and idempotent; added edges carry second-pass
/// provenance.
inline DiscourseGraph second_pass_narration(const DiscourseGraph& predicted,
                                            const RawDialogue& dialogue) {
    std::set<int> res_to_eeu_sources;
    std::set<int> narr_targets;
    for (const auto& r : predicted.relations()) {
        if (r.label == "RES" && dialogue.units.at(r.target).kind == UnitKind::EEU)
            res_to_eeu_sources.insert(r.source);
        if (r.label == "NARR") narr_targets.insert(r.target);
    }
    std::vector<int> heads;
    for (int u : res_to_eeu_sources)
        if (dialogue.units.at(u).kind == UnitKind::EDU && !narr_targets.count(u))
            heads.push_back(u);
    std::sort(heads.begin(), heads.end());

    DiscourseGraph out = predicted;
    for (size_t i = 0; i + 1 < heads.size(); ++i)
        if (!out.contains({"NARR", heads[i], heads[i + 1]}))
            out.insert_second_pass({"NARR", heads[i], heads[i + 1]});
    return out;
}

}  // namespace dparse
