#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dparse/corpus.hpp"
#include "dparse/corpus_io.hpp"
#include "dparse/errors.hpp"

namespace dparse {

/// Old-index -> new-index map for one preprocessing stage. -1 marks a
/// removed unit. Total on input units; injective on surviving units except
/// where a stage deliberately merges (EEU compression maps every run member
/// to the merged unit).
struct IndexRemap {
    std::vector<int> to_new;

    static IndexRemap identity(size_t n) {
        IndexRemap r;
        r.to_new.resize(n);
        for (size_t i = 0; i < n; ++i) r.to_new[i] = static_cast<int>(i);
        return r;
    }

    int apply(int old_index) const { return to_new.at(old_index); }

    friend bool operator==(const IndexRemap&, const IndexRemap&) = default;
};

inline IndexRemap compose(const IndexRemap& first, const IndexRemap& then) {
    IndexRemap out;
    out.to_new.reserve(first.to_new.size());
    for (int mid : first.to_new)
        out.to_new.push_back(mid < 0 ? -1 : then.to_new.at(mid));
    return out;
}

struct StageResult {
    RawDialogue dialogue;
    IndexRemap remap;
    DiscardLog log;
};

namespace detail {

/// Head of a CDU: the lowest-index elementary unit among recursive members.
inline int cdu_head(const Cdu& cdu, const std::map<std::string, const Cdu*>& by_id) {
    int head = -1;
    std::vector<const Cdu*> stack{&cdu};
    while (!stack.empty()) {
        const Cdu* cur = stack.back();
        stack.pop_back();
        for (const auto& m : cur->members) {
            if (m.is_cdu()) {
                auto it = by_id.find(m.cdu());
                if (it == by_id.end())
                    throw InputError("CDU " + cur->cdu_id + " references missing CDU " + m.cdu());
                stack.push_back(it->second);
            } else if (head < 0 || m.unit() < head) {
                head = m.unit();
            }
        }
    }
    if (head < 0) throw InputError("CDU " + cdu.cdu_id + " has no elementary members");
    return head;
}

inline void rewire_and_dedup(RawDialogue& d, const std::vector<RawRelation>& relations,
                             const std::map<std::string, int>& cdu_heads,
                             const IndexRemap* unit_remap, const std::string& stage,
                             DiscardLog& log) {
    std::set<std::tuple<std::string, int, int>> seen;
    for (const auto& r : relations) {
        const auto resolve = [&](const Endpoint& e) {
            int u = e.is_cdu() ? cdu_heads.at(e.cdu()) : e.unit();
            return unit_remap ? unit_remap->apply(u) : u;
        };
        const auto old_of = [](const Endpoint& e) {
            return e.is_cdu() ? e.cdu() : std::to_string(e.unit());
        };
        const int src = resolve(r.source);
        const int tgt = resolve(r.target);
        if (src < 0 || tgt < 0) {
            log.push_back({d.dialogue_id, "pruned_relation_" + stage,
                           r.label + "(" + old_of(r.source) + "," + old_of(r.target) + ")"});
            continue;
        }
        if (src == tgt) {
            log.push_back({d.dialogue_id, "self_loop_after_" + stage,
                           r.label + "(" + std::to_string(src) + "," + std::to_string(tgt) + ")"});
            continue;
        }
        if (src > tgt) {
            log.push_back({d.dialogue_id, "order_violation_after_" + stage,
                           r.label + "(" + std::to_string(src) + "," + std::to_string(tgt) + ")"});
            continue;
        }
        if (!seen.insert({r.label, src, tgt}).second) {
            log.push_back({d.dialogue_id, "duplicate_after_" + stage,
                           r.label + "(" + std::to_string(src) + "," + std::to_string(tgt) + ")"});
            continue;
        }
        d.relations.push_back({r.label, Endpoint::of_unit(src), Endpoint::of_unit(tgt)});
    }
}

}  // namespace detail

/// Rewrites every CDU endpoint to the CDU's head unit and drops the CDUs.
/// Relations that collapse to self-loops, invert order, or duplicate after
/// rewiring are discarded and logged. Unit indices are unchanged.
inline StageResult flatten_cdus(const RawDialogue& dialogue) {
    check_dialogue(dialogue);
    StageResult out;
    out.remap = IndexRemap::identity(dialogue.units.size());
    out.dialogue.dialogue_id = dialogue.dialogue_id;
    out.dialogue.units = dialogue.units;

    std::map<std::string, const Cdu*> by_id;
    for (const auto& c : dialogue.cdus) by_id[c.cdu_id] = &c;
    std::map<std::string, int> heads;
    for (const auto& c : dialogue.cdus) heads[c.cdu_id] = detail::cdu_head(c, by_id);

    detail::rewire_and_dedup(out.dialogue, dialogue.relations, heads, nullptr, "flatten", out.log);
    return out;
}

/// Collapses every maximal run of consecutive EEUs by one agent within one
/// turn into a single EEU whose text joins the member texts with "; ".
/// Relations touching run members are rewired to the merged unit.
inline StageResult compress_eeu_sequences(const RawDialogue& dialogue) {
    if (!dialogue.cdus.empty())
        throw InputError("dialogue " + dialogue.dialogue_id + ": flatten CDUs before compressing");
    StageResult out;
    out.dialogue.dialogue_id = dialogue.dialogue_id;
    out.remap.to_new.assign(dialogue.units.size(), -1);

    size_t i = 0;
    while (i < dialogue.units.size()) {
        const auto& u = dialogue.units[i];
        size_t j = i + 1;
        if (u.kind == UnitKind::EEU) {
            while (j < dialogue.units.size() && dialogue.units[j].kind == UnitKind::EEU &&
                   dialogue.units[j].speaker == u.speaker && dialogue.units[j].turn_id == u.turn_id)
                ++j;
        }
        ElementaryUnit merged = u;
        merged.index = static_cast<int>(out.dialogue.units.size());
        for (size_t k = i + 1; k < j; ++k) merged.text += "; " + dialogue.units[k].text;
        for (size_t k = i; k < j; ++k) out.remap.to_new[k] = merged.index;
        out.dialogue.units.push_back(std::move(merged));
        i = j;
    }

    detail::rewire_and_dedup(out.dialogue, dialogue.relations, {}, &out.remap, "compress", out.log);
    return out;
}

/// Removes EEUs with no undirected relation path to any EDU. Relations
/// among removed units (necessarily EEU-only components) are logged.
inline StageResult prune_isolated_eeus(const RawDialogue& dialogue) {
    if (!dialogue.cdus.empty())
        throw InputError("dialogue " + dialogue.dialogue_id + ": flatten CDUs before pruning");
    const size_t n = dialogue.units.size();
    std::vector<std::vector<int>> adjacent(n);
    for (const auto& r : dialogue.relations) {
        adjacent[r.source.unit()].push_back(r.target.unit());
        adjacent[r.target.unit()].push_back(r.source.unit());
    }
    std::vector<bool> reaches_edu(n, false);
    std::deque<int> frontier;
    for (size_t u = 0; u < n; ++u)
        if (dialogue.units[u].kind == UnitKind::EDU) {
            reaches_edu[u] = true;
            frontier.push_back(static_cast<int>(u));
        }
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop_front();
        for (int v : adjacent[u])
            if (!reaches_edu[v]) {
                reaches_edu[v] = true;
                frontier.push_back(v);
            }
    }

    StageResult out;
    out.dialogue.dialogue_id = dialogue.dialogue_id;
    out.remap.to_new.assign(n, -1);
    for (size_t u = 0; u < n; ++u) {
        if (!reaches_edu[u]) continue;  // isolated EEU
        ElementaryUnit kept = dialogue.units[u];
        kept.index = static_cast<int>(out.dialogue.units.size());
        out.remap.to_new[u] = kept.index;
        out.dialogue.units.push_back(std::move(kept));
    }
    detail::rewire_and_dedup(out.dialogue, dialogue.relations, {}, &out.remap, "prune", out.log);
    return out;
}

enum class PreprocessProfile { msdc, stac_sit, stac_l, molweni };

inline PreprocessProfile preprocess_profile_from_string(const std::string& s) {
    if (s == "msdc") return PreprocessProfile::msdc;
    if (s == "stac_sit") return PreprocessProfile::stac_sit;
    if (s == "stac_l") return PreprocessProfile::stac_l;
    if (s == "molweni") return PreprocessProfile::molweni;
    throw ConfigError("unknown preprocess profile: " + s);
}

struct PipelineResult {
    Corpus corpus;
    std::map<std::string, IndexRemap> remaps;  // end-to-end, per dialogue
    DiscardLog log;
};

/// Per-corpus pipeline: flatten always; compress EEU runs for msdc and
/// stac_sit; prune isolated EEUs for stac_sit only.
inline PipelineResult preprocess_pipeline(const Corpus& corpus, PreprocessProfile profile) {
    const bool compress =
        profile == PreprocessProfile::msdc || profile == PreprocessProfile::stac_sit;
    const bool prune = profile == PreprocessProfile::stac_sit;

    PipelineResult out;
    out.corpus.name = corpus.name;
    out.corpus.split = corpus.split;
    out.corpus.taxonomy = corpus.taxonomy;
    for (const auto& d : corpus.dialogues) {
        StageResult stage = flatten_cdus(d);
        IndexRemap total = stage.remap;
        auto append_log = [&](DiscardLog& log) {
            out.log.insert(out.log.end(), log.begin(), log.end());
        };
        append_log(stage.log);
        if (compress) {
            StageResult next = compress_eeu_sequences(stage.dialogue);
            total = compose(total, next.remap);
            append_log(next.log);
            stage = std::move(next);
        }
        if (prune) {
            StageResult next = prune_isolated_eeus(stage.dialogue);
            total = compose(total, next.remap);
            append_log(next.log);
            stage = std::move(next);
        }
        out.remaps.emplace(d.dialogue_id, std::move(total));
        out.corpus.dialogues.push_back(std::move(stage.dialogue));
    }
    return out;
}

}  // namespace dparse
