#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dparse/backend.hpp"
#include "dparse/corpus.hpp"
#include "dparse/discourse_graph.hpp"
#include "dparse/errors.hpp"
#include "dparse/sample.hpp"

namespace dparse {

// Prompt template, versioned as one unit. The serialized blocks are part of
// the wire contract with fine-tuned backends; change the version when the
// wording changes.
inline constexpr const char* kPromptTemplateVersion = "v1";
inline constexpr const char* kDefaultPromptPreamble =
    "Predict the discourse relations attaching the new units to the dialogue. "
    "Answer with relation tokens like RES(0,1).";

struct EngineConfig {
    int window_size = 15;  // max index span m - l of one sample
    ContextMode mode = ContextMode::predicted;
    Taxonomy taxonomy = msdc_taxonomy();
    int max_new_tokens = 256;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
    std::string prompt_preamble = kDefaultPromptPreamble;
};

/// Builds the sample for one turn: the trailing window of units ending at
/// the turn's last unit, plus the context structure (gold or accumulated,
/// per mode) restricted to the window and excluding relations that target
/// the current turn.
inline Sample build_sample(const RawDialogue& dialogue, int turn_id,
                           const DiscourseGraph& accumulated, const DiscourseGraph& gold,
                           const EngineConfig& cfg) {
    int first = -1, last = -1;
    for (const auto& u : dialogue.units) {
        if (u.turn_id != turn_id) continue;
        if (first < 0) first = u.index;
        last = u.index;
    }
    if (first < 0)
        throw InputError("dialogue " + dialogue.dialogue_id + ": no units in turn " +
                         std::to_string(turn_id));

    Sample s;
    s.dialogue_id = dialogue.dialogue_id;
    s.turn_id = turn_id;
    s.mode = cfg.mode;
    const int lo = std::max(0, last - cfg.window_size);
    s.current_turn_begin = std::max(first, lo);
    for (int i = lo; i <= last; ++i) s.window_units.push_back(dialogue.units.at(i));

    const DiscourseGraph& source = cfg.mode == ContextMode::gold ? gold : accumulated;
    for (const auto& r : source.relations()) {
        if (r.source < lo || r.target > last) continue;
        if (r.target >= s.current_turn_begin) continue;  // current turn is what we predict
        s.context_structure.push_back(r);
    }
    return s;
}

inline std::string sanitize_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    return text;
}

/// Deterministic prompt text: preamble, unit lines, a Structure: line of
/// relation tokens in (source, target) order, and the New: block naming the
/// current-turn unit indices.
inline std::string serialize_sample(const Sample& sample,
                                    const std::string& preamble = kDefaultPromptPreamble) {
    std::string out;
    if (!preamble.empty()) out += preamble + "\n";
    for (const auto& u : sample.window_units) {
        out += std::to_string(u.index);
        out += " [";
        out += to_string(u.kind);
        out += "] ";
        out += sanitize_line(u.speaker);
        out += ": ";
        out += sanitize_line(u.text);
        out += "\n";
    }
    std::vector<RelationInstance> context = sample.context_structure;
    std::sort(context.begin(), context.end());
    out += "Structure:";
    for (const auto& r : context) out += " " + relation_token(r);
    out += "\nNew:";
    for (int idx : sample.current_turn_indices()) out += " " + std::to_string(idx);
    out += "\n";
    return out;
}

struct StepRecord {
    Sample sample;
    std::string raw_output;
    std::vector<RelationInstance> accepted;
    std::vector<RejectedToken> rejected;
};

struct StepLog {
    std::string dialogue_id;
    std::vector<StepRecord> steps;
    bool aborted = false;
    std::string error;
};

struct DialogueResult {
    DiscourseGraph graph;
    StepLog log;

    bool failed() const { return log.aborted; }
};

/// One incremental pass over a dialogue: per turn, build a sample, query
/// the backend, keep the well-formed relations targeting the current turn.
/// Backend failure aborts the dialogue but keeps the partial log.
inline DialogueResult run_dialogue(const RawDialogue& dialogue, const DiscourseGraph& gold,
                                   Backend& backend, const EngineConfig& cfg) {
    DialogueResult result;
    result.graph = DiscourseGraph(dialogue.dialogue_id, static_cast<int>(dialogue.units.size()));
    result.log.dialogue_id = dialogue.dialogue_id;

    std::vector<int> turns;
    for (const auto& u : dialogue.units)
        if (turns.empty() || turns.back() != u.turn_id) turns.push_back(u.turn_id);

    for (int turn_id : turns) {
        StepRecord record;
        record.sample = build_sample(dialogue, turn_id, result.graph, gold, cfg);
        GenerationRequest request{serialize_sample(record.sample, cfg.prompt_preamble),
                                  cfg.max_new_tokens, cfg.temperature, cfg.stop_sequences};
        try {
            record.raw_output = backend.generate(request, {dialogue.dialogue_id, turn_id});
        } catch (const BackendError& e) {
            result.log.aborted = true;
            result.log.error = e.what();
            result.log.steps.push_back(std::move(record));
            return result;
        }
        ParsedOutput parsed = parse_output(record.raw_output, record.sample, cfg.taxonomy);
        record.rejected = std::move(parsed.rejected);
        for (const auto& r : parsed.accepted) {
            if (result.graph.insert(r))
                record.accepted.push_back(r);
            else
                record.rejected.push_back({relation_token(r), RejectReason::duplicate});
        }
        result.log.steps.push_back(std::move(record));
    }
    return result;
}

/// Runs every dialogue of a preprocessed corpus. Dialogues are independent;
/// `parallelism` threads split them and the result is scheduling-invariant.
/// Per-dialogue failures are collected, not propagated.
inline std::map<std::string, DialogueResult> run_corpus(const Corpus& corpus, Backend& backend,
                                                        const EngineConfig& cfg,
                                                        int parallelism = 1) {
    const size_t n = corpus.dialogues.size();
    std::vector<DialogueResult> results(n);
    const auto work = [&](size_t begin, size_t stride) {
        for (size_t i = begin; i < n; i += stride) {
            const auto& d = corpus.dialogues[i];
            try {
                results[i] = run_dialogue(d, gold_graph(d), backend, cfg);
            } catch (const Error& e) {
                results[i].graph = DiscourseGraph(d.dialogue_id, static_cast<int>(d.units.size()));
                results[i].log.dialogue_id = d.dialogue_id;
                results[i].log.aborted = true;
                results[i].log.error = e.what();
            }
        }
    };
    if (parallelism <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < parallelism; ++t)
            threads.emplace_back(work, static_cast<size_t>(t), static_cast<size_t>(parallelism));
        for (auto& t : threads) t.join();
    }
    std::map<std::string, DialogueResult> out;
    for (size_t i = 0; i < n; ++i)
        out.emplace(corpus.dialogues[i].dialogue_id, std::move(results[i]));
    return out;
}

// -- step log (de)serialization ---------------------------------------------

inline nlohmann::ordered_json step_log_to_json(const StepLog& log) {
    nlohmann::ordered_json j;
    j["id"] = log.dialogue_id;
    j["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : log.steps) {
        nlohmann::ordered_json js;
        js["sample"] = sample_to_json(s.sample);
        js["raw"] = s.raw_output;
        js["accepted"] = nlohmann::ordered_json::array();
        for (const auto& r : s.accepted) js["accepted"].push_back(relation_token(r));
        js["rejected"] = nlohmann::ordered_json::array();
        for (const auto& r : s.rejected)
            js["rejected"].push_back({{"token", r.token}, {"reason", to_string(r.reason)}});
        j["steps"].push_back(std::move(js));
    }
    j["aborted"] = log.aborted;
    j["error"] = log.error;
    return j;
}

inline StepLog step_log_from_json(const nlohmann::json& j) {
    StepLog log;
    log.dialogue_id = j.at("id").get<std::string>();
    for (const auto& js : j.at("steps")) {
        StepRecord rec;
        rec.sample = sample_from_json(js.at("sample"));
        rec.raw_output = js.at("raw").get<std::string>();
        for (const auto& t : js.at("accepted"))
            rec.accepted.push_back(relation_from_token(t.get<std::string>()));
        log.steps.push_back(std::move(rec));
    }
    log.aborted = j.value("aborted", false);
    log.error = j.value("error", "");
    return log;
}

}  // namespace dparse
