#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dparse/discourse_graph.hpp"
#include "dparse/errors.hpp"

namespace dparse {

enum class ContextMode { gold, predicted };

inline const char* to_string(ContextMode m) {
    return m == ContextMode::gold ? "gold" : "predicted";
}

inline ContextMode context_mode_from_string(const std::string& s) {
    if (s == "gold") return ContextMode::gold;
    if (s == "predicted") return ContextMode::predicted;
    throw ConfigError("unknown context mode: " + s);
}

/// One engine increment: the windowed units, the context structure over
/// them, and the trailing current-turn units the backend must attach.
struct Sample {
    std::string dialogue_id;
    int turn_id = 0;
    std::vector<ElementaryUnit> window_units;       // contiguous, absolute indices
    std::vector<RelationInstance> context_structure;
    int current_turn_begin = 0;                     // absolute index of first turn unit
    ContextMode mode = ContextMode::gold;

    int lo() const { return window_units.front().index; }
    int hi() const { return window_units.back().index; }

    bool in_window(int idx) const { return idx >= lo() && idx <= hi(); }
    bool in_current_turn(int idx) const { return idx >= current_turn_begin && idx <= hi(); }

    std::vector<int> current_turn_indices() const {
        std::vector<int> out;
        for (int i = current_turn_begin; i <= hi(); ++i) out.push_back(i);
        return out;
    }

    friend bool operator==(const Sample&, const Sample&) = default;
};

inline nlohmann::ordered_json sample_to_json(const Sample& s) {
    nlohmann::ordered_json j;
    j["id"] = s.dialogue_id;
    j["turn"] = s.turn_id;
    j["mode"] = to_string(s.mode);
    j["units"] = nlohmann::ordered_json::array();
    for (const auto& u : s.window_units) {
        nlohmann::ordered_json ju;
        ju["idx"] = u.index;
        ju["kind"] = to_string(u.kind);
        ju["speaker"] = u.speaker;
        ju["text"] = u.text;
        ju["turn"] = u.turn_id;
        j["units"].push_back(std::move(ju));
    }
    j["context"] = nlohmann::ordered_json::array();
    for (const auto& r : s.context_structure) j["context"].push_back(relation_token(r));
    j["turn_begin"] = s.current_turn_begin;
    return j;
}

inline RelationInstance relation_from_token(const std::string& token) {
    const auto open = token.find('(');
    const auto comma = token.find(',', open);
    const auto close = token.find(')', comma);
    if (open == std::string::npos || comma == std::string::npos || close == std::string::npos)
        throw InputError("malformed relation token: " + token);
    return {token.substr(0, open), std::stoi(token.substr(open + 1, comma - open - 1)),
            std::stoi(token.substr(comma + 1, close - comma - 1))};
}

inline Sample sample_from_json(const nlohmann::json& j) {
    Sample s;
    s.dialogue_id = j.at("id").get<std::string>();
    s.turn_id = j.at("turn").get<int>();
    s.mode = context_mode_from_string(j.at("mode").get<std::string>());
    for (const auto& ju : j.at("units")) {
        ElementaryUnit u;
        u.index = ju.at("idx").get<int>();
        u.kind = unit_kind_from_string(ju.at("kind").get<std::string>());
        u.speaker = ju.at("speaker").get<std::string>();
        u.text = ju.at("text").get<std::string>();
        u.turn_id = ju.at("turn").get<int>();
        s.window_units.push_back(std::move(u));
    }
    for (const auto& t : j.at("context"))
        s.context_structure.push_back(relation_from_token(t.get<std::string>()));
    s.current_turn_begin = j.at("turn_begin").get<int>();
    return s;
}

}  // namespace dparse
