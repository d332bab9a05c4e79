#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dparse/corpus.hpp"
#include "dparse/discourse_graph.hpp"
#include "dparse/errors.hpp"
#include "dparse/sample.hpp"

namespace dparse {

struct GenerationRequest {
    std::string prompt;
    int max_new_tokens = 256;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
};

/// Step identity the engine hands to the backend alongside the prompt.
/// Remote backends ignore it; oracle backends key their replay on it.
struct StepRef {
    std::string dialogue_id;
    int turn_id = 0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string generate(const GenerationRequest& request, const StepRef& step) = 0;
    virtual const char* name() const = 0;
};

enum class RejectReason {
    bad_syntax,
    unknown_label,
    out_of_window,
    bad_order,
    target_not_in_turn,
    duplicate,
};

inline const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::bad_syntax: return "bad_syntax";
        case RejectReason::unknown_label: return "unknown_label";
        case RejectReason::out_of_window: return "out_of_window";
        case RejectReason::bad_order: return "bad_order";
        case RejectReason::target_not_in_turn: return "target_not_in_turn";
        case RejectReason::duplicate: return "duplicate";
    }
    return "?";
}

struct RejectedToken {
    std::string token;
    RejectReason reason;

    friend bool operator==(const RejectedToken&, const RejectedToken&) = default;
};

struct ParsedOutput {
    std::vector<RelationInstance> accepted;
    std::vector<RejectedToken> rejected;
};

/// Scans arbitrary generated text for `CODE(i,j)` tokens and filters them
/// through the well-formedness predicate: known label, in-window endpoints,
/// forward order, current-turn target, no duplicates. Total: never throws
/// on any input text.
inline ParsedOutput parse_output(const std::string& raw, const Sample& sample,
                                 const Taxonomy& taxonomy) {
    ParsedOutput out;
    std::set<RelationInstance> accepted_set;
    const auto is_code_char = [](char c) { return (c >= 'A' && c <= 'Z') || c == '-'; };

    size_t i = 0;
    const size_t n = raw.size();
    while (i < n) {
        if (raw[i] < 'A' || raw[i] > 'Z') { ++i; continue; }
        size_t start = i;
        while (i < n && is_code_char(raw[i])) ++i;
        const std::string code = raw.substr(start, i - start);
        if (i >= n || raw[i] != '(') continue;  // plain uppercase word
        size_t cursor = i + 1;
        const auto read_int = [&](long long& value, char terminator) {
            size_t digits = 0;
            value = 0;
            while (cursor < n && raw[cursor] >= '0' && raw[cursor] <= '9') {
                if (++digits > 9) return false;
                value = value * 10 + (raw[cursor++] - '0');
            }
            return digits > 0 && cursor < n && raw[cursor] == terminator;
        };
        long long src = 0, tgt = 0;
        if (!read_int(src, ',')) {
            out.rejected.push_back({code + raw.substr(i, cursor - i), RejectReason::bad_syntax});
            i = cursor;
            continue;
        }
        ++cursor;
        if (!read_int(tgt, ')')) {
            out.rejected.push_back({code + raw.substr(i, cursor - i), RejectReason::bad_syntax});
            i = cursor;
            continue;
        }
        ++cursor;
        i = cursor;

        const RelationInstance rel{code, static_cast<int>(src), static_cast<int>(tgt)};
        const std::string token = relation_token(rel);
        if (!taxonomy.contains(code)) {
            out.rejected.push_back({token, RejectReason::unknown_label});
        } else if (src >= tgt) {
            out.rejected.push_back({token, RejectReason::bad_order});
        } else if (!sample.in_window(rel.source) || !sample.in_window(rel.target)) {
            out.rejected.push_back({token, RejectReason::out_of_window});
        } else if (!sample.in_current_turn(rel.target)) {
            out.rejected.push_back({token, RejectReason::target_not_in_turn});
        } else if (!accepted_set.insert(rel).second) {
            out.rejected.push_back({token, RejectReason::duplicate});
        } else {
            out.accepted.push_back(rel);
        }
    }
    return out;
}

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Small deterministic RNG with platform-independent draws.
class StepRng {
public:
    StepRng(uint64_t seed, const std::string& dialogue_id, int turn_id)
        : state_(splitmix64(seed ^ splitmix64(fnv1a(dialogue_id) ^
                                              splitmix64(static_cast<uint64_t>(turn_id))))) {}

    uint64_t next() { return state_ = splitmix64(state_); }

    double uniform() {  // in [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    size_t below(size_t bound) { return static_cast<size_t>(next() % bound); }

private:
    uint64_t state_;
};

/// Per-dialogue replay data shared by the oracle backends.
struct GoldIndex {
    std::map<std::string, std::map<int, std::vector<RelationInstance>>> by_turn;

    explicit GoldIndex(const Corpus& corpus) {
        for (const auto& d : corpus.dialogues) {
            auto& turns = by_turn[d.dialogue_id];
            for (const auto& r : d.relations) {
                if (r.source.is_cdu() || r.target.is_cdu())
                    throw InputError("oracle backend requires a preprocessed corpus");
                const int tgt = r.target.unit();
                turns[d.units.at(tgt).turn_id].push_back({r.label, r.source.unit(), tgt});
            }
            for (auto& [turn, rels] : turns) std::sort(rels.begin(), rels.end());
        }
    }

    std::vector<RelationInstance> relations_for(const StepRef& step) const {
        auto d = by_turn.find(step.dialogue_id);
        if (d == by_turn.end()) return {};
        auto t = d->second.find(step.turn_id);
        return t == d->second.end() ? std::vector<RelationInstance>{} : t->second;
    }
};

}  // namespace detail

/// Replays the gold annotation: for each step, emits the gold relation
/// tokens targeting the current turn.
class OracleBackend : public Backend {
public:
    explicit OracleBackend(const Corpus& gold) : index_(gold) {}

    std::string generate(const GenerationRequest&, const StepRef& step) override {
        std::string out;
        for (const auto& r : index_.relations_for(step)) {
            if (!out.empty()) out += ' ';
            out += relation_token(r);
        }
        return out;
    }

    const char* name() const override { return "oracle"; }

private:
    detail::GoldIndex index_;
};

/// Gold replay with seeded noise: each relation is independently dropped
/// with p_drop; survivors are relabeled (uniformly over the other taxonomy
/// labels) with p_relabel. Fully determined by (seed, dialogue, turn).
class NoisyOracleBackend : public Backend {
public:
    NoisyOracleBackend(const Corpus& gold, double p_drop, double p_relabel, uint64_t seed)
        : index_(gold), codes_(gold.taxonomy.codes()), p_drop_(p_drop), p_relabel_(p_relabel),
          seed_(seed) {
        if (p_drop < 0 || p_drop > 1 || p_relabel < 0 || p_relabel > 1)
            throw ConfigError("noisy oracle probabilities must lie in [0,1]");
    }

    std::string generate(const GenerationRequest&, const StepRef& step) override {
        detail::StepRng rng(seed_, step.dialogue_id, step.turn_id);
        std::string out;
        for (auto r : index_.relations_for(step)) {
            if (rng.uniform() < p_drop_) continue;
            if (rng.uniform() < p_relabel_ && codes_.size() > 1) {
                size_t pick = rng.below(codes_.size() - 1);
                for (size_t c = 0, kept = 0; c < codes_.size(); ++c) {
                    if (codes_[c] == r.label) continue;
                    if (kept++ == pick) {
                        r.label = codes_[c];
                        break;
                    }
                }
            }
            if (!out.empty()) out += ' ';
            out += relation_token(r);
        }
        return out;
    }

    const char* name() const override { return "noisy"; }

private:
    detail::GoldIndex index_;
    std::vector<std::string> codes_;
    double p_drop_;
    double p_relabel_;
    uint64_t seed_;
};

/// Backend settings as read from the config file.
struct BackendConfig {
    std::string kind = "oracle";  // remote | oracle | noisy
    std::string url;
    std::string model;
    std::string auth_env;  // name of the env var holding the token
    int timeout_ms = 30000;
    int max_attempts = 3;
    int concurrency = 1;
    double p_drop = 0.0;
    double p_relabel = 0.0;
    uint64_t seed = 0;
};

}  // namespace dparse
