#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dparse/corpus.hpp"
#include "dparse/errors.hpp"

namespace dparse {

enum class CorpusFormat { canonical, stac_glozz, msdc, molweni };

inline CorpusFormat corpus_format_from_string(const std::string& s) {
    if (s == "canonical") return CorpusFormat::canonical;
    if (s == "stac_glozz") return CorpusFormat::stac_glozz;
    if (s == "msdc") return CorpusFormat::msdc;
    if (s == "molweni") return CorpusFormat::molweni;
    throw ConfigError("unknown corpus format: " + s);
}

/// One annotation dropped by an adapter, with a reason code for auditing.
struct Discard {
    std::string dialogue_id;
    std::string reason;  // e.g. unknown_label, dangling_endpoint
    std::string detail;
};

using DiscardLog = std::vector<Discard>;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson endpoint_to_json(const Endpoint& e) {
    if (e.is_cdu()) return e.cdu();
    return e.unit();
}

inline Endpoint endpoint_from_json(const nlohmann::json& j) {
    if (j.is_number_integer()) return Endpoint::of_unit(j.get<int>());
    if (j.is_string()) return Endpoint::of_cdu(j.get<std::string>());
    throw InputError("relation endpoint must be a unit index or CDU id");
}

inline ojson dialogue_to_json(const RawDialogue& d) {
    ojson rec;
    rec["id"] = d.dialogue_id;
    rec["units"] = ojson::array();
    for (const auto& u : d.units) {
        ojson ju;
        ju["idx"] = u.index;
        ju["kind"] = to_string(u.kind);
        ju["speaker"] = u.speaker;
        ju["text"] = u.text;
        ju["turn"] = u.turn_id;
        rec["units"].push_back(std::move(ju));
    }
    rec["relations"] = ojson::array();
    for (const auto& r : d.relations) {
        ojson jr;
        jr["label"] = r.label;
        jr["src"] = endpoint_to_json(r.source);
        jr["tgt"] = endpoint_to_json(r.target);
        rec["relations"].push_back(std::move(jr));
    }
    rec["cdus"] = ojson::array();
    for (const auto& c : d.cdus) {
        ojson jc;
        jc["id"] = c.cdu_id;
        jc["members"] = ojson::array();
        for (const auto& m : c.members) jc["members"].push_back(endpoint_to_json(m));
        rec["cdus"].push_back(std::move(jc));
    }
    return rec;
}

inline RawDialogue dialogue_from_json(const nlohmann::json& rec) {
    RawDialogue d;
    d.dialogue_id = rec.at("id").get<std::string>();
    for (const auto& ju : rec.at("units")) {
        ElementaryUnit u;
        u.index = ju.at("idx").get<int>();
        u.kind = unit_kind_from_string(ju.at("kind").get<std::string>());
        u.speaker = ju.at("speaker").get<std::string>();
        u.text = ju.at("text").get<std::string>();
        u.turn_id = ju.at("turn").get<int>();
        d.units.push_back(std::move(u));
    }
    for (const auto& jr : rec.at("relations"))
        d.relations.push_back({jr.at("label").get<std::string>(),
                               endpoint_from_json(jr.at("src")),
                               endpoint_from_json(jr.at("tgt"))});
    for (const auto& jc : rec.at("cdus")) {
        Cdu c;
        c.cdu_id = jc.at("id").get<std::string>();
        for (const auto& m : jc.at("members")) c.members.push_back(endpoint_from_json(m));
        d.cdus.push_back(std::move(c));
    }
    return d;
}

}  // namespace detail

/// Canonical interchange format: line 1 is a header record with corpus name,
/// split, and taxonomy; each following line is one dialogue record.
inline void write_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    detail::ojson header;
    header["corpus"] = corpus.name;
    header["split"] = to_string(corpus.split);
    header["taxonomy"] = detail::ojson::array();
    for (const auto& code : corpus.taxonomy.codes()) {
        const auto& l = corpus.taxonomy.at(code);
        detail::ojson jl;
        jl["code"] = l.code;
        jl["name"] = l.long_name;
        jl["taxonomy_id"] = l.taxonomy_id;
        header["taxonomy"].push_back(std::move(jl));
    }
    out << header.dump() << "\n";
    for (const auto& d : corpus.dialogues) out << detail::dialogue_to_json(d).dump() << "\n";
    if (!out) throw InputError("I/O failure writing " + path);
}

inline Corpus load_canonical(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw InputError(origin + ": empty file, missing header");
    Corpus corpus;
    try {
        const auto header = nlohmann::json::parse(line);
        corpus.name = header.at("corpus").get<std::string>();
        corpus.split = split_from_string(header.at("split").get<std::string>());
        for (const auto& jl : header.at("taxonomy"))
            corpus.taxonomy.add({jl.at("code").get<std::string>(),
                                 jl.at("name").get<std::string>(),
                                 jl.at("taxonomy_id").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": bad header: " + e.what());
    }
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::string current_id = "?";
        try {
            const auto rec = nlohmann::json::parse(line);
            if (rec.contains("id")) current_id = rec["id"].get<std::string>();
            corpus.dialogues.push_back(detail::dialogue_from_json(rec));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(origin + " line " + std::to_string(lineno) + " (dialogue " +
                             current_id + "): " + e.what());
        }
    }
    check_corpus(corpus);
    return corpus;
}

namespace detail {

/// MSDC-style source: one JSON document listing dialogues with long relation
/// names. Foreign unit order is preserved; units are reindexed from 0.
inline Corpus load_msdc(std::istream& in, const std::string& origin, DiscardLog* discards) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": " + e.what());
    }
    Corpus corpus;
    corpus.name = doc.value("name", "msdc");
    corpus.split = split_from_string(doc.value("split", "train"));
    corpus.taxonomy = msdc_taxonomy();
    for (const auto& jd : doc.at("dialogues")) {
        RawDialogue d;
        d.dialogue_id = jd.at("id").get<std::string>();
        int idx = 0;
        for (const auto& ju : jd.at("units")) {
            ElementaryUnit u;
            u.index = idx++;
            u.kind = unit_kind_from_string(ju.at("type").get<std::string>());
            u.speaker = ju.at("speaker").get<std::string>();
            u.text = ju.at("text").get<std::string>();
            u.turn_id = ju.at("turn").get<int>();
            d.units.push_back(std::move(u));
        }
        for (const auto& jr : jd.value("relations", nlohmann::json::array())) {
            const auto type = jr.at("type").get<std::string>();
            auto code = corpus.taxonomy.contains(type)
                            ? std::optional<std::string>(type)
                            : corpus.taxonomy.code_for_long_name(type);
            if (!code) {
                if (discards)
                    discards->push_back({d.dialogue_id, "unknown_label", type});
                continue;
            }
            d.relations.push_back({*code, endpoint_from_json(jr.at("x")),
                                   endpoint_from_json(jr.at("y"))});
        }
        for (const auto& jc : jd.value("cdus", nlohmann::json::array())) {
            Cdu c;
            c.cdu_id = jc.at("id").get<std::string>();
            for (const auto& m : jc.at("members")) c.members.push_back(endpoint_from_json(m));
            d.cdus.push_back(std::move(c));
        }
        corpus.dialogues.push_back(std::move(d));
    }
    check_corpus(corpus);
    return corpus;
}

// -- minimal XML scanner for glozz-style exports ----------------------------

struct XmlTag {
    std::string name;
    std::map<std::string, std::string> attrs;
    bool closing = false;
    bool self_closing = false;
    size_t end = 0;  // offset one past '>'
};

inline std::string xml_unescape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
        if (s[i] == '&') {
            if (s.compare(i, 5, "&amp;") == 0) { out += '&'; i += 5; continue; }
            if (s.compare(i, 4, "&lt;") == 0) { out += '<'; i += 4; continue; }
            if (s.compare(i, 4, "&gt;") == 0) { out += '>'; i += 4; continue; }
            if (s.compare(i, 6, "&quot;") == 0) { out += '"'; i += 6; continue; }
            if (s.compare(i, 6, "&apos;") == 0) { out += '\''; i += 6; continue; }
        }
        out += s[i++];
    }
    return out;
}

inline XmlTag parse_tag(const std::string& text, size_t lt, const std::string& origin) {
    XmlTag tag;
    size_t gt = text.find('>', lt);
    if (gt == std::string::npos) throw InputError(origin + ": unterminated tag");
    tag.end = gt + 1;
    size_t i = lt + 1;
    if (i < gt && text[i] == '/') { tag.closing = true; ++i; }
    while (i < gt && !isspace(static_cast<unsigned char>(text[i])) && text[i] != '/')
        tag.name += text[i++];
    while (i < gt) {
        while (i < gt && isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= gt || text[i] == '/') break;
        std::string key;
        while (i < gt && text[i] != '=' && !isspace(static_cast<unsigned char>(text[i])))
            key += text[i++];
        while (i < gt && (text[i] == '=' || isspace(static_cast<unsigned char>(text[i])))) ++i;
        if (i >= gt || text[i] != '"')
            throw InputError(origin + ": attribute " + key + " missing quoted value");
        size_t close = text.find('"', i + 1);
        if (close == std::string::npos || close > gt)
            throw InputError(origin + ": unterminated attribute value");
        tag.attrs[key] = xml_unescape(text.substr(i + 1, close - i - 1));
        i = close + 1;
    }
    if (gt > lt && text[gt - 1] == '/') tag.self_closing = true;
    return tag;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

/// Glozz-style source: XML with <dialogue>, <unit>, <cdu>, <relation>
/// elements. Foreign unit ids are remapped to contiguous indices in
/// document order; unresolvable annotations are logged and dropped.
inline Corpus load_stac_glozz(std::istream& in, const std::string& origin, DiscardLog* discards) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Corpus corpus;
    corpus.name = "stac";
    corpus.split = Split::train;
    corpus.taxonomy = msdc_taxonomy();

    RawDialogue* current = nullptr;
    std::map<std::string, int> unit_ids;  // foreign id -> index, per dialogue
    std::set<std::string> cdu_ids;
    const auto resolve = [&](const std::string& id) -> std::optional<Endpoint> {
        if (auto it = unit_ids.find(id); it != unit_ids.end())
            return Endpoint::of_unit(it->second);
        if (cdu_ids.count(id)) return Endpoint::of_cdu(id);
        return std::nullopt;
    };

    size_t pos = 0;
    while ((pos = text.find('<', pos)) != std::string::npos) {
        if (text.compare(pos, 4, "<!--") == 0) {
            pos = text.find("-->", pos);
            if (pos == std::string::npos) break;
            pos += 3;
            continue;
        }
        if (text.compare(pos, 2, "<?") == 0) { pos = text.find('>', pos) + 1; continue; }
        XmlTag tag = parse_tag(text, pos, origin);
        pos = tag.end;
        if (tag.closing) continue;
        if (tag.name == "corpus") {
            if (tag.attrs.count("name")) corpus.name = tag.attrs["name"];
            if (tag.attrs.count("split")) corpus.split = split_from_string(tag.attrs["split"]);
        } else if (tag.name == "dialogue") {
            corpus.dialogues.emplace_back();
            current = &corpus.dialogues.back();
            current->dialogue_id = tag.attrs.count("id")
                                       ? tag.attrs["id"]
                                       : "d" + std::to_string(corpus.dialogues.size());
            unit_ids.clear();
            cdu_ids.clear();
        } else if (tag.name == "unit") {
            if (!current) throw InputError(origin + ": <unit> outside <dialogue>");
            size_t close = text.find("</unit>", pos);
            if (close == std::string::npos) throw InputError(origin + ": unterminated <unit>");
            ElementaryUnit u;
            u.index = static_cast<int>(current->units.size());
            u.kind = unit_kind_from_string(tag.attrs.count("type") ? tag.attrs["type"] : "EDU");
            u.speaker = tag.attrs["speaker"];
            u.text = xml_unescape(text.substr(pos, close - pos));
            u.turn_id = tag.attrs.count("turn") ? std::stoi(tag.attrs["turn"]) : u.index;
            unit_ids[tag.attrs.at("id")] = u.index;
            current->units.push_back(std::move(u));
            pos = close + 7;
        } else if (tag.name == "cdu") {
            if (!current) throw InputError(origin + ": <cdu> outside <dialogue>");
            cdu_ids.insert(tag.attrs.at("id"));
            current->cdus.push_back({tag.attrs.at("id"), {}});
            // members resolved below; store raw list in a sidecar pass
            Cdu& c = current->cdus.back();
            for (const auto& mid : split_ws(tag.attrs.at("members"))) {
                if (auto e = resolve(mid)) {
                    c.members.push_back(*e);
                } else {
                    // forward CDU reference: keep as cdu id, validated later
                    c.members.push_back(Endpoint::of_cdu(mid));
                    cdu_ids.insert(mid);
                }
            }
        } else if (tag.name == "relation") {
            if (!current) throw InputError(origin + ": <relation> outside <dialogue>");
            const auto type = tag.attrs.at("type");
            auto code = corpus.taxonomy.contains(type)
                            ? std::optional<std::string>(type)
                            : corpus.taxonomy.code_for_long_name(type);
            auto src = resolve(tag.attrs.at("source"));
            auto tgt = resolve(tag.attrs.at("target"));
            if (!code) {
                if (discards) discards->push_back({current->dialogue_id, "unknown_label", type});
            } else if (!src || !tgt) {
                if (discards)
                    discards->push_back({current->dialogue_id, "dangling_endpoint",
                                         tag.attrs.at("source") + "->" + tag.attrs.at("target")});
            } else {
                current->relations.push_back({*code, *src, *tgt});
            }
        }
    }
    check_corpus(corpus);
    return corpus;
}

}  // namespace detail

/// Loads a corpus in the named format. Adapters are best-effort: every
/// dropped annotation lands in `discards` with a reason code.
inline Corpus load_corpus(const std::string& path, CorpusFormat format,
                          DiscardLog* discards = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    switch (format) {
        case CorpusFormat::canonical:
        case CorpusFormat::molweni:  // Molweni-clean ships pre-converted
            return load_canonical(in, path);
        case CorpusFormat::msdc:
            return detail::load_msdc(in, path, discards);
        case CorpusFormat::stac_glozz:
            return detail::load_stac_glozz(in, path, discards);
    }
    throw ConfigError("unhandled corpus format");
}

}  // namespace dparse
