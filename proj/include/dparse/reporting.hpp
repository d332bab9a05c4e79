#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dparse/corpus.hpp"
#include "dparse/discourse_graph.hpp"
#include "dparse/errors.hpp"
#include "dparse/metrics.hpp"

namespace dparse {

// -- predictions file --------------------------------------------------------
// One line per dialogue: `<dialogue_id>\t<token> <token> ...` with tokens in
// canonical (source, target, label) order. Byte-deterministic.

inline void write_predictions(const GraphSet& graphs, std::ostream& out) {
    for (const auto& [id, g] : graphs) {
        out << id << '\t';
        bool first = true;
        for (const auto& r : g.relations()) {
            if (!first) out << ' ';
            out << relation_token(r);
            first = false;
        }
        out << '\n';
    }
}

inline void write_predictions(const GraphSet& graphs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    write_predictions(graphs, out);
    if (!out) throw InputError("I/O failure writing " + path);
}

/// Loads a predictions file. Unit counts come from the corpus the
/// predictions were made over.
inline GraphSet load_predictions(const std::string& path, const Corpus& corpus) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    GraphSet out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw InputError(path + " line " + std::to_string(lineno) + ": missing tab separator");
        const std::string id = line.substr(0, tab);
        const auto& dialogue = corpus.dialogue(id);
        DiscourseGraph g(id, static_cast<int>(dialogue.units.size()));
        std::istringstream tokens(line.substr(tab + 1));
        std::string token;
        while (tokens >> token) g.insert(relation_from_token(token));
        out.emplace(id, std::move(g));
    }
    return out;
}

/// Gold graphs of a preprocessed corpus, keyed by dialogue id.
inline GraphSet gold_graphs(const Corpus& corpus) {
    GraphSet out;
    for (const auto& d : corpus.dialogues) out.emplace(d.dialogue_id, gold_graph(d));
    return out;
}

// -- aligned text tables -----------------------------------------------------

namespace detail {

inline std::string fixed4(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(4) << v;
    return ss.str();
}

inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<size_t> widths;
    for (const auto& row : rows)
        for (size_t c = 0; c < row.size(); ++c) {
            if (c >= widths.size()) widths.push_back(0);
            widths[c] = std::max(widths[c], row[c].size());
        }
    std::string out;
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out += std::string(widths[c] - row[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

}  // namespace detail

/// Reference values published for this task family, used only for
/// side-by-side display in reports, never for pass/fail logic.
struct ReferenceData {
    nlohmann::json root;

    static ReferenceData load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot read reference data " + path);
        ReferenceData out;
        in >> out.root;
        return out;
    }
};

inline std::string render_stats_table(const CorpusStats& stats,
                                      const nlohmann::json* reference = nullptr) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"DU-type", "count"});
    if (reference) rows[0].push_back("reference");
    const auto row = [&](const std::string& name, long value, const char* key) {
        std::vector<std::string> r{name, std::to_string(value)};
        if (reference) r.push_back(std::to_string(reference->value(key, 0L)));
        rows.push_back(std::move(r));
    };
    row("EDU", stats.edu_count, "edu");
    row("EEU", stats.eeu_count, "eeu");
    row("MPDU", stats.mpdu_count, "mpdu");
    row("MPDU=3", stats.mpdu3_count, "mpdu3");
    row("MPDU>3", stats.mpdu_gt3_count, "mpdu_gt3");
    return detail::render_table(rows);
}

inline std::string render_eval_report(const EvalReport& report,
                                      const nlohmann::json* reference = nullptr) {
    std::string out = "pooling: " + report.pooling;
    if (report.cutoff) out += ", distance cutoff " + std::to_string(*report.cutoff);
    out += "\n\n";

    std::vector<std::vector<std::string>> summary;
    summary.push_back({"task", "precision", "recall", "F1"});
    if (reference) summary[0].push_back("reference F1");
    std::vector<std::string> link{"Link", detail::fixed4(report.link.precision),
                                  detail::fixed4(report.link.recall),
                                  detail::fixed4(report.link.f1)};
    std::vector<std::string> rel{"Link+Rel", detail::fixed4(report.link_rel.precision),
                                 detail::fixed4(report.link_rel.recall),
                                 detail::fixed4(report.link_rel.f1)};
    if (reference) {
        link.push_back(detail::fixed4((*reference)["link"].get<double>()));
        rel.push_back(detail::fixed4((*reference)["link_rel"].get<double>()));
    }
    summary.push_back(std::move(link));
    summary.push_back(std::move(rel));
    out += detail::render_table(summary);

    // per-type block, descending gold support (the published layout)
    std::vector<std::pair<std::string, PerTypeCell>> types(report.link_rel.per_type.begin(),
                                                           report.link_rel.per_type.end());
    std::sort(types.begin(), types.end(), [](const auto& a, const auto& b) {
        return std::tie(b.second.gold_support, a.first) < std::tie(a.second.gold_support, b.first);
    });
    if (!types.empty()) {
        out += "\n";
        std::vector<std::vector<std::string>> table;
        table.push_back({"type", "gold", "tp", "fp", "fn", "F1"});
        if (reference && reference->contains("per_type")) table[0].push_back("reference F1");
        for (const auto& [label, cell] : types) {
            std::vector<std::string> r{label,
                                       std::to_string(cell.gold_support),
                                       std::to_string(cell.tp),
                                       std::to_string(cell.fp),
                                       std::to_string(cell.fn),
                                       detail::fixed4(cell.f1)};
            if (reference && reference->contains("per_type")) {
                const auto& pt = (*reference)["per_type"];
                r.push_back(pt.contains(label) ? detail::fixed4(pt[label].get<double>()) : "-");
            }
            table.push_back(std::move(r));
        }
        out += detail::render_table(table);
    }

    if (!report.breakdown_label.empty()) {
        out += "\n" + report.breakdown_label + " F1 by distance\n";
        std::vector<std::vector<std::string>> table(2);
        table[0].push_back("distance");
        table[1].push_back("F1");
        for (const auto& [d, f1] : report.per_distance) {
            table[0].push_back(std::to_string(d));
            table[1].push_back(f1 ? detail::fixed4(*f1) : "n/a");
        }
        out += detail::render_table(table);
    }
    return out;
}

}  // namespace dparse
