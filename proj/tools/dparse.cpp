// dparse — incremental discourse-parsing harness for SDRT-annotated
// multiparty dialogue. Subcommands: preprocess, stats, parse, eval, ablate,
// report. See README.md.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dparse/ablation.hpp"
#include "dparse/backend.hpp"
#include "dparse/corpus_io.hpp"
#include "dparse/engine.hpp"
#include "dparse/errors.hpp"
#include "dparse/manifest.hpp"
#include "dparse/metrics.hpp"
#include "dparse/preprocess.hpp"
#include "dparse/remote_backend.hpp"
#include "dparse/reporting.hpp"

namespace {

using nlohmann::json;

struct ToolConfig {
    dparse::BackendConfig backend;
    dparse::EngineConfig engine;
    std::string config_hash = "none";
};

ToolConfig load_config(const std::string& path) {
    ToolConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw dparse::ConfigError("cannot read config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw dparse::ConfigError("bad config " + path + ": " + e.what());
    }
    if (j.contains("backend")) {
        const auto& b = j["backend"];
        cfg.backend.kind = b.value("kind", cfg.backend.kind);
        cfg.backend.url = b.value("url", cfg.backend.url);
        cfg.backend.model = b.value("model", cfg.backend.model);
        cfg.backend.auth_env = b.value("auth_env", cfg.backend.auth_env);
        cfg.backend.timeout_ms = b.value("timeout_ms", cfg.backend.timeout_ms);
        cfg.backend.max_attempts = b.value("max_attempts", cfg.backend.max_attempts);
        cfg.backend.concurrency = b.value("concurrency", cfg.backend.concurrency);
        cfg.backend.p_drop = b.value("p_drop", cfg.backend.p_drop);
        cfg.backend.p_relabel = b.value("p_relabel", cfg.backend.p_relabel);
        cfg.backend.seed = b.value("seed", cfg.backend.seed);
    }
    if (j.contains("engine")) {
        const auto& e = j["engine"];
        cfg.engine.window_size = e.value("window", cfg.engine.window_size);
        if (e.contains("mode"))
            cfg.engine.mode = dparse::context_mode_from_string(e["mode"].get<std::string>());
        cfg.engine.max_new_tokens = e.value("max_new_tokens", cfg.engine.max_new_tokens);
        cfg.engine.temperature = e.value("temperature", cfg.engine.temperature);
        if (e.contains("stop"))
            cfg.engine.stop_sequences = e["stop"].get<std::vector<std::string>>();
        cfg.engine.prompt_preamble = e.value("preamble", cfg.engine.prompt_preamble);
    }
    cfg.config_hash = dparse::file_hash(path);
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dparse::InputError("cannot write " + path);
    out << text;
}

std::string resolve_label(const dparse::Taxonomy& tax, std::string name) {
    std::string upper = name;
    for (auto& c : upper) c = static_cast<char>(toupper(static_cast<unsigned char>(c)));
    if (tax.contains(upper)) return upper;
    for (const auto& code : tax.codes()) {
        std::string ln = tax.at(code).long_name;
        for (auto& c : ln) c = static_cast<char>(toupper(static_cast<unsigned char>(c)));
        if (ln == upper) return code;
    }
    throw dparse::ConfigError("unknown relation type: " + name);
}

std::vector<dparse::Sample> load_samples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dparse::InputError("cannot read " + path);
    std::vector<dparse::Sample> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(dparse::sample_from_json(json::parse(line)));
    }
    return out;
}

void write_samples(const std::vector<dparse::Sample>& samples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw dparse::InputError("cannot write " + path);
    for (const auto& s : samples) out << dparse::sample_to_json(s).dump() << "\n";
}

std::vector<dparse::StepLog> load_step_logs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw dparse::InputError("cannot read " + path);
    std::vector<dparse::StepLog> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(dparse::step_log_from_json(json::parse(line)));
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"incremental SDRT discourse-parsing harness"};
    app.require_subcommand(1);

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "flatten CDUs, compress EEU runs, prune EEUs");
    std::string pre_profile = "msdc", pre_in, pre_out, pre_remap, pre_format = "canonical";
    std::string pre_discards;
    pre->add_option("--profile", pre_profile, "msdc|stac_sit|stac_l|molweni");
    pre->add_option("--in", pre_in)->required();
    pre->add_option("--format", pre_format, "canonical|stac_glozz|msdc|molweni");
    pre->add_option("--out", pre_out)->required();
    pre->add_option("--remap", pre_remap, "old->new index map per dialogue");
    pre->add_option("--discards", pre_discards, "dropped-annotation log");

    // stats
    auto* stats = app.add_subcommand("stats", "Table-style EDU/EEU/MPDU counts");
    std::string stats_in, stats_ref, stats_refdata = "data/reference_scores.json";
    stats->add_option("--in", stats_in)->required();
    stats->add_option("--reference", stats_ref, "corpus:split, e.g. msdc:train");
    stats->add_option("--reference-data", stats_refdata);

    // parse
    auto* parse = app.add_subcommand("parse", "incremental parsing over a corpus");
    std::string parse_mode, parse_backend, parse_config, parse_in, parse_out, parse_log;
    std::string parse_samples;
    int parse_window = 0, parse_parallelism = 1;
    parse->add_option("--mode", parse_mode, "gold|predicted");
    parse->add_option("--window", parse_window, "window size k");
    parse->add_option("--backend", parse_backend, "remote|oracle|noisy");
    parse->add_option("--config", parse_config, "config file (flags override)");
    parse->add_option("--in", parse_in)->required();
    parse->add_option("--out", parse_out)->required();
    parse->add_option("--log", parse_log, "step log (JSONL)");
    parse->add_option("--samples-out", parse_samples, "emitted samples (JSONL)");
    parse->add_option("--parallelism", parse_parallelism);

    // eval
    auto* eval = app.add_subcommand("eval", "score predictions against gold");
    std::string eval_gold, eval_pred, eval_out, eval_breakdown;
    std::optional<int> eval_cutoff;
    eval->add_option("--gold", eval_gold, "gold corpus (canonical)")->required();
    eval->add_option("--pred", eval_pred, "predictions file")->required();
    eval->add_option("--cutoff", eval_cutoff, "distance cutoff");
    eval->add_option("--breakdown", eval_breakdown, "type:maxdist, e.g. narration:15");
    eval->add_option("--out", eval_out, "report JSON");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "context perturbations and the narration pass");
    std::string ab_kind, ab_samples, ab_pred, ab_gold, ab_in, ab_out;
    uint64_t ab_seed = 0;
    ablate->add_option("--kind", ab_kind, "rand|null|qap|corr-triangle|narr-pass2")->required();
    ablate->add_option("--seed", ab_seed);
    ablate->add_option("--samples", ab_samples, "samples JSONL (rand/null/qap/corr-triangle)");
    ablate->add_option("--pred", ab_pred, "step log (qap/corr-triangle) or predictions (narr-pass2)");
    ablate->add_option("--gold", ab_gold, "gold corpus (qap/corr-triangle)");
    ablate->add_option("--in", ab_in, "corpus (narr-pass2)");
    ablate->add_option("--out", ab_out)->required();

    // report
    auto* report = app.add_subcommand("report", "render an eval report as aligned tables");
    std::string rep_eval, rep_ref, rep_refdata = "data/reference_scores.json", rep_out;
    report->add_option("--eval", rep_eval)->required();
    report->add_option("--reference", rep_ref, "corpus[:model], e.g. msdc or msdc:bertline");
    report->add_option("--reference-data", rep_refdata);
    report->add_option("--out", rep_out, "write instead of printing");

    CLI11_PARSE(app, argc, argv);

    if (pre->parsed()) {
        dparse::DiscardLog discards;
        auto corpus =
            dparse::load_corpus(pre_in, dparse::corpus_format_from_string(pre_format), &discards);
        auto result = dparse::preprocess_pipeline(
            corpus, dparse::preprocess_profile_from_string(pre_profile));
        dparse::write_corpus(result.corpus, pre_out);
        if (!pre_remap.empty()) {
            std::ofstream out(pre_remap, std::ios::binary);
            for (const auto& [id, remap] : result.remaps) {
                nlohmann::ordered_json j;
                j["id"] = id;
                j["map"] = remap.to_new;
                out << j.dump() << "\n";
            }
        }
        if (!pre_discards.empty()) {
            std::ofstream out(pre_discards, std::ios::binary);
            for (const auto& d : discards)
                out << d.dialogue_id << "\t" << d.reason << "\t" << d.detail << "\n";
            for (const auto& d : result.log)
                out << d.dialogue_id << "\t" << d.reason << "\t" << d.detail << "\n";
        }
        dparse::RunManifest manifest;
        manifest.command = "preprocess";
        manifest.input_hashes[pre_in] = dparse::file_hash(pre_in);
        manifest.write(pre_out);
        return 0;
    }

    if (stats->parsed()) {
        auto corpus = dparse::load_corpus(stats_in, dparse::CorpusFormat::canonical);
        auto s = dparse::corpus_stats(corpus);
        json ref;
        const json* refp = nullptr;
        if (!stats_ref.empty()) {
            const auto colon = stats_ref.find(':');
            if (colon == std::string::npos)
                throw dparse::ConfigError("--reference expects corpus:split");
            auto data = dparse::ReferenceData::load(stats_refdata);
            ref = data.root.at("stats").at(stats_ref.substr(0, colon)).at(stats_ref.substr(colon + 1));
            refp = &ref;
        }
        std::cout << dparse::render_stats_table(s, refp);
        return 0;
    }

    if (parse->parsed()) {
        ToolConfig cfg = load_config(parse_config);
        if (!parse_mode.empty()) cfg.engine.mode = dparse::context_mode_from_string(parse_mode);
        if (parse_window > 0) cfg.engine.window_size = parse_window;
        if (!parse_backend.empty()) cfg.backend.kind = parse_backend;

        auto corpus = dparse::load_corpus(parse_in, dparse::CorpusFormat::canonical);
        auto backend = dparse::make_backend(cfg.backend, corpus);
        auto results = dparse::run_corpus(corpus, *backend, cfg.engine,
                                          std::max(parse_parallelism, cfg.backend.concurrency));

        dparse::GraphSet graphs;
        bool any_failed = false;
        for (const auto& [id, r] : results) {
            graphs.emplace(id, r.graph);
            any_failed = any_failed || r.failed();
        }
        dparse::write_predictions(graphs, parse_out);
        if (!parse_log.empty()) {
            std::ofstream out(parse_log, std::ios::binary);
            for (const auto& [id, r] : results)
                out << dparse::step_log_to_json(r.log).dump() << "\n";
        }
        if (!parse_samples.empty()) {
            std::vector<dparse::Sample> samples;
            for (const auto& [id, r] : results)
                for (const auto& step : r.log.steps) samples.push_back(step.sample);
            write_samples(samples, parse_samples);
        }
        dparse::RunManifest manifest;
        manifest.command = "parse";
        manifest.config_hash = cfg.config_hash;
        manifest.seed = cfg.backend.seed;
        manifest.input_hashes[parse_in] = dparse::file_hash(parse_in);
        manifest.write(parse_out);
        if (any_failed) {
            for (const auto& [id, r] : results)
                if (r.failed()) std::cerr << "error: dialogue " << id << ": " << r.log.error << "\n";
            return 4;
        }
        return 0;
    }

    if (eval->parsed()) {
        auto corpus = dparse::load_corpus(eval_gold, dparse::CorpusFormat::canonical);
        auto gold = dparse::gold_graphs(corpus);
        auto pred = dparse::load_predictions(eval_pred, corpus);
        std::string label;
        int maxdist = 15;
        if (!eval_breakdown.empty()) {
            const auto colon = eval_breakdown.find(':');
            label = resolve_label(corpus.taxonomy,
                                  colon == std::string::npos ? eval_breakdown
                                                             : eval_breakdown.substr(0, colon));
            if (colon != std::string::npos) maxdist = std::stoi(eval_breakdown.substr(colon + 1));
        }
        auto rep = dparse::evaluate(gold, pred, eval_cutoff, label, maxdist, corpus.taxonomy);
        const std::string text = dparse::eval_report_to_json(rep).dump(2) + "\n";
        if (eval_out.empty()) {
            std::cout << text;
        } else {
            write_text(eval_out, text);
            dparse::RunManifest manifest;
            manifest.command = "eval";
            manifest.input_hashes[eval_gold] = dparse::file_hash(eval_gold);
            manifest.input_hashes[eval_pred] = dparse::file_hash(eval_pred);
            manifest.write(eval_out);
        }
        return 0;
    }

    if (ablate->parsed()) {
        if (ab_kind == "rand" || ab_kind == "null") {
            auto samples = load_samples(ab_samples);
            for (auto& s : samples)
                s = ab_kind == "rand" ? dparse::perturb_random(s, ab_seed)
                                      : dparse::strip_structure(s);
            write_samples(samples, ab_out);
        } else if (ab_kind == "qap" || ab_kind == "corr-triangle") {
            auto samples = load_samples(ab_samples);
            auto logs = load_step_logs(ab_pred);
            std::vector<dparse::StepPrediction> predictions;
            for (const auto& log : logs) {
                auto p = dparse::predictions_from_log(log);
                predictions.insert(predictions.end(), p.begin(), p.end());
            }
            auto corpus = dparse::load_corpus(ab_gold, dparse::CorpusFormat::canonical);
            auto gold = dparse::gold_graphs(corpus);
            auto edited = ab_kind == "qap"
                              ? dparse::ablate_qap(samples, predictions, gold)
                              : dparse::ablate_correction_triangle(samples, predictions, gold);
            write_samples(edited, ab_out);
        } else if (ab_kind == "narr-pass2") {
            auto corpus = dparse::load_corpus(ab_in, dparse::CorpusFormat::canonical);
            auto pred = dparse::load_predictions(ab_pred, corpus);
            dparse::GraphSet out;
            for (const auto& [id, g] : pred)
                out.emplace(id, dparse::second_pass_narration(g, corpus.dialogue(id)));
            dparse::write_predictions(out, ab_out);
        } else {
            throw dparse::ConfigError("unknown ablation kind: " + ab_kind);
        }
        dparse::RunManifest manifest;
        manifest.command = "ablate " + ab_kind;
        manifest.seed = ab_seed;
        if (!ab_samples.empty()) manifest.input_hashes[ab_samples] = dparse::file_hash(ab_samples);
        if (!ab_pred.empty()) manifest.input_hashes[ab_pred] = dparse::file_hash(ab_pred);
        manifest.write(ab_out);
        return 0;
    }

    if (report->parsed()) {
        std::ifstream in(rep_eval);
        if (!in) throw dparse::InputError("cannot read " + rep_eval);
        json j;
        in >> j;
        auto rep = dparse::eval_report_from_json(j);
        json ref;
        const json* refp = nullptr;
        if (!rep_ref.empty()) {
            auto data = dparse::ReferenceData::load(rep_refdata);
            const auto colon = rep_ref.find(':');
            const std::string corpus = colon == std::string::npos ? rep_ref : rep_ref.substr(0, colon);
            const std::string model =
                colon == std::string::npos ? "llamipa3+p" : rep_ref.substr(colon + 1);
            ref = data.root.at("scores").at(corpus).at(model);
            refp = &ref;
        }
        const std::string text = dparse::render_eval_report(rep, refp);
        if (rep_out.empty())
            std::cout << text;
        else
            write_text(rep_out, text);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const dparse::ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const dparse::BackendError& e) {
        std::cerr << "error: backend: " << e.what() << "\n";
        return 4;
    } catch (const dparse::InputError& e) {
        std::cerr << "error: input: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
