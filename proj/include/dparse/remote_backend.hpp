#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dparse/backend.hpp"
#include "dparse/errors.hpp"

namespace dparse {

/// Chat-completion client over JSON/HTTP. Sends the de-facto shape
/// {model, messages, temperature, max_tokens, stop} and accepts either a
/// chat `choices[].message.content`, a completion `choices[].text`, or a
/// bare `text` field in the reply. Transient failures (transport errors,
/// 429, 5xx) are retried with bounded exponential backoff.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(BackendConfig config) : config_(std::move(config)) {
        if (config_.url.empty()) throw ConfigError("remote backend requires backend.url");
        const auto scheme_end = config_.url.find("://");
        std::string rest = scheme_end == std::string::npos
                               ? config_.url
                               : config_.url.substr(scheme_end + 3);
        const auto slash = rest.find('/');
        host_ = "http://" + (slash == std::string::npos ? rest : rest.substr(0, slash));
        path_ = slash == std::string::npos ? "/v1/chat/completions" : rest.substr(slash);
        if (!config_.auth_env.empty()) {
            if (const char* tok = std::getenv(config_.auth_env.c_str())) token_ = tok;
        }
    }

    std::string generate(const GenerationRequest& request, const StepRef&) override {
        nlohmann::json body;
        body["model"] = config_.model;
        body["messages"] = {{{"role", "user"}, {"content", request.prompt}}};
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_new_tokens;
        if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
        const std::string payload = body.dump();

        std::string last_error;
        for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
            if (attempt > 0) {
                auto delay = std::chrono::milliseconds(base_backoff_ms_ << (attempt - 1));
                std::this_thread::sleep_for(std::min(delay, std::chrono::milliseconds(8000)));
            }
            httplib::Client client(host_);
            client.set_connection_timeout(0, config_.timeout_ms * 1000);
            client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
            httplib::Headers headers;
            if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
            auto res = client.Post(path_, headers, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw BackendError("backend returned status " + std::to_string(res->status) +
                                   ": " + res->body);
            return extract_text(res->body);
        }
        throw BackendError("backend failed after " + std::to_string(config_.max_attempts) +
                           " attempts: " + last_error);
    }

    const char* name() const override { return "remote"; }

    // test hook
    void set_base_backoff_ms(int ms) { base_backoff_ms_ = ms; }

private:
    static std::string extract_text(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("unparseable backend response: ") + e.what());
        }
        if (j.contains("choices") && !j["choices"].empty()) {
            const auto& c = j["choices"][0];
            if (c.contains("message") && c["message"].contains("content"))
                return c["message"]["content"].get<std::string>();
            if (c.contains("text")) return c["text"].get<std::string>();
        }
        if (j.contains("text")) return j["text"].get<std::string>();
        throw BackendError("backend response carries no generated text");
    }

    BackendConfig config_;
    std::string host_;
    std::string path_;
    std::string token_;
    int base_backoff_ms_ = 250;
};

/// Builds a backend from config. The oracle kinds replay `gold`, which must
/// be the preprocessed corpus being parsed.
inline std::unique_ptr<Backend> make_backend(const BackendConfig& config, const Corpus& gold) {
    if (config.kind == "remote") return std::make_unique<RemoteBackend>(config);
    if (config.kind == "oracle") return std::make_unique<OracleBackend>(gold);
    if (config.kind == "noisy")
        return std::make_unique<NoisyOracleBackend>(gold, config.p_drop, config.p_relabel,
                                                    config.seed);
    throw ConfigError("unknown backend kind: " + config.kind);
}

}  // namespace dparse
