#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dparse/errors.hpp"

namespace dparse {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit over the file bytes, hex-encoded. Enough to tie a run
/// manifest to its exact inputs; not a cryptographic commitment.
inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot hash missing file " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    std::ostringstream ss;
    ss << std::hex << h;
    return ss.str();
}

struct RunManifest {
    std::string command;
    std::map<std::string, std::string> input_hashes;  // path -> hash
    std::string config_hash;
    uint64_t seed = 0;

    /// Written next to an output file as `<output>.manifest.json`.
    void write(const std::string& output_path) const {
        nlohmann::ordered_json j;
        j["tool"] = "dparse";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["inputs"] = nlohmann::ordered_json::object();
        for (const auto& [path, hash] : input_hashes) j["inputs"][path] = hash;
        j["seed"] = seed;
        const auto now = std::chrono::system_clock::now();
        j["timestamp_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
        std::ofstream out(output_path + ".manifest.json", std::ios::binary);
        if (!out) throw InputError("cannot write manifest for " + output_path);
        out << j.dump(2) << "\n";
    }
};

}  // namespace dparse
