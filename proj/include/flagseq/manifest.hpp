// Run manifest: config snapshot, seed, timing, and a content-hashed list of
// every artifact a subcommand writes, so any figure input can be reproduced.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flagseq {

struct RunManifest {
    std::string command;
    std::string version;
    std::string config_snapshot;  // the parsed config, re-serialized
    std::uint64_t seed = 0;
    int threads = 1;
    std::string started_utc;
    double wall_ms = 0.0;

    struct Artifact {
        std::string path;
        std::uint64_t bytes = 0;
        std::string fnv1a64;
    };
    std::vector<Artifact> outputs;

    // Hashes the file's current content and appends it to the output list.
    void add_file(const std::string& path);

    std::string to_json() const;
};

std::string utc_now_string();
const char* version_string();

}  // namespace flagseq
