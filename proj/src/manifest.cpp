#include "flagseq/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flagseq/common.hpp"

namespace flagseq {

const char* version_string() { return "flagseq 1.0.0"; }

std::string utc_now_string() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::add_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw domain_error("manifest: cannot read artifact " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();
    Artifact a;
    a.path = path;
    a.bytes = data.size();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data.data(), data.size())));
    a.fnv1a64 = hex;
    outputs.push_back(std::move(a));
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["version"] = version;
    j["config"] = config_snapshot.empty() ? nlohmann::json() : nlohmann::json::parse(config_snapshot);
    j["seed"] = seed;
    j["threads"] = threads;
    j["started_utc"] = started_utc;
    j["wall_ms"] = wall_ms;
    auto& arr = j["outputs"] = nlohmann::json::array();
    for (const auto& a : outputs)
        arr.push_back({{"path", a.path}, {"bytes", a.bytes}, {"fnv1a64", a.fnv1a64}});
    return j.dump(2);
}

}  // namespace flagseq
