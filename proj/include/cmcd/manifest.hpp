#pragma once

// Run manifest: every CLI subcommand records what it produced and a content
// hash per artifact, so reruns can be checked for reproducibility and
// downstream steps can name exactly which input is missing.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmcd/util.hpp"

namespace cmcd {

struct ManifestEntry {
    std::string path;       // relative to the run directory
    std::size_t bytes = 0;
    std::string hash;       // fnv1a-64 of the content, hex
};

struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string started;
    std::string finished;
    bool complete = false;
    std::vector<ManifestEntry> entries;

    void add(const std::string& rel_path, std::string_view content) {
        entries.push_back({rel_path, content.size(), hash_hex(fnv1a64(content))});
    }

    std::string to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        j["config"] = config_path;
        j["seed"] = seed;
        j["out_dir"] = out_dir;
        j["started"] = started;
        j["finished"] = finished;
        j["complete"] = complete;
        j["artifacts"] = nlohmann::json::array();
        for (const auto& e : entries)
            j["artifacts"].push_back({{"path", e.path}, {"bytes", e.bytes}, {"hash", e.hash}});
        return j.dump(2) + "\n";
    }

    static RunManifest from_json(const std::string& text) {
        const auto j = nlohmann::json::parse(text);
        RunManifest m;
        m.subcommand = j.value("subcommand", "");
        m.config_path = j.value("config", "");
        m.seed = j.value("seed", std::uint64_t(0));
        m.out_dir = j.value("out_dir", "");
        m.started = j.value("started", "");
        m.finished = j.value("finished", "");
        m.complete = j.value("complete", false);
        if (j.contains("artifacts"))
            for (const auto& a : j["artifacts"])
                m.entries.push_back({a.value("path", ""), a.value("bytes", std::size_t(0)),
                                     a.value("hash", "")});
        return m;
    }
};

inline std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace cmcd
