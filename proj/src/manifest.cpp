#include "netpulse/manifest.hpp"

#include <json.hpp>

#include "netpulse/csv.hpp"
#include "netpulse/rng.hpp"

namespace netpulse {

std::string file_checksum_hex(const std::string& path) {
    const std::string bytes = read_file(path);
    const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void RunManifest::write(const std::string& path) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = kVersion;
    if (!config_path.empty()) j["config"] = config_path;
    j["seed"] = seed;
    j["workers"] = workers;
    auto& in = j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [role, p] : inputs) in[role] = p;
    auto& out = j["outputs"] = nlohmann::ordered_json::object();
    for (const auto& p : outputs) {
        nlohmann::ordered_json entry;
        entry["checksum"] = file_checksum_hex(p);
        entry["bytes"] = read_file(p).size();
        out[p] = entry;
    }
    auto& diag = j["diagnostics"] = nlohmann::ordered_json::object();
    for (const auto& [key, value] : diagnostics) diag[key] = value;
    j["wall_ms"] = wall_ms;
    write_file(path, j.dump(2) + "\n");
}

} // namespace netpulse
