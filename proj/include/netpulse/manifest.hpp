#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netpulse {

inline constexpr const char* kVersion = "1.0.0";

std::string file_checksum_hex(const std::string& path); // fnv1a64 of the bytes

// One manifest per CLI run: enough to reproduce the run and to compare two
// runs by output checksums.
struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<std::pair<std::string, std::string>> inputs;      // role -> path
    std::vector<std::string> outputs;                             // paths on disk
    std::vector<std::pair<std::string, std::string>> diagnostics; // key -> value
    double wall_ms = 0.0;

    // checksums every output as it exists on disk at write time
    void write(const std::string& path) const;
};

} // namespace netpulse
