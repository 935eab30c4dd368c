#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/mat.hpp"

namespace ttapt {

// Shared on-disk container: magic, little-endian u32 header length, JSON
// header, then the raw little-endian f64 blocks in the order declared by
// header["blocks"]. Round-trips bit-exactly.

inline constexpr char kCheckpointMagic[8] = {'T', 'T', 'A', 'P', 'T', 'B', 'I', 'N'};
inline constexpr int kCheckpointSchemaVersion = 1;

void write_checkpoint(const std::string& path, nlohmann::json header,
                      const std::vector<std::pair<std::string, std::span<const double>>>& blocks);

struct LoadedCheckpoint {
    nlohmann::json header;
    std::map<std::string, Vec> blocks;

    const Vec& block(const std::string& name) const;
};

LoadedCheckpoint read_checkpoint(const std::string& path);

// FNV-1a over the whole file, as a 16-hex-digit string. Used to pin model
// artifacts in run headers and configs.
std::string file_hash_hex(const std::string& path);

} // namespace ttapt
