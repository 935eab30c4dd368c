#include "core/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>

#include "core/errors.hpp"

namespace ttapt {

using nlohmann::json;

void write_checkpoint(const std::string& path, json header,
                      const std::vector<std::pair<std::string, std::span<const double>>>& blocks) {
    json block_table = json::array();
    for (const auto& [name, data] : blocks)
        block_table.push_back({{"name", name}, {"count", data.size()}});
    header["schema_version"] = kCheckpointSchemaVersion;
    header["blocks"] = block_table;

    const std::string hdr = header.dump();
    if (hdr.size() > 0xffffffffull) raise(ErrorCode::Internal, "checkpoint header too large");

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) raise(ErrorCode::Config, "cannot open for writing: " + path);
    bool ok = std::fwrite(kCheckpointMagic, 1, 8, f) == 8;
    const uint32_t len = static_cast<uint32_t>(hdr.size());
    ok = ok && std::fwrite(&len, sizeof(len), 1, f) == 1;
    ok = ok && std::fwrite(hdr.data(), 1, hdr.size(), f) == hdr.size();
    for (const auto& [name, data] : blocks)
        ok = ok && std::fwrite(data.data(), sizeof(double), data.size(), f) == data.size();
    std::fclose(f);
    if (!ok) raise(ErrorCode::Internal, "short write: " + path);
}

const Vec& LoadedCheckpoint::block(const std::string& name) const {
    auto it = blocks.find(name);
    if (it == blocks.end()) raise(ErrorCode::Schema, "checkpoint is missing block '" + name + "'");
    return it->second;
}

LoadedCheckpoint read_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) raise(ErrorCode::Config, "cannot open: " + path);

    char magic[8];
    uint32_t len = 0;
    if (std::fread(magic, 1, 8, f) != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        std::fclose(f);
        raise(ErrorCode::Schema, "not a checkpoint file: " + path);
    }
    if (std::fread(&len, sizeof(len), 1, f) != 1) {
        std::fclose(f);
        raise(ErrorCode::Schema, "truncated checkpoint header: " + path);
    }
    std::string hdr(len, '\0');
    if (std::fread(hdr.data(), 1, len, f) != len) {
        std::fclose(f);
        raise(ErrorCode::Schema, "truncated checkpoint header: " + path);
    }

    LoadedCheckpoint out;
    out.header = json::parse(hdr, nullptr, false);
    if (out.header.is_discarded()) {
        std::fclose(f);
        raise(ErrorCode::Schema, "corrupt checkpoint header: " + path);
    }
    if (out.header.value("schema_version", -1) != kCheckpointSchemaVersion) {
        std::fclose(f);
        raise(ErrorCode::Schema, "unsupported checkpoint schema_version in " + path);
    }
    for (const auto& b : out.header.at("blocks")) {
        const std::string name = b.at("name");
        Vec data(b.at("count").get<size_t>());
        if (std::fread(data.data(), sizeof(double), data.size(), f) != data.size()) {
            std::fclose(f);
            raise(ErrorCode::Schema, "truncated block '" + name + "' in " + path);
        }
        out.blocks.emplace(name, std::move(data));
    }
    std::fclose(f);
    return out;
}

std::string file_hash_hex(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) raise(ErrorCode::Config, "cannot open: " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    unsigned char buf[65536];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) {
        for (size_t i = 0; i < n; ++i) {
            h ^= buf[i];
            h *= 0x100000001b3ull;
        }
    }
    std::fclose(f);
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

} // namespace ttapt
