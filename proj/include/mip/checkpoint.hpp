#pragma once

#include <string>

#include "mip/param.hpp"

namespace mip {

// Self-describing binary container: magic, format version, a JSON config
// blob, then named little-endian float64 blobs with shape metadata.
inline constexpr char kCheckpointMagic[8] = {'M', 'I', 'P', 'C', 'K', 'P', 'T', '\0'};
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& params);

struct LoadedCheckpoint {
    std::string config_json;
    std::vector<std::string> names;
    std::vector<Matrix> values;
};

/// Throws version_mismatch / malformed_checkpoint on bad files.
LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace mip
