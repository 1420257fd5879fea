#pragma once

#include <string>

#include "atinuke/model.hpp"

namespace atinuke {

// On-disk layout (all integers little-endian):
//   magic "ATNK" | u32 version | u64 config_len | canonical config text |
//   u64 entry_count | entries sorted by name, each:
//     u32 name_len | name | u32 rank | u64 dims[rank] | u32 dtype | payload
// dtype: 1 = f32, 2 = f64. Canonical form makes repeated saves byte-identical.

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Sorted "key=value" lines, one per ModelConfig field. Round-trips exactly.
std::string config_to_text(const ModelConfig& cfg);
ModelConfig config_from_text(const std::string& text);

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& path, bool store_f32 = false);

struct CheckpointData {
    ModelConfig config;
    ModelParams params;
};

/// Validates magic, version, config, entry order, payload lengths, shape
/// consistency with the config, and finiteness. Each failure is a distinct
/// diagnostic.
CheckpointData load_checkpoint(const std::string& path);

}  // namespace atinuke
