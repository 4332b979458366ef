#pragma once

#include <filesystem>
#include <vector>

#include "metagree/numcore.hpp"

namespace metagree {

// Flat binary checkpoint, little-endian throughout:
//   "MGRE" | u32 version | u32 layer count | u32 layer sizes...
//   | u64 parameter count | f64 parameters...
// Activations are not part of the binary; the JSON sidecar written next to a
// checkpoint carries the full experiment config.
struct Checkpoint {
  std::vector<std::size_t> layer_sizes;
  ParamVector params;
};

inline constexpr char kCheckpointMagic[4] = {'M', 'G', 'R', 'E'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::size_t>& layer_sizes,
                     const ParamVector& params);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metagree
