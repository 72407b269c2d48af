#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cmax/numcore/adam.hpp"
#include "cmax/pipeline/config.hpp"
#include "cmax/pipeline/model.hpp"

namespace cmax {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  ModelParams params;
  AdamState adam;  // adam.step is the training step counter
  std::string metrics_path;
};

// Layout:
//   "CMAX-CHECKPOINT\n"
//   "version = <n>\n" then "key = value" state lines, "[config]", the config
//   text block, "[end]\n"
//   then one record per array in fixed order:
//     u32 name length, name bytes, u64 rows, u64 cols, rows*cols float64
//   all integers and floats little-endian.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
// Throws DataError on a bad magic, version mismatch, truncation (naming the
// missing section) or shape inconsistency.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cmax
