#pragma once

#include <string>

#include "modflow/model.hpp"

namespace modflow {

// Binary checkpoint: magic "MDFL", little-endian u32 version, a
// length-prefixed UTF-8 metadata descriptor, little-endian f64 arrays
// (parameters and optimizer moments), and a trailing CRC-64. Round trips are
// bit-exact. config_echo is free-form provenance carried along verbatim.
void save_checkpoint(const ModFlowModel& model, const std::string& path,
                     const std::string& config_echo = "");

struct LoadedCheckpoint {
  ModFlowModel model;
  std::string config_echo;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace modflow
