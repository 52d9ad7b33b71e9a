#pragma once

#include <json.hpp>
#include <string>

#include "bridgelab/net.hpp"

namespace bridgelab {

// Versioned JSON checkpoint: architecture descriptor, flat parameter arrays,
// optimizer state, tags and the run seed, plus an arbitrary metadata object
// (typically the resolved run config). Doubles are written in shortest
// round-trip form, so save -> load -> save is byte-identical.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const DriftNet& net,
                     uint64_t seed, const nlohmann::json& meta = {});

struct LoadedCheckpoint {
  DriftNet net;
  uint64_t seed = 0;
  nlohmann::json meta;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace bridgelab
