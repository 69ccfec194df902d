#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "roomloc/crf.hpp"
#include "roomloc/features.hpp"

namespace roomloc {

inline constexpr const char* kCheckpointFormat = "roomloc-model/1";

/// Everything needed to decode a new trace: the CRF, the feature scaler fitted
/// on the walkthrough, and the house it was trained for.
struct Checkpoint {
  crf::CrfModel model;
  features::Scaler scaler;
  features::WindowSpec window;
  std::size_t gateways = 0;
  std::vector<std::string> rooms;
  int bedroom = 0;
};

/// JSON text with the format tag, layer shapes, flat parameters and running
/// statistics. Doubles are written in shortest round-trip form, so a
/// save/load cycle is lossless.
std::string checkpoint_to_json(const Checkpoint& ckpt);
/// Throws ModelMismatch on an unknown format tag or inconsistent shapes.
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace roomloc
