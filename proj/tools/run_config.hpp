#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roomloc/behaviour.hpp"
#include "roomloc/pipeline.hpp"
#include "roomloc/sim.hpp"

namespace roomloc::cli {

/// Resolved settings for one command. JSON schema (all keys optional):
///
///   {"seed": 1, "layout": "house.json",
///    "sim":      {"days": 1, "hours": 24, "path_loss_exponent": 3, "ref_rssi_at_1m": -45,
///                 "noise_std": 4, "drop_base_prob": 0.05, "drop_distance_coeff": 0.03,
///                 "walkthrough_minutes": 40, "shift_offset": 5},
///    "window":   {"length": 5, "overlap": 2.5},
///    "kmm":      {"B": 1000, "epsilon": 0.03, "bandwidth": 8, "max_test_points": 2000},
///    "train":    {"epochs": 200, "batch_size": 64, "lr": 0.01, "ssl_weight": 1,
///                 "ssl_warmup_epochs": 20, "ssl_chunk_windows": 720, "ssl_chunks_per_epoch": 4,
///                 "early_stop_patience": 0, "holdout_fraction": 0,
///                 "gate_threshold": 0.01, "gate_quantile": 0.1, "transition_offdiag": -3,
///                 "use_kmm": true, "use_ssl": true, "use_gate": true,
///                 "use_complement": false, "wear_floor": 0.002, "max_pseudo_labels": 0},
///    "analysis": {"dayparts": [0, 6, 12, 18, 24], "night": [0, 6], "lag": 0,
///                 "lz_segments_per_day": 1}}
///
/// Relative paths in the file resolve against the file's directory.
struct RunConfig {
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> layout;
  int days = 1;
  std::optional<double> hours;
  sim::SimConfig sim;
  pipeline::PipelineConfig pipeline;
  behaviour::Dayparts dayparts;
  crf::NightSpan night;
  std::size_t lag = 0;
  int lz_segments_per_day = 1;

  /// Propagates the root seed into the simulator and the pipeline.
  void sync_seed();
  /// Throws ValidationError on out-of-range values or a missing layout file.
  void validate() const;
};

/// Applies the keys present in `text` on top of `cfg`. Throws ValidationError
/// on malformed JSON, unknown keys or wrongly typed values.
void apply_json(RunConfig& cfg, const std::string& text, const std::filesystem::path& base_dir);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Canonical JSON of the resolved settings, as recorded in manifests.
std::string to_json(const RunConfig& cfg);

}  // namespace roomloc::cli
