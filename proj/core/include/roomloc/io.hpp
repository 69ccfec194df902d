#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "roomloc/features.hpp"
#include "roomloc/layout.hpp"
#include "roomloc/sim.hpp"

namespace roomloc::io {

/// Layout file:
///   {"rooms": [{"name": "hall", "x": 5.0, "y": 4.5}, ...],
///    "gateways": [{"x": 1.0, "y": 8.0}, ...],
///    "adjacency": [["hall", "bedroom"], ...],
///    "bedroom": "bedroom", "room_radius": 1.2}
/// Throws ValidationError on a missing file or malformed content.
HouseLayout read_layout(const std::filesystem::path& path);
HouseLayout parse_layout(const std::string& json_text);
std::string layout_to_json(const HouseLayout& layout);

/// JSON-lines trace. The first line is a header record
///   {"kind":"meta","duration":..,"gateways":..,"persona":..}
/// followed by one record per sample:
///   {"t":..,"kind":"rssi","gateway":g,"value":v|null,"label":room}
///   {"t":..,"kind":"accel","x":..,"y":..,"z":..,"label":room}
/// Records are in time order; numbers use the shortest round-trip form.
void write_trace(const std::filesystem::path& path, const sim::GroundTruthTrace& trace);
std::string trace_to_jsonl(const sim::GroundTruthTrace& trace);
/// Throws ValidationError on a missing file or malformed record.
sim::GroundTruthTrace read_trace(const std::filesystem::path& path);

/// CSV: window_start, f0..f{d-1} (named g{gateway}_{stat}), alpha[, label].
void write_feature_csv(const std::filesystem::path& path, const features::FeatureTable& table);
features::FeatureTable read_feature_csv(const std::filesystem::path& path);

struct DecodeRow {
  double window_start = 0.0;
  int label = 0;
  double score = 0.0;  ///< posterior marginal of the decoded label
  double alpha = 0.0;
};

/// CSV: window_start,label,score,alpha
void write_decode_csv(const std::filesystem::path& path, const std::vector<DecodeRow>& rows);
std::vector<DecodeRow> read_decode_csv(const std::filesystem::path& path);

/// CSV: window_start,beta
void write_weights_csv(const std::filesystem::path& path, const std::vector<double>& window_start,
                       const std::vector<double>& beta);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
/// 16 hex digits of FNV-1a over the file bytes.
std::string file_digest(const std::filesystem::path& path);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

}  // namespace roomloc::io
