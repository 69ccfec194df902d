#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roomloc/checkpoint.hpp"
#include "roomloc/features.hpp"
#include "roomloc/kmm.hpp"
#include "roomloc/train.hpp"

namespace roomloc::pipeline {

/// Knobs for one end-to-end fit. Ablations: use_kmm (beta = 1 when false),
/// train.use_ssl, use_gate (gate threshold 0 when false). Night bedroom
/// pseudo-labels are opt-in: they are the only labelled rows from the shifted
/// domain and all carry one class, so the network can learn the shift itself
/// as a bedroom cue.
struct PipelineConfig {
  features::WindowSpec window;
  bool use_kmm = true;
  kmm::KmmConfig kmm;
  crf::TrainConfig train;
  bool use_gate = true;
  /// Replaces the quantile rule when set.
  std::optional<double> gate_threshold;
  double gate_quantile = 0.1;
  bool use_complement = false;
  crf::NightSpan night;
  double wear_floor = 0.002;
  /// 0 means "one class share of the walkthrough", N_walk / c.
  std::size_t max_pseudo_labels = 0;
  double transition_offdiag = -3.0;
  std::uint64_t seed = 1;

  /// Throws ValidationError on out-of-range values.
  void validate() const;
};

struct FitResult {
  Checkpoint checkpoint;
  /// One weight per walkthrough window.
  std::vector<double> beta;
  double kmm_bandwidth = 0.0;
  double kmm_tolerance = 0.0;
  std::size_t pseudo_labels = 0;
  /// Per-window argmax of the emission scores on the walkthrough.
  double walkthrough_accuracy = 0.0;
  std::vector<crf::EpochLoss> loss_trace;
};

/// Standardises on the walkthrough, estimates beta against the pooled
/// resident windows, adds night pseudo-labels and trains the CRF. The
/// walkthrough table must carry labels; resident labels are ignored.
FitResult fit(const features::FeatureTable& walkthrough, const std::vector<features::FeatureTable>& residents,
              const std::vector<std::string>& rooms, int bedroom, const PipelineConfig& config);

struct Decoded {
  std::vector<double> window_start;
  std::vector<int> labels;
  /// Posterior marginal of the decoded label per window.
  std::vector<double> score;
  std::vector<double> alpha;
};

/// Viterbi decode of one trace. Throws ModelMismatch when the table's
/// gateway count or feature width differs from the checkpoint.
Decoded decode(const Checkpoint& checkpoint, const features::FeatureTable& table);

/// Fraction of positions where the two label vectors agree.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);
/// Accuracy of always predicting the most frequent true label.
double majority_baseline(const std::vector<int>& truth, int classes);

}  // namespace roomloc::pipeline
