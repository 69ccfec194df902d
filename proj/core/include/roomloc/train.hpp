#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "roomloc/crf.hpp"

namespace roomloc::crf {

/// Builds an untrained model: He-initialised emission network and a sticky
/// transition matrix (0 on the diagonal, `offdiag` elsewhere).
CrfModel make_model(int input_dim, int classes, double gate_threshold, std::uint64_t seed,
                    double offdiag = -3.0, int hidden = 20, int hidden_layers = 3);

/// Linear-interpolated quantile, q in [0, 1]. Throws on empty input.
double quantile(std::vector<double> values, double q);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd grad_theta;
  Eigen::MatrixXd grad_transition;  ///< empty for losses that do not touch transitions
};

/// Importance-weighted softmax cross-entropy of the emission scores,
/// sum_i beta_i CE_i / sum_i beta_i, windows treated as independent. Runs the
/// network in TRAIN mode (batch statistics; running statistics updated).
/// Throws std::invalid_argument when x, y and beta lengths differ.
LossAndGradient loss_wsl(CrfModel& model, const Eigen::MatrixXd& x, std::span<const int> y,
                         std::span<const double> beta);

struct SslStep {
  LossAndGradient value;
  LabelSequence targets;
};

/// Hard-EM self-training term: decode y* with the current model (no gradient
/// through decoding), then return -log P(y* | X) with gradients into the
/// emission network and the transition matrix. The network runs in EVAL mode
/// for both the decode and the fit. Throws for T < 2.
SslStep loss_ssl(const CrfModel& model, const Eigen::MatrixXd& x, std::span<const double> alpha);

/// A resident trace without labels, already standardised.
struct UnlabeledSequence {
  Eigen::MatrixXd x;
  std::vector<double> alpha;
  /// Window start, seconds since 00:00 of the first day.
  std::vector<double> clock;
};

struct NightSpan {
  double start_hour = 0.0;
  double end_hour = 6.0;

  bool empty() const { return start_hour == end_hour; }
  /// Whether clock time t (seconds since midnight of day 0) falls in the span.
  /// Spans with start > end wrap past midnight.
  bool contains(double t) const;
};

struct ComplementConfig {
  int bedroom = 0;
  NightSpan night;
  /// Windows with activity at or below this (g) are treated as not worn.
  double wear_floor = 0.002;
  std::size_t max_labels = std::numeric_limits<std::size_t>::max();
  std::uint64_t seed = 11;
};

struct PseudoLabels {
  Eigen::MatrixXd x;
  LabelSequence labels{{}, LabelSource::kPseudo};
  /// (sequence index, window index) of each emitted row.
  std::vector<std::pair<std::size_t, std::size_t>> origin;

  std::size_t size() const { return labels.labels.size(); }
};

/// Labels night windows with enough wrist activity as the bedroom. When more
/// than max_labels qualify, a seeded uniform subsample (in original order)
/// is kept.
PseudoLabels complement_labels(std::span<const UnlabeledSequence> sequences, const ComplementConfig& config);

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-2;
  bool use_ssl = true;
  double ssl_weight = 1.0;
  /// Supervised-only epochs before self-training starts.
  int ssl_warmup_epochs = 20;
  std::size_t ssl_chunk_windows = 720;
  int ssl_chunks_per_epoch = 4;
  /// Stop after this many epochs without held-out improvement; 0 disables.
  int early_stop_patience = 0;
  /// Fraction of the supervised pool held out for early stopping.
  double holdout_fraction = 0.0;
  std::uint64_t seed = 1;
};

struct EpochLoss {
  int epoch = 0;
  double wsl = 0.0;
  double ssl = 0.0;  ///< mean per-window NLL over the epoch's SSL chunks
  double total = 0.0;
  double holdout = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  CrfModel model;
  std::vector<EpochLoss> trace;
};

/// Alternates Adam steps on the weighted supervised loss over shuffled
/// mini-batches with per-chunk hard-EM steps on the unlabeled sequences.
/// Deterministic for a fixed seed. Throws TrainingDiverged on a non-finite
/// loss and std::invalid_argument on inconsistent inputs.
TrainResult train(CrfModel model, const Eigen::MatrixXd& x, std::span<const int> y,
                  std::span<const double> beta, std::span<const UnlabeledSequence> unlabeled,
                  const TrainConfig& config);

}  // namespace roomloc::crf
