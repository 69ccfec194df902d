#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "roomloc/sim.hpp"

namespace roomloc::features {

struct WindowSpec {
  double length = 5.0;
  double overlap = 2.5;

  double hop() const { return length - overlap; }
  /// Throws ValidationError unless 0 <= overlap < length.
  void validate() const;
};

/// Number of complete windows over [0, duration).
std::size_t window_count(double duration, const WindowSpec& spec);
std::vector<double> window_starts(double duration, const WindowSpec& spec);

template <typename Sample>
struct Window {
  double start = 0.0;
  double length = 0.0;
  std::span<const Sample> samples;
};

/// Tolerance used when comparing sample times against window edges.
inline constexpr double kEdgeTolerance = 1e-9;

/// Splits a time-sorted stream into windows [k*hop, k*hop + length) over
/// [0, duration). Windows that would run past `duration` are dropped. The
/// windows are views into `samples`.
template <typename Sample>
std::vector<Window<Sample>> window_stream(std::span<const Sample> samples, double duration,
                                          const WindowSpec& spec) {
  std::vector<Window<Sample>> out;
  if (samples.empty()) return out;
  const auto starts = window_starts(duration, spec);
  out.reserve(starts.size());
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (double start : starts) {
    const double end = start + spec.length;
    while (lo < samples.size() && samples[lo].t < start - kEdgeTolerance) ++lo;
    if (hi < lo) hi = lo;
    while (hi < samples.size() && samples[hi].t < end - kEdgeTolerance) ++hi;
    out.push_back({start, spec.length, samples.subspan(lo, hi - lo)});
  }
  return out;
}

/// Per-gateway statistics; layout of FeatureVector::values.
enum FeatureSlot : std::size_t { kMean = 0, kStd, kMax, kMin, kDiff, kMissing, kFeaturesPerGateway };

struct FeatureVector {
  double window_start = 0.0;
  /// 6 values per gateway: mean, std, max, min, diff, missing_count.
  std::vector<double> values;
};

/// Value used for mean/max/min of a gateway with no packets in the window.
inline constexpr double kAllMissingSentinel = -120.0;

/// Summary statistics over the non-missing RSSI values of each gateway.
///
/// std is the population standard deviation. diff is the mean of first
/// differences of present values in the order given, which telescopes to
/// (last - first) / (n - 1). missing_count is the number of slots of the
/// nominal `rate_hz` grid inside the window that hold no present value.
FeatureVector extract_features(const Window<sim::RssiSample>& window, std::size_t gateways,
                               double rate_hz = sim::kRssiRateHz);

/// Mean absolute first difference, averaged over the three axes. Windows with
/// fewer than two samples give 0.
double activity_level(std::span<const sim::AccelSample> samples);

/// Z-scoring with statistics from a reference set.
struct Scaler {
  Eigen::RowVectorXd mean;
  /// Population std per column; zero for constant columns.
  Eigen::RowVectorXd scale;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  static Scaler fit(const Eigen::MatrixXd& x);
};

struct Standardized {
  Eigen::MatrixXd train;
  Eigen::MatrixXd other;
  Scaler scaler;
};

/// Fits on `train` only, then applies to both. Zero-variance columns map to 0.
Standardized standardize(const Eigen::MatrixXd& train, const Eigen::MatrixXd& other);

/// Feature matrix for a whole trace; rows align with window_start and alpha.
struct FeatureTable {
  std::size_t gateways = 0;
  std::vector<double> window_start;
  Eigen::MatrixXd x;
  std::vector<double> alpha;
  /// Majority room per window; empty when ground truth is unavailable.
  std::vector<int> labels;

  std::size_t rows() const { return window_start.size(); }
};

FeatureTable featurize(const sim::GroundTruthTrace& trace, const WindowSpec& spec = {},
                       bool with_labels = true);

}  // namespace roomloc::features
