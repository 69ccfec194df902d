#include "roomloc/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roomloc/errors.hpp"

namespace roomloc::features {

void WindowSpec::validate() const {
  if (!(overlap >= 0.0 && overlap < length))
    throw ValidationError("window spec: need 0 <= overlap < length");
}

std::size_t window_count(double duration, const WindowSpec& spec) {
  spec.validate();
  if (!(duration >= spec.length)) return 0;
  return static_cast<std::size_t>(std::floor((duration - spec.length) / spec.hop() + 1e-9)) + 1;
}

std::vector<double> window_starts(double duration, const WindowSpec& spec) {
  const std::size_t n = window_count(duration, spec);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = static_cast<double>(k) * spec.hop();
  return out;
}

namespace {

struct GatewayAccumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double max = -std::numeric_limits<double>::infinity();
  double min = std::numeric_limits<double>::infinity();
  double first = 0.0;
  double last = 0.0;
  std::vector<char> occupied;

  void add(double v) {
    if (n == 0) first = v;
    last = v;
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
    max = std::max(max, v);
    min = std::min(min, v);
  }
};

}  // namespace

FeatureVector extract_features(const Window<sim::RssiSample>& window, std::size_t gateways,
                               double rate_hz) {
  const auto first_slot = static_cast<long>(std::ceil(window.start * rate_hz - 1e-9));
  const auto end_slot = static_cast<long>(std::ceil((window.start + window.length) * rate_hz - 1e-9));
  const auto expected = static_cast<std::size_t>(std::max(0L, end_slot - first_slot));

  std::vector<GatewayAccumulator> acc(gateways);
  for (auto& a : acc) a.occupied.assign(expected, 0);
  for (const auto& s : window.samples) {
    if (s.gateway < 0 || static_cast<std::size_t>(s.gateway) >= gateways || !s.value) continue;
    auto& a = acc[static_cast<std::size_t>(s.gateway)];
    a.add(*s.value);
    const long offset = std::lround(s.t * rate_hz) - first_slot;
    if (offset >= 0 && static_cast<std::size_t>(offset) < expected) a.occupied[offset] = 1;
  }

  FeatureVector fv;
  fv.window_start = window.start;
  fv.values.resize(gateways * kFeaturesPerGateway);
  for (std::size_t g = 0; g < gateways; ++g) {
    const auto& a = acc[g];
    double* out = fv.values.data() + g * kFeaturesPerGateway;
    const auto present = static_cast<std::size_t>(std::count(a.occupied.begin(), a.occupied.end(), 1));
    out[kMissing] = static_cast<double>(expected - present);
    if (a.n == 0) {
      out[kMean] = out[kMax] = out[kMin] = kAllMissingSentinel;
      out[kStd] = 0.0;
      out[kDiff] = 0.0;
      continue;
    }
    out[kMean] = a.mean;
    out[kStd] = std::sqrt(std::max(0.0, a.m2 / static_cast<double>(a.n)));
    out[kMax] = a.max;
    out[kMin] = a.min;
    out[kDiff] = a.n > 1 ? (a.last - a.first) / static_cast<double>(a.n - 1) : 0.0;
  }
  return fv;
}

double activity_level(std::span<const sim::AccelSample> samples) {
  if (samples.size() < 2) return 0.0;
  double sx = 0.0, sy = 0.0, sz = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    sx += std::abs(samples[i].x - samples[i - 1].x);
    sy += std::abs(samples[i].y - samples[i - 1].y);
    sz += std::abs(samples[i].z - samples[i - 1].z);
  }
  const double n = static_cast<double>(samples.size() - 1);
  return (sx / n + sy / n + sz / n) / 3.0;
}

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw std::invalid_argument("Scaler::fit: empty training set");
  Scaler s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - s.mean;
  s.scale = (centred.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size())
    throw std::invalid_argument("Scaler::apply: column count does not match the fitted scaler");
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (scale(j) > 0.0) {
      out.col(j) = (x.col(j).array() - mean(j)) / scale(j);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

Standardized standardize(const Eigen::MatrixXd& train, const Eigen::MatrixXd& other) {
  Standardized s;
  s.scaler = Scaler::fit(train);
  s.train = s.scaler.apply(train);
  s.other = other.rows() == 0 ? Eigen::MatrixXd(0, train.cols()) : s.scaler.apply(other);
  return s;
}

FeatureTable featurize(const sim::GroundTruthTrace& trace, const WindowSpec& spec,
                       bool with_labels) {
  spec.validate();
  FeatureTable table;
  table.gateways = trace.gateways;
  table.window_start = window_starts(trace.duration, spec);
  const std::size_t n = table.window_start.size();
  const std::size_t d = trace.gateways * kFeaturesPerGateway;
  table.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  table.alpha.assign(n, 0.0);

  const auto rssi_windows =
      window_stream(std::span<const sim::RssiSample>(trace.rssi), trace.duration, spec);
  const auto accel_windows =
      window_stream(std::span<const sim::AccelSample>(trace.accel), trace.duration, spec);

  for (std::size_t k = 0; k < n; ++k) {
    Window<sim::RssiSample> w{table.window_start[k], spec.length, {}};
    if (k < rssi_windows.size()) w = rssi_windows[k];
    const FeatureVector fv = extract_features(w, trace.gateways);
    for (std::size_t j = 0; j < d; ++j) table.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = fv.values[j];
    if (k < accel_windows.size()) table.alpha[k] = activity_level(accel_windows[k].samples);
  }
  if (with_labels && !trace.labels.empty()) {
    table.labels.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      table.labels[k] = trace.majority_label(table.window_start[k], table.window_start[k] + spec.length);
    }
  }
  return table;
}

}  // namespace roomloc::features
