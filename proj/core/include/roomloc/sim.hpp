#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roomloc/layout.hpp"
#include "roomloc/rng.hpp"

namespace roomloc::sim {

inline constexpr double kRssiRateHz = 5.0;
inline constexpr double kAccelRateHz = 20.0;
/// Open interval bounds for RSSI in dBm.
inline constexpr double kRssiFloor = -120.0;
inline constexpr double kRssiCeiling = 0.0;
/// Clamped values stay this far inside the open interval.
inline constexpr double kRssiClampMargin = 0.5;
inline constexpr double kSecondsPerDay = 86400.0;
/// Emitted values are rounded to 1/steps, like a real receiver's fixed-point
/// readout; dividing by an integer keeps the shortest decimal form short.
inline constexpr double kRssiSteps = 100.0;
inline constexpr double kAccelSteps = 1e5;

enum class Persona { kTechnicianWalkthrough, kResidentA, kResidentB };

std::string_view persona_name(Persona p);
Persona persona_from_name(std::string_view name);

struct RssiSample {
  double t = 0.0;
  int gateway = 0;
  std::optional<double> value;  ///< nullopt encodes a dropped packet
};

struct AccelSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct LabelSegment {
  double start = 0.0;
  double end = 0.0;
  int room = 0;
};

struct GroundTruthTrace {
  Persona persona = Persona::kTechnicianWalkthrough;
  double duration = 0.0;
  std::size_t gateways = 0;
  std::vector<RssiSample> rssi;   ///< sorted by (t, gateway)
  std::vector<AccelSample> accel; ///< sorted by t
  std::vector<LabelSegment> labels;

  /// Room occupied at time t; t beyond the end maps to the last room.
  int label_at(double t) const;
  /// Room with the largest overlap with [start, end).
  int majority_label(double start, double end) const;
};

/// Accelerometer noise levels (g, per-axis std) for one wearer.
struct ActivityProfile {
  double still_noise = 0.03;
  double moving_noise = 0.15;
  double sleep_noise = 0.005;
  /// Fraction of sleeping minutes spent restless.
  double restless_fraction = 0.0;
  double restless_noise = 0.03;
  /// Probability that the wearable is taken off for a given night.
  double nonwear_night_prob = 0.0;
  /// Expected number of out-of-bed episodes per night.
  double night_wake_rate = 0.0;
};

/// Sensor noise of a wearable lying on a table.
inline constexpr double kNonWornNoise = 0.0005;

struct SimConfig {
  std::uint64_t seed = 1;
  double path_loss_exponent = 3.0;
  double ref_rssi_at_1m = -45.0;
  double noise_std = 4.0;
  double drop_base_prob = 0.05;
  double drop_distance_coeff = 0.03;
  double walkthrough_minutes = 40.0;
  /// Added to every RSSI value of free-living traces.
  double shift_offset = 5.0;
  /// Indexed by Persona.
  std::array<ActivityProfile, 3> activity_profiles = default_profiles();

  // Schedule shape.
  double day_dwell_mean_minutes = 15.0;
  double wake_hour = 6.75;
  double bed_hour = 22.5;
  double transit_seconds = 5.0;

  const ActivityProfile& profile(Persona p) const {
    return activity_profiles[static_cast<std::size_t>(p)];
  }
  static std::array<ActivityProfile, 3> default_profiles();
  /// Throws ValidationError on negative noise, NaN or out-of-range values.
  void validate() const;
};

enum class Activity { kStill, kMoving, kSleeping };

struct ScheduleSegment {
  double start = 0.0;
  double end = 0.0;
  int room = 0;
  Point2 position;
  Activity activity = Activity::kStill;
};

/// Piecewise-constant timeline of where the wearer is and what they do.
/// Persona-independent once generated, so the same schedule can be rendered
/// with different accelerometer profiles.
struct Schedule {
  double duration = 0.0;
  std::vector<ScheduleSegment> segments;
};

/// Log-distance path loss with Gaussian shadowing and distance-dependent
/// packet loss, rounded to 1/kRssiSteps dB. Always consumes one uniform and
/// one normal variate.
/// Throws std::invalid_argument when pos coincides with gw.
std::optional<double> rssi_from_position(Point2 pos, Point2 gw, const SimConfig& cfg, Rng& rng,
                                         double offset = 0.0);

/// Technician tour visiting every room; consecutive rooms are adjacent.
Schedule plan_walkthrough(const HouseLayout& layout, const SimConfig& cfg, Rng& rng);
/// Resident days starting at 00:00: night in the bedroom, semi-Markov daytime.
Schedule plan_free_living(const HouseLayout& layout, const SimConfig& cfg, int days,
                          Persona persona, Rng& rng);

/// Samples RSSI at 5 Hz per gateway and accelerometer at 20 Hz along a schedule.
GroundTruthTrace render_trace(const HouseLayout& layout, const SimConfig& cfg,
                              const Schedule& schedule, Persona persona, double rssi_offset,
                              Rng& rssi_rng, Rng& accel_rng);

GroundTruthTrace simulate_walkthrough(const HouseLayout& layout, const SimConfig& cfg);
/// Rejects the technician persona and days < 1.
GroundTruthTrace simulate_free_living(const HouseLayout& layout, const SimConfig& cfg, int days,
                                      Persona persona);

/// Keeps samples and labels with t < hours * 3600.
GroundTruthTrace truncate_trace(const GroundTruthTrace& trace, double hours);

}  // namespace roomloc::sim
