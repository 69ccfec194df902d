#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "roomloc/train.hpp"

namespace roomloc::behaviour {

/// Two residents' decoded rooms on a shared window grid.
struct OccupancyPair {
  std::vector<double> times;  ///< window start, seconds since 00:00 of day 0
  std::vector<int> room_a;
  std::vector<int> room_b;
};

/// Plug-in entropy of a discrete sample in bits.
double entropy_bits(std::span<const int> xs);

/// Plug-in mutual information of the empirical joint distribution in bits,
/// with 0 log 0 = 0. Throws std::invalid_argument for empty or unequal input.
double mutual_information(std::span<const int> a, std::span<const int> b);
double mutual_information(const OccupancyPair& pair);

/// Day partition by clock hour; boundaries must start at 0 and increase to 24.
struct Dayparts {
  std::vector<double> boundaries{0.0, 6.0, 12.0, 18.0, 24.0};

  std::size_t count() const { return boundaries.size() - 1; }
  /// Index of the daypart containing clock time t (seconds since 00:00 of day 0).
  std::size_t part_of(double t) const;
};

struct DaypartKey {
  int day = 0;
  int part = 0;
  auto operator<=>(const DaypartKey&) const = default;
};

inline constexpr std::size_t kMinBucketWindows = 30;

/// Pairs A_t with B_{t+lag}, buckets by (day, daypart) of A's timestamp and
/// returns the MI of every bucket holding at least min_windows pairs.
std::map<DaypartKey, double> stratify_mi(const OccupancyPair& pair, const Dayparts& dayparts,
                                         std::size_t lag, std::size_t min_windows = kMinBucketWindows);

/// Phrase count of the Lempel-Ziv (1976) exhaustive-history parsing, computed
/// with the Kaspar-Schuster scan. Throws std::invalid_argument when empty.
std::size_t lz76_complexity(std::span<const int> symbols);

struct DayActivity {
  std::vector<double> by_room;
  double total = 0.0;  ///< sum of by_room in room order
};

/// Sum of alpha over windows decoded to each room, per calendar day.
std::map<int, DayActivity> activity_totals(std::span<const double> times, std::span<const double> alpha,
                                           std::span<const int> labels, int rooms);

struct NightSummary {
  int day = 0;
  std::size_t windows = 0;
  double mean_alpha = 0.0;
  double var_alpha = 0.0;
  double fraction_outside_bedroom = 0.0;
  std::size_t bedroom_exits = 0;
};

struct SleepReport {
  std::vector<NightSummary> nights;
  /// Days covered by the input that had no window inside the night span.
  std::vector<int> skipped_days;
};

/// Per day: mean and population variance of alpha over night windows, share
/// of night windows decoded outside the bedroom, and the number of
/// bedroom-to-elsewhere transitions between consecutive night windows.
SleepReport sleep_disturbance(std::span<const double> times, std::span<const double> alpha,
                              std::span<const int> labels, int bedroom, const crf::NightSpan& night);

/// Lempel-Ziv complexity of each day's decoded sequence.
std::map<int, std::size_t> lz_by_day(std::span<const double> times, std::span<const int> labels);

/// Same, with every day cut into `segments_per_day` equal clock spans; keys
/// are (day, segment). Throws std::invalid_argument for zero segments.
std::map<std::pair<int, int>, std::size_t> lz_by_segment(std::span<const double> times, std::span<const int> labels,
                                                         int segments_per_day);

inline int day_of(double t) { return static_cast<int>(t / 86400.0); }

}  // namespace roomloc::behaviour
