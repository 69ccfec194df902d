#include "roomloc/behaviour.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roomloc::behaviour {

namespace {

std::map<int, std::size_t> counts(std::span<const int> xs) {
  std::map<int, std::size_t> c;
  for (int x : xs) ++c[x];
  return c;
}

}  // namespace

double entropy_bits(std::span<const int> xs) {
  if (xs.empty()) return 0.0;
  const double n = static_cast<double>(xs.size());
  double h = 0.0;
  for (const auto& [sym, k] : counts(xs)) {
    const double p = static_cast<double>(k) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double mutual_information(std::span<const int> a, std::span<const int> b) {
  if (a.empty()) throw std::invalid_argument("mutual_information: empty input");
  if (a.size() != b.size()) throw std::invalid_argument("mutual_information: sequences differ in length");
  std::map<std::pair<int, int>, std::size_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) ++joint[{a[i], b[i]}];
  const auto ca = counts(a);
  const auto cb = counts(b);
  const double n = static_cast<double>(a.size());
  // Each cell's term is symmetric in (a, b); summing the terms in sorted
  // order makes the total independent of argument order, bit for bit.
  std::vector<double> terms;
  terms.reserve(joint.size());
  for (const auto& [xy, k] : joint) {
    const double pxy = static_cast<double>(k) / n;
    const double px = static_cast<double>(ca.at(xy.first)) / n;
    const double py = static_cast<double>(cb.at(xy.second)) / n;
    terms.push_back(pxy * std::log2(pxy / (px * py)));
  }
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  // Rounding can leave a tiny negative for independent samples.
  return std::max(0.0, mi);
}

double mutual_information(const OccupancyPair& pair) {
  return mutual_information(pair.room_a, pair.room_b);
}

std::size_t Dayparts::part_of(double t) const {
  double h = std::fmod(t, 86400.0) / 3600.0;
  if (h < 0.0) h += 24.0;
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), h);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - boundaries.begin())) - 1;
  return std::min(idx, count() - 1);
}

std::map<DaypartKey, double> stratify_mi(const OccupancyPair& pair, const Dayparts& dayparts,
                                         std::size_t lag, std::size_t min_windows) {
  const std::size_t n = pair.room_a.size();
  if (pair.room_b.size() != n || pair.times.size() != n)
    throw std::invalid_argument("stratify_mi: sequences differ in length");
  std::map<DaypartKey, std::pair<std::vector<int>, std::vector<int>>> buckets;
  for (std::size_t t = 0; t + lag < n; ++t) {
    const DaypartKey key{day_of(pair.times[t]), static_cast<int>(dayparts.part_of(pair.times[t]))};
    auto& [xa, xb] = buckets[key];
    xa.push_back(pair.room_a[t]);
    xb.push_back(pair.room_b[t + lag]);
  }
  std::map<DaypartKey, double> out;
  for (const auto& [key, seqs] : buckets) {
    if (seqs.first.size() >= min_windows) out[key] = mutual_information(seqs.first, seqs.second);
  }
  return out;
}

std::size_t lz76_complexity(std::span<const int> s) {
  const std::size_t n = s.size();
  if (n == 0) throw std::invalid_argument("lz76_complexity: empty sequence");
  std::size_t complexity = 1;
  std::size_t i = 0;     // start of the candidate match in the history
  std::size_t u = 1;     // start of the current phrase
  std::size_t v = 1;     // length of the current match
  std::size_t vmax = 1;  // longest match found for this phrase
  while (u + v <= n) {
    if (s[i + v - 1] == s[u + v - 1]) {
      ++v;
    } else {
      vmax = std::max(v, vmax);
      ++i;
      if (i == u) {
        ++complexity;
        u += vmax;
        i = 0;
        v = 1;
        vmax = 1;
      } else {
        v = 1;
      }
    }
  }
  if (v != 1) ++complexity;
  return complexity;
}

std::map<int, DayActivity> activity_totals(std::span<const double> times, std::span<const double> alpha,
                                           std::span<const int> labels, int rooms) {
  if (times.size() != alpha.size() || labels.size() != alpha.size())
    throw std::invalid_argument("activity_totals: series differ in length");
  std::map<int, DayActivity> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= rooms) throw std::invalid_argument("activity_totals: label out of range");
    auto& day = out[day_of(times[i])];
    if (day.by_room.empty()) day.by_room.assign(static_cast<std::size_t>(rooms), 0.0);
    day.by_room[static_cast<std::size_t>(labels[i])] += alpha[i];
  }
  for (auto& [d, day] : out) {
    day.total = 0.0;
    for (double v : day.by_room) day.total += v;
  }
  return out;
}

SleepReport sleep_disturbance(std::span<const double> times, std::span<const double> alpha,
                              std::span<const int> labels, int bedroom, const crf::NightSpan& night) {
  if (times.size() != alpha.size() || labels.size() != alpha.size())
    throw std::invalid_argument("sleep_disturbance: series differ in length");
  SleepReport report;
  if (night.empty()) return report;

  struct Acc {
    std::vector<double> a;
    std::size_t outside = 0;
    std::size_t exits = 0;
    int prev = -1;
  };
  std::map<int, Acc> by_day;
  std::vector<int> days_seen;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const int d = day_of(times[i]);
    if (days_seen.empty() || days_seen.back() != d) days_seen.push_back(d);
    if (!night.contains(times[i])) continue;
    auto& acc = by_day[d];
    acc.a.push_back(alpha[i]);
    if (labels[i] != bedroom) ++acc.outside;
    if (acc.prev == bedroom && labels[i] != bedroom) ++acc.exits;
    acc.prev = labels[i];
  }
  std::sort(days_seen.begin(), days_seen.end());
  days_seen.erase(std::unique(days_seen.begin(), days_seen.end()), days_seen.end());
  for (int d : days_seen) {
    const auto it = by_day.find(d);
    if (it == by_day.end()) {
      report.skipped_days.push_back(d);
      continue;
    }
    const auto& acc = it->second;
    NightSummary s;
    s.day = d;
    s.windows = acc.a.size();
    double sum = 0.0;
    for (double v : acc.a) sum += v;
    s.mean_alpha = sum / static_cast<double>(s.windows);
    double ss = 0.0;
    for (double v : acc.a) ss += (v - s.mean_alpha) * (v - s.mean_alpha);
    s.var_alpha = ss / static_cast<double>(s.windows);
    s.fraction_outside_bedroom = static_cast<double>(acc.outside) / static_cast<double>(s.windows);
    s.bedroom_exits = acc.exits;
    report.nights.push_back(s);
  }
  return report;
}

std::map<std::pair<int, int>, std::size_t> lz_by_segment(std::span<const double> times, std::span<const int> labels,
                                                         int segments_per_day) {
  if (times.size() != labels.size()) throw std::invalid_argument("lz_by_segment: series differ in length");
  if (segments_per_day < 1) throw std::invalid_argument("lz_by_segment: need at least one segment per day");
  const double span = 86400.0 / segments_per_day;
  std::map<std::pair<int, int>, std::vector<int>> parts;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const int day = day_of(times[i]);
    const int seg = std::min(segments_per_day - 1, static_cast<int>((times[i] - day * 86400.0) / span));
    parts[{day, seg}].push_back(labels[i]);
  }
  std::map<std::pair<int, int>, std::size_t> out;
  for (const auto& [key, seq] : parts) out[key] = lz76_complexity(seq);
  return out;
}

std::map<int, std::size_t> lz_by_day(std::span<const double> times, std::span<const int> labels) {
  std::map<int, std::size_t> out;
  for (const auto& [key, lz] : lz_by_segment(times, labels, 1)) out[key.first] = lz;
  return out;
}

}  // namespace roomloc::behaviour
