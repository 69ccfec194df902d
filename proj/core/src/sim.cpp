#include "roomloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "roomloc/errors.hpp"

namespace roomloc::sim {

std::string_view persona_name(Persona p) {
  switch (p) {
    case Persona::kTechnicianWalkthrough: return "technician_walkthrough";
    case Persona::kResidentA: return "resident_a";
    case Persona::kResidentB: return "resident_b";
  }
  return "unknown";
}

Persona persona_from_name(std::string_view name) {
  if (name == "technician_walkthrough") return Persona::kTechnicianWalkthrough;
  if (name == "resident_a") return Persona::kResidentA;
  if (name == "resident_b") return Persona::kResidentB;
  throw ValidationError("unknown persona '" + std::string(name) + "'");
}

int GroundTruthTrace::label_at(double t) const {
  if (labels.empty()) throw std::logic_error("trace has no labels");
  auto it = std::upper_bound(labels.begin(), labels.end(), t,
                             [](double v, const LabelSegment& s) { return v < s.end; });
  if (it == labels.end()) return labels.back().room;
  return it->room;
}

int GroundTruthTrace::majority_label(double start, double end) const {
  if (labels.empty()) throw std::logic_error("trace has no labels");
  std::vector<double> overlap;
  auto it = std::upper_bound(labels.begin(), labels.end(), start,
                             [](double v, const LabelSegment& s) { return v < s.end; });
  for (; it != labels.end() && it->start < end; ++it) {
    const double len = std::min(end, it->end) - std::max(start, it->start);
    if (it->room >= static_cast<int>(overlap.size())) overlap.resize(it->room + 1, 0.0);
    overlap[it->room] += std::max(0.0, len);
  }
  if (overlap.empty()) return label_at(start);
  return static_cast<int>(std::max_element(overlap.begin(), overlap.end()) - overlap.begin());
}

std::array<ActivityProfile, 3> SimConfig::default_profiles() {
  ActivityProfile technician;
  technician.still_noise = 0.01;
  technician.moving_noise = 0.05;
  technician.sleep_noise = 0.005;

  // Resident A sleeps badly: restless, gets up at night.
  ActivityProfile a;
  a.still_noise = 0.03;
  a.moving_noise = 0.15;
  a.sleep_noise = 0.012;
  a.restless_fraction = 0.2;
  a.restless_noise = 0.05;
  a.nonwear_night_prob = 0.15;
  a.night_wake_rate = 2.0;

  ActivityProfile b;
  b.still_noise = 0.03;
  b.moving_noise = 0.15;
  b.sleep_noise = 0.004;
  b.restless_fraction = 0.02;
  b.restless_noise = 0.03;
  b.nonwear_night_prob = 0.15;
  b.night_wake_rate = 0.3;
  return {technician, a, b};
}

void SimConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(path_loss_exponent) || !finite(ref_rssi_at_1m) || !finite(shift_offset))
    throw ValidationError("sim config: non-finite channel parameter");
  if (!(noise_std >= 0.0)) throw ValidationError("sim config: noise_std must be >= 0");
  if (!(drop_base_prob >= 0.0 && drop_base_prob <= 1.0))
    throw ValidationError("sim config: drop_base_prob must lie in [0, 1]");
  if (!(drop_distance_coeff >= 0.0))
    throw ValidationError("sim config: drop_distance_coeff must be >= 0");
  if (!(walkthrough_minutes > 0.0)) throw ValidationError("sim config: walkthrough_minutes must be > 0");
  if (!(day_dwell_mean_minutes > 0.0)) throw ValidationError("sim config: dwell mean must be > 0");
  if (!(wake_hour > 1.0 && wake_hour < bed_hour && bed_hour < 23.5))
    throw ValidationError("sim config: need 1 < wake_hour < bed_hour < 23.5");
  if (!(transit_seconds > 0.0)) throw ValidationError("sim config: transit_seconds must be > 0");
  for (const auto& p : activity_profiles) {
    if (!(p.still_noise >= 0 && p.moving_noise >= 0 && p.sleep_noise >= 0 && p.restless_noise >= 0))
      throw ValidationError("sim config: activity noise must be >= 0");
    if (!(p.restless_fraction >= 0 && p.restless_fraction <= 1 && p.nonwear_night_prob >= 0 &&
          p.nonwear_night_prob <= 1 && p.night_wake_rate >= 0))
      throw ValidationError("sim config: activity probabilities out of range");
  }
}

std::optional<double> rssi_from_position(Point2 pos, Point2 gw, const SimConfig& cfg, Rng& rng,
                                         double offset) {
  const double d = distance(pos, gw);
  if (d <= 0.0) throw std::invalid_argument("rssi_from_position: position coincides with gateway");
  const double u = rng.uniform();
  const double shadowing = rng.normal() * cfg.noise_std;
  const double p_drop = std::clamp(cfg.drop_base_prob + cfg.drop_distance_coeff * d, 0.0, 1.0);
  if (u < p_drop) return std::nullopt;
  const double v =
      cfg.ref_rssi_at_1m - 10.0 * cfg.path_loss_exponent * std::log10(d) + shadowing + offset;
  return std::clamp(std::round(v * kRssiSteps) / kRssiSteps, kRssiFloor + kRssiClampMargin,
                    kRssiCeiling - kRssiClampMargin);
}

namespace {

Point2 sample_in_disk(Point2 centre, double radius, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  return {centre.x + r * std::cos(theta), centre.y + r * std::sin(theta)};
}

Point2 bed_spot(const HouseLayout& layout) {
  const Point2 c = layout.room_positions[layout.bedroom];
  return {c.x + 0.4 * layout.room_radius, c.y + 0.25 * layout.room_radius};
}

class Planner {
 public:
  Planner(const HouseLayout& layout, const SimConfig& cfg, Rng& rng)
      : layout_(layout), cfg_(cfg), rng_(rng) {}

  void add(double start, double end, int room, Point2 pos, Activity a) {
    if (end <= start) return;
    segments_.push_back({start, end, room, pos, a});
  }

  Point2 spot(int room) { return sample_in_disk(layout_.room_positions[room], layout_.room_radius, rng_); }

  /// Stay in `room` over [t0, t1), relocating every [min_gap, max_gap) seconds.
  void dwell(int room, double t0, double t1, double min_gap, double max_gap) {
    double t = t0;
    while (t < t1) {
      const double stop = std::min(t1, t + rng_.uniform(min_gap, max_gap));
      const Point2 p = spot(room);
      add(t, stop, room, p, Activity::kStill);
      t = stop;
      if (t < t1) {
        const double relocate = std::min(t1, t + 3.0);
        add(t, relocate, room, p, Activity::kMoving);
        t = relocate;
      }
    }
  }

  double travel_time(int from, int to) const {
    const auto path = layout_.shortest_path(from, to);
    return 2.0 * cfg_.transit_seconds * static_cast<double>(path.size() - 1);
  }

  /// Walk from `from` to `to` starting at t; returns arrival time.
  double travel(int from, int to, double t, Point2 from_pos) {
    const auto path = layout_.shortest_path(from, to);
    const double ts = cfg_.transit_seconds;
    add(t, t + ts, from, from_pos, Activity::kMoving);
    t += ts;
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      add(t, t + 2.0 * ts, path[i], layout_.room_positions[path[i]], Activity::kMoving);
      t += 2.0 * ts;
    }
    add(t, t + ts, to, spot(to), Activity::kMoving);
    return t + ts;
  }

  int random_other_room(int current) {
    const int n = static_cast<int>(layout_.room_count());
    int r = static_cast<int>(rng_.below(static_cast<std::uint64_t>(n - 1)));
    return r >= current ? r + 1 : r;
  }

  std::vector<ScheduleSegment> take() { return std::move(segments_); }

  Rng& rng() { return rng_; }

 private:
  const HouseLayout& layout_;
  const SimConfig& cfg_;
  Rng& rng_;
  std::vector<ScheduleSegment> segments_;
};

void dfs_tour(const HouseLayout& layout, int u, std::vector<char>& seen, Rng& rng,
              std::vector<std::pair<int, bool>>& tour) {
  seen[u] = 1;
  auto nbrs = layout.neighbours(u);
  // Fisher-Yates with the portable generator.
  for (std::size_t i = nbrs.size(); i > 1; --i) std::swap(nbrs[i - 1], nbrs[rng.below(i)]);
  for (int v : nbrs) {
    if (seen[v]) continue;
    tour.emplace_back(v, true);
    dfs_tour(layout, v, seen, rng, tour);
    tour.emplace_back(u, false);
  }
}

std::vector<LabelSegment> labels_from_schedule(const Schedule& s) {
  std::vector<LabelSegment> out;
  for (const auto& seg : s.segments) {
    if (!out.empty() && out.back().room == seg.room && out.back().end == seg.start) {
      out.back().end = seg.end;
    } else {
      out.push_back({seg.start, seg.end, seg.room});
    }
  }
  return out;
}

}  // namespace

Schedule plan_walkthrough(const HouseLayout& layout, const SimConfig& cfg, Rng& rng) {
  layout.validate();
  cfg.validate();
  const double total = cfg.walkthrough_minutes * 60.0;

  std::vector<std::pair<int, bool>> tour{{0, true}};
  std::vector<char> seen(layout.room_count(), 0);
  dfs_tour(layout, 0, seen, rng, tour);
  while (!tour.back().second) tour.pop_back();

  const double ts = cfg.transit_seconds;
  std::size_t revisits = 0;
  for (const auto& [room, first] : tour) revisits += first ? 0 : 1;
  std::vector<double> weights;
  for (const auto& [room, first] : tour) {
    if (first) weights.push_back(rng.uniform(0.8, 1.2));
  }
  double transit = 2.0 * ts;
  // Short walkthroughs: shrink the pass-through time so every room keeps a dwell.
  if (static_cast<double>(revisits) * transit > 0.5 * total)
    transit = 0.5 * total / static_cast<double>(revisits);
  const double budget = total - static_cast<double>(revisits) * transit;
  double wsum = 0.0;
  for (double w : weights) wsum += w;

  Planner planner(layout, cfg, rng);
  double t = 0.0;
  std::size_t wi = 0;
  for (std::size_t i = 0; i < tour.size(); ++i) {
    const auto [room, first] = tour[i];
    if (!first) {
      planner.add(t, t + transit, room, layout.room_positions[room], Activity::kMoving);
      t += transit;
      continue;
    }
    const double stay = budget * weights[wi++] / wsum;
    const double end = (i + 1 == tour.size()) ? total : t + stay;
    const double in = (i == 0) ? 0.0 : std::min(ts, 0.25 * stay);
    const double out = (i + 1 == tour.size()) ? 0.0 : std::min(ts, 0.25 * stay);
    planner.add(t, t + in, room, planner.spot(room), Activity::kMoving);
    planner.dwell(room, t + in, end - out, 30.0, 90.0);
    planner.add(end - out, end, room, planner.spot(room), Activity::kMoving);
    t = end;
  }
  Schedule s;
  s.duration = total;
  s.segments = planner.take();
  return s;
}

Schedule plan_free_living(const HouseLayout& layout, const SimConfig& cfg, int days,
                          Persona persona, Rng& rng) {
  layout.validate();
  cfg.validate();
  if (days < 1) throw ValidationError("simulate_free_living: days must be >= 1");
  if (persona == Persona::kTechnicianWalkthrough)
    throw ValidationError("simulate_free_living: technician persona is walkthrough-only");

  const ActivityProfile& profile = cfg.profile(persona);
  const int bedroom = layout.bedroom;
  const Point2 bed = bed_spot(layout);
  const bool single_room = layout.room_count() < 2;
  Planner planner(layout, cfg, rng);
  constexpr double kHour = 3600.0;

  for (int d = 0; d < days; ++d) {
    const double day0 = d * kSecondsPerDay;
    const double wake = day0 + (cfg.wake_hour + rng.uniform(-0.5, 0.5)) * kHour;
    const double bedtime = day0 + (cfg.bed_hour + rng.uniform(-0.5, 0.5)) * kHour;

    // Night: Poisson number of out-of-bed episodes between 00:30 and 05:30.
    std::vector<double> episode_starts;
    for (double acc = rng.exponential(1.0); acc < profile.night_wake_rate;
         acc += rng.exponential(1.0)) {
      episode_starts.push_back(day0 + rng.uniform(0.5, 5.5) * kHour);
    }
    std::sort(episode_starts.begin(), episode_starts.end());
    double t = day0;
    for (double start : episode_starts) {
      if (single_room || start < t + 60.0) continue;
      planner.add(t, start, bedroom, bed, Activity::kSleeping);
      const int target = planner.random_other_room(bedroom);
      t = planner.travel(bedroom, target, start, bed);
      const double stay = rng.uniform(3.0, 10.0) * 60.0;
      planner.dwell(target, t, t + stay, 60.0, 180.0);
      t = planner.travel(target, bedroom, t + stay, layout.room_positions[target]);
    }
    planner.add(t, wake, bedroom, bed, Activity::kSleeping);
    t = std::max(t, wake);

    // Day: semi-Markov walk between rooms.
    int room = bedroom;
    const double first_stay = rng.uniform(5.0, 15.0) * 60.0;
    double stay_end = std::min(t + first_stay, bedtime);
    planner.dwell(room, t, stay_end, 60.0, 300.0);
    t = stay_end;
    while (!single_room) {
      const int next = planner.random_other_room(room);
      const double home_after = planner.travel_time(room, next) + planner.travel_time(next, bedroom);
      if (t + home_after + 120.0 >= bedtime) break;
      t = planner.travel(room, next, t, layout.room_positions[room]);
      room = next;
      const double stay = std::max(60.0, rng.exponential(cfg.day_dwell_mean_minutes * 60.0));
      const double latest = bedtime - planner.travel_time(room, bedroom);
      stay_end = std::min(t + stay, latest);
      planner.dwell(room, t, stay_end, 60.0, 300.0);
      t = stay_end;
    }
    if (room != bedroom) {
      t = planner.travel(room, bedroom, t, layout.room_positions[room]);
    }
    const double sleep_at = std::max(t, bedtime);
    planner.dwell(bedroom, t, sleep_at, 60.0, 300.0);
    planner.add(sleep_at, day0 + kSecondsPerDay, bedroom, bed, Activity::kSleeping);
  }

  Schedule s;
  s.duration = days * kSecondsPerDay;
  s.segments = planner.take();
  return s;
}

GroundTruthTrace render_trace(const HouseLayout& layout, const SimConfig& cfg,
                              const Schedule& schedule, Persona persona, double rssi_offset,
                              Rng& rssi_rng, Rng& accel_rng) {
  if (schedule.segments.empty()) throw std::invalid_argument("render_trace: empty schedule");
  GroundTruthTrace trace;
  trace.persona = persona;
  trace.duration = schedule.duration;
  trace.gateways = layout.gateway_count();
  trace.labels = labels_from_schedule(schedule);

  const auto& segs = schedule.segments;
  const std::size_t G = layout.gateway_count();

  const auto n_rssi = static_cast<std::size_t>(std::floor(schedule.duration * kRssiRateHz + 1e-9));
  trace.rssi.reserve(n_rssi * G);
  std::size_t si = 0;
  for (std::size_t k = 0; k < n_rssi; ++k) {
    const double t = static_cast<double>(k) / kRssiRateHz;
    while (si + 1 < segs.size() && segs[si].end <= t) ++si;
    for (std::size_t g = 0; g < G; ++g) {
      trace.rssi.push_back({t, static_cast<int>(g),
                            rssi_from_position(segs[si].position, layout.gateway_positions[g], cfg,
                                               rssi_rng, rssi_offset)});
    }
  }

  const ActivityProfile& profile = cfg.profile(persona);
  // Night n spans 18:00 of day n-1 to 18:00 of day n.
  const auto nights = static_cast<std::size_t>(schedule.duration / kSecondsPerDay) + 2;
  std::vector<char> nonworn(nights, 0);
  for (auto& flag : nonworn) flag = accel_rng.bernoulli(profile.nonwear_night_prob) ? 1 : 0;

  const auto n_accel = static_cast<std::size_t>(std::floor(schedule.duration * kAccelRateHz + 1e-9));
  trace.accel.reserve(n_accel);
  si = 0;
  long current_minute = -1;
  bool restless = false;
  for (std::size_t k = 0; k < n_accel; ++k) {
    const double t = static_cast<double>(k) / kAccelRateHz;
    while (si + 1 < segs.size() && segs[si].end <= t) ++si;
    double sigma = profile.still_noise;
    switch (segs[si].activity) {
      case Activity::kStill: sigma = profile.still_noise; break;
      case Activity::kMoving: sigma = profile.moving_noise; break;
      case Activity::kSleeping: {
        const long minute = static_cast<long>(t / 60.0);
        if (minute != current_minute) {
          current_minute = minute;
          restless = accel_rng.bernoulli(profile.restless_fraction);
        }
        const auto night = static_cast<std::size_t>((t + 6.0 * 3600.0) / kSecondsPerDay);
        if (night < nonworn.size() && nonworn[night]) {
          sigma = kNonWornNoise;
        } else {
          sigma = restless ? profile.restless_noise : profile.sleep_noise;
        }
        break;
      }
    }
    auto q = [](double v) { return std::round(v * kAccelSteps) / kAccelSteps; };
    const double x = q(sigma * accel_rng.normal());
    const double y = q(sigma * accel_rng.normal());
    const double z = q(1.0 + sigma * accel_rng.normal());
    trace.accel.push_back({t, x, y, z});
  }
  return trace;
}

GroundTruthTrace simulate_walkthrough(const HouseLayout& layout, const SimConfig& cfg) {
  const Rng root(cfg.seed);
  Rng plan_rng = root.fork("walkthrough/schedule");
  Rng rssi_rng = root.fork("walkthrough/rssi");
  Rng accel_rng = root.fork("walkthrough/accel");
  const Schedule s = plan_walkthrough(layout, cfg, plan_rng);
  return render_trace(layout, cfg, s, Persona::kTechnicianWalkthrough, 0.0, rssi_rng, accel_rng);
}

GroundTruthTrace simulate_free_living(const HouseLayout& layout, const SimConfig& cfg, int days,
                                      Persona persona) {
  if (persona == Persona::kTechnicianWalkthrough)
    throw ValidationError("simulate_free_living: technician persona is walkthrough-only");
  const Rng root(cfg.seed);
  const std::string tag(persona_name(persona));
  Rng plan_rng = root.fork(tag + "/schedule");
  Rng rssi_rng = root.fork(tag + "/rssi");
  Rng accel_rng = root.fork(tag + "/accel");
  const Schedule s = plan_free_living(layout, cfg, days, persona, plan_rng);
  return render_trace(layout, cfg, s, persona, cfg.shift_offset, rssi_rng, accel_rng);
}

GroundTruthTrace truncate_trace(const GroundTruthTrace& trace, double hours) {
  const double limit = std::min(trace.duration, hours * 3600.0);
  GroundTruthTrace out;
  out.persona = trace.persona;
  out.duration = limit;
  out.gateways = trace.gateways;
  for (const auto& s : trace.rssi)
    if (s.t < limit) out.rssi.push_back(s);
  for (const auto& s : trace.accel)
    if (s.t < limit) out.accel.push_back(s);
  for (auto seg : trace.labels) {
    if (seg.start >= limit) break;
    seg.end = std::min(seg.end, limit);
    out.labels.push_back(seg);
  }
  return out;
}

}  // namespace roomloc::sim
