#include "run_config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "roomloc/errors.hpp"
#include "roomloc/io.hpp"

namespace roomloc::cli {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ValidationError("config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

template <typename T>
void read_opt(const json& obj, const char* key, std::optional<T>& dst) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) dst.reset();
  else dst = obj.at(key).get<T>();
}

}  // namespace

void RunConfig::sync_seed() {
  sim.seed = seed;
  pipeline.seed = seed;
}

void RunConfig::validate() const {
  if (layout && !std::filesystem::exists(*layout)) throw ValidationError("layout file not found: " + layout->string());
  if (days < 1) throw ValidationError("days must be >= 1");
  if (hours && !(*hours > 0.0)) throw ValidationError("hours must be positive");
  sim.validate();
  pipeline.validate();
  const auto& b = dayparts.boundaries;
  if (b.size() < 2 || b.front() != 0.0 || b.back() != 24.0)
    throw ValidationError("dayparts must start at 0 and end at 24");
  for (std::size_t i = 1; i < b.size(); ++i)
    if (!(b[i] > b[i - 1])) throw ValidationError("dayparts must be strictly increasing");
  if (lz_segments_per_day < 1) throw ValidationError("lz_segments_per_day must be >= 1");
  for (double h : {night.start_hour, night.end_hour})
    if (!(h >= 0.0 && h <= 24.0)) throw ValidationError("night span hours must lie in [0, 24]");
}

void apply_json(RunConfig& cfg, const std::string& text, const std::filesystem::path& base_dir) {
  try {
    const json j = json::parse(text);
    check_keys(j, "", {"seed", "layout", "sim", "window", "kmm", "train", "analysis"});
    read(j, "seed", cfg.seed);
    if (j.contains("layout")) {
      std::filesystem::path p = j.at("layout").get<std::string>();
      cfg.layout = p.is_relative() ? base_dir / p : p;
    }
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      check_keys(s, "sim", {"days", "hours", "path_loss_exponent", "ref_rssi_at_1m", "noise_std", "drop_base_prob",
                            "drop_distance_coeff", "walkthrough_minutes", "shift_offset"});
      read(s, "days", cfg.days);
      read_opt(s, "hours", cfg.hours);
      read(s, "path_loss_exponent", cfg.sim.path_loss_exponent);
      read(s, "ref_rssi_at_1m", cfg.sim.ref_rssi_at_1m);
      read(s, "noise_std", cfg.sim.noise_std);
      read(s, "drop_base_prob", cfg.sim.drop_base_prob);
      read(s, "drop_distance_coeff", cfg.sim.drop_distance_coeff);
      read(s, "walkthrough_minutes", cfg.sim.walkthrough_minutes);
      read(s, "shift_offset", cfg.sim.shift_offset);
    }
    if (j.contains("window")) {
      const auto& w = j.at("window");
      check_keys(w, "window", {"length", "overlap"});
      read(w, "length", cfg.pipeline.window.length);
      read(w, "overlap", cfg.pipeline.window.overlap);
    }
    if (j.contains("kmm")) {
      const auto& k = j.at("kmm");
      check_keys(k, "kmm", {"B", "epsilon", "bandwidth", "max_test_points"});
      read(k, "B", cfg.pipeline.kmm.upper_bound);
      read_opt(k, "epsilon", cfg.pipeline.kmm.tolerance);
      read_opt(k, "bandwidth", cfg.pipeline.kmm.bandwidth);
      read(k, "max_test_points", cfg.pipeline.kmm.max_test_points);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, "train", {"epochs", "batch_size", "lr", "ssl_weight", "ssl_warmup_epochs", "ssl_chunk_windows",
                              "ssl_chunks_per_epoch", "early_stop_patience", "holdout_fraction", "gate_threshold",
                              "gate_quantile", "transition_offdiag", "use_kmm", "use_ssl", "use_gate",
                              "use_complement", "wear_floor", "max_pseudo_labels"});
      auto& p = cfg.pipeline;
      read(t, "epochs", p.train.epochs);
      read(t, "batch_size", p.train.batch_size);
      read(t, "lr", p.train.lr);
      read(t, "ssl_weight", p.train.ssl_weight);
      read(t, "ssl_warmup_epochs", p.train.ssl_warmup_epochs);
      read(t, "ssl_chunk_windows", p.train.ssl_chunk_windows);
      read(t, "ssl_chunks_per_epoch", p.train.ssl_chunks_per_epoch);
      read(t, "early_stop_patience", p.train.early_stop_patience);
      read(t, "holdout_fraction", p.train.holdout_fraction);
      read_opt(t, "gate_threshold", p.gate_threshold);
      read(t, "gate_quantile", p.gate_quantile);
      read(t, "transition_offdiag", p.transition_offdiag);
      read(t, "use_kmm", p.use_kmm);
      read(t, "use_ssl", p.train.use_ssl);
      read(t, "use_gate", p.use_gate);
      read(t, "use_complement", p.use_complement);
      read(t, "wear_floor", p.wear_floor);
      read(t, "max_pseudo_labels", p.max_pseudo_labels);
    }
    if (j.contains("analysis")) {
      const auto& a = j.at("analysis");
      check_keys(a, "analysis", {"dayparts", "night", "lag", "lz_segments_per_day"});
      read(a, "dayparts", cfg.dayparts.boundaries);
      if (a.contains("night")) {
        const auto n = a.at("night").get<std::vector<double>>();
        if (n.size() != 2) throw ValidationError("config: analysis.night must be [start_hour, end_hour]");
        cfg.night = {n[0], n[1]};
      }
      read(a, "lag", cfg.lag);
      read(a, "lz_segments_per_day", cfg.lz_segments_per_day);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  cfg.pipeline.night = cfg.night;
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file not found: " + path.string());
  apply_json(cfg, io::read_text(path), path.parent_path());
}

std::string to_json(const RunConfig& cfg) {
  const auto& p = cfg.pipeline;
  auto opt = [](const auto& o) { return o ? json(*o) : json(nullptr); };
  json j;
  j["seed"] = cfg.seed;
  j["layout"] = cfg.layout ? json(cfg.layout->filename().string()) : json("<demo>");
  j["sim"] = {{"days", cfg.days},
              {"hours", opt(cfg.hours)},
              {"path_loss_exponent", cfg.sim.path_loss_exponent},
              {"ref_rssi_at_1m", cfg.sim.ref_rssi_at_1m},
              {"noise_std", cfg.sim.noise_std},
              {"drop_base_prob", cfg.sim.drop_base_prob},
              {"drop_distance_coeff", cfg.sim.drop_distance_coeff},
              {"walkthrough_minutes", cfg.sim.walkthrough_minutes},
              {"shift_offset", cfg.sim.shift_offset}};
  j["window"] = {{"length", p.window.length}, {"overlap", p.window.overlap}};
  j["kmm"] = {{"B", p.kmm.upper_bound},
              {"epsilon", opt(p.kmm.tolerance)},
              {"bandwidth", opt(p.kmm.bandwidth)},
              {"max_test_points", p.kmm.max_test_points}};
  j["train"] = {{"epochs", p.train.epochs},
                {"batch_size", p.train.batch_size},
                {"lr", p.train.lr},
                {"ssl_weight", p.train.ssl_weight},
                {"ssl_warmup_epochs", p.train.ssl_warmup_epochs},
                {"ssl_chunk_windows", p.train.ssl_chunk_windows},
                {"ssl_chunks_per_epoch", p.train.ssl_chunks_per_epoch},
                {"early_stop_patience", p.train.early_stop_patience},
                {"holdout_fraction", p.train.holdout_fraction},
                {"gate_threshold", opt(p.gate_threshold)},
                {"gate_quantile", p.gate_quantile},
                {"transition_offdiag", p.transition_offdiag},
                {"use_kmm", p.use_kmm},
                {"use_ssl", p.train.use_ssl},
                {"use_gate", p.use_gate},
                {"use_complement", p.use_complement},
                {"wear_floor", p.wear_floor},
                {"max_pseudo_labels", p.max_pseudo_labels}};
  j["analysis"] = {{"dayparts", cfg.dayparts.boundaries},
                   {"night", {cfg.night.start_hour, cfg.night.end_hour}},
                   {"lag", cfg.lag},
                   {"lz_segments_per_day", cfg.lz_segments_per_day}};
  return j.dump(2);
}

}  // namespace roomloc::cli
