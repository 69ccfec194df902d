#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "roomloc/behaviour.hpp"
#include "roomloc/checkpoint.hpp"
#include "roomloc/errors.hpp"
#include "roomloc/io.hpp"
#include "roomloc/pipeline.hpp"
#include "roomloc/svg.hpp"
#include "run_config.hpp"

namespace roomloc::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using io::format_double;

namespace {

/// Flags shared by every subcommand.
struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = ".";
  bool no_kmm = false;
  bool no_ssl = false;
  bool no_gate = false;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration");
  c.seed_opt = sub->add_option("--seed", c.seed, "Root seed");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_flag("--no-kmm", c.no_kmm, "Force all importance weights to 1");
  sub->add_flag("--no-ssl", c.no_ssl, "Skip the self-training term");
  sub->add_flag("--no-gate", c.no_gate, "Never close the transition gate");
}

/// Defaults, then the config file, then command-line flags.
RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) apply_config_file(cfg, c.config);
  if (c.seed_opt && c.seed_opt->count() > 0) cfg.seed = c.seed;
  if (c.no_kmm) cfg.pipeline.use_kmm = false;
  if (c.no_ssl) cfg.pipeline.train.use_ssl = false;
  if (c.no_gate) cfg.pipeline.use_gate = false;
  cfg.pipeline.night = cfg.night;
  cfg.sync_seed();
  return cfg;
}

HouseLayout load_layout(const RunConfig& cfg) { return cfg.layout ? io::read_layout(*cfg.layout) : demo_layout(); }

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ValidationError("cannot create output directory " + p.string());
  return p;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw ValidationError(std::string(what) + " not found: " + path);
}

/// File stem without the pipeline suffixes we add ourselves.
std::string base_name(const fs::path& p) {
  std::string s = p.filename().string();
  for (const char* suffix : {".features.csv", ".decode.csv", ".jsonl", ".csv"}) {
    const std::string suf(suffix);
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0) {
      s.resize(s.size() - suf.size());
      break;
    }
  }
  return s;
}

features::FeatureTable load_table(const fs::path& path, const features::WindowSpec& window) {
  require_file(path.string(), "input");
  if (path.extension() == ".csv") return io::read_feature_csv(path);
  return features::featurize(io::read_trace(path), window, true);
}

class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {}
  void input(const fs::path& p) { inputs_[p.filename().string()] = io::file_digest(p); }
  void output(const fs::path& p) { outputs_[p.filename().string()] = io::file_digest(p); }
  fs::path write(const fs::path& dir) const {
    json j;
    j["command"] = command_;
    j["seed"] = cfg_.seed;
    j["config"] = json::parse(to_json(cfg_));
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    const fs::path p = dir / (command_ + ".manifest.json");
    io::write_text(p, j.dump(2) + "\n");
    return p;
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

// ---- simulate ---------------------------------------------------------------

struct SimOutputs {
  sim::GroundTruthTrace walkthrough;
  std::vector<std::pair<std::string, sim::GroundTruthTrace>> residents;
};

SimOutputs simulate_all(const RunConfig& cfg, const HouseLayout& layout) {
  SimOutputs s;
  s.walkthrough = sim::simulate_walkthrough(layout, cfg.sim);
  for (auto persona : {sim::Persona::kResidentA, sim::Persona::kResidentB}) {
    auto t = sim::simulate_free_living(layout, cfg.sim, cfg.days, persona);
    if (cfg.hours) t = sim::truncate_trace(t, *cfg.hours);
    s.residents.emplace_back(std::string(sim::persona_name(persona)), std::move(t));
  }
  return s;
}

void write_sim(const SimOutputs& s, const fs::path& out, Manifest& m) {
  const auto wp = out / "walkthrough.jsonl";
  io::write_trace(wp, s.walkthrough);
  m.output(wp);
  for (const auto& [name, trace] : s.residents) {
    const auto p = out / (name + ".jsonl");
    io::write_trace(p, trace);
    m.output(p);
  }
}

int cmd_simulate(const Common& c, const std::string& layout_path, std::optional<int> days,
                 std::optional<double> hours, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (!layout_path.empty()) cfg.layout = layout_path;
  if (days) cfg.days = *days;
  if (hours) cfg.hours = *hours;
  cfg.validate();
  const auto layout = load_layout(cfg);
  const auto dir = prepare_out(c.out);
  Manifest m("simulate", cfg);
  const auto lp = dir / "layout.json";
  io::write_text(lp, io::layout_to_json(layout));
  m.output(lp);
  write_sim(simulate_all(cfg, layout), dir, m);
  m.write(dir);
  out << "simulate: wrote walkthrough and 2 resident traces to " << dir.string() << "\n";
  return kOk;
}

// ---- featurize --------------------------------------------------------------

int cmd_featurize(const Common& c, const std::vector<std::string>& traces, std::ostream& out) {
  RunConfig cfg = resolve(c);
  cfg.validate();
  for (const auto& t : traces) require_file(t, "trace");
  const auto dir = prepare_out(c.out);
  Manifest m("featurize", cfg);
  for (const auto& t : traces) {
    const auto trace = io::read_trace(t);
    const auto table = features::featurize(trace, cfg.pipeline.window, true);
    const auto p = dir / (base_name(t) + ".features.csv");
    io::write_feature_csv(p, table);
    m.input(t);
    m.output(p);
    out << "featurize: " << table.rows() << " windows -> " << p.string() << "\n";
  }
  m.write(dir);
  return kOk;
}

// ---- train ------------------------------------------------------------------

json beta_summary(const std::vector<double>& beta) {
  const double n = static_cast<double>(beta.size());
  double sum = 0.0, sq = 0.0;
  for (double b : beta) {
    sum += b;
    sq += b * b;
  }
  const double mean = sum / n;
  std::vector<double> sorted = beta;
  std::sort(sorted.begin(), sorted.end());
  return {{"count", beta.size()},
          {"mean", mean},
          {"std", std::sqrt(std::max(0.0, sq / n - mean * mean))},
          {"min", sorted.front()},
          {"median", crf::quantile(sorted, 0.5)},
          {"max", sorted.back()},
          {"effective_sample_size", sq > 0.0 ? sum * sum / sq : 0.0}};
}

void write_loss_trace(const fs::path& p, const std::vector<crf::EpochLoss>& trace) {
  std::ostringstream o;
  o << "epoch,wsl,ssl,total,holdout\n";
  for (const auto& e : trace) {
    o << e.epoch << "," << format_double(e.wsl) << "," << format_double(e.ssl) << "," << format_double(e.total) << ","
      << (std::isnan(e.holdout) ? std::string() : format_double(e.holdout)) << "\n";
  }
  io::write_text(p, o.str());
}

pipeline::FitResult train_and_write(const RunConfig& cfg, const HouseLayout& layout,
                                    const features::FeatureTable& walk,
                                    const std::vector<features::FeatureTable>& residents, const fs::path& dir,
                                    Manifest& m) {
  for (int y : walk.labels)
    if (y < 0 || y >= static_cast<int>(layout.rooms.size()))
      throw ValidationError("walkthrough label " + std::to_string(y) + " is not a room of the layout");
  auto fit = pipeline::fit(walk, residents, layout.rooms, layout.bedroom, cfg.pipeline);

  const auto mp = dir / "model.json";
  save_checkpoint(mp, fit.checkpoint);
  const auto lp = dir / "loss_trace.csv";
  write_loss_trace(lp, fit.loss_trace);
  const auto wp = dir / "weights.csv";
  io::write_weights_csv(wp, walk.window_start, fit.beta);
  json metrics;
  metrics["walkthrough_accuracy"] = fit.walkthrough_accuracy;
  metrics["walkthrough_windows"] = walk.rows();
  metrics["resident_windows"] = [&] {
    std::size_t n = 0;
    for (const auto& r : residents) n += r.rows();
    return n;
  }();
  metrics["beta"] = beta_summary(fit.beta);
  metrics["kmm"] = {{"enabled", cfg.pipeline.use_kmm},
                    {"bandwidth", fit.kmm_bandwidth},
                    {"epsilon", fit.kmm_tolerance}};
  metrics["gate_threshold"] = fit.checkpoint.model.gate_threshold;
  metrics["pseudo_labels"] = fit.pseudo_labels;
  metrics["epochs"] = fit.loss_trace.size();
  if (!fit.loss_trace.empty()) metrics["final_loss"] = fit.loss_trace.back().total;
  const auto jp = dir / "metrics.json";
  io::write_text(jp, metrics.dump(2) + "\n");
  for (const auto& p : {mp, lp, wp, jp}) m.output(p);
  return fit;
}

int cmd_train(const Common& c, const std::string& walk_path, const std::vector<std::string>& resident_paths,
              const std::string& layout_path, std::optional<int> epochs, bool complement, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (!layout_path.empty()) cfg.layout = layout_path;
  if (epochs) cfg.pipeline.train.epochs = *epochs;
  if (complement) cfg.pipeline.use_complement = true;
  cfg.validate();
  require_file(walk_path, "walkthrough");
  for (const auto& r : resident_paths) require_file(r, "resident input");
  const auto layout = load_layout(cfg);
  const auto walk = load_table(walk_path, cfg.pipeline.window);
  if (walk.labels.empty()) throw ValidationError("walkthrough input carries no labels");
  std::vector<features::FeatureTable> residents;
  for (const auto& r : resident_paths) residents.push_back(load_table(r, cfg.pipeline.window));

  const auto dir = prepare_out(c.out);
  Manifest m("train", cfg);
  m.input(walk_path);
  for (const auto& r : resident_paths) m.input(r);
  const auto fit = train_and_write(cfg, layout, walk, residents, dir, m);
  m.write(dir);
  out << "train: walkthrough accuracy " << format_double(fit.walkthrough_accuracy) << ", "
      << fit.loss_trace.size() << " epochs -> " << (dir / "model.json").string() << "\n";
  return kOk;
}

// ---- decode -----------------------------------------------------------------

std::vector<io::DecodeRow> to_rows(const pipeline::Decoded& d) {
  std::vector<io::DecodeRow> rows(d.labels.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = {d.window_start[i], d.labels[i], d.score[i], d.alpha[i]};
  return rows;
}

int cmd_decode(const Common& c, const std::string& model_path, const std::vector<std::string>& traces,
               std::ostream& out) {
  RunConfig cfg = resolve(c);
  cfg.validate();
  require_file(model_path, "model");
  for (const auto& t : traces) require_file(t, "trace");
  const auto ckpt = load_checkpoint(model_path);
  const auto dir = prepare_out(c.out);
  Manifest m("decode", cfg);
  m.input(model_path);
  json metrics = json::object();
  for (const auto& t : traces) {
    const auto table = load_table(t, ckpt.window);
    const auto decoded = pipeline::decode(ckpt, table);
    const auto p = dir / (base_name(t) + ".decode.csv");
    io::write_decode_csv(p, to_rows(decoded));
    m.input(t);
    m.output(p);
    json entry = {{"windows", decoded.labels.size()}};
    if (table.labels.size() == decoded.labels.size() && !decoded.labels.empty()) {
      entry["accuracy"] = pipeline::accuracy(decoded.labels, table.labels);
      entry["majority_baseline"] = pipeline::majority_baseline(table.labels, ckpt.model.classes());
    }
    metrics[base_name(t)] = entry;
    out << "decode: " << decoded.labels.size() << " windows -> " << p.string() << "\n";
  }
  const auto mp = dir / "decode_metrics.json";
  io::write_text(mp, metrics.dump(2) + "\n");
  m.output(mp);
  m.write(dir);
  return kOk;
}

// ---- analyse ----------------------------------------------------------------

struct Resident {
  std::string name;
  std::vector<double> times;
  std::vector<int> labels;
  std::vector<double> alpha;
};

Resident load_decode(const fs::path& path, int rooms) {
  require_file(path.string(), "decode file");
  const auto rows = io::read_decode_csv(path);
  if (rows.empty()) throw AlignmentError(path.string() + ": no decoded windows");
  Resident r;
  r.name = base_name(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i].window_start > rows[i - 1].window_start))
      throw AlignmentError(path.string() + ": window starts are not strictly increasing");
    if (rows[i].label < 0 || rows[i].label >= rooms)
      throw ValidationError(path.string() + ": label " + std::to_string(rows[i].label) + " outside the layout");
    r.times.push_back(rows[i].window_start);
    r.labels.push_back(rows[i].label);
    r.alpha.push_back(rows[i].alpha);
  }
  return r;
}

std::string hour_label(double h) { return format_double(h); }

/// Writes the behaviour bundle and returns a JSON summary of what was produced.
json analyse_and_write(const std::vector<Resident>& res, const HouseLayout& layout, const RunConfig& cfg,
                       const fs::path& dir, Manifest& m) {
  if (res.size() == 2) {
    const auto& a = res[0];
    const auto& b = res[1];
    if (a.times != b.times)
      throw AlignmentError("decode files '" + a.name + "' and '" + b.name + "' are not on the same window grid");
  }
  json summary;
  summary["residents"] = json::array();
  for (const auto& r : res) summary["residents"].push_back(r.name);
  const int rooms = static_cast<int>(layout.rooms.size());

  auto emit = [&](const std::string& name, const std::string& text) {
    const auto p = dir / name;
    io::write_text(p, text);
    m.output(p);
  };

  // Shadowing.
  if (res.size() == 2) {
    behaviour::OccupancyPair pair{res[0].times, res[0].labels, res[1].labels};
    const auto mi = behaviour::stratify_mi(pair, cfg.dayparts, cfg.lag);
    std::ostringstream o;
    o << "day,daypart,start_hour,end_hour,lag,mi_bits\n";
    std::map<int, std::vector<double>> per_part;
    int max_day = behaviour::day_of(pair.times.back());
    for (std::size_t p = 0; p < cfg.dayparts.count(); ++p)
      per_part[static_cast<int>(p)].assign(static_cast<std::size_t>(max_day + 1), std::nan(""));
    for (const auto& [key, v] : mi) {
      const auto p = static_cast<std::size_t>(key.part);
      o << key.day << "," << key.part << "," << hour_label(cfg.dayparts.boundaries[p]) << ","
        << hour_label(cfg.dayparts.boundaries[p + 1]) << "," << cfg.lag << "," << format_double(v) << "\n";
      per_part[key.part][static_cast<std::size_t>(key.day)] = v;
    }
    emit("mi_by_daypart.csv", o.str());
    std::vector<svg::Series> series;
    for (const auto& [p, ys] : per_part) {
      const auto pi = static_cast<std::size_t>(p);
      series.push_back({hour_label(cfg.dayparts.boundaries[pi]) + "-" + hour_label(cfg.dayparts.boundaries[pi + 1]) + " h", ys});
    }
    std::vector<std::string> days;
    for (int d = 0; d <= max_day; ++d) days.push_back("day " + std::to_string(d));
    emit("mi_by_daypart.svg", svg::line_chart("Mutual information by daypart", days, series, "bits"));
    const double overall = behaviour::mutual_information(pair.room_a, pair.room_b);
    summary["mi_overall_bits"] = overall;
    summary["mi_buckets"] = mi.size();
  }

  // Wandering: LZ complexity and per-room activity.
  {
    std::ostringstream o;
    const int segs = cfg.lz_segments_per_day;
    o << "resident,day,segment,lz76\n";
    std::vector<svg::Series> series;
    int max_day = 0;
    for (const auto& r : res) max_day = std::max(max_day, behaviour::day_of(r.times.back()));
    const auto slots = static_cast<std::size_t>((max_day + 1) * segs);
    for (const auto& r : res) {
      svg::Series s{r.name, std::vector<double>(slots, std::nan(""))};
      for (const auto& [key, lz] : behaviour::lz_by_segment(r.times, r.labels, segs)) {
        o << r.name << "," << key.first << "," << key.second << "," << lz << "\n";
        s.y[static_cast<std::size_t>(key.first * segs + key.second)] = static_cast<double>(lz);
      }
      series.push_back(std::move(s));
    }
    emit("lz_by_day.csv", o.str());
    std::vector<std::string> days;
    for (int d = 0; d <= max_day; ++d)
      for (int k = 0; k < segs; ++k)
        days.push_back(segs == 1 ? "day " + std::to_string(d) : "d" + std::to_string(d) + "s" + std::to_string(k));
    emit("lz_by_day.svg", svg::line_chart("Lempel-Ziv complexity by day", days, series, "phrases"));
  }
  {
    std::ostringstream o;
    o << "resident,day,room,activity\n";
    for (const auto& r : res) {
      const auto totals = behaviour::activity_totals(r.times, r.alpha, r.labels, rooms);
      std::vector<svg::Series> series;
      for (int k = 0; k < rooms; ++k) series.push_back({layout.rooms[static_cast<std::size_t>(k)], {}});
      std::vector<std::string> days;
      for (const auto& [day, act] : totals) {
        days.push_back("day " + std::to_string(day));
        for (int k = 0; k < rooms; ++k) {
          const double v = act.by_room[static_cast<std::size_t>(k)];
          o << r.name << "," << day << "," << layout.rooms[static_cast<std::size_t>(k)] << "," << format_double(v) << "\n";
          series[static_cast<std::size_t>(k)].y.push_back(v);
        }
        o << r.name << "," << day << ",total," << format_double(act.total) << "\n";
      }
      emit("activity_by_room_" + r.name + ".svg",
           svg::line_chart("Activity by room: " + r.name, days, series, "sum of alpha (g)"));
    }
    emit("activity_by_room.csv", o.str());
  }

  // Sleep disturbance.
  {
    std::ostringstream o;
    std::ostringstream skipped;
    o << "resident,day,windows,mean_alpha,var_alpha,fraction_outside_bedroom,bedroom_exits\n";
    skipped << "resident,day\n";
    std::vector<svg::Series> series;
    std::size_t max_nights = 0;
    json nights = json::object();
    for (const auto& r : res) {
      const auto rep = behaviour::sleep_disturbance(r.times, r.alpha, r.labels, layout.bedroom, cfg.night);
      svg::Series s{r.name, {}};
      double mean_sum = 0.0;
      for (const auto& n : rep.nights) {
        o << r.name << "," << n.day << "," << n.windows << "," << format_double(n.mean_alpha) << ","
          << format_double(n.var_alpha) << "," << format_double(n.fraction_outside_bedroom) << "," << n.bedroom_exits
          << "\n";
        s.y.push_back(n.mean_alpha);
        mean_sum += n.mean_alpha;
      }
      for (int d : rep.skipped_days) skipped << r.name << "," << d << "\n";
      max_nights = std::max(max_nights, s.y.size());
      nights[r.name] = rep.nights.empty() ? json(nullptr) : json(mean_sum / static_cast<double>(rep.nights.size()));
      series.push_back(std::move(s));
    }
    emit("sleep_by_night.csv", o.str());
    emit("sleep_skipped_days.csv", skipped.str());
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < max_nights; ++i) labels.push_back("night " + std::to_string(i + 1));
    emit("sleep_night_alpha.svg", svg::line_chart("Mean night activity", labels, series, "alpha (g)"));
    summary["mean_night_alpha"] = nights;
  }
  summary["sections"] = res.size() == 2 ? json::array({"mi", "lz", "activity", "sleep"})
                                        : json::array({"lz", "activity", "sleep"});
  const auto sp = dir / "analysis.json";
  io::write_text(sp, summary.dump(2) + "\n");
  m.output(sp);
  return summary;
}

int cmd_analyse(const Common& c, const std::vector<std::string>& decodes, const std::string& layout_path,
                std::optional<std::size_t> lag, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (!layout_path.empty()) cfg.layout = layout_path;
  if (lag) cfg.lag = *lag;
  cfg.validate();
  if (decodes.empty() || decodes.size() > 2) throw ValidationError("analyse takes one or two decode files");
  const auto layout = load_layout(cfg);
  std::vector<Resident> res;
  for (const auto& d : decodes) res.push_back(load_decode(d, static_cast<int>(layout.rooms.size())));
  const auto dir = prepare_out(c.out);
  Manifest m("analyse", cfg);
  for (const auto& d : decodes) m.input(d);
  const auto summary = analyse_and_write(res, layout, cfg, dir, m);
  m.write(dir);
  out << "analyse: sections " << summary["sections"].dump() << " -> " << dir.string() << "\n";
  return kOk;
}

// ---- report -----------------------------------------------------------------

int cmd_report(const Common& c, const std::string& layout_path, std::optional<int> days, std::optional<double> hours,
               std::optional<int> epochs, bool complement, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (!layout_path.empty()) cfg.layout = layout_path;
  if (days) cfg.days = *days;
  if (hours) cfg.hours = *hours;
  if (epochs) cfg.pipeline.train.epochs = *epochs;
  if (complement) cfg.pipeline.use_complement = true;
  cfg.validate();
  const auto layout = load_layout(cfg);
  const auto dir = prepare_out(c.out);
  Manifest m("report", cfg);

  // Raw traces stay in memory; `simulate` is the command that writes them.
  const auto sims = simulate_all(cfg, layout);
  const auto walk = features::featurize(sims.walkthrough, cfg.pipeline.window, true);
  std::vector<features::FeatureTable> tables;
  for (const auto& [name, trace] : sims.residents) tables.push_back(features::featurize(trace, cfg.pipeline.window, true));
  const auto fit = train_and_write(cfg, layout, walk, tables, dir, m);

  std::vector<Resident> res;
  std::ostringstream acc;
  acc << "resident,windows,accuracy,majority_baseline\n";
  std::ostringstream md_rows;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& name = sims.residents[i].first;
    const auto d = pipeline::decode(fit.checkpoint, tables[i]);
    const auto p = dir / (name + ".decode.csv");
    io::write_decode_csv(p, to_rows(d));
    m.output(p);
    const double a = pipeline::accuracy(d.labels, tables[i].labels);
    const double b = pipeline::majority_baseline(tables[i].labels, static_cast<int>(layout.rooms.size()));
    acc << name << "," << d.labels.size() << "," << format_double(a) << "," << format_double(b) << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "| %s | %zu | %.4f | %.4f |\n", name.c_str(), d.labels.size(), a, b);
    md_rows << line;
    res.push_back({name, d.window_start, d.labels, d.alpha});
  }
  const auto ap = dir / "accuracy.csv";
  io::write_text(ap, acc.str());
  m.output(ap);
  const auto summary = analyse_and_write(res, layout, cfg, dir, m);

  std::ostringstream md;
  char buf[200];
  md << "# roomloc report\n\n";
  md << "Seed " << cfg.seed << ", " << cfg.days << " simulated day(s), shift offset "
     << format_double(cfg.sim.shift_offset) << " dB.\n";
  md << "KMM " << (cfg.pipeline.use_kmm ? "on" : "off") << ", self-training "
     << (cfg.pipeline.train.use_ssl ? "on" : "off") << ", gate " << (cfg.pipeline.use_gate ? "on" : "off")
     << ", night pseudo-labels " << (cfg.pipeline.use_complement ? "on" : "off") << ".\n\n";
  md << "## Localisation\n\n| resident | windows | accuracy | majority baseline |\n|---|---|---|---|\n"
     << md_rows.str() << "\n";
  std::snprintf(buf, sizeof(buf), "Walkthrough accuracy %.4f; gate threshold %.5f g.\n\n",
                fit.walkthrough_accuracy, fit.checkpoint.model.gate_threshold);
  md << buf;
  md << "## Behaviour\n\n";
  if (summary.contains("mi_overall_bits")) {
    std::snprintf(buf, sizeof(buf), "Overall mutual information between residents: %.4f bits.\n",
                  summary["mi_overall_bits"].get<double>());
    md << buf;
  }
  for (const auto& [name, v] : summary["mean_night_alpha"].items()) {
    if (v.is_null()) continue;
    std::snprintf(buf, sizeof(buf), "Mean night activity of %s: %.5f g.\n", name.c_str(), v.get<double>());
    md << buf;
  }
  md << "\nSee the CSV and SVG files in this directory for per-day values.\n";
  const auto rp = dir / "summary.md";
  io::write_text(rp, md.str());
  m.output(rp);
  m.write(dir);
  out << md.str();
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Room-level localisation and behaviour analysis on synthetic smart-home data", "roomloc"};
  app.require_subcommand(1);

  Common sim_c, feat_c, train_c, dec_c, an_c, rep_c;
  std::string layout_path;
  std::vector<std::string> traces, residents, decodes;
  std::string walk_path, model_path;
  int days = 1, epochs = 0;
  double hours = 0.0;
  std::size_t lag = 0;
  bool complement = false;

  auto* s_sim = app.add_subcommand("simulate", "Write a walkthrough and two resident traces");
  add_common(s_sim, sim_c);
  s_sim->add_option("--layout", layout_path, "House layout JSON (default: bundled demo house)");
  auto* sim_days = s_sim->add_option("--days", days, "Simulated resident days");
  auto* sim_hours = s_sim->add_option("--hours", hours, "Keep only the first hours of each resident trace");

  auto* s_feat = app.add_subcommand("featurize", "Window traces into feature CSVs");
  add_common(s_feat, feat_c);
  s_feat->add_option("--trace", traces, "Trace JSONL file")->required();

  auto* s_train = app.add_subcommand("train", "Fit KMM weights and the CRF");
  add_common(s_train, train_c);
  s_train->add_option("--walkthrough", walk_path, "Labelled walkthrough trace or feature CSV")->required();
  s_train->add_option("--resident", residents, "Unlabelled resident trace or feature CSV");
  s_train->add_option("--layout", layout_path, "House layout JSON (default: bundled demo house)");
  auto* train_epochs = s_train->add_option("--epochs", epochs, "Training epochs");
  s_train->add_flag("--complement", complement, "Add night bedroom pseudo-labels");

  auto* s_dec = app.add_subcommand("decode", "Viterbi-decode traces with a trained model");
  add_common(s_dec, dec_c);
  s_dec->add_option("--model", model_path, "Model checkpoint")->required();
  s_dec->add_option("--trace", traces, "Trace JSONL or feature CSV")->required();

  auto* s_an = app.add_subcommand("analyse", "Behaviour metrics from one or two decode files");
  add_common(s_an, an_c);
  s_an->add_option("--decode", decodes, "Decode CSV (two for mutual information)")->required();
  s_an->add_option("--layout", layout_path, "House layout JSON (default: bundled demo house)");
  auto* an_lag = s_an->add_option("--lag", lag, "Lag in windows applied to the second resident");

  auto* s_rep = app.add_subcommand("report", "Simulate, train, decode and analyse in one go");
  add_common(s_rep, rep_c);
  s_rep->add_option("--layout", layout_path, "House layout JSON (default: bundled demo house)");
  auto* rep_days = s_rep->add_option("--days", days, "Simulated resident days");
  auto* rep_hours = s_rep->add_option("--hours", hours, "Keep only the first hours of each resident trace");
  auto* rep_epochs = s_rep->add_option("--epochs", epochs, "Training epochs");
  s_rep->add_flag("--complement", complement, "Add night bedroom pseudo-labels");

  auto given = [](CLI::Option* o, auto v) { return o->count() > 0 ? std::optional(v) : std::nullopt; };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*s_sim) return cmd_simulate(sim_c, layout_path, given(sim_days, days), given(sim_hours, hours), out);
    if (*s_feat) return cmd_featurize(feat_c, traces, out);
    if (*s_train)
      return cmd_train(train_c, walk_path, residents, layout_path, given(train_epochs, epochs), complement, out);
    if (*s_dec) return cmd_decode(dec_c, model_path, traces, out);
    if (*s_an) return cmd_analyse(an_c, decodes, layout_path, given(an_lag, lag), out);
    if (*s_rep)
      return cmd_report(rep_c, layout_path, given(rep_days, days), given(rep_hours, hours),
                        given(rep_epochs, epochs), complement, out);
  } catch (const TrainingDiverged& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const ModelMismatch& e) {
    err << "error: model/data mismatch: " << e.what() << "\n";
    return kMismatch;
  } catch (const AlignmentError& e) {
    err << "error: analysis alignment: " << e.what() << "\n";
    return kAlignment;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace roomloc::cli
