#include "roomloc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "roomloc/errors.hpp"
#include "roomloc/rng.hpp"

namespace roomloc::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  // -0 would not survive JSON parsers that read it as an integer.
  if (v == 0.0) v = 0.0;
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_digest(const std::filesystem::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(read_text(path))));
  return buf;
}

HouseLayout parse_layout(const std::string& json_text) {
  HouseLayout h;
  try {
    const json j = json::parse(json_text);
    for (const auto& r : j.at("rooms")) {
      h.rooms.push_back(r.at("name").get<std::string>());
      h.room_positions.push_back({r.at("x").get<double>(), r.at("y").get<double>()});
    }
    for (const auto& g : j.at("gateways")) h.gateway_positions.push_back({g.at("x").get<double>(), g.at("y").get<double>()});
    for (const auto& e : j.at("adjacency")) {
      h.adjacency.emplace_back(h.room_index(e.at(0).get<std::string>()), h.room_index(e.at(1).get<std::string>()));
    }
    h.bedroom = j.contains("bedroom") ? h.room_index(j.at("bedroom").get<std::string>()) : 0;
    h.room_radius = j.value("room_radius", 1.2);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed layout: ") + e.what());
  }
  h.validate();
  return h;
}

HouseLayout read_layout(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("layout file not found: " + path.string());
  return parse_layout(read_text(path));
}

std::string layout_to_json(const HouseLayout& h) {
  json j;
  j["rooms"] = json::array();
  for (std::size_t i = 0; i < h.rooms.size(); ++i)
    j["rooms"].push_back({{"name", h.rooms[i]}, {"x", h.room_positions[i].x}, {"y", h.room_positions[i].y}});
  j["gateways"] = json::array();
  for (const auto& g : h.gateway_positions) j["gateways"].push_back({{"x", g.x}, {"y", g.y}});
  j["adjacency"] = json::array();
  for (const auto& [a, b] : h.adjacency) j["adjacency"].push_back({h.rooms[a], h.rooms[b]});
  j["bedroom"] = h.rooms.at(static_cast<std::size_t>(h.bedroom));
  j["room_radius"] = h.room_radius;
  return j.dump(2) + "\n";
}

namespace {

void append_trace(std::ostream& out, const sim::GroundTruthTrace& trace) {
  const std::string persona(sim::persona_name(trace.persona));
  out << R"({"kind":"meta","duration":)" << format_double(trace.duration) << R"(,"gateways":)"
      << trace.gateways << R"(,"persona":")" << persona << "\"}\n";
  // Interleave by time so the file reads as one chronological stream.
  std::size_t ai = 0;
  auto flush_accel = [&](double until) {
    for (; ai < trace.accel.size() && trace.accel[ai].t < until; ++ai) {
      const auto& s = trace.accel[ai];
      out << R"({"t":)" << format_double(s.t) << R"(,"kind":"accel","x":)" << format_double(s.x) << R"(,"y":)"
          << format_double(s.y) << R"(,"z":)" << format_double(s.z) << R"(,"label":)" << trace.label_at(s.t)
          << "}\n";
    }
  };
  for (const auto& s : trace.rssi) {
    flush_accel(s.t);
    out << R"({"t":)" << format_double(s.t) << R"(,"kind":"rssi","gateway":)" << s.gateway
        << R"(,"value":)" << (s.value ? format_double(*s.value) : std::string("null")) << R"(,"label":)"
        << trace.label_at(s.t) << "}\n";
  }
  flush_accel(std::numeric_limits<double>::infinity());
}

}  // namespace

std::string trace_to_jsonl(const sim::GroundTruthTrace& trace) {
  std::ostringstream ss;
  append_trace(ss, trace);
  return ss.str();
}

void write_trace(const std::filesystem::path& path, const sim::GroundTruthTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  append_trace(out, trace);
}

sim::GroundTruthTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("trace file not found: " + path.string());
  sim::GroundTruthTrace trace;
  bool have_meta = false;
  std::vector<std::pair<double, int>> label_points;
  std::string line;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "meta") {
        trace.duration = j.at("duration").get<double>();
        trace.gateways = j.at("gateways").get<std::size_t>();
        trace.persona = sim::persona_from_name(j.at("persona").get<std::string>());
        have_meta = true;
        continue;
      }
      const double t = j.at("t").get<double>();
      if (j.contains("label") && !j.at("label").is_null()) label_points.emplace_back(t, j.at("label").get<int>());
      if (kind == "rssi") {
        sim::RssiSample s;
        s.t = t;
        s.gateway = j.at("gateway").get<int>();
        if (!j.at("value").is_null()) s.value = j.at("value").get<double>();
        trace.rssi.push_back(s);
      } else if (kind == "accel") {
        trace.accel.push_back({t, j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()});
      } else {
        throw ValidationError("unknown record kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
  if (!have_meta) throw ValidationError(path.string() + ": missing meta record");
  std::stable_sort(trace.accel.begin(), trace.accel.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  std::stable_sort(trace.rssi.begin(), trace.rssi.end(), [](const auto& a, const auto& b) {
    return a.t < b.t || (a.t == b.t && a.gateway < b.gateway);
  });
  std::stable_sort(label_points.begin(), label_points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t, room] : label_points) {
    if (trace.labels.empty()) {
      trace.labels.push_back({0.0, t, room});
    } else if (trace.labels.back().room != room) {
      trace.labels.back().end = t;
      trace.labels.push_back({t, t, room});
    }
  }
  if (!trace.labels.empty()) trace.labels.back().end = trace.duration;
  return trace;
}

namespace {

const char* kStatNames[features::kFeaturesPerGateway] = {"mean", "std", "max", "min", "diff", "missing"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError(where + ": cannot parse number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError(where + ": cannot parse integer '" + s + "'");
  return v;
}

}  // namespace

void write_feature_csv(const std::filesystem::path& path, const features::FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << "window_start";
  for (std::size_t g = 0; g < table.gateways; ++g)
    for (std::size_t k = 0; k < features::kFeaturesPerGateway; ++k) out << ",g" << g << "_" << kStatNames[k];
  out << ",alpha";
  const bool labels = !table.labels.empty();
  if (labels) out << ",label";
  out << "\n";
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out << format_double(table.window_start[i]);
    for (Eigen::Index j = 0; j < table.x.cols(); ++j) out << "," << format_double(table.x(static_cast<Eigen::Index>(i), j));
    out << "," << format_double(table.alpha[i]);
    if (labels) out << "," << table.labels[i];
    out << "\n";
  }
}

features::FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("feature file not found: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty feature file");
  const auto header = split_csv(line);
  if (header.size() < 2 || header.front() != "window_start")
    throw ValidationError(path.string() + ": bad feature header");
  const bool labels = header.back() == "label";
  const std::size_t d = header.size() - 2 - (labels ? 1 : 0);
  if (d % features::kFeaturesPerGateway != 0) throw ValidationError(path.string() + ": bad feature count");

  features::FeatureTable t;
  t.gateways = d / features::kFeaturesPerGateway;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != header.size()) throw ValidationError(where + ": wrong field count");
    t.window_start.push_back(parse_double(f[0], where));
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = parse_double(f[1 + j], where);
    rows.push_back(std::move(row));
    t.alpha.push_back(parse_double(f[1 + d], where));
    if (labels) t.labels.push_back(parse_int(f[2 + d], where));
  }
  t.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) t.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

void write_decode_csv(const std::filesystem::path& path, const std::vector<DecodeRow>& rows) {
  std::ostringstream out;
  out << "window_start,label,score,alpha\n";
  for (const auto& r : rows) {
    out << format_double(r.window_start) << "," << r.label << "," << format_double(r.score) << ","
        << format_double(r.alpha) << "\n";
  }
  write_text(path, out.str());
}

std::vector<DecodeRow> read_decode_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("decode file not found: " + path.string());
  std::string line;
  std::vector<DecodeRow> rows;
  if (!std::getline(in, line)) return rows;
  if (line != "window_start,label,score,alpha") throw ValidationError(path.string() + ": bad decode header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 4) throw ValidationError(where + ": wrong field count");
    rows.push_back({parse_double(f[0], where), parse_int(f[1], where), parse_double(f[2], where),
                    parse_double(f[3], where)});
  }
  return rows;
}

void write_weights_csv(const std::filesystem::path& path, const std::vector<double>& window_start,
                       const std::vector<double>& beta) {
  if (window_start.size() != beta.size()) throw std::invalid_argument("write_weights_csv: length mismatch");
  std::ostringstream out;
  out << "window_start,beta\n";
  for (std::size_t i = 0; i < beta.size(); ++i) out << format_double(window_start[i]) << "," << format_double(beta[i]) << "\n";
  write_text(path, out.str());
}

}  // namespace roomloc::io
