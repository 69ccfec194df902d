#include "roomloc/checkpoint.hpp"

#include <json.hpp>

#include "roomloc/errors.hpp"
#include "roomloc/io.hpp"

namespace roomloc {

using nlohmann::json;

namespace {

template <typename Vec>
json to_array(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& p = ckpt.model.emission;
  const auto& s = p.shape();
  json j;
  j["format"] = kCheckpointFormat;
  j["shape"] = {{"input", s.input}, {"hidden", s.hidden}, {"hidden_layers", s.hidden_layers}, {"output", s.output}};
  j["theta"] = to_array(p.theta);
  j["running_mean"] = json::array();
  j["running_var"] = json::array();
  for (std::size_t l = 0; l < p.running_mean.size(); ++l) {
    j["running_mean"].push_back(to_array(p.running_mean[l]));
    j["running_var"].push_back(to_array(p.running_var[l]));
  }
  j["log_transition"] = json::array();
  for (Eigen::Index r = 0; r < ckpt.model.log_transition.rows(); ++r)
    j["log_transition"].push_back(to_array(ckpt.model.log_transition.row(r)));
  j["gate_threshold"] = ckpt.model.gate_threshold;
  j["scaler"] = {{"mean", to_array(ckpt.scaler.mean)}, {"scale", to_array(ckpt.scaler.scale)}};
  j["window"] = {{"length", ckpt.window.length}, {"overlap", ckpt.window.overlap}};
  j["gateways"] = ckpt.gateways;
  j["rooms"] = ckpt.rooms;
  j["bedroom"] = ckpt.bedroom;
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  Checkpoint c;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != kCheckpointFormat)
      throw ModelMismatch("unsupported checkpoint format '" + j.value("format", std::string()) + "'");
    nn::MlpShape shape;
    shape.input = j.at("shape").at("input").get<int>();
    shape.hidden = j.at("shape").at("hidden").get<int>();
    shape.hidden_layers = j.at("shape").at("hidden_layers").get<int>();
    shape.output = j.at("shape").at("output").get<int>();
    nn::MlpParams params(shape);
    const Eigen::VectorXd theta = vector_from(j.at("theta"));
    if (theta.size() != params.theta.size()) throw ModelMismatch("checkpoint: parameter count does not match shape");
    params.theta = theta;
    const auto& rm = j.at("running_mean");
    const auto& rv = j.at("running_var");
    if (rm.size() != params.running_mean.size() || rv.size() != params.running_var.size())
      throw ModelMismatch("checkpoint: running statistics do not match shape");
    for (std::size_t l = 0; l < rm.size(); ++l) {
      params.running_mean[l] = vector_from(rm[l]);
      params.running_var[l] = vector_from(rv[l]);
      if (params.running_mean[l].size() != shape.hidden || params.running_var[l].size() != shape.hidden)
        throw ModelMismatch("checkpoint: running statistics do not match shape");
    }
    c.model.emission = std::move(params);
    const auto& lt = j.at("log_transition");
    const auto k = static_cast<Eigen::Index>(lt.size());
    if (k != shape.output) throw ModelMismatch("checkpoint: transition size does not match class count");
    c.model.log_transition.resize(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      if (static_cast<Eigen::Index>(lt[static_cast<std::size_t>(r)].size()) != k)
        throw ModelMismatch("checkpoint: transition matrix is not square");
      for (Eigen::Index col = 0; col < k; ++col)
        c.model.log_transition(r, col) = lt[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)].get<double>();
    }
    c.model.gate_threshold = j.at("gate_threshold").get<double>();
    c.scaler.mean = vector_from(j.at("scaler").at("mean")).transpose();
    c.scaler.scale = vector_from(j.at("scaler").at("scale")).transpose();
    if (c.scaler.mean.size() != shape.input || c.scaler.scale.size() != shape.input)
      throw ModelMismatch("checkpoint: scaler width does not match input");
    c.window.length = j.at("window").at("length").get<double>();
    c.window.overlap = j.at("window").at("overlap").get<double>();
    c.gateways = j.at("gateways").get<std::size_t>();
    c.rooms = j.at("rooms").get<std::vector<std::string>>();
    c.bedroom = j.at("bedroom").get<int>();
    if (static_cast<int>(c.rooms.size()) != shape.output)
      throw ModelMismatch("checkpoint: room list does not match class count");
  } catch (const json::exception& e) {
    throw ModelMismatch(std::string("malformed checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_text(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ValidationError("checkpoint not found: " + path.string());
  return checkpoint_from_json(io::read_text(path));
}

}  // namespace roomloc
