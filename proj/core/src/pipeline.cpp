#include "roomloc/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "roomloc/errors.hpp"
#include "roomloc/rng.hpp"

namespace roomloc::pipeline {

void PipelineConfig::validate() const {
  window.validate();
  if (!(gate_quantile >= 0.0 && gate_quantile <= 1.0)) throw ValidationError("gate_quantile must lie in [0, 1]");
  if (gate_threshold && !(*gate_threshold >= 0.0)) throw ValidationError("gate_threshold must be >= 0");
  if (!(wear_floor >= 0.0)) throw ValidationError("wear_floor must be >= 0");
  if (!std::isfinite(transition_offdiag)) throw ValidationError("transition_offdiag must be finite");
  if (!(kmm.upper_bound > 0.0)) throw ValidationError("kmm upper bound must be positive");
  if (kmm.tolerance && !(*kmm.tolerance >= 0.0 && *kmm.tolerance < 1.0))
    throw ValidationError("kmm tolerance must lie in [0, 1)");
  if (kmm.bandwidth && !(*kmm.bandwidth > 0.0)) throw ValidationError("kmm bandwidth must be positive");
  if (kmm.max_test_points == 0) throw ValidationError("kmm max_test_points must be positive");
  if (train.epochs < 0) throw ValidationError("epochs must be >= 0");
  if (train.batch_size < 2) throw ValidationError("batch_size must be >= 2");
  if (!(train.lr > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(train.ssl_weight >= 0.0)) throw ValidationError("ssl_weight must be >= 0");
  if (train.ssl_chunk_windows < 2) throw ValidationError("ssl_chunk_windows must be >= 2");
  if (!(train.holdout_fraction >= 0.0 && train.holdout_fraction < 1.0))
    throw ValidationError("holdout_fraction must lie in [0, 1)");
}

namespace {

Eigen::MatrixXd stack_rows(const std::vector<Eigen::MatrixXd>& parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

int argmax_row(const Eigen::MatrixXd& m, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j)
    if (m(r, j) > m(r, best)) best = j;
  return static_cast<int>(best);
}

}  // namespace

FitResult fit(const features::FeatureTable& walkthrough, const std::vector<features::FeatureTable>& residents,
              const std::vector<std::string>& rooms, int bedroom, const PipelineConfig& config) {
  config.validate();
  const int c = static_cast<int>(rooms.size());
  if (c < 1) throw ValidationError("fit: no rooms");
  if (bedroom < 0 || bedroom >= c) throw ValidationError("fit: bedroom index out of range");
  if (walkthrough.rows() < 2) throw ValidationError("fit: walkthrough has fewer than two windows");
  if (walkthrough.labels.size() != walkthrough.rows()) throw ValidationError("fit: walkthrough windows are unlabeled");
  for (int y : walkthrough.labels)
    if (y < 0 || y >= c) throw ValidationError("fit: walkthrough label out of range");
  for (const auto& r : residents) {
    if (r.gateways != walkthrough.gateways || r.x.cols() != walkthrough.x.cols())
      throw ModelMismatch("fit: resident trace has a different gateway count than the walkthrough");
  }

  const Rng root(config.seed);
  const auto scaler = features::Scaler::fit(walkthrough.x);
  const Eigen::MatrixXd xw = scaler.apply(walkthrough.x);
  const auto n_walk = static_cast<std::size_t>(xw.rows());

  std::vector<crf::UnlabeledSequence> unlabeled;
  std::vector<Eigen::MatrixXd> resident_x;
  for (const auto& r : residents) {
    if (r.rows() == 0) continue;
    crf::UnlabeledSequence s;
    s.x = scaler.apply(r.x);
    s.alpha = r.alpha;
    s.clock = r.window_start;
    resident_x.push_back(s.x);
    unlabeled.push_back(std::move(s));
  }

  FitResult out;
  out.beta.assign(n_walk, 1.0);
  if (config.use_kmm && !resident_x.empty()) {
    auto kcfg = config.kmm;
    kcfg.seed = root.fork("kmm").next_u64();
    const auto est = kmm::estimate_weights(xw, stack_rows(resident_x, xw.cols()), kcfg);
    out.beta.assign(est.weights.beta.data(), est.weights.beta.data() + est.weights.beta.size());
    out.kmm_bandwidth = est.bandwidth;
    out.kmm_tolerance = est.tolerance;
  }

  double gate = 0.0;
  if (config.use_gate) gate = config.gate_threshold ? *config.gate_threshold : crf::quantile(walkthrough.alpha, config.gate_quantile);

  Eigen::MatrixXd x_pool = xw;
  std::vector<int> y_pool = walkthrough.labels;
  std::vector<double> beta_pool = out.beta;
  if (config.use_complement && !unlabeled.empty()) {
    crf::ComplementConfig cc;
    cc.bedroom = bedroom;
    cc.night = config.night;
    cc.wear_floor = config.wear_floor;
    cc.max_labels = config.max_pseudo_labels > 0 ? config.max_pseudo_labels : n_walk / static_cast<std::size_t>(c);
    cc.seed = root.fork("complement").next_u64();
    const auto pseudo = crf::complement_labels(unlabeled, cc);
    out.pseudo_labels = pseudo.size();
    if (pseudo.size() > 0) {
      x_pool = stack_rows({xw, pseudo.x}, xw.cols());
      y_pool.insert(y_pool.end(), pseudo.labels.labels.begin(), pseudo.labels.labels.end());
      beta_pool.insert(beta_pool.end(), pseudo.size(), 1.0);
    }
  }

  auto model = crf::make_model(static_cast<int>(xw.cols()), c, gate, root.fork("init").next_u64(),
                               config.transition_offdiag);
  auto tcfg = config.train;
  tcfg.seed = root.fork("train").next_u64();
  const std::vector<crf::UnlabeledSequence> none;
  auto trained = crf::train(std::move(model), x_pool, y_pool, beta_pool,
                            tcfg.use_ssl ? std::span<const crf::UnlabeledSequence>(unlabeled)
                                         : std::span<const crf::UnlabeledSequence>(none),
                            tcfg);

  const Eigen::MatrixXd em = crf::emissions(trained.model, xw);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < em.rows(); ++i)
    if (argmax_row(em, i) == walkthrough.labels[static_cast<std::size_t>(i)]) ++hits;
  out.walkthrough_accuracy = static_cast<double>(hits) / static_cast<double>(n_walk);
  out.loss_trace = std::move(trained.trace);

  out.checkpoint.model = std::move(trained.model);
  out.checkpoint.scaler = scaler;
  out.checkpoint.window = config.window;
  out.checkpoint.gateways = walkthrough.gateways;
  out.checkpoint.rooms = rooms;
  out.checkpoint.bedroom = bedroom;
  return out;
}

Decoded decode(const Checkpoint& ckpt, const features::FeatureTable& table) {
  if (table.gateways != ckpt.gateways)
    throw ModelMismatch("decode: trace has " + std::to_string(table.gateways) + " gateways, model expects " +
                        std::to_string(ckpt.gateways));
  if (table.x.cols() != ckpt.scaler.mean.size())
    throw ModelMismatch("decode: feature width " + std::to_string(table.x.cols()) + " does not match model input " +
                        std::to_string(ckpt.scaler.mean.size()));
  Decoded out;
  out.window_start = table.window_start;
  out.alpha = table.alpha;
  if (table.rows() == 0) return out;
  const Eigen::MatrixXd em = crf::emissions(ckpt.model, ckpt.scaler.apply(table.x));
  const crf::ChainInput in{em, ckpt.model.log_transition, table.alpha, ckpt.model.gate_threshold};
  out.labels = crf::viterbi(in).path.labels;
  const Eigen::MatrixXd post = crf::marginals(in);
  out.score.resize(out.labels.size());
  for (std::size_t t = 0; t < out.labels.size(); ++t) out.score[t] = post(static_cast<Eigen::Index>(t), out.labels[t]);
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (truth.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double majority_baseline(const std::vector<int>& truth, int classes) {
  if (truth.empty()) throw std::invalid_argument("majority_baseline: empty input");
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
  for (int y : truth) {
    if (y < 0 || y >= classes) throw std::invalid_argument("majority_baseline: label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(truth.size());
}

}  // namespace roomloc::pipeline
