#include "roomloc/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "roomloc/errors.hpp"
#include "roomloc/rng.hpp"

namespace roomloc::crf {

CrfModel make_model(int input_dim, int classes, double gate_threshold, std::uint64_t seed,
                    double offdiag, int hidden, int hidden_layers) {
  if (classes < 1) throw std::invalid_argument("make_model: need at least one class");
  Rng rng = Rng(seed).fork("emission-init");
  CrfModel m;
  m.emission = nn::MlpParams::init({input_dim, hidden, hidden_layers, classes}, rng);
  m.log_transition = Eigen::MatrixXd::Constant(classes, classes, offdiag);
  m.log_transition.diagonal().setZero();
  m.gate_threshold = gate_threshold;
  return m;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

/// Row-wise softmax cross-entropy; returns per-row losses and fills probs.
Eigen::VectorXd cross_entropy(const Eigen::MatrixXd& scores, std::span<const int> y,
                              Eigen::MatrixXd& probs) {
  const Eigen::Index n = scores.rows();
  Eigen::VectorXd ce(n);
  probs.resize(n, scores.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = scores.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (scores.row(i).array() - m).exp().matrix();
    const double z = e.sum();
    probs.row(i) = e / z;
    ce(i) = m + std::log(z) - scores(i, y[static_cast<std::size_t>(i)]);
  }
  return ce;
}

void check_labels(std::span<const int> y, int classes) {
  for (int v : y)
    if (v < 0 || v >= classes) throw std::invalid_argument("label " + std::to_string(v) + " out of range");
}

}  // namespace

LossAndGradient loss_wsl(CrfModel& model, const Eigen::MatrixXd& x, std::span<const int> y,
                         std::span<const double> beta) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n || beta.size() != n)
    throw std::invalid_argument("loss_wsl: features, labels and weights differ in length");
  check_labels(y, model.classes());

  nn::ForwardCache cache;
  const Eigen::MatrixXd scores = nn::forward(model.emission, x, nn::Mode::kTrain, &cache);
  Eigen::MatrixXd probs;
  const Eigen::VectorXd ce = cross_entropy(scores, y, probs);

  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(n));
  const double total = b.sum();
  LossAndGradient out;
  if (!(total > 0.0)) {
    out.grad_theta = Eigen::VectorXd::Zero(model.emission.theta.size());
    return out;
  }
  out.loss = b.dot(ce) / total;
  Eigen::MatrixXd d = probs;
  for (std::size_t i = 0; i < n; ++i) d(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
  d.array().colwise() *= (b / total).array();
  out.grad_theta = nn::backward(model.emission, cache, d);
  return out;
}

SslStep loss_ssl(const CrfModel& model, const Eigen::MatrixXd& x, std::span<const double> alpha) {
  if (x.rows() < 2) throw std::invalid_argument("loss_ssl: need a sequence of at least 2 windows");
  nn::ForwardCache cache;
  const Eigen::MatrixXd em = nn::forward_eval(model.emission, x, &cache);
  const ChainInput in{em, model.log_transition, alpha, model.gate_threshold};
  SslStep step;
  step.targets = viterbi(in).path;
  const NllGradient g = sequence_nll_gradient(in, step.targets.labels);
  step.value.loss = g.nll;
  step.value.grad_theta = nn::backward(model.emission, cache, g.d_emissions);
  step.value.grad_transition = g.d_transition;
  return step;
}

bool NightSpan::contains(double t) const {
  if (empty()) return false;
  double h = std::fmod(t, 86400.0) / 3600.0;
  if (h < 0.0) h += 24.0;
  if (start_hour < end_hour) return h >= start_hour && h < end_hour;
  return h >= start_hour || h < end_hour;
}

PseudoLabels complement_labels(std::span<const UnlabeledSequence> sequences, const ComplementConfig& config) {
  std::vector<std::pair<std::size_t, std::size_t>> picked;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& seq = sequences[s];
    if (seq.clock.size() != static_cast<std::size_t>(seq.x.rows()) || seq.alpha.size() != seq.clock.size())
      throw std::invalid_argument("complement_labels: sequence fields differ in length");
    for (std::size_t i = 0; i < seq.clock.size(); ++i) {
      if (config.night.contains(seq.clock[i]) && seq.alpha[i] > config.wear_floor) picked.emplace_back(s, i);
    }
  }
  if (picked.size() > config.max_labels) {
    Rng rng(config.seed);
    std::vector<std::size_t> idx(picked.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < config.max_labels; ++i) {
      std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(idx.size() - i))]);
    }
    idx.resize(config.max_labels);
    std::sort(idx.begin(), idx.end());
    std::vector<std::pair<std::size_t, std::size_t>> kept;
    kept.reserve(idx.size());
    for (auto i : idx) kept.push_back(picked[i]);
    picked = std::move(kept);
  }

  PseudoLabels out;
  const Eigen::Index d = sequences.empty() ? 0 : sequences.front().x.cols();
  out.x.resize(static_cast<Eigen::Index>(picked.size()), d);
  out.labels.labels.assign(picked.size(), config.bedroom);
  out.origin = picked;
  for (std::size_t r = 0; r < picked.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) =
        sequences[picked[r].first].x.row(static_cast<Eigen::Index>(picked[r].second));
  }
  return out;
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

double weighted_eval_ce(const CrfModel& model, const Eigen::MatrixXd& x, std::span<const int> y,
                        std::span<const double> beta) {
  const Eigen::MatrixXd scores = nn::forward_eval(model.emission, x);
  Eigen::MatrixXd probs;
  const Eigen::VectorXd ce = cross_entropy(scores, y, probs);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += beta[i] * ce(static_cast<Eigen::Index>(i));
    den += beta[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

void require_finite(double v, const char* what, int epoch) {
  if (!std::isfinite(v))
    throw TrainingDiverged(std::string("training diverged: non-finite ") + what + " at epoch " +
                           std::to_string(epoch));
}

}  // namespace

TrainResult train(CrfModel model, const Eigen::MatrixXd& x, std::span<const int> y,
                  std::span<const double> beta, std::span<const UnlabeledSequence> unlabeled,
                  const TrainConfig& config) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n || beta.size() != n)
    throw std::invalid_argument("train: features, labels and weights differ in length");
  if (n < 2) throw std::invalid_argument("train: need at least two labelled windows");
  if (x.cols() != model.emission.shape().input)
    throw std::invalid_argument("train: feature count does not match the model");
  if (config.batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  check_labels(y, model.classes());

  Rng rng = Rng(config.seed).fork("train");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Optional held-out split for early stopping.
  std::vector<std::size_t> holdout;
  if (config.early_stop_patience > 0 && config.holdout_fraction > 0.0) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto h = std::min(n - 2, static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(n)));
    holdout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
    order.erase(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
    std::sort(holdout.begin(), holdout.end());
    std::sort(order.begin(), order.end());
  }
  Eigen::MatrixXd hx = gather_rows(x, holdout);
  std::vector<int> hy;
  std::vector<double> hb;
  for (auto i : holdout) {
    hy.push_back(y[i]);
    hb.push_back(beta[i]);
  }

  std::size_t ssl_total = 0;
  for (const auto& s : unlabeled) {
    if (s.x.cols() != x.cols() || s.alpha.size() != static_cast<std::size_t>(s.x.rows()))
      throw std::invalid_argument("train: unlabeled sequence has inconsistent shape");
    if (s.x.rows() >= 2) ssl_total += static_cast<std::size_t>(s.x.rows());
  }
  const bool ssl_active = config.use_ssl && ssl_total > 0;

  nn::AdamState theta_opt(model.emission.theta.size(), config.lr);
  nn::AdamState trans_opt(model.log_transition.size(), config.lr);

  TrainResult result;
  CrfModel best = model;
  double best_holdout = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochLoss rec;
    rec.epoch = epoch;
    double wsl_num = 0.0, wsl_den = 0.0;
    for (std::size_t start = 0; start < order.size();) {
      std::size_t stop = std::min(order.size(), start + config.batch_size);
      // Fold a trailing single row into this batch; batch-norm needs >= 2.
      if (order.size() - stop == 1) stop = order.size();
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      start = stop;
      if (idx.size() < 2) continue;
      const Eigen::MatrixXd bx = gather_rows(x, idx);
      std::vector<int> by(idx.size());
      std::vector<double> bb(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        by[k] = y[idx[k]];
        bb[k] = beta[idx[k]];
      }
      const double bsum = std::accumulate(bb.begin(), bb.end(), 0.0);
      if (!(bsum > 0.0)) continue;
      const LossAndGradient l = loss_wsl(model, bx, by, bb);
      require_finite(l.loss, "supervised loss", epoch);
      nn::adam_step(model.emission.theta, l.grad_theta, theta_opt);
      wsl_num += l.loss * bsum;
      wsl_den += bsum;
    }
    rec.wsl = wsl_den > 0.0 ? wsl_num / wsl_den : 0.0;

    if (ssl_active && epoch >= config.ssl_warmup_epochs) {
      double ssl_sum = 0.0;
      int chunks = 0;
      for (int c = 0; c < config.ssl_chunks_per_epoch; ++c) {
        // Pick a sequence proportionally to its length, then a chunk in it.
        auto pick = static_cast<std::size_t>(rng.below(ssl_total));
        std::size_t s = 0;
        for (; s < unlabeled.size(); ++s) {
          const auto len = static_cast<std::size_t>(unlabeled[s].x.rows());
          if (len < 2) continue;
          if (pick < len) break;
          pick -= len;
        }
        const auto& seq = unlabeled[s];
        const auto len = static_cast<std::size_t>(seq.x.rows());
        const std::size_t chunk = std::clamp<std::size_t>(config.ssl_chunk_windows, 2, len);
        const auto begin = static_cast<std::size_t>(rng.below(len - chunk + 1));
        const Eigen::MatrixXd cx = seq.x.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(chunk));
        const std::span<const double> ca(seq.alpha.data() + begin, chunk);

        const SslStep step = loss_ssl(model, cx, ca);
        require_finite(step.value.loss, "self-training loss", epoch);
        // Per-window normalisation keeps chunk length from setting the step size.
        const double scale = config.ssl_weight / static_cast<double>(chunk);
        nn::adam_step(model.emission.theta, scale * step.value.grad_theta, theta_opt);
        Eigen::VectorXd gt = Eigen::Map<const Eigen::VectorXd>(step.value.grad_transition.data(),
                                                               step.value.grad_transition.size());
        Eigen::VectorXd tt = Eigen::Map<const Eigen::VectorXd>(model.log_transition.data(), model.log_transition.size());
        nn::adam_step(tt, scale * gt, trans_opt);
        Eigen::Map<Eigen::VectorXd>(model.log_transition.data(), model.log_transition.size()) = tt;
        ssl_sum += step.value.loss / static_cast<double>(chunk);
        ++chunks;
      }
      rec.ssl = chunks > 0 ? ssl_sum / chunks : 0.0;
    }
    rec.total = rec.wsl + config.ssl_weight * rec.ssl;
    require_finite(rec.total, "epoch loss", epoch);

    if (!holdout.empty()) {
      rec.holdout = weighted_eval_ce(model, hx, hy, hb);
      if (rec.holdout < best_holdout) {
        best_holdout = rec.holdout;
        best = model;
        since_best = 0;
      } else if (++since_best >= config.early_stop_patience) {
        result.trace.push_back(rec);
        break;
      }
    }
    result.trace.push_back(rec);
  }
  if (!holdout.empty() && std::isfinite(best_holdout)) model = std::move(best);
  result.model = std::move(model);
  return result;
}

}  // namespace roomloc::crf
