#include "roomloc/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace roomloc::crf {

Eigen::MatrixXd gated_transition(const Eigen::MatrixXd& log_transition, double alpha,
                                 double gate_threshold) {
  if (alpha >= gate_threshold) return log_transition;
  Eigen::MatrixXd stay = Eigen::MatrixXd::Constant(log_transition.rows(), log_transition.cols(), kForbidden);
  stay.diagonal().setZero();
  return stay;
}

namespace {

void check(const ChainInput& in) {
  const auto T = in.emissions.rows();
  const auto c = in.emissions.cols();
  if (T == 0) throw std::invalid_argument("crf: empty sequence");
  if (c == 0) throw std::invalid_argument("crf: no classes");
  if (in.log_transition.rows() != c || in.log_transition.cols() != c)
    throw std::invalid_argument("crf: transition matrix does not match the class count");
  if (static_cast<Eigen::Index>(in.alpha.size()) != T)
    throw std::invalid_argument("crf: activity series length does not match the sequence");
}

void check_labels(const ChainInput& in, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != in.emissions.rows())
    throw std::invalid_argument("crf: label sequence length does not match the sequence");
  const int c = static_cast<int>(in.emissions.cols());
  for (int y : labels) {
    if (y < 0 || y >= c) throw std::invalid_argument("crf: label " + std::to_string(y) + " out of range");
  }
}

bool gate_open(const ChainInput& in, Eigen::Index t) { return in.alpha[static_cast<std::size_t>(t)] >= in.gate_threshold; }

/// Transition potential into step t (t >= 1).
double trans(const ChainInput& in, Eigen::Index t, Eigen::Index from, Eigen::Index to) {
  if (gate_open(in, t)) return in.log_transition(from, to);
  return from == to ? 0.0 : kForbidden;
}

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

/// log_alpha(t, j): log-sum of scores of all prefixes ending in j at t.
Eigen::MatrixXd forward_table(const ChainInput& in) {
  const auto T = in.emissions.rows();
  const auto c = in.emissions.cols();
  Eigen::MatrixXd a(T, c);
  a.row(0) = in.emissions.row(0);
  Eigen::VectorXd tmp(c);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < c; ++i) tmp(i) = a(t - 1, i) + trans(in, t, i, j);
      a(t, j) = logsumexp(tmp) + in.emissions(t, j);
    }
  }
  return a;
}

/// log_beta(t, i): log-sum of scores of all suffixes after t given y_t = i.
Eigen::MatrixXd backward_table(const ChainInput& in) {
  const auto T = in.emissions.rows();
  const auto c = in.emissions.cols();
  Eigen::MatrixXd b(T, c);
  b.row(T - 1).setZero();
  Eigen::VectorXd tmp(c);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < c; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) tmp(j) = trans(in, t + 1, i, j) + in.emissions(t + 1, j) + b(t + 1, j);
      b(t, i) = logsumexp(tmp);
    }
  }
  return b;
}

}  // namespace

double log_partition(const ChainInput& in) {
  check(in);
  const Eigen::MatrixXd a = forward_table(in);
  return logsumexp(a.row(a.rows() - 1).transpose());
}

double path_score(const ChainInput& in, std::span<const int> labels) {
  check(in);
  check_labels(in, labels);
  double s = in.emissions(0, labels[0]);
  for (Eigen::Index t = 1; t < in.emissions.rows(); ++t) {
    const auto ti = static_cast<std::size_t>(t);
    s += trans(in, t, labels[ti - 1], labels[ti]) + in.emissions(t, labels[ti]);
  }
  return s;
}

double sequence_nll(const ChainInput& in, std::span<const int> labels) {
  return log_partition(in) - path_score(in, labels);
}

NllGradient sequence_nll_gradient(const ChainInput& in, std::span<const int> labels) {
  check(in);
  check_labels(in, labels);
  const auto T = in.emissions.rows();
  const auto c = in.emissions.cols();
  const Eigen::MatrixXd fa = forward_table(in);
  const Eigen::MatrixXd bb = backward_table(in);
  const double log_z = logsumexp(fa.row(T - 1).transpose());

  NllGradient g;
  g.nll = log_z - path_score(in, labels);
  g.d_emissions = ((fa + bb).array() - log_z).exp().matrix();
  g.d_transition = Eigen::MatrixXd::Zero(c, c);
  for (Eigen::Index t = 0; t < T; ++t) g.d_emissions(t, labels[static_cast<std::size_t>(t)]) -= 1.0;
  for (Eigen::Index t = 1; t < T; ++t) {
    if (!gate_open(in, t)) continue;
    for (Eigen::Index i = 0; i < c; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) {
        g.d_transition(i, j) +=
            std::exp(fa(t - 1, i) + in.log_transition(i, j) + in.emissions(t, j) + bb(t, j) - log_z);
      }
    }
    g.d_transition(labels[static_cast<std::size_t>(t - 1)], labels[static_cast<std::size_t>(t)]) -= 1.0;
  }
  return g;
}

Eigen::MatrixXd marginals(const ChainInput& in) {
  check(in);
  const Eigen::MatrixXd fa = forward_table(in);
  const Eigen::MatrixXd bb = backward_table(in);
  const double log_z = logsumexp(fa.row(fa.rows() - 1).transpose());
  return ((fa + bb).array() - log_z).exp().matrix();
}

ViterbiResult viterbi(const ChainInput& in) {
  check(in);
  const auto T = in.emissions.rows();
  const auto c = in.emissions.cols();
  Eigen::MatrixXd delta(T, c);
  Eigen::MatrixXi back(T, c);
  delta.row(0) = in.emissions.row(0);
  back.row(0).setZero();
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < c; ++j) {
      Eigen::Index best_i = 0;
      double best = delta(t - 1, 0) + trans(in, t, 0, j);
      for (Eigen::Index i = 1; i < c; ++i) {
        const double v = delta(t - 1, i) + trans(in, t, i, j);
        if (v > best) {
          best = v;
          best_i = i;
        }
      }
      delta(t, j) = best + in.emissions(t, j);
      back(t, j) = static_cast<int>(best_i);
    }
  }
  Eigen::Index last = 0;
  for (Eigen::Index j = 1; j < c; ++j)
    if (delta(T - 1, j) > delta(T - 1, last)) last = j;

  ViterbiResult r;
  r.score = delta(T - 1, last);
  r.path.source = LabelSource::kDecoded;
  r.path.labels.resize(static_cast<std::size_t>(T));
  int cur = static_cast<int>(last);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    r.path.labels[static_cast<std::size_t>(t)] = cur;
    cur = back(t, cur);
  }
  return r;
}

Eigen::MatrixXd emissions(const CrfModel& model, const Eigen::MatrixXd& features) {
  return nn::forward_eval(model.emission, features);
}

double log_forward(const CrfModel& model, const Eigen::MatrixXd& em, std::span<const double> alpha) {
  return log_partition({em, model.log_transition, alpha, model.gate_threshold});
}

double sequence_nll(const CrfModel& model, const Eigen::MatrixXd& features,
                    std::span<const double> alpha, const LabelSequence& y) {
  const Eigen::MatrixXd em = emissions(model, features);
  return sequence_nll({em, model.log_transition, alpha, model.gate_threshold}, y.labels);
}

LabelSequence viterbi(const CrfModel& model, const Eigen::MatrixXd& em, std::span<const double> alpha) {
  return viterbi(ChainInput{em, model.log_transition, alpha, model.gate_threshold}).path;
}

}  // namespace roomloc::crf
