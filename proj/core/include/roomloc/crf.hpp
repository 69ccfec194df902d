#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "roomloc/mlp.hpp"

namespace roomloc::crf {

/// Log-space stand-in for -infinity on forbidden transitions.
inline constexpr double kForbidden = -1e9;

/// Linear-chain CRF over rooms.
///
/// Score of a path y given per-window emissions E (T x c):
///   sum_t E(t, y_t) + sum_{t >= 1} A_t(y_{t-1}, y_t)
/// where A_t is `log_transition` when alpha_t >= gate_threshold and the
/// stay-only matrix (0 on the diagonal, kForbidden elsewhere) otherwise.
/// Rows of `log_transition` index the previous room, columns the next. The
/// first window has a uniform (zero) initial potential.
struct CrfModel {
  nn::MlpParams emission;
  Eigen::MatrixXd log_transition;
  double gate_threshold = 0.0;

  int classes() const { return static_cast<int>(log_transition.rows()); }
};

enum class LabelSource { kWalkthrough, kPseudo, kDecoded };

struct LabelSequence {
  std::vector<int> labels;
  LabelSource source = LabelSource::kDecoded;
};

/// Transition matrix in force for a window with activity `alpha`.
Eigen::MatrixXd gated_transition(const Eigen::MatrixXd& log_transition, double alpha,
                                 double gate_threshold);

/// Read-only view of the sequence-level inputs shared by the inference routines.
struct ChainInput {
  const Eigen::MatrixXd& emissions;       ///< T x c
  const Eigen::MatrixXd& log_transition;  ///< c x c
  std::span<const double> alpha;          ///< length T
  double gate_threshold = 0.0;
};

/// log Z by the forward recursion. Throws std::invalid_argument for T = 0 or
/// mismatched shapes.
double log_partition(const ChainInput& in);
/// Unnormalised log score of one path.
double path_score(const ChainInput& in, std::span<const int> labels);
/// -log P(labels | X) = log Z - path_score. Throws on out-of-range labels.
double sequence_nll(const ChainInput& in, std::span<const int> labels);

struct NllGradient {
  double nll = 0.0;
  Eigen::MatrixXd d_emissions;   ///< T x c: marginals - one-hot(labels)
  Eigen::MatrixXd d_transition;  ///< c x c, open-gate steps only
};

/// NLL and its exact gradient by forward-backward.
NllGradient sequence_nll_gradient(const ChainInput& in, std::span<const int> labels);

/// Posterior marginals P(y_t = j | X), T x c.
Eigen::MatrixXd marginals(const ChainInput& in);

struct ViterbiResult {
  LabelSequence path;
  double score = 0.0;
};

/// Exact MAP path. Ties go to the lower label index, both for back-pointers
/// and for the final state.
ViterbiResult viterbi(const ChainInput& in);

/// Model-level conveniences: emissions from the network in EVAL mode.
Eigen::MatrixXd emissions(const CrfModel& model, const Eigen::MatrixXd& features);
double log_forward(const CrfModel& model, const Eigen::MatrixXd& emissions,
                   std::span<const double> alpha);
double sequence_nll(const CrfModel& model, const Eigen::MatrixXd& features,
                    std::span<const double> alpha, const LabelSequence& y);
LabelSequence viterbi(const CrfModel& model, const Eigen::MatrixXd& emissions,
                      std::span<const double> alpha);

}  // namespace roomloc::crf
