#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "roomloc/rng.hpp"

namespace roomloc::nn {

enum class Mode { kTrain, kEval };

struct MlpShape {
  int input = 0;
  int hidden = 20;
  int hidden_layers = 3;
  int output = 0;
};

inline constexpr double kBatchNormEps = 1e-5;
/// Running statistics keep this fraction of their previous value per batch.
inline constexpr double kRunningMomentum = 0.9;

/// Fully connected network: hidden_layers x (Linear -> BatchNorm -> ReLU),
/// then a final Linear layer producing one emission score per class.
///
/// All trainable parameters live in one flat vector `theta` so optimisers and
/// finite-difference checks can treat them uniformly. Per layer the block is
/// [W (out x in, column-major) | b | gamma | beta], with gamma/beta absent on
/// the output layer. Running batch-norm statistics are not trainable and are
/// stored separately.
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(const MlpShape& shape);

  /// He fan-in initialisation, zero biases, unit gamma, zero beta.
  static MlpParams init(const MlpShape& shape, Rng& rng);

  const MlpShape& shape() const { return shape_; }
  int layer_count() const { return shape_.hidden_layers + 1; }
  int in_dim(int layer) const;
  int out_dim(int layer) const;
  bool has_norm(int layer) const { return layer < shape_.hidden_layers; }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<const Eigen::VectorXd> gamma(int layer) const;
  Eigen::Map<const Eigen::VectorXd> beta(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<Eigen::VectorXd> gamma(int layer);
  Eigen::Map<Eigen::VectorXd> beta(int layer);

  Eigen::VectorXd theta;
  std::vector<Eigen::VectorXd> running_mean;
  std::vector<Eigen::VectorXd> running_var;

  /// Offsets of each layer's W, b, gamma, beta blocks inside theta.
  struct Offsets {
    Eigen::Index weight = 0, bias = 0, gamma = 0, beta = 0;
  };
  const Offsets& offsets(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

 private:
  MlpShape shape_;
  std::vector<Offsets> offsets_;
};

struct LayerCache {
  Eigen::MatrixXd input;   ///< n x in
  Eigen::MatrixXd xhat;    ///< normalised pre-activation (hidden layers)
  Eigen::RowVectorXd inv_std;
  Eigen::MatrixXd output;  ///< post-ReLU activation (hidden) or emission (last)
};

struct ForwardCache {
  Mode mode = Mode::kEval;
  std::vector<LayerCache> layers;
};

/// Emissions h(x) for each row of `batch`. TRAIN normalises with batch
/// statistics and folds them into the running statistics; EVAL uses the
/// running statistics and leaves `params` untouched. Throws
/// std::invalid_argument for an empty batch, a feature-count mismatch, or a
/// TRAIN batch with a single row.
Eigen::MatrixXd forward(MlpParams& params, const Eigen::MatrixXd& batch, Mode mode,
                        ForwardCache* cache = nullptr);
/// EVAL forward on an immutable parameter set.
Eigen::MatrixXd forward_eval(const MlpParams& params, const Eigen::MatrixXd& batch,
                             ForwardCache* cache = nullptr);

/// Gradient of a scalar loss with respect to theta, given dLoss/dEmissions.
/// Works from TRAIN or EVAL caches; for EVAL the batch-norm statistics are
/// constants. Throws std::invalid_argument on a shape mismatch.
Eigen::VectorXd backward(const MlpParams& params, const ForwardCache& cache,
                         const Eigen::MatrixXd& grad_emissions);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(Eigen::Index size = 0, double learning_rate = 1e-2)
      : m(Eigen::VectorXd::Zero(size)), v(Eigen::VectorXd::Zero(size)), lr(learning_rate) {}
};

/// One bias-corrected Adam update in place. Throws TrainingDiverged if the
/// gradient holds a NaN or infinity, std::invalid_argument on size mismatch.
void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& state);

}  // namespace roomloc::nn
