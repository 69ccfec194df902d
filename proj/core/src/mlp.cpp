#include "roomloc/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "roomloc/errors.hpp"

namespace roomloc::nn {

MlpParams::MlpParams(const MlpShape& shape) : shape_(shape) {
  if (shape.input <= 0 || shape.hidden <= 0 || shape.output <= 0 || shape.hidden_layers < 0)
    throw std::invalid_argument("MlpParams: all dimensions must be positive");
  Eigen::Index off = 0;
  for (int l = 0; l < layer_count(); ++l) {
    Offsets o;
    o.weight = off;
    off += static_cast<Eigen::Index>(out_dim(l)) * in_dim(l);
    o.bias = off;
    off += out_dim(l);
    if (has_norm(l)) {
      o.gamma = off;
      off += out_dim(l);
      o.beta = off;
      off += out_dim(l);
    }
    offsets_.push_back(o);
  }
  theta = Eigen::VectorXd::Zero(off);
  for (int l = 0; l < shape.hidden_layers; ++l) {
    gamma(l).setOnes();
    running_mean.push_back(Eigen::VectorXd::Zero(shape.hidden));
    running_var.push_back(Eigen::VectorXd::Ones(shape.hidden));
  }
}

MlpParams MlpParams::init(const MlpShape& shape, Rng& rng) {
  MlpParams p(shape);
  for (int l = 0; l < p.layer_count(); ++l) {
    const double sd = std::sqrt(2.0 / p.in_dim(l));
    auto w = p.weight(l);
    // Column-major fill order keeps the draw sequence tied to theta's layout.
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = sd * rng.normal();
  }
  return p;
}

int MlpParams::in_dim(int layer) const { return layer == 0 ? shape_.input : shape_.hidden; }
int MlpParams::out_dim(int layer) const {
  return layer == shape_.hidden_layers ? shape_.output : shape_.hidden;
}

Eigen::Map<const Eigen::MatrixXd> MlpParams::weight(int l) const {
  return {theta.data() + offsets(l).weight, out_dim(l), in_dim(l)};
}
Eigen::Map<const Eigen::VectorXd> MlpParams::bias(int l) const {
  return {theta.data() + offsets(l).bias, out_dim(l)};
}
Eigen::Map<const Eigen::VectorXd> MlpParams::gamma(int l) const {
  return {theta.data() + offsets(l).gamma, out_dim(l)};
}
Eigen::Map<const Eigen::VectorXd> MlpParams::beta(int l) const {
  return {theta.data() + offsets(l).beta, out_dim(l)};
}
Eigen::Map<Eigen::MatrixXd> MlpParams::weight(int l) {
  return {theta.data() + offsets(l).weight, out_dim(l), in_dim(l)};
}
Eigen::Map<Eigen::VectorXd> MlpParams::bias(int l) { return {theta.data() + offsets(l).bias, out_dim(l)}; }
Eigen::Map<Eigen::VectorXd> MlpParams::gamma(int l) { return {theta.data() + offsets(l).gamma, out_dim(l)}; }
Eigen::Map<Eigen::VectorXd> MlpParams::beta(int l) { return {theta.data() + offsets(l).beta, out_dim(l)}; }

namespace {

Eigen::MatrixXd run(const MlpParams& params, const Eigen::MatrixXd& batch, Mode mode,
                    ForwardCache* cache, std::vector<Eigen::RowVectorXd>* batch_mean,
                    std::vector<Eigen::RowVectorXd>* batch_var) {
  if (batch.rows() == 0) throw std::invalid_argument("mlp forward: empty batch");
  if (batch.cols() != params.shape().input)
    throw std::invalid_argument("mlp forward: feature count does not match the network input");
  if (mode == Mode::kTrain && batch.rows() < 2)
    throw std::invalid_argument("mlp forward: TRAIN mode needs a batch of at least 2 rows");

  const double n = static_cast<double>(batch.rows());
  if (cache) {
    cache->mode = mode;
    cache->layers.assign(static_cast<std::size_t>(params.layer_count()), {});
  }
  Eigen::MatrixXd a = batch;
  for (int l = 0; l < params.layer_count(); ++l) {
    Eigen::MatrixXd z = a * params.weight(l).transpose();
    z.rowwise() += params.bias(l).transpose();
    LayerCache* lc = cache ? &cache->layers[static_cast<std::size_t>(l)] : nullptr;
    if (lc) lc->input = a;
    if (!params.has_norm(l)) {
      a = std::move(z);
      if (lc) lc->output = a;
      break;
    }
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd var;
    if (mode == Mode::kTrain) {
      mean = z.colwise().mean();
      var = (z.rowwise() - mean).array().square().colwise().sum() / n;
      if (batch_mean) batch_mean->push_back(mean);
      if (batch_var) batch_var->push_back(var);
    } else {
      mean = params.running_mean[static_cast<std::size_t>(l)].transpose();
      var = params.running_var[static_cast<std::size_t>(l)].transpose();
    }
    const Eigen::RowVectorXd inv_std = (var.array() + kBatchNormEps).rsqrt().matrix();
    Eigen::MatrixXd xhat = (z.rowwise() - mean).array().rowwise() * inv_std.array();
    Eigen::MatrixXd y = xhat.array().rowwise() * params.gamma(l).transpose().array();
    y.rowwise() += params.beta(l).transpose();
    a = y.cwiseMax(0.0);
    if (lc) {
      lc->xhat = std::move(xhat);
      lc->inv_std = inv_std;
      lc->output = a;
    }
  }
  return a;
}

}  // namespace

Eigen::MatrixXd forward(MlpParams& params, const Eigen::MatrixXd& batch, Mode mode,
                        ForwardCache* cache) {
  std::vector<Eigen::RowVectorXd> means;
  std::vector<Eigen::RowVectorXd> vars;
  Eigen::MatrixXd out = run(params, batch, mode, cache, &means, &vars);
  if (mode == Mode::kTrain) {
    const double n = static_cast<double>(batch.rows());
    for (std::size_t l = 0; l < means.size(); ++l) {
      // Unbiased batch variance for the running estimate.
      params.running_mean[l] = kRunningMomentum * params.running_mean[l] +
                               (1.0 - kRunningMomentum) * means[l].transpose();
      params.running_var[l] = kRunningMomentum * params.running_var[l] +
                              (1.0 - kRunningMomentum) * (vars[l].transpose() * (n / (n - 1.0)));
    }
  }
  return out;
}

Eigen::MatrixXd forward_eval(const MlpParams& params, const Eigen::MatrixXd& batch,
                             ForwardCache* cache) {
  return run(params, batch, Mode::kEval, cache, nullptr, nullptr);
}

Eigen::VectorXd backward(const MlpParams& params, const ForwardCache& cache,
                         const Eigen::MatrixXd& grad_emissions) {
  if (cache.layers.size() != static_cast<std::size_t>(params.layer_count()))
    throw std::invalid_argument("mlp backward: cache does not match the network");
  const auto& last = cache.layers.back();
  if (grad_emissions.rows() != last.output.rows() || grad_emissions.cols() != last.output.cols())
    throw std::invalid_argument("mlp backward: gradient shape does not match emissions");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.theta.size());
  const double n = static_cast<double>(grad_emissions.rows());
  Eigen::MatrixXd upstream = grad_emissions;  // dL/d(output of layer l)
  for (int l = params.layer_count() - 1; l >= 0; --l) {
    const auto& lc = cache.layers[static_cast<std::size_t>(l)];
    const auto& off = params.offsets(l);
    Eigen::MatrixXd dz;
    if (!params.has_norm(l)) {
      dz = upstream;
    } else {
      // ReLU, then the batch-norm affine part.
      const Eigen::MatrixXd dy = (lc.output.array() > 0.0).select(upstream, 0.0);
      Eigen::Map<Eigen::VectorXd>(grad.data() + off.gamma, params.out_dim(l)) =
          (dy.array() * lc.xhat.array()).colwise().sum().transpose();
      Eigen::Map<Eigen::VectorXd>(grad.data() + off.beta, params.out_dim(l)) =
          dy.colwise().sum().transpose();
      const Eigen::MatrixXd dxhat = dy.array().rowwise() * params.gamma(l).transpose().array();
      if (cache.mode == Mode::kTrain) {
        const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * lc.xhat.array()).colwise().sum();
        Eigen::MatrixXd t = n * dxhat;
        t.rowwise() -= sum_dxhat;
        t -= (lc.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
        dz = (t.array().rowwise() * (lc.inv_std.array() / n)).matrix();
      } else {
        dz = dxhat.array().rowwise() * lc.inv_std.array();
      }
    }
    Eigen::Map<Eigen::MatrixXd>(grad.data() + off.weight, params.out_dim(l), params.in_dim(l)) =
        dz.transpose() * lc.input;
    Eigen::Map<Eigen::VectorXd>(grad.data() + off.bias, params.out_dim(l)) = dz.colwise().sum().transpose();
    if (l > 0) upstream = dz * params.weight(l);
  }
  return grad;
}

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& state) {
  if (grad.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size())
    throw std::invalid_argument("adam_step: parameter, gradient and state sizes differ");
  if (!grad.allFinite()) throw TrainingDiverged("adam_step: non-finite gradient");
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  theta.array() -= state.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + state.eps);
}

}  // namespace roomloc::nn
