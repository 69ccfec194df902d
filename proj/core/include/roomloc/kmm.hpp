#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace roomloc::kmm {

/// Gaussian RBF kernel k(x, x') = exp(-|x - x'|^2 / (2 bandwidth^2)).
struct RbfKernel {
  double bandwidth = 1.0;

  template <typename A, typename B>
  double operator()(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) const {
    return std::exp(-(x - y).squaredNorm() / (2.0 * bandwidth * bandwidth));
  }
};

/// Median pairwise Euclidean distance between rows of `points`, over an evenly
/// strided subsample of at most `max_points` rows. Falls back to 1 when the
/// median is 0. Throws std::invalid_argument for fewer than two rows.
double median_bandwidth(const Eigen::MatrixXd& points, std::size_t max_points = 1000);

inline constexpr double kGramJitter = 1e-8;

/// min_b 0.5 b'Kb - kappa'b  s.t.  0 <= b_i <= B,  |sum(b) - N| <= N * eps.
struct KmmProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd kappa;
  double upper_bound = 1000.0;
  double tolerance = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;

  double sum_lower() const { return static_cast<double>(n_train) * (1.0 - tolerance); }
  double sum_upper() const { return static_cast<double>(n_train) * (1.0 + tolerance); }
  double objective(const Eigen::VectorXd& beta) const;
  bool feasible(const Eigen::VectorXd& beta) const;
};

/// The usual KMM choice eps = (sqrt(N) - 1) / sqrt(N).
double default_tolerance(std::size_t n_train);

/// Gram matrix (plus jitter on the diagonal) and kappa_i = (N_tr / N_te) sum_j k(x_i, x'_j).
KmmProblem build_problem(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test,
                         double bandwidth, double upper_bound, double tolerance);

/// Euclidean projection onto {0 <= b <= B} intersected with {L <= sum(b) <= U}.
/// Solves for the shift lambda in clip(v - lambda, 0, B) by bisection and keeps
/// the bracket end that satisfies the sum constraint, so the result is
/// feasible as evaluated in floating point.
Eigen::VectorXd project_feasible(const Eigen::VectorXd& v, double upper_bound, double sum_lower,
                                 double sum_upper);

/// Same projection by Dykstra's alternating projections between the box and
/// the sum slab. Converges to the same point but is only approximately
/// feasible after a finite number of sweeps.
Eigen::VectorXd dykstra_project(const Eigen::VectorXd& v, double upper_bound, double sum_lower,
                                double sum_upper, int max_iter = 100, double tol = 1e-12);

enum class Projection { kExact, kDykstra };

struct SolveOptions {
  int max_iter = 3000;
  double tol = 1e-8;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  Projection projection = Projection::kExact;
  /// After the gradient phase, solve the KKT system on the identified active
  /// face and keep the result when it is feasible and no worse. Gradient
  /// steps stall on nearly flat directions of an ill-conditioned Gram matrix.
  bool polish = true;
};

struct WeightVector {
  Eigen::VectorXd beta;
};

struct SolveResult {
  WeightVector weights;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after every accepted step, starting with the initial point.
  std::vector<double> objective_trace;
};

/// Projected gradient descent with Armijo backtracking, optionally followed
/// by an active-set polish. Throws
/// std::invalid_argument when B * N < N * (1 - eps).
SolveResult solve(const KmmProblem& problem, const SolveOptions& options = {});

struct KmmConfig {
  double upper_bound = 1000.0;
  /// Defaults to default_tolerance(N_tr).
  std::optional<double> tolerance;
  /// Defaults to median_bandwidth over train and subsampled test rows.
  std::optional<double> bandwidth;
  std::size_t max_test_points = 2000;
  std::uint64_t seed = 7;
  SolveOptions solver;
};

struct KmmEstimate {
  WeightVector weights;
  double bandwidth = 0.0;
  double tolerance = 0.0;
  SolveResult solve;
};

/// Subsample test rows uniformly without replacement (seeded), pick the
/// bandwidth, build the problem and solve it.
KmmEstimate estimate_weights(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test,
                             const KmmConfig& config = {});

}  // namespace roomloc::kmm
