#include "roomloc/kmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "roomloc/rng.hpp"

namespace roomloc::kmm {

double median_bandwidth(const Eigen::MatrixXd& points, std::size_t max_points) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw std::invalid_argument("median_bandwidth: need at least two points");
  const std::size_t m = std::min(n, std::max<std::size_t>(2, max_points));
  std::vector<Eigen::Index> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = static_cast<Eigen::Index>(i * n / m);

  std::vector<double> d;
  d.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) d.push_back((points.row(idx[i]) - points.row(idx[j])).norm());

  // Lower median for even counts keeps the result an observed distance.
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>((d.size() - 1) / 2);
  std::nth_element(d.begin(), mid, d.end());
  const double med = *mid;
  return med > 0.0 ? med : 1.0;
}

double KmmProblem::objective(const Eigen::VectorXd& beta) const {
  return 0.5 * beta.dot(gram * beta) - kappa.dot(beta);
}

bool KmmProblem::feasible(const Eigen::VectorXd& beta) const {
  if (beta.size() != static_cast<Eigen::Index>(n_train)) return false;
  if ((beta.array() < 0.0).any() || (beta.array() > upper_bound).any()) return false;
  const double s = beta.sum();
  return s >= sum_lower() && s <= sum_upper();
}

double default_tolerance(std::size_t n_train) {
  const double r = std::sqrt(static_cast<double>(n_train));
  return (r - 1.0) / r;
}

KmmProblem build_problem(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test,
                         double bandwidth, double upper_bound, double tolerance) {
  if (train.rows() == 0 || test.rows() == 0)
    throw std::invalid_argument("build_problem: train and test sets must be non-empty");
  if (train.cols() != test.cols())
    throw std::invalid_argument("build_problem: train and test dimensions differ");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("build_problem: bandwidth must be > 0");
  if (!(upper_bound > 0.0)) throw std::invalid_argument("build_problem: B must be > 0");
  if (!(tolerance >= 0.0 && tolerance < 1.0))
    throw std::invalid_argument("build_problem: eps must lie in [0, 1)");

  const RbfKernel k{bandwidth};
  const Eigen::Index ntr = train.rows();
  const Eigen::Index nte = test.rows();
  KmmProblem p;
  p.n_train = static_cast<std::size_t>(ntr);
  p.n_test = static_cast<std::size_t>(nte);
  p.upper_bound = upper_bound;
  p.tolerance = tolerance;
  p.gram.resize(ntr, ntr);
  for (Eigen::Index i = 0; i < ntr; ++i) {
    p.gram(i, i) = 1.0 + kGramJitter;
    for (Eigen::Index j = i + 1; j < ntr; ++j) {
      const double v = k(train.row(i), train.row(j));
      p.gram(i, j) = v;
      p.gram(j, i) = v;
    }
  }
  const double ratio = static_cast<double>(ntr) / static_cast<double>(nte);
  p.kappa.resize(ntr);
  for (Eigen::Index i = 0; i < ntr; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < nte; ++j) s += k(train.row(i), test.row(j));
    p.kappa(i) = ratio * s;
  }
  return p;
}

namespace {

Eigen::VectorXd clip(const Eigen::VectorXd& v, double lambda, double ub) {
  return (v.array() - lambda).cwiseMax(0.0).cwiseMin(ub).matrix();
}

}  // namespace

Eigen::VectorXd project_feasible(const Eigen::VectorXd& v, double upper_bound, double sum_lower,
                                 double sum_upper) {
  Eigen::VectorXd p = clip(v, 0.0, upper_bound);
  const double s = p.sum();
  if (s >= sum_lower && s <= sum_upper) return p;

  // sum(clip(v - lambda)) is continuous and non-increasing in lambda.
  const bool too_big = s > sum_upper;
  const double target = too_big ? sum_upper : sum_lower;
  double lo = too_big ? 0.0 : v.minCoeff() - upper_bound - 1.0;  // sum(lo) >= target
  double hi = too_big ? v.maxCoeff() + 1.0 : 0.0;                 // sum(hi) <= target
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (clip(v, mid, upper_bound).sum() >= target) lo = mid; else hi = mid;
  }
  // Keep the side that satisfies the violated bound.
  p = clip(v, too_big ? hi : lo, upper_bound);
  return p;
}

Eigen::VectorXd dykstra_project(const Eigen::VectorXd& v, double upper_bound, double sum_lower,
                                double sum_upper, int max_iter, double tol) {
  const Eigen::Index n = v.size();
  Eigen::VectorXd x = v;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd y = (x + p).cwiseMax(0.0).cwiseMin(upper_bound);
    p = x + p - y;
    Eigen::VectorXd z = y + q;
    const double s = z.sum();
    if (s > sum_upper) z.array() -= (s - sum_upper) / static_cast<double>(n);
    if (s < sum_lower) z.array() += (sum_lower - s) / static_cast<double>(n);
    q = y + q - z;
    const double change = (z - x).norm();
    // The iterate can sit still while the correction terms keep moving, so
    // also require the two projections to agree.
    const double gap = (y - z).norm();
    x = z;
    if (change < tol && gap < tol) break;
  }
  return x;
}

namespace {

/// Stationary point of the objective on the face where coordinates at 0 or B
/// stay fixed and the sum constraint is either free or held at the bound the
/// iterate touches. Returns nothing when the face solution leaves the set.
std::optional<Eigen::VectorXd> face_solution(const KmmProblem& p, const Eigen::VectorXd& beta, double lower,
                                             double upper) {
  const Eigen::Index n = beta.size();
  std::vector<Eigen::Index> free_idx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (beta(i) > 0.0 && beta(i) < p.upper_bound) free_idx.push_back(i);
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  if (nf == 0) return std::nullopt;

  const double s = beta.sum();
  const double slack = 1e-9 * std::max(1.0, upper);
  const bool at_lower = s - lower <= slack;
  const bool at_upper = upper - s <= slack;
  const bool tight = at_lower || at_upper;

  Eigen::VectorXd fixed = beta;
  for (Eigen::Index i : free_idx) fixed(i) = 0.0;
  const Eigen::VectorXd k_fixed = p.gram * fixed;

  const Eigen::Index dim = nf + (tight ? 1 : 0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  for (Eigen::Index r = 0; r < nf; ++r) {
    const Eigen::Index i = free_idx[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < nf; ++c) a(r, c) = p.gram(i, free_idx[static_cast<std::size_t>(c)]);
    rhs(r) = p.kappa(i) - k_fixed(i);
  }
  if (tight) {
    for (Eigen::Index r = 0; r < nf; ++r) a(r, nf) = a(nf, r) = 1.0;
    rhs(nf) = (at_lower ? lower : upper) - fixed.sum();
  }
  const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
  if (!sol.allFinite()) return std::nullopt;

  Eigen::VectorXd out = fixed;
  for (Eigen::Index r = 0; r < nf; ++r) out(free_idx[static_cast<std::size_t>(r)]) = sol(r);
  // Accept rounding-level excursions and let the exact projection absorb them.
  const double tol = 1e-9 * std::max(1.0, p.upper_bound);
  if ((out.array() < -tol).any() || (out.array() > p.upper_bound + tol).any()) return std::nullopt;
  const double os = out.sum();
  if (os < lower - slack || os > upper + slack) return std::nullopt;
  return project_feasible(out, p.upper_bound, lower, upper);
}

}  // namespace

SolveResult solve(const KmmProblem& problem, const SolveOptions& options) {
  const auto n = static_cast<Eigen::Index>(problem.n_train);
  if (problem.gram.rows() != n || problem.gram.cols() != n || problem.kappa.size() != n || n == 0)
    throw std::invalid_argument("kmm::solve: inconsistent problem dimensions");
  const double lower = problem.sum_lower();
  const double upper = problem.sum_upper();
  if (problem.upper_bound * static_cast<double>(n) < lower)
    throw std::invalid_argument("kmm::solve: infeasible constraints (B * N < N * (1 - eps))");

  auto project = [&](const Eigen::VectorXd& v) {
    if (options.projection == Projection::kDykstra) {
      // Dykstra lands within rounding of the set; the exact step then
      // only moves the point by that residual.
      return project_feasible(dykstra_project(v, problem.upper_bound, lower, upper),
                              problem.upper_bound, lower, upper);
    }
    return project_feasible(v, problem.upper_bound, lower, upper);
  };

  SolveResult result;
  Eigen::VectorXd beta = project(Eigen::VectorXd::Ones(n));
  Eigen::VectorXd kb = problem.gram * beta;
  double f = 0.5 * beta.dot(kb) - problem.kappa.dot(beta);
  result.objective_trace.push_back(f);

  // 1 / (max absolute row sum) bounds the inverse Lipschitz constant from below.
  const double step0 = 1.0 / std::max(1e-12, problem.gram.cwiseAbs().rowwise().sum().maxCoeff());
  double step = step0;
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const Eigen::VectorXd grad = kb - problem.kappa;
    const double pg_norm = (beta - project(beta - grad)).norm();
    if (pg_norm < options.tol) {
      result.converged = true;
      break;
    }
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd trial = project(beta - step * grad);
      const Eigen::VectorXd d = trial - beta;
      const Eigen::VectorXd kt = problem.gram * trial;
      const double ft = 0.5 * trial.dot(kt) - problem.kappa.dot(trial);
      if (ft <= f + options.armijo_c1 * grad.dot(d)) {
        accepted = d.squaredNorm() > 0.0;
        if (accepted && ft <= f) {
          beta = std::move(trial);
          kb = kt;
          f = ft;
          result.objective_trace.push_back(f);
        }
        break;
      }
      step *= options.backtrack;
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    step = std::min(step / options.backtrack, 1e6 * step0);
  }
  if (options.polish) {
    for (int round = 0; round < 5; ++round) {
      const auto cand = face_solution(problem, beta, lower, upper);
      if (!cand) break;
      const double fc = problem.objective(*cand);
      if (!(fc <= f + 1e-12 * std::max(1.0, std::abs(f)))) break;
      const bool moved = (*cand - beta).cwiseAbs().maxCoeff() > 0.0;
      beta = *cand;
      if (fc < f) result.objective_trace.push_back(fc);
      f = fc;
      if (!moved) break;
    }
  }
  result.iterations = it;
  result.objective = f;
  result.weights.beta = std::move(beta);
  return result;
}

KmmEstimate estimate_weights(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test,
                             const KmmConfig& config) {
  if (train.rows() == 0 || test.rows() == 0)
    throw std::invalid_argument("estimate_weights: train and test sets must be non-empty");
  Eigen::MatrixXd sub = test;
  const auto nte = static_cast<std::size_t>(test.rows());
  if (nte > config.max_test_points) {
    Rng rng(config.seed);
    std::vector<Eigen::Index> idx(nte);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    // Partial Fisher-Yates: the first max_test_points entries are a uniform sample.
    for (std::size_t i = 0; i < config.max_test_points; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(nte - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(config.max_test_points);
    std::sort(idx.begin(), idx.end());
    sub.resize(static_cast<Eigen::Index>(idx.size()), test.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = test.row(idx[i]);
  }

  KmmEstimate est;
  if (config.bandwidth) {
    est.bandwidth = *config.bandwidth;
  } else {
    Eigen::MatrixXd pooled(train.rows() + sub.rows(), train.cols());
    pooled << train, sub;
    est.bandwidth = median_bandwidth(pooled);
  }
  est.tolerance = config.tolerance.value_or(default_tolerance(static_cast<std::size_t>(train.rows())));
  const KmmProblem problem = build_problem(train, sub, est.bandwidth, config.upper_bound, est.tolerance);
  est.solve = solve(problem, config.solver);
  est.weights = est.solve.weights;
  return est;
}

}  // namespace roomloc::kmm
