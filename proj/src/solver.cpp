#include "admot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "admot/csv.hpp"
#include "admot/rng.hpp"

namespace admot::solver {

namespace {

constexpr std::uint64_t kPowerIterationSeed = 0x706F776572u;

void validate(const Problem& p) {
  if (p.a.rows() < 1 || p.a.cols() < 1) {
    throw std::invalid_argument("solver matrix must be nonempty");
  }
  if (p.a.rows() != p.y.size()) {
    throw std::invalid_argument("solver matrix and observation sizes differ");
  }
  if (p.sigma < 0.0) {
    throw std::invalid_argument("residual radius must be nonnegative");
  }
  if (p.options.max_iterations < 1 || p.options.check_every < 1) {
    throw std::invalid_argument("iteration limits must be positive");
  }
}

double spectral_norm_estimate(const Eigen::MatrixXd& a) {
  const rng::Stream stream(kPowerIterationSeed);
  Eigen::VectorXd v(a.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v(i) = stream.gaussian_pair(std::uint64_t(i)).first;
  }
  double norm = v.norm();
  if (norm == 0.0) v.setOnes(), norm = v.norm();
  v /= norm;
  double lambda = 0.0;
  Eigen::VectorXd u(a.rows());
  for (int it = 0; it < 60; ++it) {
    u.noalias() = a * v;
    if (u.norm() == 0.0) return 0.0;
    v.noalias() = a.transpose() * u;
    const double vn = v.norm();
    if (vn == 0.0) return 0.0;
    v /= vn;
    // ||A^T A v|| with unit v converges to the top squared singular value.
    const double est = std::sqrt(vn);
    if (it > 4 && std::abs(est - lambda) <= 1e-10 * std::max(1.0, est)) {
      return est;
    }
    lambda = est;
  }
  return lambda;
}

inline void soft_threshold(const Eigen::VectorXd& v, double t,
                           Eigen::VectorXd& out) {
  out = (v.array().abs() - t).max(0.0) * v.array().sign();
}

// Exact minimizer of sign(x_s)^T x_s over the residual ball, restricted to
// the current support: x = x_ls - step * (A_s^T A_s)^{-1} sign, with the
// step chosen so the residual lands exactly on the boundary.  Returns the
// candidate only when the support can reach the ball at all; the caller
// accepts it only when it beats the running iterate, so a wrong support
// costs nothing.
std::optional<Eigen::VectorXd> polish_on_support(const Eigen::MatrixXd& a,
                                                 const Eigen::VectorXd& y,
                                                 double sigma,
                                                 const Eigen::VectorXd& x,
                                                 bool full_support = false) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  const double x_max = x.lpNorm<Eigen::Infinity>();
  if (x_max <= 0.0) return std::nullopt;
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (full_support || std::abs(x(i)) > 1e-4 * x_max) support.push_back(i);
  }
  const auto k = Eigen::Index(support.size());
  if (k < 1 || k > m) return std::nullopt;

  Eigen::MatrixXd a_s(m, k);
  for (Eigen::Index j = 0; j < k; ++j) a_s.col(j) = a.col(support[size_t(j)]);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_s);
  if (qr.rank() < k) return std::nullopt;
  const Eigen::VectorXd x_ls = qr.solve(y);
  const Eigen::VectorXd r_ls = a_s * x_ls - y;
  const double rn2 = r_ls.squaredNorm();
  if (rn2 > sigma * sigma * (1.0 + 1e-12) + 1e-300) {
    // The slack might still be microscopic; accept only a clean reach.
    if (std::sqrt(rn2) > sigma + 1e-12 * std::max(1.0, y.norm())) {
      return std::nullopt;
    }
  }

  Eigen::VectorXd x_s = x_ls;
  const double slack2 = std::max(0.0, sigma * sigma - rn2);
  if (slack2 > 0.0) {
    Eigen::VectorXd sign(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double v = x_ls(j) != 0.0 ? x_ls(j) : x(support[size_t(j)]);
      sign(j) = v >= 0.0 ? 1.0 : -1.0;
    }
    const Eigen::LDLT<Eigen::MatrixXd> gram((a_s.transpose() * a_s).eval());
    const Eigen::VectorXd w = gram.solve(sign);
    const double u2 = (a_s * w).squaredNorm();
    if (u2 > 0.0) {
      // Every step length up to t_max stays inside the ball; the l1 norm
      // along the ray is piecewise linear, so minimize it exactly over the
      // kinks instead of jumping all the way to the boundary.
      const double t_max = std::sqrt(slack2 / u2);
      std::vector<double> knots{t_max};
      for (Eigen::Index j = 0; j < k; ++j) {
        if (w(j) != 0.0) {
          const double t = x_ls(j) / w(j);
          if (t > 0.0 && t < t_max) knots.push_back(t);
        }
      }
      std::sort(knots.begin(), knots.end());
      double best_t = 0.0, best_val = x_ls.lpNorm<1>();
      for (double t : knots) {
        const double val = (x_ls - t * w).lpNorm<1>();
        if (val < best_val) {
          best_val = val;
          best_t = t;
        }
      }
      x_s -= best_t * w;
    }
  }

  Eigen::VectorXd candidate = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < k; ++j) candidate(support[size_t(j)]) = x_s(j);
  return candidate;
}

Solution finalize(const Problem& p, const Eigen::VectorXd& x_scaled, double c,
                  double dual_bound, int iterations, bool converged,
                  std::vector<HistoryEntry> history) {
  Solution s;
  s.x_star = c * x_scaled;
  s.residual_norm = (p.a * s.x_star - p.y).norm();
  s.l1_norm = s.x_star.lpNorm<1>();
  s.dual_bound = dual_bound;
  s.iterations = iterations;
  s.converged = converged;
  s.history = std::move(history);
  return s;
}

}  // namespace

Solution convex_opt(const Problem& problem) {
  validate(problem);
  const Eigen::Index m = problem.a.rows();
  const Eigen::Index n = problem.a.cols();
  const double feas_tol = problem.options.feasibility_tol.value_or(
      1e-6 * std::max(1.0, problem.y.norm()));

  // Zero is feasible, and nothing beats an l1 norm of 0.
  if (problem.y.norm() <= problem.sigma + feas_tol) {
    Solution s;
    s.x_star = Eigen::VectorXd::Zero(n);
    s.residual_norm = problem.y.norm();
    s.converged = true;
    return s;
  }

  const double row_scale = 1.0 / std::sqrt(double(m));
  const Eigen::MatrixXd a = problem.a * row_scale;
  const double c = problem.y.norm() * row_scale;  // > 0 past the fast path
  const Eigen::VectorXd y = problem.y * (row_scale / c);
  const double sigma = problem.sigma * (row_scale / c);
  const double feas_tol_scaled = feas_tol * (row_scale / c);

  const double opnorm = spectral_norm_estimate(a) * 1.02;
  if (!(opnorm > 0.0)) {
    Solution s = finalize(problem, Eigen::VectorXd::Zero(n), c, 0.0, 0, false,
                          {});
    throw NoConvergence(
        "convex_opt: zero operator cannot reach the residual ball", s);
  }
  const double step = 0.99 / opnorm;  // primal and dual steps; step^2 L^2 < 1

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd ax = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd ax_bar = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd w(m), dv(m), g(n), x_next(n), ax_next(m);

  std::vector<HistoryEntry> history;
  Eigen::VectorXd best_x;
  double best_l1 = std::numeric_limits<double>::infinity();
  double best_dual = 0.0;
  double dual_bound = 0.0;
  const int cap = problem.options.max_iterations;
  int checks = 0;

  for (int it = 1; it <= cap; ++it) {
    // Dual: project the running residual onto the ball of radius sigma.
    w = p + step * ax_bar;
    dv = w / step - y;
    const double nd = dv.norm();
    if (nd <= sigma) {
      p.setZero();
    } else {
      p = w - step * (y + dv * (sigma / nd));
    }
    // Primal: soft threshold.
    g.noalias() = a.transpose() * p;
    soft_threshold(x - step * g, step, x_next);
    ax_next.noalias() = a * x_next;
    ax_bar = 2.0 * ax_next - ax;
    x.swap(x_next);
    ax.swap(ax_next);

    if (it % problem.options.check_every == 0 || it == cap) {
      ++checks;
      const double resid = (ax - y).norm();
      const double l1 = x.lpNorm<1>();
      if (resid <= sigma + feas_tol_scaled && l1 < best_l1) {
        best_l1 = l1;
        best_x = x;
      }
      // The raw iterate crawls toward the ball boundary; snapping the
      // support onto it usually gives a strictly better feasible point.  In
      // the dense regime (m >= n) the thresholded support may be too small
      // to reach the ball at all, so occasionally try every column.
      if (checks % 10 == 0 || it == cap) {
        auto consider = [&](const std::optional<Eigen::VectorXd>& cand) {
          if (!cand) return;
          const double cand_resid = (a * *cand - y).norm();
          const double cand_l1 = cand->lpNorm<1>();
          if (cand_resid <= sigma + feas_tol_scaled && cand_l1 < best_l1) {
            best_l1 = cand_l1;
            best_x = *cand;
          }
        };
        consider(polish_on_support(a, y, sigma, x));
        if (m >= n && (checks % 50 == 0 || it == cap)) {
          consider(polish_on_support(a, y, sigma, x, true));
        }
        // Wide systems always reach the ball; the least-norm solution is a
        // feasible anchor whenever nothing feasible has shown up yet.
        if (m < n && best_x.size() == 0 && (checks % 50 == 0 || it == cap)) {
          const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
          consider(Eigen::VectorXd(cod.solve(y)));
        }
      }
      // Any p gives a certified lower bound once scaled into the dual
      // feasible set ||a^T p||_inf <= 1.
      const double denom = std::max(1.0, g.lpNorm<Eigen::Infinity>());
      const double lb = (-y.dot(p) - sigma * p.norm()) / denom;
      best_dual = std::max(best_dual, lb);
      dual_bound = best_dual * c;
      if (problem.options.record_history) {
        history.push_back({it, resid * c, l1 * c});
      }
      if (best_x.size() > 0 &&
          best_l1 - best_dual <=
              problem.options.optimality_tol * std::max(best_l1, 1e-12)) {
        return finalize(problem, best_x, c, dual_bound, it, true,
                        std::move(history));
      }
    }
  }

  if (best_l1 < std::numeric_limits<double>::infinity()) {
    return finalize(problem, best_x, c, dual_bound, cap, false,
                    std::move(history));
  }
  Solution last =
      finalize(problem, x, c, dual_bound, cap, false, std::move(history));
  std::ostringstream msg;
  msg << "convex_opt: no feasible iterate after " << cap << " iterations"
      << " (m=" << m << ", n=" << n << ", sigma=" << problem.sigma
      << ", best residual=" << last.residual_norm
      << "); the ball may be unreachable";
  throw NoConvergence(msg.str(), std::move(last));
}

Solution oracle_solve(const Problem& problem, double grid_extent,
                      double grid_step) {
  validate(problem);
  const Eigen::Index n = problem.a.cols();
  if (n > 3) {
    throw std::invalid_argument("oracle_solve supports n <= 3 only");
  }
  if (grid_extent <= 0.0 || grid_step <= 0.0 || grid_step > 2 * grid_extent) {
    throw std::invalid_argument("bad oracle grid parameters");
  }
  const Eigen::Index k =
      Eigen::Index(std::floor(2.0 * grid_extent / grid_step + 0.5)) + 1;
  const double slack = 1e-9 * std::max(1.0, problem.y.norm());

  Eigen::VectorXd x(n), best;
  double best_l1 = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> idx(size_t(n), 0);
  while (true) {
    for (Eigen::Index d = 0; d < n; ++d) {
      x(d) = -grid_extent + double(idx[size_t(d)]) * grid_step;
    }
    if ((problem.a * x - problem.y).norm() <= problem.sigma + slack) {
      const double l1 = x.lpNorm<1>();
      if (l1 < best_l1) {
        best_l1 = l1;
        best = x;
      }
    }
    Eigen::Index d = n - 1;
    while (d >= 0 && ++idx[size_t(d)] == k) idx[size_t(d--)] = 0;
    if (d < 0) break;
  }

  if (!best.size()) {
    throw NoConvergence("oracle_solve: no feasible point at grid resolution",
                        Solution{});
  }
  Solution s;
  s.x_star = best;
  s.residual_norm = (problem.a * best - problem.y).norm();
  s.l1_norm = best_l1;
  s.converged = true;
  return s;
}

void write_history_csv(std::ostream& os, const Solution& solution) {
  os << "iteration,residual,l1\n";
  for (const auto& h : solution.history) {
    os << h.iteration << ',' << csv::num(h.residual_norm) << ','
       << csv::num(h.l1_norm) << '\n';
  }
}

}  // namespace admot::solver
