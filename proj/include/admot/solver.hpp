#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace admot::solver {

struct Options {
  // Defaults to 1e-6 * max(1, ||y||_2) when unset.
  std::optional<double> feasibility_tol;
  // Relative l1 duality-gap target.
  double optimality_tol = 1e-4;
  int max_iterations = 10000;
  int check_every = 10;
  bool record_history = false;
};

// min ||x||_1  subject to  ||a x - y||_2 <= sigma
struct Problem {
  Eigen::MatrixXd a;
  Eigen::VectorXd y;
  double sigma = 0.0;
  Options options;
};

struct HistoryEntry {
  int iteration;
  double residual_norm;
  double l1_norm;
};

struct Solution {
  Eigen::VectorXd x_star;
  double residual_norm = 0.0;
  double l1_norm = 0.0;
  double dual_bound = 0.0;  // certified lower bound on the optimal l1 norm
  int iterations = 0;
  bool converged = false;
  std::vector<HistoryEntry> history;
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, Solution last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  Solution last_iterate;
};

// Primal-dual splitting on the constrained form: soft thresholding of the
// iterate alternated with projection of the residual onto the l2 ball of
// radius sigma.  Only products with a and its transpose are needed, and
// sigma = 0 degenerates to exact projection onto the affine set.  The matrix
// is scaled to a/sqrt(m) internally (with sigma rescaled to match), so
// callers can pass raw +-1 probe slices.
Solution convex_opt(const Problem& problem);

// Exhaustive grid reference for tiny instances (n <= 3): the feasible grid
// point of minimum l1 norm over [-extent, extent]^n with the given step.
// Ties resolve to the lexicographically first grid point and stay
// deliberately independent of convex_opt's iteration path.
Solution oracle_solve(const Problem& problem, double grid_extent,
                      double grid_step);

void write_history_csv(std::ostream& os, const Solution& solution);

}  // namespace admot::solver
