#include "admot/round.hpp"

#include <cmath>
#include <future>
#include <stdexcept>
#include <string>

namespace admot {

Eigen::VectorXcd differential(const Eigen::VectorXcd& y,
                              const Eigen::MatrixXd& phi_m,
                              const ChannelState& h_hat) {
  if (phi_m.rows() != y.size() || phi_m.cols() != h_hat.size()) {
    throw std::invalid_argument("differential dimensions disagree");
  }
  Eigen::VectorXcd d(y.size());
  d.real() = y.real() - phi_m * h_hat.real();
  d.imag() = y.imag() - phi_m * h_hat.imag();
  return d;
}

double estimation_error(const ChannelState& h_star, const ChannelState& h) {
  if (h_star.size() != h.size()) {
    throw std::invalid_argument("state lengths differ");
  }
  return (h_star - h).norm();
}

EstimateResult estimate_from_observation(const Eigen::VectorXcd& y,
                                         const Eigen::MatrixXd& phi_m,
                                         const ChannelState& h_hat,
                                         const RoundOptions& options) {
  const Eigen::Index m = phi_m.rows();
  const double sigma =
      options.sigma_override.value_or(std::sqrt(2.0 * double(m)));

  EstimateResult result;
  result.y = y;
  result.d = differential(y, phi_m, h_hat);

  // The two part recoveries are independent; run them side by side.
  auto solve_part = [&](const Eigen::VectorXd& rhs) {
    return convex_opt(
        solver::Problem{phi_m, rhs, sigma, options.solver});
  };
  try {
    auto re_future = std::async(std::launch::async, solve_part,
                                Eigen::VectorXd(result.d.real()));
    result.im = solve_part(result.d.imag());
    result.re = re_future.get();
  } catch (const solver::NoConvergence& e) {
    throw solver::NoConvergence(
        "round recovery failed (m=" + std::to_string(m) +
            "): " + e.what(),
        e.last_iterate);
  }

  result.delta_star.resize(h_hat.size());
  result.delta_star.real() = result.re.x_star;
  result.delta_star.imag() = result.im.x_star;
  result.h_star = h_hat + result.delta_star;
  return result;
}

EstimateResult admot_round(const Eigen::MatrixXd& phi_m,
                           const ChannelState& h_hat, Medium& medium,
                           const RoundOptions& options) {
  if (phi_m.cols() != h_hat.size()) {
    throw std::invalid_argument("probe slice and prior state disagree");
  }
  const Eigen::VectorXcd y = medium.probe(phi_m);
  return estimate_from_observation(y, phi_m, h_hat, options);
}

}  // namespace admot
