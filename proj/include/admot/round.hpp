#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "admot/channel.hpp"
#include "admot/solver.hpp"

namespace admot {

// Step A capability: something that turns a probe slice into received slot
// samples.  Simulated slotted medium and the BPSK frontend both implement it,
// so the estimation steps never care where the samples came from.
class Medium {
 public:
  virtual ~Medium() = default;
  virtual Eigen::VectorXcd probe(const Eigen::MatrixXd& phi_m) = 0;
};

class SimulatedMedium : public Medium {
 public:
  SimulatedMedium(ChannelState h, NoiseModel noise, NoiseStream stream,
                  std::uint64_t round)
      : h_(std::move(h)), noise_(noise), stream_(stream), round_(round) {}

  Eigen::VectorXcd probe(const Eigen::MatrixXd& phi_m) override {
    return transmit_round(phi_m, h_, noise_, stream_, round_);
  }

 private:
  ChannelState h_;
  NoiseModel noise_;
  NoiseStream stream_;
  std::uint64_t round_;
};

struct RoundOptions {
  // Residual radius used for the split recovery; defaults to sqrt(2m).
  std::optional<double> sigma_override;
  solver::Options solver;
};

struct EstimateResult {
  ChannelState h_star;
  Eigen::VectorXcd delta_star;
  Eigen::VectorXcd y;  // slot observations
  Eigen::VectorXcd d;  // differential
  solver::Solution re;
  solver::Solution im;
};

// d = y - phi_m * h_hat
Eigen::VectorXcd differential(const Eigen::VectorXcd& y,
                              const Eigen::MatrixXd& phi_m,
                              const ChannelState& h_hat);

// Complex l2 norm of h_star - h.
double estimation_error(const ChannelState& h_star, const ChannelState& h);

// One monitoring round: probe, differential, split l1 recovery of the two
// parts, state update h* = h_hat + delta*.  Feedback-free by construction.
EstimateResult admot_round(const Eigen::MatrixXd& phi_m,
                           const ChannelState& h_hat, Medium& medium,
                           const RoundOptions& options = {});

// Steps B-D only, for re-estimation on an already observed prefix.
EstimateResult estimate_from_observation(const Eigen::VectorXcd& y,
                                         const Eigen::MatrixXd& phi_m,
                                         const ChannelState& h_hat,
                                         const RoundOptions& options = {});

}  // namespace admot
