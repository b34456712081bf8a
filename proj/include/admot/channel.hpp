#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>

#include <Eigen/Core>

#include "admot/rng.hpp"

namespace admot {

// Channel gains in normalized sqrt-SNR units; index i is the channel from
// transmitter i into the observing node.
using ChannelState = Eigen::VectorXcd;

// l1 distance from v to its best k-term approximation.  Ties between equal
// magnitudes keep the lowest index among the k retained components.
double sparsity_distance(const Eigen::VectorXd& v, Eigen::Index k);

// True iff both real and imaginary parts of h - h_hat are within eps of
// k-sparsity.
bool is_sparse_variation(const ChannelState& h, const ChannelState& h_hat,
                         Eigen::Index k, double eps);

// Per-round state variation: with probability stability% each entry moves by
// a small uniform delta per part, otherwise by a large one.
struct VariationModel {
  double stability_percent = 90.0;
  double small_lo = -10.0;
  double small_hi = 10.0;
  double large_lo = -250.0;
  double large_hi = 250.0;
  std::uint64_t seed = 0;

  void validate() const;
};

ChannelState evolve_state(const ChannelState& h, const VariationModel& model,
                          std::uint64_t round);

// Zero-knowledge initial state: one large-range draw per entry and part
// (addressed as round 0 of the model's stream).
ChannelState initial_state(Eigen::Index n, const VariationModel& model);

struct NoiseModel {
  bool enabled = true;  // per-part variance is fixed at 1 when enabled
};

// Complex N(0,1)+jN(0,1) noise samples addressed by (round, slot); node_id
// separates streams of different observing nodes.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed, std::uint64_t node_id = 0);
  std::complex<double> sample(std::uint64_t round, std::uint64_t slot) const;
  const rng::Stream& stream() const { return stream_; }

 private:
  rng::Stream stream_;
};

// One slotted probing round: y(s) = sum_i phi(s,i) h(i) + z(s).
Eigen::VectorXcd transmit_round(const Eigen::MatrixXd& phi_m,
                                const ChannelState& h, const NoiseModel& noise,
                                const NoiseStream& stream, std::uint64_t round);

// Map true gains to normalized units, h = g * sqrt(power) / noise_std, and
// back.
ChannelState renormalize(const ChannelState& g, double power,
                         double noise_std);
ChannelState denormalize(const ChannelState& h, double power,
                         double noise_std);

void write_state_csv(std::ostream& os, const ChannelState& h);
void write_observation_csv(std::ostream& os, const Eigen::VectorXcd& y);

}  // namespace admot
