#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Core>

#include "admot/round.hpp"

namespace admot {

struct CarrierConfig {
  double omega = 0.0;          // angular carrier frequency, rad/s
  double slot_duration = 0.0;  // seconds per slot
  int oversampling = 256;      // midpoint samples per slot

  // Matched filtering needs many carrier cycles per slot.
  static constexpr double kMinOmegaT = 100.0 * 6.283185307179586;

  void validate() const;
  double cycles_per_slot() const;
};

// Channel gains in amplitude/phase form, h(i) = a_i * e^{-j theta_i}.
struct PolarGains {
  Eigen::VectorXd amplitude;  // >= 0
  Eigen::VectorXd phase;      // wrapped to (-pi, pi]
};

// In-phase / quadrature projections a_i cos(theta_i), a_i sin(theta_i).
Eigen::VectorXd cos_view(const PolarGains& gains);
Eigen::VectorXd sin_view(const PolarGains& gains);

// Superimposed BPSK bursts on the oversampling grid, rectangular pulse per
// slot.  Receiver noise is white on the grid with per-sample variance
// oversampling/2, which lands at exactly unit per-part variance after the
// matched filter; this stands in for a continuous-time noise process.
Eigen::VectorXd synthesize_received(const Eigen::MatrixXd& phi_m,
                                    const PolarGains& gains,
                                    const CarrierConfig& carrier,
                                    const NoiseModel& noise,
                                    const NoiseStream& stream,
                                    std::uint64_t round);

struct MatchedFilterOutput {
  Eigen::VectorXd y_cos;
  Eigen::VectorXd y_sin;
};

// Per-slot correlation against cos(wt) and sin(wt), scaled by 2/T.
MatchedFilterOutput matched_filter(const Eigen::VectorXd& samples,
                                   Eigen::Index m,
                                   const CarrierConfig& carrier);

// Quadrant-aware inversion of the two real views; (0,0) maps to (0,0).
PolarGains recover_polar(const Eigen::VectorXd& h_cos,
                         const Eigen::VectorXd& h_sin);

void write_waveform_csv(std::ostream& os, const Eigen::VectorXd& samples,
                        const CarrierConfig& carrier);

// Medium that carries the round over the BPSK frontend: the complex
// observation packs (y_cos, y_sin), so the recovered state packs
// (h_cos, h_sin).
class BpskMedium : public Medium {
 public:
  BpskMedium(PolarGains truth, CarrierConfig carrier, NoiseModel noise,
             NoiseStream stream, std::uint64_t round);

  Eigen::VectorXcd probe(const Eigen::MatrixXd& phi_m) override;

 private:
  PolarGains truth_;
  CarrierConfig carrier_;
  NoiseModel noise_;
  NoiseStream stream_;
  std::uint64_t round_;
};

}  // namespace admot
