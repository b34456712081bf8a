#include "admot/bpsk.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "admot/csv.hpp"

namespace admot {

namespace {
constexpr double kPi = 3.141592653589793238462643383279;
}

void CarrierConfig::validate() const {
  if (omega <= 0.0 || slot_duration <= 0.0) {
    throw std::invalid_argument("carrier frequency and slot duration must be positive");
  }
  if (omega * slot_duration < kMinOmegaT) {
    throw std::invalid_argument(
        "omega * slot_duration too small for matched filtering");
  }
  if (oversampling < 4) {
    throw std::invalid_argument("oversampling must be at least 4");
  }
}

double CarrierConfig::cycles_per_slot() const {
  return omega * slot_duration / (2.0 * kPi);
}

Eigen::VectorXd cos_view(const PolarGains& gains) {
  return gains.amplitude.array() * gains.phase.array().cos();
}

Eigen::VectorXd sin_view(const PolarGains& gains) {
  return gains.amplitude.array() * gains.phase.array().sin();
}

Eigen::VectorXd synthesize_received(const Eigen::MatrixXd& phi_m,
                                    const PolarGains& gains,
                                    const CarrierConfig& carrier,
                                    const NoiseModel& noise,
                                    const NoiseStream& stream,
                                    std::uint64_t round) {
  carrier.validate();
  if (phi_m.cols() != gains.amplitude.size() ||
      gains.amplitude.size() != gains.phase.size()) {
    throw std::invalid_argument("probe slice and gains disagree");
  }
  const Eigen::Index m = phi_m.rows();
  const int s_per_slot = carrier.oversampling;

  // a_i cos(wt - theta_i) = cos(wt) a_i cos(theta_i) + sin(wt) a_i sin(theta_i)
  const Eigen::VectorXd slot_cos = phi_m * cos_view(gains);
  const Eigen::VectorXd slot_sin = phi_m * sin_view(gains);

  const double noise_std = std::sqrt(double(s_per_slot) / 2.0);
  Eigen::VectorXd y(m * s_per_slot);
  Eigen::Index j = 0;
  for (Eigen::Index s = 0; s < m; ++s) {
    for (int k = 0; k < s_per_slot; ++k, ++j) {
      const double t = (double(s) + (double(k) + 0.5) / s_per_slot) *
                       carrier.slot_duration;
      double v = slot_cos(s) * std::cos(carrier.omega * t) +
                 slot_sin(s) * std::sin(carrier.omega * t);
      if (noise.enabled) {
        const auto pair =
            stream.stream().gaussian_pair(std::uint64_t(j) >> 1, round);
        v += noise_std * ((j & 1) ? pair.second : pair.first);
      }
      y(j) = v;
    }
  }
  return y;
}

MatchedFilterOutput matched_filter(const Eigen::VectorXd& samples,
                                   Eigen::Index m,
                                   const CarrierConfig& carrier) {
  carrier.validate();
  if (m < 1 || samples.size() != m * carrier.oversampling) {
    throw std::invalid_argument("samples do not cover m whole slots");
  }
  const int s_per_slot = carrier.oversampling;
  MatchedFilterOutput out;
  out.y_cos.resize(m);
  out.y_sin.resize(m);
  Eigen::Index j = 0;
  for (Eigen::Index s = 0; s < m; ++s) {
    double acc_cos = 0.0, acc_sin = 0.0;
    for (int k = 0; k < s_per_slot; ++k, ++j) {
      const double t = (double(s) + (double(k) + 0.5) / s_per_slot) *
                       carrier.slot_duration;
      acc_cos += samples(j) * std::cos(carrier.omega * t);
      acc_sin += samples(j) * std::sin(carrier.omega * t);
    }
    // (2/T) * integral over the slot, midpoint rule.
    out.y_cos(s) = 2.0 * acc_cos / s_per_slot;
    out.y_sin(s) = 2.0 * acc_sin / s_per_slot;
  }
  return out;
}

PolarGains recover_polar(const Eigen::VectorXd& h_cos,
                         const Eigen::VectorXd& h_sin) {
  if (h_cos.size() != h_sin.size()) {
    throw std::invalid_argument("view lengths differ");
  }
  PolarGains gains;
  gains.amplitude.resize(h_cos.size());
  gains.phase.resize(h_cos.size());
  for (Eigen::Index i = 0; i < h_cos.size(); ++i) {
    const double a = std::hypot(h_cos(i), h_sin(i));
    gains.amplitude(i) = a;
    if (a == 0.0) {
      gains.phase(i) = 0.0;
    } else {
      double theta = std::atan2(h_sin(i), h_cos(i));
      if (theta <= -kPi) theta = kPi;  // wrap to (-pi, pi]
      gains.phase(i) = theta;
    }
  }
  return gains;
}

void write_waveform_csv(std::ostream& os, const Eigen::VectorXd& samples,
                        const CarrierConfig& carrier) {
  const double dt = carrier.slot_duration / carrier.oversampling;
  os << "time,value\n";
  for (Eigen::Index j = 0; j < samples.size(); ++j) {
    os << csv::num((double(j) + 0.5) * dt) << ',' << csv::num(samples(j))
       << '\n';
  }
}

BpskMedium::BpskMedium(PolarGains truth, CarrierConfig carrier,
                       NoiseModel noise, NoiseStream stream,
                       std::uint64_t round)
    : truth_(std::move(truth)),
      carrier_(carrier),
      noise_(noise),
      stream_(stream),
      round_(round) {
  carrier_.validate();
}

Eigen::VectorXcd BpskMedium::probe(const Eigen::MatrixXd& phi_m) {
  const Eigen::VectorXd waveform =
      synthesize_received(phi_m, truth_, carrier_, noise_, stream_, round_);
  const MatchedFilterOutput views =
      matched_filter(waveform, phi_m.rows(), carrier_);
  Eigen::VectorXcd y(phi_m.rows());
  y.real() = views.y_cos;
  y.imag() = views.y_sin;
  return y;
}

}  // namespace admot
