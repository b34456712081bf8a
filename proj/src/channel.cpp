#include "admot/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "admot/csv.hpp"

namespace admot {

namespace {

constexpr std::uint64_t kEvolveDomainTag = 0x65766F6C7665u;
constexpr std::uint64_t kNoiseDomainTag = 0x6E6F697365u;

inline double uniform_in(double lo, double hi, double u) {
  return lo + (hi - lo) * u;
}

}  // namespace

double sparsity_distance(const Eigen::VectorXd& v, Eigen::Index k) {
  const Eigen::Index n = v.size();
  if (k < 0 || k > n) {
    throw std::invalid_argument("sparsity order k must lie in [0, n]");
  }
  if (k == 0) return v.lpNorm<1>();
  if (k == n) return 0.0;
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double ma = std::abs(v(a)), mb = std::abs(v(b));
                      return ma != mb ? ma > mb : a < b;
                    });
  double kept = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) kept += std::abs(v(order[size_t(i)]));
  return v.lpNorm<1>() - kept;
}

bool is_sparse_variation(const ChannelState& h, const ChannelState& h_hat,
                         Eigen::Index k, double eps) {
  if (h.size() != h_hat.size()) {
    throw std::invalid_argument("state lengths differ");
  }
  const Eigen::VectorXcd diff = h - h_hat;
  return sparsity_distance(diff.real(), k) <= eps &&
         sparsity_distance(diff.imag(), k) <= eps;
}

void VariationModel::validate() const {
  if (stability_percent < 0.0 || stability_percent > 100.0) {
    throw std::invalid_argument("stability percent must lie in [0, 100]");
  }
  if (small_lo > small_hi || large_lo > large_hi) {
    throw std::invalid_argument("variation ranges must be ordered");
  }
}

ChannelState evolve_state(const ChannelState& h, const VariationModel& model,
                          std::uint64_t round) {
  model.validate();
  const rng::Stream stream =
      rng::Stream(rng::mix64(model.seed, kEvolveDomainTag));
  const double p_small = model.stability_percent / 100.0;
  ChannelState out(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    // Two blocks per entry: branch draw, then the two delta parts.
    const double u_branch = stream.uniform(2 * std::uint64_t(i), round);
    const auto [u_re, u_im] =
        stream.uniform_pair(2 * std::uint64_t(i) + 1, round);
    const bool small = round != 0 && u_branch < p_small;
    const double lo = small ? model.small_lo : model.large_lo;
    const double hi = small ? model.small_hi : model.large_hi;
    out(i) = h(i) + std::complex<double>(uniform_in(lo, hi, u_re),
                                         uniform_in(lo, hi, u_im));
  }
  return out;
}

ChannelState initial_state(Eigen::Index n, const VariationModel& model) {
  return evolve_state(ChannelState::Zero(n), model, 0);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t node_id)
    : stream_(rng::Stream(rng::mix64(seed, kNoiseDomainTag))
                  .substream(node_id)) {}

std::complex<double> NoiseStream::sample(std::uint64_t round,
                                         std::uint64_t slot) const {
  return stream_.complex_gaussian(slot, round);
}

Eigen::VectorXcd transmit_round(const Eigen::MatrixXd& phi_m,
                                const ChannelState& h, const NoiseModel& noise,
                                const NoiseStream& stream,
                                std::uint64_t round) {
  if (phi_m.cols() != h.size()) {
    throw std::invalid_argument("probe slice and state dimensions disagree");
  }
  Eigen::VectorXcd y(phi_m.rows());
  y.real() = phi_m * h.real();
  y.imag() = phi_m * h.imag();
  if (noise.enabled) {
    for (Eigen::Index s = 0; s < y.size(); ++s) {
      y(s) += stream.sample(round, std::uint64_t(s));
    }
  }
  return y;
}

ChannelState renormalize(const ChannelState& g, double power,
                         double noise_std) {
  if (power <= 0.0 || noise_std <= 0.0) {
    throw std::invalid_argument("power and noise std must be positive");
  }
  return g * (std::sqrt(power) / noise_std);
}

ChannelState denormalize(const ChannelState& h, double power,
                         double noise_std) {
  if (power <= 0.0 || noise_std <= 0.0) {
    throw std::invalid_argument("power and noise std must be positive");
  }
  return h * (noise_std / std::sqrt(power));
}

void write_state_csv(std::ostream& os, const ChannelState& h) {
  os << "index,re,im\n";
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    os << i << ',' << csv::num(h(i).real()) << ',' << csv::num(h(i).imag())
       << '\n';
  }
}

void write_observation_csv(std::ostream& os, const Eigen::VectorXcd& y) {
  os << "slot,re,im\n";
  for (Eigen::Index s = 0; s < y.size(); ++s) {
    os << s << ',' << csv::num(y(s).real()) << ',' << csv::num(y(s).imag())
       << '\n';
  }
}

}  // namespace admot
