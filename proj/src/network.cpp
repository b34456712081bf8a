#include "admot/network.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "admot/csv.hpp"

namespace admot {

void Topology::validate() const {
  if (n_sources < 0 || n_relays < 0 || n_receivers < 0) {
    throw std::invalid_argument("node counts must be nonnegative");
  }
  if (state_size() < 1) {
    throw std::invalid_argument("network needs at least one transmitting node");
  }
  if (node_count() < 1) {
    throw std::invalid_argument("network needs at least one monitoring node");
  }
}

std::vector<NodeView> build_node_views(const ProbeMatrix& probe,
                                       Eigen::Index m,
                                       const Topology& topology) {
  topology.validate();
  if (topology.duplex == Duplex::kHalf &&
      probe.alphabet() != Alphabet::kTernary) {
    throw std::invalid_argument(
        "half-duplex scheduling requires a ternary probe matrix");
  }
  if (probe.cols() != topology.state_size()) {
    throw std::invalid_argument("probe columns must equal sources + relays");
  }
  if (m < 1 || m > probe.rows()) {
    throw std::out_of_range("m exceeds probe capacity");
  }

  std::vector<NodeView> views(size_t(topology.node_count()));
  for (Eigen::Index node = 0; node < topology.node_count(); ++node) {
    NodeView& view = views[size_t(node)];
    const bool relay = topology.is_relay_node(node);
    for (Eigen::Index s = 0; s < m; ++s) {
      const bool listens =
          !relay || topology.duplex == Duplex::kFull ||
          probe.entries()(s, topology.relay_column(node)) == 0;
      if (listens) view.slots.push_back(s);
    }
    view.phi.resize(view.m_beta(), probe.cols());
    for (Eigen::Index r = 0; r < view.m_beta(); ++r) {
      view.phi.row(r) =
          probe.entries().row(view.slots[size_t(r)]).cast<double>();
    }
  }
  return views;
}

solver::Solution self_channel_constrained_solve(const solver::Problem& problem,
                                                Eigen::Index fixed_zero_index) {
  const Eigen::Index n = problem.a.cols();
  if (fixed_zero_index < 0 || fixed_zero_index >= n) {
    throw std::out_of_range("constrained coordinate out of range");
  }
  solver::Problem reduced = problem;
  reduced.a.resize(problem.a.rows(), n - 1);
  reduced.a << problem.a.leftCols(fixed_zero_index),
      problem.a.rightCols(n - 1 - fixed_zero_index);
  solver::Solution sol = convex_opt(reduced);
  Eigen::VectorXd full(n);
  full << sol.x_star.head(fixed_zero_index), 0.0,
      sol.x_star.tail(n - 1 - fixed_zero_index);
  sol.x_star = full;
  sol.residual_norm = (problem.a * full - problem.y).norm();
  return sol;
}

namespace {

EstimateResult estimate_node(const NodeView& view, const Eigen::VectorXcd& y,
                             const ChannelState& prior,
                             std::optional<Eigen::Index> pinned,
                             const RoundOptions& options) {
  const double sigma = options.sigma_override.value_or(
      std::sqrt(2.0 * double(view.m_beta())));
  EstimateResult est;
  est.y = y;
  est.d = differential(y, view.phi, prior);
  auto solve_part = [&](const Eigen::VectorXd& rhs) {
    solver::Problem p{view.phi, rhs, sigma, options.solver};
    return pinned ? self_channel_constrained_solve(p, *pinned)
                  : convex_opt(p);
  };
  est.re = solve_part(est.d.real());
  est.im = solve_part(est.d.imag());
  est.delta_star.resize(prior.size());
  est.delta_star.real() = est.re.x_star;
  est.delta_star.imag() = est.im.x_star;
  est.h_star = prior + est.delta_star;
  return est;
}

}  // namespace

GeneralRoundResult run_admot_general(const Topology& topology,
                                     const std::vector<ChannelState>& truth,
                                     const std::vector<ChannelState>& priors,
                                     const ProbeMatrix& probe, Eigen::Index m,
                                     const NoiseModel& noise,
                                     std::uint64_t noise_seed,
                                     std::uint64_t round,
                                     const RoundOptions& options) {
  topology.validate();
  const auto nodes = size_t(topology.node_count());
  if (truth.size() != nodes || priors.size() != nodes) {
    throw std::invalid_argument("state lists must cover every monitoring node");
  }
  for (Eigen::Index node = 0; node < topology.node_count(); ++node) {
    if (truth[size_t(node)].size() != topology.state_size() ||
        priors[size_t(node)].size() != topology.state_size()) {
      throw std::invalid_argument("state length must be sources + relays");
    }
    if (topology.is_relay_node(node) &&
        truth[size_t(node)](topology.relay_column(node)) !=
            std::complex<double>(0.0, 0.0)) {
      throw std::invalid_argument("relay self channel gain must be zero");
    }
  }

  GeneralRoundResult result;
  result.views = build_node_views(probe, m, topology);

  // A listening relay's own probe column is zero on its listening slots, so
  // the shared row works unchanged as the transmit coefficient vector.
  result.observations.resize(nodes);
  std::vector<Eigen::Index> cursor(nodes, 0);
  std::vector<NoiseStream> streams;
  streams.reserve(nodes);
  for (size_t node = 0; node < nodes; ++node) {
    result.observations[node].resize(result.views[node].m_beta());
    streams.emplace_back(noise_seed, std::uint64_t(node));
  }
  for (Eigen::Index s = 0; s < m; ++s) {
    for (size_t node = 0; node < nodes; ++node) {
      const NodeView& view = result.views[node];
      Eigen::Index& at = cursor[node];
      if (at >= view.m_beta() || view.slots[size_t(at)] != s) continue;
      const Eigen::VectorXd row = view.phi.row(at);
      const ChannelState& h = truth[node];
      std::complex<double> sample(row.dot(h.real()), row.dot(h.imag()));
      if (noise.enabled) {
        sample += streams[node].sample(round, std::uint64_t(s));
      }
      result.observations[node](at) = sample;
      ++at;
    }
  }

  result.estimates.resize(nodes);
  for (Eigen::Index node = 0; node < topology.node_count(); ++node) {
    NodeEstimate& out = result.estimates[size_t(node)];
    const NodeView& view = result.views[size_t(node)];
    out.m_beta = view.m_beta();
    std::optional<Eigen::Index> pinned;
    if (topology.is_relay_node(node)) pinned = topology.relay_column(node);
    try {
      if (view.m_beta() < 1) {
        throw std::runtime_error("node has no listening slots");
      }
      out.result = estimate_node(view, result.observations[size_t(node)],
                                 priors[size_t(node)], pinned, options);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  }
  return result;
}

void write_node_results_csv(std::ostream& os, const Topology& topology,
                            const GeneralRoundResult& result,
                            const std::vector<ChannelState>* truth) {
  os << "node,kind,m_beta,status,rel_error,residual_re,residual_im\n";
  for (Eigen::Index node = 0; node < topology.node_count(); ++node) {
    const NodeEstimate& est = result.estimates[size_t(node)];
    os << node << ','
       << (topology.is_relay_node(node) ? "relay" : "receiver") << ','
       << est.m_beta << ',' << (est.error ? "error" : "ok") << ',';
    if (!est.error && truth) {
      const ChannelState& h = (*truth)[size_t(node)];
      const double denom = std::max(h.norm(), 1e-300);
      os << csv::num(estimation_error(est.result.h_star, h) / denom);
    }
    os << ',';
    if (!est.error) os << csv::num(est.result.re.residual_norm);
    os << ',';
    if (!est.error) os << csv::num(est.result.im.residual_norm);
    os << '\n';
  }
}

}  // namespace admot
