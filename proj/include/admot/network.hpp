#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "admot/probe.hpp"
#include "admot/round.hpp"

namespace admot {

enum class Duplex { kFull, kHalf };

// Sources transmit only; relays and receivers each monitor the n + n''
// channels reaching them from sources and relays.  Node ordering throughout:
// receivers first, then relays.
struct Topology {
  Eigen::Index n_sources = 0;
  Eigen::Index n_relays = 0;
  Eigen::Index n_receivers = 0;
  Duplex duplex = Duplex::kHalf;

  Eigen::Index state_size() const { return n_sources + n_relays; }
  Eigen::Index node_count() const { return n_receivers + n_relays; }
  bool is_relay_node(Eigen::Index node) const { return node >= n_receivers; }
  // Probe column driven by the relay owning this node index.
  Eigen::Index relay_column(Eigen::Index node) const {
    return n_sources + (node - n_receivers);
  }
  void validate() const;
};

// A node's listening slots plus the matching probe rows.
struct NodeView {
  std::vector<Eigen::Index> slots;
  Eigen::MatrixXd phi;
  Eigen::Index m_beta() const { return Eigen::Index(slots.size()); }
};

// Half duplex: a relay listens exactly on the slots where its own probe
// symbol is zero; receivers listen everywhere.  Full duplex: everyone
// listens everywhere.
std::vector<NodeView> build_node_views(const ProbeMatrix& probe,
                                       Eigen::Index m,
                                       const Topology& topology);

// Solve with one coordinate pinned to zero: drop the column, solve, and
// re-insert the zero.
solver::Solution self_channel_constrained_solve(const solver::Problem& problem,
                                                Eigen::Index fixed_zero_index);

struct NodeEstimate {
  EstimateResult result;
  Eigen::Index m_beta = 0;
  std::optional<std::string> error;  // solver failure, other nodes unaffected
};

struct GeneralRoundResult {
  std::vector<NodeView> views;
  std::vector<Eigen::VectorXcd> observations;
  std::vector<NodeEstimate> estimates;
};

// One monitoring round across the whole network: every slot is generated
// once on the shared medium and handed to all listeners, then each node runs
// its own differential recovery (relays with the self channel pinned to 0).
GeneralRoundResult run_admot_general(const Topology& topology,
                                     const std::vector<ChannelState>& truth,
                                     const std::vector<ChannelState>& priors,
                                     const ProbeMatrix& probe, Eigen::Index m,
                                     const NoiseModel& noise,
                                     std::uint64_t noise_seed,
                                     std::uint64_t round,
                                     const RoundOptions& options = {});

void write_node_results_csv(std::ostream& os, const Topology& topology,
                            const GeneralRoundResult& result,
                            const std::vector<ChannelState>* truth);

}  // namespace admot
