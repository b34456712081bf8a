#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "admot/adaptive.hpp"
#include "admot/channel.hpp"
#include "admot/network.hpp"
#include "admot/probe.hpp"
#include "admot/round.hpp"

namespace admot::harness {

// ADMOT_LOG={quiet,info,debug}; default info.
int log_level();
void log_info(const std::string& message);
void log_debug(const std::string& message);

struct AdaptationConfig {
  std::optional<double> phi_tol;  // default 0.05 * sqrt(n * snr)
  Eigen::Index initial_d = 0;
  double grow_factor = 2.0;
  double shrink_margin = 0.25;
  Eigen::Index m_min = 16;
};

struct Seeds {
  std::uint64_t probe = 1;
  std::uint64_t channel = 2;
  std::uint64_t noise = 3;
};

struct ExperimentConfig {
  Eigen::Index n = 100;
  Eigen::Index slot_capacity = 0;  // 0 -> 2n
  int rounds = 50;
  std::vector<double> stabilities = {80.0, 90.0, 98.0};
  double snr_db = 20.0;
  bool noise_enabled = true;
  Alphabet alphabet = Alphabet::kRademacher;
  Seeds seeds;
  AdaptationConfig adaptation;
  solver::Options solver;
  std::optional<double> sigma_override;  // noiseless runs default to 0
  // Per-channel detail snapshot (gain vs estimate).
  int detail_round = 0;  // 0 -> last round
  Eigen::Index detail_lo = 0;
  Eigen::Index detail_hi = 0;  // 0 -> n

  Eigen::Index capacity() const { return slot_capacity > 0 ? slot_capacity : 2 * n; }
  void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

struct RoundRecord {
  int round = 0;
  Eigen::Index m = 0;
  long long cumulative_slots = 0;
  double rel_error = 0.0;
  double abs_error = 0.0;
  int solver_iterations_re = 0;
  int solver_iterations_im = 0;
  double residual_re = 0.0;
  double residual_im = 0.0;
  int scan_steps = 0;
  Verdict first_verdict = Verdict::kSufficient;
  Eigen::Index next_m = 0;
  double wall_ms = 0.0;  // diagnostics only; never serialized
};

struct RoundLog {
  double stability = 0.0;
  std::vector<RoundRecord> rounds;
  std::vector<ScanResult> scans;
  // Snapshot at the configured detail round.
  int detail_round = 0;
  ChannelState detail_truth;
  ChannelState detail_estimate;

  double average_slots(int from_round = 2) const;
};

// The multi-round monitoring loop: evolve the state, probe, recover, adapt
// the slot count, repeat.  Fully deterministic given the config seeds.
RoundLog run_monitoring_experiment(const ExperimentConfig& config,
                                   double stability);

struct Lemma3Result {
  int m = 0;
  long trials = 0;
  long violations = 0;
  double frequency = 0.0;
  double bound = 0.0;  // e^{-0.15 m}
};

// Empirical Pr(||z||_2^2 > 2m) for z in R^m with iid standard normal parts.
Lemma3Result validate_lemma3(int m, long trials, std::uint64_t seed);

struct Theorem2Cell {
  int d = 0;
  double phi = 0.0;
  long trials = 0;
  double upper_frequency = 0.0;
  double lower_frequency = 0.0;
  bool lower_defined = false;
  double bound = 0.0;  // e^{-0.15 d}
};

// Hold-out threshold violation frequencies on instances whose true error is
// fixed by construction.
std::vector<Theorem2Cell> validate_theorem2(const std::vector<int>& ds,
                                            const std::vector<double>& phis,
                                            long trials, std::uint64_t seed,
                                            Eigen::Index n = 64);

struct SweepConfig {
  Eigen::Index n = 256;
  std::vector<Eigen::Index> ks = {2, 4, 8, 16};
  int trials = 20;
  double success_rate = 0.9;
  double rel_error_tol = 1e-3;
  bool noiseless = true;
  double variation_magnitude = 10.0;
  Eigen::Index m_cap = 0;  // 0 -> n
  std::uint64_t seed = 7;
  solver::Options solver;
};

struct ScalingPoint {
  Eigen::Index k = 0;
  Eigen::Index m_min = 0;
  double denom = 0.0;  // k * log2((n+1)/k)
  double ratio = 0.0;
  bool bracketed = false;  // false when even m_cap never succeeds
};

// Bisect the smallest m whose success rate meets the target, per k.
std::vector<ScalingPoint> sweep_scaling(const SweepConfig& config);

// Plot-data emission; one CSV per figure kind, deterministic bytes.
void write_overhead_vs_stability_csv(std::ostream& os, Eigen::Index n,
                                     const std::vector<RoundLog>& logs);
void write_slots_per_round_csv(std::ostream& os,
                               const std::vector<RoundLog>& logs);
void write_error_per_round_csv(std::ostream& os,
                               const std::vector<RoundLog>& logs);
void write_gains_detail_csv(std::ostream& os, const RoundLog& log,
                            Eigen::Index lo, Eigen::Index hi);
void write_round_log_csv(std::ostream& os, const RoundLog& log);
void write_lemma3_csv(std::ostream& os, const std::vector<Lemma3Result>& rows);
void write_theorem2_csv(std::ostream& os,
                        const std::vector<Theorem2Cell>& rows);
void write_scaling_csv(std::ostream& os,
                       const std::vector<ScalingPoint>& rows);

// Writes every figure CSV for a monitoring run into out_dir.
void emit_monitoring_outputs(const ExperimentConfig& config,
                             const std::vector<RoundLog>& logs,
                             const std::string& out_dir);

}  // namespace admot::harness
