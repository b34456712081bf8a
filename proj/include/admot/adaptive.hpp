#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "admot/round.hpp"

namespace admot {

// Ordered split of a round's rows into an estimation prefix and a hold-out
// tail block.
struct HoldoutSplit {
  Eigen::Index d = 0;
  Eigen::VectorXcd y1;
  Eigen::VectorXcd y2;
  Eigen::MatrixXd phi1;
  Eigen::MatrixXd phi2;
};

HoldoutSplit split_holdout(const Eigen::VectorXcd& y,
                           const Eigen::MatrixXd& phi_m, Eigen::Index d);

// ||y2 - phi2 * h||_2^2 under the complex norm.
double test_statistic(const Eigen::VectorXcd& y2, const Eigen::MatrixXd& phi2,
                      const ChannelState& h_star_t);

struct ErrorThresholds {
  double upper = 0.0;
  // Defined only when phi > 2*sqrt(2).
  std::optional<double> lower;
};

// upper = d*(phi*sqrt(3/2)+2)^2, lower = d*(phi/sqrt(2)-2)^2.
ErrorThresholds error_thresholds(Eigen::Index d, double phi);

enum class Verdict { kSufficient, kInsufficient };

// Insufficient iff the statistic exceeds the upper threshold at phi_tol;
// with true error below phi_tol this misfires with probability decaying
// exponentially in the hold-out size.
Verdict classify(double statistic, Eigen::Index d, double phi_tol);

struct AdaptationPolicy {
  double phi_tol = 4.0;
  Eigen::Index initial_d = 0;   // 0 -> max(8, ceil(m/8))
  double grow_factor = 2.0;     // applied when the whole round was too short
  double shrink_margin = 0.25;  // slack on the smallest sufficient prefix
  Eigen::Index m_min = 16;
  Eigen::Index m_max = 0;  // slot capacity; required

  void validate() const;
  Eigen::Index holdout_for(Eigen::Index m) const;
};

struct ScanStep {
  Eigen::Index prefix = 0;  // estimation rows [0, prefix)
  Eigen::Index block = 0;   // test rows [prefix, prefix + block)
  double statistic = 0.0;
  double upper = 0.0;
  Verdict verdict = Verdict::kSufficient;
};

struct ScanResult {
  std::vector<ScanStep> steps;
  Eigen::Index found_prefix = 0;  // smallest prefix that still classified ok
  Eigen::Index next_m = 0;
  bool degenerate = false;  // round too short to split; m kept unchanged
};

// Hold-out scan over one completed round: estimate on a shrinking prefix,
// test each estimate on the adjacent untouched block (block sizes double as
// the prefix shrinks), and derive the next round's slot count.
ScanResult scan_and_update(const Eigen::VectorXcd& y,
                           const Eigen::MatrixXd& phi_m,
                           const ChannelState& h_hat,
                           const AdaptationPolicy& policy,
                           const RoundOptions& round_options = {});

void write_scan_csv(std::ostream& os, const std::vector<ScanResult>& scans);

}  // namespace admot
