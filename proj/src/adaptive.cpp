#include "admot/adaptive.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "admot/csv.hpp"

namespace admot {

namespace {

constexpr double kLowerPhiFloor = 2.8284271247461903;  // 2*sqrt(2)

Eigen::Index clamp_index(Eigen::Index v, Eigen::Index lo, Eigen::Index hi) {
  return std::max(lo, std::min(v, hi));
}

}  // namespace

HoldoutSplit split_holdout(const Eigen::VectorXcd& y,
                           const Eigen::MatrixXd& phi_m, Eigen::Index d) {
  const Eigen::Index m = y.size();
  if (phi_m.rows() != m) {
    throw std::invalid_argument("observation and probe slice sizes differ");
  }
  if (d < 1 || d >= m) {
    throw std::invalid_argument("hold-out size must lie in [1, m)");
  }
  HoldoutSplit split;
  split.d = d;
  split.y1 = y.head(m - d);
  split.y2 = y.tail(d);
  split.phi1 = phi_m.topRows(m - d);
  split.phi2 = phi_m.bottomRows(d);
  return split;
}

double test_statistic(const Eigen::VectorXcd& y2, const Eigen::MatrixXd& phi2,
                      const ChannelState& h_star_t) {
  return differential(y2, phi2, h_star_t).squaredNorm();
}

ErrorThresholds error_thresholds(Eigen::Index d, double phi) {
  if (d < 1) throw std::invalid_argument("hold-out size must be positive");
  if (phi < 0.0) throw std::invalid_argument("phi must be nonnegative");
  ErrorThresholds t;
  const double dd = double(d);
  t.upper = dd * std::pow(phi * std::sqrt(1.5) + 2.0, 2.0);
  if (phi > kLowerPhiFloor) {
    t.lower = dd * std::pow(phi / std::sqrt(2.0) - 2.0, 2.0);
  }
  return t;
}

Verdict classify(double statistic, Eigen::Index d, double phi_tol) {
  return statistic > error_thresholds(d, phi_tol).upper
             ? Verdict::kInsufficient
             : Verdict::kSufficient;
}

void AdaptationPolicy::validate() const {
  if (phi_tol < 0.0) throw std::invalid_argument("phi_tol must be >= 0");
  if (grow_factor <= 1.0) {
    throw std::invalid_argument("grow factor must exceed 1");
  }
  if (shrink_margin < 0.0) {
    throw std::invalid_argument("shrink margin must be >= 0");
  }
  if (m_min < 1 || m_max < m_min) {
    throw std::invalid_argument("slot bounds must satisfy 1 <= m_min <= m_max");
  }
}

Eigen::Index AdaptationPolicy::holdout_for(Eigen::Index m) const {
  if (initial_d > 0) return initial_d;
  return std::max<Eigen::Index>(8, (m + 7) / 8);
}

ScanResult scan_and_update(const Eigen::VectorXcd& y,
                           const Eigen::MatrixXd& phi_m,
                           const ChannelState& h_hat,
                           const AdaptationPolicy& policy,
                           const RoundOptions& round_options) {
  policy.validate();
  const Eigen::Index m = y.size();
  if (phi_m.rows() != m) {
    throw std::invalid_argument("observation and probe slice sizes differ");
  }

  ScanResult result;
  const Eigen::Index d0 = policy.holdout_for(m);
  if (m - d0 < 1) {
    result.degenerate = true;
    result.next_m = m;
    result.found_prefix = m;
    return result;
  }
  // The scan floor: normally m_min, but never above the first prefix.
  const Eigen::Index floor = std::max<Eigen::Index>(
      1, std::min<Eigen::Index>(policy.m_min, m - d0));

  Eigen::Index previous = m;
  Eigen::Index holdout = d0;
  Eigen::Index last_sufficient = m;
  bool insufficient_seen = false;
  while (true) {
    const Eigen::Index prefix = std::max(m - holdout, floor);
    const Eigen::Index block = previous - prefix;

    // Re-estimate on the prefix with the radius matched to its length, then
    // test on the adjacent block that no earlier step has touched.  A prefix
    // the solver cannot even fit counts as insufficient.
    RoundOptions prefix_options = round_options;
    if (!prefix_options.sigma_override) {
      prefix_options.sigma_override = std::sqrt(2.0 * double(prefix));
    }
    const ErrorThresholds thresholds = error_thresholds(block, policy.phi_tol);
    double stat = std::numeric_limits<double>::infinity();
    try {
      const EstimateResult est = estimate_from_observation(
          y.head(prefix), phi_m.topRows(prefix), h_hat, prefix_options);
      stat = test_statistic(y.segment(prefix, block),
                            phi_m.middleRows(prefix, block), est.h_star);
    } catch (const solver::NoConvergence&) {
    }
    const Verdict verdict = stat > thresholds.upper ? Verdict::kInsufficient
                                                    : Verdict::kSufficient;
    result.steps.push_back({prefix, block, stat, thresholds.upper, verdict});
    if (verdict == Verdict::kInsufficient) {
      insufficient_seen = true;
      break;
    }
    last_sufficient = prefix;
    if (prefix == floor) break;
    previous = prefix;
    holdout *= 2;
  }

  if (insufficient_seen && last_sufficient == m) {
    // Even the full round minus one hold-out block was too short: grow.
    const auto grown =
        Eigen::Index(std::ceil(policy.grow_factor * double(m)));
    result.found_prefix = m;
    result.next_m = clamp_index(grown, policy.m_min, policy.m_max);
    return result;
  }

  result.found_prefix = last_sufficient;
  const auto margin = Eigen::Index(
      std::ceil(policy.shrink_margin * double(last_sufficient)));
  result.next_m =
      clamp_index(last_sufficient + margin, policy.m_min, policy.m_max);
  return result;
}

void write_scan_csv(std::ostream& os, const std::vector<ScanResult>& scans) {
  os << "round,step,prefix,block,statistic,upper,verdict,next_m\n";
  for (size_t r = 0; r < scans.size(); ++r) {
    const auto& scan = scans[r];
    for (size_t s = 0; s < scan.steps.size(); ++s) {
      const auto& step = scan.steps[s];
      os << (r + 1) << ',' << s << ',' << step.prefix << ',' << step.block
         << ',' << csv::num(step.statistic) << ',' << csv::num(step.upper)
         << ','
         << (step.verdict == Verdict::kSufficient ? "sufficient"
                                                  : "insufficient")
         << ',' << scan.next_m << '\n';
    }
  }
}

}  // namespace admot
