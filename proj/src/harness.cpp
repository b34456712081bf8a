#include "admot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "admot/csv.hpp"

namespace admot::harness {

namespace {

using nlohmann::json;

constexpr std::uint64_t kLemma3Tag = 0x6C656D6D6133u;
constexpr std::uint64_t kTheorem2Tag = 0x746832u;
constexpr std::uint64_t kSweepTag = 0x7377656570u;
constexpr std::uint64_t kStabilityTag = 0x73746162u;

double snr_linear(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

// Probe amplitude that puts the average initial channel SNR at the
// configured value: the initial per-part draws are uniform on the large
// range, so E|g|^2 = 2*hi^2/3.
double normalization_amplitude(const VariationModel& model, double snr_db) {
  const double rms = std::sqrt(2.0 * model.large_hi * model.large_hi / 3.0);
  return std::sqrt(snr_linear(snr_db)) / rms;
}

template <typename Fn>
void parallel_trials(long trials, Fn&& fn) {
  const long hw = long(std::max(1u, std::thread::hardware_concurrency()));
  const long workers = std::min<long>(hw, trials);
  if (workers <= 1) {
    for (long t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::future<void>> futures;
  futures.reserve(size_t(workers));
  for (long w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      for (long t = w; t < trials; t += workers) fn(t);
    }));
  }
  for (auto& f : futures) f.get();
}

}  // namespace

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("ADMOT_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
  }();
  return level;
}

void log_info(const std::string& message) {
  if (log_level() >= 1) std::cerr << "[admot] " << message << '\n';
}

void log_debug(const std::string& message) {
  if (log_level() >= 2) std::cerr << "[admot] " << message << '\n';
}

void ExperimentConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");
  if (capacity() < n) {
    throw std::invalid_argument("slot capacity must be at least n");
  }
  if (stabilities.empty()) {
    throw std::invalid_argument("at least one stability value is required");
  }
  for (double s : stabilities) {
    if (s < 0.0 || s > 100.0) {
      throw std::invalid_argument("stability must lie in [0, 100]");
    }
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j = json::parse(in);

  ExperimentConfig cfg;
  cfg.n = j.value("n", cfg.n);
  cfg.slot_capacity = j.value("slot_capacity", cfg.slot_capacity);
  cfg.rounds = j.value("rounds", cfg.rounds);
  if (j.contains("stabilities")) {
    cfg.stabilities = j.at("stabilities").get<std::vector<double>>();
  }
  cfg.snr_db = j.value("snr_db", cfg.snr_db);
  cfg.noise_enabled = j.value("noise", cfg.noise_enabled);
  if (j.contains("alphabet")) {
    cfg.alphabet = alphabet_from_string(j.at("alphabet").get<std::string>());
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    cfg.seeds.probe = s.value("probe", cfg.seeds.probe);
    cfg.seeds.channel = s.value("channel", cfg.seeds.channel);
    cfg.seeds.noise = s.value("noise", cfg.seeds.noise);
  }
  if (j.contains("adaptation")) {
    const auto& a = j.at("adaptation");
    if (a.contains("phi_tol")) cfg.adaptation.phi_tol = a.at("phi_tol").get<double>();
    cfg.adaptation.initial_d = a.value("initial_d", cfg.adaptation.initial_d);
    cfg.adaptation.grow_factor = a.value("grow_factor", cfg.adaptation.grow_factor);
    cfg.adaptation.shrink_margin =
        a.value("shrink_margin", cfg.adaptation.shrink_margin);
    cfg.adaptation.m_min = a.value("m_min", cfg.adaptation.m_min);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (s.contains("feasibility_tol")) {
      cfg.solver.feasibility_tol = s.at("feasibility_tol").get<double>();
    }
    cfg.solver.optimality_tol = s.value("optimality_tol", cfg.solver.optimality_tol);
    cfg.solver.max_iterations = s.value("max_iterations", cfg.solver.max_iterations);
  }
  if (j.contains("sigma_override")) {
    cfg.sigma_override = j.at("sigma_override").get<double>();
  }
  if (j.contains("detail")) {
    const auto& d = j.at("detail");
    cfg.detail_round = d.value("round", cfg.detail_round);
    cfg.detail_lo = d.value("lo", cfg.detail_lo);
    cfg.detail_hi = d.value("hi", cfg.detail_hi);
  }
  cfg.validate();
  return cfg;
}

double RoundLog::average_slots(int from_round) const {
  double total = 0.0;
  long count = 0;
  for (const auto& rec : rounds) {
    if (rec.round < from_round) continue;
    total += double(rec.m);
    ++count;
  }
  return count ? total / double(count) : 0.0;
}

RoundLog run_monitoring_experiment(const ExperimentConfig& config,
                                   double stability) {
  config.validate();
  const Eigen::Index n = config.n;
  const Eigen::Index capacity = config.capacity();

  const ProbeMatrix probe =
      ProbeMatrix::generate(config.seeds.probe, capacity, n, config.alphabet);

  VariationModel model;
  model.stability_percent = stability;
  model.seed = rng::mix64(config.seeds.channel,
                          rng::mix64(kStabilityTag,
                                     std::uint64_t(std::llround(stability * 1000))));
  const double amp = normalization_amplitude(model, config.snr_db);
  const double power = amp * amp;  // renormalize with unit noise std

  const double phi_tol = config.adaptation.phi_tol.value_or(
      0.05 * std::sqrt(double(n) * snr_linear(config.snr_db)));
  AdaptationPolicy policy;
  policy.phi_tol = phi_tol;
  policy.initial_d = config.adaptation.initial_d;
  policy.grow_factor = config.adaptation.grow_factor;
  policy.shrink_margin = config.adaptation.shrink_margin;
  policy.m_min = std::min(config.adaptation.m_min, capacity);
  policy.m_max = capacity;

  RoundOptions round_options;
  round_options.solver = config.solver;
  if (config.sigma_override) {
    round_options.sigma_override = config.sigma_override;
  } else if (!config.noise_enabled) {
    // Noise-free runs recover exactly; the noise-matched radius would only
    // shrink the solution.
    round_options.sigma_override = 0.0;
  }

  const NoiseModel noise{config.noise_enabled};
  const std::uint64_t noise_seed =
      rng::mix64(config.seeds.noise,
                 rng::mix64(kStabilityTag,
                            std::uint64_t(std::llround(stability * 1000))));

  RoundLog log;
  log.stability = stability;
  log.detail_round =
      config.detail_round > 0 ? config.detail_round : config.rounds;

  ChannelState g = initial_state(n, model);  // unnormalized gains
  ChannelState h_hat = ChannelState::Zero(n);
  Eigen::Index m = std::min(n, capacity);
  long long cumulative = 0;

  for (int r = 1; r <= config.rounds; ++r) {
    const auto started = std::chrono::steady_clock::now();
    g = evolve_state(g, model, std::uint64_t(r));
    const ChannelState h_true = renormalize(g, power, 1.0);

    const Eigen::MatrixXd phi_m = probe.row_slice(m);
    SimulatedMedium medium(h_true, noise, NoiseStream(noise_seed),
                           std::uint64_t(r));
    EstimateResult est;
    ScanResult scan;
    try {
      est = admot_round(phi_m, h_hat, medium, round_options);
      scan = scan_and_update(est.y, phi_m, h_hat, policy, round_options);
    } catch (const solver::NoConvergence& e) {
      // Keep the prior and the slot count; the experiment goes on.
      log_info("round " + std::to_string(r) + " failed: " + e.what());
      est.h_star = h_hat;
      est.delta_star = ChannelState::Zero(n);
      scan.degenerate = true;
      scan.next_m = m;
      scan.found_prefix = m;
    }

    cumulative += m;
    RoundRecord rec;
    rec.round = r;
    rec.m = m;
    rec.cumulative_slots = cumulative;
    rec.abs_error = estimation_error(est.h_star, h_true);
    rec.rel_error = rec.abs_error / std::max(h_true.norm(), 1e-300);
    rec.solver_iterations_re = est.re.iterations;
    rec.solver_iterations_im = est.im.iterations;
    rec.residual_re = est.re.residual_norm;
    rec.residual_im = est.im.residual_norm;
    rec.scan_steps = int(scan.steps.size());
    rec.first_verdict = scan.degenerate || scan.steps.empty()
                            ? Verdict::kSufficient
                            : scan.steps.front().verdict;
    rec.next_m = scan.next_m;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    log.rounds.push_back(rec);
    log.scans.push_back(scan);
    if (scan.degenerate) {
      log_info("round " + std::to_string(r) + ": hold-out scan degenerate, keeping m=" +
               std::to_string(m));
    }

    if (r == log.detail_round) {
      log.detail_truth = h_true;
      log.detail_estimate = est.h_star;
    }

    h_hat = est.h_star;
    m = scan.next_m;
  }
  return log;
}

Lemma3Result validate_lemma3(int m, long trials, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("m must be at least 2");
  if (trials < 1000) throw std::invalid_argument("need at least 1e3 trials");
  const rng::Stream root = rng::Stream(rng::mix64(seed, kLemma3Tag));
  std::atomic<long> violations{0};
  parallel_trials(trials, [&](long t) {
    const rng::Stream stream = root.substream(std::uint64_t(t));
    double sq = 0.0;
    for (int i = 0; i < m; i += 2) {
      const auto pair = stream.gaussian_pair(std::uint64_t(i) / 2);
      sq += pair.first * pair.first;
      if (i + 1 < m) sq += pair.second * pair.second;
    }
    if (sq > 2.0 * double(m)) violations.fetch_add(1);
  });
  Lemma3Result result;
  result.m = m;
  result.trials = trials;
  result.violations = violations.load();
  result.frequency = double(result.violations) / double(trials);
  result.bound = std::exp(-0.15 * double(m));
  return result;
}

std::vector<Theorem2Cell> validate_theorem2(const std::vector<int>& ds,
                                            const std::vector<double>& phis,
                                            long trials, std::uint64_t seed,
                                            Eigen::Index n) {
  const rng::Stream root = rng::Stream(rng::mix64(seed, kTheorem2Tag));
  std::vector<Theorem2Cell> cells;
  for (int d : ds) {
    for (double phi : phis) {
      const ErrorThresholds thresholds = error_thresholds(d, phi);
      const rng::Stream cell_stream =
          root.substream(std::uint64_t(d))
              .substream(std::uint64_t(std::llround(phi * 1000)));
      std::atomic<long> upper_hits{0};
      std::atomic<long> lower_hits{0};
      parallel_trials(trials, [&](long t) {
        const rng::Stream s = cell_stream.substream(std::uint64_t(t));
        // Error vector with exactly ||delta||_2 = phi, random direction.
        Eigen::VectorXcd delta(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          delta(i) = s.complex_gaussian(std::uint64_t(i), 1);
        }
        const double norm = delta.norm();
        delta *= (phi > 0.0 && norm > 0.0) ? phi / norm : 0.0;
        // D2 = Phi2 * delta + Z2 over d hold-out slots; 128 probe signs per
        // PRNG block.
        double stat = 0.0;
        const std::uint64_t words = (std::uint64_t(n) + 127) / 128;
        for (int row = 0; row < d; ++row) {
          std::complex<double> u(0.0, 0.0);
          for (std::uint64_t w = 0; w < words; ++w) {
            const rng::Block bits =
                s.block(std::uint64_t(row) * words + w, 2);
            const Eigen::Index base = Eigen::Index(w) * 128;
            const Eigen::Index stop = std::min<Eigen::Index>(n - base, 128);
            for (Eigen::Index j = 0; j < stop; ++j) {
              const std::uint64_t word = j < 64 ? bits.lo : bits.hi;
              const bool plus = (word >> (j & 63)) & 1;
              u += plus ? delta(base + j) : -delta(base + j);
            }
          }
          u += s.complex_gaussian(std::uint64_t(row), 3);
          stat += std::norm(u);
        }
        if (stat > thresholds.upper) upper_hits.fetch_add(1);
        if (thresholds.lower && stat < *thresholds.lower) {
          lower_hits.fetch_add(1);
        }
      });
      Theorem2Cell cell;
      cell.d = d;
      cell.phi = phi;
      cell.trials = trials;
      cell.upper_frequency = double(upper_hits.load()) / double(trials);
      cell.lower_frequency = double(lower_hits.load()) / double(trials);
      cell.lower_defined = thresholds.lower.has_value();
      cell.bound = std::exp(-0.15 * double(d));
      cells.push_back(cell);
    }
  }
  return cells;
}

namespace {

// One recovery trial for the scaling sweep; success is relative error within
// the configured tolerance.
bool sweep_trial(const SweepConfig& config, Eigen::Index k, long trial,
                 Eigen::Index m) {
  const std::uint64_t base =
      rng::mix64(config.seed, rng::mix64(kSweepTag, std::uint64_t(k)));
  const std::uint64_t trial_seed = rng::mix64(base, std::uint64_t(trial));
  const rng::Stream s(trial_seed);

  const Eigen::Index n = config.n;
  ChannelState h_hat(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h_hat(i) = s.complex_gaussian(std::uint64_t(i), 0);
  }
  // k distinct varied channels, +-magnitude per part.
  ChannelState h = h_hat;
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto pick = std::min<Eigen::Index>(
        Eigen::Index(double(n - i) * s.uniform(std::uint64_t(i), 1)),
        n - i - 1);
    std::swap(order[size_t(i)], order[size_t(i + pick)]);
    const auto [u1, u2] = s.uniform_pair(std::uint64_t(i), 2);
    const double re = (u1 <= 0.5 ? -1.0 : 1.0) * config.variation_magnitude;
    const double im = (u2 < 0.5 ? -1.0 : 1.0) * config.variation_magnitude;
    h(order[size_t(i)]) += std::complex<double>(re, im);
  }

  const ProbeMatrix probe = ProbeMatrix::generate(
      trial_seed, std::max(m, Eigen::Index(1)), n, Alphabet::kRademacher);
  RoundOptions options;
  options.solver = config.solver;
  if (config.noiseless) options.sigma_override = 0.0;
  const NoiseModel noise{!config.noiseless};
  SimulatedMedium medium(h, noise, NoiseStream(trial_seed), 1);
  try {
    const EstimateResult est =
        admot_round(probe.row_slice(m), h_hat, medium, options);
    const double rel = estimation_error(est.h_star, h) / h.norm();
    return rel <= config.rel_error_tol;
  } catch (const solver::NoConvergence&) {
    return false;
  }
}

}  // namespace

std::vector<ScalingPoint> sweep_scaling(const SweepConfig& config) {
  const Eigen::Index cap = config.m_cap > 0 ? config.m_cap : config.n;
  std::vector<ScalingPoint> points;
  for (Eigen::Index k : config.ks) {
    auto success = [&](Eigen::Index m) {
      std::atomic<int> good{0};
      parallel_trials(config.trials, [&](long t) {
        if (sweep_trial(config, k, t, m)) good.fetch_add(1);
      });
      return double(good.load()) / double(config.trials) >=
             config.success_rate;
    };
    ScalingPoint point;
    point.k = k;
    point.denom =
        double(k) * std::log2(double(config.n + 1) / double(k));
    if (!success(cap)) {
      point.bracketed = false;
      point.m_min = cap;
      point.ratio = double(cap) / point.denom;
      log_info("scaling sweep: k=" + std::to_string(k) +
               " not bracketed at m_cap=" + std::to_string(cap));
      points.push_back(point);
      continue;
    }
    Eigen::Index lo = 1, hi = cap;
    while (lo < hi) {
      const Eigen::Index mid = lo + (hi - lo) / 2;
      if (success(mid)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    point.bracketed = true;
    point.m_min = hi;
    point.ratio = double(hi) / point.denom;
    log_debug("scaling sweep: k=" + std::to_string(k) +
              " m_min=" + std::to_string(hi));
    points.push_back(point);
  }
  return points;
}

void write_overhead_vs_stability_csv(std::ostream& os, Eigen::Index n,
                                     const std::vector<RoundLog>& logs) {
  os << "stability,avg_slots,baseline_slots\n";
  for (const auto& log : logs) {
    os << csv::num(log.stability) << ',' << csv::num(log.average_slots())
       << ',' << n << '\n';
  }
}

void write_slots_per_round_csv(std::ostream& os,
                               const std::vector<RoundLog>& logs) {
  os << "stability,round,slots\n";
  for (const auto& log : logs) {
    for (const auto& rec : log.rounds) {
      os << csv::num(log.stability) << ',' << rec.round << ',' << rec.m
         << '\n';
    }
  }
}

void write_error_per_round_csv(std::ostream& os,
                               const std::vector<RoundLog>& logs) {
  os << "stability,round,rel_error\n";
  for (const auto& log : logs) {
    for (const auto& rec : log.rounds) {
      os << csv::num(log.stability) << ',' << rec.round << ','
         << csv::num(rec.rel_error) << '\n';
    }
  }
}

void write_gains_detail_csv(std::ostream& os, const RoundLog& log,
                            Eigen::Index lo, Eigen::Index hi) {
  os << "channel,re_abs_true,re_abs_estimate\n";
  if (!log.detail_truth.size()) return;
  const Eigen::Index upper =
      hi > 0 ? std::min(hi, log.detail_truth.size()) : log.detail_truth.size();
  for (Eigen::Index i = lo; i < upper; ++i) {
    os << i << ',' << csv::num(std::abs(log.detail_truth(i).real())) << ','
       << csv::num(std::abs(log.detail_estimate(i).real())) << '\n';
  }
}

void write_round_log_csv(std::ostream& os, const RoundLog& log) {
  os << "round,m,cumulative_slots,rel_error,abs_error,solver_iterations_re,"
        "solver_iterations_im,residual_re,residual_im,scan_steps,"
        "first_verdict,next_m\n";
  for (const auto& rec : log.rounds) {
    os << rec.round << ',' << rec.m << ',' << rec.cumulative_slots << ','
       << csv::num(rec.rel_error) << ',' << csv::num(rec.abs_error) << ','
       << rec.solver_iterations_re << ',' << rec.solver_iterations_im << ','
       << csv::num(rec.residual_re) << ',' << csv::num(rec.residual_im) << ','
       << rec.scan_steps << ','
       << (rec.first_verdict == Verdict::kSufficient ? "sufficient"
                                                     : "insufficient")
       << ',' << rec.next_m << '\n';
  }
}

void write_lemma3_csv(std::ostream& os,
                      const std::vector<Lemma3Result>& rows) {
  os << "m,trials,violations,frequency,bound\n";
  for (const auto& r : rows) {
    os << r.m << ',' << r.trials << ',' << r.violations << ','
       << csv::num(r.frequency) << ',' << csv::num(r.bound) << '\n';
  }
}

void write_theorem2_csv(std::ostream& os,
                        const std::vector<Theorem2Cell>& rows) {
  os << "d,phi,trials,upper_frequency,lower_frequency,lower_defined,bound\n";
  for (const auto& r : rows) {
    os << r.d << ',' << csv::num(r.phi) << ',' << r.trials << ','
       << csv::num(r.upper_frequency) << ',' << csv::num(r.lower_frequency)
       << ',' << (r.lower_defined ? 1 : 0) << ',' << csv::num(r.bound)
       << '\n';
  }
}

void write_scaling_csv(std::ostream& os,
                       const std::vector<ScalingPoint>& rows) {
  os << "k,m_min,denom,ratio,bracketed\n";
  for (const auto& r : rows) {
    os << r.k << ',' << r.m_min << ',' << csv::num(r.denom) << ','
       << csv::num(r.ratio) << ',' << (r.bracketed ? 1 : 0) << '\n';
  }
}

void emit_monitoring_outputs(const ExperimentConfig& config,
                             const std::vector<RoundLog>& logs,
                             const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    auto os = csv::open_out((fs::path(out_dir) / "overhead_vs_stability.csv").string());
    write_overhead_vs_stability_csv(os, config.n, logs);
  }
  {
    auto os = csv::open_out((fs::path(out_dir) / "slots_per_round.csv").string());
    write_slots_per_round_csv(os, logs);
  }
  {
    auto os = csv::open_out((fs::path(out_dir) / "error_per_round.csv").string());
    write_error_per_round_csv(os, logs);
  }
  for (const auto& log : logs) {
    std::string tag = csv::num(log.stability);
    std::replace(tag.begin(), tag.end(), '.', '_');
    {
      auto os = csv::open_out(
          (fs::path(out_dir) / ("round_log_s" + tag + ".csv")).string());
      write_round_log_csv(os, log);
    }
    {
      auto os = csv::open_out(
          (fs::path(out_dir) / ("adaptation_trace_s" + tag + ".csv")).string());
      write_scan_csv(os, log.scans);
    }
    {
      auto os = csv::open_out(
          (fs::path(out_dir) / ("gains_detail_s" + tag + ".csv")).string());
      write_gains_detail_csv(os, log, config.detail_lo, config.detail_hi);
    }
  }
}

}  // namespace admot::harness
