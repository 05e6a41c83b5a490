#ifndef NOMA_PA_OUTAGE_HPP
#define NOMA_PA_OUTAGE_HPP

// Outage thresholds, analytic outage probabilities and the Monte Carlo
// engine.
//
// A user is in outage when its SNR gain falls below a threshold. Stage m of
// SIC fails at any receiver whose gain is below
//     T_m = (2^{R_m}-1) / (xi (a_m - (2^{R_m}-1) A_m)),
// or at every gain when the margin in the denominator is not positive
// (T_m = +inf). User n needs stages 0..n, so its effective threshold is
// max_{m<=n} T_m. Under TDMA the threshold is (2^{R_n/tau_n}-1)/xi.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "noma_pa/allocation.hpp"
#include "noma_pa/channel.hpp"
#include "noma_pa/config.hpp"
#include "noma_pa/error.hpp"
#include "noma_pa/philox.hpp"

namespace noma_pa {

inline constexpr double kCertainOutage = std::numeric_limits<double>::infinity();

enum class OutageMode { Noma, Oma, Both };

inline bool includes_noma(OutageMode m) { return m != OutageMode::Oma; }
inline bool includes_oma(OutageMode m) { return m != OutageMode::Noma; }

struct UserThresholds {
  std::vector<double> stage;  // T_{n->m} for m = 0..n
  double effective = 0.0;     // max over stage
  bool certain_outage = false;
};

/// T_m for every stage, at config.transmit_snr.
inline std::vector<double> stage_thresholds(const SystemConfig& config,
                                            const PowerAllocation& alloc) {
  const std::size_t k = config.num_users();
  if (alloc.size() != k)
    throw Error(ErrorCode::DimensionMismatch,
                "allocation and configuration differ in user count");
  std::vector<double> out(k);
  for (std::size_t m = 0; m < k; ++m) {
    const double margin = decoding_margin(config, alloc, m);
    out[m] = margin > 0.0
                 ? pow2m1(config.target_rates[m]) / (config.transmit_snr * margin)
                 : kCertainOutage;
  }
  return out;
}

inline std::vector<UserThresholds> noma_thresholds(const SystemConfig& config,
                                                   const PowerAllocation& alloc) {
  const auto stages = stage_thresholds(config, alloc);
  std::vector<UserThresholds> out(stages.size());
  for (std::size_t n = 0; n < stages.size(); ++n) {
    auto& u = out[n];
    u.stage.assign(stages.begin(), stages.begin() + static_cast<std::ptrdiff_t>(n + 1));
    u.effective = *std::max_element(u.stage.begin(), u.stage.end());
    u.certain_outage = std::isinf(u.effective);
  }
  return out;
}

inline double oma_threshold(const SystemConfig& config, std::size_t n) {
  if (n >= config.num_users())
    throw Error(ErrorCode::IndexOutOfRange, "user index out of range",
                static_cast<double>(n));
  return pow2m1(config.normalized_rate(n)) / config.transmit_snr;
}

struct OutageProbability {
  double value = 0.0;
  double complement = 1.0;  // 1 - value, computed directly
};

inline void require_matching_channel(const SystemConfig& config,
                                     const ChannelDescriptor& channel) {
  if (channel_users(channel) != config.num_users())
    throw Error(ErrorCode::DimensionMismatch,
                "channel and configuration differ in user count",
                static_cast<double>(channel_users(channel)));
  if (const auto* m2 = std::get_if<ChannelModel2>(&channel)) validate_channel(*m2);
}

/// Per-user outage probability from the gain distributions. `mode` must be
/// Noma or Oma; the allocation is ignored in Oma mode.
inline std::vector<OutageProbability> analytic_outage(const SystemConfig& config,
                                                      const PowerAllocation& alloc,
                                                      const ChannelDescriptor& channel,
                                                      OutageMode mode) {
  if (mode == OutageMode::Both)
    throw Error(ErrorCode::InvalidArgument, "analytic_outage takes Noma or Oma");
  require_matching_channel(config, channel);
  const std::size_t k = config.num_users();
  std::vector<double> thresholds(k);
  if (mode == OutageMode::Noma) {
    const auto users = noma_thresholds(config, alloc);
    for (std::size_t n = 0; n < k; ++n) thresholds[n] = users[n].effective;
  } else {
    for (std::size_t n = 0; n < k; ++n) thresholds[n] = oma_threshold(config, n);
  }
  std::vector<OutageProbability> out(k);
  for (std::size_t n = 0; n < k; ++n) {
    if (std::isinf(thresholds[n])) {
      out[n] = {1.0, 0.0};
      continue;
    }
    out[n] = {gain_cdf(channel, n, thresholds[n]),
              gain_survival(channel, n, thresholds[n])};
  }
  return out;
}

/// Outage decided from the achievable rates themselves rather than from
/// thresholds. Used to cross-check the threshold shortcut.
struct CapacityOutcome {
  std::vector<bool> user_outage;
  std::vector<std::vector<bool>> stage_failure;  // [n][m], m <= n
};

inline CapacityOutcome capacity_outage(const SystemConfig& config,
                                       const PowerAllocation& alloc,
                                       std::span<const double> gains) {
  const std::size_t k = config.num_users();
  const double xi = config.transmit_snr;
  CapacityOutcome out;
  out.user_outage.assign(k, false);
  out.stage_failure.resize(k);
  for (std::size_t n = 0; n < k; ++n) {
    const double snr = xi * gains[n];
    for (std::size_t m = 0; m <= n; ++m) {
      const double sinr =
          alloc.coefficient(m) * snr / (1.0 + snr * alloc.interference(m));
      const bool fail = std::log2(1.0 + sinr) < config.target_rates[m];
      out.stage_failure[n].push_back(fail);
      if (fail) out.user_outage[n] = true;
    }
  }
  return out;
}

struct MonteCarloOptions {
  std::uint64_t trials = 1'000'000;
  std::uint64_t seed = 1;
  unsigned threads = 0;          // 0 = hardware concurrency
  bool verify_capacity = false;  // recompute rates per trial and compare
};

struct OutageReport {
  double transmit_snr = 1.0;
  double transmit_snr_db = 0.0;
  std::vector<OutageProbability> analytic_noma;  // empty when not computed
  std::vector<OutageProbability> analytic_oma;
  std::uint64_t trials = 0;  // 0 when Monte Carlo was not run
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> noma_failures;               // per user
  std::vector<std::uint64_t> oma_failures;                // per user
  std::vector<std::vector<std::uint64_t>> stage_failures;  // [n][m], m <= n
  std::string channel;

  double empirical_noma(std::size_t n) const { return ratio(noma_failures.at(n)); }
  double empirical_oma(std::size_t n) const { return ratio(oma_failures.at(n)); }
  double empirical_stage(std::size_t n, std::size_t m) const {
    return ratio(stage_failures.at(n).at(m));
  }
  bool has_montecarlo() const { return trials > 0; }

 private:
  double ratio(std::uint64_t count) const {
    return static_cast<double>(count) / static_cast<double>(trials);
  }
};

/// Standard error of an empirical frequency of p over `trials` draws.
inline double binomial_standard_error(double p, std::uint64_t trials) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

namespace detail {

struct PointThresholds {
  std::vector<double> stage;      // T_m
  std::vector<double> effective;  // per user
  std::vector<double> oma;        // per user
  SystemConfig config;            // at this point's SNR, for verification
};

inline PointThresholds point_thresholds(const SystemConfig& config,
                                        const PowerAllocation& alloc) {
  PointThresholds p;
  p.stage = stage_thresholds(config, alloc);
  p.effective.resize(p.stage.size());
  p.oma.resize(p.stage.size());
  double running = 0.0;
  for (std::size_t n = 0; n < p.stage.size(); ++n) {
    running = std::max(running, p.stage[n]);
    p.effective[n] = running;
    p.oma[n] = oma_threshold(config, n);
  }
  p.config = config;
  return p;
}

// Flat counter layout per point: [noma K][oma K][stage K(K+1)/2].
struct Counters {
  std::size_t users;
  std::size_t per_point;
  std::vector<std::uint64_t> data;

  Counters(std::size_t k, std::size_t points)
      : users(k), per_point(2 * k + k * (k + 1) / 2), data(per_point * points, 0) {}

  std::uint64_t* point(std::size_t i) { return data.data() + i * per_point; }
  static std::size_t stage_offset(std::size_t k, std::size_t n, std::size_t m) {
    return 2 * k + n * (n + 1) / 2 + m;
  }
};

inline bool near_threshold(double gain, double threshold) {
  return std::isfinite(threshold) && std::abs(gain - threshold) <= 1e-9 * threshold;
}

inline void check_against_capacity(const PointThresholds& p,
                                   const PowerAllocation& alloc,
                                   std::span<const double> gains) {
  const auto outcome = capacity_outage(p.config, alloc, gains);
  for (std::size_t n = 0; n < gains.size(); ++n) {
    for (std::size_t m = 0; m <= n; ++m) {
      const bool by_threshold = gains[n] < p.stage[m];
      if (by_threshold != outcome.stage_failure[n][m] &&
          !near_threshold(gains[n], p.stage[m]))
        throw std::logic_error("threshold and capacity outage disagree at user " +
                               std::to_string(n + 1) + ", stage " +
                               std::to_string(m + 1));
    }
  }
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Runs `trials` trials, each on its own Philox stream keyed by (seed, trial),
/// and counts failures at every point. Counts are summed as integers, so the
/// result does not depend on the thread count or scheduling.
inline Counters run_trials(const ChannelDescriptor& channel, std::size_t k,
                           const std::vector<PointThresholds>& points,
                           const PowerAllocation* alloc, OutageMode mode,
                           const MonteCarloOptions& options) {
  constexpr std::uint64_t kChunk = 8192;
  const std::uint64_t chunks = (options.trials + kChunk - 1) / kChunk;
  const unsigned workers = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_threads(options.threads), std::max<std::uint64_t>(chunks, 1)));
  std::atomic<std::uint64_t> next{0};
  std::vector<Counters> local(workers, Counters(k, points.size()));
  std::vector<std::exception_ptr> errors(workers);
  const bool noma = includes_noma(mode);
  const bool oma = includes_oma(mode);

  auto work = [&](unsigned w) {
    try {
      std::vector<double> gains(k);
      Counters& counts = local[w];
      for (std::uint64_t c = next++; c < chunks; c = next++) {
        const std::uint64_t end = std::min(options.trials, (c + 1) * kChunk);
        for (std::uint64_t t = c * kChunk; t < end; ++t) {
          auto rng = trial_stream(options.seed, t);
          sample_gains(rng, channel, gains);
          for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            std::uint64_t* out = counts.point(i);
            for (std::size_t n = 0; n < k; ++n) {
              const double g = gains[n];
              if (noma) {
                out[n] += g < p.effective[n];
                std::uint64_t* stage = out + Counters::stage_offset(k, n, 0);
                for (std::size_t m = 0; m <= n; ++m) stage[m] += g < p.stage[m];
              }
              if (oma) out[k + n] += g < p.oma[n];
            }
            if (options.verify_capacity && noma && alloc != nullptr)
              check_against_capacity(p, *alloc, gains);
          }
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
      next = chunks;
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Counters total(k, points.size());
  for (const auto& c : local)
    for (std::size_t i = 0; i < total.data.size(); ++i) total.data[i] += c.data[i];
  return total;
}

inline void unpack(const Counters& counters, std::size_t point, OutageMode mode,
                   OutageReport& report) {
  const std::size_t k = counters.users;
  const std::uint64_t* in = counters.data.data() + point * counters.per_point;
  if (includes_noma(mode)) {
    report.noma_failures.assign(in, in + k);
    report.stage_failures.resize(k);
    for (std::size_t n = 0; n < k; ++n) {
      const std::uint64_t* stage = in + Counters::stage_offset(k, n, 0);
      report.stage_failures[n].assign(stage, stage + n + 1);
    }
  }
  if (includes_oma(mode)) report.oma_failures.assign(in + k, in + 2 * k);
}

}  // namespace detail

/// Empirical outage at config.transmit_snr.
inline OutageReport montecarlo_outage(const SystemConfig& config,
                                      const PowerAllocation& alloc,
                                      const ChannelDescriptor& channel,
                                      const MonteCarloOptions& options,
                                      OutageMode mode = OutageMode::Both) {
  if (options.trials == 0)
    throw Error(ErrorCode::InvalidArgument, "Monte Carlo needs at least one trial");
  require_matching_channel(config, channel);
  std::vector<detail::PointThresholds> points{detail::point_thresholds(config, alloc)};
  const auto counters = detail::run_trials(channel, config.num_users(), points, &alloc,
                                           mode, options);
  OutageReport report;
  report.transmit_snr = config.transmit_snr;
  report.transmit_snr_db = linear_to_db(config.transmit_snr);
  report.trials = options.trials;
  report.seed = options.seed;
  report.channel = describe(channel);
  detail::unpack(counters, 0, mode, report);
  return report;
}

/// Grid start, start+step, ... up to and including stop (within 1e-9 steps).
inline std::vector<double> xi_grid_db(double start, double stop, double step) {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step))
    throw Error(ErrorCode::InvalidArgument, "grid bounds must be finite");
  if (start == stop) return {start};
  if (!(step > 0.0) || stop < start)
    throw Error(ErrorCode::InvalidArgument, "grid needs step > 0 and stop >= start",
                step);
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = start + static_cast<double>(i) * step;
  return grid;
}

struct SweepOptions {
  bool analytic = true;
  bool montecarlo = false;
  OutageMode mode = OutageMode::Both;
  MonteCarloOptions mc;
};

/// One report per grid point. The allocation is derived once since none of
/// the strategies depends on the transmit SNR; all points share the same
/// per-trial gain draws, so point i matches montecarlo_outage at that SNR.
inline std::vector<OutageReport> sweep(const SystemConfig& config, const StrategySpec& spec,
                                       const ChannelDescriptor& channel,
                                       std::span<const double> grid_db,
                                       const SweepOptions& options) {
  if (grid_db.empty()) throw Error(ErrorCode::InvalidArgument, "SNR grid is empty");
  if (!options.analytic && !options.montecarlo)
    throw Error(ErrorCode::InvalidArgument, "sweep needs analytic and/or Monte Carlo");
  if (options.montecarlo && options.mc.trials == 0)
    throw Error(ErrorCode::InvalidArgument, "Monte Carlo needs at least one trial");
  require_canonical(config);
  require_matching_channel(config, channel);
  const PowerAllocation alloc = build_allocation(config, spec);

  std::vector<OutageReport> reports(grid_db.size());
  std::vector<detail::PointThresholds> points;
  for (std::size_t i = 0; i < grid_db.size(); ++i) {
    SystemConfig at = config;
    at.transmit_snr = db_to_linear(grid_db[i]);
    auto& r = reports[i];
    r.transmit_snr = at.transmit_snr;
    r.transmit_snr_db = grid_db[i];
    r.channel = describe(channel);
    if (options.analytic) {
      if (includes_noma(options.mode))
        r.analytic_noma = analytic_outage(at, alloc, channel, OutageMode::Noma);
      if (includes_oma(options.mode))
        r.analytic_oma = analytic_outage(at, alloc, channel, OutageMode::Oma);
    }
    points.push_back(detail::point_thresholds(at, alloc));
  }
  if (options.montecarlo) {
    const auto counters = detail::run_trials(channel, config.num_users(), points, &alloc,
                                             options.mode, options.mc);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      reports[i].trials = options.mc.trials;
      reports[i].seed = options.mc.seed;
      detail::unpack(counters, i, options.mode, reports[i]);
    }
  }
  return reports;
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// CSV with columns xi_db,user,metric,value,trials,seed, ordered by
/// (xi, user, metric). `order` maps canonical position to input index so
/// the user column names users as they appeared in the input; stage metrics
/// are numbered by SIC stage. Both are 1-based.
inline void write_outage_csv(std::ostream& os, std::span<const OutageReport> reports,
                             const DecodingOrder& order) {
  os << "xi_db,user,metric,value,trials,seed\n";
  const std::size_t k = order.size();
  std::vector<std::size_t> position(k);  // input index -> canonical position
  for (std::size_t c = 0; c < k; ++c) position[order[c]] = c;
  for (const auto& r : reports) {
    const std::string prefix = format_number(r.transmit_snr_db) + ",";
    const std::string suffix =
        "," + std::to_string(r.trials) + "," + std::to_string(r.seed) + "\n";
    for (std::size_t input = 0; input < k; ++input) {
      const std::size_t n = position[input];
      const std::string user = std::to_string(input + 1) + ",";
      auto row = [&](const std::string& metric, double value) {
        os << prefix << user << metric << ',' << format_number(value) << suffix;
      };
      if (!r.analytic_noma.empty()) row("noma_analytic", r.analytic_noma[n].value);
      if (!r.analytic_oma.empty()) row("oma_analytic", r.analytic_oma[n].value);
      if (r.has_montecarlo()) {
        if (!r.noma_failures.empty()) row("noma_mc", r.empirical_noma(n));
        if (!r.oma_failures.empty()) row("oma_mc", r.empirical_oma(n));
        if (!r.stage_failures.empty())
          for (std::size_t m = 0; m <= n; ++m)
            row("stage_mc:" + std::to_string(m + 1), r.empirical_stage(n, m));
      }
    }
  }
}

}  // namespace noma_pa

#endif  // NOMA_PA_OUTAGE_HPP
