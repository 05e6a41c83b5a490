#ifndef NOMA_PA_ALLOCATION_HPP
#define NOMA_PA_ALLOCATION_HPP

// Power-allocation mathematics for downlink NOMA with target rates.
//
// All functions that take a SystemConfig expect it canonical: user n is
// decoded at SIC stage n and R_n/tau_n is nondecreasing in n. Empty products
// are 1 and empty sums 0, which is what makes the n = 0 and n = K-1 forms
// fall out of the general expressions.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "noma_pa/config.hpp"
#include "noma_pa/error.hpp"

namespace noma_pa {

/// Relative slack used when deciding whether an adjacent pair satisfies the
/// well-behaved inequality with equality.
inline constexpr double kWellBehavedRelTolerance = 1e-12;

/// Largest tolerable interference when decoding the signal of stage `stage`:
/// 2^-(R_0 + ... + R_stage). Defined for stage < K-1 only; the last user
/// decodes its own signal interference-free.
inline double interference_ceiling(std::span<const double> rates, std::size_t stage) {
  if (rates.size() < 2 || stage + 1 >= rates.size())
    throw Error(ErrorCode::IndexOutOfRange,
                "interference ceiling requires stage < K-1",
                static_cast<double>(stage));
  double sum = 0.0;
  for (std::size_t l = 0; l <= stage; ++l) sum += rates[l];
  return std::exp2(-sum);
}

/// Decoding margin of stage n: a_n - (2^{R_n}-1) A_n. The stage can be
/// decoded with nonzero probability only if this is positive.
inline double decoding_margin(const SystemConfig& config,
                              const PowerAllocation& alloc, std::size_t n) {
  return alloc.coefficient(n) - pow2m1(config.target_rates[n]) * alloc.interference(n);
}

struct AllocationDiagnostics {
  std::vector<double> ceilings;          // K-1 interference ceilings
  std::vector<double> margins;           // K decoding margins
  std::vector<bool> certain_outage;      // A_n above its ceiling
  std::vector<bool> margin_positive;     // own-stage margin > 0
  std::vector<bool> sic_feasible;        // margins of stages 0..n all > 0
  std::vector<bool> wellbehaved_pairwise;  // K-1 adjacent checks, equality allowed
  std::vector<bool> wellbehaved_strict;    // same, strict inequality

  bool any_certain_outage() const {
    for (bool b : certain_outage)
      if (b) return true;
    return false;
  }
  bool all_margins_positive() const {
    for (bool b : margin_positive)
      if (!b) return false;
    return true;
  }
  bool well_behaved() const {
    for (bool b : wellbehaved_pairwise)
      if (!b) return false;
    return all_margins_positive();
  }
};

inline AllocationDiagnostics diagnose(const PowerAllocation& alloc,
                                      const SystemConfig& config) {
  const std::size_t k = config.num_users();
  if (alloc.size() != k || config.oma_fractions.size() != k)
    throw Error(ErrorCode::DimensionMismatch,
                "allocation and configuration differ in user count",
                static_cast<double>(alloc.size()));
  const auto& rates = config.target_rates;

  AllocationDiagnostics d;
  d.margins.resize(k);
  d.certain_outage.assign(k, false);
  d.margin_positive.assign(k, false);
  d.sic_feasible.assign(k, false);
  bool feasible_so_far = true;
  for (std::size_t n = 0; n < k; ++n) {
    if (n + 1 < k) {
      d.ceilings.push_back(interference_ceiling(rates, n));
      d.certain_outage[n] = alloc.interference(n) > d.ceilings.back();
    }
    d.margins[n] = decoding_margin(config, alloc, n);
    d.margin_positive[n] = d.margins[n] > 0.0;
    feasible_so_far = feasible_so_far && d.margin_positive[n];
    d.sic_feasible[n] = feasible_so_far;
  }
  for (std::size_t n = 0; n + 1 < k; ++n) {
    const double g_n = pow2m1(rates[n]);
    const double g_next = pow2m1(rates[n + 1]);
    const double bound =
        alloc.coefficient(n + 1) * std::exp2(rates[n + 1]) * g_n / g_next;
    const double a = alloc.coefficient(n);
    d.wellbehaved_pairwise.push_back(a >= bound - kWellBehavedRelTolerance * bound);
    d.wellbehaved_strict.push_back(a > bound);
  }
  return d;
}

/// (2^{R_n}-1)/(2^{R_n/tau_n}-1): the decoding margin at which user n's NOMA
/// outage threshold coincides with its OMA threshold.
inline std::vector<double> oma_matching_margins(const SystemConfig& config) {
  std::vector<double> out(config.num_users());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = pow2m1(config.target_rates[n]) / pow2m1(config.normalized_rate(n));
  return out;
}

struct OmaEquivalentAllocation {
  std::vector<double> coefficients;  // minimal a_n with NOMA threshold == OMA threshold
  std::vector<double> interference;  // A_n^oma
  double total = 0.0;
  double headroom = 0.0;             // 1 - total, clamped at 0

  PowerAllocation allocation() const {
    return PowerAllocation::from_coefficients(coefficients);
  }
};

/// Minimal allocation under which every user's NOMA outage threshold equals
/// its TDMA threshold. Solved backwards from the last user:
///   A_n = m_{n+1} + 2^{R_{n+1}} A_{n+1},   a_n = m_n + (2^{R_n}-1) A_n
/// with m_n the OMA-matching margins.
inline OmaEquivalentAllocation oma_equivalent(const SystemConfig& config) {
  require_canonical(config);
  const std::size_t k = config.num_users();
  const auto margins = oma_matching_margins(config);
  OmaEquivalentAllocation out;
  out.coefficients.resize(k);
  out.interference.resize(k);
  double tail = 0.0;
  for (std::size_t n = k; n-- > 0;) {
    if (n + 1 < k)
      tail = margins[n + 1] + std::exp2(config.target_rates[n + 1]) * tail;
    out.interference[n] = tail;
    out.coefficients[n] = margins[n] + pow2m1(config.target_rates[n]) * tail;
  }
  out.total = out.coefficients[0] + out.interference[0];
  out.headroom = out.total < 1.0 ? 1.0 - out.total : 0.0;
  return out;
}

/// Extra interference c_n seen by stage n due to the epsilons of later users:
///   c_n = eps_{n+1} + 2^{R_{n+1}} c_{n+1},  c_{K-1} = 0.
inline std::vector<double> epsilon_interference(const SystemConfig& config,
                                                const EpsilonVector& eps) {
  const std::size_t k = config.num_users();
  if (eps.size() != k)
    throw Error(ErrorCode::DimensionMismatch, "epsilon vector length differs from K",
                static_cast<double>(eps.size()));
  std::vector<double> c(k, 0.0);
  for (std::size_t n = k - 1; n-- > 0;)
    c[n] = eps[n + 1] + std::exp2(config.target_rates[n + 1]) * c[n + 1];
  return c;
}

/// a_n = a~_n + eps_n + (2^{R_n}-1) c_n. The resulting decoding margin of
/// stage n is exactly m_n + eps_n.
inline PowerAllocation general_allocation(const SystemConfig& config,
                                          const EpsilonVector& eps) {
  require_canonical(config);
  const auto base = oma_equivalent(config);
  const auto c = epsilon_interference(config, eps);
  std::vector<double> a(config.num_users());
  for (std::size_t n = 0; n < a.size(); ++n)
    a[n] = base.coefficients[n] + eps[n] + pow2m1(config.target_rates[n]) * c[n];
  return PowerAllocation::from_coefficients(std::move(a));
}

/// Total extra power caused by eps_n once every earlier user is topped up to
/// keep its own threshold: eps_n * prod_{l<n} 2^{R_l}.
inline std::vector<double> epsilon_totals(const SystemConfig& config,
                                          const EpsilonVector& eps) {
  if (eps.size() != config.num_users())
    throw Error(ErrorCode::DimensionMismatch, "epsilon vector length differs from K");
  std::vector<double> out(eps.size());
  double prefix = 0.0;
  for (std::size_t n = 0; n < eps.size(); ++n) {
    out[n] = eps[n] * std::exp2(prefix);
    prefix += config.target_rates[n];
  }
  return out;
}

struct EpsilonBounds {
  double ordering;  // keeps stage n-1's threshold below stage n's
  double budget;    // keeps the total allocation within 1
  double limit() const { return std::min(ordering, budget); }
};

/// Both upper limits on eps_n given eps_0..eps_{n-1}, for n >= 1.
///   ordering: eps_{n-1} g_n/g_{n-1} + g_n/(2^{r_{n-1}}-1) - g_n/(2^{r_n}-1)
///   budget:   (1-A_tot) prod_{l<n} 2^{-R_l} - sum_{m<n} eps_m prod_{l=m}^{n-1} 2^{-R_l}
/// with g_n = 2^{R_n}-1.
inline EpsilonBounds epsilon_bounds(const SystemConfig& config,
                                    std::span<const double> eps_prefix, std::size_t n) {
  require_canonical(config);
  const std::size_t k = config.num_users();
  if (n == 0 || n >= k)
    throw Error(ErrorCode::IndexOutOfRange, "epsilon bound requires 1 <= n < K",
                static_cast<double>(n));
  if (eps_prefix.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "epsilon prefix must hold n entries",
                static_cast<double>(eps_prefix.size()));
  for (double e : eps_prefix)
    if (!(e >= 0.0))
      throw Error(ErrorCode::NegativeEpsilon, "epsilon prefix entries must be >= 0", e);

  const auto& R = config.target_rates;
  const double g_prev = pow2m1(R[n - 1]);
  const double g_n = pow2m1(R[n]);
  EpsilonBounds b;
  b.ordering = eps_prefix[n - 1] * g_n / g_prev +
               g_n / pow2m1(config.normalized_rate(n - 1)) -
               g_n / pow2m1(config.normalized_rate(n));

  const double headroom = 1.0 - oma_equivalent(config).total;
  double rate_sum = 0.0;  // sum_{l=m}^{n-1} R_l, built from m = n-1 down
  double spent = 0.0;
  for (std::size_t m = n; m-- > 0;) {
    rate_sum += R[m];
    spent += eps_prefix[m] * std::exp2(-rate_sum);
  }
  b.budget = headroom * std::exp2(-rate_sum) - spent;
  return b;
}

inline double epsilon_upper_bound(const SystemConfig& config,
                                  std::span<const double> eps_prefix, std::size_t n) {
  return epsilon_bounds(config, eps_prefix, n).limit();
}

/// Splits the whole headroom so that the epsilon totals follow
///   eps_tot_{n-1} = eps_tot_n 2^{R_n} (2^{R_{n-1}}-1)/(2^{R_n}-1),
/// which gives, with S = sum R,
///   eps_n = (1-A_tot) (2^{R_n}-1)/(2^S-1) 2^{sum_{l>n} R_l - sum_{l<n} R_l}.
inline EpsilonVector proportional_strategy(const SystemConfig& config) {
  require_canonical(config);
  const std::size_t k = config.num_users();
  const double headroom = oma_equivalent(config).headroom;
  const auto& R = config.target_rates;
  double total_rate = 0.0;
  for (double r : R) total_rate += r;
  const double denom = pow2m1(total_rate);

  std::vector<double> eps(k);
  double before = 0.0;
  for (std::size_t n = 0; n < k; ++n) {
    const double after = total_rate - before - R[n];
    eps[n] = headroom * (pow2m1(R[n]) / denom) * std::exp2(after - before);
    before += R[n];
  }
  return EpsilonVector(std::move(eps));
}

/// Allocation with interference A_stage set to `interference`, used to probe
/// the certain-outage ceiling. Users after `stage` share the interference in
/// the proportions of the proportional strategy. Users up to `stage` split
/// the rest so that A_{m-1} = rho 2^{R_m} A_m with total power 1, giving every
/// head stage the margin (rho-1) 2^{R_m} A_m: positive below the ceiling and
/// negative above it.
inline PowerAllocation ceiling_probe(const SystemConfig& config, std::size_t stage,
                                     double interference) {
  require_canonical(config);
  const std::size_t k = config.num_users();
  const double ceiling = interference_ceiling(config.target_rates, stage);
  if (!(interference > 0.0) || !(interference < 1.0))
    throw Error(ErrorCode::InvalidArgument, "probe interference must lie in (0, 1)",
                interference);

  const auto reference = general_allocation(config, proportional_strategy(config));
  const double tail_sum = reference.interference(stage);
  std::vector<double> a(k);
  for (std::size_t l = stage + 1; l < k; ++l)
    a[l] = reference.coefficient(l) * (interference / tail_sum);

  const double rho = std::pow(ceiling / interference, 1.0 / static_cast<double>(stage + 1));
  double inner = interference;  // A_m
  for (std::size_t m = stage + 1; m-- > 0;) {
    const double outer = (m == 0) ? 1.0 : rho * std::exp2(config.target_rates[m]) * inner;
    a[m] = outer - inner;
    if (a[m] < 0.0)
      throw Error(ErrorCode::InvalidArgument,
                  "probe interference too far above the ceiling for this construction",
                  interference);
    inner = outer;
  }
  return PowerAllocation::from_coefficients(std::move(a));
}

struct OmaEquivalentStrategy {};
struct ProportionalStrategy {};
struct ExplicitCoefficients {
  std::vector<double> coefficients;  // canonical order
};
struct ExplicitEpsilon {
  std::vector<double> epsilon;  // canonical order
};
struct CeilingProbe {
  std::size_t stage = 0;
  double ratio = 1.0;   // interference = ratio * ceiling + offset
  double offset = 0.0;
};

using StrategySpec = std::variant<OmaEquivalentStrategy, ProportionalStrategy,
                                  ExplicitCoefficients, ExplicitEpsilon, CeilingProbe>;

inline std::string strategy_name(const StrategySpec& spec) {
  struct Visitor {
    std::string operator()(const OmaEquivalentStrategy&) const { return "oma-equivalent"; }
    std::string operator()(const ProportionalStrategy&) const { return "proportional"; }
    std::string operator()(const ExplicitCoefficients&) const { return "explicit"; }
    std::string operator()(const ExplicitEpsilon&) const { return "explicit"; }
    std::string operator()(const CeilingProbe&) const { return "ceiling-probe"; }
  };
  return std::visit(Visitor{}, spec);
}

/// Allocations here do not depend on the transmit SNR.
inline PowerAllocation build_allocation(const SystemConfig& config,
                                        const StrategySpec& spec) {
  require_canonical(config);
  struct Visitor {
    const SystemConfig& config;
    PowerAllocation operator()(const OmaEquivalentStrategy&) const {
      return oma_equivalent(config).allocation();
    }
    PowerAllocation operator()(const ProportionalStrategy&) const {
      return general_allocation(config, proportional_strategy(config));
    }
    PowerAllocation operator()(const ExplicitCoefficients& s) const {
      if (s.coefficients.size() != config.num_users())
        throw Error(ErrorCode::DimensionMismatch,
                    "explicit coefficients must have one entry per user");
      return PowerAllocation::from_coefficients(s.coefficients);
    }
    PowerAllocation operator()(const ExplicitEpsilon& s) const {
      return general_allocation(config, EpsilonVector(s.epsilon));
    }
    PowerAllocation operator()(const CeilingProbe& s) const {
      const double ceiling = interference_ceiling(config.target_rates, s.stage);
      return ceiling_probe(config, s.stage, s.ratio * ceiling + s.offset);
    }
  };
  return std::visit(Visitor{config}, spec);
}

}  // namespace noma_pa

#endif  // NOMA_PA_ALLOCATION_HPP
