#ifndef NOMA_PA_ORDERING_HPP
#define NOMA_PA_ORDERING_HPP

// Energy cost of SIC decoding orders. For each order the OMA-matching
// allocation is recomputed with users taken in that order; the canonical
// order (ascending R/tau) is the cheapest.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "noma_pa/allocation.hpp"
#include "noma_pa/config.hpp"
#include "noma_pa/error.hpp"

namespace noma_pa {

inline constexpr std::size_t kDefaultMaxEnumerate = 40320;  // 8!

struct OrderEnergyReport {
  DecodingOrder order;
  std::vector<double> coefficients;  // entry s belongs to user order[s]
  double total_power = 0.0;
  /// Orders other than the canonical one may need more than the full budget.
  bool feasible() const { return total_power <= 1.0 + kBudgetTolerance; }
};

/// `order` indexes users of `config` (which need not be canonical).
inline OrderEnergyReport allocation_for_order(const SystemConfig& config,
                                              const DecodingOrder& order) {
  const std::size_t k = config.num_users();
  if (order.size() != k)
    throw Error(ErrorCode::InvalidPermutation,
                "decoding order length differs from the number of users",
                static_cast<double>(order.size()));
  const auto margins = oma_matching_margins(config);
  OrderEnergyReport out{order, std::vector<double>(k), 0.0};
  double tail = 0.0;
  for (std::size_t s = k; s-- > 0;) {
    const std::size_t user = order[s];
    if (s + 1 < k) {
      const std::size_t next = order[s + 1];
      tail = margins[next] + std::exp2(config.target_rates[next]) * tail;
    }
    out.coefficients[s] = margins[user] + pow2m1(config.target_rates[user]) * tail;
  }
  out.total_power = out.coefficients[0] + tail;
  return out;
}

inline std::size_t saturating_factorial(std::size_t k) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= k; ++i) {
    if (f > std::numeric_limits<std::size_t>::max() / i)
      return std::numeric_limits<std::size_t>::max();
    f *= i;
  }
  return f;
}

/// Every decoding order, cheapest first. Ties keep lexicographic order.
inline std::vector<OrderEnergyReport> rank_orders(
    const SystemConfig& config, std::size_t max_enumerate = kDefaultMaxEnumerate) {
  const std::size_t k = config.num_users();
  if (k == 0) throw Error(ErrorCode::EmptySystem, "system has no users");
  const std::size_t count = saturating_factorial(k);
  if (count > max_enumerate)
    throw Error(ErrorCode::TooManyPermutations,
                "K! = " + std::to_string(count) + " exceeds the enumeration limit " +
                    std::to_string(max_enumerate),
                static_cast<double>(count));

  std::vector<std::size_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = i;
  std::vector<OrderEnergyReport> out;
  out.reserve(count);
  do {
    out.push_back(allocation_for_order(config, DecodingOrder(perm)));
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.total_power < b.total_power;
  });
  return out;
}

/// Total power saved by swapping stages `stage` and `stage+1`:
/// S(order) - S(order with the two stages exchanged). Each stage s adds
/// m_{order[s]} 2^{R of all earlier stages} to the total, so only the two
/// swapped stages change, and with a = order[stage], b = order[stage+1] the
/// difference factors exactly as
///   2^{prefix} g_a g_b (1/(2^{r_b}-1) - 1/(2^{r_a}-1)),   g = 2^R - 1.
/// Positive iff r_a > r_b.
inline double adjacent_swap_delta(const SystemConfig& config, const DecodingOrder& order,
                                  std::size_t stage) {
  const std::size_t k = config.num_users();
  if (order.size() != k)
    throw Error(ErrorCode::InvalidPermutation,
                "decoding order length differs from the number of users",
                static_cast<double>(order.size()));
  if (stage + 1 >= k)
    throw Error(ErrorCode::IndexOutOfRange, "swap stage must satisfy stage < K-1",
                static_cast<double>(stage));
  const std::size_t a = order[stage];
  const std::size_t b = order[stage + 1];
  double prefix = 0.0;
  for (std::size_t s = 0; s < stage; ++s) prefix += config.target_rates[order[s]];
  const double gab = pow2m1(config.target_rates[a]) * pow2m1(config.target_rates[b]);
  return std::exp2(prefix) * gab *
         (1.0 / pow2m1(config.normalized_rate(b)) - 1.0 / pow2m1(config.normalized_rate(a)));
}

}  // namespace noma_pa

#endif  // NOMA_PA_ORDERING_HPP
