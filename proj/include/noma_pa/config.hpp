#ifndef NOMA_PA_CONFIG_HPP
#define NOMA_PA_CONFIG_HPP

// Domain types shared by every module: the system configuration, canonical
// user indexing, power allocations, decoding orders and epsilon vectors.
//
// User and stage indices are 0-based throughout the C++ API. Outputs meant
// for people (CLI JSON/CSV) are 1-based.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "noma_pa/error.hpp"

namespace noma_pa {

inline constexpr double kFractionSumTolerance = 1e-9;
inline constexpr double kBudgetTolerance = 1e-12;

/// 2^x - 1 without cancellation for small x.
inline double pow2m1(double x) { return std::expm1(x * std::numbers::ln2); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

struct SystemConfig {
  std::vector<double> target_rates;   // R_n, bps/Hz
  std::vector<double> oma_fractions;  // tau_n, TDMA time share
  double transmit_snr = 1.0;          // xi, linear

  std::size_t num_users() const { return target_rates.size(); }
  double normalized_rate(std::size_t n) const {
    return target_rates[n] / oma_fractions[n];
  }
};

struct NormalizedRates {
  std::vector<double> values;  // r_n = R_n / tau_n
};

inline NormalizedRates normalized_rates(const SystemConfig& config) {
  NormalizedRates out;
  out.values.reserve(config.num_users());
  for (std::size_t n = 0; n < config.num_users(); ++n)
    out.values.push_back(config.normalized_rate(n));
  return out;
}

/// Checks every invariant except canonical ordering.
inline SystemConfig validate_config(const SystemConfig& raw) {
  const std::size_t k = raw.target_rates.size();
  if (k == 0) throw Error(ErrorCode::EmptySystem, "system has no users");
  if (raw.oma_fractions.size() != k)
    throw Error(ErrorCode::DimensionMismatch,
                "target_rates and oma_fractions differ in length",
                static_cast<double>(raw.oma_fractions.size()));
  for (std::size_t n = 0; n < k; ++n) {
    if (!(raw.target_rates[n] > 0.0) || !std::isfinite(raw.target_rates[n]))
      throw Error(ErrorCode::NonPositiveRate,
                  "target rate of user " + std::to_string(n + 1) +
                      " is not a positive finite number",
                  raw.target_rates[n]);
  }
  for (std::size_t n = 0; n < k; ++n) {
    if (!(raw.oma_fractions[n] > 0.0) || !std::isfinite(raw.oma_fractions[n]))
      throw Error(ErrorCode::NonPositiveFraction,
                  "OMA fraction of user " + std::to_string(n + 1) +
                      " is not a positive finite number",
                  raw.oma_fractions[n]);
  }
  const double sum =
      std::accumulate(raw.oma_fractions.begin(), raw.oma_fractions.end(), 0.0);
  if (std::abs(sum - 1.0) > kFractionSumTolerance)
    throw Error(ErrorCode::FractionSumMismatch,
                "OMA fractions sum to " + std::to_string(sum) + ", expected 1",
                sum);
  if (!(raw.transmit_snr > 0.0) || !std::isfinite(raw.transmit_snr))
    throw Error(ErrorCode::NonPositiveSnr, "transmit SNR must be positive",
                raw.transmit_snr);
  return raw;
}

inline bool is_canonical(const SystemConfig& config) {
  for (std::size_t n = 1; n < config.num_users(); ++n)
    if (config.normalized_rate(n) < config.normalized_rate(n - 1)) return false;
  return true;
}

inline void require_canonical(const SystemConfig& config) {
  if (config.num_users() == 0)
    throw Error(ErrorCode::EmptySystem, "system has no users");
  if (config.oma_fractions.size() != config.num_users())
    throw Error(ErrorCode::DimensionMismatch,
                "target_rates and oma_fractions differ in length");
  if (!is_canonical(config))
    throw Error(ErrorCode::NotCanonical,
                "users are not sorted by ascending R_n/tau_n");
}

/// A permutation of user indices. Entry s is the user decoded at SIC stage s.
/// As returned by `canonicalize`, entry c is the input index of the user now
/// sitting at canonical position c.
class DecodingOrder {
 public:
  explicit DecodingOrder(std::vector<std::size_t> permutation)
      : perm_(std::move(permutation)) {
    std::vector<bool> seen(perm_.size(), false);
    for (std::size_t v : perm_) {
      if (v >= perm_.size() || seen[v])
        throw Error(ErrorCode::InvalidPermutation,
                    "decoding order is not a permutation of 0..K-1");
      seen[v] = true;
    }
  }

  static DecodingOrder identity(std::size_t k) {
    std::vector<std::size_t> p(k);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return DecodingOrder(std::move(p));
  }

  std::size_t size() const { return perm_.size(); }
  std::size_t operator[](std::size_t stage) const { return perm_[stage]; }
  std::span<const std::size_t> indices() const { return perm_; }
  bool is_identity() const {
    for (std::size_t i = 0; i < perm_.size(); ++i)
      if (perm_[i] != i) return false;
    return true;
  }
  std::string to_string(char sep = ' ') const {
    std::string s;
    for (std::size_t i = 0; i < perm_.size(); ++i) {
      if (i) s += sep;
      s += std::to_string(perm_[i] + 1);
    }
    return s;
  }

  friend bool operator==(const DecodingOrder&, const DecodingOrder&) = default;

 private:
  std::vector<std::size_t> perm_;
};

/// Reorders a per-user vector given in input order into the order `order`.
template <typename T>
std::vector<T> permute(std::span<const T> values, const DecodingOrder& order) {
  if (values.size() != order.size())
    throw Error(ErrorCode::DimensionMismatch,
                "vector length does not match the number of users");
  std::vector<T> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) out.push_back(values[order[i]]);
  return out;
}

template <typename T>
std::vector<T> permute(const std::vector<T>& values, const DecodingOrder& order) {
  return permute(std::span<const T>(values), order);
}

struct CanonicalConfig {
  SystemConfig config;
  DecodingOrder order;
};

/// Sorts users by ascending normalized rate, stable on ties.
inline CanonicalConfig canonicalize(const SystemConfig& config) {
  const std::size_t k = config.num_users();
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return config.normalized_rate(a) < config.normalized_rate(b);
  });
  DecodingOrder order(std::move(idx));
  SystemConfig out;
  out.target_rates = permute(config.target_rates, order);
  out.oma_fractions = permute(config.oma_fractions, order);
  out.transmit_snr = config.transmit_snr;
  return {std::move(out), std::move(order)};
}

/// A_n = sum_{l>n} a_l, so A_{K-1} = 0.
inline std::vector<double> interference_from(std::span<const double> coefficients) {
  std::vector<double> out(coefficients.size(), 0.0);
  double acc = 0.0;
  for (std::size_t n = coefficients.size(); n-- > 0;) {
    out[n] = acc;
    acc += coefficients[n];
  }
  return out;
}

class PowerAllocation {
 public:
  /// Validates a_n >= 0 and sum a_n <= 1 + kBudgetTolerance.
  static PowerAllocation from_coefficients(std::vector<double> coefficients) {
    if (coefficients.empty())
      throw Error(ErrorCode::EmptySystem, "allocation has no users");
    double total = 0.0;
    for (std::size_t n = 0; n < coefficients.size(); ++n) {
      const double a = coefficients[n];
      if (!(a >= 0.0) || !std::isfinite(a))
        throw Error(ErrorCode::InvalidCoefficient,
                    "coefficient of user " + std::to_string(n + 1) +
                        " is negative or not finite",
                    a);
      total += a;
    }
    if (total > 1.0 + kBudgetTolerance)
      throw Error(ErrorCode::PowerBudgetExceeded,
                  "coefficients sum to " + std::to_string(total), total);
    PowerAllocation out;
    out.interference_ = interference_from(coefficients);
    out.coefficients_ = std::move(coefficients);
    return out;
  }

  std::size_t size() const { return coefficients_.size(); }
  std::span<const double> coefficients() const { return coefficients_; }
  std::span<const double> interference() const { return interference_; }
  double coefficient(std::size_t n) const { return coefficients_[n]; }
  double interference(std::size_t n) const { return interference_[n]; }
  double total() const {
    return coefficients_.empty() ? 0.0 : coefficients_[0] + interference_[0];
  }

 private:
  PowerAllocation() = default;
  std::vector<double> coefficients_;
  std::vector<double> interference_;
};

class EpsilonVector {
 public:
  explicit EpsilonVector(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t n = 0; n < values_.size(); ++n)
      if (!(values_[n] >= 0.0) || !std::isfinite(values_[n]))
        throw Error(ErrorCode::NegativeEpsilon,
                    "epsilon of user " + std::to_string(n + 1) +
                        " is negative or not finite",
                    values_[n]);
  }
  static EpsilonVector zeros(std::size_t k) {
    return EpsilonVector(std::vector<double>(k, 0.0));
  }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t n) const { return values_[n]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

}  // namespace noma_pa

#endif  // NOMA_PA_CONFIG_HPP
