#ifndef NOMA_PA_CHANNEL_HPP
#define NOMA_PA_CHANNEL_HPP

// Fading-channel models: samplers for Monte Carlo and the matching gain
// distributions used as analytic oracles.
//
//   Model 1: K i.i.d. unit-mean exponential SNR gains, sorted ascending, so
//            canonical user n gets the (n+1)-th smallest.
//   Model 2: user n sees an N x M i.i.d. CN(0, beta_n) matrix H_n through a
//            common unit-norm precoder p; gain = ||H_n p||^2 ~ Erlang(N, beta_n).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "noma_pa/error.hpp"
#include "noma_pa/philox.hpp"

namespace noma_pa {

struct ChannelModel1 {
  std::size_t num_users = 1;
};

struct ChannelModel2 {
  std::size_t tx_antennas = 1;  // M
  std::size_t rx_antennas = 1;  // N
  std::vector<double> betas;    // per-entry variance, one per user
  std::vector<std::complex<double>> precoder;  // length M, unit norm

  std::size_t num_users() const { return betas.size(); }
};

using ChannelDescriptor = std::variant<ChannelModel1, ChannelModel2>;

inline std::size_t channel_users(const ChannelDescriptor& channel) {
  if (const auto* m1 = std::get_if<ChannelModel1>(&channel)) return m1->num_users;
  return std::get<ChannelModel2>(channel).num_users();
}

/// Isotropic unit vector in C^M drawn from its own stream domain of `seed`.
inline std::vector<std::complex<double>> isotropic_precoder(std::size_t tx_antennas,
                                                            std::uint64_t seed) {
  if (tx_antennas == 0)
    throw Error(ErrorCode::InvalidChannel, "precoder needs at least one antenna");
  PhiloxStream rng(seed, 0, static_cast<std::uint32_t>(RngDomain::Precoder));
  std::vector<std::complex<double>> p(tx_antennas);
  double norm2 = 0.0;
  while (norm2 == 0.0) {
    norm2 = 0.0;
    for (auto& v : p) {
      const auto z = rng.normal_pair();
      v = {z[0], z[1]};
      norm2 += std::norm(v);
    }
  }
  const double scale = 1.0 / std::sqrt(norm2);
  for (auto& v : p) v *= scale;
  return p;
}

inline void validate_channel(const ChannelModel2& model) {
  if (model.tx_antennas == 0 || model.rx_antennas == 0)
    throw Error(ErrorCode::InvalidChannel, "antenna counts must be positive");
  if (model.betas.empty())
    throw Error(ErrorCode::InvalidChannel, "model 2 needs one beta per user");
  for (double b : model.betas)
    if (!(b > 0.0) || !std::isfinite(b))
      throw Error(ErrorCode::InvalidChannel, "betas must be positive", b);
  if (model.precoder.size() != model.tx_antennas)
    throw Error(ErrorCode::InvalidChannel, "precoder length must equal tx_antennas",
                static_cast<double>(model.precoder.size()));
  double norm2 = 0.0;
  for (const auto& v : model.precoder) norm2 += std::norm(v);
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12)
    throw Error(ErrorCode::InvalidChannel, "precoder must have unit norm",
                std::sqrt(norm2));
}

inline ChannelModel2 make_channel_model2(std::vector<double> betas, std::size_t tx_antennas,
                                         std::size_t rx_antennas, std::uint64_t seed) {
  ChannelModel2 model{tx_antennas, rx_antennas, std::move(betas),
                      isotropic_precoder(tx_antennas, seed)};
  validate_channel(model);
  return model;
}

inline void sample_gains_model1(PhiloxStream& rng, std::span<double> out) {
  for (double& g : out) g = rng.exponential();
  std::sort(out.begin(), out.end());
}

inline std::vector<double> sample_gains_model1(PhiloxStream& rng, std::size_t num_users) {
  std::vector<double> out(num_users);
  sample_gains_model1(rng, out);
  return out;
}

inline void sample_gains_model2(PhiloxStream& rng, const ChannelModel2& model,
                                std::span<double> out) {
  const std::size_t m = model.tx_antennas;
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double sd = std::sqrt(model.betas[n] / 2.0);
    double gain = 0.0;
    for (std::size_t row = 0; row < model.rx_antennas; ++row) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t col = 0; col < m; ++col) {
        const auto z = rng.normal_pair();
        acc += std::complex<double>(sd * z[0], sd * z[1]) * model.precoder[col];
      }
      gain += std::norm(acc);
    }
    out[n] = gain;
  }
}

inline std::vector<double> sample_gains_model2(PhiloxStream& rng,
                                               const ChannelModel2& model) {
  std::vector<double> out(model.num_users());
  sample_gains_model2(rng, model, out);
  return out;
}

inline void sample_gains(PhiloxStream& rng, const ChannelDescriptor& channel,
                         std::span<double> out) {
  if (std::holds_alternative<ChannelModel1>(channel))
    sample_gains_model1(rng, out);
  else
    sample_gains_model2(rng, std::get<ChannelModel2>(channel), out);
}

namespace detail {

inline double binomial(std::size_t k, std::size_t j) {
  double c = 1.0;
  for (std::size_t i = 1; i <= j; ++i)
    c = c * static_cast<double>(k - j + i) / static_cast<double>(i);
  return c;
}

// sum_{j=lo}^{hi} C(K,j) p^j q^{K-j}
inline double binomial_mass(std::size_t k, std::size_t lo, std::size_t hi, double p,
                            double q) {
  double sum = 0.0;
  for (std::size_t j = lo; j <= hi; ++j)
    sum += binomial(k, j) * std::pow(p, static_cast<double>(j)) *
           std::pow(q, static_cast<double>(k - j));
  return sum;
}

// e^{-x} x^k / k!, evaluated in log space.
inline double poisson_term(std::size_t k, double x) {
  if (k == 0) return std::exp(-x);
  return std::exp(static_cast<double>(k) * std::log(x) - x -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

}  // namespace detail

/// P(order statistic n of K unit exponentials <= t), n 0-based (0 = minimum).
/// Like cdf_model2, goes through the complement when that is the small side.
inline double cdf_model1(double t, std::size_t n, std::size_t num_users) {
  if (n >= num_users)
    throw Error(ErrorCode::IndexOutOfRange, "order index must be < K",
                static_cast<double>(n));
  if (!(t > 0.0)) return 0.0;
  if (std::isinf(t)) return 1.0;
  const double p = -std::expm1(-t);
  const double q = std::exp(-t);
  const double upper = detail::binomial_mass(num_users, 0, n, p, q);
  if (upper <= 0.5) return 1.0 - upper;
  return std::min(detail::binomial_mass(num_users, n + 1, num_users, p, q), 1.0);
}

/// 1 - cdf_model1, accurate when the cdf is close to 1.
inline double survival_model1(double t, std::size_t n, std::size_t num_users) {
  if (n >= num_users)
    throw Error(ErrorCode::IndexOutOfRange, "order index must be < K",
                static_cast<double>(n));
  if (!(t > 0.0)) return 1.0;
  if (std::isinf(t)) return 0.0;
  return detail::binomial_mass(num_users, 0, n, -std::expm1(-t), std::exp(-t));
}

/// 1 - P(Erlang(shape, scale) <= t) = e^{-x} sum_{k<shape} x^k/k!, x = t/scale.
inline double survival_model2(double t, std::size_t shape, double scale) {
  if (shape == 0 || !(scale > 0.0))
    throw Error(ErrorCode::InvalidChannel, "Erlang needs shape >= 1 and scale > 0");
  if (!(t > 0.0)) return 1.0;
  if (std::isinf(t)) return 0.0;
  const double x = t / scale;
  double sum = 0.0;
  for (std::size_t k = 0; k < shape; ++k) sum += detail::poisson_term(k, x);
  return std::min(sum, 1.0);
}

/// Erlang CDF. Uses the complement when it is small and the convergent
/// tail series e^{-x} sum_{k>=shape} x^k/k! otherwise, so neither branch
/// subtracts nearly equal numbers.
inline double cdf_model2(double t, std::size_t shape, double scale) {
  const double upper = survival_model2(t, shape, scale);
  if (upper <= 0.5) return 1.0 - upper;
  const double x = t / scale;
  double term = detail::poisson_term(shape, x);
  double sum = 0.0;
  for (std::size_t k = shape; term > 0.0; ++k) {
    sum += term;
    if (term < sum * 1e-17) break;
    term *= x / static_cast<double>(k + 1);
  }
  return sum;
}

/// CDF of canonical user n's gain under `channel`.
inline double gain_cdf(const ChannelDescriptor& channel, std::size_t n, double t) {
  if (const auto* m1 = std::get_if<ChannelModel1>(&channel))
    return cdf_model1(t, n, m1->num_users);
  const auto& m2 = std::get<ChannelModel2>(channel);
  return cdf_model2(t, m2.rx_antennas, m2.betas.at(n));
}

inline double gain_survival(const ChannelDescriptor& channel, std::size_t n, double t) {
  if (const auto* m1 = std::get_if<ChannelModel1>(&channel))
    return survival_model1(t, n, m1->num_users);
  const auto& m2 = std::get<ChannelModel2>(channel);
  return survival_model2(t, m2.rx_antennas, m2.betas.at(n));
}

inline std::string describe(const ChannelDescriptor& channel) {
  if (const auto* m1 = std::get_if<ChannelModel1>(&channel))
    return "model1(K=" + std::to_string(m1->num_users) + ")";
  const auto& m2 = std::get<ChannelModel2>(channel);
  return "model2(M=" + std::to_string(m2.tx_antennas) +
         ",N=" + std::to_string(m2.rx_antennas) + ")";
}

}  // namespace noma_pa

#endif  // NOMA_PA_CHANNEL_HPP
