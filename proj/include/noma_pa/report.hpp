#ifndef NOMA_PA_REPORT_HPP
#define NOMA_PA_REPORT_HPP

// JSON and CSV renderings of the analyses, shared by the command-line tool
// and its tests. User indices in reports are 1-based canonical positions;
// "canonical_order" maps them back to input positions.

#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "noma_pa/allocation.hpp"
#include "noma_pa/ordering.hpp"
#include "noma_pa/outage.hpp"
#include "noma_pa/scenario.hpp"

namespace noma_pa {

inline nlohmann::json one_based(const DecodingOrder& order) {
  auto out = nlohmann::json::array();
  for (std::size_t s = 0; s < order.size(); ++s) out.push_back(order[s] + 1);
  return out;
}

inline std::vector<double> to_vector(std::span<const double> v) {
  return {v.begin(), v.end()};
}

inline nlohmann::json flags(const std::vector<bool>& v) {
  auto out = nlohmann::json::array();
  for (bool b : v) out.push_back(b);
  return out;
}

inline nlohmann::json flagged_users(const std::vector<bool>& v) {
  auto out = nlohmann::json::array();
  for (std::size_t n = 0; n < v.size(); ++n)
    if (v[n]) out.push_back(n + 1);
  return out;
}

/// Epsilon vector behind the scenario's strategy, when it has one.
inline std::optional<EpsilonVector> strategy_epsilon(const Scenario& s) {
  if (std::holds_alternative<OmaEquivalentStrategy>(s.strategy))
    return EpsilonVector::zeros(s.config.num_users());
  if (std::holds_alternative<ProportionalStrategy>(s.strategy))
    return proportional_strategy(s.config);
  if (const auto* e = std::get_if<ExplicitEpsilon>(&s.strategy))
    return EpsilonVector(e->epsilon);
  return std::nullopt;
}

inline nlohmann::json allocation_report(const Scenario& s) {
  const auto& config = s.config;
  const std::size_t k = config.num_users();
  const auto base = oma_equivalent(config);
  const auto alloc = build_allocation(config, s.strategy);
  const auto diag = diagnose(alloc, config);

  nlohmann::json j;
  j["users"] = k;
  j["canonical_order"] = one_based(s.order);
  j["normalized_rates"] = normalized_rates(config).values;
  j["strategy"] = strategy_name(s.strategy);
  j["oma_equivalent"] = {{"coefficients", base.coefficients},
                         {"interference", base.interference}};
  j["total_oma_equivalent"] = base.total;
  j["headroom"] = base.headroom;

  if (const auto eps = strategy_epsilon(s)) {
    j["epsilon"] = to_vector(eps->values());
    j["epsilon_totals"] = epsilon_totals(config, *eps);
    auto bounds = nlohmann::json::array();
    for (std::size_t n = 1; n < k; ++n) {
      const auto b = epsilon_bounds(config, eps->values().first(n), n);
      bounds.push_back({{"user", n + 1},
                        {"ordering", b.ordering},
                        {"budget", b.budget},
                        {"limit", b.limit()},
                        {"epsilon", (*eps)[n]}});
    }
    j["epsilon_bounds"] = bounds;
  }

  j["coefficients"] = to_vector(alloc.coefficients());
  j["interference"] = to_vector(alloc.interference());
  j["total_power"] = alloc.total();
  j["diagnostics"] = {
      {"ceilings", diag.ceilings},
      {"margins", diag.margins},
      {"certain_outage", flags(diag.certain_outage)},
      {"certain_outage_users", flagged_users(diag.certain_outage)},
      {"margin_positive", flags(diag.margin_positive)},
      {"sic_feasible", flags(diag.sic_feasible)},
      {"well_behaved_pairwise", flags(diag.wellbehaved_pairwise)},
      {"well_behaved_strict", flags(diag.wellbehaved_strict)},
      {"well_behaved", diag.well_behaved()},
  };
  return j;
}

/// CSV order,total_power,feasible, cheapest first. Orders name users by
/// their 1-based input position.
inline void write_orders_csv(std::ostream& os, const Scenario& s,
                             std::size_t max_enumerate = kDefaultMaxEnumerate) {
  const auto ranked = rank_orders(s.config, max_enumerate);
  os << "order,total_power,feasible\n";
  for (const auto& r : ranked) {
    std::string order;
    for (std::size_t i = 0; i < r.order.size(); ++i) {
      if (i) order += ' ';
      order += std::to_string(s.order[r.order[i]] + 1);
    }
    os << order << ',' << format_number(r.total_power) << ','
       << (r.feasible() ? "true" : "false") << '\n';
  }
}

/// Run metadata written next to outage CSVs.
inline nlohmann::json outage_metadata(const Scenario& s, const SweepOptions& options,
                                      const std::vector<double>& grid) {
  nlohmann::json j;
  j["canonical_order"] = one_based(s.order);
  j["strategy"] = strategy_name(s.strategy);
  j["channel"] = describe(s.channel);
  if (const auto* m2 = std::get_if<ChannelModel2>(&s.channel)) {
    auto precoder = nlohmann::json::array();
    for (const auto& v : m2->precoder) precoder.push_back({v.real(), v.imag()});
    j["precoder"] = precoder;
    j["precoder_seed"] = s.precoder_seed;
  }
  j["xi_grid_db"] = grid;
  j["analytic"] = options.analytic;
  j["montecarlo"] = options.montecarlo;
  if (options.montecarlo) {
    j["trials"] = options.mc.trials;
    j["seed"] = options.mc.seed;
  }
  return j;
}

inline nlohmann::json error_json(const Error& e) {
  nlohmann::json j{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (e.value() && std::isfinite(*e.value())) j["value"] = *e.value();
  return j;
}

}  // namespace noma_pa

#endif  // NOMA_PA_REPORT_HPP
