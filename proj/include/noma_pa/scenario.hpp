#ifndef NOMA_PA_SCENARIO_HPP
#define NOMA_PA_SCENARIO_HPP

// Scenario files (JSON). Per-user vectors, including model-2 betas and
// explicit coefficients or epsilons, are listed in input order; parsing
// returns them permuted into canonical order together with the permutation.
//
// {
//   "target_rates": [..], "oma_fractions": [..], "transmit_snr_db": 10,
//   "channel": {"model": 1} | {"model": 2, "betas": [..], "tx_antennas": M,
//               "rx_antennas": N, "precoder_seed": s},
//   "strategy": "oma-equivalent" | "proportional"
//             | {"name": "explicit", "coefficients": [..]}
//             | {"name": "explicit", "epsilon": [..]}
//             | {"name": "ceiling-probe", "stage": m, "interference_ratio": x,
//                "interference_offset": d},
//   "simulation": {"trials": 1000000, "seed": 1, "xi_grid_db": "0:40:2"}
// }
//
// Probe stages are 1-based, as in every user-facing index.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "noma_pa/allocation.hpp"
#include "noma_pa/channel.hpp"
#include "noma_pa/config.hpp"
#include "noma_pa/error.hpp"
#include "noma_pa/outage.hpp"

namespace noma_pa {

inline constexpr std::uint64_t kDefaultTrials = 1'000'000;
inline constexpr std::uint64_t kDefaultSeed = 20240521;

struct SimulationSettings {
  std::uint64_t trials = kDefaultTrials;
  std::uint64_t seed = kDefaultSeed;
  std::vector<double> xi_grid_db;  // empty: use transmit_snr_db alone
};

struct Scenario {
  Scenario(SystemConfig canonical, DecodingOrder input_order)
      : config(std::move(canonical)), order(std::move(input_order)) {}

  SystemConfig config;   // canonical
  DecodingOrder order;   // order[c] = input index of canonical user c
  double transmit_snr_db = 0.0;
  ChannelDescriptor channel = ChannelModel1{};
  std::uint64_t precoder_seed = 0;
  StrategySpec strategy = ProportionalStrategy{};
  SimulationSettings simulation;

  std::vector<double> grid_db() const {
    return simulation.xi_grid_db.empty() ? std::vector<double>{transmit_snr_db}
                                         : simulation.xi_grid_db;
  }
};

namespace detail {

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw Error(ErrorCode::ScenarioParse, "not a number: '" + std::string(text) + "'");
  return v;
}

[[noreturn]] inline void scenario_error(const std::string& what) {
  throw Error(ErrorCode::ScenarioParse, what);
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    scenario_error(std::string("missing field '") + key + "'");
  return obj.at(key);
}

inline std::vector<double> number_array(const nlohmann::json& v, const char* key) {
  if (!v.is_array()) scenario_error(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number())
      scenario_error(std::string("'") + key + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline std::uint64_t count_field(const nlohmann::json& v, const char* key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  scenario_error(std::string("'") + key + "' must be a nonnegative integer");
}

inline std::vector<double> in_canonical_order(const std::vector<double>& input,
                                              const DecodingOrder& order, const char* key) {
  if (input.size() != order.size())
    throw Error(ErrorCode::DimensionMismatch,
                std::string("'") + key + "' must have one entry per user",
                static_cast<double>(input.size()));
  return permute(std::span<const double>(input), order);
}

}  // namespace detail

/// "start:stop:step" (inclusive of stop) or a single number.
inline std::vector<double> parse_xi_grid(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ':') {
      parts.push_back(text.substr(begin, i - begin));
      begin = i + 1;
    }
  }
  if (parts.size() == 1) return {detail::parse_double(parts[0])};
  if (parts.size() != 3)
    throw Error(ErrorCode::InvalidArgument, "SNR grid must be 'start:stop:step' or a number");
  return xi_grid_db(detail::parse_double(parts[0]), detail::parse_double(parts[1]),
                    detail::parse_double(parts[2]));
}

inline Scenario parse_scenario(const nlohmann::json& doc) {
  using detail::require;
  if (!doc.is_object()) detail::scenario_error("scenario must be a JSON object");

  SystemConfig raw;
  raw.target_rates = detail::number_array(require(doc, "target_rates"), "target_rates");
  raw.oma_fractions = detail::number_array(require(doc, "oma_fractions"), "oma_fractions");
  const auto& snr = require(doc, "transmit_snr_db");
  if (!snr.is_number()) detail::scenario_error("'transmit_snr_db' must be a number");
  raw.transmit_snr = db_to_linear(snr.get<double>());
  validate_config(raw);

  auto canonical = canonicalize(raw);
  Scenario s(std::move(canonical.config), std::move(canonical.order));
  s.transmit_snr_db = snr.get<double>();
  const std::size_t k = s.config.num_users();

  if (doc.contains("channel")) {
    const auto& ch = doc.at("channel");
    const auto& model = require(ch, "model");
    if (model == 1) {
      s.channel = ChannelModel1{k};
    } else if (model == 2) {
      const auto betas = detail::in_canonical_order(
          detail::number_array(require(ch, "betas"), "betas"), s.order, "betas");
      const auto tx = detail::count_field(require(ch, "tx_antennas"), "tx_antennas");
      const auto rx = detail::count_field(require(ch, "rx_antennas"), "rx_antennas");
      if (ch.contains("precoder_seed"))
        s.precoder_seed = detail::count_field(ch.at("precoder_seed"), "precoder_seed");
      if (tx == 0 || rx == 0)
        throw Error(ErrorCode::InvalidChannel, "antenna counts must be positive");
      s.channel = make_channel_model2(betas, tx, rx, s.precoder_seed);
    } else {
      throw Error(ErrorCode::InvalidChannel, "channel model must be 1 or 2");
    }
  } else {
    s.channel = ChannelModel1{k};
  }

  if (doc.contains("strategy")) {
    const auto& st = doc.at("strategy");
    const std::string name = st.is_string() ? st.get<std::string>()
                                            : require(st, "name").get<std::string>();
    if (name == "oma-equivalent") {
      s.strategy = OmaEquivalentStrategy{};
    } else if (name == "proportional") {
      s.strategy = ProportionalStrategy{};
    } else if (name == "explicit") {
      const bool has_a = st.is_object() && st.contains("coefficients");
      const bool has_e = st.is_object() && st.contains("epsilon");
      if (has_a == has_e)
        detail::scenario_error("explicit strategy needs exactly one of 'coefficients' or 'epsilon'");
      if (has_a)
        s.strategy = ExplicitCoefficients{detail::in_canonical_order(
            detail::number_array(st.at("coefficients"), "coefficients"), s.order,
            "coefficients")};
      else
        s.strategy = ExplicitEpsilon{detail::in_canonical_order(
            detail::number_array(st.at("epsilon"), "epsilon"), s.order, "epsilon")};
    } else if (name == "ceiling-probe") {
      const auto stage = detail::count_field(require(st, "stage"), "stage");
      if (stage == 0 || stage >= k)
        throw Error(ErrorCode::IndexOutOfRange, "probe stage must satisfy 1 <= stage < K",
                    static_cast<double>(stage));
      CeilingProbe probe{static_cast<std::size_t>(stage - 1)};
      if (st.contains("interference_ratio")) probe.ratio = st.at("interference_ratio").get<double>();
      if (st.contains("interference_offset"))
        probe.offset = st.at("interference_offset").get<double>();
      s.strategy = probe;
    } else {
      detail::scenario_error("unknown strategy '" + name + "'");
    }
  }

  if (doc.contains("simulation")) {
    const auto& sim = doc.at("simulation");
    if (sim.contains("trials")) s.simulation.trials = detail::count_field(sim.at("trials"), "trials");
    if (sim.contains("seed")) s.simulation.seed = detail::count_field(sim.at("seed"), "seed");
    if (sim.contains("xi_grid_db")) {
      const auto& g = sim.at("xi_grid_db");
      if (g.is_string())
        s.simulation.xi_grid_db = parse_xi_grid(g.get<std::string>());
      else if (g.is_number())
        s.simulation.xi_grid_db = {g.get<double>()};
      else
        s.simulation.xi_grid_db = detail::number_array(g, "xi_grid_db");
    }
  }
  return s;
}

inline Scenario parse_scenario_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ScenarioParse, std::string("invalid JSON: ") + e.what());
  }
  try {
    return parse_scenario(doc);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ScenarioParse, e.what());
  }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ScenarioParse, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario_text(text.str());
}

}  // namespace noma_pa

#endif  // NOMA_PA_SCENARIO_HPP
