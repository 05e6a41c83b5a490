// noma_pa: allocation reports, decoding-order rankings and outage sweeps
// from scenario files.
//
// Exit codes: 0 success (a diagnosed infeasible allocation is a success),
// 2 bad input, 3 enumeration limit exceeded.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "noma_pa/report.hpp"
#include "noma_pa/scenario.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitResource = 3;

unsigned threads_from_env() {
  const char* raw = std::getenv("NOMA_PA_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  unsigned value = 0;
  const std::string_view text(raw);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw noma_pa::Error(noma_pa::ErrorCode::InvalidArgument,
                         "NOMA_PA_THREADS must be a nonnegative integer");
  return value;
}

// Writes to `path`, or stdout when empty.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw noma_pa::Error(noma_pa::ErrorCode::InvalidArgument, "cannot write " + path);
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downlink NOMA power allocation with target rates"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_path;

  auto* allocate = app.add_subcommand("allocate", "allocation report as JSON");
  allocate->add_option("scenario", scenario_path, "scenario JSON file")->required();
  allocate->add_option("--out", out_path, "output file (default stdout)");

  std::size_t max_enumerate = noma_pa::kDefaultMaxEnumerate;
  auto* orders = app.add_subcommand("orders", "rank every SIC decoding order by total power");
  orders->add_option("scenario", scenario_path, "scenario JSON file")->required();
  orders->add_option("--max-enumerate", max_enumerate, "refuse when K! exceeds this");
  orders->add_option("--out", out_path, "output file (default stdout)");

  bool analytic = false;
  bool montecarlo = false;
  bool verify = false;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::string grid_text;
  std::string meta_path;
  auto* outage = app.add_subcommand("outage", "outage probabilities over an SNR sweep as CSV");
  outage->add_option("scenario", scenario_path, "scenario JSON file")->required();
  outage->add_flag("--analytic", analytic, "closed-form outage from the gain distributions");
  outage->add_flag("--montecarlo", montecarlo, "simulated outage");
  outage->add_option("--trials", trials, "Monte Carlo trials");
  outage->add_option("--seed", seed, "Monte Carlo seed");
  outage->add_option("--xi-db", grid_text, "transmit SNR grid in dB, start:stop:step");
  outage->add_option("--out", out_path, "CSV output file (default stdout)");
  outage->add_option("--meta", meta_path, "also write run metadata as JSON");
  outage->add_flag("--verify-capacity", verify,
                   "recompute achievable rates per trial and check the thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    const auto scenario = noma_pa::load_scenario(scenario_path);

    if (*allocate) {
      const auto report = noma_pa::allocation_report(scenario);
      emit(out_path, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
    } else if (*orders) {
      emit(out_path,
           [&](std::ostream& os) { noma_pa::write_orders_csv(os, scenario, max_enumerate); });
    } else if (*outage) {
      if (!analytic && !montecarlo)
        throw noma_pa::Error(noma_pa::ErrorCode::InvalidArgument,
                             "outage needs --analytic and/or --montecarlo");
      noma_pa::SweepOptions options;
      options.analytic = analytic;
      options.montecarlo = montecarlo;
      options.mc.trials = trials.value_or(scenario.simulation.trials);
      options.mc.seed = seed.value_or(scenario.simulation.seed);
      options.mc.threads = threads_from_env();
      options.mc.verify_capacity = verify;
      const auto grid = grid_text.empty() ? scenario.grid_db() : noma_pa::parse_xi_grid(grid_text);
      const auto reports =
          noma_pa::sweep(scenario.config, scenario.strategy, scenario.channel, grid, options);
      emit(out_path, [&](std::ostream& os) {
        noma_pa::write_outage_csv(os, reports, scenario.order);
      });
      if (!meta_path.empty()) {
        const auto meta = noma_pa::outage_metadata(scenario, options, grid);
        emit(meta_path, [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
      }
    }
  } catch (const noma_pa::Error& e) {
    std::cerr << noma_pa::error_json(e).dump() << '\n';
    return e.code() == noma_pa::ErrorCode::TooManyPermutations ? kExitResource : kExitInput;
  } catch (const std::exception& e) {
    nlohmann::json j{{"error", "Internal"}, {"message", e.what()}};
    std::cerr << j.dump() << '\n';
    return 1;
  }
  return 0;
}
