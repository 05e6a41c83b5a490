#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "noma_pa/outage.hpp"

namespace {

using namespace noma_pa;

constexpr std::uint64_t kSeed = 20240521;

SystemConfig five_user(double xi = 10.0) {
  return {{0.5, 1.2, 0.9, 1.3, 1.1}, {0.15, 0.30, 0.20, 0.20, 0.15}, xi};
}

SystemConfig at_db(SystemConfig c, double db) {
  c.transmit_snr = db_to_linear(db);
  return c;
}

ChannelModel2 five_user_model2() {
  return make_channel_model2({0.5, 1.4, 0.8, 1.7, 1.1}, 2, 3, 7);
}

double g(double rate) { return std::exp2(rate) - 1.0; }
double rel(double x, double y) { return std::abs(x - y) / std::abs(y); }

PowerAllocation probe(const SystemConfig& c, std::size_t stage, double ratio, double offset) {
  return ceiling_probe(c, stage, ratio * interference_ceiling(c.target_rates, stage) + offset);
}

SystemConfig random_config(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> rate(0.1, 3.0);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  SystemConfig c;
  double sum = 0.0;
  for (std::size_t n = 0; n < k; ++n) {
    c.target_rates.push_back(rate(rng));
    c.oma_fractions.push_back(weight(rng));
    sum += c.oma_fractions.back();
  }
  for (double& t : c.oma_fractions) t /= sum;
  c.transmit_snr = db_to_linear(std::uniform_real_distribution<double>(0.0, 40.0)(rng));
  return canonicalize(c).config;
}

TEST(Thresholds, OmaEquivalentMatchesOmaPerStage) {
  const auto c = five_user();
  const auto users = noma_thresholds(c, oma_equivalent(c).allocation());
  for (std::size_t n = 0; n < 5; ++n) {
    EXPECT_LT(rel(users[n].stage[n], oma_threshold(c, n)), 1e-12);
    EXPECT_LT(rel(users[n].effective, oma_threshold(c, n)), 1e-12);
    EXPECT_FALSE(users[n].certain_outage);
    EXPECT_EQ(users[n].stage.size(), n + 1);
  }
}

TEST(Thresholds, OmaEquivalentFuzz) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = random_config(rng, 2 + trial % 7);
    const auto users = noma_thresholds(c, oma_equivalent(c).allocation());
    for (std::size_t n = 0; n < c.num_users(); ++n)
      ASSERT_LT(rel(users[n].effective, oma_threshold(c, n)), 1e-12);
  }
}

TEST(Thresholds, ViolationIsCertainOutageDownstream) {
  // Stage 1 (0-based) gets no margin: a_1 = (2^{R_1}-1) A_1.
  const SystemConfig c{{1.0, 1.0, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 100.0};
  const auto alloc = PowerAllocation::from_coefficients({0.6, 0.2, 0.2});
  const auto users = noma_thresholds(c, alloc);
  EXPECT_FALSE(users[0].certain_outage);
  EXPECT_TRUE(users[1].certain_outage);
  EXPECT_TRUE(users[2].certain_outage);
  EXPECT_EQ(users[2].stage[1], kCertainOutage);
  EXPECT_TRUE(std::isfinite(users[2].stage[2]));
}

TEST(Thresholds, SingleUser) {
  const SystemConfig c{{1.5}, {1.0}, 4.0};
  const auto users = noma_thresholds(c, PowerAllocation::from_coefficients({1.0}));
  EXPECT_DOUBLE_EQ(users[0].effective, g(1.5) / 4.0);
}

TEST(OmaThreshold, Examples) {
  EXPECT_DOUBLE_EQ(oma_threshold({{1.0}, {1.0}, 1.0}, 0), 1.0);
  EXPECT_NEAR(oma_threshold(five_user(10.0), 0), 0.90794, 5e-6);
  EXPECT_NEAR(oma_threshold(five_user(10.0), 0), (std::exp2(10.0 / 3.0) - 1.0) / 10.0, 1e-15);
  EXPECT_THROW(oma_threshold(five_user(), 5), Error);
  double prev = kCertainOutage;
  for (double db = 0.0; db <= 40.0; db += 2.0) {
    const double t = oma_threshold(at_db(five_user(), db), 2);
    EXPECT_LT(t, prev);
    prev = t;
  }
}

TEST(AnalyticOutage, CertainOutageIsExactlyOne) {
  const auto c = five_user();
  const auto alloc = probe(c, 1, 1.0, 1e-6);
  for (double db : {0.0, 10.0, 40.0, 80.0}) {
    const auto p = analytic_outage(at_db(c, db), alloc, ChannelModel1{5}, OutageMode::Noma);
    for (std::size_t n = 0; n < 5; ++n) {
      EXPECT_EQ(p[n].value, 1.0);
      EXPECT_EQ(p[n].complement, 0.0);
    }
  }
  // Explicit coefficients with only stage 1 starved.
  const SystemConfig flat{{1.0, 1.0, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 100.0};
  const auto starved = PowerAllocation::from_coefficients({0.6, 0.2, 0.2});
  const auto p = analytic_outage(flat, starved, ChannelModel1{3}, OutageMode::Noma);
  EXPECT_LT(p[0].value, 1.0);
  EXPECT_EQ(p[1].value, 1.0);
  EXPECT_EQ(p[2].value, 1.0);
}

TEST(AnalyticOutage, OmaEquivalentEqualsOma) {
  const auto alloc = oma_equivalent(five_user()).allocation();
  const ChannelDescriptor channels[] = {ChannelModel1{5}, five_user_model2()};
  for (const auto& ch : channels) {
    for (double db = 0.0; db <= 40.0; db += 2.0) {
      const auto c = at_db(five_user(), db);
      const auto noma = analytic_outage(c, alloc, ch, OutageMode::Noma);
      const auto oma = analytic_outage(c, alloc, ch, OutageMode::Oma);
      for (std::size_t n = 0; n < 5; ++n) {
        EXPECT_NEAR(noma[n].value, oma[n].value, 1e-12 * oma[n].value) << db;
        EXPECT_NEAR(noma[n].complement, oma[n].complement, 1e-12 * oma[n].complement);
      }
    }
  }
}

TEST(AnalyticOutage, VanishesAtHighSnr) {
  const auto c = five_user();
  const auto alloc = general_allocation(c, proportional_strategy(c));
  std::vector<double> prev(5, 1.0);
  for (double db = 0.0; db <= 120.0; db += 10.0) {
    const auto p = analytic_outage(at_db(c, db), alloc, ChannelModel1{5}, OutageMode::Noma);
    for (std::size_t n = 0; n < 5; ++n) {
      EXPECT_LE(p[n].value, prev[n]);
      EXPECT_GE(p[n].value, 0.0);
      prev[n] = p[n].value;
    }
  }
  for (double v : prev) EXPECT_LT(v, 1e-6);
}

TEST(AnalyticOutage, RejectsBadInput) {
  const auto c = five_user();
  const auto alloc = oma_equivalent(c).allocation();
  EXPECT_THROW(analytic_outage(c, alloc, ChannelModel1{4}, OutageMode::Noma), Error);
  EXPECT_THROW(analytic_outage(c, alloc, ChannelModel1{5}, OutageMode::Both), Error);
}

TEST(MonteCarlo, AgreesWithAnalytic) {
  const auto c = at_db(five_user(), 10.0);
  const auto alloc = general_allocation(c, proportional_strategy(c));
  const ChannelDescriptor channels[] = {ChannelModel1{5}, five_user_model2()};
  for (const auto& ch : channels) {
    MonteCarloOptions opt;
    opt.trials = 200'000;
    opt.seed = kSeed;
    const auto report = montecarlo_outage(c, alloc, ch, opt);
    const auto noma = analytic_outage(c, alloc, ch, OutageMode::Noma);
    const auto oma = analytic_outage(c, alloc, ch, OutageMode::Oma);
    for (std::size_t n = 0; n < 5; ++n) {
      const double sn = binomial_standard_error(noma[n].value, opt.trials);
      const double so = binomial_standard_error(oma[n].value, opt.trials);
      EXPECT_NEAR(report.empirical_noma(n), noma[n].value, 6.0 * sn) << describe(ch);
      EXPECT_NEAR(report.empirical_oma(n), oma[n].value, 6.0 * so) << describe(ch);
      EXPECT_GE(report.empirical_noma(n), 0.0);
      EXPECT_LE(report.empirical_noma(n), 1.0);
    }
  }
}

TEST(MonteCarlo, UnionIsMaxOfStageThresholds) {
  const auto c = at_db(five_user(), 12.0);
  // Not well behaved: stage thresholds out of order for some users.
  const auto alloc = general_allocation(c, EpsilonVector({0.0, 0.0, 0.0, 0.08, 0.0}));
  const ChannelModel1 ch{5};
  const auto thresholds = stage_thresholds(c, alloc);
  ASSERT_LT(thresholds[3], thresholds[2]);
  MonteCarloOptions opt;
  opt.trials = 10'000;
  opt.seed = kSeed;
  opt.threads = 1;
  const auto report = montecarlo_outage(c, alloc, ch, opt);
  std::vector<std::uint64_t> union_count(5, 0);
  std::vector<double> gains(5);
  for (std::uint64_t t = 0; t < opt.trials; ++t) {
    auto rng = trial_stream(opt.seed, t);
    sample_gains(rng, ch, gains);
    for (std::size_t n = 0; n < 5; ++n) {
      bool any = false;
      for (std::size_t m = 0; m <= n; ++m) any = any || gains[n] < thresholds[m];
      union_count[n] += any;
    }
  }
  EXPECT_EQ(report.noma_failures, union_count);
}

TEST(MonteCarlo, ThresholdsAgreeWithCapacity) {
  const auto c = at_db(five_user(), 15.0);
  MonteCarloOptions opt;
  opt.trials = 10'000;
  opt.seed = kSeed;
  opt.verify_capacity = true;
  const std::vector<PowerAllocation> allocs{
      oma_equivalent(c).allocation(), general_allocation(c, proportional_strategy(c)),
      general_allocation(c, EpsilonVector({0.0, 0.0, 0.0, 0.08, 0.0})),
      probe(c, 2, 1.0, 1e-6)};
  for (const auto& alloc : allocs) {
    EXPECT_NO_THROW(montecarlo_outage(c, alloc, ChannelModel1{5}, opt));
    EXPECT_NO_THROW(montecarlo_outage(c, alloc, five_user_model2(), opt));
  }
}

TEST(MonteCarlo, CapacityOutcomeMatchesThresholdsOnOneDraw) {
  const auto c = five_user(10.0);
  const auto alloc = general_allocation(c, proportional_strategy(c));
  const auto t = stage_thresholds(c, alloc);
  std::vector<double> gains(5);
  for (std::size_t n = 0; n < 5; ++n) gains[n] = t[n] * (n % 2 ? 1.01 : 0.99);
  const auto out = capacity_outage(c, alloc, gains);
  for (std::size_t n = 0; n < 5; ++n)
    EXPECT_EQ(out.stage_failure[n][n], n % 2 == 0) << n;
}

TEST(MonteCarlo, IndependentOfThreadCount) {
  const auto c = at_db(five_user(), 20.0);
  const auto alloc = general_allocation(c, proportional_strategy(c));
  MonteCarloOptions opt;
  opt.trials = 50'001;
  opt.seed = 99;
  opt.threads = 1;
  const auto one = montecarlo_outage(c, alloc, five_user_model2(), opt);
  for (unsigned threads : {2u, 3u, 8u}) {
    opt.threads = threads;
    const auto many = montecarlo_outage(c, alloc, five_user_model2(), opt);
    EXPECT_EQ(one.noma_failures, many.noma_failures);
    EXPECT_EQ(one.oma_failures, many.oma_failures);
    EXPECT_EQ(one.stage_failures, many.stage_failures);
  }
}

TEST(MonteCarlo, SeedChangesDraws) {
  const auto c = at_db(five_user(), 20.0);
  const auto alloc = oma_equivalent(c).allocation();
  MonteCarloOptions a{20'000, 1, 1, false};
  MonteCarloOptions b{20'000, 2, 1, false};
  EXPECT_NE(montecarlo_outage(c, alloc, ChannelModel1{5}, a).noma_failures,
            montecarlo_outage(c, alloc, ChannelModel1{5}, b).noma_failures);
}

TEST(MonteCarlo, ModeSelectsCounters) {
  const auto c = five_user();
  const auto alloc = oma_equivalent(c).allocation();
  MonteCarloOptions opt{1000, 1, 1, false};
  const auto noma = montecarlo_outage(c, alloc, ChannelModel1{5}, opt, OutageMode::Noma);
  EXPECT_EQ(noma.noma_failures.size(), 5u);
  EXPECT_TRUE(noma.oma_failures.empty());
  const auto oma = montecarlo_outage(c, alloc, ChannelModel1{5}, opt, OutageMode::Oma);
  EXPECT_TRUE(oma.noma_failures.empty());
  EXPECT_TRUE(oma.stage_failures.empty());
  opt.trials = 0;
  EXPECT_THROW(montecarlo_outage(c, alloc, ChannelModel1{5}, opt), Error);
}

TEST(XiGrid, InclusiveOfStop) {
  const auto grid = xi_grid_db(0.0, 40.0, 2.0);
  ASSERT_EQ(grid.size(), 21u);
  EXPECT_EQ(grid.front(), 0.0);
  EXPECT_EQ(grid.back(), 40.0);
  EXPECT_EQ(xi_grid_db(0.0, 1.0, 0.1).size(), 11u);
  EXPECT_EQ(xi_grid_db(5.0, 5.0, 0.0), std::vector<double>{5.0});
  EXPECT_THROW(xi_grid_db(0.0, 10.0, 0.0), Error);
  EXPECT_THROW(xi_grid_db(10.0, 0.0, 1.0), Error);
}

TEST(Sweep, PointMatchesSingleRun) {
  const auto c = five_user();
  const auto grid = xi_grid_db(0.0, 40.0, 10.0);
  SweepOptions opt;
  opt.montecarlo = true;
  opt.mc = {30'000, kSeed, 2, false};
  const auto reports = sweep(c, ProportionalStrategy{}, ChannelModel1{5}, grid, opt);
  ASSERT_EQ(reports.size(), grid.size());
  const auto alloc = general_allocation(c, proportional_strategy(c));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto single = montecarlo_outage(at_db(c, grid[i]), alloc, ChannelModel1{5}, opt.mc);
    EXPECT_EQ(reports[i].noma_failures, single.noma_failures);
    EXPECT_EQ(reports[i].oma_failures, single.oma_failures);
    EXPECT_EQ(reports[i].stage_failures, single.stage_failures);
    const auto analytic =
        analytic_outage(at_db(c, grid[i]), alloc, ChannelModel1{5}, OutageMode::Noma);
    for (std::size_t n = 0; n < 5; ++n)
      EXPECT_EQ(reports[i].analytic_noma[n].value, analytic[n].value);
  }
}

TEST(Sweep, OmaEquivalentCurvesCoincide) {
  const auto grid = xi_grid_db(0.0, 40.0, 2.0);
  const auto reports =
      sweep(five_user(), OmaEquivalentStrategy{}, ChannelModel1{5}, grid, SweepOptions{});
  for (const auto& r : reports)
    for (std::size_t n = 0; n < 5; ++n)
      EXPECT_NEAR(r.analytic_noma[n].value, r.analytic_oma[n].value,
                  1e-12 * r.analytic_oma[n].value);
}

TEST(Sweep, ProportionalBeatsOma) {
  const auto grid = xi_grid_db(0.0, 40.0, 2.0);
  const ChannelDescriptor channels[] = {ChannelModel1{5}, five_user_model2()};
  for (const auto& ch : channels) {
    const auto reports = sweep(five_user(), ProportionalStrategy{}, ch, grid, SweepOptions{});
    for (const auto& r : reports) {
      for (std::size_t n = 0; n < 5; ++n) {
        EXPECT_LE(r.analytic_noma[n].value, r.analytic_oma[n].value);
        EXPECT_GT(r.analytic_noma[n].complement, r.analytic_oma[n].complement)
            << describe(ch) << " " << r.transmit_snr_db << " user " << n;
      }
    }
  }
}

TEST(Sweep, NoHeadroomProportionalEqualsOmaEquivalent) {
  const SystemConfig c{{1.0, 1.0}, {0.5, 0.5}, 1.0};
  EXPECT_EQ(oma_equivalent(c).headroom, 0.0);
  const auto grid = xi_grid_db(0.0, 40.0, 2.0);
  const auto prop = sweep(c, ProportionalStrategy{}, ChannelModel1{2}, grid, SweepOptions{});
  const auto base = sweep(c, OmaEquivalentStrategy{}, ChannelModel1{2}, grid, SweepOptions{});
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t n = 0; n < 2; ++n)
      EXPECT_EQ(prop[i].analytic_noma[n].value, base[i].analytic_noma[n].value);
}

TEST(Sweep, RejectsEmptyRequests) {
  const std::vector<double> none;
  EXPECT_THROW(sweep(five_user(), ProportionalStrategy{}, ChannelModel1{5}, none, {}), Error);
  SweepOptions off;
  off.analytic = false;
  const std::vector<double> one{10.0};
  EXPECT_THROW(sweep(five_user(), ProportionalStrategy{}, ChannelModel1{5}, one, off), Error);
}

// R = (0.5, 0.6, 1.5), equal shares: spending on user 2 beyond the boundary
// only lowers its own stage threshold below stage 1's, which then governs.
TEST(WastedPower, ThresholdStopsAtStageOne) {
  const SystemConfig c{{0.5, 0.6, 1.5}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 10.0};
  const double gr2 = g(0.6);
  const double boundary = gr2 / g(c.normalized_rate(0)) - gr2 / g(c.normalized_rate(1));
  EXPECT_NEAR(boundary, 0.07428902462943882, 1e-15);
  const double oma_total = oma_equivalent(c).total;
  EXPECT_NEAR(oma_total, 0.7015859807653693, 1e-15);
  const double spend_all = (1.0 - oma_total) * std::exp2(-0.5);
  EXPECT_NEAR(spend_all, 0.21101057660194023, 1e-15);

  auto thresholds = [&](double eps) {
    return noma_thresholds(c, general_allocation(c, EpsilonVector({0.0, eps, 0.0})));
  };
  const auto wasteful = thresholds(spend_all);
  EXPECT_NEAR(general_allocation(c, EpsilonVector({0.0, spend_all, 0.0})).total(), 1.0, 1e-12);
  EXPECT_GT(wasteful[1].stage[0], wasteful[1].stage[1]);
  EXPECT_LT(rel(wasteful[1].effective, oma_threshold(c, 0)), 1e-12);

  const auto edge = thresholds(boundary);
  EXPECT_LT(rel(edge[1].stage[1], edge[1].stage[0]), 1e-12);
  EXPECT_LT(rel(edge[1].effective, wasteful[1].effective), 1e-12);
  for (double eps : {boundary * 1.5, 0.15, 0.2}) {
    const auto u = thresholds(eps);
    EXPECT_LT(rel(u[1].effective, wasteful[1].effective), 1e-12) << eps;
  }
  const auto below = thresholds(boundary * 0.5);
  EXPECT_GT(below[1].effective, edge[1].effective * (1.0 + 1e-9));
  // User 3 never sees any of it.
  EXPECT_LT(rel(wasteful[2].effective, oma_threshold(c, 2)), 1e-12);
  const auto bounds = epsilon_bounds(c, std::vector<double>{0.0}, 1);
  EXPECT_LT(rel(bounds.ordering, boundary), 1e-12);
}

TEST(Csv, HeaderRowsAndOrdering) {
  const SystemConfig raw{{1.5, 0.5}, {0.5, 0.5}, 1.0};
  const auto [c, order] = canonicalize(raw);
  SweepOptions opt;
  opt.montecarlo = true;
  opt.mc = {1000, 5, 1, false};
  const std::vector<double> grid{0.0, 2.5};
  const auto reports = sweep(c, ProportionalStrategy{}, ChannelModel1{2}, grid, opt);
  std::ostringstream os;
  write_outage_csv(os, reports, order);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "xi_db,user,metric,value,trials,seed");
  std::vector<std::string> keys;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const auto d = line.find(',', b + 1);
    keys.push_back(line.substr(0, d));
    EXPECT_EQ(line.substr(line.rfind(',', line.rfind(',') - 1)), ",1000,5");
  }
  // Input user 1 (R = 1.5) is canonical position 1, so it has two stages.
  const std::vector<std::string> expected{
      "0,1,noma_analytic", "0,1,oma_analytic", "0,1,noma_mc", "0,1,oma_mc",
      "0,1,stage_mc:1",   "0,1,stage_mc:2",    "0,2,noma_analytic", "0,2,oma_analytic",
      "0,2,noma_mc",      "0,2,oma_mc",        "0,2,stage_mc:1"};
  ASSERT_EQ(keys.size(), 2 * expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(keys[i], expected[i]);
    EXPECT_EQ(keys[expected.size() + i], "2.5" + expected[i].substr(1));
  }
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 2.5e-300, 0.90794}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(2.5), "2.5");
}

}  // namespace
