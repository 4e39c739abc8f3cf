#include "fluxsim/calibrate.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fluxsim;
using fluxsim::testing::gate_biases;
using fluxsim::testing::table_star;

namespace {

const DressedSystem& cz_system() {
  static const DressedSystem d = solve_system(table_star(gate_biases(1)));
  return d;
}

GateSettings settings(double t_g) {
  GateSettings s;
  s.duration = t_g;
  s.ramp = 10.0;
  return s;
}

}  // namespace

TEST(NelderMead, MinimizesQuadratic) {
  int calls = 0;
  auto f = [&calls](const std::array<double, 2>& x) {
    ++calls;
    return 3.0 * (x[0] - 1.2) * (x[0] - 1.2) + (x[1] + 0.7) * (x[1] + 0.7) + 0.5 * (x[0] - 1.2) * (x[1] + 0.7);
  };
  const auto r = detail::nelder_mead(f, {0.0, 0.0}, {0.1, 0.1}, 500, 1e-14, 1e-6);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.2, 1e-5);
  EXPECT_NEAR(r.x[1], -0.7, 1e-5);
  EXPECT_EQ(r.evaluations, calls);
  const auto capped = detail::nelder_mead(f, {0.0, 0.0}, {0.1, 0.1}, 10, 1e-14, 1e-6);
  EXPECT_FALSE(capped.converged);
  EXPECT_LE(capped.evaluations, 11);
}

TEST(RunOrdered, KeepsTaskOrder) {
  std::vector<std::function<int()>> tasks;
  for (int i = 0; i < 17; ++i) tasks.emplace_back([i] { return i * i; });
  for (int jobs : {1, 4, 32}) {
    const auto out = run_ordered(tasks, jobs);
    ASSERT_EQ(out.size(), 17u);
    for (int i = 0; i < 17; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], i * i);
  }
}

TEST(InitialGuess, FullRabiCycleArea) {
  for (double t_g : {50.0, 100.0}) {
    const InitialGuess g = initial_guess(cz_system(), settings(t_g));
    EXPECT_NEAR(g.amplitude * (t_g - 10.0) * g.matrix_element, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(g.frequency, g.table.gate_frequency);
    EXPECT_LT(g.min_detuning, 0.0);
  }
  const InitialGuess a = initial_guess(cz_system(), settings(50.0));
  const InitialGuess b = initial_guess(cz_system(), settings(100.0));
  EXPECT_NEAR(a.amplitude * 40.0, b.amplitude * 90.0, 1e-12);
}

TEST(InitialGuess, AlreadyCloseToControlledZ) {
  const GateSettings s = settings(100.0);
  const InitialGuess g = initial_guess(cz_system(), s);
  const GateEvaluation e = evaluate_gate(cz_system(), s, g, g.amplitude, g.frequency, 1.0);
  EXPECT_LT(e.report.error, 0.1);
  EXPECT_GT(std::abs(e.report.conditional_phase), 2.5);
}

TEST(TuneUp, ControlledZAtHundredNanoseconds) {
  const TuneUpResult a = tune_up(cz_system(), settings(100.0));
  EXPECT_TRUE(a.addressable);
  EXPECT_LE(a.report.error, 1e-3);
  EXPECT_LE(a.final_cost, a.initial_cost);
  EXPECT_LE(std::abs(a.frequency - a.guess.frequency), 0.5 * std::abs(a.guess.min_detuning));
  EXPECT_GT(a.evaluations, 3);
  for (std::size_t i = 1; i < a.cost_trace.size(); ++i) {
    EXPECT_LE(a.cost_trace[i].second, a.cost_trace[i - 1].second);
  }
  const TuneUpResult b = tune_up(cz_system(), settings(100.0));
  EXPECT_EQ(a.amplitude, b.amplitude);
  EXPECT_EQ(a.frequency, b.frequency);
  EXPECT_EQ(a.report.error, b.report.error);
}

TEST(TuneUp, UnaddressableWithoutCouplings) {
  const DressedSystem d = solve_system(table_star({0.3}, 0.0, 0.0));
  GateSettings s = settings(100.0);
  s.drive_fluxoniums = {0};
  const TuneUpResult r = tune_up(d, s);
  EXPECT_FALSE(r.addressable);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.evaluations, 1);
  EXPECT_FALSE(r.message.empty());
}

TEST(LengthSweep, ErrorFallsWithLength) {
  TuneUpOptions opts;
  opts.max_evaluations = 60;
  const auto rows = error_vs_length_sweep(cz_system(), settings(100.0), {50.0, 100.0}, opts, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].duration, 50.0);
  EXPECT_EQ(rows[1].duration, 100.0);
  for (const auto& r : rows) EXPECT_TRUE(r.failure.empty()) << r.failure;
  EXPECT_LT(rows[1].error, rows[0].error);
  EXPECT_LT(rows[0].error, 1e-2);
  const double area_ratio = (rows[0].amplitude * 40.0) / (rows[1].amplitude * 90.0);
  EXPECT_NEAR(area_ratio, 1.0, 0.1);
  EXPECT_THROW(error_vs_length_sweep(cz_system(), settings(100.0), {100.0, 50.0}), std::invalid_argument);
}
