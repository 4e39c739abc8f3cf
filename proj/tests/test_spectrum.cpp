#include "fluxsim/dynamics.hpp"
#include "fluxsim/effective.hpp"
#include "fluxsim/spectrum.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace fluxsim;
using fluxsim::testing::gate_biases;
using fluxsim::testing::table_star;

namespace {

constexpr double mhz = 1e-3;

StarSystem swap_neighbours(StarSystem s) {
  std::swap(s.neighbors[0], s.neighbors[1]);
  std::swap(s.couplers[0], s.couplers[1]);
  std::swap(s.j_c0[0], s.j_c0[1]);
  std::swap(s.j_cj[0], s.j_cj[1]);
  std::swap(s.j_0j[0], s.j_0j[1]);
  return s;
}

}  // namespace

TEST(NeighborConfig, IndexOrdering) {
  EXPECT_EQ(NeighborConfig::from_index(0b011, 3).str(), "011");
  EXPECT_EQ(NeighborConfig::from_index(0b100, 3).str(), "100");
  EXPECT_TRUE(NeighborConfig::ones(2).all_ones());
  EXPECT_TRUE(NeighborConfig::zeros(2).all_zero());
  EXPECT_EQ(NeighborConfig::unit(1, 3).str(), "010");
}

TEST(Labels, DecoupledOverlapsAreOne) {
  const DressedSystem d = solve_system(table_star({0.3, 0.3}, 0.0, 0.0));
  for (const auto& label : relevant_labels(d.system)) EXPECT_NEAR(d.spectrum.overlap_of(label), 1.0, 1e-12);
  EXPECT_TRUE(d.spectrum.ambiguous.empty());
}

TEST(Labels, ComputationalStatesStayBare) {
  const DressedSystem d = solve_system(table_star(gate_biases(1)));
  for (const auto& label : computational_labels(d.system)) EXPECT_GT(d.spectrum.overlap_of(label), 0.99);
}

TEST(Labels, DegenerateHybridizationIsFlagged) {
  const double g = 0.05;
  ComplexMatrix h(4, 4);
  h << 1.0, g, g, 0.0, g, 1.0, g, 0.0, g, g, 1.0, 0.0, 0.0, 0.0, 0.0, 3.0;
  const ProductBasis basis({4});
  const LabeledSpectrum spec = solve_and_label(OperatorMatrix(h, BasisTag::bare_product), basis, {{0}, {1}, {2}, {3}});
  EXPECT_FALSE(spec.ambiguous.empty());
  EXPECT_FALSE(spec.is_ambiguous({3}));
  std::set<std::size_t> used;
  for (int k = 0; k < 4; ++k) used.insert(spec.eig_index({k}));
  EXPECT_EQ(used.size(), 4u);
}

TEST(Labels, DuplicateRequestsShareOneEigenvector) {
  ComplexMatrix h(3, 3);
  h << 0.0, 0.01, 0.0, 0.01, 1.0, 0.0, 0.0, 0.0, 2.0;
  const ProductBasis basis({3});
  const LabeledSpectrum once = solve_and_label(OperatorMatrix(h, BasisTag::bare_product), basis, {{0}, {1}});
  const LabeledSpectrum twice = solve_and_label(OperatorMatrix(h, BasisTag::bare_product), basis, {{1}, {0}, {1}});
  EXPECT_EQ(once.eig_index({0}), twice.eig_index({0}));
  EXPECT_EQ(once.eig_index({1}), twice.eig_index({1}));
  EXPECT_GT(twice.overlap_of({1}), 0.99);
}

TEST(Labels, RejectsNonHermitian) {
  ComplexMatrix h = ComplexMatrix::Zero(2, 2);
  h(0, 1) = 1.0;
  EXPECT_THROW(solve_and_label(OperatorMatrix(h, BasisTag::bare_product), ProductBasis({2}), {{0}}),
               std::invalid_argument);
}

TEST(Transition, AntisymmetricAndDecoupledLimit) {
  const DressedSystem d = solve_system(table_star({0.3}, 0.0, 0.0));
  const auto a = star_label({1, 0});
  const auto b = star_label({2, 0});
  EXPECT_DOUBLE_EQ(dressed_transition(d.spectrum, a, a), 0.0);
  EXPECT_DOUBLE_EQ(dressed_transition(d.spectrum, a, b), -dressed_transition(d.spectrum, b, a));
  EXPECT_NEAR(dressed_transition(d.spectrum, a, b), 5.621, 2 * mhz);
}

TEST(Shift, ZeroConfigIsExactlyZero) {
  const DressedSystem d = solve_system(table_star(gate_biases(1)));
  EXPECT_EQ(state_dependent_shift(d, NeighborConfig::zeros(1)), 0.0);
  EXPECT_THROW(state_dependent_shift(d, NeighborConfig::zeros(2)), std::invalid_argument);
}

// Weak coupling, no direct capacitance, Q1 tuned so g01 / Delta01 is small.
TEST(Shift, SmallCouplingMatchesDispersiveChi) {
  StarSystem s = table_star({0.3}, 0.1, 0.0);
  s.neighbors[0].e_j = 6.0;
  const double shift = state_dependent_shift(s, NeighborConfig::ones(1));
  const double chi = build_effective_model(s).chi[0];
  ASSERT_GT(std::abs(chi), 0.0);
  EXPECT_NEAR(shift / chi, 1.0, 0.15);
}

TEST(ShiftSweep, ZeroCouplingGivesNoShift) {
  const auto points = shift_sweep(table_star(gate_biases(2), 0.5, 0.0), {0.0});
  ASSERT_EQ(points.size(), 1u);
  for (double x : points[0].single_shifts) EXPECT_NEAR(x, 0.0, 1e-9);
  EXPECT_NEAR(points[0].all_ones_shift, 0.0, 1e-9);
  EXPECT_FALSE(points[0].breakdown());
  EXPECT_FALSE(points[0].ambiguous);
}

TEST(ShiftSweep, RejectsUnsortedValues) {
  EXPECT_THROW(shift_sweep(table_star(gate_biases(2)), {0.2, 0.1}), std::invalid_argument);
}

TEST(ShiftSweep, ParallelMatchesSerial) {
  const StarSystem s = table_star(gate_biases(2));
  const std::vector<double> js{0.1, 0.2, 0.3};
  const auto a = shift_sweep(s, js, {}, 1);
  const auto b = shift_sweep(s, js, {}, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].j_ck, b[i].j_ck);
    EXPECT_EQ(a[i].all_ones_shift, b[i].all_ones_shift);
  }
}

TEST(ShiftSweep, TwoNeighboursAdditiveAtModerateCoupling) {
  const ShiftSweepPoint p = shift_point(table_star(gate_biases(2)), 0.3);
  ASSERT_TRUE(p.error.empty()) << p.error;
  EXPECT_LT(p.additivity_residual, 0.10);
  EXPECT_NEAR(p.sum_of_singles, p.single_shifts[0] + p.single_shifts[1], 1e-15);
}

TEST(ShiftSweep, JumpDetection) {
  std::vector<ShiftSweepPoint> pts(4);
  const double series[4] = {0.0, 0.001, 0.002, 0.05};
  for (int i = 0; i < 4; ++i) {
    pts[i].single_shifts = {series[i]};
    pts[i].all_ones_shift = series[i];
  }
  flag_jumps(pts);
  EXPECT_FALSE(pts[2].jump);
  EXPECT_TRUE(pts[3].jump);
  EXPECT_TRUE(pts[3].breakdown());
}

TEST(TransitionTable, InvariantsAgainstBruteForce) {
  const DressedSystem d = solve_system(table_star(gate_biases(2)));
  const TransitionTable t = transition_table(d);
  ASSERT_EQ(t.rows.size(), 3u * 4u);
  EXPECT_EQ(t.rows[t.gate_row].fluxonium, 0);
  EXPECT_TRUE(t.rows[t.gate_row].others.all_ones());
  EXPECT_DOUBLE_EQ(t.gate_frequency, d.plasmon_frequency(0, NeighborConfig::ones(2)));
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_row = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(t.rows[i].frequency, d.plasmon_frequency(t.rows[i].fluxonium, t.rows[i].others));
    if (i == t.gate_row) continue;
    const double diff = std::abs(t.rows[i].frequency - t.gate_frequency);
    if (diff < best) {
      best = diff;
      best_row = i;
    }
  }
  EXPECT_EQ(t.nearest_row, best_row);
  EXPECT_DOUBLE_EQ(std::abs(t.min_detuning), best);
  EXPECT_DOUBLE_EQ(t.min_detuning, t.rows[best_row].frequency - t.gate_frequency);
}

TEST(TransitionTable, NeighbourPermutationInvariance) {
  const StarSystem s = table_star(gate_biases(2));
  const DressedSystem a = solve_system(s);
  const DressedSystem b = solve_system(swap_neighbours(s));
  for (unsigned idx = 0; idx < 4; ++idx) {
    const NeighborConfig c = NeighborConfig::from_index(idx, 2);
    const NeighborConfig swapped{{c.s[1], c.s[0]}};
    EXPECT_NEAR(a.plasmon_frequency(0, c), b.plasmon_frequency(0, swapped), 1e-9) << c.str();
  }
}
