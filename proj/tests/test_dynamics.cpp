#include "fluxsim/calibrate.hpp"
#include "fluxsim/dynamics.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fluxsim;
using fluxsim::testing::gate_biases;
using fluxsim::testing::table_star;

namespace {

// Tuned 100 ns flat-top CZ drive for the single-neighbour system.
constexpr double cz_amplitude = 0.0157643615879341;
constexpr double cz_frequency = 5.470233380424365;

const DressedSystem& cz_system() {
  static const DressedSystem d = solve_system(table_star(gate_biases(1)));
  return d;
}

GateSettings cz_settings() {
  GateSettings s;
  s.duration = 100.0;
  s.ramp = 10.0;
  return s;
}

std::vector<DriveTone> cz_tones(double amplitude, double frequency = cz_frequency) {
  const GateSettings s = cz_settings();
  const InitialGuess g = initial_guess(cz_system(), s);
  return gate_tones(s, g, 1, amplitude, frequency);
}

std::vector<FluxRamp> cz_ramps(double ramp_time) { return {FluxRamp{0.0, gate_biases(1)[0], ramp_time, 100.0}}; }

// Two-level system at f GHz driven by 2 A cos(2 pi f t) sigma_x: Rabi angle 2 pi A t.
struct Rabi {
  double f = 5.0;
  double a = 0.005;
  RealVector energies() const { return RealVector{{0.0, f}}; }
  ComplexMatrix sigma_x() const {
    ComplexMatrix x = ComplexMatrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1.0;
    return x;
  }
};

double rabi_population_magnus(const Rabi& r, double t, int level) {
  PropagationConfig cfg;
  cfg.dt = 0.002;
  const OperatorMatrix h0(ComplexMatrix(r.energies().cast<cplx>().asDiagonal()), BasisTag::local);
  const ComplexMatrix x = r.sigma_x();
  auto drive = [&](double tt) {
    return OperatorMatrix(2.0 * r.a * std::cos(two_pi * r.f * tt) * x, BasisTag::local);
  };
  const ComplexVector psi = propagate(h0, drive, ComplexVector::Unit(2, 0), 0.0, t, cfg);
  return std::norm(psi(level));
}

double rabi_population_split(const Rabi& r, double t, int level) {
  const DrivenPropagator prop(r.energies(), r.sigma_x(), ComplexMatrix());
  ComplexMatrix psi = ComplexMatrix::Zero(2, 1);
  psi(0, 0) = 1.0;
  prop.evolve(psi, 0.0, t, [&](double tt) { return 2.0 * r.a * std::polar(1.0, two_pi * r.f * tt); }, 0.002, 4);
  return std::norm(psi(level, 0));
}

}  // namespace

TEST(Rabi, FullCycleReturns) {
  const Rabi r;
  EXPECT_GE(rabi_population_magnus(r, 0.5 / r.a, 0), 1.0 - 1e-6);
  EXPECT_GE(rabi_population_split(r, 0.5 / r.a, 0), 1.0 - 1e-6);
}

TEST(Rabi, HalfCycleTransfers) {
  const Rabi r;
  EXPECT_GE(rabi_population_magnus(r, 0.25 / r.a, 1), 1.0 - 1e-6);
  EXPECT_GE(rabi_population_split(r, 0.25 / r.a, 1), 1.0 - 1e-6);
}

TEST(Propagate, EigenstateOnlyPicksUpPhase) {
  const RealVector e{{0.0, 0.31, 5.9}};
  const OperatorMatrix h0(ComplexMatrix(e.cast<cplx>().asDiagonal()), BasisTag::local);
  PropagationConfig cfg;
  cfg.dt = 0.002;
  auto none = [](double) { return OperatorMatrix(ComplexMatrix::Zero(3, 3), BasisTag::local); };
  const ComplexVector psi = propagate(h0, none, ComplexVector::Unit(3, 2), 0.0, 10.0, cfg);
  EXPECT_NEAR(std::abs(psi(2) - std::polar(1.0, -two_pi * 5.9 * 10.0)), 0.0, 1e-10);
  ComplexVector bad = ComplexVector::Ones(3);
  EXPECT_THROW(propagate(h0, none, bad, 0.0, 1.0, cfg), std::invalid_argument);
  cfg.dt = 0.1;
  EXPECT_THROW(propagate(h0, none, ComplexVector::Unit(3, 0), 0.0, 1.0, cfg), StepSizeError);
}

TEST(Evolution, FullPropagatorStaysUnitary) {
  const auto tones = cz_tones(cz_amplitude);
  const GateSettings s = cz_settings();
  const auto setup = detail::drive_setup(cz_system(), tones, s.propagation);
  const Eigen::Index d = setup.propagator->dim();
  ComplexMatrix psi = ComplexMatrix::Identity(d, d);
  setup.propagator->evolve(psi, 0.0, 100.0, setup.amplitude, s.propagation.dt, s.propagation.order);
  EXPECT_LT((psi.adjoint() * psi - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Evolution, StepHalvingConverged) {
  PropagationConfig coarse = cz_settings().propagation;
  PropagationConfig fine = coarse;
  fine.dt = 0.5 * coarse.dt;
  const auto tones = cz_tones(cz_amplitude);
  const ComplexMatrix a = computational_evolution_operator(cz_system(), tones, coarse).u_comp;
  const ComplexMatrix b = computational_evolution_operator(cz_system(), tones, fine).u_comp;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Evolution, ZeroDriveIsIdentity) {
  const auto tones = cz_tones(0.0);
  const PropagationConfig cfg = cz_settings().propagation;
  const EvolutionResult plain = computational_evolution_operator(cz_system(), tones, cfg);
  EXPECT_LT((plain.u_comp - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_DOUBLE_EQ(plain.duration, 100.0);
  const EvolutionResult ramped = computational_evolution_operator(cz_system(), tones, cfg, cz_ramps(3.0));
  EXPECT_DOUBLE_EQ(ramped.duration, 106.0);
  const GateReport r = gate_report(ramped.u_comp, ComplexMatrix::Identity(4, 4), 0.0);
  EXPECT_LT(r.error, 1e-6);
}

TEST(Evolution, CalibratedDriveMakesControlledZ) {
  const EvolutionResult ev = computational_evolution_operator(cz_system(), cz_tones(cz_amplitude),
                                                              cz_settings().propagation);
  const GateReport r = gate_report(ev);
  EXPECT_LT(r.error, 1e-4);
  EXPECT_GE(r.leakage, -1e-9);
  EXPECT_NEAR(std::abs(r.target_phase_error), 0.0, 0.02);
  for (double n : ev.column_norms) EXPECT_LE(n, 1.0 + 1e-9);
  EXPECT_GT(ev.subspace_dim, 4u);
}

TEST(Evolution, FramesAgreeInMagnitude) {
  PropagationConfig lab = cz_settings().propagation;
  lab.frame = Frame::lab;
  const auto tones = cz_tones(cz_amplitude);
  const ComplexMatrix a = computational_evolution_operator(cz_system(), tones, cz_settings().propagation).u_comp;
  const ComplexMatrix b = computational_evolution_operator(cz_system(), tones, lab).u_comp;
  EXPECT_LT((a.cwiseAbs() - b.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evolution, RampsBarelyChangePopulations) {
  const auto tones = cz_tones(cz_amplitude);
  const PropagationConfig cfg = cz_settings().propagation;
  const ComplexMatrix a = computational_evolution_operator(cz_system(), tones, cfg).u_comp;
  const ComplexMatrix b = computational_evolution_operator(cz_system(), tones, cfg, cz_ramps(3.0)).u_comp;
  EXPECT_LT((a.cwiseAbs2() - b.cwiseAbs2()).cwiseAbs().maxCoeff(), 5e-4);
}

TEST(Evolution, RejectsCoarseStep) {
  PropagationConfig cfg = cz_settings().propagation;
  cfg.dt = 0.05;
  EXPECT_THROW(computational_evolution_operator(cz_system(), cz_tones(cz_amplitude), cfg), StepSizeError);
  cfg.dt = 0.002;
  const std::vector<FluxRamp> wrong_bias{FluxRamp{0.0, 0.3, 3.0, 100.0}};
  EXPECT_THROW(computational_evolution_operator(cz_system(), cz_tones(cz_amplitude), cfg, wrong_bias),
               std::invalid_argument);
  const std::vector<FluxRamp> wrong_hold{FluxRamp{0.0, gate_biases(1)[0], 3.0, 50.0}};
  EXPECT_THROW(computational_evolution_operator(cz_system(), cz_tones(cz_amplitude), cfg, wrong_hold),
               std::invalid_argument);
}

// Three levels a, b, c with the drive resonant on a-b and the a-c line
// detuned by delta'. DRAG with alpha = 1 suppresses the spurious a-c transfer.
TEST(Drag, SuppressesNeighbouringTransition) {
  for (double delta : {0.08, -0.08}) {
    const double f = 5.0;
    const RealVector e{{0.0, f, f + delta}};
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d(0, 1) = d(1, 0) = d(0, 2) = d(2, 0) = 1.0;
    const DrivenPropagator prop(e, d, ComplexMatrix());
    auto leaked = [&](double alpha) {
      DrivePulse p;
      p.shape = PulseShape::cosine;
      p.amplitude = 0.025;
      p.frequency = f;
      p.duration = 20.0;
      p.drag_alpha = alpha;
      p.drag_detuning = delta;
      ComplexMatrix psi = ComplexMatrix::Zero(3, 1);
      psi(0, 0) = 1.0;
      prop.evolve(psi, 0.0, p.duration, detail::drive_amplitude(p), 1e-3, 4);
      return std::norm(psi(2, 0));
    };
    const double plain = leaked(0.0);
    EXPECT_LT(leaked(1.0), plain / 3.0) << "delta " << delta;
    EXPECT_GT(leaked(-1.0), plain) << "delta " << delta;
  }
}

TEST(Trace, UndrivenStateStaysPut) {
  PropagationConfig cfg = cz_settings().propagation;
  cfg.trace_stride = 5000;
  const auto tr = population_trace(cz_system(), cz_tones(0.0), star_label({1, 1}), {star_label({1, 1})}, cfg);
  ASSERT_GT(tr.times.size(), 3u);
  EXPECT_DOUBLE_EQ(tr.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(tr.times.back(), 100.0);
  for (const auto& row : tr.populations) EXPECT_NEAR(row[0], 1.0, 1e-9);
}

TEST(Trace, GateTransitionDipsAndReturns) {
  PropagationConfig cfg = cz_settings().propagation;
  cfg.trace_stride = 500;
  std::vector<std::vector<int>> obs;
  for (const auto& l : computational_labels(cz_system().system)) obs.push_back(l);
  obs.push_back(star_label({2, 1}));
  obs.push_back(star_label({2, 0}));
  obs.push_back(star_label({1, 2}));
  obs.push_back(star_label({0, 2}));
  const auto tr = population_trace(cz_system(), cz_tones(cz_amplitude), star_label({1, 1}), obs, cfg);
  double lowest = 1.0;
  for (const auto& row : tr.populations) {
    lowest = std::min(lowest, row[3]);
    double sum = 0.0;
    for (double p : row) sum += p;
    EXPECT_LE(sum, 1.0 + 1e-9);
  }
  EXPECT_LT(lowest, 0.1);
  EXPECT_GE(tr.populations.back()[3], 0.98);
}

TEST(Trace, RampedTraceStartsAndEndsAtIdle) {
  PropagationConfig cfg = cz_settings().propagation;
  cfg.trace_stride = 5000;
  const auto tr = population_trace(cz_system(), cz_tones(0.0), star_label({1, 1}), {star_label({1, 1})}, cfg,
                                   cz_ramps(3.0));
  EXPECT_DOUBLE_EQ(tr.times.front(), 0.0);
  EXPECT_NEAR(tr.times.back(), 106.0, 1e-9);
  for (const auto& row : tr.populations) EXPECT_NEAR(row[0], 1.0, 1e-6);
}
