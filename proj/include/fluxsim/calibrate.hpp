#pragma once

// Tune-up of multi-controlled-Z gates: a pulse-area initial guess on the gate
// transition followed by a Nelder-Mead search over drive amplitude and
// frequency, and error-versus-length sweeps.

#include "fluxsim/dynamics.hpp"
#include "fluxsim/metrics.hpp"
#include "fluxsim/parallel.hpp"
#include "fluxsim/pulses.hpp"
#include "fluxsim/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace fluxsim {

/// Flat-top ramp times used when none is configured.
inline double default_flat_top_ramp(int n_neighbors) {
  switch (n_neighbors) {
    case 3: return 20.0;
    case 4: return 30.0;
    default: return 10.0;
  }
}

struct GateSettings {
  PulseShape shape = PulseShape::flat_top;
  double duration = 100.0;                  // t_g, ns
  double ramp = 0.0;                        // flat-top t_r, ns; <= 0 selects the default for N
  bool drag = true;
  double drag_alpha = 1.0;
  std::vector<int> drive_fluxoniums{0, 1};
  PropagationConfig propagation;

  [[nodiscard]] double ramp_for(int n_neighbors) const {
    return ramp > 0.0 ? ramp : default_flat_top_ramp(n_neighbors);
  }
};

struct InitialGuess {
  double amplitude = 0.0;       // Omega_d, GHz
  double frequency = 0.0;       // GHz
  std::vector<double> phases;   // per driven fluxonium, radians
  double matrix_element = 0.0;  // |sum_k e^{-i phi_k} m_k|
  double min_detuning = 0.0;    // (delta')_Min, GHz
  TransitionTable table;
};

/// Gate transition |1, 1..1> -> |2, 1..1> with couplers in ground.
inline std::pair<std::vector<int>, std::vector<int>> gate_transition(const StarSystem& system) {
  const NeighborConfig ones = NeighborConfig::ones(system.n_neighbors());
  return {star_label(insert_occupation(ones, 0, 1)), star_label(insert_occupation(ones, 0, 2))};
}

inline DrivePulse gate_pulse(const GateSettings& s, int n_neighbors, double amplitude, double frequency,
                             double min_detuning) {
  DrivePulse p;
  p.shape = s.shape;
  p.amplitude = amplitude;
  p.frequency = frequency;
  p.duration = s.duration;
  if (s.shape == PulseShape::flat_top) p.ramp = s.ramp_for(n_neighbors);
  if (s.drag && min_detuning != 0.0) {
    p.drag_alpha = s.drag_alpha;
    p.drag_detuning = min_detuning;
  }
  return p;
}

inline std::vector<DriveTone> gate_tones(const GateSettings& s, const InitialGuess& g, int n_neighbors,
                                         double amplitude, double frequency) {
  std::vector<DriveTone> tones;
  for (std::size_t k = 0; k < s.drive_fluxoniums.size(); ++k) {
    DrivePulse p = gate_pulse(s, n_neighbors, amplitude, frequency, g.min_detuning);
    p.phase = g.phases[k];
    tones.push_back({s.drive_fluxoniums[k], p});
  }
  return tones;
}

/// Drive on the spectroscopic gate frequency with the amplitude that gives
/// the gate transition a full Rabi cycle: area(Omega_d) |m| = 1 (cycles).
inline InitialGuess initial_guess(const DressedSystem& dressed, const GateSettings& s) {
  const int n = dressed.system.n_neighbors();
  InitialGuess g;
  g.table = transition_table(dressed);
  g.frequency = g.table.gate_frequency;
  g.min_detuning = g.table.min_detuning;
  const auto [from, to] = gate_transition(dressed.system);
  g.phases = relative_drive_phases(dressed, s.drive_fluxoniums, from, to);
  cplx m = 0.0;
  for (std::size_t k = 0; k < s.drive_fluxoniums.size(); ++k) {
    m += std::polar(1.0, -g.phases[k]) * dressed_charge_element(dressed, s.drive_fluxoniums[k], from, to);
  }
  g.matrix_element = std::abs(m);
  if (g.matrix_element < 1e-9) throw std::domain_error("initial_guess: vanishing gate matrix element");
  const double unit_area = pulse_area(gate_pulse(s, n, 1.0, g.frequency, 0.0));
  g.amplitude = 1.0 / (unit_area * g.matrix_element);
  return g;
}

struct TuneUpOptions {
  double phase_weight = 1.0;        // rad^-2
  int max_evaluations = 200;
  double amplitude_step = 0.05;     // relative
  double frequency_step = 1e-3;     // GHz
  double cost_tolerance = 1e-8;
  double size_tolerance = 1e-3;     // in units of the initial steps
  double search_dt = 0.01;          // ns while searching, <= 0 keeps the gate setting
  double search_cutoff = 13.0;      // GHz dressed cutoff while searching, <= 0 keeps the gate setting
};

struct GateEvaluation {
  double cost = 0.0;
  GateReport report;
};

/// Cost leakage + w * wrap(phi_cond - pi)^2 of one parameter point.
inline GateEvaluation evaluate_gate(const DressedSystem& dressed, const GateSettings& s, const InitialGuess& g,
                                    double amplitude, double frequency, double phase_weight) {
  const auto tones = gate_tones(s, g, dressed.system.n_neighbors(), amplitude, frequency);
  const EvolutionResult ev = computational_evolution_operator(dressed, tones, s.propagation);
  GateEvaluation e;
  e.report = gate_report(ev);
  e.cost = e.report.leakage + phase_weight * e.report.target_phase_error * e.report.target_phase_error;
  return e;
}

struct TuneUpResult {
  double amplitude = 0.0;  // GHz
  double frequency = 0.0;  // GHz
  GateReport report;
  std::vector<std::pair<int, double>> cost_trace;  // (evaluation, best cost so far)
  bool converged = false;
  bool addressable = true;
  int evaluations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  InitialGuess guess;
  std::string message;
};

namespace detail {

struct SimplexResult {
  std::array<double, 2> x{};
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Deterministic two-parameter Nelder-Mead (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2).
inline SimplexResult nelder_mead(const std::function<double(const std::array<double, 2>&)>& f,
                                 std::array<double, 2> x0, std::array<double, 2> step, int max_eval,
                                 double f_tol, double x_tol) {
  using Point = std::array<double, 2>;
  std::array<Point, 3> p{x0, x0, x0};
  p[1][0] += step[0];
  p[2][1] += step[1];
  std::array<double, 3> v{};
  int evals = 0;
  for (int i = 0; i < 3; ++i) {
    v[static_cast<std::size_t>(i)] = f(p[static_cast<std::size_t>(i)]);
    ++evals;
  }
  auto lerp = [](const Point& a, const Point& b, double t) { return Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}; };
  bool converged = false;
  while (evals < max_eval) {
    std::array<std::size_t, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    const Point best = p[order[0]];
    const Point mid = p[order[1]];
    const Point worst = p[order[2]];
    const double fb = v[order[0]], fm = v[order[1]], fw = v[order[2]];
    double size = 0.0;
    for (std::size_t i = 1; i < 3; ++i) {
      size = std::max({size, std::abs(p[order[i]][0] - best[0]) / step[0], std::abs(p[order[i]][1] - best[1]) / step[1]});
    }
    if (fw - fb <= f_tol && size <= x_tol) {
      converged = true;
      break;
    }
    const Point centroid{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
    const Point xr = lerp(centroid, worst, -1.0);
    const double fr = f(xr);
    ++evals;
    Point next = xr;
    double fnext = fr;
    bool shrink = false;
    if (fr < fb) {
      const Point xe = lerp(centroid, worst, -2.0);
      const double fe = evals < max_eval ? f(xe) : std::numeric_limits<double>::infinity();
      ++evals;
      if (fe < fr) {
        next = xe;
        fnext = fe;
      }
    } else if (fr >= fm) {
      const bool outside = fr < fw;
      const Point xc = outside ? lerp(centroid, xr, 0.5) : lerp(centroid, worst, 0.5);
      const double fc = evals < max_eval ? f(xc) : std::numeric_limits<double>::infinity();
      ++evals;
      if (fc < (outside ? fr : fw)) {
        next = xc;
        fnext = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i < 3 && evals < max_eval; ++i) {
        p[order[i]] = lerp(best, p[order[i]], 0.5);
        v[order[i]] = f(p[order[i]]);
        ++evals;
      }
    } else {
      p[order[2]] = next;
      v[order[2]] = fnext;
    }
  }
  const auto it = std::min_element(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(it - v.begin());
  return {p[idx], v[idx], evals, converged};
}

}  // namespace detail

/// Minimize leakage + w * (phi_cond - pi)^2 over (Omega_d, omega_d), starting
/// from the pulse-area guess. The drive frequency is confined to within half
/// the minimum detuning of the gate transition. Returns the best point seen.
inline TuneUpResult tune_up(const DressedSystem& dressed, const GateSettings& s, const TuneUpOptions& opts = {}) {
  TuneUpResult r;
  r.guess = initial_guess(dressed, s);
  const InitialGuess& g = r.guess;
  const double window = 0.5 * std::abs(g.min_detuning);
  if (window < 1e-4) {
    InitialGuess plain = g;
    plain.min_detuning = 0.0;
    const GateEvaluation e = evaluate_gate(dressed, s, plain, g.amplitude, g.frequency, opts.phase_weight);
    r.amplitude = g.amplitude;
    r.frequency = g.frequency;
    r.report = e.report;
    r.initial_cost = r.final_cost = e.cost;
    r.evaluations = 1;
    r.cost_trace.emplace_back(1, e.cost);
    r.addressable = false;
    r.converged = false;
    r.message = "gate transition is not spectrally separated from its neighbours";
    return r;
  }
  GateSettings search = s;
  if (opts.search_dt > 0.0) search.propagation.dt = opts.search_dt;
  if (opts.search_cutoff > 0.0) search.propagation.dressed_cutoff = std::min(opts.search_cutoff, s.propagation.dressed_cutoff);
  double best = std::numeric_limits<double>::infinity();
  std::array<double, 2> best_x{1.0, 0.0};
  int count = 0;
  auto cost = [&](const std::array<double, 2>& x) {
    const double amp = g.amplitude * x[0];
    const double freq = g.frequency + x[1] * opts.frequency_step;
    double c = 0.0;
    const double excess = std::abs(freq - g.frequency) - window;
    if (x[0] <= 0.0 || excess > 0.0) {
      c = 10.0 + std::max(0.0, -x[0]) + std::max(0.0, excess) / opts.frequency_step;
    } else {
      c = evaluate_gate(dressed, search, g, amp, freq, opts.phase_weight).cost;
    }
    ++count;
    if (count == 1) r.initial_cost = c;
    if (c < best) {
      best = c;
      best_x = x;
    }
    r.cost_trace.emplace_back(count, best);
    return c;
  };
  const auto res = detail::nelder_mead(cost, {1.0, 0.0}, {opts.amplitude_step, 1.0}, opts.max_evaluations,
                                       opts.cost_tolerance, opts.size_tolerance);
  r.amplitude = g.amplitude * best_x[0];
  r.frequency = g.frequency + best_x[1] * opts.frequency_step;
  r.report = evaluate_gate(dressed, s, g, r.amplitude, r.frequency, opts.phase_weight).report;
  r.final_cost = best;
  r.evaluations = count;
  r.converged = res.converged;
  r.message = res.converged ? "converged" : "evaluation budget exhausted";
  return r;
}

struct SweepRow {
  double duration = 0.0;
  double error = 0.0;
  double leakage = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
  bool converged = false;
  std::string failure;  // non-empty when the point could not be evaluated
  GateReport report;
};

inline std::vector<SweepRow> error_vs_length_sweep(const DressedSystem& dressed, const GateSettings& base,
                                                   const std::vector<double>& lengths, const TuneUpOptions& opts = {},
                                                   int jobs = 1) {
  if (!std::is_sorted(lengths.begin(), lengths.end())) {
    throw std::invalid_argument("error_vs_length_sweep: gate lengths must be ascending");
  }
  std::vector<std::function<SweepRow()>> tasks;
  for (double t_g : lengths) {
    tasks.emplace_back([&dressed, base, t_g, opts] {
      SweepRow row;
      row.duration = t_g;
      try {
        GateSettings s = base;
        s.duration = t_g;
        const TuneUpResult t = tune_up(dressed, s, opts);
        row.error = t.report.error;
        row.leakage = t.report.leakage;
        row.amplitude = t.amplitude;
        row.frequency = t.frequency;
        row.converged = t.converged;
        row.report = t.report;
      } catch (const std::exception& ex) {
        row.failure = ex.what();
      }
      return row;
    });
  }
  return run_ordered(tasks, jobs);
}

}  // namespace fluxsim
