#pragma once

// Time evolution of the driven star system.
//
// Gate runs work in the dressed eigenbasis of the static Hamiltonian at the
// interaction bias, truncated at a dressed-energy cutoff. The static part is
// applied exactly and the drive through a fourth-order (Yoshida) composition
// of symmetric splittings, so every step is unitary to round-off. Coupler
// flux ramps are integrated in the bare product basis with piecewise-constant
// bias and exact exponentials.

#include "fluxsim/circuit.hpp"
#include "fluxsim/linalg.hpp"
#include "fluxsim/pulses.hpp"
#include "fluxsim/spectrum.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fluxsim {

class StepSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Frame { lab, interaction };

inline const char* to_string(Frame f) { return f == Frame::lab ? "lab" : "interaction"; }

struct PropagationConfig {
  double dt = 2e-3;                       // ns
  int order = 4;                          // 2 (Strang) or 4 (Yoshida)
  Frame frame = Frame::interaction;
  std::optional<double> project_cutoff;  // bare-energy projection, GHz
  double dressed_cutoff = 16.0;           // dressed states kept above ground, GHz
  double ramp_substep = 0.05;             // ns
  double max_phase_per_step = 0.02;       // lab frame: dt times the fastest frequency, cycles
  double max_carrier_phase_per_step = 0.1;  // dressed frame: dt times the carrier frequency, cycles
  std::size_t trace_stride = 50;          // steps between trace samples

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("propagation: dt must be positive");
    if (order != 2 && order != 4) throw std::invalid_argument("propagation: order must be 2 or 4");
    if (!(dressed_cutoff > 0.0)) throw std::invalid_argument("propagation: dressed cutoff must be positive");
    if (!(ramp_substep > 0.0)) throw std::invalid_argument("propagation: ramp substep must be positive");
    if (project_cutoff && !(*project_cutoff > 0.0)) throw std::invalid_argument("propagation: projection cutoff");
    if (trace_stride == 0) throw std::invalid_argument("propagation: trace stride must be positive");
  }

  void check_step(double fastest_frequency, double limit) const {
    if (dt * std::abs(fastest_frequency) > limit) {
      throw StepSizeError("propagation: dt = " + std::to_string(dt) + " ns resolves " +
                          std::to_string(fastest_frequency) + " GHz with fewer than " +
                          std::to_string(1.0 / limit) + " steps per period");
    }
  }
};

namespace detail {

/// Symmetric composition: leading free fraction, kick centres and weights,
/// free fractions between kicks (all in units of the step).
struct Splitting {
  double lead = 0.5;
  std::vector<double> kick_at;
  std::vector<double> kick_weight;
  std::vector<double> between;
};

inline Splitting splitting(int order) {
  if (order == 2) return {0.5, {0.5}, {1.0}, {}};
  const double c = std::cbrt(2.0);
  const double w1 = 1.0 / (2.0 - c);
  const double w0 = -c / (2.0 - c);
  return {0.5 * w1, {0.5 * w1, w1 + 0.5 * w0, 1.0 - 0.5 * w1}, {w1, w0, w1}, {0.5 * (w1 + w0), 0.5 * (w1 + w0)}};
}

inline void check_finite(const ComplexMatrix& m) {
  if (!m.allFinite()) throw NumericalError("propagation produced non-finite values");
}

inline std::size_t step_count(double span, double dt) {
  return static_cast<std::size_t>(std::max(1.0, std::ceil(span / dt - 1e-9)));
}

}  // namespace detail

/// Fixed-step fourth-order Magnus propagation of psi under h_static + h_drive(t)
/// (lab frame, exact exponential per step).
inline ComplexVector propagate(const OperatorMatrix& h_static, const std::function<OperatorMatrix(double)>& h_drive,
                               const ComplexVector& psi0, double t0, double t1, const PropagationConfig& config) {
  config.validate();
  if (psi0.size() != h_static.dim()) throw std::invalid_argument("propagate: state dimension");
  if (std::abs(psi0.norm() - 1.0) > 1e-9) throw std::invalid_argument("propagate: initial state not normalized");
  if (t1 < t0) throw std::invalid_argument("propagate: t1 < t0");
  const EigenSystem es = hermitian_eigen(h_static.entries);
  if (es.values.size() > 0) config.check_step(es.values(es.values.size() - 1) - es.values(0), config.max_phase_per_step);
  ComplexVector psi = psi0;
  if (t1 == t0) return psi;
  const std::size_t steps = detail::step_count(t1 - t0, config.dt);
  const double h = (t1 - t0) / static_cast<double>(steps);
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
  const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const double comm = std::sqrt(3.0) / 12.0 * h * h * two_pi * two_pi;
  const cplx i(0.0, 1.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = t0 + static_cast<double>(n) * h;
    const ComplexMatrix a1 = h_static.entries + h_drive(t + c1 * h).entries;
    const ComplexMatrix a2 = h_static.entries + h_drive(t + c2 * h).entries;
    ComplexMatrix k = (0.5 * two_pi * h) * (a1 + a2) + (i * comm) * (a1 * a2 - a2 * a1);
    k = 0.5 * (k + k.adjoint()).eval();
    psi = hermitian_expm(k, 1.0) * psi;
  }
  detail::check_finite(psi);
  return psi;
}

/// Propagator for H(t) = diag(E) + x(t) D_c - y(t) D_s with z(t) = x + i y,
/// acting on a block of state columns expressed in the eigenbasis of diag(E).
class DrivenPropagator {
 public:
  using Amplitude = std::function<cplx(double)>;
  using Observer = std::function<void(double, const ComplexMatrix&)>;

  DrivenPropagator(RealVector energies, const ComplexMatrix& d_cos, const ComplexMatrix& d_sin)
      : energies_(std::move(energies)) {
    const auto d = energies_.size();
    if (d_cos.rows() != d || d_cos.cols() != d) throw std::invalid_argument("DrivenPropagator: operator size");
    cos_ = channel(d_cos);
    if (d_sin.size() > 0 && d_sin.cwiseAbs().maxCoeff() > 0.0) {
      if (d_sin.rows() != d || d_sin.cols() != d) throw std::invalid_argument("DrivenPropagator: operator size");
      sin_ = channel(d_sin);
    }
  }

  [[nodiscard]] Eigen::Index dim() const { return energies_.size(); }
  [[nodiscard]] bool single_channel() const { return !sin_.has_value(); }

  /// Evolve `psi` (dim x m) from t0 to t1. The observer, if set, sees the
  /// state every `stride` steps and at t1.
  void evolve(ComplexMatrix& psi, double t0, double t1, const Amplitude& z, double dt, int order,
              std::size_t stride = 0, const Observer& observer = {}) const {
    if (psi.rows() != dim()) throw std::invalid_argument("DrivenPropagator: state dimension");
    if (t1 < t0) throw std::invalid_argument("DrivenPropagator: t1 < t0");
    if (observer) observer(t0, psi);
    if (t1 == t0) return;
    const std::size_t steps = detail::step_count(t1 - t0, dt);
    const double h = (t1 - t0) / static_cast<double>(steps);
    const detail::Splitting sp = detail::splitting(order);
    if (single_channel()) {
      evolve_single(psi, t0, h, steps, z, sp, stride, observer);
    } else {
      evolve_general(psi, t0, h, steps, z, sp, stride, observer);
    }
    detail::check_finite(psi);
  }

 private:
  struct Channel {
    ComplexMatrix vectors;
    RealVector values;
  };

  static Channel channel(const ComplexMatrix& d) {
    const ComplexMatrix herm = 0.5 * (d + d.adjoint());
    EigenSystem es = hermitian_eigen(herm);
    return {std::move(es.vectors), std::move(es.values)};
  }

  [[nodiscard]] ComplexVector free_phases(double tau) const {
    return (energies_ * (-two_pi * tau)).unaryExpr([](double x) { return std::polar(1.0, x); });
  }

  [[nodiscard]] ComplexVector kick_phases(const Channel& c, double coeff) const {
    return (c.values * (-two_pi * coeff)).unaryExpr([](double x) { return std::polar(1.0, x); });
  }

  // Free evolution expressed in the drive eigenbasis: W^dagger exp(-i 2 pi E tau) W.
  [[nodiscard]] ComplexMatrix free_in_channel(double tau) const {
    return cos_.vectors.adjoint() * free_phases(tau).asDiagonal() * cos_.vectors;
  }

  void evolve_single(ComplexMatrix& psi, double t0, double h, std::size_t steps, const Amplitude& z,
                     const detail::Splitting& sp, std::size_t stride, const Observer& observer) const {
    const ComplexMatrix g_lead = free_in_channel(sp.lead * h);
    const ComplexMatrix g_join = free_in_channel(2.0 * sp.lead * h);
    std::vector<ComplexMatrix> g_between;
    for (double b : sp.between) g_between.push_back(free_in_channel(b * h));
    ComplexMatrix phi = cos_.vectors.adjoint() * psi;
    ComplexMatrix tmp(phi.rows(), phi.cols());
    tmp.noalias() = g_lead * phi;
    phi.swap(tmp);
    for (std::size_t n = 0; n < steps; ++n) {
      const double t = t0 + static_cast<double>(n) * h;
      for (std::size_t k = 0; k < sp.kick_at.size(); ++k) {
        if (k > 0) {
          tmp.noalias() = g_between[k - 1] * phi;
          phi.swap(tmp);
        }
        const double x = std::real(z(t + sp.kick_at[k] * h));
        phi = kick_phases(cos_, x * sp.kick_weight[k] * h).asDiagonal() * phi;
      }
      const bool last = n + 1 == steps;
      const bool sample = observer && (last || (stride > 0 && (n + 1) % stride == 0));
      if (last || sample) {
        tmp.noalias() = g_lead * phi;
        if (sample) observer(t + h, cos_.vectors * tmp);
        if (last) {
          psi.noalias() = cos_.vectors * tmp;
          return;
        }
      }
      tmp.noalias() = g_join * phi;
      phi.swap(tmp);
    }
  }

  void apply_channel(ComplexMatrix& psi, const Channel& c, double coeff, ComplexMatrix& tmp) const {
    tmp.noalias() = c.vectors.adjoint() * psi;
    tmp = kick_phases(c, coeff).asDiagonal() * tmp;
    psi.noalias() = c.vectors * tmp;
  }

  void evolve_general(ComplexMatrix& psi, double t0, double h, std::size_t steps, const Amplitude& z,
                      const detail::Splitting& sp, std::size_t stride, const Observer& observer) const {
    ComplexMatrix tmp(psi.rows(), psi.cols());
    auto free = [&](double tau) { psi = free_phases(tau).asDiagonal() * psi; };
    free(sp.lead * h);
    for (std::size_t n = 0; n < steps; ++n) {
      const double t = t0 + static_cast<double>(n) * h;
      for (std::size_t k = 0; k < sp.kick_at.size(); ++k) {
        if (k > 0) free(sp.between[k - 1] * h);
        const cplx zz = z(t + sp.kick_at[k] * h);
        const double w = sp.kick_weight[k] * h;
        apply_channel(psi, cos_, 0.5 * zz.real() * w, tmp);
        apply_channel(psi, *sin_, -zz.imag() * w, tmp);
        apply_channel(psi, cos_, 0.5 * zz.real() * w, tmp);
      }
      const bool last = n + 1 == steps;
      if (last) {
        free(sp.lead * h);
        if (observer) observer(t + h, psi);
        return;
      }
      if (observer && stride > 0 && (n + 1) % stride == 0) observer(t + h, free_phases(sp.lead * h).asDiagonal() * psi);
      free(2.0 * sp.lead * h);
    }
  }

  RealVector energies_;
  Channel cos_;
  std::optional<Channel> sin_;
};

/// Computational labels |q0 q1 ... qN> (couplers ground), Q0 most significant.
inline std::vector<std::vector<int>> computational_labels(const StarSystem& system) {
  const int nf = system.n_fluxoniums();
  std::vector<std::vector<int>> out;
  for (unsigned s = 0; s < (1u << nf); ++s) out.push_back(star_label(NeighborConfig::from_index(s, nf).s));
  return out;
}

/// Y = N X for a single-site operator N acting on `site`, X given in `basis`.
inline ComplexMatrix apply_local_operator(const ComplexMatrix& local, int site, const ProductBasis& basis,
                                          const ComplexMatrix& x) {
  if (static_cast<std::size_t>(x.rows()) != basis.dim()) throw std::invalid_argument("apply_local_operator: rows");
  ComplexMatrix y = ComplexMatrix::Zero(x.rows(), x.cols());
  const std::size_t stride = basis.stride(site);
  const int d = basis.dims()[static_cast<std::size_t>(site)];
  for (std::size_t p = 0; p < basis.dim(); ++p) {
    const std::size_t full = basis.full_index(p);
    const int occ = static_cast<int>((full / stride) % static_cast<std::size_t>(d));
    const std::size_t base = full - static_cast<std::size_t>(occ) * stride;
    for (int o = 0; o < d; ++o) {
      const cplx m = local(o, occ);
      if (m == cplx(0.0)) continue;
      const auto q = basis.local_index(base + static_cast<std::size_t>(o) * stride);
      if (!q) continue;
      y.row(static_cast<Eigen::Index>(*q)) += m * x.row(static_cast<Eigen::Index>(p));
    }
  }
  return y;
}

/// Dressed eigenstates kept for time evolution.
struct DressedSubspace {
  std::vector<std::size_t> eig_indices;  // into the labelled spectrum
  RealVector energies;                   // GHz
  ComplexMatrix vectors;                 // basis.dim() x d

  /// Position of eigen index `e` inside the subspace.
  [[nodiscard]] std::optional<Eigen::Index> position(std::size_t e) const {
    for (std::size_t i = 0; i < eig_indices.size(); ++i) {
      if (eig_indices[i] == e) return static_cast<Eigen::Index>(i);
    }
    return std::nullopt;
  }
};

inline DressedSubspace dressed_subspace(const DressedSystem& dressed, double cutoff) {
  const auto& spec = dressed.spectrum;
  const auto total = static_cast<std::size_t>(spec.eigenvalues.size());
  if (total == 0) throw std::invalid_argument("dressed_subspace: empty spectrum");
  const double e0 = spec.eigenvalues(0);
  const bool partial = total < spec.basis.dim();
  if (partial && spec.eigenvalues(static_cast<Eigen::Index>(total - 1)) < e0 + cutoff) {
    throw std::invalid_argument("dressed_subspace: spectrum was only partially computed below the dynamics cutoff");
  }
  DressedSubspace sub;
  for (std::size_t e = 0; e < total; ++e) {
    if (spec.eigenvalues(static_cast<Eigen::Index>(e)) - e0 <= cutoff) sub.eig_indices.push_back(e);
  }
  for (const auto& label : computational_labels(dressed.system)) {
    const std::size_t e = spec.eig_index(label);
    if (!sub.position(e)) sub.eig_indices.push_back(e);
  }
  const auto d = static_cast<Eigen::Index>(sub.eig_indices.size());
  sub.energies.resize(d);
  sub.vectors.resize(spec.eigenvectors.rows(), d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto e = static_cast<Eigen::Index>(sub.eig_indices[static_cast<std::size_t>(i)]);
    sub.energies(i) = spec.eigenvalues(e);
    sub.vectors.col(i) = spec.eigenvectors.col(e);
  }
  return sub;
}

struct PopulationTrace {
  std::vector<std::vector<int>> labels;
  std::vector<double> times;                     // ns
  std::vector<std::vector<double>> populations;  // [sample][label]
};

struct EvolutionResult {
  ComplexMatrix u_comp;                         // n x n, rows/columns in computational order
  std::vector<double> column_norms;             // sqrt(sum_i |U_ij|^2)
  std::vector<std::vector<int>> labels;         // computational labels
  double duration = 0.0;                        // ns, including ramps
  std::size_t subspace_dim = 0;
  std::optional<PopulationTrace> trace;
};

namespace detail {

/// Complex drive amplitude z(t) = A(t) exp(i 2 pi omega_d t), zero outside the pulse.
inline DrivenPropagator::Amplitude drive_amplitude(const DrivePulse& p) {
  return [p](double t) -> cplx {
    if (t < 0.0 || t > p.duration) return 0.0;
    return envelope(p, t) * std::polar(1.0, two_pi * p.frequency * t);
  };
}

inline StarSystem with_coupler_biases(StarSystem system, const std::vector<double>& biases) {
  for (std::size_t j = 0; j < system.couplers.size(); ++j) system.couplers[j].phi_ext = two_pi * biases[j];
  return system;
}

/// Everything needed to run the drive window on one dressed system.
struct DriveSetup {
  DressedSubspace sub;
  std::optional<DrivenPropagator> propagator;
  DrivenPropagator::Amplitude amplitude;
  std::vector<Eigen::Index> comp_positions;
  double duration = 0.0;
};

inline DriveSetup drive_setup(const DressedSystem& dressed, const std::vector<DriveTone>& tones,
                              const PropagationConfig& config) {
  check_tones(tones);
  config.validate();
  const DrivePulse& pulse = tones.front().pulse;
  config.check_step(pulse.frequency, config.max_carrier_phase_per_step);
  DriveSetup s;
  s.sub = dressed_subspace(dressed, config.dressed_cutoff);
  const auto& basis = dressed.spectrum.basis;
  const auto d = static_cast<Eigen::Index>(s.sub.eig_indices.size());
  ComplexMatrix d_cos = ComplexMatrix::Zero(d, d);
  ComplexMatrix d_sin = ComplexMatrix::Zero(d, d);
  for (const auto& tone : tones) {
    if (tone.fluxonium < 0 || tone.fluxonium >= dressed.system.n_fluxoniums()) {
      throw std::invalid_argument("drive: tone on nonexistent fluxonium");
    }
    const int site = StarSystem::fluxonium_site(tone.fluxonium);
    const ComplexMatrix nv =
        apply_local_operator(dressed.parts.charge[static_cast<std::size_t>(site)], site, basis, s.sub.vectors);
    const ComplexMatrix dk = s.sub.vectors.adjoint() * nv;
    const double c = std::cos(tone.pulse.phase);
    const double sn = std::sin(tone.pulse.phase);
    if (std::abs(c) > 1e-14) d_cos += c * dk;
    if (std::abs(sn) > 1e-14) d_sin += sn * dk;
  }
  s.propagator.emplace(s.sub.energies, d_cos, d_sin);
  s.amplitude = drive_amplitude(pulse);
  s.duration = pulse.duration;
  for (const auto& label : computational_labels(dressed.system)) {
    s.comp_positions.push_back(*s.sub.position(dressed.spectrum.eig_index(label)));
  }
  return s;
}

/// One piecewise-constant bias segment of the ramp protocol.
struct RampStepper {
  const DressedSystem& dressed;
  const std::vector<FluxRamp>& ramps;
  const std::vector<std::vector<int>>& tracked;  // labels whose energies/populations are followed
  double substep;

  /// Advance bare-basis block `psi` from t_a to t_b; adds labelled energies times
  /// time (cycles) to `phase` and samples populations of `tracked` if requested.
  void run(ComplexMatrix& psi, double t_a, double t_b, std::vector<double>& phase, PopulationTrace* trace,
           double trace_offset) const {
    if (t_b <= t_a) return;
    const std::size_t n = step_count(t_b - t_a, substep);
    const double dt = (t_b - t_a) / static_cast<double>(n);
    const auto& basis = dressed.spectrum.basis;
    for (std::size_t k = 0; k < n; ++k) {
      const double tm = t_a + (static_cast<double>(k) + 0.5) * dt;
      std::vector<double> biases;
      for (const auto& r : ramps) biases.push_back(flux_bias_at(r, tm));
      const StarSystem sys = with_coupler_biases(dressed.system, biases);
      const SystemParts parts = build_parts(sys);
      const OperatorMatrix h = build_system_hamiltonian(sys, parts, basis);
      EigenSystem es = hermitian_eigen(h.entries);
      const ComplexVector ph = (es.values * (-two_pi * dt)).unaryExpr([](double x) { return std::polar(1.0, x); });
      ComplexMatrix tmp = es.vectors.adjoint() * psi;
      tmp = ph.asDiagonal() * tmp;
      psi.noalias() = es.vectors * tmp;
      const LabeledSpectrum lab = label_eigensystem(es.values, es.vectors, basis, tracked);
      for (std::size_t i = 0; i < phase.size(); ++i) phase[i] += lab.energy(tracked[i]) * dt;
      if (trace) {
        std::vector<double> row;
        for (const auto& l : trace->labels) row.push_back(std::norm(lab.state(l).dot(psi.col(0))));
        trace->times.push_back(trace_offset + t_a + (static_cast<double>(k) + 1.0) * dt);
        trace->populations.push_back(std::move(row));
      }
    }
  }
};

inline void check_ramps(const DressedSystem& dressed, const std::vector<FluxRamp>& ramps, double t_g) {
  if (ramps.size() != dressed.system.couplers.size()) throw std::invalid_argument("ramps: one ramp per coupler");
  for (std::size_t j = 0; j < ramps.size(); ++j) {
    ramps[j].validate();
    if (std::abs(ramps[j].ramp_time - ramps.front().ramp_time) > 1e-12) {
      throw std::invalid_argument("ramps: couplers must share the ramp time");
    }
    if (std::abs(ramps[j].hold_time - t_g) > 1e-9) throw std::invalid_argument("ramps: hold time must equal t_g");
    if (std::abs(two_pi * ramps[j].interaction_bias - dressed.system.couplers[j].phi_ext) > 1e-9) {
      throw std::invalid_argument("ramps: interaction bias differs from the solved system");
    }
  }
}

/// Labelled states at the idle biases, in the basis of `dressed`.
inline LabeledSpectrum idle_spectrum(const DressedSystem& dressed, const std::vector<FluxRamp>& ramps,
                                     const std::vector<std::vector<int>>& labels) {
  std::vector<double> idle;
  for (const auto& r : ramps) idle.push_back(r.idle_bias);
  const StarSystem sys = with_coupler_biases(dressed.system, idle);
  const SystemParts parts = build_parts(sys);
  const OperatorMatrix h = build_system_hamiltonian(sys, parts, dressed.spectrum.basis);
  EigenSystem es = hermitian_eigen(h.entries);
  return label_eigensystem(std::move(es.values), std::move(es.vectors), dressed.spectrum.basis, labels);
}

}  // namespace detail

/// Truncated evolution operator on the computational subspace. Without ramps
/// the drive window alone is simulated at the solved (interaction) bias; with
/// ramps the coupler is swept idle -> interaction, held for t_g while driven,
/// and swept back, and states are referenced to the idle-bias dressed basis.
inline EvolutionResult computational_evolution_operator(const DressedSystem& dressed,
                                                        const std::vector<DriveTone>& tones,
                                                        const PropagationConfig& config,
                                                        const std::vector<FluxRamp>& ramps = {}) {
  detail::DriveSetup setup = detail::drive_setup(dressed, tones, config);
  const auto labels = computational_labels(dressed.system);
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto d = static_cast<Eigen::Index>(setup.sub.eig_indices.size());
  EvolutionResult out;
  out.labels = labels;
  out.subspace_dim = static_cast<std::size_t>(d);
  out.u_comp.resize(n, n);
  if (ramps.empty()) {
    ComplexMatrix psi = ComplexMatrix::Zero(d, n);
    for (Eigen::Index j = 0; j < n; ++j) psi(setup.comp_positions[static_cast<std::size_t>(j)], j) = 1.0;
    setup.propagator->evolve(psi, 0.0, setup.duration, setup.amplitude, config.dt, config.order);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index p = setup.comp_positions[static_cast<std::size_t>(i)];
      const cplx ref = config.frame == Frame::interaction
                           ? std::polar(1.0, two_pi * setup.sub.energies(p) * setup.duration)
                           : cplx(1.0);
      out.u_comp.row(i) = ref * psi.row(p);
    }
    out.duration = setup.duration;
  } else {
    detail::check_ramps(dressed, ramps, setup.duration);
    const double tr = ramps.front().ramp_time;
    const LabeledSpectrum idle = detail::idle_spectrum(dressed, ramps, labels);
    ComplexMatrix psi(static_cast<Eigen::Index>(dressed.spectrum.basis.dim()), n);
    for (Eigen::Index j = 0; j < n; ++j) psi.col(j) = idle.state(labels[static_cast<std::size_t>(j)]);
    std::vector<double> phase(labels.size(), 0.0);
    const detail::RampStepper stepper{dressed, ramps, labels, config.ramp_substep};
    stepper.run(psi, 0.0, tr, phase, nullptr, 0.0);
    ComplexMatrix inner = setup.sub.vectors.adjoint() * psi;
    setup.propagator->evolve(inner, 0.0, setup.duration, setup.amplitude, config.dt, config.order);
    psi.noalias() = setup.sub.vectors * inner;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      phase[i] += setup.sub.energies(setup.comp_positions[i]) * setup.duration;
    }
    stepper.run(psi, tr + setup.duration, 2.0 * tr + setup.duration, phase, nullptr, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx ref = config.frame == Frame::interaction ? std::polar(1.0, two_pi * phase[static_cast<std::size_t>(i)])
                                                          : cplx(1.0);
      out.u_comp.row(i) = ref * (idle.state(labels[static_cast<std::size_t>(i)]).adjoint() * psi);
    }
    out.duration = 2.0 * tr + setup.duration;
  }
  for (Eigen::Index j = 0; j < n; ++j) out.column_norms.push_back(out.u_comp.col(j).norm());
  detail::check_finite(out.u_comp);
  return out;
}

/// Populations |<label|psi(t)>|^2 of dressed states while driving from
/// `initial`. During ramps the labels refer to the instantaneous dressed states.
inline PopulationTrace population_trace(const DressedSystem& dressed, const std::vector<DriveTone>& tones,
                                        const std::vector<int>& initial,
                                        const std::vector<std::vector<int>>& observables,
                                        const PropagationConfig& config, const std::vector<FluxRamp>& ramps = {}) {
  detail::DriveSetup setup = detail::drive_setup(dressed, tones, config);
  PopulationTrace trace;
  trace.labels = observables;
  std::vector<Eigen::Index> obs_pos;
  for (const auto& l : observables) {
    const auto p = setup.sub.position(dressed.spectrum.eig_index(l));
    if (!p) throw LabelingError("population_trace: observable outside the dynamics subspace");
    obs_pos.push_back(*p);
  }
  const auto init_pos = setup.sub.position(dressed.spectrum.eig_index(initial));
  if (!init_pos) throw LabelingError("population_trace: initial state outside the dynamics subspace");
  const double tr = ramps.empty() ? 0.0 : ramps.front().ramp_time;
  auto sample = [&](double t, const ComplexMatrix& psi) {
    std::vector<double> row;
    for (const Eigen::Index p : obs_pos) row.push_back(std::norm(psi(p, 0)));
    trace.times.push_back(tr + t);
    trace.populations.push_back(std::move(row));
  };
  if (ramps.empty()) {
    ComplexMatrix psi = ComplexMatrix::Zero(setup.sub.energies.size(), 1);
    psi(*init_pos, 0) = 1.0;
    setup.propagator->evolve(psi, 0.0, setup.duration, setup.amplitude, config.dt, config.order, config.trace_stride,
                             sample);
    return trace;
  }
  detail::check_ramps(dressed, ramps, setup.duration);
  std::vector<std::vector<int>> tracked = observables;
  tracked.push_back(initial);
  const LabeledSpectrum idle = detail::idle_spectrum(dressed, ramps, tracked);
  ComplexMatrix psi(static_cast<Eigen::Index>(dressed.spectrum.basis.dim()), 1);
  psi.col(0) = idle.state(initial);
  std::vector<double> phase(tracked.size(), 0.0);
  const detail::RampStepper stepper{dressed, ramps, tracked, config.ramp_substep};
  std::vector<double> first;
  for (const auto& l : observables) first.push_back(std::norm(idle.state(l).dot(psi.col(0))));
  trace.times.push_back(0.0);
  trace.populations.push_back(first);
  stepper.run(psi, 0.0, tr, phase, &trace, 0.0);
  ComplexMatrix inner = setup.sub.vectors.adjoint() * psi;
  setup.propagator->evolve(inner, 0.0, setup.duration, setup.amplitude, config.dt, config.order, config.trace_stride,
                           [&](double t, const ComplexMatrix& s) {
                             if (t > 0.0) sample(t, s);
                           });
  psi.noalias() = setup.sub.vectors * inner;
  stepper.run(psi, tr + setup.duration, 2.0 * tr + setup.duration, phase, &trace, 0.0);
  return trace;
}

}  // namespace fluxsim
