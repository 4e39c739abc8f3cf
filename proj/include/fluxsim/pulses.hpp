#pragma once

// Drive envelopes (cosine, truncated Gaussian, flat-top with cosine ramps),
// first-order DRAG, carriers with per-qubit phases and coupler flux ramps.

#include "fluxsim/circuit.hpp"
#include "fluxsim/linalg.hpp"
#include "fluxsim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fluxsim {

enum class PulseShape { cosine, gaussian, flat_top };

inline const char* to_string(PulseShape s) {
  switch (s) {
    case PulseShape::cosine: return "cosine";
    case PulseShape::gaussian: return "gaussian";
    case PulseShape::flat_top: return "flat_top";
  }
  return "unknown";
}

inline PulseShape parse_pulse_shape(const std::string& name) {
  if (name == "cosine") return PulseShape::cosine;
  if (name == "gaussian") return PulseShape::gaussian;
  if (name == "flat_top" || name == "flat-top") return PulseShape::flat_top;
  throw std::invalid_argument("unknown pulse shape '" + name + "'");
}

struct DrivePulse {
  PulseShape shape = PulseShape::cosine;
  double amplitude = 0.0;      // Omega_d, GHz
  double frequency = 0.0;      // omega_d, GHz
  double duration = 0.0;       // t_g, ns
  double ramp = 0.0;           // t_r for flat_top, ns
  double sigma = 0.0;          // Gaussian width, ns; <= 0 selects t_g / 2
  double phase = 0.0;          // carrier phase phi_k, rad
  double drag_alpha = 0.0;     // 0 disables DRAG
  double drag_detuning = 0.0;  // delta' of the suppressed transition, GHz

  [[nodiscard]] double gaussian_sigma() const { return sigma > 0.0 ? sigma : 0.5 * duration; }

  void validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("pulse: duration must be positive");
    if (shape == PulseShape::flat_top) {
      if (!(ramp > 0.0)) throw std::invalid_argument("pulse: flat-top ramp must be positive");
      if (2.0 * ramp > duration) throw std::invalid_argument("pulse: flat-top needs 2 t_r <= t_g");
    }
    if (drag_alpha != 0.0 && drag_detuning == 0.0) {
      throw std::invalid_argument("pulse: DRAG needs a nonzero detuning");
    }
  }
};

struct EnvelopeSample {
  double value = 0.0;       // A(t), GHz
  double derivative = 0.0;  // dA/dt, GHz/ns
};

namespace detail {

inline EnvelopeSample raw_envelope(const DrivePulse& p, double t) {
  const double a = p.amplitude;
  const double tg = p.duration;
  switch (p.shape) {
    case PulseShape::cosine: {
      const double w = two_pi / tg;
      return {a * (1.0 - std::cos(w * t)), a * w * std::sin(w * t)};
    }
    case PulseShape::gaussian: {
      const double s = p.gaussian_sigma();
      const double c = 0.5 * tg;
      const double edge = std::exp(-c * c / (2.0 * s * s));
      const double g = std::exp(-(t - c) * (t - c) / (2.0 * s * s));
      return {a * (g - edge) / (1.0 - edge), a * (-(t - c) / (s * s)) * g / (1.0 - edge)};
    }
    case PulseShape::flat_top: {
      const double tr = p.ramp;
      const double w = std::numbers::pi / tr;
      if (t < tr) return {0.5 * a * (1.0 - std::cos(w * t)), 0.5 * a * w * std::sin(w * t)};
      if (t > tg - tr) {
        const double u = tg - t;
        return {0.5 * a * (1.0 - std::cos(w * u)), -0.5 * a * w * std::sin(w * u)};
      }
      return {a, 0.0};
    }
  }
  return {};
}

}  // namespace detail

/// Real envelope and its time derivative; zero outside [0, t_g].
inline EnvelopeSample envelope_sample(const DrivePulse& p, double t) {
  if (t < 0.0 || t > p.duration) return {};
  return detail::raw_envelope(p, t);
}

/// Complex envelope A(t) + i alpha dA/dt / (2 pi delta'). Evaluating outside [0, t_g] is an error.
inline cplx envelope(const DrivePulse& p, double t) {
  const double slack = 1e-12 * std::max(1.0, p.duration);
  if (t < -slack || t > p.duration + slack) throw std::out_of_range("envelope: t outside [0, t_g]");
  const auto s = detail::raw_envelope(p, std::clamp(t, 0.0, p.duration));
  const double q = p.drag_alpha == 0.0 ? 0.0 : p.drag_alpha * s.derivative / (two_pi * p.drag_detuning);
  return {s.value, q};
}

/// Integral of the real envelope over [0, t_g], in GHz ns.
inline double pulse_area(const DrivePulse& p) {
  p.validate();
  const double a = p.amplitude;
  const double tg = p.duration;
  switch (p.shape) {
    case PulseShape::cosine: return a * tg;
    case PulseShape::flat_top: return a * (tg - p.ramp);
    case PulseShape::gaussian: {
      const double s = p.gaussian_sigma();
      const double c = 0.5 * tg;
      const double edge = std::exp(-c * c / (2.0 * s * s));
      const double bell = s * std::sqrt(two_pi) * std::erf(c / (s * std::numbers::sqrt2));
      return a * (bell - tg * edge) / (1.0 - edge);
    }
  }
  return 0.0;
}

/// Carrier-modulated coefficient Re[A(t) exp(i(2 pi omega_d t + phi))].
inline double drive_coefficient(const DrivePulse& p, double t) {
  if (t < 0.0 || t > p.duration) return 0.0;
  return std::real(envelope(p, t) * std::polar(1.0, two_pi * p.frequency * t + p.phase));
}

/// A pulse applied to the charge operator of one fluxonium.
struct DriveTone {
  int fluxonium = 0;
  DrivePulse pulse;
};

inline void check_tones(const std::vector<DriveTone>& tones) {
  if (tones.empty()) throw std::invalid_argument("drive: no tones");
  const DrivePulse& ref = tones.front().pulse;
  for (const auto& t : tones) {
    t.pulse.validate();
    const DrivePulse& p = t.pulse;
    if (p.frequency != ref.frequency) throw std::invalid_argument("drive: tones use different carrier frequencies");
    if (p.shape != ref.shape || p.amplitude != ref.amplitude || p.duration != ref.duration || p.ramp != ref.ramp ||
        p.gaussian_sigma() != ref.gaussian_sigma() || p.drag_alpha != ref.drag_alpha ||
        p.drag_detuning != ref.drag_detuning) {
      throw std::invalid_argument("drive: tones use different envelopes");
    }
  }
}

/// Sum_k c_k(t) n_k with `charge_ops[k]` already embedded in the working basis.
inline OperatorMatrix drive_hamiltonian(double t, const std::vector<DriveTone>& tones,
                                        const std::vector<OperatorMatrix>& charge_ops) {
  check_tones(tones);
  if (charge_ops.size() != tones.size()) throw std::invalid_argument("drive_hamiltonian: one operator per tone");
  const Eigen::Index dim = charge_ops.front().dim();
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < tones.size(); ++k) {
    if (charge_ops[k].dim() != dim || charge_ops[k].basis_tag != charge_ops.front().basis_tag) {
      throw std::invalid_argument("drive_hamiltonian: operators live in different bases");
    }
    h += drive_coefficient(tones[k].pulse, t) * charge_ops[k].entries;
  }
  return OperatorMatrix(std::move(h), charge_ops.front().basis_tag);
}

/// Dressed charge matrix element <to| n_k |from> of fluxonium k.
inline cplx dressed_charge_element(const DressedSystem& dressed, int fluxonium, const std::vector<int>& from,
                                   const std::vector<int>& to) {
  const int site = StarSystem::fluxonium_site(fluxonium);
  const auto& basis = dressed.spectrum.basis;
  const ComplexVector src = dressed.spectrum.state(from);
  const ComplexVector dst = dressed.spectrum.state(to);
  const std::size_t stride = basis.stride(site);
  const int d = basis.dims()[static_cast<std::size_t>(site)];
  const ComplexMatrix& n = dressed.parts.charge[static_cast<std::size_t>(site)];
  cplx acc = 0.0;
  for (std::size_t p = 0; p < basis.dim(); ++p) {
    const std::size_t full = basis.full_index(p);
    const int occ = static_cast<int>((full / stride) % static_cast<std::size_t>(d));
    const std::size_t base = full - static_cast<std::size_t>(occ) * stride;
    for (int o = 0; o < d; ++o) {
      const cplx m = n(o, occ);
      if (m == cplx(0.0)) continue;
      const auto q = basis.local_index(base + static_cast<std::size_t>(o) * stride);
      if (!q) continue;
      acc += std::conj(dst(static_cast<Eigen::Index>(*q))) * m * src(static_cast<Eigen::Index>(p));
    }
  }
  return acc;
}

/// Carrier phases that make the tones on `fluxoniums` add constructively on
/// the transition `from` -> `to`: phi_k = arg m_k - arg m_first (phi_first = 0).
inline std::vector<double> relative_drive_phases(const DressedSystem& dressed, const std::vector<int>& fluxoniums,
                                                 const std::vector<int>& from, const std::vector<int>& to,
                                                 double min_element = 1e-6) {
  std::vector<double> phases;
  double ref = 0.0;
  for (std::size_t i = 0; i < fluxoniums.size(); ++i) {
    const cplx m = dressed_charge_element(dressed, fluxoniums[i], from, to);
    if (std::abs(m) < min_element) {
      throw std::domain_error("relative_drive_phases: vanishing matrix element on Q" + std::to_string(fluxoniums[i]));
    }
    if (i == 0) ref = std::arg(m);
    phases.push_back(wrap_phase(std::arg(m) - ref));
  }
  return phases;
}

/// Flux bias of one coupler: cosine rise over t_ramp, hold, cosine fall.
struct FluxRamp {
  double idle_bias = 0.0;         // phi_ext / 2 pi
  double interaction_bias = 0.0;  // phi_ext / 2 pi
  double ramp_time = 0.0;         // ns
  double hold_time = 0.0;         // ns

  [[nodiscard]] double total_duration() const { return 2.0 * ramp_time + hold_time; }

  void validate() const {
    if (ramp_time < 0.0 || hold_time < 0.0) throw std::invalid_argument("flux ramp: negative duration");
  }
};

/// Bias in units of phi_ext / 2 pi at time t in [0, 2 t_ramp + t_hold].
inline double flux_bias_at(const FluxRamp& r, double t) {
  const double total = r.total_duration();
  const double slack = 1e-12 * std::max(1.0, total);
  if (t < -slack || t > total + slack) throw std::out_of_range("flux_bias_at: t outside the ramp window");
  if (t <= 0.0 || t >= total) return r.idle_bias;
  if (r.ramp_time == 0.0) return r.interaction_bias;
  const double span = r.interaction_bias - r.idle_bias;
  const double w = std::numbers::pi / r.ramp_time;
  if (t < r.ramp_time) return r.idle_bias + 0.5 * span * (1.0 - std::cos(w * t));
  if (t > r.ramp_time + r.hold_time) return r.idle_bias + 0.5 * span * (1.0 - std::cos(w * (total - t)));
  return r.interaction_bias;
}

}  // namespace fluxsim
