#pragma once

// Perturbative reduction of the star system to plasmon-only models: the
// plasmon-coupler couplings, the coupler-mediated flip-flop strength g01 after
// eliminating the coupler, dispersive shifts, and the rotating-frame gate
// model with its ac-Stark estimate.

#include "fluxsim/circuit.hpp"
#include "fluxsim/spectrum.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace fluxsim {

struct PlasmonCouplings {
  double g12_0 = 0.0;   // central plasmon - coupler, GHz
  double g12_j = 0.0;   // neighbour plasmon - coupler, GHz
  double g12_0j = 0.0;  // direct plasmon - plasmon, GHz
};

/// <1|n|2> of a fluxonium in the gauge where it is real and positive.
inline double plasmon_charge_element(const CircuitLevels& levels) { return levels.n_op.entries(1, 2).real(); }

/// Couplings of neighbour j (1-based) from already diagonalized parts.
inline PlasmonCouplings plasmon_couplings(const StarSystem& system, const SystemParts& parts, int j) {
  if (j < 1 || j > system.n_neighbors()) throw std::out_of_range("plasmon_couplings: neighbour index");
  const double n0 = plasmon_charge_element(parts.fluxoniums[0]);
  const double nj = plasmon_charge_element(parts.fluxoniums[static_cast<std::size_t>(j)]);
  const double n_zpf = parts.couplers[static_cast<std::size_t>(j - 1)].derived.n_zpf;
  PlasmonCouplings pc;
  pc.g12_0 = system.j_c0[static_cast<std::size_t>(j - 1)] * n_zpf * n0;
  pc.g12_j = system.j_cj[static_cast<std::size_t>(j - 1)] * n_zpf * nj;
  pc.g12_0j = system.j_0j[static_cast<std::size_t>(j - 1)] * n0 * nj;
  return pc;
}

inline PlasmonCouplings plasmon_couplings(const StarSystem& system, int j) {
  return plasmon_couplings(system, build_parts(system), j);
}

/// Effective plasmon-plasmon coupling after eliminating the coupler to second order.
inline double effective_g01(const PlasmonCouplings& pc, double omega12_0, double omega12_1, double omega_c) {
  double sum = 0.0;
  for (const double w : {omega12_0, omega12_1}) {
    const double delta = w - omega_c;
    if (delta == 0.0) throw std::domain_error("effective_g01: plasmon resonant with coupler (pole)");
    sum += 1.0 / delta - 1.0 / (w + omega_c);
  }
  return pc.g12_0j + 0.5 * pc.g12_0 * pc.g12_j * sum;
}

/// chi = g^2 / delta, odd in the (signed) detuning.
inline double dispersive_chi(double g01, double delta01) {
  if (delta01 == 0.0) throw std::domain_error("dispersive_chi: zero detuning");
  return g01 * g01 / delta01;
}

struct EffectiveStarModel {
  std::vector<double> omega12;  // Q0..QN plasmon frequencies, GHz
  std::vector<double> g0j;      // mediated Q0-Qj couplings, GHz
  std::vector<double> chi;      // dispersive shifts, GHz

  [[nodiscard]] int n_neighbors() const { return static_cast<int>(g0j.size()); }

  /// Additive shift sum_j s_j chi_j of the central plasmon.
  [[nodiscard]] double shift(const NeighborConfig& s) const {
    double out = 0.0;
    for (int j = 0; j < s.size(); ++j) out += s.s[static_cast<std::size_t>(j)] * chi[static_cast<std::size_t>(j)];
    return out;
  }

  /// Drive-frame detunings delta'_s = delta_s - delta_{1...1} for a drive on the gate transition.
  [[nodiscard]] std::map<NeighborConfig, double> gate_detunings() const {
    std::map<NeighborConfig, double> out;
    const int n = n_neighbors();
    const double gate = shift(NeighborConfig::ones(n));
    for (unsigned idx = 0; idx < (1u << n); ++idx) {
      const auto c = NeighborConfig::from_index(idx, n);
      out[c] = shift(c) - gate;
    }
    return out;
  }
};

inline EffectiveStarModel build_effective_model(const StarSystem& system, const SystemParts& parts) {
  EffectiveStarModel m;
  for (const auto& f : parts.fluxoniums) m.omega12.push_back(f.energies(2) - f.energies(1));
  for (int j = 1; j <= system.n_neighbors(); ++j) {
    const auto pc = plasmon_couplings(system, parts, j);
    const double wc = parts.couplers[static_cast<std::size_t>(j - 1)].derived.omega_c;
    const double g = effective_g01(pc, m.omega12[0], m.omega12[static_cast<std::size_t>(j)], wc);
    m.g0j.push_back(g);
    m.chi.push_back(dispersive_chi(g, m.omega12[0] - m.omega12[static_cast<std::size_t>(j)]));
  }
  return m;
}

inline EffectiveStarModel build_effective_model(const StarSystem& system) {
  return build_effective_model(system, build_parts(system));
}

/// Block-diagonal drive-frame model of the central plasmon. Basis index is
/// 2 * config_index + {0: |1>, 1: |2>}, configs ordered as NeighborConfig::from_index.
/// Every block is (delta'_s / 2) Z + (Omega / 2) X with Z = |2><2| - |1><1|;
/// the all-ones block is driven resonantly.
inline OperatorMatrix build_rotating_gate_model(const EffectiveStarModel& model, double omega,
                                                const std::map<NeighborConfig, double>& detunings) {
  const int n = model.n_neighbors();
  const auto blocks = static_cast<Eigen::Index>(1u << n);
  ComplexMatrix h = ComplexMatrix::Zero(2 * blocks, 2 * blocks);
  for (unsigned idx = 0; idx < (1u << n); ++idx) {
    const auto c = NeighborConfig::from_index(idx, n);
    const auto it = detunings.find(c);
    if (it == detunings.end()) throw std::invalid_argument("rotating gate model: missing config " + c.str());
    double delta = it->second;
    if (c.all_ones()) {
      if (std::abs(delta) > 1e-12) throw std::invalid_argument("rotating gate model: gate config must be resonant");
      delta = 0.0;
    }
    const auto b = static_cast<Eigen::Index>(2 * idx);
    h(b, b) = -0.5 * delta;
    h(b + 1, b + 1) = 0.5 * delta;
    h(b, b + 1) = 0.5 * omega;
    h(b + 1, b) = 0.5 * omega;
  }
  return OperatorMatrix(std::move(h), BasisTag::local);
}

/// Phase 2 pi (Omega^2 / 4 delta') t_g picked up by the lower drive-frame
/// state of an off-resonant block, in radians.
inline double ac_stark_estimate(double omega, double delta_prime, double t_g) {
  if (delta_prime == 0.0) throw std::domain_error("ac_stark_estimate: zero detuning");
  return two_pi * omega * omega / (4.0 * delta_prime) * t_g;
}

}  // namespace fluxsim
