#pragma once

// Gate quality metrics on the truncated computational evolution operator.
//
// Computational index s has qubit Q0 as its most significant bit.

#include "fluxsim/dynamics.hpp"
#include "fluxsim/linalg.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxsim {

inline int qubit_bit(std::size_t index, int qubit, int n_qubits) {
  return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1u);
}

inline int qubit_count(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim || n == 0) throw std::invalid_argument("dimension is not a power of two");
  return n;
}

/// diag(1, ..., 1, -1) on n_qubits qubits.
inline ComplexMatrix multi_controlled_z(int n_qubits) {
  const auto n = Eigen::Index{1} << n_qubits;
  ComplexMatrix u = ComplexMatrix::Identity(n, n);
  u(n - 1, n - 1) = -1.0;
  return u;
}

/// F = [Tr(U^dagger U) + |Tr(U_ideal^dagger U)|^2] / (n (n + 1)).
inline double average_gate_fidelity(const ComplexMatrix& u, const ComplexMatrix& ideal) {
  if (u.rows() != u.cols() || ideal.rows() != ideal.cols() || u.rows() != ideal.rows()) {
    throw std::invalid_argument("average_gate_fidelity: dimension mismatch");
  }
  const auto n = static_cast<double>(u.rows());
  const double self = (u.adjoint() * u).trace().real();
  const double overlap = std::norm((ideal.adjoint() * u).trace());
  return (self + overlap) / (n * (n + 1.0));
}

/// Diagonal of Z(theta_0) x ... x Z(theta_{N}), Z(theta) = diag(1, e^{i theta}).
inline ComplexVector local_z_diagonal(const std::vector<double>& theta) {
  const int nq = static_cast<int>(theta.size());
  const auto n = Eigen::Index{1} << nq;
  ComplexVector z(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    double a = 0.0;
    for (int q = 0; q < nq; ++q) a += qubit_bit(static_cast<std::size_t>(s), q, nq) * theta[static_cast<std::size_t>(q)];
    z(s) = std::polar(1.0, a);
  }
  return z;
}

/// U preceded by the local-Z pre-rotation: U Z(theta).
inline ComplexMatrix apply_local_z(const ComplexMatrix& u, const std::vector<double>& theta) {
  return u * local_z_diagonal(theta).asDiagonal();
}

struct LocalZResult {
  std::vector<double> phases;  // radians, one per qubit
  double fidelity = 0.0;
};

namespace detail {

inline double local_z_objective(const ComplexVector& w, const std::vector<double>& theta) {
  return std::abs(w.dot(local_z_diagonal(theta).conjugate()));
}

inline std::vector<double> coordinate_ascent(const ComplexVector& w, std::vector<double> theta) {
  const int nq = static_cast<int>(theta.size());
  double prev = local_z_objective(w, theta);
  for (int sweep = 0; sweep < 500; ++sweep) {
    for (int q = 0; q < nq; ++q) {
      cplx a = 0.0;
      cplx b = 0.0;
      for (Eigen::Index s = 0; s < w.size(); ++s) {
        double ang = 0.0;
        for (int r = 0; r < nq; ++r) {
          if (r != q) ang += qubit_bit(static_cast<std::size_t>(s), r, nq) * theta[static_cast<std::size_t>(r)];
        }
        const cplx term = w(s) * std::polar(1.0, ang);
        if (qubit_bit(static_cast<std::size_t>(s), q, nq) != 0) {
          b += term;
        } else {
          a += term;
        }
      }
      if (std::abs(b) > 0.0) theta[static_cast<std::size_t>(q)] = wrap_phase(std::arg(a) - std::arg(b));
    }
    const double cur = local_z_objective(w, theta);
    if (cur - prev <= 1e-15 * std::max(1.0, cur)) break;
    prev = cur;
  }
  return theta;
}

/// Weighted least squares of theta . b(s) + c against -arg(w_s), phases taken relative to w_0.
inline std::vector<double> least_squares_phases(const ComplexVector& w, int nq) {
  const auto n = w.size();
  RealMatrix a(n, nq + 1);
  RealVector y(n);
  const double ref = std::arg(w(0));
  for (Eigen::Index s = 0; s < n; ++s) {
    const double weight = std::sqrt(std::abs(w(s)));
    for (int q = 0; q < nq; ++q) a(s, q) = weight * qubit_bit(static_cast<std::size_t>(s), q, nq);
    a(s, nq) = weight;
    y(s) = -weight * wrap_phase(std::arg(w(s)) - ref);
  }
  const RealVector sol = a.colPivHouseholderQr().solve(y);
  std::vector<double> theta(static_cast<std::size_t>(nq));
  for (int q = 0; q < nq; ++q) theta[static_cast<std::size_t>(q)] = wrap_phase(sol(q));
  return theta;
}

}  // namespace detail

/// Maximize the average gate fidelity of U Z(theta) against `target` over the
/// local-Z pre-rotations. Deterministic: least-squares start and zero start,
/// each refined by exact coordinate ascent; the better one is returned.
inline LocalZResult optimize_local_z(const ComplexMatrix& u, const ComplexMatrix& target) {
  const int nq = qubit_count(u.rows());
  if (target.rows() != u.rows() || target.cols() != u.cols()) throw std::invalid_argument("optimize_local_z: sizes");
  const ComplexVector w = (target.adjoint() * u).diagonal();
  LocalZResult best;
  best.phases.assign(static_cast<std::size_t>(nq), 0.0);
  best.fidelity = average_gate_fidelity(u, target);
  for (auto start : {detail::least_squares_phases(w, nq), std::vector<double>(static_cast<std::size_t>(nq), 0.0)}) {
    const auto theta = detail::coordinate_ascent(w, start);
    const double f = average_gate_fidelity(apply_local_z(u, theta), target);
    if (f > best.fidelity) {
      best.fidelity = f;
      best.phases = theta;
    }
  }
  return best;
}

/// L = 1 - (1/n) sum_ij |U_ij|^2.
inline double leakage(const ComplexMatrix& u) {
  return 1.0 - u.squaredNorm() / static_cast<double>(u.cols());
}

inline double leakage(const EvolutionResult& evolution) { return leakage(evolution.u_comp); }

/// Off-diagonal share of the total weight, sum_{i != j} |U_ij|^2 / sum |U_ij|^2.
inline double offdiagonal_weight(const ComplexMatrix& u) {
  const double total = u.squaredNorm();
  if (total == 0.0) return 0.0;
  return (total - u.diagonal().squaredNorm()) / total;
}

inline std::vector<double> diagonal_phases(const ComplexMatrix& u) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < u.rows(); ++i) out.push_back(std::arg(u(i, i)));
  return out;
}

/// [phi(1, 1..1) - phi(0, 1..1)] - [phi(1, s') - phi(0, s')], s' = 1..1 with
/// the first neighbour in |0>, wrapped to (-pi, pi].
inline double conditional_phase(const std::vector<double>& phases) {
  const int nq = qubit_count(static_cast<Eigen::Index>(phases.size()));
  if (nq < 2) throw std::invalid_argument("conditional_phase: needs at least two qubits");
  const std::size_t ones = (std::size_t{1} << (nq - 1)) - 1;  // neighbour bits all set
  const std::size_t ref = ones & ~(std::size_t{1} << (nq - 2));
  const std::size_t top = std::size_t{1} << (nq - 1);
  const double a = phases[top | ones] - phases[ones];
  const double b = phases[top | ref] - phases[ref];
  return wrap_phase(a - b);
}

inline double conditional_phase(const ComplexMatrix& u, double max_offdiagonal = 0.1) {
  if (offdiagonal_weight(u) >= max_offdiagonal) {
    throw std::domain_error("conditional_phase: operator is not diagonal-dominant");
  }
  return conditional_phase(diagonal_phases(u));
}

/// Walsh coefficients of a diagonal phase vector, indexed by qubit subset
/// (bit q of the mask selects qubit q): phi(x) = sum_S c_S prod_{q in S} (-1)^{x_q}.
struct PhaseTerms {
  int n_qubits = 0;
  std::vector<double> coefficients;

  [[nodiscard]] double operator[](unsigned mask) const { return coefficients.at(mask); }

  [[nodiscard]] static std::string name(unsigned mask, int n_qubits) {
    if (mask == 0) return "I";
    std::string out;
    for (int q = 0; q < n_qubits; ++q) {
      if ((mask >> q) & 1u) out += "Z" + std::to_string(q);
    }
    return out;
  }

  [[nodiscard]] static int order(unsigned mask) { return std::popcount(mask); }
};

namespace detail {

inline int walsh_sign(std::size_t x, unsigned mask, int nq) {
  int parity = 0;
  for (int q = 0; q < nq; ++q) {
    if ((mask >> q) & 1u) parity ^= qubit_bit(x, q, nq);
  }
  return parity != 0 ? -1 : 1;
}

}  // namespace detail

inline PhaseTerms multiqubit_phase_decomposition(const std::vector<double>& phases) {
  const int nq = qubit_count(static_cast<Eigen::Index>(phases.size()));
  const std::size_t n = phases.size();
  PhaseTerms out;
  out.n_qubits = nq;
  out.coefficients.assign(n, 0.0);
  for (unsigned mask = 0; mask < n; ++mask) {
    double acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) acc += phases[x] * detail::walsh_sign(x, mask, nq);
    out.coefficients[mask] = acc / static_cast<double>(n);
  }
  return out;
}

inline std::vector<double> reconstruct_phases(const PhaseTerms& terms) {
  const std::size_t n = terms.coefficients.size();
  std::vector<double> phases(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (unsigned mask = 0; mask < n; ++mask) {
      phases[x] += terms.coefficients[mask] * detail::walsh_sign(x, mask, terms.n_qubits);
    }
  }
  return phases;
}

struct GateReport {
  double fidelity = 0.0;
  double error = 1.0;
  double leakage = 0.0;
  std::vector<double> z_corrections;  // radians
  PhaseTerms phase_terms;             // of the local-Z corrected diagonal
  double conditional_phase = 0.0;     // radians
  double target_phase_error = 0.0;    // conditional_phase - pi, wrapped
  bool diagonal_dominant = true;
};

/// Evaluate a computational-subspace operator against `target`, whose
/// conditional phase is `target_phase` (pi for the multi-controlled Z).
inline GateReport gate_report(const ComplexMatrix& u, const ComplexMatrix& target, double target_phase,
                              double max_offdiagonal = 0.1) {
  GateReport r;
  const LocalZResult z = optimize_local_z(u, target);
  r.fidelity = z.fidelity;
  r.error = 1.0 - z.fidelity;
  r.leakage = leakage(u);
  r.z_corrections = z.phases;
  const ComplexMatrix corrected = apply_local_z(u, z.phases);
  std::vector<double> phases = diagonal_phases(corrected);
  const double global = phases[0];
  for (double& p : phases) p = wrap_phase(p - global);
  r.phase_terms = multiqubit_phase_decomposition(phases);
  r.diagonal_dominant = offdiagonal_weight(u) < max_offdiagonal;
  r.conditional_phase = conditional_phase(phases);
  r.target_phase_error = wrap_phase(r.conditional_phase - target_phase);
  return r;
}

/// Evaluate a computational-subspace operator against the multi-controlled Z.
inline GateReport gate_report(const ComplexMatrix& u, double max_offdiagonal = 0.1) {
  return gate_report(u, multi_controlled_z(qubit_count(u.rows())), std::numbers::pi, max_offdiagonal);
}

inline GateReport gate_report(const EvolutionResult& evolution, double max_offdiagonal = 0.1) {
  return gate_report(evolution.u_comp, max_offdiagonal);
}

}  // namespace fluxsim
