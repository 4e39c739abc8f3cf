#pragma once

// Dressed spectra of star systems: maximum-overlap labelling of eigenstates
// by bare product states, neighbour-state-dependent plasmon shifts and
// state-dependent transition tables.

#include "fluxsim/circuit.hpp"
#include "fluxsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fluxsim {

class LabelingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double ambiguity_floor = 0.5;

/// Computational configuration |s_1, ..., s_N> of a set of fluxoniums.
struct NeighborConfig {
  std::vector<int> s;

  static NeighborConfig zeros(int n) { return {std::vector<int>(static_cast<std::size_t>(n), 0)}; }
  static NeighborConfig ones(int n) { return {std::vector<int>(static_cast<std::size_t>(n), 1)}; }
  /// Bit i of `index` counted from the most significant end (s_1 first).
  static NeighborConfig from_index(unsigned index, int n) {
    NeighborConfig c = zeros(n);
    for (int i = 0; i < n; ++i) c.s[static_cast<std::size_t>(i)] = static_cast<int>((index >> (n - 1 - i)) & 1u);
    return c;
  }
  static NeighborConfig unit(int j, int n) {
    NeighborConfig c = zeros(n);
    c.s.at(static_cast<std::size_t>(j)) = 1;
    return c;
  }

  [[nodiscard]] int size() const { return static_cast<int>(s.size()); }
  [[nodiscard]] bool all_ones() const {
    return std::all_of(s.begin(), s.end(), [](int b) { return b == 1; });
  }
  [[nodiscard]] bool all_zero() const {
    return std::all_of(s.begin(), s.end(), [](int b) { return b == 0; });
  }
  [[nodiscard]] std::string str() const {
    std::string out;
    for (int b : s) out += static_cast<char>('0' + b);
    return out;
  }
  bool operator==(const NeighborConfig&) const = default;
  auto operator<=>(const NeighborConfig&) const = default;
};

/// Product-state digits for fluxonium occupations (Q0..QN) and coupler
/// occupations (C1..CN, all ground when omitted).
inline std::vector<int> star_label(const std::vector<int>& fluxonium_occ, const std::vector<int>& coupler_occ = {}) {
  if (fluxonium_occ.empty()) throw std::invalid_argument("star_label: empty occupation list");
  const std::size_t n = fluxonium_occ.size() - 1;
  if (!coupler_occ.empty() && coupler_occ.size() != n) throw std::invalid_argument("star_label: coupler count");
  std::vector<int> digits{fluxonium_occ[0]};
  for (std::size_t j = 1; j <= n; ++j) {
    digits.push_back(fluxonium_occ[j]);
    digits.push_back(coupler_occ.empty() ? 0 : coupler_occ[j - 1]);
  }
  return digits;
}

/// Occupations with fluxonium k set to `level` and the others from `others`.
inline std::vector<int> insert_occupation(const NeighborConfig& others, int k, int level) {
  std::vector<int> occ = others.s;
  occ.insert(occ.begin() + k, level);
  return occ;
}

/// Labels every assignment must cover: all computational configurations, plus
/// each fluxonium in |2> with the others computational; couplers in ground.
inline std::vector<std::vector<int>> relevant_labels(const StarSystem& system) {
  const int nf = system.n_fluxoniums();
  std::vector<std::vector<int>> labels;
  for (unsigned idx = 0; idx < (1u << nf); ++idx) labels.push_back(star_label(NeighborConfig::from_index(idx, nf).s));
  for (int k = 0; k < nf; ++k) {
    for (unsigned idx = 0; idx < (1u << (nf - 1)); ++idx) {
      labels.push_back(star_label(insert_occupation(NeighborConfig::from_index(idx, nf - 1), k, 2)));
    }
  }
  return labels;
}

struct LabeledSpectrum {
  RealVector eigenvalues;  // GHz, ascending
  ComplexMatrix eigenvectors;
  ProductBasis basis;
  std::unordered_map<std::size_t, std::size_t> label_to_eig;  // full bare index -> eigen index
  std::unordered_map<std::size_t, double> overlap;            // full bare index -> |<bare|dressed>|^2
  std::vector<std::int64_t> eig_to_label;                     // -1 when unassigned
  std::vector<std::size_t> ambiguous;                          // labels with overlap below the floor

  [[nodiscard]] bool has_label(const std::vector<int>& digits) const {
    return label_to_eig.contains(basis.flatten(digits));
  }
  [[nodiscard]] std::size_t eig_index(const std::vector<int>& digits) const {
    const auto it = label_to_eig.find(basis.flatten(digits));
    if (it == label_to_eig.end()) throw LabelingError("label not assigned");
    return it->second;
  }
  [[nodiscard]] double energy(const std::vector<int>& digits) const {
    return eigenvalues(static_cast<Eigen::Index>(eig_index(digits)));
  }
  [[nodiscard]] double overlap_of(const std::vector<int>& digits) const {
    const auto it = overlap.find(basis.flatten(digits));
    if (it == overlap.end()) throw LabelingError("label not assigned");
    return it->second;
  }
  [[nodiscard]] bool is_ambiguous(const std::vector<int>& digits) const {
    return overlap_of(digits) < ambiguity_floor;
  }
  [[nodiscard]] ComplexVector state(const std::vector<int>& digits) const {
    return eigenvectors.col(static_cast<Eigen::Index>(eig_index(digits)));
  }
};

/// Assign required labels to an existing eigendecomposition (columns of `vectors` in `basis`).
inline LabeledSpectrum label_eigensystem(RealVector values, ComplexMatrix vectors, const ProductBasis& basis,
                                         const std::vector<std::vector<int>>& required);

/// Number of eigenpairs computed when the caller does not ask for a count.
inline constexpr std::size_t full_solve_limit = 1500;

/// Diagonalize `h` (expressed in `basis`) and assign each required bare label
/// to the eigenvector of maximal overlap, greedily in descending overlap with
/// injectivity enforced. Labels whose overlap falls below 0.5 are reported in
/// `ambiguous` rather than rejected. Above `full_solve_limit` only the lowest
/// eigenpairs are computed, enough to reach `margin` GHz above the highest
/// required bare energy and at least `reach` GHz.
inline LabeledSpectrum solve_and_label(const OperatorMatrix& h, const ProductBasis& basis,
                                       const std::vector<std::vector<int>>& required, double margin = 1.0,
                                       double reach = 0.0) {
  if (static_cast<std::size_t>(h.dim()) != basis.dim()) throw std::invalid_argument("solve_and_label: basis mismatch");
  if (!is_hermitian(h.entries, 1e-10)) throw std::invalid_argument("solve_and_label: operator is not Hermitian");
  LabeledSpectrum out;
  double label_top = -std::numeric_limits<double>::infinity();
  for (const auto& digits : required) {
    const auto local = basis.local_index(basis.flatten(digits));
    if (local) label_top = std::max(label_top, h.entries(static_cast<Eigen::Index>(*local), static_cast<Eigen::Index>(*local)).real());
  }
  if (basis.dim() <= full_solve_limit) {
    EigenSystem es = hermitian_eigen(h.entries);
    out.eigenvalues = std::move(es.values);
    out.eigenvectors = std::move(es.vectors);
  } else {
    Eigen::Index count = 512;
    while (true) {
      EigenSystem es = hermitian_eigen_lowest(h.entries, count);
      const bool enough = es.values.size() == h.dim() || es.values(es.values.size() - 1) > std::max(label_top + margin, reach);
      out.eigenvalues = std::move(es.values);
      out.eigenvectors = std::move(es.vectors);
      if (enough) break;
      count *= 2;
    }
  }
  return label_eigensystem(std::move(out.eigenvalues), std::move(out.eigenvectors), basis, required);
}

inline LabeledSpectrum label_eigensystem(RealVector values, ComplexMatrix vectors, const ProductBasis& basis,
                                         const std::vector<std::vector<int>>& required) {
  LabeledSpectrum out;
  out.eigenvalues = std::move(values);
  out.eigenvectors = std::move(vectors);
  out.basis = basis;
  const auto n_eig = static_cast<std::size_t>(out.eigenvalues.size());
  out.eig_to_label.assign(n_eig, -1);

  struct Candidate {
    double overlap;
    std::size_t label;
    std::size_t eig;
  };
  std::vector<Candidate> candidates;
  std::vector<std::size_t> label_full;
  std::vector<std::size_t> label_local;
  for (const auto& digits : required) {
    const std::size_t full = basis.flatten(digits);
    const auto local = basis.local_index(full);
    if (!local) throw LabelingError("solve_and_label: required label projected out of the basis");
    if (std::find(label_full.begin(), label_full.end(), full) != label_full.end()) continue;
    label_full.push_back(full);
    label_local.push_back(*local);
  }
  for (std::size_t r = 0; r < label_full.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(label_local[r]);
    for (std::size_t e = 0; e < n_eig; ++e) {
      const double ov = std::norm(out.eigenvectors(row, static_cast<Eigen::Index>(e)));
      if (ov > 1e-8) candidates.push_back({ov, r, e});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.overlap > b.overlap; });
  std::vector<bool> label_done(label_full.size(), false);
  for (const auto& c : candidates) {
    if (label_done[c.label] || out.eig_to_label[c.eig] >= 0) continue;
    label_done[c.label] = true;
    out.eig_to_label[c.eig] = static_cast<std::int64_t>(label_full[c.label]);
    out.label_to_eig[label_full[c.label]] = c.eig;
    out.overlap[label_full[c.label]] = c.overlap;
  }
  for (std::size_t r = 0; r < label_full.size(); ++r) {
    if (!label_done[r]) {
      // Every candidate eigenvector was already taken; fall back to the first free one.
      for (std::size_t e = 0; e < n_eig; ++e) {
        if (out.eig_to_label[e] < 0) {
          out.eig_to_label[e] = static_cast<std::int64_t>(label_full[r]);
          out.label_to_eig[label_full[r]] = e;
          out.overlap[label_full[r]] =
              std::norm(out.eigenvectors(static_cast<Eigen::Index>(label_local[r]), static_cast<Eigen::Index>(e)));
          break;
        }
      }
    }
    if (out.overlap[label_full[r]] < ambiguity_floor) out.ambiguous.push_back(label_full[r]);
  }
  return out;
}

inline double dressed_transition(const LabeledSpectrum& spec, const std::vector<int>& from,
                                 const std::vector<int>& to) {
  return spec.energy(to) - spec.energy(from);
}

/// A star system together with its bare parts, Hamiltonian and labelled spectrum.
struct DressedSystem {
  StarSystem system;
  SystemParts parts;
  OperatorMatrix hamiltonian;
  LabeledSpectrum spectrum;

  /// Dressed |1>-|2> frequency of fluxonium k with the others in `others` (couplers ground).
  [[nodiscard]] double plasmon_frequency(int k, const NeighborConfig& others) const {
    return dressed_transition(spectrum, star_label(insert_occupation(others, k, 1)),
                              star_label(insert_occupation(others, k, 2)));
  }
  [[nodiscard]] bool plasmon_ambiguous(int k, const NeighborConfig& others) const {
    return spectrum.is_ambiguous(star_label(insert_occupation(others, k, 1))) ||
           spectrum.is_ambiguous(star_label(insert_occupation(others, k, 2)));
  }
};

/// Build, optionally project (bare energies below `cutoff` GHz), diagonalize and
/// label. Large bases are only partially diagonalized, up to at least `reach` GHz.
inline DressedSystem solve_system(const StarSystem& system, std::optional<double> cutoff = std::nullopt,
                                  double reach = 0.0) {
  DressedSystem out;
  out.system = system;
  out.parts = build_parts(system);
  const ProductBasis basis =
      cutoff ? low_energy_basis(out.parts, system.dims(), *cutoff) : ProductBasis(system.dims());
  out.hamiltonian = build_system_hamiltonian(system, out.parts, basis);
  out.spectrum = solve_and_label(out.hamiltonian, basis, relevant_labels(system), 1.0, reach);
  return out;
}

/// delta_s = omega_0^(12)(s) - omega_0^(12)(0) for an already solved system.
inline double state_dependent_shift(const DressedSystem& dressed, const NeighborConfig& config) {
  const int n = dressed.system.n_neighbors();
  if (config.size() != n) throw std::invalid_argument("state_dependent_shift: config length differs from N");
  const NeighborConfig zero = NeighborConfig::zeros(n);
  if (dressed.plasmon_ambiguous(0, config) || dressed.plasmon_ambiguous(0, zero)) {
    throw LabelingError("state_dependent_shift: ambiguous labelling for config " + config.str());
  }
  if (config.all_zero()) return 0.0;
  return dressed.plasmon_frequency(0, config) - dressed.plasmon_frequency(0, zero);
}

inline double state_dependent_shift(const StarSystem& system, const NeighborConfig& config) {
  return state_dependent_shift(solve_system(system), config);
}

struct ShiftSweepOptions {
  double additivity_threshold = 0.2;
  double jump_factor = 5.0;
  double jump_floor = 1e-3;  // GHz; steps below this never count as jumps
};

struct ShiftSweepPoint {
  double j_ck = 0.0;                  // GHz
  std::vector<double> single_shifts;  // delta of each unit config e_j, GHz
  double all_ones_shift = 0.0;        // GHz
  double sum_of_singles = 0.0;        // GHz
  double additivity_residual = 0.0;   // |delta_1 - sum| / |delta_1|
  bool ambiguous = false;             // labelling below the overlap floor
  bool additivity_broken = false;
  bool jump = false;
  std::string error;                  // non-empty when the point failed

  [[nodiscard]] bool breakdown() const { return additivity_broken || jump || !error.empty(); }
};

/// Copy of `system` with every coupler-fluxonium charge coupling set to `j_ck`.
inline StarSystem with_coupler_coupling(StarSystem system, double j_ck) {
  std::fill(system.j_c0.begin(), system.j_c0.end(), j_ck);
  std::fill(system.j_cj.begin(), system.j_cj.end(), j_ck);
  return system;
}

/// Evaluate the shifts of one sweep point without jump detection.
inline ShiftSweepPoint shift_point(const StarSystem& system, double j_ck, const ShiftSweepOptions& opts = {}) {
  ShiftSweepPoint p;
  p.j_ck = j_ck;
  const int n = system.n_neighbors();
  try {
    const DressedSystem dressed = solve_system(with_coupler_coupling(system, j_ck));
    const NeighborConfig zero = NeighborConfig::zeros(n);
    const double base = dressed.plasmon_frequency(0, zero);
    bool amb = dressed.plasmon_ambiguous(0, zero);
    for (int j = 0; j < n; ++j) {
      const NeighborConfig e = NeighborConfig::unit(j, n);
      p.single_shifts.push_back(dressed.plasmon_frequency(0, e) - base);
      amb = amb || dressed.plasmon_ambiguous(0, e);
      p.sum_of_singles += p.single_shifts.back();
    }
    const NeighborConfig ones = NeighborConfig::ones(n);
    p.all_ones_shift = dressed.plasmon_frequency(0, ones) - base;
    amb = amb || dressed.plasmon_ambiguous(0, ones);
    p.ambiguous = amb;
    if (std::abs(p.all_ones_shift) > 1e-9) {
      p.additivity_residual = std::abs(p.all_ones_shift - p.sum_of_singles) / std::abs(p.all_ones_shift);
      p.additivity_broken = p.additivity_residual > opts.additivity_threshold;
    }
  } catch (const std::exception& ex) {
    p.error = ex.what();
  }
  return p;
}

/// Mark points where any tracked shift jumps by more than `jump_factor`
/// times the preceding step (series in ascending J order).
inline void flag_jumps(std::vector<ShiftSweepPoint>& points, const ShiftSweepOptions& opts = {}) {
  auto series_value = [](const ShiftSweepPoint& p, std::size_t idx) {
    return idx < p.single_shifts.size() ? p.single_shifts[idx] : p.all_ones_shift;
  };
  for (std::size_t i = 2; i < points.size(); ++i) {
    const auto& a = points[i - 2];
    const auto& b = points[i - 1];
    auto& c = points[i];
    if (!a.error.empty() || !b.error.empty() || !c.error.empty()) continue;
    for (std::size_t idx = 0; idx <= c.single_shifts.size(); ++idx) {
      const double trend = std::abs(series_value(b, idx) - series_value(a, idx));
      const double step = std::abs(series_value(c, idx) - series_value(b, idx));
      if (step > opts.jump_floor && step > opts.jump_factor * trend) c.jump = true;
    }
  }
}

inline std::vector<ShiftSweepPoint> shift_sweep(const StarSystem& system, const std::vector<double>& j_ck_values,
                                                const ShiftSweepOptions& opts = {}, int jobs = 1) {
  if (!std::is_sorted(j_ck_values.begin(), j_ck_values.end())) {
    throw std::invalid_argument("shift_sweep: J values must be ascending");
  }
  std::vector<std::function<ShiftSweepPoint()>> tasks;
  for (double j : j_ck_values) tasks.emplace_back([&system, j, &opts] { return shift_point(system, j, opts); });
  std::vector<ShiftSweepPoint> points = run_ordered(tasks, jobs);
  flag_jumps(points, opts);
  return points;
}

struct TransitionRow {
  int fluxonium = 0;       // k
  NeighborConfig others;   // states of the remaining fluxoniums, in index order
  double frequency = 0.0;  // GHz
  bool ambiguous = false;
};

struct TransitionTable {
  std::vector<TransitionRow> rows;
  std::size_t gate_row = 0;
  double gate_frequency = 0.0;  // GHz
  double min_detuning = 0.0;    // GHz, signed (row - gate) of the nearest non-gate row
  std::size_t nearest_row = 0;

  [[nodiscard]] std::size_t ambiguous_rows() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.ambiguous; }));
  }
};

/// Every fluxonium's dressed |1>-|2> frequency for every computational
/// configuration of the others. Rows whose labels fall below the overlap
/// floor are flagged; with `strict` they are an error instead.
inline TransitionTable transition_table(const DressedSystem& dressed, bool strict = false) {
  TransitionTable table;
  const int nf = dressed.system.n_fluxoniums();
  const int n_others = nf - 1;
  for (int k = 0; k < nf; ++k) {
    for (unsigned idx = 0; idx < (1u << n_others); ++idx) {
      TransitionRow row;
      row.fluxonium = k;
      row.others = NeighborConfig::from_index(idx, n_others);
      row.ambiguous = dressed.plasmon_ambiguous(k, row.others);
      row.frequency = dressed.plasmon_frequency(k, row.others);
      if (k == 0 && row.others.all_ones()) table.gate_row = table.rows.size();
      if (row.ambiguous && strict) {
        throw LabelingError("transition_table: ambiguous labelling for Q" + std::to_string(k) + " with others in " +
                            row.others.str());
      }
      table.rows.push_back(std::move(row));
    }
  }
  table.gate_frequency = table.rows[table.gate_row].frequency;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (i == table.gate_row) continue;
    const double d = table.rows[i].frequency - table.gate_frequency;
    if (std::abs(d) < best) {
      best = std::abs(d);
      table.min_detuning = d;
      table.nearest_row = i;
    }
  }
  return table;
}

inline TransitionTable transition_table(const StarSystem& system, std::optional<double> cutoff = std::nullopt,
                                        bool strict = false) {
  return transition_table(solve_system(system, cutoff), strict);
}

}  // namespace fluxsim
