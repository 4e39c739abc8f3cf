#pragma once

// Single-circuit Hamiltonians (fluxonium, transmon coupler) and assembly of
// the star-system Hamiltonian: one central fluxonium Q0 coupled to N
// neighbours Q1..QN, each through its own transmon coupler Cj, plus a direct
// Q0-Qj charge coupling.
//
// Subsystem ordering is fixed as (Q0, Q1, C1, Q2, C2, ...); Q0 is the most
// significant digit of a flat product index.

#include "fluxsim/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fluxsim {

struct FluxoniumSpec {
  double e_c = 0.0;      // GHz
  double e_l = 0.0;      // GHz
  double e_j = 0.0;      // GHz
  double phi_ext = 0.0;  // rad
  int n_levels = 4;

  void validate() const {
    if (!(e_c > 0.0)) throw std::invalid_argument("fluxonium: e_c must be positive");
    if (!(e_l > 0.0)) throw std::invalid_argument("fluxonium: e_l must be positive");
    if (!(e_j >= 0.0)) throw std::invalid_argument("fluxonium: e_j must be non-negative");
    if (n_levels < 3) throw std::invalid_argument("fluxonium: n_levels must be >= 3");
  }
};

struct TransmonCouplerSpec {
  double e_c = 0.0;      // GHz
  double e_j = 0.0;      // GHz, junction energy before flux tuning
  double phi_ext = 0.0;  // rad
  int n_levels = 3;

  /// E_J cos(phi_ext / 2) of the symmetric SQUID.
  [[nodiscard]] double effective_e_j() const { return e_j * std::cos(0.5 * phi_ext); }

  void validate() const {
    if (!(e_c > 0.0)) throw std::invalid_argument("coupler: e_c must be positive");
    if (!(effective_e_j() > 1e-12 * std::max(1.0, std::abs(e_j)))) {
      throw std::domain_error("coupler: effective Josephson energy E_J cos(phi_ext/2) is not positive "
                              "(degenerate potential)");
    }
    if (n_levels < 2) throw std::invalid_argument("coupler: n_levels must be >= 2");
  }
};

struct CouplerDerived {
  double omega_p = 0.0;  // plasma frequency, GHz
  double lambda = 0.0;
  double omega_c = 0.0;  // 0-1 transition, GHz
  double alpha_c = 0.0;  // anharmonicity, GHz
  double n_zpf = 0.0;
  double phi_zpf = 0.0;
};

/// Lowest levels of one circuit plus its charge and phase operators in that eigenbasis.
struct CircuitLevels {
  RealVector energies;  // ground shifted to zero, ascending
  OperatorMatrix n_op;
  OperatorMatrix phi_op;
};

struct CouplerModel {
  CouplerDerived derived;
  RealVector energies;  // 0, omega_c, 2 omega_c + alpha_c, ...
  OperatorMatrix a_op;
  OperatorMatrix adag_op;
  OperatorMatrix n_op;  // n_zpf (a + a^dagger) after the a -> -i a relabelling
};

inline constexpr int default_fluxonium_basis = 60;

namespace detail {

inline RealMatrix lowering(int size) {
  RealMatrix a = RealMatrix::Zero(size, size);
  for (int k = 1; k < size; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

// Multiplies eigenvector k by a power of i so that <k-1|n|k> becomes real and
// positive. For sweet-spot (parity-symmetric) potentials this makes every
// allowed charge matrix element exactly real.
inline ComplexVector charge_gauge(const ComplexMatrix& n_eig) {
  const Eigen::Index size = n_eig.rows();
  ComplexVector phase = ComplexVector::Ones(size);
  const cplx powers[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
  for (Eigen::Index k = 1; k < size; ++k) {
    const cplx element = std::conj(phase(k - 1)) * n_eig(k - 1, k);
    if (std::abs(element) < 1e-14) continue;
    int best = 0;
    double best_re = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < 4; ++p) {
      const double re = (element * powers[p]).real();
      if (re > best_re) {
        best_re = re;
        best = p;
      }
    }
    phase(k) = powers[best];
  }
  return phase;
}

}  // namespace detail

/// Diagonalize 4E_C n^2 + (E_L/2)(phi - phi_ext)^2 - E_J cos(phi) in the
/// harmonic-oscillator basis of the (E_C, E_L) oscillator.
inline CircuitLevels diagonalize_fluxonium(const FluxoniumSpec& spec, int basis_size = default_fluxonium_basis) {
  spec.validate();
  if (basis_size < spec.n_levels) throw std::invalid_argument("fluxonium: basis_size smaller than n_levels");
  if (basis_size < 40) throw std::invalid_argument("fluxonium: basis_size must be >= 40");

  const double phi_zpf = std::pow(8.0 * spec.e_c / spec.e_l, 0.25) / std::sqrt(2.0);
  const double n_zpf = std::pow(spec.e_l / (8.0 * spec.e_c), 0.25) / std::sqrt(2.0);
  const RealMatrix a = detail::lowering(basis_size);
  const RealMatrix phi = phi_zpf * (a + a.transpose());
  // n = i n_zpf (a^dagger - a); n^2 is real.
  const RealMatrix n_im = n_zpf * (a.transpose() - a);
  const RealMatrix n_sq = -(n_im * n_im);

  Eigen::SelfAdjointEigenSolver<RealMatrix> phi_eig(phi);
  if (phi_eig.info() != Eigen::Success) throw NumericalError("fluxonium: phase operator diagonalization failed");
  const RealMatrix cos_phi = phi_eig.eigenvectors() * phi_eig.eigenvalues().array().cos().matrix().asDiagonal() *
                             phi_eig.eigenvectors().transpose();
  const RealMatrix shifted = phi - spec.phi_ext * RealMatrix::Identity(basis_size, basis_size);
  const RealMatrix h = 4.0 * spec.e_c * n_sq + 0.5 * spec.e_l * shifted * shifted - spec.e_j * cos_phi;

  Eigen::SelfAdjointEigenSolver<RealMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("fluxonium: eigen-solver did not converge");

  const int keep = spec.n_levels;
  const RealMatrix vecs = solver.eigenvectors().leftCols(keep);
  const ComplexMatrix n_full = cplx(0, 1) * (vecs.transpose() * n_im * vecs).cast<cplx>();
  const ComplexVector gauge = detail::charge_gauge(n_full);
  const ComplexMatrix n_eig = gauge.conjugate().asDiagonal() * n_full * gauge.asDiagonal();
  const ComplexMatrix phi_eig_basis =
      gauge.conjugate().asDiagonal() * (vecs.transpose() * phi * vecs).cast<cplx>() * gauge.asDiagonal();

  CircuitLevels out;
  out.energies = solver.eigenvalues().head(keep).array() - solver.eigenvalues()(0);
  out.n_op = OperatorMatrix(0.5 * (n_eig + n_eig.adjoint()), BasisTag::local);
  out.phi_op = OperatorMatrix(0.5 * (phi_eig_basis + phi_eig_basis.adjoint()), BasisTag::local);
  return out;
}

/// Closed-form weakly anharmonic oscillator parameters of a transmon coupler.
inline CouplerDerived coupler_parameters(const TransmonCouplerSpec& spec) {
  spec.validate();
  const double ej = spec.effective_e_j();
  CouplerDerived d;
  d.omega_p = std::sqrt(8.0 * ej * spec.e_c);
  d.lambda = std::sqrt(spec.e_c / (8.0 * ej)) / 3.0;
  d.omega_c = d.omega_p * (1.0 - 3.0 * d.lambda - 9.0 * d.lambda * d.lambda);
  d.alpha_c = -d.omega_p * (3.0 * d.lambda + (162.0 / 8.0) * d.lambda * d.lambda);
  d.phi_zpf = std::pow(8.0 * spec.e_c / ej, 0.25) / std::sqrt(2.0);
  d.n_zpf = std::pow(ej / (8.0 * spec.e_c), 0.25) / std::sqrt(2.0);
  return d;
}

/// Coupler as the Kerr oscillator omega_c a^dag a + (alpha_c/2) a^dag a^dag a a.
inline CouplerModel coupler_oscillator(const TransmonCouplerSpec& spec) {
  CouplerModel m;
  m.derived = coupler_parameters(spec);
  const int size = spec.n_levels;
  const RealMatrix a = detail::lowering(size);
  m.energies.resize(size);
  for (int k = 0; k < size; ++k) {
    m.energies(k) = m.derived.omega_c * k + 0.5 * m.derived.alpha_c * k * (k - 1);
  }
  m.a_op = OperatorMatrix(a.cast<cplx>(), BasisTag::local);
  m.adag_op = OperatorMatrix(a.transpose().cast<cplx>(), BasisTag::local);
  m.n_op = OperatorMatrix((m.derived.n_zpf * (a + a.transpose())).cast<cplx>(), BasisTag::local);
  return m;
}

struct StarSystem {
  FluxoniumSpec central;
  std::vector<FluxoniumSpec> neighbors;
  std::vector<TransmonCouplerSpec> couplers;
  std::vector<double> j_c0;  // GHz
  std::vector<double> j_cj;  // GHz
  std::vector<double> j_0j;  // GHz
  int fluxonium_basis = default_fluxonium_basis;

  [[nodiscard]] int n_neighbors() const { return static_cast<int>(neighbors.size()); }
  [[nodiscard]] int n_sites() const { return 1 + 2 * n_neighbors(); }
  [[nodiscard]] int n_fluxoniums() const { return 1 + n_neighbors(); }

  /// Site of fluxonium Qk in the product ordering (Q0 -> 0, Qj -> 2j-1).
  [[nodiscard]] static int fluxonium_site(int k) { return k == 0 ? 0 : 2 * k - 1; }
  /// Site of coupler Cj, j >= 1.
  [[nodiscard]] static int coupler_site(int j) { return 2 * j; }

  [[nodiscard]] const FluxoniumSpec& fluxonium(int k) const { return k == 0 ? central : neighbors.at(k - 1); }

  [[nodiscard]] std::vector<int> dims() const {
    std::vector<int> d{central.n_levels};
    for (int j = 0; j < n_neighbors(); ++j) {
      d.push_back(neighbors[j].n_levels);
      d.push_back(couplers[j].n_levels);
    }
    return d;
  }

  [[nodiscard]] std::vector<std::string> site_names() const {
    std::vector<std::string> names{"Q0"};
    for (int j = 1; j <= n_neighbors(); ++j) {
      names.push_back("Q" + std::to_string(j));
      names.push_back("C" + std::to_string(j));
    }
    return names;
  }

  void validate() const {
    const std::size_t n = neighbors.size();
    if (n < 1 || n > 4) throw std::invalid_argument("star system: need 1 to 4 neighbours");
    if (couplers.size() != n || j_c0.size() != n || j_cj.size() != n || j_0j.size() != n) {
      throw std::invalid_argument("star system: coupler and coupling lists must have one entry per neighbour");
    }
    central.validate();
    for (const auto& f : neighbors) f.validate();
    for (const auto& c : couplers) c.validate();
  }
};

/// Flat product basis over the fixed site ordering, optionally restricted to
/// a subset of kept states (a low-energy projection).
class ProductBasis {
 public:
  ProductBasis() = default;
  explicit ProductBasis(std::vector<int> dims) : dims_(std::move(dims)) {
    full_dim_ = 1;
    for (int d : dims_) {
      if (d <= 0) throw std::invalid_argument("product basis: dimensions must be positive");
      full_dim_ *= static_cast<std::size_t>(d);
    }
    strides_.assign(dims_.size(), 1);
    for (int s = static_cast<int>(dims_.size()) - 2; s >= 0; --s) strides_[s] = strides_[s + 1] * dims_[s + 1];
  }
  ProductBasis(std::vector<int> dims, std::vector<std::size_t> kept) : ProductBasis(std::move(dims)) {
    kept_ = std::move(kept);
    projected_ = true;
    local_.assign(full_dim_, -1);
    for (std::size_t i = 0; i < kept_.size(); ++i) {
      if (kept_[i] >= full_dim_) throw std::out_of_range("product basis: kept index out of range");
      local_[kept_[i]] = static_cast<std::int64_t>(i);
    }
  }

  [[nodiscard]] const std::vector<int>& dims() const { return dims_; }
  [[nodiscard]] std::size_t full_dim() const { return full_dim_; }
  [[nodiscard]] std::size_t dim() const { return projected_ ? kept_.size() : full_dim_; }
  [[nodiscard]] bool projected() const { return projected_; }
  [[nodiscard]] int n_sites() const { return static_cast<int>(dims_.size()); }

  /// Full-space index of local state i.
  [[nodiscard]] std::size_t full_index(std::size_t i) const { return projected_ ? kept_.at(i) : i; }
  /// Local index of a full-space state, or nullopt if projected out.
  [[nodiscard]] std::optional<std::size_t> local_index(std::size_t full) const {
    if (full >= full_dim_) return std::nullopt;
    if (!projected_) return full;
    const auto l = local_[full];
    if (l < 0) return std::nullopt;
    return static_cast<std::size_t>(l);
  }

  [[nodiscard]] std::size_t flatten(const std::vector<int>& digits) const {
    if (digits.size() != dims_.size()) throw std::invalid_argument("product basis: wrong number of digits");
    std::size_t idx = 0;
    for (std::size_t s = 0; s < dims_.size(); ++s) {
      if (digits[s] < 0 || digits[s] >= dims_[s]) throw std::out_of_range("product basis: digit out of range");
      idx += static_cast<std::size_t>(digits[s]) * strides_[s];
    }
    return idx;
  }
  [[nodiscard]] std::vector<int> digits(std::size_t full) const {
    std::vector<int> d(dims_.size());
    for (std::size_t s = 0; s < dims_.size(); ++s) {
      d[s] = static_cast<int>((full / strides_[s]) % static_cast<std::size_t>(dims_[s]));
    }
    return d;
  }
  [[nodiscard]] std::size_t stride(int site) const { return strides_.at(site); }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t full_dim_ = 1;
  bool projected_ = false;
  std::vector<std::size_t> kept_;
  std::vector<std::int64_t> local_;
};

/// Bare subsystem data in the fixed ordering.
struct SystemParts {
  std::vector<RealVector> energies;     // per site
  std::vector<ComplexMatrix> charge;    // per site, truncated eigenbasis
  std::vector<CircuitLevels> fluxoniums;  // Q0..QN
  std::vector<CouplerModel> couplers;     // C1..CN
};

inline SystemParts build_parts(const StarSystem& system) {
  system.validate();
  SystemParts parts;
  for (int k = 0; k < system.n_fluxoniums(); ++k) {
    parts.fluxoniums.push_back(diagonalize_fluxonium(system.fluxonium(k), system.fluxonium_basis));
  }
  for (int j = 0; j < system.n_neighbors(); ++j) parts.couplers.push_back(coupler_oscillator(system.couplers[j]));
  parts.energies.push_back(parts.fluxoniums[0].energies);
  parts.charge.push_back(parts.fluxoniums[0].n_op.entries);
  for (int j = 1; j <= system.n_neighbors(); ++j) {
    parts.energies.push_back(parts.fluxoniums[j].energies);
    parts.charge.push_back(parts.fluxoniums[j].n_op.entries);
    parts.energies.push_back(parts.couplers[j - 1].energies);
    parts.charge.push_back(parts.couplers[j - 1].n_op.entries);
  }
  return parts;
}

struct ChargeCoupling {
  int site_a;
  int site_b;
  double strength;  // GHz
};

inline std::vector<ChargeCoupling> coupling_terms(const StarSystem& system) {
  std::vector<ChargeCoupling> terms;
  for (int j = 1; j <= system.n_neighbors(); ++j) {
    const int q = StarSystem::fluxonium_site(j);
    const int c = StarSystem::coupler_site(j);
    terms.push_back({0, c, system.j_c0[j - 1]});
    terms.push_back({q, c, system.j_cj[j - 1]});
    terms.push_back({0, q, system.j_0j[j - 1]});
  }
  return terms;
}

/// Embed a local operator at `site` of a product space with identities elsewhere.
inline OperatorMatrix embed_operator(const OperatorMatrix& local, int site, const std::vector<int>& dims) {
  if (site < 0 || site >= static_cast<int>(dims.size())) throw std::out_of_range("embed_operator: site out of range");
  if (local.dim() != dims[site]) throw std::invalid_argument("embed_operator: dimension mismatch");
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (int s = 0; s < static_cast<int>(dims.size()); ++s) {
    const ComplexMatrix factor = s == site ? local.entries : ComplexMatrix::Identity(dims[s], dims[s]);
    out = kron(out, factor);
  }
  return OperatorMatrix(std::move(out), BasisTag::bare_product);
}

inline OperatorMatrix embed_operator(const OperatorMatrix& local, int site, const StarSystem& system) {
  return embed_operator(local, site, system.dims());
}

/// Total dimension of the unprojected product space.
inline std::size_t product_dimension(const StarSystem& system) { return ProductBasis(system.dims()).full_dim(); }

/// Diagonal bare energies of every product state (full space).
inline RealVector bare_product_energies(const SystemParts& parts, const ProductBasis& basis) {
  RealVector e(static_cast<Eigen::Index>(basis.full_dim()));
  for (std::size_t i = 0; i < basis.full_dim(); ++i) {
    const auto d = basis.digits(i);
    double sum = 0.0;
    for (int s = 0; s < basis.n_sites(); ++s) sum += parts.energies[s](d[s]);
    e(static_cast<Eigen::Index>(i)) = sum;
  }
  return e;
}

/// Operator acting on site `site` restricted to a (possibly projected) basis.
inline ComplexMatrix local_operator_on(const ComplexMatrix& local, int site, const ProductBasis& basis) {
  const std::size_t dim = basis.dim();
  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const auto stride = basis.stride(site);
  const int d_site = basis.dims()[site];
  for (std::size_t p = 0; p < dim; ++p) {
    const std::size_t full = basis.full_index(p);
    const int digit = static_cast<int>((full / stride) % static_cast<std::size_t>(d_site));
    const std::size_t base = full - static_cast<std::size_t>(digit) * stride;
    for (int q_digit = 0; q_digit < d_site; ++q_digit) {
      const cplx v = local(q_digit, digit);
      if (v == cplx(0.0, 0.0)) continue;
      if (const auto q = basis.local_index(base + static_cast<std::size_t>(q_digit) * stride)) {
        out(static_cast<Eigen::Index>(*q), static_cast<Eigen::Index>(p)) += v;
      }
    }
  }
  return out;
}

/// Star-system Hamiltonian in the bare product eigenbasis, restricted to
/// `basis` (full space when the basis is not projected).
inline OperatorMatrix build_system_hamiltonian(const StarSystem& system, const SystemParts& parts,
                                               const ProductBasis& basis) {
  const std::size_t dim = basis.dim();
  ComplexMatrix h = ComplexMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const auto terms = coupling_terms(system);
  const auto& dims = basis.dims();
  for (std::size_t p = 0; p < dim; ++p) {
    const std::size_t full = basis.full_index(p);
    const auto dig = basis.digits(full);
    double diag = 0.0;
    for (int s = 0; s < basis.n_sites(); ++s) diag += parts.energies[s](dig[s]);
    h(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) += diag;
    for (const auto& t : terms) {
      if (t.strength == 0.0) continue;
      const auto& na = parts.charge[t.site_a];
      const auto& nb = parts.charge[t.site_b];
      const std::size_t base = full - static_cast<std::size_t>(dig[t.site_a]) * basis.stride(t.site_a) -
                               static_cast<std::size_t>(dig[t.site_b]) * basis.stride(t.site_b);
      for (int qa = 0; qa < dims[t.site_a]; ++qa) {
        const cplx va = na(qa, dig[t.site_a]);
        if (va == cplx(0.0, 0.0)) continue;
        for (int qb = 0; qb < dims[t.site_b]; ++qb) {
          const cplx vb = nb(qb, dig[t.site_b]);
          if (vb == cplx(0.0, 0.0)) continue;
          const std::size_t q_full = base + static_cast<std::size_t>(qa) * basis.stride(t.site_a) +
                                     static_cast<std::size_t>(qb) * basis.stride(t.site_b);
          if (const auto q = basis.local_index(q_full)) {
            h(static_cast<Eigen::Index>(*q), static_cast<Eigen::Index>(p)) += t.strength * va * vb;
          }
        }
      }
    }
  }
  const ComplexMatrix sym = 0.5 * (h + h.adjoint());
  return OperatorMatrix(sym, basis.projected() ? BasisTag::projected : BasisTag::bare_product);
}

inline OperatorMatrix build_system_hamiltonian(const StarSystem& system) {
  const SystemParts parts = build_parts(system);
  return build_system_hamiltonian(system, parts, ProductBasis(system.dims()));
}

/// Product states whose bare energy (sum of subsystem energies, each ground at
/// zero) lies below `cutoff` GHz.
inline ProductBasis low_energy_basis(const SystemParts& parts, const std::vector<int>& dims, double cutoff) {
  const ProductBasis full(dims);
  const RealVector e = bare_product_energies(parts, full);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < full.full_dim(); ++i) {
    if (e(static_cast<Eigen::Index>(i)) < cutoff) kept.push_back(i);
  }
  if (kept.empty()) throw std::domain_error("low-energy projection: cutoff below the ground-state energy");
  return ProductBasis(dims, std::move(kept));
}

struct Projection {
  OperatorMatrix h_proj;
  std::vector<std::size_t> kept_basis;  // projected index -> full index
};

/// Keep the bare product states of `h` whose diagonal energy lies below `cutoff`.
inline Projection project_low_energy(const OperatorMatrix& h, double cutoff) {
  if (!is_hermitian(h.entries)) throw std::invalid_argument("project_low_energy: operator is not Hermitian");
  Projection out;
  for (Eigen::Index i = 0; i < h.dim(); ++i) {
    if (h.entries(i, i).real() < cutoff) out.kept_basis.push_back(static_cast<std::size_t>(i));
  }
  if (out.kept_basis.empty()) throw std::domain_error("project_low_energy: empty projection");
  const auto m = static_cast<Eigen::Index>(out.kept_basis.size());
  ComplexMatrix p(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      p(a, b) = h.entries(static_cast<Eigen::Index>(out.kept_basis[a]), static_cast<Eigen::Index>(out.kept_basis[b]));
    }
  }
  out.h_proj = OperatorMatrix(std::move(p), BasisTag::projected);
  return out;
}

}  // namespace fluxsim
