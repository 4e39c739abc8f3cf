#pragma once

// Dense linear-algebra helpers shared by every fluxsim module.
//
// Energies are linear frequencies in GHz throughout; times are in ns.

#include <Eigen/Dense>

#include <lapacke.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxsim {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Raised when a numerical kernel fails (eigen-solver non-convergence, bad sizes).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BasisTag { bare_product, dressed, projected, local };

inline const char* to_string(BasisTag tag) {
  switch (tag) {
    case BasisTag::bare_product: return "bare-product";
    case BasisTag::dressed: return "dressed";
    case BasisTag::projected: return "projected";
    case BasisTag::local: return "local";
  }
  return "unknown";
}

/// A square operator in GHz together with the basis it is expressed in.
struct OperatorMatrix {
  ComplexMatrix entries;
  BasisTag basis_tag = BasisTag::local;

  OperatorMatrix() = default;
  OperatorMatrix(ComplexMatrix m, BasisTag tag) : entries(std::move(m)), basis_tag(tag) {
    if (entries.rows() != entries.cols()) {
      throw std::invalid_argument("OperatorMatrix must be square");
    }
  }

  [[nodiscard]] Eigen::Index dim() const { return entries.rows(); }
};

/// max |H - H^dagger| divided by max(1, max |H|).
inline double hermiticity_residual(const ComplexMatrix& h) {
  if (h.size() == 0) return 0.0;
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  return (h - h.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline bool is_hermitian(const ComplexMatrix& h, double rel_tol = 1e-12) {
  return hermiticity_residual(h) <= rel_tol;
}

struct EigenSystem {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns are eigenvectors
};

namespace detail {

inline void check_info(lapack_int info, const char* routine) {
  if (info != 0) {
    throw NumericalError(std::string(routine) + " failed with info = " + std::to_string(info));
  }
}

}  // namespace detail

/// Real symmetric eigendecomposition via LAPACK dsyevd (divide and conquer).
inline void symmetric_eigen(const RealMatrix& a, RealVector& values, RealMatrix& vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  vectors = a;
  values.resize(n);
  if (n == 0) return;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, vectors.data(), n, values.data());
  detail::check_info(info, "dsyevd");
}

/// Hermitian eigendecomposition. Falls back to the real solver when the
/// imaginary part is numerical noise (below 1e-9 relative), which is the
/// common case for sweet-spot fluxonium circuits and halves the cost.
inline EigenSystem hermitian_eigen(const ComplexMatrix& h) {
  EigenSystem out;
  const auto n = static_cast<lapack_int>(h.rows());
  if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_eigen: matrix not square");
  if (n == 0) return out;
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (h.imag().cwiseAbs().maxCoeff() <= 1e-9 * scale) {
    RealMatrix vecs;
    symmetric_eigen(h.real(), out.values, vecs);
    out.vectors = vecs.cast<cplx>();
    return out;
  }
  out.vectors = h;
  out.values.resize(n);
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         reinterpret_cast<lapack_complex_double*>(out.vectors.data()), n,
                                         out.values.data());
  detail::check_info(info, "zheevd");
  return out;
}

/// Lowest `count` eigenpairs via LAPACK dsyevr / zheevr (MRRR). Cheaper than
/// the full decomposition when only the low-energy manifold is needed.
inline EigenSystem hermitian_eigen_lowest(const ComplexMatrix& h, Eigen::Index count) {
  if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_eigen_lowest: matrix not square");
  const auto n = static_cast<lapack_int>(h.rows());
  if (count >= h.rows()) return hermitian_eigen(h);
  if (count <= 0) throw std::invalid_argument("hermitian_eigen_lowest: count must be positive");
  const auto m_req = static_cast<lapack_int>(count);
  EigenSystem out;
  lapack_int found = 0;
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(m_req));
  RealVector w(n);
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (h.imag().cwiseAbs().maxCoeff() <= 1e-9 * scale) {
    RealMatrix a = h.real();
    RealMatrix z(n, m_req);
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, m_req, 0.0,
                                           &found, w.data(), z.data(), n, support.data());
    detail::check_info(info, "dsyevr");
    out.vectors = z.leftCols(found).cast<cplx>();
  } else {
    ComplexMatrix a = h;
    ComplexMatrix z(n, m_req);
    const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n,
                                           reinterpret_cast<lapack_complex_double*>(a.data()), n, 0.0, 0.0, 1, m_req,
                                           0.0, &found, w.data(), reinterpret_cast<lapack_complex_double*>(z.data()), n,
                                           support.data());
    detail::check_info(info, "zheevr");
    out.vectors = z.leftCols(found);
  }
  out.values = w.head(found);
  return out;
}

/// exp(-i * scale * H) for Hermitian H.
inline ComplexMatrix hermitian_expm(const ComplexMatrix& h, double scale) {
  const EigenSystem es = hermitian_eigen(h);
  const ComplexVector phases = (es.values * (-scale)).unaryExpr([](double x) { return std::polar(1.0, x); });
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

/// Kronecker product of two dense matrices.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(const Eigen::MatrixBase<DerivedA>& a,
                                                                              const Eigen::MatrixBase<DerivedB>& b) {
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                               a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Wrap an angle to (-pi, pi].
inline double wrap_phase(double x) {
  double y = std::remainder(x, two_pi);
  if (y <= -std::numbers::pi) y += two_pi;
  return y;
}

}  // namespace fluxsim
