#include "fluxsim/circuit.hpp"
#include "fluxsim/spectrum.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace fluxsim;
using fluxsim::testing::table_coupler;
using fluxsim::testing::table_fluxonium;
using fluxsim::testing::table_star;

namespace {

constexpr double mhz = 1e-3;

// Published single-fluxonium transitions (GHz): omega_01, omega_12, omega_03.
const double table_two[5][3] = {
    {0.298, 5.621, 8.347}, {0.222, 5.269, 7.461}, {0.273, 5.049, 7.474}, {0.273, 5.198, 7.660}, {0.306, 5.134, 7.771}};

// Cooper-pair-box transmon 4 E_C n^2 - E_J cos(phi) in a truncated charge basis.
RealVector charge_basis_transmon(double e_c, double e_j, int n_max = 30) {
  const int size = 2 * n_max + 1;
  RealMatrix h = RealMatrix::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    const double n = i - n_max;
    h(i, i) = 4.0 * e_c * n * n;
    if (i + 1 < size) h(i, i + 1) = h(i + 1, i) = -0.5 * e_j;
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(h);
  return es.eigenvalues().array() - es.eigenvalues()(0);
}

}  // namespace

TEST(Fluxonium, PublishedTransitions) {
  for (int k = 0; k < 5; ++k) {
    const auto lv = diagonalize_fluxonium(table_fluxonium(k));
    const RealVector& e = lv.energies;
    EXPECT_NEAR(e(1) - e(0), table_two[k][0], 2 * mhz) << "Q" << k;
    EXPECT_NEAR(e(2) - e(1), table_two[k][1], 2 * mhz) << "Q" << k;
    EXPECT_NEAR(e(3) - e(0), table_two[k][2], 2 * mhz) << "Q" << k;
  }
}

TEST(Fluxonium, HarmonicLimit) {
  const FluxoniumSpec spec{1.0, 0.5, 0.0, 0.0, 6};
  const auto lv = diagonalize_fluxonium(spec);
  const double w = std::sqrt(8.0 * spec.e_c * spec.e_l);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(lv.energies(k), k * w, 1e-9);
}

TEST(Fluxonium, ParitySelectionAndRealGauge) {
  const auto lv = diagonalize_fluxonium(table_fluxonium(0));
  const ComplexMatrix& n = lv.n_op.entries;
  EXPECT_LT(std::abs(n(0, 2)), 1e-10);
  EXPECT_LT(std::abs(n(1, 3)), 1e-10);
  EXPECT_GT(n(0, 1).real(), 0.0);
  EXPECT_GT(n(1, 2).real(), 0.0);
  EXPECT_LT(n.imag().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(is_hermitian(n));
}

TEST(Fluxonium, BasisConvergence) {
  for (int k = 0; k < 5; ++k) {
    const auto a = diagonalize_fluxonium(table_fluxonium(k), 60);
    const auto b = diagonalize_fluxonium(table_fluxonium(k), 120);
    EXPECT_LT((a.energies - b.energies).cwiseAbs().maxCoeff(), 0.1 * mhz) << "Q" << k;
  }
}

TEST(Fluxonium, RejectsInvalidSpecs) {
  EXPECT_THROW(diagonalize_fluxonium({0.0, 0.8, 6.0, 0.0, 4}), std::invalid_argument);
  EXPECT_THROW(diagonalize_fluxonium({1.0, -0.8, 6.0, 0.0, 4}), std::invalid_argument);
  EXPECT_THROW(diagonalize_fluxonium({1.0, 0.8, 6.0, 0.0, 2}), std::invalid_argument);
  EXPECT_THROW(diagonalize_fluxonium(table_fluxonium(0), 30), std::invalid_argument);
}

TEST(Coupler, PublishedFrequencies) {
  const auto d = coupler_parameters(table_coupler());
  EXPECT_NEAR(d.omega_c, 11.537, 2 * mhz);
  EXPECT_NEAR(d.omega_c + d.alpha_c, 11.194, 5 * mhz);
  EXPECT_NEAR(d.alpha_c, -0.34, 0.01);
}

TEST(Coupler, ClosedFormMatchesChargeBasis) {
  for (double bias : {0.0, 0.3, 0.413}) {
    const auto spec = table_coupler(bias);
    const auto d = coupler_parameters(spec);
    const RealVector e = charge_basis_transmon(spec.e_c, spec.effective_e_j());
    EXPECT_NEAR(d.omega_c, e(1), 10 * mhz) << "bias " << bias;
    if (bias < 0.4) EXPECT_NEAR(d.omega_c + d.alpha_c, e(2) - e(1), 10 * mhz) << "bias " << bias;
  }
}

TEST(Coupler, HarmonicLimit) {
  const auto d = coupler_parameters({1e-4, 1e4, 0.0, 3});
  EXPECT_LT(d.lambda, 1e-3);
  EXPECT_NEAR(d.omega_c / d.omega_p, 1.0, 1e-3);
  EXPECT_LT(std::abs(d.alpha_c) / d.omega_p, 1e-3);
}

TEST(Coupler, DegeneratePotentialRejected) {
  EXPECT_THROW(coupler_parameters(table_coupler(0.5)), std::domain_error);
  EXPECT_THROW(coupler_parameters({0.0, 55.0, 0.0, 3}), std::invalid_argument);
}

TEST(Coupler, OscillatorLadder) {
  const auto m = coupler_oscillator(table_coupler());
  EXPECT_DOUBLE_EQ(m.energies(0), 0.0);
  EXPECT_DOUBLE_EQ(m.energies(1), m.derived.omega_c);
  EXPECT_NEAR(m.energies(2), 2 * m.derived.omega_c + m.derived.alpha_c, 1e-12);
  EXPECT_NEAR(m.n_op.entries(0, 1).real(), m.derived.n_zpf, 1e-12);
}

TEST(StarSystem, Dimensions) {
  EXPECT_EQ(product_dimension(table_star({0.0})), 48u);
  EXPECT_EQ(product_dimension(table_star({0.0, 0.0})), 576u);
  EXPECT_EQ(product_dimension(table_star({0.0, 0.0, 0.0, 0.0})), 82944u);
  EXPECT_EQ(table_star({0.0, 0.0}).site_names(), (std::vector<std::string>{"Q0", "Q1", "C1", "Q2", "C2"}));
}

TEST(StarSystem, Validation) {
  StarSystem empty;
  empty.central = table_fluxonium(0);
  EXPECT_THROW(empty.validate(), std::invalid_argument);
  StarSystem bad = table_star({0.0});
  bad.j_cj.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_NO_THROW(table_star({0.413, 0.42}).validate());
}

TEST(Hamiltonian, HermitianAtGateBias) {
  const OperatorMatrix h = build_system_hamiltonian(table_star({0.413, 0.420}));
  EXPECT_EQ(h.dim(), 576);
  EXPECT_EQ(h.basis_tag, BasisTag::bare_product);
  EXPECT_LT(hermiticity_residual(h.entries), 1e-12);
}

TEST(Hamiltonian, DecoupledLimitIsMinkowskiSum) {
  const StarSystem s = table_star({0.2}, 0.0, 0.0);
  const auto q0 = diagonalize_fluxonium(s.central).energies;
  const auto q1 = diagonalize_fluxonium(s.neighbors[0]).energies;
  const auto c1 = coupler_oscillator(s.couplers[0]).energies;
  std::vector<double> sums;
  for (Eigen::Index a = 0; a < q0.size(); ++a) {
    for (Eigen::Index b = 0; b < q1.size(); ++b) {
      for (Eigen::Index c = 0; c < c1.size(); ++c) sums.push_back(q0(a) + q1(b) + c1(c));
    }
  }
  std::sort(sums.begin(), sums.end());
  const EigenSystem es = hermitian_eigen(build_system_hamiltonian(s).entries);
  ASSERT_EQ(static_cast<std::size_t>(es.values.size()), sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) EXPECT_NEAR(es.values(static_cast<Eigen::Index>(i)), sums[i], 1e-9);
}

TEST(Hamiltonian, DressedQubitFrequencyNearBare) {
  const DressedSystem d = solve_system(table_star({0.413}));
  const double w01 = d.spectrum.energy(star_label({1, 0})) - d.spectrum.energy(star_label({0, 0}));
  EXPECT_NEAR(w01, 0.298, 5 * mhz);
}

TEST(Projection, InfiniteCutoffIsIdentity) {
  const OperatorMatrix h = build_system_hamiltonian(table_star({0.413}));
  const Projection p = project_low_energy(h, std::numeric_limits<double>::infinity());
  EXPECT_EQ(p.kept_basis.size(), 48u);
  EXPECT_EQ(p.h_proj.basis_tag, BasisTag::projected);
  EXPECT_LT((p.h_proj.entries - h.entries).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Projection, CutoffBelowGroundThrows) {
  const StarSystem s = table_star({0.413});
  const OperatorMatrix h = build_system_hamiltonian(s);
  EXPECT_THROW(project_low_energy(h, -1.0), std::domain_error);
  EXPECT_THROW(low_energy_basis(build_parts(s), s.dims(), -1.0), std::domain_error);
}

TEST(Projection, KeepsExactlyStatesBelowCutoff) {
  const StarSystem s = table_star({0.0, 0.0});
  const SystemParts parts = build_parts(s);
  const ProductBasis full(s.dims());
  const ProductBasis kept = low_energy_basis(parts, s.dims(), 12.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < full.full_dim(); ++i) {
    const auto dig = full.digits(i);
    double e = 0.0;
    for (int site = 0; site < full.n_sites(); ++site) e += parts.energies[site](dig[site]);
    const bool below = e < 12.0;
    count += below;
    EXPECT_EQ(kept.local_index(i).has_value(), below);
  }
  EXPECT_EQ(kept.dim(), count);
  EXPECT_TRUE(kept.projected());
}

TEST(ProductBasis, RoundTrip) {
  const ProductBasis b({4, 4, 3, 4, 3});
  for (std::size_t i = 0; i < b.full_dim(); ++i) EXPECT_EQ(b.flatten(b.digits(i)), i);
  EXPECT_EQ(b.flatten({0, 0, 0, 0, 1}), 1u);
  EXPECT_EQ(b.flatten({1, 0, 0, 0, 0}), 144u);
  const ProductBasis p({4, 4, 3}, {0, 5, 17});
  EXPECT_EQ(p.dim(), 3u);
  EXPECT_EQ(p.full_index(2), 17u);
  EXPECT_EQ(p.local_index(5), std::optional<std::size_t>(1));
  EXPECT_FALSE(p.local_index(6).has_value());
}
