#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oregonator/tangent.hpp"

namespace {

using namespace oregonator;
constexpr double pi = std::numbers::pi;

DomainSpec interval(int modes = 8, double L = 1.0) {
  DomainSpec d;
  d.L1 = L;
  d.modes = modes;
  d.grid = 2 * modes;
  return d;
}

FieldTriple zero_triple(const SineBasis& basis) {
  FieldTriple z;
  for (auto& f : z) f.assign(basis.coeff_size(), 0.0);
  return z;
}

FieldTriple random_triple(const SineBasis& basis, std::mt19937_64& rng, double decay = 1.5) {
  std::normal_distribution<double> normal;
  FieldTriple z = zero_triple(basis);
  for (auto& f : z)
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = normal(rng) * std::pow(j + 1.0, -decay);
  return z;
}

double norm(const FieldTriple& z) { return std::sqrt(inner(z, z)); }

FieldTriple lin_comb(double a, const FieldTriple& x, double b, const FieldTriple& y) {
  FieldTriple out = x;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < x[i].size(); ++j) out[i][j] = a * x[i][j] + b * y[i][j];
  return out;
}

Eigen::Matrix3d linearization_at_zero(const OregonatorParams& p) {
  Eigen::Matrix3d J;
  J << p.a1, p.b1, 0.0, 0.0, -p.b2, p.c2, p.a3, 0.0, -p.c3;
  return J;
}

Eigen::Matrix3d mode_block(const OregonatorParams& p, double lambda) {
  const auto d = p.diffusion();
  Eigen::Matrix3d D = Eigen::Vector3d(d[0], d[1], d[2]).asDiagonal();
  return linearization_at_zero(p) - lambda * D;
}

TEST(JacobianApply, AtZeroIsLinearPart) {
  OregonatorParams p;
  p.a1 = 1.5;
  p.c3 = 0.3;
  FieldTriple base{{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}};
  FieldTriple Z{{{1.0, 2.0}, {1.0, -1.0}, {1.0, 0.5}}};
  const FieldTriple out = jacobian_apply(p, base, Z);
  for (std::size_t k = 0; k < 2; ++k) {
    const double U = Z[0][k], V = Z[1][k], W = Z[2][k];
    EXPECT_DOUBLE_EQ(out[0][k], p.a1 * U + p.b1 * V);
    EXPECT_DOUBLE_EQ(out[1][k], -p.b2 * V + p.c2 * W);
    EXPECT_DOUBLE_EQ(out[2][k], p.a3 * U - p.c3 * W);
  }
}

TEST(JacobianApply, ZeroDirectionGivesZero) {
  FieldTriple base{{{0.3, 1.2}, {0.7, 0.1}, {2.0, 0.4}}};
  FieldTriple Z{{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}};
  for (const auto& f : jacobian_apply(OregonatorParams{}, base, Z))
    for (double x : f) EXPECT_EQ(x, 0.0);
}

TEST(JacobianApply, ShapeMismatch) {
  FieldTriple base{{{0.3, 1.2}, {0.7, 0.1}, {2.0, 0.4}}};
  FieldTriple Z{{{0.0}, {0.0}, {0.0}}};
  EXPECT_THROW(jacobian_apply(OregonatorParams{}, base, Z), ShapeMismatch);
}

TEST(JacobianApply, PointwiseFiniteDifference) {
  OregonatorParams p;
  p.F = 1.3;
  p.G1 = 0.7;
  p.G2 = 1.9;
  FieldTriple g{{{0.4, -0.2, 0.9}, {0.3, 0.8, 0.1}, {0.5, 0.2, 0.6}}};
  FieldTriple Z{{{0.2, 0.5, -0.3}, {-0.4, 0.1, 0.6}, {0.3, 0.3, -0.2}}};
  const FieldTriple JZ = jacobian_apply(p, g, Z);
  const double h = 1e-4;
  for (std::size_t k = 0; k < 3; ++k) {
    const auto f0 = reaction(p, g[0][k], g[1][k], g[2][k]);
    const auto f1 = reaction(p, g[0][k] + h * Z[0][k], g[1][k] + h * Z[1][k], g[2][k] + h * Z[2][k]);
    const double U = Z[0][k], V = Z[1][k];
    const double second[3] = {-p.F * U * U - p.G1 * U * V, -p.G2 * U * V, 0.0};
    for (int i = 0; i < 3; ++i)
      EXPECT_NEAR((f1[i] - f0[i]) / h, JZ[i][k] + h * second[i], 1e-10);
  }
}

// Galerkin level: P f(g + hZ) - P f(g) = h P f'(g)Z + h² P Q(Z) exactly, where
// Q(Z) = (-F U² - G1 U V, -G2 U V, 0).
TEST(ProjectJacobian, FiniteDifferenceIsFirstOrderWithAnalyticSlope) {
  const SineBasis basis(interval(16));
  const OregonatorParams p;
  const Integrator integ(p, basis, {});
  std::mt19937_64 rng(12);
  FieldTriple g = random_triple(basis, rng), Z = random_triple(basis, rng);
  scale(g, 1.0 / norm(g));
  scale(Z, 1.0 / norm(Z));
  const FieldTriple JZ = project_jacobian(p, basis, synthesize(basis, g), Z);
  const FieldTriple QZ = [&] {
    const FieldTriple zg = synthesize(basis, Z);
    std::vector<double> q1(basis.grid_size()), q2(basis.grid_size());
    for (std::size_t k = 0; k < q1.size(); ++k) {
      q1[k] = -p.F * zg[0][k] * zg[0][k] - p.G1 * zg[0][k] * zg[1][k];
      q2[k] = -p.G2 * zg[0][k] * zg[1][k];
    }
    return FieldTriple{basis.project_product(q1), basis.project_product(q2),
                       std::vector<double>(basis.coeff_size(), 0.0)};
  }();
  const FieldTriple f0 = integ.reaction_coefficients_of(g);
  std::vector<double> err;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const FieldTriple fh = integ.reaction_coefficients_of(lin_comb(1.0, g, h, Z));
    const FieldTriple fd = lin_comb(1.0 / h, fh, -1.0 / h, f0);
    const FieldTriple diff = lin_comb(1.0, fd, -1.0, JZ);
    err.push_back(norm(diff));
    EXPECT_NEAR(norm(diff) / h, norm(QZ), 1e-6 * norm(QZ));
    if (h == 1e-4) {
      EXPECT_LE(norm(lin_comb(1.0, diff, -h, QZ)) / norm(JZ), 1e-6);
    }
  }
  EXPECT_NEAR(std::log10(err[0] / err[1]), 1.0, 0.05);
  EXPECT_NEAR(std::log10(err[1] / err[2]), 1.0, 0.05);
}

// With the base pinned at 0, mode j of a tangent evolves by exp(t B_j),
// B_j = f'(0) - λ_j diag(d).
TEST(EvolveTangent, PinnedZeroBaseMatchesMatrixExponential) {
  const SineBasis basis(interval(4));
  OregonatorParams p;
  p.d2 = 0.6;
  p.d3 = 1.4;
  p.b1 = 1.7;
  IntegratorConfig cfg;
  cfg.dt = 1e-5;
  cfg.scheme = Scheme::imex_rk2;
  TangentBundle b = make_bundle(SpectralState::zero(basis), basis, 1, 3);
  b.pin_base = true;
  FieldTriple z0 = zero_triple(basis);
  z0[0][0] = 0.7;
  z0[1][0] = -0.2;
  z0[2][0] = 0.4;
  z0[0][1] = 0.1;
  b.tangents[0] = z0;
  const double t = 0.05;
  evolve_tangent(b, p, basis, cfg, t);
  for (int j = 0; j < 2; ++j) {
    const Eigen::Matrix3d E = (t * mode_block(p, basis.eigenvalues()[j])).exp();
    const Eigen::Vector3d x0(z0[0][j], z0[1][j], z0[2][j]);
    const Eigen::Vector3d x = E * x0;
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(b.tangents[0][i][j], x(i), 1e-8) << "mode " << j + 1;
  }
  EXPECT_NEAR(b.base.t, t, 1e-12);
}

TEST(EvolveTangent, ZeroStaysZeroAndFlowIsLinear) {
  const SineBasis basis(interval(8));
  const OregonatorParams p;
  IntegratorConfig cfg;
  cfg.scheme = Scheme::imex_rk2;
  std::mt19937_64 rng(5);
  SpectralState base = random_nonnegative_state(basis, p, 2, 3.0);
  TangentBundle b = make_bundle(base, basis, 3, 1);
  b.tangents[0] = zero_triple(basis);
  b.tangents[1] = random_triple(basis, rng);
  b.tangents[2] = b.tangents[1];
  scale(b.tangents[2], -2.5);
  evolve_tangent(b, p, basis, cfg, 0.05);
  for (const auto& f : b.tangents[0])
    for (double c : f) EXPECT_EQ(c, 0.0);
  const FieldTriple expected = lin_comb(-2.5, b.tangents[1], 0.0, b.tangents[1]);
  EXPECT_LE(norm(lin_comb(1.0, b.tangents[2], -1.0, expected)), 1e-13 * norm(expected));
}

TEST(Orthonormalize, OrthonormalSetUnchanged) {
  const SineBasis basis(interval(4));
  TangentBundle b = make_bundle(SpectralState::zero(basis), basis, 3, 1);
  for (int k = 0; k < 3; ++k) {
    b.tangents[k] = zero_triple(basis);
    b.tangents[k][k][k] = 1.0;
  }
  const auto before = b.tangents;
  const auto r = orthonormalize(b);
  for (double x : r) EXPECT_DOUBLE_EQ(x, 1.0);
  EXPECT_EQ(b.tangents, before);
}

TEST(Orthonormalize, ParallelVectorsAreRankDeficient) {
  const SineBasis basis(interval(4));
  std::mt19937_64 rng(9);
  TangentBundle b = make_bundle(SpectralState::zero(basis), basis, 2, 1);
  b.tangents[0] = random_triple(basis, rng);
  b.tangents[1] = b.tangents[0];
  scale(b.tangents[1], 3.0);
  try {
    orthonormalize(b);
    FAIL() << "expected RankDeficient";
  } catch (const RankDeficient& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Orthonormalize, MatchesDenseQr) {
  const SineBasis basis(interval(6));
  TangentBundle b = make_bundle(SpectralState::zero(basis), basis, 3, 42);
  const std::size_t n = 3 * basis.coeff_size();
  Eigen::MatrixXd A(n, 3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < basis.coeff_size(); ++j)
        A(i * basis.coeff_size() + j, k) = b.tangents[k][i][j];
  const auto r = orthonormalize(b);
  const Eigen::MatrixXd R = A.householderQr().matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(r[k], std::abs(R(k, k)), 1e-8);
    for (int l = 0; l < 3; ++l)
      EXPECT_NEAR(inner(b.tangents[k], b.tangents[l]), k == l ? 1.0 : 0.0, 1e-10);
  }
}

TEST(Trace, SingleDirectionHandValues) {
  const SineBasis basis(interval(8));
  const OregonatorParams p;
  TangentBundle b = make_bundle(SpectralState::zero(basis), basis, 1, 1);
  b.tangents[0] = zero_triple(basis);
  b.tangents[0][0][0] = 1.0;
  EXPECT_NEAR(trace_qm(b, p, basis), 1.0 - pi * pi, 1e-8);
  b.tangents[0] = zero_triple(basis);
  b.tangents[0][2][0] = 1.0;
  EXPECT_NEAR(trace_qm(b, p, basis), -pi * pi - 1.0, 1e-8);
}

TEST(Trace, AdditiveOverOrthonormalDirections) {
  const SineBasis basis(interval(8));
  const OregonatorParams p;
  const SpectralState base = random_nonnegative_state(basis, p, 4, 2.0);
  TangentBundle b = make_bundle(base, basis, 4, 8);
  orthonormalize(b);
  const FieldTriple grid = synthesize(basis, base.fields);
  double sum = 0.0;
  for (const auto& phi : b.tangents) sum += direction_trace(phi, grid, p, basis);
  EXPECT_NEAR(trace_qm(b, p, basis), sum, 1e-12 * std::abs(sum));
}

TEST(Lyapunov, PinnedZeroTopExponentMatchesEigenvalue) {
  const SineBasis basis(interval(4));
  const OregonatorParams p;
  IntegratorConfig cfg;
  cfg.scheme = Scheme::imex_rk2;
  LyapunovOptions opt;
  opt.m = 1;
  opt.horizon = 20.0;
  opt.burn_in = 5.0;
  opt.pin_base = true;
  const auto res = lyapunov_spectrum(SpectralState::zero(basis), p, basis, cfg, opt);
  const Eigen::Vector3cd ev = mode_block(p, pi * pi).eigenvalues();
  double top = -1e300;
  for (int i = 0; i < 3; ++i) top = std::max(top, ev(i).real());
  EXPECT_NEAR(res.exponents[0], top, 1e-4);
  EXPECT_NEAR(res.q_trace[0], res.q_exponents[0], 1e-3);
  EXPECT_TRUE(res.converged);
}

TEST(Lyapunov, StronglyDiffusiveIsContracting) {
  const SineBasis basis(interval(16));
  OregonatorParams p;
  p.d1 = p.d2 = p.d3 = 5.0;
  p.a1 = 3.0;
  const SpectralState g0 = random_nonnegative_state(basis, p, 1, 5.0);
  LyapunovOptions opt;
  opt.m = 3;
  opt.horizon = 5.0;
  const auto res = lyapunov_spectrum(g0, p, basis, IntegratorConfig{}, opt);
  EXPECT_LT(res.exponents[0], 0.0);
  ASSERT_TRUE(res.m_star.has_value());
  EXPECT_EQ(*res.m_star, 1);
  for (std::size_t k = 1; k < res.q_trace.size(); ++k)
    EXPECT_LT(res.q_trace[k], res.q_trace[k - 1]);
  for (std::size_t k = 1; k < res.exponents.size(); ++k)
    EXPECT_GE(res.exponents[k - 1], res.exponents[k] - 1e-3);
}

TEST(Lyapunov, DriftCanBeFatal) {
  const SineBasis basis(interval(4));
  LyapunovOptions opt;
  opt.horizon = 0.2;
  opt.burn_in = 0.0;
  opt.drift_tol = 1e-12;
  opt.throw_on_drift = true;
  const SpectralState g0 = random_nonnegative_state(basis, OregonatorParams{}, 3, 50.0);
  EXPECT_THROW(lyapunov_spectrum(g0, OregonatorParams{}, basis, IntegratorConfig{}, opt),
               NotConverged);
}

TEST(KaplanYorke, Examples) {
  EXPECT_DOUBLE_EQ(kaplan_yorke_dimension(std::vector<double>{1.0, -2.0}), 1.5);
  EXPECT_DOUBLE_EQ(kaplan_yorke_dimension(std::vector<double>{-1.0, -3.0}), 0.0);
  EXPECT_DOUBLE_EQ(kaplan_yorke_dimension(std::vector<double>{0.5, 0.2}), 2.0);
  EXPECT_DOUBLE_EQ(kaplan_yorke_dimension(std::vector<double>{2.0, -1.0, -4.0}), 2.25);
}

TEST(LeastNegativeIndex, Examples) {
  EXPECT_EQ(least_negative_index(std::vector<double>{1.0, 0.2, -0.1, -3.0}), 3);
  EXPECT_EQ(least_negative_index(std::vector<double>{-1.0}), 1);
  EXPECT_FALSE(least_negative_index(std::vector<double>{1.0, 2.0}).has_value());
}

TEST(GammaQuotient, SingleModes) {
  const SineBasis basis(interval(8));
  FieldTriple y = zero_triple(basis);
  y[0][0] = 0.3;
  EXPECT_NEAR(gamma_quotient(y, basis), pi * pi, 1e-12);
  y = zero_triple(basis);
  y[1][1] = -2.0;
  EXPECT_NEAR(gamma_quotient(y, basis), 4.0 * pi * pi, 1e-12);
}

TEST(GammaQuotient, BoundedBelowByPoincare) {
  const SineBasis basis(interval(12, 1.4));
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial)
    EXPECT_GE(gamma_quotient(random_triple(basis, rng, 0.0), basis),
              poincare_gamma(basis.domain()) * (1.0 - 1e-14));
}

TEST(GammaQuotient, IdenticalStatesThrow) {
  const SineBasis basis(interval(8));
  const SpectralState s = random_nonnegative_state(basis, OregonatorParams{}, 1, 1.0);
  EXPECT_THROW(gamma_quotient(difference(s, s), basis), ZeroDifference);
}

TEST(GammaQuotient, WeightedVariantUsesDiffusion) {
  const SineBasis basis(interval(8));
  OregonatorParams p;
  p.d2 = 3.0;
  FieldTriple y = zero_triple(basis);
  y[1][0] = 1.0;
  EXPECT_NEAR(gamma_quotient_weighted(y, basis, p), 3.0 * pi * pi, 1e-12);
}

TEST(GammaGrowth, ReactionOffSingleModeDifferencePasses) {
  const SineBasis basis(interval(8));
  const OregonatorParams p;
  const auto k = derive_constants(p, basis.domain(), {});
  IntegratorConfig cfg;
  cfg.reaction_enabled = false;
  SpectralState a = SpectralState::zero(basis), b = a;
  a.u()[0] = 1.0;
  b.u()[0] = 0.5;
  const auto ta = simulate(a, p, basis, cfg, 0.2, 10);
  const auto tb = simulate(b, p, basis, cfg, 0.2, 10);
  const auto chk = check_gamma_growth(ta, tb, p, basis, k);
  EXPECT_TRUE(chk.passed());
  for (double g : chk.gamma) EXPECT_NEAR(g, pi * pi, 1e-9);
}

TEST(GammaGrowth, NearbyAllOnesTrajectoriesPass) {
  const SineBasis basis(interval(16));
  const OregonatorParams p;
  const auto k = derive_constants(p, basis.domain(), {});
  IntegratorConfig cfg;
  const SpectralState a = random_nonnegative_state(basis, p, 1, 2.0);
  SpectralState b = a;
  b.u()[2] += 1e-3;
  b.w()[0] += 2e-3;
  const auto ta = simulate(a, p, basis, cfg, 1.0, 10);
  const auto tb = simulate(b, p, basis, cfg, 1.0, 10);
  const auto chk = check_gamma_growth(ta, tb, p, basis, k);
  EXPECT_TRUE(chk.passed());
  EXPECT_GT(chk.rho, 0.0);
  for (double g : chk.gamma) EXPECT_GE(g, k.gamma * (1.0 - 1e-12));
}

TEST(GammaGrowth, MismatchedSamplingThrows) {
  const SineBasis basis(interval(8));
  const OregonatorParams p;
  const auto k = derive_constants(p, basis.domain(), {});
  const SpectralState a = random_nonnegative_state(basis, p, 1, 1.0);
  const auto ta = simulate(a, p, basis, {}, 0.1, 10);
  const auto tb = simulate(a, p, basis, {}, 0.2, 10);
  EXPECT_THROW(check_gamma_growth(ta, tb, p, basis, k), ShapeMismatch);
}

TEST(SampleQm, AllOnesHasFiniteMStar) {
  const SineBasis basis(interval(8));
  const OregonatorParams p;
  QmSampling s;
  s.base_points = 2;
  s.frames = 2;
  s.settle = 0.5;
  s.spacing = 0.2;
  s.run.m = 3;
  s.run.horizon = 1.0;
  s.run.burn_in = 0.2;
  const auto out = sample_qm(random_nonnegative_state(basis, p, 1, 3.0), p, basis, {}, s);
  EXPECT_EQ(out.runs, 4);
  ASSERT_TRUE(out.m_star.has_value());
  EXPECT_EQ(*out.m_star, 1);
  ASSERT_EQ(out.q_max.size(), 3u);
}

}  // namespace
