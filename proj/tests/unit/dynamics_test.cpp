#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oregonator/dynamics.hpp"

namespace {

using namespace oregonator;
constexpr double pi = std::numbers::pi;

DomainSpec interval(int modes, double L = 1.0) {
  DomainSpec d;
  d.L1 = L;
  d.modes = modes;
  d.grid = 2 * modes;
  return d;
}

OregonatorParams uneven_params() {
  OregonatorParams p;
  p.d1 = 1.0;
  p.d2 = 0.7;
  p.d3 = 1.3;
  p.a1 = 1.1;
  p.b1 = 0.9;
  p.b2 = 1.2;
  p.c2 = 0.8;
  p.a3 = 1.05;
  p.c3 = 0.95;
  p.F = 1.15;
  p.G1 = 0.85;
  p.G2 = 1.25;
  return p;
}

double distance(const FieldTriple& a, const FieldTriple& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  return std::sqrt(s);
}

// Galerkin right-hand side built from T[a][b][j] = ∫ e_a e_b e_j dx, with the
// triple integrals taken by dense Simpson quadrature. Shares no code with the
// transform path.
class DenseGalerkin {
 public:
  DenseGalerkin(const OregonatorParams& p, int M, double L) : p_(p), M_(M), L_(L) {
    T_.assign(static_cast<std::size_t>(M) * M * M, 0.0);
    const int n = 20000;
    std::vector<std::vector<double>> e(M, std::vector<double>(n + 1));
    for (int j = 0; j < M; ++j)
      for (int i = 0; i <= n; ++i)
        e[j][i] = std::sqrt(2.0 / L) * std::sin((j + 1) * pi * (L * i / n) / L);
    for (int a = 0; a < M; ++a)
      for (int b = a; b < M; ++b)
        for (int j = 0; j < M; ++j) {
          double acc = 0.0;
          for (int i = 0; i <= n; ++i) {
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * e[a][i] * e[b][i] * e[j][i];
          }
          acc *= L / (3.0 * n);
          at(a, b, j) = acc;
          at(b, a, j) = acc;
        }
  }

  FieldTriple rhs(const FieldTriple& c) const {
    FieldTriple out;
    const auto d = p_.diffusion();
    for (int i = 0; i < 3; ++i) out[i].assign(M_, 0.0);
    for (int j = 0; j < M_; ++j) {
      const double lam = pi * pi * (j + 1) * (j + 1) / (L_ * L_);
      const double u = c[0][j], v = c[1][j], w = c[2][j];
      out[0][j] = -d[0] * lam * u + p_.a1 * u + p_.b1 * v;
      out[1][j] = -d[1] * lam * v - p_.b2 * v + p_.c2 * w;
      out[2][j] = -d[2] * lam * w + p_.a3 * u - p_.c3 * w;
      double uu = 0.0, uv = 0.0;
      for (int a = 0; a < M_; ++a)
        for (int b = 0; b < M_; ++b) {
          uu += at(a, b, j) * c[0][a] * c[0][b];
          uv += at(a, b, j) * c[0][a] * c[1][b];
        }
      out[0][j] += -p_.F * uu - p_.G1 * uv;
      out[1][j] += -p_.G2 * uv;
    }
    return out;
  }

  FieldTriple rk4(FieldTriple c, double horizon, int steps) const {
    const double h = horizon / steps;
    auto add = [](const FieldTriple& x, const FieldTriple& k, double s) {
      FieldTriple y = x;
      for (int i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < y[i].size(); ++j) y[i][j] += s * k[i][j];
      return y;
    };
    for (int s = 0; s < steps; ++s) {
      const FieldTriple k1 = rhs(c);
      const FieldTriple k2 = rhs(add(c, k1, h / 2));
      const FieldTriple k3 = rhs(add(c, k2, h / 2));
      const FieldTriple k4 = rhs(add(c, k3, h));
      for (int i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < c[i].size(); ++j)
          c[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
    }
    return c;
  }

 private:
  double& at(int a, int b, int j) { return T_[(static_cast<std::size_t>(a) * M_ + b) * M_ + j]; }
  double at(int a, int b, int j) const {
    return T_[(static_cast<std::size_t>(a) * M_ + b) * M_ + j];
  }
  OregonatorParams p_;
  int M_;
  double L_;
  std::vector<double> T_;
};

SpectralState smooth_bump(const SineBasis& basis) {
  SpectralState s = SpectralState::zero(basis);
  s.u()[0] = 0.9;
  s.u()[2] = 0.15;
  s.v()[0] = 0.6;
  s.v()[1] = -0.1;
  s.w()[0] = 0.4;
  s.w()[2] = 0.05;
  return s;
}

TEST(Reaction, Examples) {
  const OregonatorParams p;
  EXPECT_EQ(reaction(p, 0, 0, 0), (std::array<double, 3>{0.0, 0.0, 0.0}));
  EXPECT_EQ(reaction(p, 1, 1, 1), (std::array<double, 3>{0.0, -1.0, 0.0}));
  EXPECT_EQ(reaction(p, 2, 0, 1), (std::array<double, 3>{-2.0, 1.0, 1.0}));
}

TEST(RescaleW, Examples) {
  OregonatorParams p;
  p.c2 = 3.0;
  p.b2 = 1.5;
  for (double x : rescale_w(p, std::vector<double>(5, 2.0))) EXPECT_DOUBLE_EQ(x, 4.0);
  p.c2 = p.b2 = 0.7;
  const std::vector<double> w{0.3, -1.2, 5.0};
  EXPECT_EQ(rescale_w(p, w), w);
  for (double x : rescale_w(p, std::vector<double>(4, 0.0))) EXPECT_EQ(x, 0.0);
}

TEST(ReactionLinear, MatchesPointwiseReactionMinusQuadratic) {
  const OregonatorParams p = uneven_params();
  FieldTriple x{{{0.3, -1.0}, {2.0, 0.5}, {-0.7, 1.1}}};
  const FieldTriple lin = reaction_linear(p, x);
  for (std::size_t k = 0; k < 2; ++k) {
    const double u = x[0][k], v = x[1][k], w = x[2][k];
    const auto f = reaction(p, u, v, w);
    EXPECT_NEAR(lin[0][k], f[0] + p.F * u * u + p.G1 * u * v, 1e-14);
    EXPECT_NEAR(lin[1][k], f[1] + p.G2 * u * v, 1e-14);
    EXPECT_NEAR(lin[2][k], f[2], 1e-14);
  }
}

TEST(Step, PureDiffusionSingleMode) {
  const SineBasis basis(interval(16));
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.reaction_enabled = false;
  SpectralState s = SpectralState::zero(basis);
  s.u()[0] = 1.0;
  const SpectralState out = step(s, OregonatorParams{}, basis, cfg);
  EXPECT_NEAR(out.u()[0], std::exp(-pi * pi * 0.01), 1e-15);
  EXPECT_DOUBLE_EQ(out.t, 0.01);
}

TEST(Step, LinearRegimeIsExactPerMode) {
  const DomainSpec d = interval(12, 1.7);
  const SineBasis basis(d);
  const OregonatorParams p = uneven_params();
  IntegratorConfig cfg;
  cfg.dt = 0.003;
  cfg.reaction_enabled = false;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  SpectralState s = SpectralState::zero(basis);
  for (auto& f : s.fields)
    for (double& c : f) c = normal(rng);
  const Trajectory traj = simulate(s, p, basis, cfg, 0.3, 25);
  const double t = traj.final_state().t;
  EXPECT_NEAR(t, 0.3, 1e-12);
  const auto d_i = p.diffusion();
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < s.fields[i].size(); ++j) {
      const double exact = s.fields[i][j] * std::exp(-d_i[i] * basis.eigenvalues()[j] * t);
      EXPECT_NEAR(traj.final_state().fields[i][j], exact, 1e-13 * (1.0 + std::abs(exact)));
    }
}

TEST(Step, ZeroStateStaysZero) {
  const SineBasis basis(interval(16));
  for (Scheme scheme : {Scheme::imex_euler, Scheme::imex_rk2}) {
    IntegratorConfig cfg;
    cfg.scheme = scheme;
    const Trajectory traj =
        simulate(SpectralState::zero(basis), OregonatorParams{}, basis, cfg, 0.05, 5);
    for (const auto& sample : traj.samples)
      for (const auto& f : sample.state.fields)
        for (double c : f) EXPECT_EQ(c, 0.0);
  }
}

TEST(Step, OneEulerStepMatchesDenseOracleToSecondOrder) {
  const int M = 6;
  const double L = 1.3;
  const SineBasis basis(interval(M, L));
  const OregonatorParams p = uneven_params();
  const DenseGalerkin oracle(p, M, L);
  const SpectralState s0 = smooth_bump(basis);
  std::vector<double> err;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    const SpectralState s1 = step(s0, p, basis, cfg);
    const FieldTriple ref = oracle.rk4(s0.fields, dt, 200);
    err.push_back(distance(s1.fields, ref));
  }
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double order = std::log2(err[k] / err[k + 1]);
    EXPECT_GT(order, 1.8) << "local error should be O(dt^2)";
  }
  EXPECT_LT(err.back(), 1e-5);
}

TEST(Step, RhsAgreesWithDenseOracle) {
  const int M = 6;
  const double L = 1.3;
  const SineBasis basis(interval(M, L));
  const OregonatorParams p = uneven_params();
  const DenseGalerkin oracle(p, M, L);
  const SpectralState s0 = smooth_bump(basis);
  const Integrator integ(p, basis, IntegratorConfig{});
  FieldTriple rhs = integ.reaction_coefficients_of(s0.fields);
  const auto d = p.diffusion();
  for (int i = 0; i < 3; ++i) {
    const auto lap = basis.apply_laplacian(s0.fields[i]);
    for (int j = 0; j < M; ++j) rhs[i][j] += d[i] * lap[j];
  }
  EXPECT_LT(distance(rhs, oracle.rhs(s0.fields)), 1e-10);
}

double observed_order(Scheme scheme) {
  const int M = 6;
  const double L = 1.0;
  const SineBasis basis(interval(M, L));
  const OregonatorParams p = uneven_params();
  const DenseGalerkin oracle(p, M, L);
  const SpectralState s0 = smooth_bump(basis);
  const double T = 0.2;
  const FieldTriple ref = oracle.rk4(s0.fields, T, 8000);
  std::vector<double> err;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.scheme = scheme;
    const Trajectory traj = simulate(s0, p, basis, cfg, T, 1000);
    err.push_back(distance(traj.final_state().fields, ref));
  }
  return std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2]));
}

TEST(Convergence, ImexEulerIsFirstOrder) { EXPECT_GE(observed_order(Scheme::imex_euler), 0.9); }

TEST(Convergence, ImexRk2IsSecondOrder) { EXPECT_GE(observed_order(Scheme::imex_rk2), 1.9); }

TEST(Simulate, ZeroHorizonKeepsOnlyInitialState) {
  const SineBasis basis(interval(16));
  const SpectralState g0 = smooth_bump(basis);
  const Trajectory traj = simulate(g0, OregonatorParams{}, basis, IntegratorConfig{}, 0.0);
  ASSERT_EQ(traj.samples.size(), 1u);
  EXPECT_EQ(traj.samples[0].state.fields, g0.fields);
  EXPECT_EQ(traj.samples[0].t, 0.0);
}

TEST(Simulate, NegativeHorizonThrows) {
  const SineBasis basis(interval(8));
  EXPECT_THROW(simulate(smooth_bump(basis), OregonatorParams{}, basis, {}, -1.0), Error);
}

TEST(Simulate, SamplingCadence) {
  const SineBasis basis(interval(8));
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  const Trajectory traj = simulate(smooth_bump(basis), OregonatorParams{}, basis, cfg, 0.25, 10);
  // steps 0, 10, 20 and the final step 25
  ASSERT_EQ(traj.samples.size(), 4u);
  EXPECT_NEAR(traj.samples[1].t, 0.1, 1e-12);
  EXPECT_NEAR(traj.samples.back().t, 0.25, 1e-12);
}

TEST(Simulate, BlowUpRaisesNonFiniteStateWithTime) {
  const SineBasis basis(interval(16));
  SpectralState g0 = SpectralState::zero(basis);
  g0.u()[0] = -50.0;  // u < 0 makes -F u² drive u to -∞
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  try {
    simulate(g0, OregonatorParams{}, basis, cfg, 5.0);
    FAIL() << "expected NonFiniteState";
  } catch (const NonFiniteState& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LT(e.time(), 5.0);
  }
}

TEST(Step, ClippingIsNoOpOnNonnegativeData) {
  const SineBasis basis(interval(16));
  const OregonatorParams p;
  IntegratorConfig plain, clipped;
  clipped.clip_negatives = true;
  SpectralState g0 = SpectralState::zero(basis);
  g0.u()[0] = g0.v()[0] = g0.w()[0] = 0.5;
  const SpectralState a = step(g0, p, basis, plain);
  const SpectralState b = step(g0, p, basis, clipped);
  EXPECT_EQ(a.fields, b.fields);
}

TEST(Step, ClippingRemovesNegativeGridValues) {
  const SineBasis basis(interval(16));
  const OregonatorParams p;
  IntegratorConfig cfg;
  cfg.clip_negatives = true;
  cfg.reaction_enabled = false;
  SpectralState g0 = SpectralState::zero(basis);
  g0.u()[0] = 0.2;
  g0.u()[1] = 1.0;  // sign-changing
  const SpectralState out = step(g0, p, basis, cfg);
  IntegratorConfig plain = cfg;
  plain.clip_negatives = false;
  const SpectralState unclipped = step(g0, p, basis, plain);
  const auto gc = basis.synthesize(out.u());
  const auto gu = basis.synthesize(unclipped.u());
  EXPECT_LT(*std::min_element(gu.begin(), gu.end()), -0.1);
  EXPECT_GT(*std::min_element(gc.begin(), gc.end()), *std::min_element(gu.begin(), gu.end()));
}

TEST(InitialData, NonnegativeWithRequestedEnergy) {
  for (const DomainSpec& d : {interval(64, 1.4), [] {
         DomainSpec r;
         r.dimension = 2;
         r.L1 = 1.0;
         r.L2 = 1.6;
         r.modes = 16;
         r.grid = 32;
         return r;
       }()}) {
    const SineBasis basis(d);
    const OregonatorParams p = uneven_params();
    const double M2 = p.c2 * p.c2 / (p.b2 * p.c3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SpectralState s = random_nonnegative_state(basis, p, seed, 3.5);
      const FieldTriple g = synthesize(basis, s.fields);
      EXPECT_GE(min_value(g), -1e-13);
      const double E = basis.l2_norm_sq(s.u()) + basis.l2_norm_sq(s.v()) +
                       M2 * basis.l2_norm_sq(s.w());
      EXPECT_NEAR(E, 3.5, 1e-12);
      EXPECT_EQ(random_nonnegative_state(basis, p, seed, 3.5).fields, s.fields);
    }
  }
}

TEST(Positivity, RandomNonnegativeDataStaysInCone) {
  const SineBasis basis(interval(32));
  const OregonatorParams p;
  IntegratorConfig cfg;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const SpectralState g0 = random_nonnegative_state(basis, p, seed, 8.0);
    const Trajectory traj = simulate(g0, p, basis, cfg, 1.0, 20);
    EXPECT_GE(traj.min_grid(), -cfg.pos_tol) << "seed " << seed;
  }
}

TEST(Positivity, RectangleStaysInCone) {
  DomainSpec d;
  d.dimension = 2;
  d.L1 = 1.0;
  d.L2 = 1.5;
  d.modes = 12;
  d.grid = 24;
  const SineBasis basis(d);
  const OregonatorParams p;
  IntegratorConfig cfg;
  const SpectralState g0 = random_nonnegative_state(basis, p, 9, 5.0);
  const Trajectory traj = simulate(g0, p, basis, cfg, 0.5, 20);
  EXPECT_GE(traj.min_grid(), -cfg.pos_tol);
}

// Initial data with algebraically decaying coefficients (not band-limited),
// so truncation differences between resolutions are well above round-off.
SpectralState rough_profile(const SineBasis& basis) {
  SpectralState s = SpectralState::zero(basis);
  // x(1-x) = Σ_{j odd} 8/(π³ j³) sin(jπx) = Σ c_j √2 sin(jπx)
  for (int j = 1; j <= basis.modes(); j += 2) {
    const double c = 8.0 / (pi * pi * pi * j * j * j) / std::sqrt(2.0);
    s.u()[j - 1] = 4.0 * c;
    s.v()[j - 1] = 2.0 * c;
    s.w()[j - 1] = 3.0 * c;
  }
  return s;
}

TEST(Convergence, GalerkinDifferencesShrinkUnderRefinement) {
  const OregonatorParams p;
  IntegratorConfig cfg;
  cfg.dt = 1e-4;
  cfg.scheme = Scheme::imex_rk2;
  const double T = 0.01;
  std::vector<SpectralState> finals;
  for (int M : {8, 16, 32, 64}) {
    const SineBasis basis(interval(M));
    finals.push_back(simulate(rough_profile(basis), p, basis, cfg, T, 1000).final_state());
  }
  std::vector<double> diffs;
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    const auto& coarse = finals[k].fields;
    const auto& fine = finals[k + 1].fields;
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < fine[i].size(); ++j) {
        const double c = j < coarse[i].size() ? coarse[i][j] : 0.0;
        s += (fine[i][j] - c) * (fine[i][j] - c);
      }
    diffs.push_back(std::sqrt(s));
  }
  for (std::size_t k = 0; k + 1 < diffs.size(); ++k) EXPECT_LT(diffs[k + 1], diffs[k]);
}

TEST(IntegratorConfig, RejectsNonPositiveDt) {
  IntegratorConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), NonPositiveParameter);
}

}  // namespace
