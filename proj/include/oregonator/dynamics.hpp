#pragma once

// Galerkin truncation of the Oregonator system and its time integration.
//
// Diffusion is integrated exactly per mode; the reaction is treated
// explicitly with exponential time differencing (first-order ETD for the
// IMEX-Euler scheme, the Cox–Matthews ETD2RK scheme for IMEX-RK2).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "oregonator/errors.hpp"
#include "oregonator/model.hpp"
#include "oregonator/spectral.hpp"

namespace oregonator {

/// Three sine-coefficient arrays (u, v, w).
using FieldTriple = std::array<std::vector<double>, 3>;

struct SpectralState {
  double t = 0.0;
  FieldTriple fields;

  static SpectralState zero(const SineBasis& basis, double t = 0.0) {
    SpectralState s;
    s.t = t;
    for (auto& f : s.fields) f.assign(basis.coeff_size(), 0.0);
    return s;
  }

  std::vector<double>& u() { return fields[0]; }
  std::vector<double>& v() { return fields[1]; }
  std::vector<double>& w() { return fields[2]; }
  const std::vector<double>& u() const { return fields[0]; }
  const std::vector<double>& v() const { return fields[1]; }
  const std::vector<double>& w() const { return fields[2]; }
};

enum class Scheme { imex_euler, imex_rk2 };

inline std::string_view to_string(Scheme s) {
  return s == Scheme::imex_euler ? "imex_euler" : "imex_rk2";
}

struct IntegratorConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::imex_euler;
  double pos_tol = 1e-8;
  bool clip_negatives = false;
  /// Switches the reaction off entirely (pure diffusion); for linear checks.
  bool reaction_enabled = true;
  double blowup_threshold = 1e12;

  void validate() const {
    if (!(dt > 0.0)) throw NonPositiveParameter("dt");
    if (!(pos_tol >= 0.0)) throw NonPositiveParameter("pos_tol");
  }
};

/// Pointwise reaction terms f(u, v, w).
inline std::array<double, 3> reaction(const OregonatorParams& p, double u, double v, double w) {
  return {p.a1 * u + p.b1 * v - p.F * u * u - p.G1 * u * v,
          -p.b2 * v + p.c2 * w - p.G2 * u * v,
          p.a3 * u - p.c3 * w};
}

/// Linear part of the reaction, (a1 u + b1 v, -b2 v + c2 w, a3 u - c3 w),
/// applied componentwise to coefficients or grid values alike.
inline FieldTriple reaction_linear(const OregonatorParams& p, const FieldTriple& x) {
  FieldTriple out;
  for (auto& f : out) f.resize(x[0].size());
  for (std::size_t k = 0; k < x[0].size(); ++k) {
    out[0][k] = p.a1 * x[0][k] + p.b1 * x[1][k];
    out[1][k] = -p.b2 * x[1][k] + p.c2 * x[2][k];
    out[2][k] = p.a3 * x[0][k] - p.c3 * x[2][k];
  }
  return out;
}

/// W = (c2/b2) w, applied to grid values or coefficients alike.
inline std::vector<double> rescale_w(const OregonatorParams& p, std::span<const double> w) {
  const double s = p.c2 / p.b2;
  std::vector<double> out(w.begin(), w.end());
  for (double& x : out) x *= s;
  return out;
}

/// Grid values of all three fields.
inline FieldTriple synthesize(const SineBasis& basis, const FieldTriple& coeffs) {
  FieldTriple g;
  for (int i = 0; i < 3; ++i) g[i] = basis.synthesize(coeffs[i]);
  return g;
}

inline double min_value(const FieldTriple& grid) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& f : grid)
    for (double x : f) m = std::min(m, x);
  return grid[0].empty() ? 0.0 : m;
}

inline double max_abs_value(const FieldTriple& grid) {
  double m = 0.0;
  for (const auto& f : grid)
    for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

namespace detail {

// φ1(z) = (e^z - 1)/z,  φ2(z) = (e^z - 1 - z)/z²
inline double phi1(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
  return std::expm1(z) / z;
}

inline double phi2(double z) {
  if (std::abs(z) < 1e-2)
    return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0 + z * z * z * z / 720.0;
  return (std::expm1(z) - z) / (z * z);
}

}  // namespace detail

/// Per-mode exponential propagators for diffusion coefficients (d1, d2, d3).
class DiffusionPropagator {
 public:
  DiffusionPropagator(const SineBasis& basis, std::array<double, 3> diffusion, double dt) {
    const auto lam = basis.eigenvalues();
    for (int i = 0; i < 3; ++i) {
      decay_[i].resize(lam.size());
      phi1_dt_[i].resize(lam.size());
      phi2_dt_[i].resize(lam.size());
      for (std::size_t j = 0; j < lam.size(); ++j) {
        const double z = -diffusion[i] * lam[j] * dt;
        decay_[i][j] = std::exp(z);
        phi1_dt_[i][j] = dt * detail::phi1(z);
        phi2_dt_[i][j] = dt * detail::phi2(z);
      }
    }
  }

  /// out = E c + dt φ1 N
  void etd1(const FieldTriple& c, const FieldTriple& N, FieldTriple& out) const {
    for (int i = 0; i < 3; ++i) {
      out[i].resize(c[i].size());
      for (std::size_t j = 0; j < c[i].size(); ++j)
        out[i][j] = decay_[i][j] * c[i][j] + phi1_dt_[i][j] * N[i][j];
    }
  }

  /// a += dt φ2 (Na - N)
  void etd2_correct(FieldTriple& a, const FieldTriple& Na, const FieldTriple& N) const {
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < a[i].size(); ++j)
        a[i][j] += phi2_dt_[i][j] * (Na[i][j] - N[i][j]);
  }

  /// Pure diffusion, c ↦ E c.
  void decay(FieldTriple& c) const {
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < c[i].size(); ++j) c[i][j] *= decay_[i][j];
  }

 private:
  std::array<std::vector<double>, 3> decay_, phi1_dt_, phi2_dt_;
};

/// Advances spectral states of one (parameters, domain, config) triple.
class Integrator {
 public:
  Integrator(const OregonatorParams& p, const SineBasis& basis, const IntegratorConfig& cfg)
      : p_(p), basis_(basis), cfg_(cfg), prop_(basis, p.diffusion(), cfg.dt) {
    validate_params(p);
    cfg.validate();
  }

  const OregonatorParams& params() const { return p_; }
  const SineBasis& basis() const { return basis_; }
  const IntegratorConfig& config() const { return cfg_; }
  const DiffusionPropagator& propagator() const { return prop_; }

  /// Projected reaction term for a state with coefficients `coeffs` and grid
  /// values `grid`. The linear part acts on coefficients directly; the
  /// quadratic part u·(-F u - G1 v), u·(-G2 v) is projected exactly.
  FieldTriple reaction_coefficients(const FieldTriple& coeffs, const FieldTriple& grid) const {
    FieldTriple out = reaction_linear(p_, coeffs);
    const std::size_t G = basis_.grid_size();
    std::vector<double> q1(G), q2(G);
    for (std::size_t k = 0; k < G; ++k) {
      const double u = grid[0][k], v = grid[1][k];
      q1[k] = u * (-p_.F * u - p_.G1 * v);
      q2[k] = -p_.G2 * u * v;
    }
    const std::vector<double> n1 = basis_.project_product(q1);
    const std::vector<double> n2 = basis_.project_product(q2);
    for (std::size_t j = 0; j < out[0].size(); ++j) {
      out[0][j] += n1[j];
      out[1][j] += n2[j];
    }
    return out;
  }

  FieldTriple reaction_coefficients_of(const FieldTriple& coeffs) const {
    return reaction_coefficients(coeffs, synthesize(basis_, coeffs));
  }

  /// Throws NonFiniteState(t) if the grid values are non-finite or exceed the
  /// blow-up threshold.
  void guard(const FieldTriple& grid, double t) const {
    for (const auto& f : grid)
      for (double x : f)
        if (!std::isfinite(x) || std::abs(x) > cfg_.blowup_threshold) throw NonFiniteState(t);
  }

  /// One step of size dt from `s`, whose grid values are `grid`.
  SpectralState step_from_grid(const SpectralState& s, const FieldTriple& grid) const {
    guard(grid, s.t);
    SpectralState out;
    out.t = s.t + cfg_.dt;
    if (!cfg_.reaction_enabled) {
      out.fields = s.fields;
      prop_.decay(out.fields);
    } else {
      const FieldTriple N = reaction_coefficients(s.fields, grid);
      prop_.etd1(s.fields, N, out.fields);
      if (cfg_.scheme == Scheme::imex_rk2) {
        const FieldTriple Na = reaction_coefficients_of(out.fields);
        prop_.etd2_correct(out.fields, Na, N);
      }
    }
    if (cfg_.clip_negatives) {
      for (int i = 0; i < 3; ++i) {
        std::vector<double> g = basis_.synthesize(out.fields[i]);
        bool any = false;
        for (double& x : g)
          if (x < 0.0) {
            x = 0.0;
            any = true;
          }
        if (any) out.fields[i] = basis_.analyze(g);
      }
    }
    for (const auto& f : out.fields)
      for (double c : f)
        if (!std::isfinite(c)) throw NonFiniteState(out.t);
    return out;
  }

  SpectralState step(const SpectralState& s) const {
    return step_from_grid(s, synthesize(basis_, s.fields));
  }

 private:
  OregonatorParams p_;
  const SineBasis& basis_;
  IntegratorConfig cfg_;
  DiffusionPropagator prop_;
};

/// Single step; convenience wrapper that builds the propagator tables.
inline SpectralState step(const SpectralState& s, const OregonatorParams& p,
                          const SineBasis& basis, const IntegratorConfig& cfg) {
  return Integrator(p, basis, cfg).step(s);
}

struct TrajectorySample {
  double t = 0.0;
  double min_grid = 0.0;
  SpectralState state;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double dt = 0.0;
  /// Most negative grid value seen across all samples.
  double min_grid() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) m = std::min(m, s.min_grid);
    return samples.empty() ? 0.0 : m;
  }
  const SpectralState& final_state() const { return samples.back().state; }
};

/// Number of steps covering [0, horizon] with step dt.
inline std::int64_t step_count(double horizon, double dt) {
  return static_cast<std::int64_t>(std::llround(horizon / dt));
}

/// Integrates from g0 over [g0.t, g0.t + horizon], recording every
/// `sample_every`-th state (the initial and final states are always kept).
inline Trajectory simulate(const SpectralState& g0, const Integrator& integ, double horizon,
                           std::int64_t sample_every = 10) {
  if (horizon < 0.0) throw Error("simulate: negative horizon");
  if (sample_every < 1) sample_every = 1;
  const SineBasis& basis = integ.basis();
  Trajectory traj;
  traj.dt = integ.config().dt;
  const std::int64_t steps = step_count(horizon, traj.dt);

  SpectralState s = g0;
  FieldTriple grid = synthesize(basis, s.fields);
  integ.guard(grid, s.t);
  traj.samples.push_back({s.t, min_value(grid), s});
  for (std::int64_t k = 1; k <= steps; ++k) {
    s = integ.step_from_grid(s, grid);
    s.t = g0.t + static_cast<double>(k) * traj.dt;
    grid = synthesize(basis, s.fields);
    integ.guard(grid, s.t);
    if (k % sample_every == 0 || k == steps) traj.samples.push_back({s.t, min_value(grid), s});
  }
  return traj;
}

inline Trajectory simulate(const SpectralState& g0, const OregonatorParams& p,
                           const SineBasis& basis, const IntegratorConfig& cfg, double horizon,
                           std::int64_t sample_every = 10) {
  const Integrator integ(p, basis, cfg);
  return simulate(g0, integ, horizon, sample_every);
}

// ---------------------------------------------------------------------------
// Initial data

/// Sine coefficients (per axis) of sin(πx/L)·(a0 + Σ_k a_k cos(kπx/L)), which
/// is nonnegative whenever a0 ≥ Σ|a_k|.
inline std::vector<double> nonnegative_profile(std::mt19937_64& rng, int modes, double L,
                                               int bandwidth) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0), lift(0.1, 1.0);
  const int K = std::max(0, std::min(bandwidth, modes - 1));
  std::vector<double> a(K + 1, 0.0);
  double total = 0.0;
  for (int k = 1; k <= K; ++k) {
    a[k] = unit(rng) / k;
    total += std::abs(a[k]);
  }
  a[0] = total + lift(rng);

  // sin(x)cos(kx) = (sin((k+1)x) - sin((k-1)x)) / 2; e_j = √(2/L) sin(jπx/L).
  std::vector<double> c(modes, 0.0);
  c[0] += a[0];
  for (int k = 1; k <= K; ++k) {
    c[k] += 0.5 * a[k];                  // mode k+1
    if (k >= 2) c[k - 2] -= 0.5 * a[k];  // mode k-1
  }
  const double to_orthonormal = std::sqrt(L / 2.0);
  for (double& x : c) x *= to_orthonormal;
  return c;
}

/// Random, smooth, band-limited state that is nonnegative everywhere, scaled
/// so that ‖u‖² + ‖v‖² + M2‖w‖² equals `weighted_energy`.
inline SpectralState random_nonnegative_state(const SineBasis& basis, const OregonatorParams& p,
                                              std::uint64_t seed, double weighted_energy,
                                              int bandwidth = 4) {
  std::mt19937_64 rng(seed);
  const DomainSpec& dom = basis.domain();
  SpectralState s = SpectralState::zero(basis);
  for (int i = 0; i < 3; ++i) {
    const std::vector<double> px = nonnegative_profile(rng, dom.modes, dom.L1, bandwidth);
    if (dom.dimension == 1) {
      s.fields[i] = px;
    } else {
      const std::vector<double> py = nonnegative_profile(rng, dom.modes, dom.L2, bandwidth);
      for (int a = 0; a < dom.modes; ++a)
        for (int b = 0; b < dom.modes; ++b)
          s.fields[i][static_cast<std::size_t>(a) * dom.modes + b] = px[a] * py[b];
    }
  }
  // Random split of the energy between the species.
  std::uniform_real_distribution<double> share(0.5, 1.5);
  const double M2 = p.c2 * p.c2 / (p.b2 * p.c3);
  std::array<double, 3> weight{share(rng), share(rng), share(rng)};
  const double wsum = weight[0] + weight[1] + weight[2];
  for (int i = 0; i < 3; ++i) {
    const double species_weight = i == 2 ? M2 : 1.0;
    const double current = species_weight * basis.l2_norm_sq(s.fields[i]);
    const double target = weighted_energy * weight[i] / wsum;
    const double scale = current > 0.0 ? std::sqrt(target / current) : 0.0;
    for (double& c : s.fields[i]) c *= scale;
  }
  return s;
}

}  // namespace oregonator
