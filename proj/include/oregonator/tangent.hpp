#pragma once

// Linearized (variational) flow dZ/dt = (A + f'(g(t))) Z along a base
// trajectory, Benettin-style Lyapunov exponents, the trace functional q_m
// and the norm quotient Γ(t) of two trajectories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "oregonator/bounds.hpp"
#include "oregonator/dynamics.hpp"
#include "oregonator/errors.hpp"
#include "oregonator/model.hpp"
#include "oregonator/spectral.hpp"

namespace oregonator {

/// f'(u,v,w)·(U,V,W) pointwise on grid values:
///   a1 U + b1 V - 2F u U - G1 v U - G1 u V
///   -b2 V + c2 W - G2 v U - G2 u V
///   a3 U - c3 W
inline FieldTriple jacobian_apply(const OregonatorParams& p, const FieldTriple& base,
                                  const FieldTriple& tangent) {
  const std::size_t G = base[0].size();
  for (int i = 0; i < 3; ++i)
    if (base[i].size() != G || tangent[i].size() != G)
      throw ShapeMismatch("jacobian_apply: base and tangent grids differ");
  FieldTriple out;
  for (auto& f : out) f.resize(G);
  for (std::size_t k = 0; k < G; ++k) {
    const double u = base[0][k], v = base[1][k];
    const double U = tangent[0][k], V = tangent[1][k], W = tangent[2][k];
    out[0][k] = p.a1 * U + p.b1 * V - 2.0 * p.F * u * U - p.G1 * v * U - p.G1 * u * V;
    out[1][k] = -p.b2 * V + p.c2 * W - p.G2 * v * U - p.G2 * u * V;
    out[2][k] = p.a3 * U - p.c3 * W;
  }
  return out;
}

/// Reusable buffers for project_jacobian.
struct JacobianScratch {
  FieldTriple zg;
  std::vector<double> q1, q2, n1, n2;
};

/// Projection of f'(base)·Z onto the retained modes, given the base grid
/// values. The linear part of f' acts on coefficients; the bilinear part is a
/// sum of products of two retained-mode fields and is projected exactly.
inline void project_jacobian(const OregonatorParams& p, const SineBasis& basis,
                             const FieldTriple& base_grid, const FieldTriple& Z, FieldTriple& out,
                             JacobianScratch& w) {
  const std::size_t G = basis.grid_size(), C = basis.coeff_size();
  for (int i = 0; i < 3; ++i) {
    if (Z[i].size() != C || base_grid[i].size() != G)
      throw ShapeMismatch("project_jacobian: array sizes do not match the domain");
    out[i].resize(C);
  }
  for (int i = 0; i < 2; ++i) {
    w.zg[i].resize(G);
    basis.synthesize(Z[i], w.zg[i]);
  }
  w.q1.resize(G);
  w.q2.resize(G);
  w.n1.resize(C);
  w.n2.resize(C);
  for (std::size_t k = 0; k < G; ++k) {
    const double u = base_grid[0][k], v = base_grid[1][k];
    const double U = w.zg[0][k], V = w.zg[1][k];
    w.q1[k] = -2.0 * p.F * u * U - p.G1 * v * U - p.G1 * u * V;
    w.q2[k] = -p.G2 * v * U - p.G2 * u * V;
  }
  basis.project_product(w.q1, w.n1);
  basis.project_product(w.q2, w.n2);
  for (std::size_t j = 0; j < C; ++j) {
    out[0][j] = p.a1 * Z[0][j] + p.b1 * Z[1][j] + w.n1[j];
    out[1][j] = -p.b2 * Z[1][j] + p.c2 * Z[2][j] + w.n2[j];
    out[2][j] = p.a3 * Z[0][j] - p.c3 * Z[2][j];
  }
}

inline FieldTriple project_jacobian(const OregonatorParams& p, const SineBasis& basis,
                                    const FieldTriple& base_grid, const FieldTriple& Z) {
  FieldTriple out;
  JacobianScratch w;
  project_jacobian(p, basis, base_grid, Z, out, w);
  return out;
}

/// L²(Ω)³ inner product of coefficient triples.
inline double inner(const FieldTriple& a, const FieldTriple& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) s += a[i][j] * b[i][j];
  return s;
}

inline void axpy(double alpha, const FieldTriple& x, FieldTriple& y) {
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < x[i].size(); ++j) y[i][j] += alpha * x[i][j];
}

inline void scale(FieldTriple& x, double alpha) {
  for (auto& f : x)
    for (double& c : f) c *= alpha;
}

/// Frozen-coefficient integrator for tangent vectors: over one step the
/// Jacobian is evaluated at the base state at the start of the step.
/// The W row diffuses with d3.
class TangentFlow {
 public:
  TangentFlow(const OregonatorParams& p, const SineBasis& basis, const IntegratorConfig& cfg)
      : p_(p), basis_(basis), cfg_(cfg), prop_(basis, p.diffusion(), cfg.dt) {}

  /// Projection of f'(base)·Z onto the retained modes.
  FieldTriple linearized(const FieldTriple& base_grid, const FieldTriple& Z) const {
    return project_jacobian(p_, basis_, base_grid, Z);
  }

  FieldTriple step(const FieldTriple& Z, const FieldTriple& base_grid) const {
    FieldTriple out = Z;
    advance(out, base_grid);
    return out;
  }

  /// In-place step. Uses internal buffers, so one TangentFlow must not be
  /// shared between threads.
  void advance(FieldTriple& Z, const FieldTriple& base_grid) const {
    project_jacobian(p_, basis_, base_grid, Z, N_, scratch_);
    prop_.etd1(Z, N_, stage_);
    if (cfg_.scheme == Scheme::imex_rk2) {
      project_jacobian(p_, basis_, base_grid, stage_, Na_, scratch_);
      prop_.etd2_correct(stage_, Na_, N_);
    }
    for (const auto& f : stage_)
      for (double c : f)
        if (!std::isfinite(c)) throw NonFiniteState(0.0);
    std::swap(Z, stage_);
  }

 private:
  OregonatorParams p_;
  const SineBasis& basis_;
  IntegratorConfig cfg_;
  DiffusionPropagator prop_;
  mutable FieldTriple N_, Na_, stage_;
  mutable JacobianScratch scratch_;
};

struct TangentBundle {
  SpectralState base;
  std::vector<FieldTriple> tangents;
  std::vector<double> log_growth;  // Σ log R_jj over accumulated reorthonormalizations
  double accumulated_time = 0.0;
  int reorth_every = 10;
  /// Keeps the base state fixed (linearization about a frozen point).
  bool pin_base = false;

  std::size_t size() const { return tangents.size(); }
};

/// Bundle of m random tangent directions about g0 (not yet orthonormal).
inline TangentBundle make_bundle(const SpectralState& g0, const SineBasis& basis, int m,
                                 std::uint64_t seed) {
  if (m < 1) throw Error("make_bundle: need at least one tangent direction");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TangentBundle b;
  b.base = g0;
  b.tangents.resize(m);
  for (auto& z : b.tangents)
    for (auto& f : z) {
      f.resize(basis.coeff_size());
      for (double& c : f) c = normal(rng);
    }
  b.log_growth.assign(m, 0.0);
  return b;
}

/// Modified Gram–Schmidt in the L² product inner product. Returns the
/// diagonal of R. A direction whose residual norm is below 1e-300, or below
/// 1e-12 of its norm before projection, is rank deficient.
inline std::vector<double> orthonormalize(TangentBundle& bundle) {
  std::vector<double> r(bundle.size());
  for (std::size_t k = 0; k < bundle.size(); ++k) {
    FieldTriple& z = bundle.tangents[k];
    const double before = std::sqrt(inner(z, z));
    for (std::size_t j = 0; j < k; ++j) axpy(-inner(bundle.tangents[j], z), bundle.tangents[j], z);
    const double norm = std::sqrt(inner(z, z));
    if (!(norm >= 1e-300) || norm <= 1e-12 * before) throw RankDeficient(k);
    scale(z, 1.0 / norm);
    r[k] = norm;
  }
  return r;
}

/// Advances base and tangents together by `steps` steps.
inline void evolve_tangent(TangentBundle& bundle, const Integrator& integ, const TangentFlow& flow,
                           std::int64_t steps) {
  const SineBasis& basis = integ.basis();
  FieldTriple grid = synthesize(basis, bundle.base.fields);
  for (std::int64_t s = 0; s < steps; ++s) {
    if (s > 0 && !bundle.pin_base) grid = synthesize(basis, bundle.base.fields);
    for (auto& z : bundle.tangents) flow.advance(z, grid);
    if (bundle.pin_base)
      bundle.base.t += integ.config().dt;
    else
      bundle.base = integ.step_from_grid(bundle.base, grid);
  }
}

/// Advances the bundle over a time span of length `span` with step cfg.dt.
inline void evolve_tangent(TangentBundle& bundle, const OregonatorParams& p,
                           const SineBasis& basis, const IntegratorConfig& cfg, double span) {
  const Integrator integ(p, basis, cfg);
  const TangentFlow flow(p, basis, cfg);
  evolve_tangent(bundle, integ, flow, step_count(span, cfg.dt));
}

/// ⟨(A + f'(g)) φ, φ⟩ for one direction, with ⟨Aφ,φ⟩ = -Σᵢ dᵢ Σⱼ λⱼ φᵢⱼ².
inline double direction_trace(const FieldTriple& phi, const FieldTriple& base_grid,
                              const OregonatorParams& p, const SineBasis& basis) {
  const auto d = p.diffusion();
  double diffusive = 0.0;
  for (int i = 0; i < 3; ++i) diffusive -= d[i] * basis.gradient_norm_sq(phi[i]);
  return diffusive + inner(project_jacobian(p, basis, base_grid, phi), phi);
}

/// Tr (A + f'(g)) ∘ Q_m for an orthonormalized bundle.
inline double trace_qm(const TangentBundle& bundle, const OregonatorParams& p,
                       const SineBasis& basis) {
  const FieldTriple grid = synthesize(basis, bundle.base.fields);
  double s = 0.0;
  for (const auto& phi : bundle.tangents) s += direction_trace(phi, grid, p, basis);
  return s;
}

struct LyapunovOptions {
  int m = 1;
  double horizon = 50.0;  // accumulation time after burn-in
  double burn_in = 1.0;
  int reorth_every = 10;
  bool pin_base = false;
  std::uint64_t frame_seed = 7;
  int windows = 4;
  double drift_tol = 1e-2;
  bool throw_on_drift = false;
};

struct LyapunovResult {
  std::vector<double> exponents;      // μ1 ≥ μ2 ≥ ...
  std::vector<double> q_trace;        // time-averaged trace of the leading k-frame
  std::vector<double> q_exponents;    // Σ_{j≤k} μ_j
  std::optional<int> m_star;          // least k with q_trace[k-1] < 0
  double kaplan_yorke = 0.0;
  double drift = 0.0;                 // max change of μ over the last two windows
  bool converged = true;
  SpectralState final_base;
};

/// Kaplan–Yorke dimension j + Σ_{i≤j} μ_i / |μ_{j+1}|, where j is the largest
/// index with nonnegative partial sum. Returns 0 if μ1 < 0 and m if the
/// partial sums never turn negative.
inline double kaplan_yorke_dimension(std::span<const double> mu) {
  double partial = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (partial + mu[j] < 0.0) return static_cast<double>(j) + partial / std::abs(mu[j]);
    partial += mu[j];
  }
  return static_cast<double>(mu.size());
}

inline std::optional<int> least_negative_index(std::span<const double> q) {
  for (std::size_t k = 0; k < q.size(); ++k)
    if (q[k] < 0.0) return static_cast<int>(k) + 1;
  return std::nullopt;
}

/// Benettin algorithm: evolve base and m tangents, re-orthonormalize every
/// `reorth_every` steps and accumulate log R_jj after the burn-in.
inline LyapunovResult lyapunov_spectrum(const SpectralState& g0, const OregonatorParams& p,
                                        const SineBasis& basis, const IntegratorConfig& cfg,
                                        const LyapunovOptions& opt) {
  const Integrator integ(p, basis, cfg);
  const TangentFlow flow(p, basis, cfg);
  TangentBundle bundle = make_bundle(g0, basis, opt.m, opt.frame_seed);
  bundle.reorth_every = std::max(1, opt.reorth_every);
  bundle.pin_base = opt.pin_base;
  orthonormalize(bundle);

  const double block = bundle.reorth_every * cfg.dt;
  const std::int64_t burn_blocks = static_cast<std::int64_t>(std::ceil(opt.burn_in / block - 1e-9));
  const std::int64_t acc_blocks = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(opt.horizon / block)));
  const int windows = std::max(2, opt.windows);

  for (std::int64_t b = 0; b < burn_blocks; ++b) {
    evolve_tangent(bundle, integ, flow, bundle.reorth_every);
    orthonormalize(bundle);
  }

  const std::size_t m = bundle.size();
  std::vector<double> trace_sum(m, 0.0);
  std::vector<std::vector<double>> window_mu;
  std::int64_t next_window = 1;
  auto trace_now = [&] {
    const FieldTriple grid = synthesize(basis, bundle.base.fields);
    for (std::size_t j = 0; j < m; ++j)
      trace_sum[j] += block * direction_trace(bundle.tangents[j], grid, p, basis);
  };
  for (std::int64_t b = 0; b < acc_blocks; ++b) {
    trace_now();
    evolve_tangent(bundle, integ, flow, bundle.reorth_every);
    const std::vector<double> r = orthonormalize(bundle);
    for (std::size_t j = 0; j < m; ++j) bundle.log_growth[j] += std::log(r[j]);
    bundle.accumulated_time += block;
    if ((b + 1) * windows >= next_window * acc_blocks) {
      ++next_window;
      std::vector<double> mu(m);
      for (std::size_t j = 0; j < m; ++j) mu[j] = bundle.log_growth[j] / bundle.accumulated_time;
      window_mu.push_back(std::move(mu));
    }
  }

  LyapunovResult res;
  res.exponents.resize(m);
  res.q_trace.resize(m);
  res.q_exponents.resize(m);
  double qt = 0.0, qe = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    res.exponents[j] = bundle.log_growth[j] / bundle.accumulated_time;
    qt += trace_sum[j] / bundle.accumulated_time;
    qe += res.exponents[j];
    res.q_trace[j] = qt;
    res.q_exponents[j] = qe;
  }
  res.m_star = least_negative_index(res.q_trace);
  res.kaplan_yorke = kaplan_yorke_dimension(res.exponents);
  if (window_mu.size() >= 2) {
    const auto& last = window_mu.back();
    const auto& prev = window_mu[window_mu.size() - 2];
    for (std::size_t j = 0; j < m; ++j) {
      const double d = std::abs(last[j] - prev[j]);
      res.drift = std::max(res.drift, d);
      if (d > opt.drift_tol * std::max(1.0, std::abs(last[j]))) res.converged = false;
    }
  }
  res.final_base = bundle.base;
  if (!res.converged && opt.throw_on_drift)
    throw NotConverged("Lyapunov exponents drifted by " + std::to_string(res.drift) +
                       " over the last two windows");
  return res;
}

struct QmSampling {
  int base_points = 10;
  int frames = 3;
  double settle = 5.0;    // time before the first base point
  double spacing = 0.5;   // time between base points
  LyapunovOptions run;    // per-run options; frame_seed is varied
};

struct SampledQm {
  std::vector<double> q_max;           // max over runs of q_trace[k]
  std::vector<double> exponents;       // from the first run
  double kaplan_yorke = 0.0;           // from the first run
  std::optional<int> m_star;
  bool converged = true;
  int runs = 0;
};

/// Sampled lower estimate of sup q_m over base points on the attractor and
/// initial frames.
inline SampledQm sample_qm(const SpectralState& g0, const OregonatorParams& p,
                           const SineBasis& basis, const IntegratorConfig& cfg,
                           const QmSampling& opt) {
  const Integrator integ(p, basis, cfg);
  SpectralState base = g0;
  auto advance = [&](double span) {
    const std::int64_t n = step_count(span, cfg.dt);
    for (std::int64_t k = 0; k < n; ++k) base = integ.step(base);
  };
  advance(opt.settle);

  SampledQm out;
  const int m = opt.run.m;
  out.q_max.assign(m, -std::numeric_limits<double>::infinity());
  for (int b = 0; b < opt.base_points; ++b) {
    if (b > 0) advance(opt.spacing);
    for (int f = 0; f < opt.frames; ++f) {
      LyapunovOptions run = opt.run;
      run.frame_seed = opt.run.frame_seed + 1000u * static_cast<std::uint64_t>(b) + f;
      const LyapunovResult r = lyapunov_spectrum(base, p, basis, cfg, run);
      for (int k = 0; k < m; ++k) out.q_max[k] = std::max(out.q_max[k], r.q_trace[k]);
      if (out.runs == 0) {
        out.exponents = r.exponents;
        out.kaplan_yorke = r.kaplan_yorke;
      }
      out.converged = out.converged && r.converged;
      ++out.runs;
    }
  }
  out.m_star = least_negative_index(out.q_max);
  return out;
}

/// ‖(-Δ)^{1/2} y‖² / ‖y‖² with unit diffusion weights.
inline double gamma_quotient(const FieldTriple& y, const SineBasis& basis) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num += basis.gradient_norm_sq(y[i]);
    den += basis.l2_norm_sq(y[i]);
  }
  if (den == 0.0) throw ZeroDifference("gamma_quotient: the two states coincide");
  return num / den;
}

/// ‖(-A)^{1/2} y‖² / ‖y‖², i.e. diffusion-weighted.
inline double gamma_quotient_weighted(const FieldTriple& y, const SineBasis& basis,
                                      const OregonatorParams& p) {
  const auto d = p.diffusion();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num += d[i] * basis.gradient_norm_sq(y[i]);
    den += basis.l2_norm_sq(y[i]);
  }
  if (den == 0.0) throw ZeroDifference("gamma_quotient_weighted: the two states coincide");
  return num / den;
}

inline FieldTriple difference(const SpectralState& a, const SpectralState& b) {
  FieldTriple y;
  for (int i = 0; i < 3; ++i) {
    y[i].resize(a.fields[i].size());
    for (std::size_t j = 0; j < y[i].size(); ++j) y[i][j] = a.fields[i][j] - b.fields[i][j];
  }
  return y;
}

struct GammaCheck {
  std::vector<double> t, gamma, dgamma;
  std::vector<Violation> violations;
  double R_measured = 0.0;
  double rho = 0.0;
  double max_excess = -std::numeric_limits<double>::infinity();  // max dΓ/dt - ρΓ
  bool passed() const { return violations.empty(); }
};

/// dΓ/dt ≤ ρΓ along a pair of trajectories sampled at common times, with
/// ρ = N(R)/d0 and R the largest sampled ‖(u,v,w)‖²_{L⁴}. dΓ/dt is a
/// central difference (one-sided at the ends).
inline GammaCheck check_gamma_growth(const Trajectory& a, const Trajectory& b,
                                     const OregonatorParams& p, const SineBasis& basis,
                                     const DerivedConstants& k, double rel_slack = 1e-6) {
  if (a.samples.size() != b.samples.size() || a.samples.size() < 2)
    throw ShapeMismatch("check_gamma_growth: trajectories must share at least two sample times");
  GammaCheck out;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    out.t.push_back(a.samples[i].t);
    out.gamma.push_back(gamma_quotient(difference(a.samples[i].state, b.samples[i].state), basis));
    out.R_measured = std::max({out.R_measured, measure(a.samples[i].state, p, basis).L4_sq,
                               measure(b.samples[i].state, p, basis).L4_sq});
  }
  out.rho = k.rho(out.R_measured);
  const std::size_t n = out.t.size();
  out.dgamma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
    out.dgamma[i] = (out.gamma[hi] - out.gamma[lo]) / (out.t[hi] - out.t[lo]);
    const double bound = out.rho * out.gamma[i];
    out.max_excess = std::max(out.max_excess, out.dgamma[i] - bound);
    if (out.dgamma[i] > bound * (1.0 + rel_slack))
      out.violations.push_back({"gamma_growth", out.t[i], out.dgamma[i], bound});
  }
  return out;
}

struct DimensionReport {
  std::vector<double> q;           // sampled q_m, m = 1..m_max
  std::vector<double> exponents;   // μ1 ≥ ... ≥ μ_{m_max}
  double kaplan_yorke = 0.0;
  std::optional<int> m_star;
  int dim_bound_m = 1;
  double dim_threshold = 0.0;
  std::optional<double> gamma_max_excess;
  bool gamma_passed = true;
  bool converged = true;
  int runs = 0;
};

}  // namespace oregonator
