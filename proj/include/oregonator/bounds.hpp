#pragma once

// Norm functionals along trajectories and numerical checks of the explicit
// dissipative estimates: the weighted L² and L⁶ Gronwall envelopes, absorbing
// entry, the gradient bound K_E, the L∞ attractor bound and the time-Hölder
// exponent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "oregonator/dynamics.hpp"
#include "oregonator/errors.hpp"
#include "oregonator/model.hpp"
#include "oregonator/spectral.hpp"

namespace oregonator {

/// ‖u‖² + ‖v‖² + M2‖w‖², which equals ‖u‖² + ‖v‖² + (b2/c3)‖W‖² for the
/// rescaled W = (c2/b2) w.
inline double weighted_l2_energy(const SpectralState& s, const OregonatorParams& p) {
  const double M2 = p.c2 * p.c2 / (p.b2 * p.c3);
  auto sq = [](const std::vector<double>& c) {
    double acc = 0.0;
    for (double x : c) acc += x * x;
    return acc;
  };
  return sq(s.u()) + sq(s.v()) + M2 * sq(s.w());
}

/// Norms of one sampled state.
struct BoundsRecord {
  double t = 0.0;
  double E_w = 0.0;    // weighted L² energy
  double l2_sq = 0.0;  // ‖(u,v,w)‖²
  double L6 = 0.0;     // ‖u‖⁶₆ + ‖v‖⁶₆ + ‖w‖⁶₆
  double L6_w = 0.0;   // ‖u‖⁶₆ + ‖v‖⁶₆ + M4‖w‖⁶₆
  double L4_sq = 0.0;  // ‖(u,v,w)‖²_{L⁴} = (Σ ∫ gᵢ⁴)^{1/2}
  double grad_sq = 0.0;  // ‖(∇u,∇v,∇w)‖²
  std::array<double, 3> sup{};  // per-species grid sup-norm
  double linf = 0.0;
  double min_grid = 0.0;
};

inline BoundsRecord measure(const SpectralState& s, const OregonatorParams& p,
                            const SineBasis& basis) {
  BoundsRecord r;
  r.t = s.t;
  r.E_w = weighted_l2_energy(s, p);
  const double M4 = std::pow(p.c2, 6) / (std::pow(p.b2, 5) * p.c3);
  const FieldTriple grid = synthesize(basis, s.fields);
  double l4 = 0.0;
  for (int i = 0; i < 3; ++i) {
    r.l2_sq += basis.l2_norm_sq(s.fields[i]);
    r.grad_sq += basis.gradient_norm_sq(s.fields[i]);
    const double l6 = basis.lp_norm_pow(grid[i], 6);
    r.L6 += l6;
    r.L6_w += (i == 2 ? M4 : 1.0) * l6;
    l4 += basis.lp_norm_pow(grid[i], 4);
    double sup = 0.0;
    for (double x : grid[i]) sup = std::max(sup, std::abs(x));
    r.sup[i] = sup;
  }
  r.L4_sq = std::sqrt(l4);
  r.linf = std::max({r.sup[0], r.sup[1], r.sup[2]});
  r.min_grid = min_value(grid);
  return r;
}

inline std::vector<BoundsRecord> measure(const Trajectory& traj, const OregonatorParams& p,
                                         const SineBasis& basis) {
  std::vector<BoundsRecord> out;
  out.reserve(traj.samples.size());
  for (const auto& s : traj.samples) out.push_back(measure(s.state, p, basis));
  return out;
}

struct Violation {
  std::string check;
  double t = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  double excess() const { return measured - bound; }
};

struct EnvelopeOptions {
  double rel_slack = 1e-6;
  /// Step size of the trajectory; 0 disables the discretization allowance.
  double dt = 0.0;
};

struct EnvelopeCheck {
  std::vector<Violation> violations;
  double max_ratio = 0.0;  // max measured / envelope
  double lipschitz = 0.0;  // local Lipschitz estimate used for the allowance
  bool passed() const { return violations.empty(); }
};

/// ∞-norm of the reaction Jacobian at the largest sampled magnitudes.
inline double local_lipschitz(const std::vector<BoundsRecord>& recs, const OregonatorParams& p) {
  double su = 0.0, sv = 0.0;
  for (const auto& r : recs) {
    su = std::max(su, r.sup[0]);
    sv = std::max(sv, r.sup[1]);
  }
  const double row1 = p.a1 + p.b1 + 2.0 * p.F * su + p.G1 * (su + sv);
  const double row2 = p.b2 + p.c2 + p.G2 * (su + sv);
  const double row3 = p.a3 + p.c3;
  return std::max({row1, row2, row3});
}

namespace detail {

template <class Measured, class Envelope>
EnvelopeCheck check_envelope(const std::vector<BoundsRecord>& recs, const OregonatorParams& p,
                             const EnvelopeOptions& opt, const std::string& name,
                             Measured measured, Envelope envelope) {
  EnvelopeCheck out;
  if (recs.empty()) return out;
  out.lipschitz = local_lipschitz(recs, p);
  const double t0 = recs.front().t;
  for (const auto& r : recs) {
    const double bound = envelope(r.t - t0);
    const double slack = (opt.rel_slack + opt.dt * out.lipschitz) * bound;
    const double m = measured(r);
    if (bound > 0.0) out.max_ratio = std::max(out.max_ratio, m / bound);
    if (m > bound + slack) out.violations.push_back({name, r.t, m, bound + slack});
  }
  return out;
}

}  // namespace detail

/// e^{-2γ d0 t} E_w(0) + M1³|Ω| / (3γ d0 F²)
inline double l2_envelope(const DerivedConstants& k, double E0, double t) {
  return std::exp(-2.0 * k.gamma * k.d0 * t) * E0 + k.l2_asymptote;
}

/// E_w(t) ≤ l2_envelope(E_w(0), t).
inline EnvelopeCheck check_l2_envelope(const std::vector<BoundsRecord>& recs,
                                       const OregonatorParams& p, const DerivedConstants& k,
                                       const EnvelopeOptions& opt = {}) {
  if (recs.empty()) return {};
  const double E0 = recs.front().E_w;
  return detail::check_envelope(
      recs, p, opt, "l2_envelope", [](const BoundsRecord& r) { return r.E_w; },
      [&](double t) { return l2_envelope(k, E0, t); });
}

/// Which L⁶ Gronwall envelope to test against.
///   printed:   rate 10γd0, asymptote M3⁷|Ω| / (10γ d0 F⁶ min{1,M4})
///   corrected: rate (10/3)γd0, asymptote 3× the printed one. Since
///              ∇(u³) = 3u²∇u, the dissipation 5d‖u²∇u‖² equals (5/9)d‖∇u³‖²,
///              not (5/3)d‖∇u³‖², which slows the provable decay by 3.
enum class L6Envelope { printed, corrected };

/// (max{1,M4}/min{1,M4}) e^{-rate·t} ‖(u0,v0,w0)‖⁶₆ + asymptote
inline double l6_envelope(const DerivedConstants& k, double L0, double t,
                          L6Envelope form = L6Envelope::printed) {
  const double pref = std::max(1.0, k.M4) / std::min(1.0, k.M4);
  const double factor = form == L6Envelope::printed ? 1.0 : 3.0;
  const double rate = 10.0 * k.gamma * k.d0 / factor;
  return pref * std::exp(-rate * t) * L0 + factor * k.l6_asymptote;
}

/// ‖(u,v,w)‖⁶₆ ≤ l6_envelope(‖(u0,v0,w0)‖⁶₆, t).
inline EnvelopeCheck check_l6_envelope(const std::vector<BoundsRecord>& recs,
                                       const OregonatorParams& p, const DerivedConstants& k,
                                       const EnvelopeOptions& opt = {},
                                       L6Envelope form = L6Envelope::printed) {
  if (recs.empty()) return {};
  const double L0 = recs.front().L6;
  return detail::check_envelope(
      recs, p, opt, form == L6Envelope::printed ? "l6_envelope" : "l6_envelope_corrected",
      [](const BoundsRecord& r) { return r.L6; },
      [&](double t) { return l6_envelope(k, L0, t, form); });
}

/// First sample time after which `values` stays ≤ radius until the end of
/// the horizon; nullopt if the last sample is still outside.
inline std::optional<double> absorbing_entry_time(std::span<const double> times,
                                                  std::span<const double> values, double radius) {
  if (times.size() != values.size()) throw ShapeMismatch("absorbing_entry_time: size mismatch");
  if (times.empty()) return std::nullopt;
  std::size_t first_inside = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > radius) first_inside = i + 1;
  if (first_inside == values.size()) return std::nullopt;
  return times[first_inside];
}

/// Entry time of the weighted L² energy into the ball of the given radius.
inline std::optional<double> absorbing_entry_time(const std::vector<BoundsRecord>& recs,
                                                  double radius) {
  std::vector<double> t, e;
  for (const auto& r : recs) {
    t.push_back(r.t);
    e.push_back(r.E_w);
  }
  return absorbing_entry_time(t, e, radius);
}

struct SupCheck {
  std::vector<Violation> violations;
  double measured_sup = 0.0;
  std::size_t checked = 0;
  bool passed() const { return violations.empty(); }
};

/// ‖(∇u,∇v,∇w)‖² ≤ K_E for samples with t ≥ from_time.
inline SupCheck check_gradient_bound(const std::vector<BoundsRecord>& recs,
                                     const DerivedConstants& k, double from_time) {
  SupCheck out;
  for (const auto& r : recs) {
    if (r.t < from_time) continue;
    ++out.checked;
    out.measured_sup = std::max(out.measured_sup, r.grad_sq);
    if (r.grad_sq > k.K_E) out.violations.push_back({"gradient_bound", r.t, r.grad_sq, k.K_E});
  }
  return out;
}

/// Grid sup-norm ≤ C(2)(√K1 + 4√K_E L(√K_E)) for samples with t ≥ from_time.
inline SupCheck check_linf_bound(const std::vector<BoundsRecord>& recs,
                                 const DerivedConstants& k, double from_time) {
  SupCheck out;
  for (const auto& r : recs) {
    if (r.t < from_time) continue;
    ++out.checked;
    out.measured_sup = std::max(out.measured_sup, r.linf);
    if (r.linf > k.linf_bound) out.violations.push_back({"linf_bound", r.t, r.linf, k.linf_bound});
  }
  return out;
}

/// ‖φ‖_{L⁴} / ‖∇φ‖ for a single scalar field.
inline double eta_ratio(std::span<const double> coeffs, const SineBasis& basis) {
  const double grad = std::sqrt(basis.gradient_norm_sq(coeffs));
  if (grad == 0.0) return 0.0;
  const std::vector<double> g = basis.synthesize(coeffs);
  return std::pow(basis.lp_norm_pow(g, 4), 0.25) / grad;
}

/// Lower estimate of the H¹₀ → L⁴ embedding constant η: the largest ratio
/// ‖φ‖_{L⁴}/‖∇φ‖ over `trials` random band-limited fields. Trial k uses the
/// same field for every call with the same seed, so the estimate is
/// nondecreasing in `trials`.
inline double calibrate_eta(const SineBasis& basis, int trials, std::uint64_t seed = 1) {
  if (trials < 1) throw Error("calibrate_eta: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> decay(0.5, 3.0);
  double best = 0.0;
  std::vector<double> c(basis.coeff_size());
  for (int t = 0; t < trials; ++t) {
    const double alpha = decay(rng);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const ModeIndex j = basis.mode_of(i);
      const double order = std::max(j.j1, j.j2);
      c[i] = normal(rng) * std::pow(order, -alpha);
    }
    best = std::max(best, eta_ratio(c, basis));
  }
  return best;
}

struct HolderFit {
  double theta = 0.0;
  std::size_t points = 0;
  bool passed(double min_theta = 0.45) const { return theta >= min_theta; }
};

/// Least-squares slope of log‖g(t_k) - g(t_0)‖ against log(t_k - t_0).
inline HolderFit time_holder_exponent(std::span<const TrajectorySample> segment) {
  constexpr double floor = 1e-13;
  if (segment.size() < 8) throw DegenerateFit("time_holder_exponent: need at least 8 samples");
  const SpectralState& g0 = segment.front().state;
  std::vector<double> xs, ys;
  for (std::size_t k = 1; k < segment.size(); ++k) {
    const SpectralState& g = segment[k].state;
    double d2 = 0.0;
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < g.fields[i].size(); ++j) {
        const double d = g.fields[i][j] - g0.fields[i][j];
        d2 += d * d;
      }
    const double dist = std::sqrt(d2);
    const double dt = segment[k].t - segment.front().t;
    if (dist < floor || dt <= 0.0) continue;
    xs.push_back(std::log(dt));
    ys.push_back(std::log(dist));
  }
  if (xs.size() < 2) throw DegenerateFit("time_holder_exponent: displacements below 1e-13");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw DegenerateFit("time_holder_exponent: zero time spread");
  return {sxy / sxx, xs.size()};
}

struct BoundsReport {
  std::vector<BoundsRecord> records;
  EnvelopeCheck l2;
  EnvelopeCheck l6;
  EnvelopeCheck l6_corrected;  // diagnostic; see L6Envelope
  SupCheck gradient;
  SupCheck linf;
  std::optional<double> entry_time;    // into B0 (radius K1)
  std::optional<double> entry_time_E;  // gradient energy into radius K_E
  std::optional<HolderFit> holder;
  std::vector<Violation> violations;

  bool passed() const { return violations.empty(); }
};

struct VerifyOptions {
  EnvelopeOptions envelope;
  /// Envelope whose violations count towards the report's verdict.
  L6Envelope l6_form = L6Envelope::printed;
  /// Holder fit uses this many samples right after absorbing entry.
  std::size_t holder_samples = 16;
};

/// Runs every bound check on a trajectory started from nonnegative data.
inline BoundsReport verify_trajectory(const Trajectory& traj, const OregonatorParams& p,
                                      const SineBasis& basis, const DerivedConstants& k,
                                      const VerifyOptions& opt = {}) {
  BoundsReport rep;
  rep.records = measure(traj, p, basis);
  rep.l2 = check_l2_envelope(rep.records, p, k, opt.envelope);
  rep.l6 = check_l6_envelope(rep.records, p, k, opt.envelope, L6Envelope::printed);
  rep.l6_corrected = check_l6_envelope(rep.records, p, k, opt.envelope, L6Envelope::corrected);
  rep.entry_time = absorbing_entry_time(rep.records, k.K1);
  {
    std::vector<double> t, g;
    for (const auto& r : rep.records) {
      t.push_back(r.t);
      g.push_back(r.grad_sq);
    }
    rep.entry_time_E = absorbing_entry_time(t, g, k.K_E);
  }
  if (rep.entry_time) {
    rep.gradient = check_gradient_bound(rep.records, k, *rep.entry_time + 1.0);
    rep.linf = check_linf_bound(rep.records, k, *rep.entry_time);

    auto first = std::find_if(traj.samples.begin(), traj.samples.end(),
                              [&](const TrajectorySample& s) { return s.t >= *rep.entry_time; });
    const auto avail = static_cast<std::size_t>(traj.samples.end() - first);
    if (avail >= 8) {
      try {
        rep.holder = time_holder_exponent(
            std::span<const TrajectorySample>(&*first, std::min(avail, opt.holder_samples)));
      } catch (const DegenerateFit&) {
        // stationary segment; nothing to fit
      }
    }
  }
  auto append = [&](const std::vector<Violation>& v) {
    rep.violations.insert(rep.violations.end(), v.begin(), v.end());
  };
  append(rep.l2.violations);
  append(opt.l6_form == L6Envelope::printed ? rep.l6.violations : rep.l6_corrected.violations);
  append(rep.gradient.violations);
  append(rep.linf.violations);
  if (rep.holder && !rep.holder->passed())
    rep.violations.push_back({"holder_exponent", *rep.entry_time, rep.holder->theta, 0.45});
  if (!rep.entry_time)
    rep.violations.push_back({"absorbing_entry", traj.samples.back().t,
                              rep.records.back().E_w, k.K1});
  return rep;
}

}  // namespace oregonator
