#pragma once

// Parameters of the diffusive Oregonator system on a box domain and the
// closed-form a-priori constants of its dissipative estimates.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>
#include <utility>

#include "oregonator/errors.hpp"

namespace oregonator {

/// Diffusion and rate constants of
///   u_t = d1 Δu + a1 u + b1 v - F u² - G1 u v
///   v_t = d2 Δv - b2 v + c2 w - G2 u v
///   w_t = d3 Δw + a3 u - c3 w
struct OregonatorParams {
  double d1 = 1.0, d2 = 1.0, d3 = 1.0;
  double a1 = 1.0, b1 = 1.0, b2 = 1.0, c2 = 1.0, a3 = 1.0, c3 = 1.0;
  double F = 1.0, G1 = 1.0, G2 = 1.0;

  /// Named access to every field, in configuration-file order.
  static constexpr std::array<std::pair<std::string_view, double OregonatorParams::*>, 12>
      fields{{{"d1", &OregonatorParams::d1},
              {"d2", &OregonatorParams::d2},
              {"d3", &OregonatorParams::d3},
              {"a1", &OregonatorParams::a1},
              {"b1", &OregonatorParams::b1},
              {"b2", &OregonatorParams::b2},
              {"c2", &OregonatorParams::c2},
              {"a3", &OregonatorParams::a3},
              {"c3", &OregonatorParams::c3},
              {"F", &OregonatorParams::F},
              {"G1", &OregonatorParams::G1},
              {"G2", &OregonatorParams::G2}}};

  std::array<double, 3> diffusion() const { return {d1, d2, d3}; }
  double d0() const { return std::min({d1, d2, d3}); }

  /// Pointer-to-member for a field name, or nullopt.
  static std::optional<double OregonatorParams::*> member(std::string_view name) {
    for (const auto& [key, ptr] : fields)
      if (key == name) return ptr;
    return std::nullopt;
  }

  bool operator==(const OregonatorParams&) const = default;
};

/// Throws NonPositiveParameter naming the first field that is not > 0.
/// NaN counts as non-positive.
inline void validate_params(const OregonatorParams& p) {
  for (const auto& [name, ptr] : OregonatorParams::fields)
    if (!(p.*ptr > 0.0)) throw NonPositiveParameter(std::string(name));
}

/// Interval (n = 1) or rectangle (n = 2) with homogeneous Dirichlet data.
struct DomainSpec {
  int dimension = 1;
  double L1 = 1.0;
  double L2 = 1.0;  // ignored when dimension == 1
  int modes = 128;  // sine modes per axis
  int grid = 256;   // interior grid points per axis

  double length(int axis) const { return axis == 0 ? L1 : L2; }

  double volume() const { return dimension == 1 ? L1 : L1 * L2; }

  /// Products of two retained-mode fields are projected exactly iff
  /// grid + 1 > 2·modes.
  void validate() const {
    if (dimension != 1 && dimension != 2)
      throw InvalidDomain("dimension must be 1 or 2");
    if (!(L1 > 0.0) || (dimension == 2 && !(L2 > 0.0)))
      throw InvalidDomain("side lengths must be strictly positive");
    if (modes < 1) throw InvalidDomain("modes must be >= 1");
    if (grid < 1) throw InvalidDomain("grid must be >= 1");
    if (grid < 2 * modes)
      throw InvalidDomain("grid too coarse for exact quadratic products: need grid >= 2*modes");
  }
};

/// First Dirichlet eigenvalue of -Δ on the box, π² Σ 1/Lᵢ².
inline double poincare_gamma(const DomainSpec& dom) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  double s = 1.0 / (dom.L1 * dom.L1);
  if (dom.dimension == 2) s += 1.0 / (dom.L2 * dom.L2);
  return pi2 * s;
}

/// Embedding and regularity constants the estimates are parameterized by.
/// None of them is known in closed form; defaults are 1.
struct EmbeddingConstants {
  double eta = 1.0;     // ‖φ‖_{L⁴} ≤ η ‖∇φ‖
  double gn_C = 1.0;    // Gagliardo–Nirenberg, ‖φ‖_{L⁴} ≤ C ‖∇φ‖^{n/4} ‖φ‖^{1-n/4}
  double lt_Psi = 1.0;  // Lieb–Thirring lower bound for orthonormal families
  double reg_C2 = 1.0;  // ‖e^{At}‖_{L²→L∞} ≤ C(2) t^{-n/4}
  bool corrected_poincare_direction = true;
  // Hölder/Lipschitz semigroup constants; accepted for completeness, unused.
  std::optional<double> N0;
  std::optional<double> N1;

  void validate() const {
    if (!(eta > 0.0)) throw NonPositiveParameter("eta");
    if (!(gn_C > 0.0)) throw NonPositiveParameter("gn_C");
    if (!(lt_Psi > 0.0)) throw NonPositiveParameter("lt_Psi");
    if (!(reg_C2 > 0.0)) throw NonPositiveParameter("reg_C2");
    if (N0 && !(*N0 > 0.0)) throw NonPositiveParameter("N0");
    if (N1 && !(*N1 > 0.0)) throw NonPositiveParameter("N1");
  }
};

/// The Lipschitz-type constant N(R) bounding ‖f(g₁)-f(g₂)‖² by N(R)‖∇(g₁-g₂)‖²
/// on a set where ‖(u,v,w)‖²_{L⁴} ≤ R.
///
/// The literal form multiplies the linear group by γ; the corrected form uses
/// 1/γ, which is what ‖y‖² ≤ γ⁻¹‖∇y‖² gives.
struct NofR {
  double gamma = 0.0;
  double linear_group = 0.0;    // a1²+b1²+b2²+c2²+a3²+c3²
  double quadratic_group = 0.0;  // (16F² + 8(G1²+G2²)) η²
  bool corrected_default = true;

  double literal(double R) const { return 4.0 * gamma * linear_group + quadratic_group * R; }
  double corrected(double R) const { return 4.0 / gamma * linear_group + quadratic_group * R; }
  double operator()(double R) const { return corrected_default ? corrected(R) : literal(R); }
};

struct DerivedConstants {
  double gamma = 0.0;
  double volume = 0.0;
  double d0 = 0.0;
  double M1 = 0.0, M2 = 0.0, M3 = 0.0, M4 = 0.0, M5 = 0.0;
  double K1 = 0.0, K2 = 0.0, K3 = 0.0, K_E = 0.0;
  double K_n = 0.0;
  double dim_threshold = 0.0;  // m-1 ≤ threshold < m
  int dim_bound_m = 1;
  NofR N_of_R;
  double lipschitz_E = 0.0;  // L(√K_E)
  double linf_bound = 0.0;

  /// Asymptotic level of the weighted L² envelope, M1³|Ω| / (3γ d0 F²).
  double l2_asymptote = 0.0;
  /// Asymptotic level of the L⁶ envelope, M3⁷|Ω| / (10γ d0 F⁶ min{1,M4}).
  double l6_asymptote = 0.0;

  double rho(double R) const { return N_of_R(R) / d0; }
};

/// max_{s≥0} [A s^{n/2} - (d0/2) s²] for n ∈ {1,2}. The stationary point is
/// s* = (A n / (2 d0))^{1/(2-n/2)}.
inline double young_constant(double A, double d0, int n) {
  const double half_n = 0.5 * n;
  const double s_star = std::pow(A * half_n / d0, 1.0 / (2.0 - half_n));
  return A * std::pow(s_star, half_n) - 0.5 * d0 * s_star * s_star;
}

/// (2(K(n) + a1 + b1 + c2 + a3) / (d0 Ψ))^{n/2} |Ω|
inline double dimension_threshold(double K_n, const OregonatorParams& p, double d0,
                                  double Psi, int n, double volume) {
  const double base = 2.0 * (K_n + p.a1 + p.b1 + p.c2 + p.a3) / (d0 * Psi);
  return std::pow(base, 0.5 * n) * volume;
}

/// Unique integer m with m-1 ≤ threshold < m.
inline int dimension_bound(double threshold) {
  return static_cast<int>(std::floor(threshold)) + 1;
}

inline DerivedConstants derive_constants(const OregonatorParams& p, const DomainSpec& dom,
                                         const EmbeddingConstants& emb) {
  validate_params(p);
  dom.validate();
  emb.validate();

  DerivedConstants k;
  k.gamma = poincare_gamma(dom);
  k.volume = dom.volume();
  k.d0 = p.d0();
  const double g = k.gamma, vol = k.volume, d0 = k.d0;

  const double ac = p.a3 * p.c2 / p.c3;
  k.M1 = p.a1 + (p.b1 * p.b1 + ac * ac) / (2.0 * p.b2);
  k.M2 = p.c2 * p.c2 / (p.b2 * p.c3);
  const double M1_cubed = k.M1 * k.M1 * k.M1;
  k.K1 = M1_cubed * vol / (g * d0 * p.F * p.F * std::min(1.0, k.M2));
  k.l2_asymptote = M1_cubed * vol / (3.0 * g * d0 * p.F * p.F);

  k.M3 = p.a1 + 5.0 * std::pow(p.b1, 1.2) / (6.0 * std::pow(p.b2, 0.2)) +
         std::pow(ac, 6) / (6.0 * std::pow(p.b2, 5));
  k.M4 = std::pow(p.c2, 6) / (std::pow(p.b2, 5) * p.c3);
  const double F6 = std::pow(p.F, 6);
  k.K3 = std::pow(k.M3, 7) * vol / (g * d0 * F6 * std::min(1.0, k.M4));
  k.l6_asymptote = std::pow(k.M3, 7) * vol / (10.0 * g * d0 * F6 * std::min(1.0, k.M4));

  // ∫φ⁴ ≤ ‖φ‖₂ ‖φ‖₆³
  k.K2 = std::sqrt(k.K1 * k.K3);

  k.M5 = (k.K1 * std::max(1.0, k.M2) + M1_cubed * vol / (p.F * p.F)) / d0;
  const double forcing = 2.0 * (p.a1 * p.a1 + p.b1 * p.b1) / p.d1 +
                         p.a3 * p.a3 * p.c2 * p.c2 / (2.0 * p.d3 * p.b2 * p.c3);
  const double growth = p.G1 * p.G1 / (2.0 * p.d1) + p.G2 * p.G2 / (2.0 * p.d2);
  const double eta4 = std::pow(emb.eta, 4);
  k.K_E = (k.M5 + k.K1 * forcing) * std::exp(eta4 * k.M5 * growth) / std::min(1.0, k.M2);

  const int n = dom.dimension;
  const double A = (p.G1 + p.G2) * std::sqrt(k.K1) * emb.gn_C * emb.gn_C;
  k.K_n = young_constant(A, d0, n);
  k.dim_threshold = dimension_threshold(k.K_n, p, d0, emb.lt_Psi, n, vol);
  k.dim_bound_m = dimension_bound(k.dim_threshold);

  k.N_of_R.gamma = g;
  k.N_of_R.linear_group = p.a1 * p.a1 + p.b1 * p.b1 + p.b2 * p.b2 + p.c2 * p.c2 +
                          p.a3 * p.a3 + p.c3 * p.c3;
  k.N_of_R.quadratic_group =
      (16.0 * p.F * p.F + 8.0 * (p.G1 * p.G1 + p.G2 * p.G2)) * emb.eta * emb.eta;
  k.N_of_R.corrected_default = emb.corrected_poincare_direction;

  // L(r) = √N(η² r²) at r = √K_E
  k.lipschitz_E = std::sqrt(k.N_of_R(emb.eta * emb.eta * k.K_E));
  k.linf_bound = emb.reg_C2 * (std::sqrt(k.K1) + 4.0 * std::sqrt(k.K_E) * k.lipschitz_E);
  return k;
}

}  // namespace oregonator
