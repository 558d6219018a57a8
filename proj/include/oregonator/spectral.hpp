#pragma once

// Dirichlet sine eigenbasis of the Laplacian on an interval or rectangle.
//
// Basis functions are L²-orthonormal,
//   e_j(x) = Π_i √(2/L_i) sin(j_i π x_i / L_i),   -Δ e_j = λ_j e_j,
// so the Euclidean norm of a coefficient vector is the L² norm of the field.
// Grid values live on the N interior points x_k = k L/(N+1), k = 1..N, per
// axis; the transforms are DST-I.
//
// A product of two sine series is a cosine series, so re-analyzing it with a
// DST would alias. Products are instead expanded exactly in cosines with a
// DCT-I over the grid plus its two boundary points, then projected onto the
// sines with the closed form ∫ cos(mπx/L) sin(jπx/L) dx. Exactness needs
// N + 1 > 2M, which DomainSpec::validate enforces. In 1D that whole chain is
// folded into one dense M × N matrix.
//
// FFTW's r2r codelets for small odd sizes allocate scratch on every call, so
// 1D grids up to kDenseGridMax points use dense sine matrices instead.

#include <fftw3.h>

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "oregonator/errors.hpp"
#include "oregonator/model.hpp"

namespace oregonator {

struct ModeIndex {
  int j1 = 1;
  int j2 = 0;  // unused for n = 1
};

namespace detail {

// The FFTW planner is not re-entrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

inline PlanHandle make_r2r_plan(int dimension, int n, fftw_r2r_kind kind) {
  std::lock_guard lock(fftw_planner_mutex());
  const std::size_t size = dimension == 1 ? n : static_cast<std::size_t>(n) * n;
  double* in = fftw_alloc_real(size);
  double* out = fftw_alloc_real(size);
  const int dims[2] = {n, n};
  const fftw_r2r_kind kinds[2] = {kind, kind};
  fftw_plan plan =
      fftw_plan_r2r(dimension, dims, in, out, kinds, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  return PlanHandle(plan);
}

}  // namespace detail

inline constexpr int kDenseGridMax = 64;

/// Transform plan plus eigenvalue tables for one DomainSpec. Immutable after
/// construction; all member functions are safe to call concurrently.
class SineBasis {
 public:
  explicit SineBasis(const DomainSpec& dom) : dom_(dom) {
    dom_.validate();
    const int n = dom_.dimension, M = dom_.modes, N = dom_.grid;
    coeff_size_ = n == 1 ? M : static_cast<std::size_t>(M) * M;
    grid_size_ = n == 1 ? N : static_cast<std::size_t>(N) * N;

    synth_scale_ = 1.0;
    analyze_scale_ = 1.0;
    cell_volume_ = 1.0;
    for (int axis = 0; axis < n; ++axis) {
      const double L = dom_.length(axis);
      const double h = L / (N + 1);
      // RODFT00 computes 2 Σ X_j sin(π (j+1)(k+1)/(N+1)).
      synth_scale_ *= std::sqrt(2.0 / L) / 2.0;
      analyze_scale_ *= h * std::sqrt(2.0 / L) / 2.0;
      cell_volume_ *= h;
    }

    eigenvalues_.resize(coeff_size_);
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    for (std::size_t idx = 0; idx < coeff_size_; ++idx) {
      const ModeIndex j = mode_of(idx);
      double lam = pi2 * (j.j1 / dom_.L1) * (j.j1 / dom_.L1);
      if (n == 2) lam += pi2 * (j.j2 / dom_.L2) * (j.j2 / dom_.L2);
      eigenvalues_[idx] = lam;
    }
    plan_ = detail::make_r2r_plan(n, N, FFTW_RODFT00);
    cos_plan_ = detail::make_r2r_plan(n, N + 2, FFTW_REDFT00);

    // REDFT00 over [0, x_1..x_N, L] gives Y_m = 2 Σ_k w_k cos(πkm/(N+1)), so the
    // cosine coefficient of w is ω_m = c_m h Y_m / (2L) with c_0 = 1, c_m = 2.
    // Composing with ∫₀^L cos(mπx/L) √(2/L) sin(jπx/L) dx gives Q.
    const int C = 2 * M + 1;
    cos_to_sine_.resize(n);
    for (int axis = 0; axis < n; ++axis) {
      const double L = dom_.length(axis);
      const double h = L / (N + 1);
      auto& Q = cos_to_sine_[axis];
      Q.assign(static_cast<std::size_t>(M) * C, 0.0);
      for (int j = 1; j <= M; ++j)
        for (int m = 0; m < C; ++m) {
          if ((j + m) % 2 == 0) continue;
          const double cm = m == 0 ? 1.0 : 2.0;
          const double integral =
              std::sqrt(2.0 / L) * L / std::numbers::pi * 2.0 * j / (double(j) * j - double(m) * m);
          Q[static_cast<std::size_t>(j - 1) * C + m] = cm * h / (2.0 * L) * integral;
        }
    }
    if (n == 1) build_dense_1d();
  }

  const DomainSpec& domain() const { return dom_; }
  int dimension() const { return dom_.dimension; }
  int modes() const { return dom_.modes; }
  int grid() const { return dom_.grid; }
  std::size_t coeff_size() const { return coeff_size_; }
  std::size_t grid_size() const { return grid_size_; }
  double cell_volume() const { return cell_volume_; }

  /// Flat coefficient index ↔ mode index (row-major, j1 slowest).
  std::size_t flat_index(ModeIndex j) const {
    check_index(j);
    if (dom_.dimension == 1) return static_cast<std::size_t>(j.j1 - 1);
    return static_cast<std::size_t>(j.j1 - 1) * dom_.modes + (j.j2 - 1);
  }
  ModeIndex mode_of(std::size_t idx) const {
    if (dom_.dimension == 1) return {static_cast<int>(idx) + 1, 0};
    return {static_cast<int>(idx / dom_.modes) + 1, static_cast<int>(idx % dom_.modes) + 1};
  }

  /// λ_j = π² Σ (j_i / L_i)²
  double eigenvalue(ModeIndex j) const { return eigenvalues_[flat_index(j)]; }
  std::span<const double> eigenvalues() const { return eigenvalues_; }

  /// Interior grid coordinates along one axis.
  std::vector<double> coordinates(int axis) const {
    const double h = dom_.length(axis) / (dom_.grid + 1);
    std::vector<double> x(dom_.grid);
    for (int k = 0; k < dom_.grid; ++k) x[k] = (k + 1) * h;
    return x;
  }

  void synthesize(std::span<const double> coeffs, std::span<double> values) const {
    if (coeffs.size() != coeff_size_ || values.size() != grid_size_)
      throw ShapeMismatch("synthesize: array sizes do not match the domain");
    if (!sine_.empty()) {
      const std::size_t M = coeff_size_;
      for (std::size_t k = 0; k < grid_size_; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < M; ++j) s += sine_[k * M + j] * coeffs[j];
        values[k] = s;
      }
      return;
    }
    std::vector<double> padded(grid_size_, 0.0);
    scatter(coeffs, padded);
    fftw_execute_r2r(plan_.get(), padded.data(), values.data());
    for (double& v : values) v *= synth_scale_;
  }

  std::vector<double> synthesize(std::span<const double> coeffs) const {
    std::vector<double> values(grid_size_);
    synthesize(coeffs, values);
    return values;
  }

  /// Discrete sine transform of grid values onto the retained modes. Inverts
  /// synthesize exactly; for other grid functions it is the DST-I quadrature
  /// of the L² projection.
  void analyze(std::span<const double> values, std::span<double> coeffs) const {
    if (coeffs.size() != coeff_size_ || values.size() != grid_size_)
      throw ShapeMismatch("analyze: array sizes do not match the domain");
    if (!sine_.empty()) {
      const std::size_t M = coeff_size_;
      std::fill(coeffs.begin(), coeffs.end(), 0.0);
      for (std::size_t k = 0; k < grid_size_; ++k)
        for (std::size_t j = 0; j < M; ++j) coeffs[j] += sine_[k * M + j] * values[k];
      for (double& c : coeffs) c *= cell_volume_;
      return;
    }
    std::vector<double> full(grid_size_);
    fftw_execute_r2r(plan_.get(), const_cast<double*>(values.data()), full.data());
    gather(full, coeffs);
    for (double& c : coeffs) c *= analyze_scale_;
  }

  std::vector<double> analyze(std::span<const double> values) const {
    std::vector<double> coeffs(coeff_size_);
    analyze(values, coeffs);
    return coeffs;
  }

  /// Δ in coefficient space: c_j ↦ -λ_j c_j.
  std::vector<double> apply_laplacian(std::span<const double> coeffs) const {
    if (coeffs.size() != coeff_size_) throw ShapeMismatch("apply_laplacian: size mismatch");
    std::vector<double> out(coeff_size_);
    for (std::size_t i = 0; i < coeff_size_; ++i) out[i] = -eigenvalues_[i] * coeffs[i];
    return out;
  }

  /// Exact L² projection of a·b onto the retained modes.
  std::vector<double> quadratic_product(std::span<const double> a,
                                        std::span<const double> b) const {
    if (a.size() != coeff_size_ || b.size() != coeff_size_)
      throw ShapeMismatch("quadratic_product: size mismatch");
    std::vector<double> ga = synthesize(a);
    const std::vector<double> gb = synthesize(b);
    for (std::size_t i = 0; i < grid_size_; ++i) ga[i] *= gb[i];
    return project_product(ga);
  }

  /// Exact L² projection of a grid function that is a sum of products of two
  /// retained-mode fields (for example u·v sampled on the grid). Unlike
  /// analyze, this does not assume the values are themselves a sine series.
  void project_product(std::span<const double> values, std::span<double> coeffs) const {
    if (coeffs.size() != coeff_size_ || values.size() != grid_size_)
      throw ShapeMismatch("project_product: array sizes do not match the domain");
    const std::size_t M = dom_.modes, N = dom_.grid, P = N + 2, C = 2 * M + 1;
    if (dom_.dimension == 1) {
      for (std::size_t j = 0; j < M; ++j) {
        const double* row = product_1d_.data() + j * N;
        double s = 0.0;
        for (std::size_t k = 0; k < N; ++k) s += row[k] * values[k];
        coeffs[j] = s;
      }
      return;
    }
    std::vector<double> padded(P * P, 0.0), Y(P * P);
    for (std::size_t r = 0; r < N; ++r)
      std::copy_n(values.begin() + r * N, N, padded.begin() + (r + 1) * P + 1);
    fftw_execute_r2r(cos_plan_.get(), padded.data(), Y.data());
    const auto& Q1 = cos_to_sine_[0];
    const auto& Q2 = cos_to_sine_[1];
    // T = Y[0..C)² Q2ᵀ, then coeffs = Q1 T.
    std::vector<double> T(C * M, 0.0);
    for (std::size_t r = 0; r < C; ++r)
      for (std::size_t b = 0; b < M; ++b) {
        double s = 0.0;
        for (std::size_t m = 0; m < C; ++m) s += Y[r * P + m] * Q2[b * C + m];
        T[r * M + b] = s;
      }
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b) {
        double s = 0.0;
        for (std::size_t r = 0; r < C; ++r) s += Q1[a * C + r] * T[r * M + b];
        coeffs[a * M + b] = s;
      }
  }

  std::vector<double> project_product(std::span<const double> values) const {
    std::vector<double> coeffs(coeff_size_);
    project_product(values, coeffs);
    return coeffs;
  }

  /// Grid quadrature h^n Σ values (the field vanishes on the boundary).
  double integrate(std::span<const double> values) const {
    if (values.size() != grid_size_) throw ShapeMismatch("integrate: size mismatch");
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_volume_;
  }

  /// ‖φ‖² from coefficients (Parseval).
  double l2_norm_sq(std::span<const double> coeffs) const {
    double s = 0.0;
    for (double c : coeffs) s += c * c;
    return s;
  }

  /// ‖∇φ‖² = Σ λ_j c_j².
  double gradient_norm_sq(std::span<const double> coeffs) const {
    if (coeffs.size() != coeff_size_) throw ShapeMismatch("gradient_norm_sq: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < coeff_size_; ++i) s += eigenvalues_[i] * coeffs[i] * coeffs[i];
    return s;
  }

  /// ∫|φ|^p by grid quadrature.
  double lp_norm_pow(std::span<const double> values, int p) const {
    double s = 0.0;
    for (double v : values) s += std::pow(std::abs(v), p);
    return s * cell_volume_;
  }

 private:
  void check_index(ModeIndex j) const {
    const int M = dom_.modes;
    if (j.j1 < 1 || j.j1 > M) throw IndexOutOfRange("mode index j1 out of range");
    if (dom_.dimension == 2 && (j.j2 < 1 || j.j2 > M))
      throw IndexOutOfRange("mode index j2 out of range");
  }

  void build_dense_1d() {
    const std::size_t M = dom_.modes, N = dom_.grid, C = 2 * M + 1;
    const double L = dom_.L1;
    const auto& Q = cos_to_sine_[0];
    product_1d_.assign(M * N, 0.0);
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 1; k <= N; ++k) {
        double s = 0.0;
        for (std::size_t m = 0; m < C; ++m)
          s += Q[j * C + m] * 2.0 * std::cos(std::numbers::pi * double(k * m % (2 * (N + 1))) / (N + 1));
        product_1d_[j * N + (k - 1)] = s;
      }
    if (N > static_cast<std::size_t>(kDenseGridMax)) return;
    sine_.resize(N * M);
    for (std::size_t k = 1; k <= N; ++k)
      for (std::size_t j = 1; j <= M; ++j)
        sine_[(k - 1) * M + (j - 1)] =
            std::sqrt(2.0 / L) * std::sin(std::numbers::pi * double(k * j % (2 * (N + 1))) / (N + 1));
  }

  void scatter(std::span<const double> coeffs, std::span<double> padded) const {
    const std::size_t M = dom_.modes, N = dom_.grid;
    if (dom_.dimension == 1) {
      std::copy(coeffs.begin(), coeffs.end(), padded.begin());
      return;
    }
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b) padded[a * N + b] = coeffs[a * M + b];
  }

  void gather(std::span<const double> full, std::span<double> coeffs) const {
    const std::size_t M = dom_.modes, N = dom_.grid;
    if (dom_.dimension == 1) {
      std::copy(full.begin(), full.begin() + M, coeffs.begin());
      return;
    }
    for (std::size_t a = 0; a < M; ++a)
      for (std::size_t b = 0; b < M; ++b) coeffs[a * M + b] = full[a * N + b];
  }

  DomainSpec dom_;
  std::size_t coeff_size_ = 0;
  std::size_t grid_size_ = 0;
  double synth_scale_ = 1.0;
  double analyze_scale_ = 1.0;
  double cell_volume_ = 1.0;
  std::vector<double> eigenvalues_;
  detail::PlanHandle plan_;
  detail::PlanHandle cos_plan_;
  std::vector<std::vector<double>> cos_to_sine_;  // per axis, M × (2M+1)
  std::vector<double> product_1d_;                // 1D only, M × N
  std::vector<double> sine_;                      // small 1D grids, N × M
};

}  // namespace oregonator
