#pragma once

// The five tool commands. Each writes into a run directory and finishes with
// manifest.json, which echoes the configuration and lists every output file
// with its SHA-256 digest.
//
// CSV files are comma-separated with a header row, LF line endings and
// shortest round-trip number formatting ('.' decimal, locale independent).
// coefficients.bin holds little-endian uint64 {n, modes per axis, count}
// followed by `count` records of doubles: t, then the u, v, w coefficients.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "oregonator/bounds.hpp"
#include "oregonator/config.hpp"
#include "oregonator/dynamics.hpp"
#include "oregonator/errors.hpp"
#include "oregonator/model.hpp"
#include "oregonator/spectral.hpp"
#include "oregonator/tangent.hpp"

#ifndef OREGONATOR_VERSION
#define OREGONATOR_VERSION "0.0.0"
#endif

namespace oregonator {

namespace fs = std::filesystem;

enum ExitCode : int {
  kSuccess = 0,
  kVerificationFailed = 1,
  kConfigError = 2,
  kNumericalFailure = 3,
};

// ---------------------------------------------------------------------------
// Output helpers

inline std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string to_cell(double x) { return format_number(x); }
inline std::string to_cell(int x) { return std::to_string(x); }
inline std::string to_cell(std::int64_t x) { return std::to_string(x); }
inline std::string to_cell(std::size_t x) { return std::to_string(x); }
inline std::string to_cell(std::string_view s) { return std::string(s); }
inline std::string to_cell(const char* s) { return s; }
inline std::string to_cell(const std::string& s) { return s; }
inline std::string to_cell(const std::optional<double>& x) { return x ? format_number(*x) : ""; }
inline std::string to_cell(const std::optional<int>& x) { return x ? std::to_string(*x) : ""; }

}  // namespace detail

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    write(header);
  }

  template <class... T>
  void row(const T&... cells) {
    write({detail::to_cell(cells)...});
  }

  void write(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      const std::string& c = cells[i];
      if (c.find_first_of(",\"\n\r") == std::string::npos) {
        out_ << c;
        continue;
      }
      out_ << '"';
      for (char ch : c) out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
      out_ << '"';
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// One command invocation's output directory.
class RunDirectory {
 public:
  RunDirectory(fs::path root, std::string command, const RunConfig& cfg)
      : root_(std::move(root)), command_(std::move(command)), echo_(cfg.echo),
        started_(std::chrono::system_clock::now()), steady_(std::chrono::steady_clock::now()) {
    fs::create_directories(root_);
    fs::remove(root_ / "manifest.json");
  }

  const fs::path& root() const { return root_; }

  /// Registers an output file and returns its full path.
  fs::path file(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    return root_ / name;
  }

  nlohmann::ordered_json& extra() { return extra_; }

  void set_failure(std::string kind, std::string message, std::optional<double> time = {}) {
    failure_ = nlohmann::ordered_json{{"kind", std::move(kind)}, {"message", std::move(message)}};
    if (time) (*failure_)["time"] = *time;
  }

  void finish(int exit_code) {
    using clock = std::chrono::steady_clock;
    nlohmann::ordered_json m;
    m["tool"] = "oregonator";
    m["version"] = OREGONATOR_VERSION;
    m["command"] = command_;
    m["exit_code"] = exit_code;
    m["started_utc"] = utc_timestamp(started_);
    m["finished_utc"] = utc_timestamp(std::chrono::system_clock::now());
    m["wall_seconds"] = std::chrono::duration<double>(clock::now() - steady_).count();
    m["config"] = echo_;
    m["failure"] = failure_ ? *failure_ : nlohmann::ordered_json(nullptr);
    if (!extra_.is_null()) m["summary"] = extra_;
    auto& files = m["files"] = nlohmann::ordered_json::array();
    for (const auto& name : files_) {
      const fs::path p = root_ / name;
      if (!fs::exists(p)) continue;
      files.push_back({{"name", name}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    std::ofstream out(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
  }

 private:
  fs::path root_;
  std::string command_;
  std::map<std::string, std::map<std::string, std::string>> echo_;
  std::chrono::system_clock::time_point started_;
  std::chrono::steady_clock::time_point steady_;
  std::vector<std::string> files_;
  nlohmann::ordered_json extra_;
  std::optional<nlohmann::ordered_json> failure_;
};

/// True iff manifest.json exists and every listed file matches its digest.
inline bool verify_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return false;
  const auto m = nlohmann::json::parse(in, nullptr, false);
  if (m.is_discarded() || !m.contains("files")) return false;
  for (const auto& f : m["files"]) {
    const fs::path p = dir / f["name"].get<std::string>();
    if (!fs::exists(p) || fs::file_size(p) != f["bytes"].get<std::uintmax_t>()) return false;
    if (sha256_file(p) != f["sha256"].get<std::string>()) return false;
  }
  return true;
}

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t x) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

}  // namespace detail

inline void write_coefficients(const fs::path& path, const Trajectory& traj, const SineBasis& basis) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  detail::put_u64(out, static_cast<std::uint64_t>(basis.dimension()));
  detail::put_u64(out, static_cast<std::uint64_t>(basis.modes()));
  detail::put_u64(out, traj.samples.size());
  for (const auto& s : traj.samples) {
    detail::put_f64(out, s.t);
    for (const auto& f : s.state.fields)
      for (double c : f) detail::put_f64(out, c);
  }
}

// ---------------------------------------------------------------------------
// Shared pieces

/// Command-line overrides of configuration values.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<int> modes;
  std::optional<int> m_max;
  std::optional<bool> corrected_gamma;
};

/// Applies overrides; `horizon` sets the Lyapunov horizon for the dimension
/// command and the simulation horizon otherwise.
inline void apply_overrides(RunConfig& cfg, const Overrides& o, std::string_view command) {
  if (o.seed) {
    cfg.run.seed = *o.seed;
    cfg.echo["run"]["seed"] = std::to_string(*o.seed);
  }
  if (o.dt) {
    cfg.integrator.dt = *o.dt;
    cfg.echo["integrator"]["dt"] = format_number(*o.dt);
  }
  if (o.horizon) {
    if (command == "dimension") {
      cfg.dimension.horizon = *o.horizon;
      cfg.echo["dimension"]["horizon"] = format_number(*o.horizon);
    } else {
      cfg.run.horizon = *o.horizon;
      cfg.echo["run"]["horizon"] = format_number(*o.horizon);
    }
  }
  if (o.modes) {
    cfg.domain.modes = *o.modes;
    cfg.echo["domain"]["modes"] = std::to_string(*o.modes);
    if (cfg.domain.grid < 2 * *o.modes) {
      cfg.domain.grid = 2 * *o.modes;
      cfg.echo["domain"]["grid"] = std::to_string(cfg.domain.grid);
    }
  }
  if (o.m_max) {
    cfg.dimension.m_max = *o.m_max;
    cfg.echo["dimension"]["m_max"] = std::to_string(*o.m_max);
  }
  if (o.corrected_gamma) {
    cfg.embedding.corrected_poincare_direction = *o.corrected_gamma;
    cfg.echo["embedding"]["corrected_gamma"] = *o.corrected_gamma ? "on" : "off";
  }
}

inline SpectralState initial_state(const RunConfig& cfg, const SineBasis& basis,
                                   const DerivedConstants& k, std::uint64_t seed) {
  if (cfg.run.initial == InitialData::zero) return SpectralState::zero(basis);
  SpectralState s = random_nonnegative_state(basis, cfg.params, seed, cfg.run.energy_factor * k.K1,
                                             cfg.run.bandwidth);
  if (cfg.run.initial == InitialData::negative)
    for (auto& f : s.fields)
      for (double& c : f) c = -c;
  return s;
}

inline std::vector<std::tuple<std::string, double, std::string>> constants_table(
    const DerivedConstants& k, const DomainSpec& dom) {
  return {
      {"gamma", k.gamma, "first Dirichlet eigenvalue pi^2 sum 1/L_i^2"},
      {"volume", k.volume, "|Omega|"},
      {"d0", k.d0, "min(d1, d2, d3)"},
      {"M1", k.M1, "a1 + (b1^2 + (a3 c2/c3)^2) / (2 b2)"},
      {"M2", k.M2, "c2^2 / (b2 c3)"},
      {"K1", k.K1, "M1^3 |Omega| / (gamma d0 F^2 min(1, M2))"},
      {"l2_asymptote", k.l2_asymptote, "M1^3 |Omega| / (3 gamma d0 F^2)"},
      {"M3", k.M3, "a1 + 5 b1^(6/5) / (6 b2^(1/5)) + (a3 c2/c3)^6 / (6 b2^5)"},
      {"M4", k.M4, "c2^6 / (b2^5 c3)"},
      {"K3", k.K3, "M3^7 |Omega| / (gamma d0 F^6 min(1, M4))"},
      {"l6_asymptote", k.l6_asymptote, "M3^7 |Omega| / (10 gamma d0 F^6 min(1, M4))"},
      {"l6_asymptote_corrected", 3.0 * k.l6_asymptote, "3 x l6_asymptote (dissipation factor 5/9)"},
      {"K2", k.K2, "sqrt(K1 K3)"},
      {"M5", k.M5, "(K1 max(1, M2) + M1^3 |Omega| / F^2) / d0"},
      {"K_E", k.K_E,
       "(M5 + K1 (2(a1^2+b1^2)/d1 + a3^2 c2^2/(2 d3 b2 c3))) exp(eta^4 M5 (G1^2/(2d1) + "
       "G2^2/(2d2))) / min(1, M2)"},
      {"K_n", k.K_n, "max_s (G1+G2) sqrt(K1) C^2 s^(n/2) - d0 s^2/2"},
      {"dim_exponent", 0.5 * dom.dimension, "n/2"},
      {"dim_threshold", k.dim_threshold, "(2 (K_n + a1 + b1 + c2 + a3) / (d0 Psi))^(n/2) |Omega|"},
      {"dim_bound_m", static_cast<double>(k.dim_bound_m), "least integer m > dim_threshold"},
      {"N_linear_group", k.N_of_R.linear_group, "a1^2 + b1^2 + b2^2 + c2^2 + a3^2 + c3^2"},
      {"N_quadratic_group", k.N_of_R.quadratic_group, "(16 F^2 + 8 (G1^2 + G2^2)) eta^2"},
      {"N_literal_at_0", k.N_of_R.literal(0.0), "4 gamma x linear group"},
      {"N_corrected_at_0", k.N_of_R.corrected(0.0), "4/gamma x linear group"},
      {"lipschitz_E", k.lipschitz_E, "sqrt(N(eta^2 K_E))"},
      {"linf_bound", k.linf_bound, "C2 (sqrt(K1) + 4 sqrt(K_E) L)"},
  };
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_constants(const RunConfig& cfg, RunDirectory* dir, std::ostream& out) {
  const DerivedConstants k = derive_constants(cfg.params, cfg.domain, cfg.embedding);
  const auto rows = constants_table(k, cfg.domain);
  for (const auto& [name, value, formula] : rows)
    out << std::left << std::setw(24) << name << std::setw(26) << format_number(value) << formula
        << '\n';
  if (dir) {
    CsvWriter csv(dir->file("constants.csv"), {"name", "value", "formula"});
    for (const auto& [name, value, formula] : rows) csv.row(name, value, formula);
  }
  return kSuccess;
}

namespace detail {

inline void write_trajectory_csv(const fs::path& path, const std::vector<BoundsRecord>& recs) {
  CsvWriter csv(path, {"t", "E_w", "l2_sq", "L6", "L4_sq", "grad_sq", "linf", "min_grid"});
  for (const auto& r : recs) csv.row(r.t, r.E_w, r.l2_sq, r.L6, r.L4_sq, r.grad_sq, r.linf, r.min_grid);
}

}  // namespace detail

inline int cmd_simulate(const RunConfig& cfg, RunDirectory& dir, std::ostream& out) {
  const SineBasis basis(cfg.domain);
  const DerivedConstants k = derive_constants(cfg.params, cfg.domain, cfg.embedding);
  const SpectralState g0 = initial_state(cfg, basis, k, cfg.run.seed);
  const Trajectory traj = simulate(g0, cfg.params, basis, cfg.integrator, cfg.run.horizon,
                                   cfg.run.sample_every);
  const auto recs = measure(traj, cfg.params, basis);
  detail::write_trajectory_csv(dir.file("trajectory.csv"), recs);
  write_coefficients(dir.file("coefficients.bin"), traj, basis);
  dir.extra() = {{"samples", traj.samples.size()}, {"final_E_w", recs.back().E_w},
                 {"min_grid", traj.min_grid()}};
  out << "simulated " << traj.samples.size() << " samples to t = " << format_number(traj.samples.back().t)
      << ", final E_w = " << format_number(recs.back().E_w) << '\n';
  return kSuccess;
}

inline std::string_view verdict(bool passed) { return passed ? "pass" : "FAIL"; }

inline int cmd_verify(const RunConfig& cfg, RunDirectory& dir, std::ostream& out) {
  const SineBasis basis(cfg.domain);
  const DerivedConstants k = derive_constants(cfg.params, cfg.domain, cfg.embedding);
  const SpectralState g0 = initial_state(cfg, basis, k, cfg.run.seed);
  const Trajectory traj = simulate(g0, cfg.params, basis, cfg.integrator, cfg.run.horizon,
                                   cfg.run.sample_every);
  VerifyOptions opt = cfg.verify;
  opt.envelope.dt = cfg.integrator.dt;
  const BoundsReport rep = verify_trajectory(traj, cfg.params, basis, k, opt);

  {
    CsvWriter csv(dir.file("bounds.csv"), {"t", "E_w", "l2_envelope", "L6", "l6_envelope",
                                           "l6_envelope_corrected", "grad_sq", "linf", "min_grid"});
    const double t0 = rep.records.front().t, E0 = rep.records.front().E_w,
                 L0 = rep.records.front().L6;
    for (const auto& r : rep.records)
      csv.row(r.t, r.E_w, l2_envelope(k, E0, r.t - t0), r.L6,
              l6_envelope(k, L0, r.t - t0, L6Envelope::printed),
              l6_envelope(k, L0, r.t - t0, L6Envelope::corrected), r.grad_sq, r.linf, r.min_grid);
  }
  {
    CsvWriter csv(dir.file("violations.csv"), {"check", "t", "measured", "bound", "excess"});
    for (const auto& v : rep.violations) csv.row(v.check, v.t, v.measured, v.bound, v.excess());
  }
  const bool printed = opt.l6_form == L6Envelope::printed;
  std::ostringstream s;
  s << "K1: " << format_number(k.K1) << '\n'
    << "K3: " << format_number(k.K3) << '\n'
    << "min_grid: " << format_number(traj.min_grid()) << '\n'
    << "l2_envelope: " << verdict(rep.l2.passed()) << " (max ratio " << format_number(rep.l2.max_ratio)
    << ")\n"
    << "l6_envelope" << (printed ? "" : "_corrected") << ": "
    << verdict(printed ? rep.l6.passed() : rep.l6_corrected.passed()) << " (max ratio "
    << format_number(printed ? rep.l6.max_ratio : rep.l6_corrected.max_ratio) << ")\n"
    << "l6_envelope" << (printed ? "_corrected" : "") << " (diagnostic): "
    << verdict(printed ? rep.l6_corrected.passed() : rep.l6.passed()) << " (max ratio "
    << format_number(printed ? rep.l6_corrected.max_ratio : rep.l6.max_ratio) << ")\n"
    << "entry_time_K1: " << (rep.entry_time ? format_number(*rep.entry_time) : "none") << '\n'
    << "entry_time_K_E: " << (rep.entry_time_E ? format_number(*rep.entry_time_E) : "none") << '\n'
    << "gradient_bound: " << verdict(rep.gradient.violations.empty()) << '\n'
    << "linf_bound: " << verdict(rep.linf.violations.empty()) << '\n'
    << "holder_exponent: " << (rep.holder ? format_number(rep.holder->theta) : "n/a") << '\n'
    << "violations: " << rep.violations.size() << '\n';
  const std::size_t shown = std::min<std::size_t>(rep.violations.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& v = rep.violations[i];
    s << "  " << v.check << " at t = " << format_number(v.t) << ": " << format_number(v.measured)
      << " > " << format_number(v.bound) << '\n';
  }
  if (rep.violations.size() > shown)
    s << "  ... " << rep.violations.size() - shown << " more in violations.csv\n";
  std::ofstream(dir.file("summary.txt"), std::ios::binary) << s.str();
  out << s.str();
  dir.extra() = {{"violations", rep.violations.size()},
                 {"l6_envelope", printed ? "printed" : "corrected"},
                 {"entry_time", rep.entry_time ? nlohmann::ordered_json(*rep.entry_time) : nullptr}};
  return rep.passed() ? kSuccess : kVerificationFailed;
}

namespace detail {

/// Perturbation of Euclidean norm `size`, spread over modes with j^{-2} decay.
inline FieldTriple random_direction(const SineBasis& basis, std::uint64_t seed, double size) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FieldTriple d;
  double norm_sq = 0.0;
  for (auto& f : d) {
    f.resize(basis.coeff_size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const ModeIndex j = basis.mode_of(i);
      f[i] = normal(rng) / std::pow(std::max(j.j1, j.j2), 2);
      norm_sq += f[i] * f[i];
    }
  }
  for (auto& f : d)
    for (double& c : f) c *= size / std::sqrt(norm_sq);
  return d;
}

}  // namespace detail

inline int cmd_dimension(const RunConfig& cfg, RunDirectory& dir, std::ostream& out) {
  const SineBasis basis(cfg.domain);
  const DerivedConstants k = derive_constants(cfg.params, cfg.domain, cfg.embedding);
  const auto& d = cfg.dimension;
  const OregonatorParams& p = cfg.params;

  LyapunovOptions run;
  run.m = d.m_max;
  run.horizon = d.horizon;
  run.burn_in = d.burn_in;
  run.reorth_every = d.reorth_every;
  run.pin_base = d.pin_base;
  run.drift_tol = d.drift_tol;

  DimensionReport rep;
  rep.dim_bound_m = k.dim_bound_m;
  rep.dim_threshold = k.dim_threshold;
  const SpectralState g0 = initial_state(cfg, basis, k, cfg.run.seed);
  if (d.pin_base) {
    const LyapunovResult r = lyapunov_spectrum(g0, p, basis, cfg.integrator, run);
    rep.q = r.q_trace;
    rep.exponents = r.exponents;
    rep.kaplan_yorke = r.kaplan_yorke;
    rep.m_star = r.m_star;
    rep.converged = r.converged;
    rep.runs = 1;
  } else {
    QmSampling s;
    s.base_points = d.base_points;
    s.frames = d.frames;
    s.settle = d.settle;
    s.spacing = d.spacing;
    s.run = run;
    const SampledQm r = sample_qm(g0, p, basis, cfg.integrator, s);
    rep.q = r.q_max;
    rep.exponents = r.exponents;
    rep.kaplan_yorke = r.kaplan_yorke;
    rep.m_star = r.m_star;
    rep.converged = r.converged;
    rep.runs = r.runs;
  }

  // Γ certificate on pairs of nearby post-entry trajectories.
  const int pairs = d.pin_base ? 0 : d.gamma_pairs;
  double rho_max = 0.0;
  int pairs_entered = 0;
  {
    CsvWriter csv(dir.file("gamma.csv"), {"pair", "t", "gamma", "dgamma_dt", "rho_gamma"});
    for (int i = 0; i < pairs; ++i) {
      const std::uint64_t seed = cfg.run.seed + 1 + static_cast<std::uint64_t>(i);
      const Trajectory settle = simulate(initial_state(cfg, basis, k, seed), p, basis, cfg.integrator,
                                         d.settle, cfg.run.sample_every);
      if (absorbing_entry_time(measure(settle, p, basis), k.K1)) ++pairs_entered;
      const SpectralState a = settle.final_state();
      SpectralState b = a;
      const FieldTriple delta = detail::random_direction(basis, seed ^ 0x9e3779b97f4a7c15ULL,
                                                         d.gamma_perturbation);
      for (int c = 0; c < 3; ++c)
        for (std::size_t j = 0; j < delta[c].size(); ++j) b.fields[c][j] += delta[c][j];
      const Trajectory ta = simulate(a, p, basis, cfg.integrator, d.gamma_horizon, cfg.run.sample_every);
      const Trajectory tb = simulate(b, p, basis, cfg.integrator, d.gamma_horizon, cfg.run.sample_every);
      const GammaCheck g = check_gamma_growth(ta, tb, p, basis, k, cfg.verify.envelope.rel_slack);
      for (std::size_t s = 0; s < g.t.size(); ++s)
        csv.row(i + 1, g.t[s], g.gamma[s], g.dgamma[s], g.rho * g.gamma[s]);
      rep.gamma_passed = rep.gamma_passed && g.passed();
      rep.gamma_max_excess = std::max(rep.gamma_max_excess.value_or(g.max_excess), g.max_excess);
      rho_max = std::max(rho_max, g.rho);
    }
  }

  bool tail_monotone = true;
  if (rep.m_star)
    for (std::size_t m = static_cast<std::size_t>(*rep.m_star); m < rep.q.size(); ++m)
      tail_monotone = tail_monotone && rep.q[m] <= rep.q[m - 1];
  const bool dominated = rep.m_star && *rep.m_star <= rep.dim_bound_m;

  {
    CsvWriter csv(dir.file("dimension.csv"), {"m", "q_m", "mu_m"});
    for (std::size_t m = 0; m < rep.q.size(); ++m)
      csv.row(static_cast<int>(m + 1), rep.q[m],
              m < rep.exponents.size() ? std::optional<double>(rep.exponents[m]) : std::nullopt);
  }
  std::ostringstream s;
  s << "m_star: " << (rep.m_star ? std::to_string(*rep.m_star) : "none") << '\n'
    << "dim_bound_m: " << rep.dim_bound_m << '\n'
    << "dim_threshold: " << format_number(rep.dim_threshold) << '\n'
    << "certificate_m_star_le_bound: " << verdict(dominated) << '\n'
    << "q_tail_monotone: " << (tail_monotone ? "yes" : "no") << '\n'
    << "kaplan_yorke: " << format_number(rep.kaplan_yorke) << '\n'
    << "runs: " << rep.runs << '\n'
    << "converged: " << (rep.converged ? "yes" : "no") << '\n'
    << "gamma_pairs: " << pairs << " (" << pairs_entered << " entered the absorbing ball)\n"
    << "gamma_certificate: " << (pairs ? std::string(verdict(rep.gamma_passed)) : "not run") << '\n'
    << "gamma_max_excess: "
    << (rep.gamma_max_excess ? format_number(*rep.gamma_max_excess) : "n/a") << '\n'
    << "gamma_rho: " << format_number(rho_max) << '\n'
    << "note: q_m values are sampled lower estimates of the supremum over the attractor\n";
  std::ofstream(dir.file("summary.txt"), std::ios::binary) << s.str();
  out << s.str();
  dir.extra() = {{"m_star", rep.m_star ? nlohmann::ordered_json(*rep.m_star) : nullptr},
                 {"dim_bound_m", rep.dim_bound_m},
                 {"converged", rep.converged},
                 {"gamma_passed", rep.gamma_passed}};
  if (!rep.converged) {
    dir.set_failure("NotConverged", "Lyapunov exponents drifted over the last two windows");
    return kNumericalFailure;
  }
  return rep.gamma_passed && dominated ? kSuccess : kVerificationFailed;
}

struct SweepRow {
  std::vector<double> values;
  double K1 = 0.0;
  std::optional<double> entry_time;
  std::size_t violations = 0;
  std::optional<int> m_star;
  int code = kSuccess;
  std::string status = "ok";
};

inline SweepRow sweep_point(const RunConfig& base, const SineBasis& basis,
                            const std::vector<double>& values) {
  SweepRow row;
  row.values = values;
  RunConfig cfg = base;
  for (std::size_t a = 0; a < values.size(); ++a)
    cfg.params.*(*OregonatorParams::member(base.sweep.axes[a].first)) = values[a];
  try {
    const DerivedConstants k = derive_constants(cfg.params, cfg.domain, cfg.embedding);
    row.K1 = k.K1;
    const SpectralState g0 = initial_state(cfg, basis, k, cfg.run.seed);
    const Trajectory traj = simulate(g0, cfg.params, basis, cfg.integrator, cfg.run.horizon,
                                     cfg.run.sample_every);
    VerifyOptions opt = cfg.verify;
    opt.envelope.dt = cfg.integrator.dt;
    const BoundsReport rep = verify_trajectory(traj, cfg.params, basis, k, opt);
    row.entry_time = rep.entry_time;
    row.violations = rep.violations.size();
    if (!rep.passed()) {
      row.code = kVerificationFailed;
      row.status = "violations";
    }
    if (base.sweep.with_dimension) {
      QmSampling s;
      s.base_points = cfg.dimension.base_points;
      s.frames = cfg.dimension.frames;
      s.settle = cfg.dimension.settle;
      s.spacing = cfg.dimension.spacing;
      s.run.m = cfg.dimension.m_max;
      s.run.horizon = cfg.dimension.horizon;
      s.run.burn_in = cfg.dimension.burn_in;
      s.run.reorth_every = cfg.dimension.reorth_every;
      s.run.drift_tol = cfg.dimension.drift_tol;
      row.m_star = sample_qm(g0, cfg.params, basis, cfg.integrator, s).m_star;
    }
  } catch (const NonPositiveParameter& e) {
    row.code = kConfigError;
    row.status = std::string("config_error: ") + e.what();
  } catch (const Error& e) {
    row.code = kNumericalFailure;
    row.status = std::string("numerical_failure: ") + e.what();
  }
  return row;
}

/// Cartesian product of the sweep axes, last axis fastest.
inline std::vector<std::vector<double>> sweep_points(const SweepOptions& s) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& [name, values] : s.axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : points)
      for (double v : values) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    points = std::move(next);
  }
  return points;
}

inline int cmd_sweep(const RunConfig& cfg, RunDirectory& dir, std::ostream& out, int jobs) {
  const SineBasis basis(cfg.domain);
  const auto points = sweep_points(cfg.sweep);
  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) rows[i] = sweep_point(cfg, basis, points[i]);
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  std::vector<std::jthread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::vector<std::string> header{"point"};
  for (const auto& [name, values] : cfg.sweep.axes) header.push_back(name);
  for (const char* h : {"K1", "entry_time", "violations", "m_star", "status"}) header.push_back(h);
  CsvWriter csv(dir.file("sweep.csv"), header);
  int code = kSuccess;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::vector<std::string> cells{std::to_string(i + 1)};
    for (double v : r.values) cells.push_back(format_number(v));
    cells.push_back(format_number(r.K1));
    cells.push_back(detail::to_cell(r.entry_time));
    cells.push_back(std::to_string(r.violations));
    cells.push_back(detail::to_cell(r.m_star));
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    cells.push_back(status);
    csv.write(cells);
    code = std::max(code, r.code);
    failed += r.code != kSuccess;
  }
  out << "sweep: " << rows.size() << " points, " << failed << " not ok\n";
  dir.extra() = {{"points", rows.size()}, {"not_ok", failed}};
  return code;
}

// ---------------------------------------------------------------------------
// Dispatch

inline bool is_command(std::string_view c) {
  return c == "constants" || c == "simulate" || c == "verify" || c == "dimension" || c == "sweep";
}

/// Loads the configuration, runs one command and maps failures to exit codes.
/// Without `out_dir`, constants only prints; the other commands default to
/// ./oregonator-<command>.
inline int run_command(const std::string& command, const std::string& config_path,
                       const Overrides& overrides, const std::optional<fs::path>& out_dir,
                       int jobs, std::ostream& out, std::ostream& err) {
  if (!is_command(command)) {
    err << "error: unknown command '" << command << "'\n";
    return kConfigError;
  }
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    apply_overrides(cfg, overrides, command);
    validate(cfg);
  } catch (const NonPositiveParameter& e) {
    err << "config error: parameter '" << e.field() << "' must be > 0\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  std::optional<RunDirectory> dir;
  if (out_dir || command != "constants")
    dir.emplace(out_dir.value_or(fs::path("oregonator-" + command)), command, cfg);

  int code = kSuccess;
  try {
    if (command == "constants")
      code = cmd_constants(cfg, dir ? &*dir : nullptr, out);
    else if (command == "simulate")
      code = cmd_simulate(cfg, *dir, out);
    else if (command == "verify")
      code = cmd_verify(cfg, *dir, out);
    else if (command == "dimension")
      code = cmd_dimension(cfg, *dir, out);
    else
      code = cmd_sweep(cfg, *dir, out, jobs);
  } catch (const NonFiniteState& e) {
    err << "numerical failure: " << e.what() << '\n';
    if (dir) dir->set_failure("NonFiniteState", e.what(), e.time());
    code = kNumericalFailure;
  } catch (const NotConverged& e) {
    err << "numerical failure: " << e.what() << '\n';
    if (dir) dir->set_failure("NotConverged", e.what());
    code = kNumericalFailure;
  } catch (const RankDeficient& e) {
    err << "numerical failure: " << e.what() << '\n';
    if (dir) dir->set_failure("RankDeficient", e.what());
    code = kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    if (dir) dir->set_failure("Error", e.what());
    code = kNumericalFailure;
  }
  if (dir) dir->finish(code);
  return code;
}

}  // namespace oregonator
