#pragma once

// Run configuration: a flat INI file with one section per concern. Unknown
// sections and keys are hard errors, and every [params] key is required.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oregonator/bounds.hpp"
#include "oregonator/dynamics.hpp"
#include "oregonator/errors.hpp"
#include "oregonator/model.hpp"
#include "oregonator/tangent.hpp"

namespace oregonator {

enum class InitialData { random, zero, negative };

struct RunOptions {
  double horizon = 20.0;
  std::int64_t sample_every = 10;
  std::uint64_t seed = 1;
  InitialData initial = InitialData::random;
  /// Initial weighted energy E_w(0) as a multiple of K1.
  double energy_factor = 10.0;
  int bandwidth = 4;
};

struct DimensionOptions {
  int m_max = 6;
  double horizon = 20.0;
  double burn_in = 2.0;
  int reorth_every = 10;
  double drift_tol = 1e-2;
  bool pin_base = false;
  int base_points = 10;
  int frames = 3;
  double settle = 5.0;
  double spacing = 0.5;
  int gamma_pairs = 5;
  double gamma_horizon = 5.0;
  double gamma_perturbation = 1e-3;
};

struct SweepOptions {
  /// Parameter name → values, in file order. The sweep is their product.
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  bool with_dimension = true;
};

struct RunConfig {
  OregonatorParams params;
  DomainSpec domain;
  EmbeddingConstants embedding;
  IntegratorConfig integrator;
  RunOptions run;
  VerifyOptions verify;
  DimensionOptions dimension;
  SweepOptions sweep;

  /// Section → key → value as read (after overrides), for the manifest echo.
  std::map<std::string, std::map<std::string, std::string>> echo;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last)
    throw ConfigParse("key '" + key + "': expected a number, got '" + text + "'");
  return x;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int x = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last)
    throw ConfigParse("key '" + key + "': expected an integer, got '" + text + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "on" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "0" || text == "no") return false;
  throw ConfigParse("key '" + key + "': expected on/off, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigParse("key '" + key + "': empty list item");
    out.push_back(parse_double(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigParse("key '" + key + "': empty value list");
  return out;
}

/// Reads one section, dispatching each key to its setter.
class SectionReader {
 public:
  SectionReader(std::string name, const boost::property_tree::ptree* tree,
                std::map<std::string, std::string>& echo)
      : name_(std::move(name)), tree_(tree), echo_(echo) {}

  template <class Setter>
  void optional(const std::string& key, Setter set) {
    known_.push_back(key);
    if (!tree_) return;
    if (auto v = tree_->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'))) {
      set(qualified(key), *v);
      echo_[key] = *v;
    }
  }

  template <class Setter>
  void required(const std::string& key, Setter set) {
    if (!tree_ || !tree_->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0')))
      throw ConfigParse("missing key '" + qualified(key) + "'");
    optional(key, set);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      bool ok = false;
      for (const auto& k : known_) ok = ok || k == key;
      if (!ok) throw ConfigParse("unknown key '" + qualified(key) + "'");
    }
  }

  std::string qualified(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
  std::map<std::string, std::string>& echo_;
  std::vector<std::string> known_;
};

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigParse(std::string("malformed configuration: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }

  static const char* sections[] = {"params",    "domain",    "embedding", "integrator",
                                   "run",       "verify",    "dimension", "sweep"};
  for (const auto& [name, child] : tree) {
    bool ok = false;
    for (const char* s : sections) ok = ok || name == s;
    if (!ok) throw ConfigParse("unknown section '" + name + "'");
  }

  RunConfig cfg;
  auto section = [&](const std::string& name) {
    const auto it = tree.find(name);
    const pt::ptree* sub = it == tree.not_found() ? nullptr : &it->second;
    return detail::SectionReader(name, sub, cfg.echo[name]);
  };
  auto real = [](double& target) {
    return [&target](const std::string& k, const std::string& v) { target = detail::parse_double(k, v); };
  };
  auto integer = [](auto& target) {
    return [&target](const std::string& k, const std::string& v) {
      target = detail::parse_int<std::remove_reference_t<decltype(target)>>(k, v);
    };
  };
  auto boolean = [](bool& target) {
    return [&target](const std::string& k, const std::string& v) { target = detail::parse_bool(k, v); };
  };

  {
    auto s = section("params");
    for (const auto& [name, ptr] : OregonatorParams::fields)
      s.required(std::string(name), real(cfg.params.*ptr));
    s.reject_unknown();
  }
  {
    auto s = section("domain");
    s.optional("dimension", integer(cfg.domain.dimension));
    s.optional("L1", real(cfg.domain.L1));
    s.optional("L2", real(cfg.domain.L2));
    s.optional("modes", integer(cfg.domain.modes));
    s.optional("grid", integer(cfg.domain.grid));
    s.reject_unknown();
  }
  {
    auto s = section("embedding");
    auto& e = cfg.embedding;
    s.optional("eta", real(e.eta));
    s.optional("gn_C", real(e.gn_C));
    s.optional("lt_Psi", real(e.lt_Psi));
    s.optional("reg_C2", real(e.reg_C2));
    s.optional("N0", [&](const std::string& k, const std::string& v) { e.N0 = detail::parse_double(k, v); });
    s.optional("N1", [&](const std::string& k, const std::string& v) { e.N1 = detail::parse_double(k, v); });
    s.optional("corrected_gamma", boolean(e.corrected_poincare_direction));
    s.reject_unknown();
  }
  {
    auto s = section("integrator");
    auto& c = cfg.integrator;
    s.optional("dt", real(c.dt));
    s.optional("scheme", [&](const std::string& k, const std::string& v) {
      if (v == "imex_euler")
        c.scheme = Scheme::imex_euler;
      else if (v == "imex_rk2")
        c.scheme = Scheme::imex_rk2;
      else
        throw ConfigParse("key '" + k + "': expected imex_euler or imex_rk2, got '" + v + "'");
    });
    s.optional("pos_tol", real(c.pos_tol));
    s.optional("clip_negatives", boolean(c.clip_negatives));
    s.optional("reaction", boolean(c.reaction_enabled));
    s.optional("blowup_threshold", real(c.blowup_threshold));
    s.reject_unknown();
  }
  {
    auto s = section("run");
    auto& r = cfg.run;
    s.optional("horizon", real(r.horizon));
    s.optional("sample_every", integer(r.sample_every));
    s.optional("seed", integer(r.seed));
    s.optional("initial", [&](const std::string& k, const std::string& v) {
      if (v == "random")
        r.initial = InitialData::random;
      else if (v == "zero")
        r.initial = InitialData::zero;
      else if (v == "negative")
        r.initial = InitialData::negative;
      else
        throw ConfigParse("key '" + k + "': expected random, zero or negative, got '" + v + "'");
    });
    s.optional("energy_factor", real(r.energy_factor));
    s.optional("bandwidth", integer(r.bandwidth));
    s.reject_unknown();
  }
  {
    auto s = section("verify");
    auto& v = cfg.verify;
    s.optional("rel_slack", real(v.envelope.rel_slack));
    s.optional("holder_samples", integer(v.holder_samples));
    s.optional("l6_envelope", [&](const std::string& k, const std::string& x) {
      if (x == "printed")
        v.l6_form = L6Envelope::printed;
      else if (x == "corrected")
        v.l6_form = L6Envelope::corrected;
      else
        throw ConfigParse("key '" + k + "': expected printed or corrected, got '" + x + "'");
    });
    s.reject_unknown();
  }
  {
    auto s = section("dimension");
    auto& d = cfg.dimension;
    s.optional("m_max", integer(d.m_max));
    s.optional("horizon", real(d.horizon));
    s.optional("burn_in", real(d.burn_in));
    s.optional("reorth_every", integer(d.reorth_every));
    s.optional("drift_tol", real(d.drift_tol));
    s.optional("pin_base", boolean(d.pin_base));
    s.optional("base_points", integer(d.base_points));
    s.optional("frames", integer(d.frames));
    s.optional("settle", real(d.settle));
    s.optional("spacing", real(d.spacing));
    s.optional("gamma_pairs", integer(d.gamma_pairs));
    s.optional("gamma_horizon", real(d.gamma_horizon));
    s.optional("gamma_perturbation", real(d.gamma_perturbation));
    s.reject_unknown();
  }
  {
    const auto it = tree.find("sweep");
    if (it != tree.not_found()) {
      auto& echo = cfg.echo["sweep"];
      for (const auto& [key, child] : it->second) {
        const std::string value = child.get_value<std::string>();
        echo[key] = value;
        if (key == "with_dimension") {
          cfg.sweep.with_dimension = detail::parse_bool("sweep." + key, value);
        } else if (OregonatorParams::member(key)) {
          cfg.sweep.axes.emplace_back(key, detail::parse_list("sweep." + key, value));
        } else {
          throw ConfigParse("unknown key 'sweep." + key + "'");
        }
      }
    }
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParse("cannot open configuration file '" + path + "'");
  return parse_config(in);
}

/// Checks everything that can be checked without running anything.
inline void validate(const RunConfig& cfg) {
  validate_params(cfg.params);
  cfg.domain.validate();
  cfg.embedding.validate();
  cfg.integrator.validate();
  if (!(cfg.run.horizon >= 0.0)) throw ConfigParse("run.horizon must be >= 0");
  if (cfg.run.sample_every < 1) throw ConfigParse("run.sample_every must be >= 1");
  if (!(cfg.run.energy_factor >= 0.0)) throw ConfigParse("run.energy_factor must be >= 0");
  const auto& d = cfg.dimension;
  const int limit = 3 * static_cast<int>(cfg.domain.dimension == 1
                                             ? cfg.domain.modes
                                             : cfg.domain.modes * cfg.domain.modes);
  if (d.m_max < 1 || d.m_max > limit)
    throw ConfigParse("dimension.m_max must lie in [1, 3 x retained modes]");
  if (d.reorth_every < 1) throw ConfigParse("dimension.reorth_every must be >= 1");
  if (d.base_points < 1 || d.frames < 1) throw ConfigParse("dimension.base_points and frames must be >= 1");
  if (d.gamma_pairs < 0) throw ConfigParse("dimension.gamma_pairs must be >= 0");
}

}  // namespace oregonator
