#pragma once

// Experiment configuration: a flat key = value text file with [sections].
//
//   # comment
//   [integrand]
//   family = quadratic
//   diag = 1, 1, 4
//
// Every key is validated against a fixed schema before any computation; a
// problem is reported as "<file>:<line>: <message>".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wulffstab/integrand.hpp"
#include "wulffstab/stability.hpp"

namespace wulffstab {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ConfigEntry {
  std::string value;
  int line = 0;
};

// section -> key -> entry
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& is, const std::string& source = "config") {
    ConfigFile c;
    c.source_ = source;
    std::string line, section = "general";
    int no = 0;
    while (std::getline(is, line)) {
      ++no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(source, no, "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw ConfigError(source, no, "empty section name");
        c.section_lines_.emplace(section, no);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(source, no, "expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(source, no, "missing key");
      auto& sec = c.data_[section];
      if (sec.count(key)) throw ConfigError(source, no, "duplicate key '" + key + "' in [" + section + "]");
      sec[key] = {trim(line.substr(eq + 1)), no};
    }
    return c;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open config file");
    return parse(in, path);
  }

  const std::string& source() const { return source_; }
  bool has_section(const std::string& s) const { return data_.count(s) > 0; }

  const ConfigEntry* find(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    if (s == data_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  // Rejects sections and keys outside the schema.
  void validate(const std::map<std::string, std::vector<std::string>>& schema) const {
    for (const auto& [section, line] : section_lines_)
      if (!schema.count(section)) throw ConfigError(source_, line, "unknown section [" + section + "]");
    for (const auto& [section, keys] : data_) {
      const auto s = schema.find(section);
      if (s == schema.end()) {
        const auto l = section_lines_.find(section);
        throw ConfigError(source_, l == section_lines_.end() ? 0 : l->second, "unknown section [" + section + "]");
      }
      for (const auto& [key, entry] : keys)
        if (std::find(s->second.begin(), s->second.end(), key) == s->second.end())
          throw ConfigError(source_, entry.line, "unknown key '" + key + "' in [" + section + "]");
    }
  }

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
    const ConfigEntry* e = find(section, key);
    return e ? e->value : fallback;
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    const ConfigEntry* e = find(section, key);
    return e ? to_number(e->value, e->line) : fallback;
  }

  long integer(const std::string& section, const std::string& key, long fallback) const {
    const ConfigEntry* e = find(section, key);
    if (!e) return fallback;
    const double v = to_number(e->value, e->line);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError(source_, e->line, "expected an integer");
    return static_cast<long>(v);
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) const {
    const ConfigEntry* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    throw ConfigError(source_, e->line, "expected true or false");
  }

  std::vector<double> numbers(const std::string& section, const std::string& key,
                              std::vector<double> fallback) const {
    const ConfigEntry* e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(trim(item), e->line));
    if (out.empty()) throw ConfigError(source_, e->line, "expected a comma-separated list of numbers");
    return out;
  }

  int line_of(const std::string& section, const std::string& key) const {
    const ConfigEntry* e = find(section, key);
    return e ? e->line : 0;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const {
    throw ConfigError(source_, line_of(section, key), message);
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  }

  double to_number(const std::string& v, int line) const {
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(v, &used);
    } catch (...) {
      throw ConfigError(source_, line, "expected a number, got '" + v + "'");
    }
    if (used != v.size() || !std::isfinite(d)) throw ConfigError(source_, line, "expected a number, got '" + v + "'");
    return d;
  }

  std::string source_;
  std::map<std::string, std::map<std::string, ConfigEntry>> data_;
  std::map<std::string, int> section_lines_;
};

struct EinsteinSettings {
  std::vector<int> dims{3, 4, 5};
  std::vector<double> kappas{-1.0, 0.0, 1.0};
  std::size_t budget = 200000;       // ratio-bound samples per (n, kappa)
  std::size_t starts = 128;          // local minimizations per polynomial
  std::size_t pinching_samples = 1000000;
  double kappa_bound = 10.0;
  double alpha_p = 10.0;
  double alpha_q = 8.0;
};

struct ExperimentConfig {
  Integrand integrand = Integrand::constant();
  int level = 5;
  int band = 12;
  DerivativeMode mode = DerivativeMode::spectral;
  PerturbationFamily family;
  std::vector<double> amplitudes{1e-4, 2.5e-4, 6.3e-4, 1.6e-3, 4e-3, 1e-2};
  StabilityOptions stability;
  Vec3 translation{0.03, -0.02, 0.0346410161513775};  // center: test translation
  EinsteinSettings einstein;
  std::uint64_t seed = 42;
  std::string out = "results";

  // tolerances
  double gauge_tol = 1e-10;
  double kernel_tol = 0.02;
  double slope_tol = 0.10;
  double drift_tol = 2.0;
  double center_tol = 1e-4;
};

inline const std::map<std::string, std::vector<std::string>>& config_schema() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"general", {"seed", "out", "p"}},
      {"integrand", {"family", "value", "diag", "matrix", "base", "modes"}},
      {"mesh", {"level", "band", "derivatives"}},
      {"perturbation", {"family", "l", "m", "direction", "coefficients", "param", "amplitudes", "normalize_area"}},
      {"center", {"translation", "tolerance", "max_iterations", "threshold"}},
      {"einstein", {"n", "kappa", "budget", "starts", "pinching_samples", "kappa_bound", "p", "q"}},
      {"tolerances", {"gauge", "kernel", "slope", "drift", "center"}},
  };
  return s;
}

namespace detail {

inline Vec3 vector3(const ConfigFile& c, const std::string& sec, const std::string& key, const Vec3& fallback) {
  if (!c.find(sec, key)) return fallback;
  const auto v = c.numbers(sec, key, {});
  if (v.size() != 3) c.fail(sec, key, "expected three components");
  return {v[0], v[1], v[2]};
}

// "l:m:value, l:m:value"
inline std::vector<FourierMode> modes(const ConfigFile& c, const std::string& sec, const std::string& key) {
  std::vector<FourierMode> out;
  const ConfigEntry* e = c.find(sec, key);
  if (!e) return out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    FourierMode md;
    char c1 = 0, c2 = 0;
    std::istringstream is(item);
    if (!(is >> md.l >> c1 >> md.m >> c2 >> md.amplitude) || c1 != ':' || c2 != ':')
      c.fail(sec, key, "expected entries of the form l:m:value");
    if (md.l < 0 || std::abs(md.m) > md.l) c.fail(sec, key, "harmonic index out of range");
    out.push_back(md);
  }
  return out;
}

inline Integrand integrand(const ConfigFile& c) {
  const std::string fam = c.text("integrand", "family", "constant");
  auto base_integrand = [&](const std::string& kind) {
    if (kind == "constant") {
      const double v = c.number("integrand", "value", 1.0);
      if (!(v > 0.0)) c.fail("integrand", "value", "constant integrand must be positive");
      return Integrand::constant(v);
    }
    if (kind == "quadratic") {
      Mat3 m = Mat3::Identity();
      if (c.find("integrand", "matrix")) {
        const auto v = c.numbers("integrand", "matrix", {});
        if (v.size() != 9) c.fail("integrand", "matrix", "expected 9 entries (row-major)");
        for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[static_cast<std::size_t>(i)];
      } else {
        const auto d = c.numbers("integrand", "diag", {1.0, 1.0, 1.0});
        if (d.size() != 3) c.fail("integrand", "diag", "expected three entries");
        m = Vec3(d[0], d[1], d[2]).asDiagonal();
      }
      try {
        return Integrand::quadratic_form(m);
      } catch (const DomainError& e) {
        c.fail("integrand", c.find("integrand", "matrix") ? "matrix" : "diag", e.what());
      }
    }
    c.fail("integrand", "family", "unknown integrand family '" + kind + "'");
  };
  if (fam == "fourier") {
    Integrand base = base_integrand(c.text("integrand", "base", "constant"));
    try {
      return Integrand::fourier_perturbed(base, modes(c, "integrand", "modes"));
    } catch (const DomainError& e) {
      c.fail("integrand", "modes", e.what());
    }
  }
  return base_integrand(fam);
}

}  // namespace detail

inline ExperimentConfig make_config(const ConfigFile& c) {
  c.validate(config_schema());
  ExperimentConfig x;
  x.seed = static_cast<std::uint64_t>(c.integer("general", "seed", 42));
  x.out = c.text("general", "out", x.out);
  x.stability.p = c.number("general", "p", 4.0);
  if (!(x.stability.p > 1.0)) c.fail("general", "p", "p must exceed 1");

  x.integrand = detail::integrand(c);
  try {
    const double margin = x.integrand.ellipticity_margin();
    if (!(margin > 0.0)) c.fail("integrand", "family", "integrand is not elliptic (A_F not positive definite)");
  } catch (const EllipticityError& e) {
    c.fail("integrand", "family", e.what());
  }

  x.level = static_cast<int>(c.integer("mesh", "level", 5));
  if (x.level < 2 || x.level > 8) c.fail("mesh", "level", "mesh level must lie in [2, 8]");
  x.band = static_cast<int>(c.integer("mesh", "band", 12));
  if (x.band < 2) c.fail("mesh", "band", "band must be at least 2");
  const std::string d = c.text("mesh", "derivatives", "spectral");
  if (d == "spectral") x.mode = DerivativeMode::spectral;
  else if (d == "one_ring") x.mode = DerivativeMode::one_ring;
  else c.fail("mesh", "derivatives", "expected spectral or one_ring");
  x.stability.band = x.band;

  const std::string pf = c.text("perturbation", "family", "harmonic");
  if (pf == "harmonic") {
    x.family.kind = PerturbationFamily::Kind::harmonic;
    x.family.l = static_cast<int>(c.integer("perturbation", "l", 2));
    x.family.m = static_cast<int>(c.integer("perturbation", "m", 0));
    if (x.family.l < 0 || std::abs(x.family.m) > x.family.l) c.fail("perturbation", "m", "harmonic index out of range");
    if (x.family.l > x.band) c.fail("perturbation", "l", "harmonic degree exceeds the band");
  } else if (pf == "kernel") {
    x.family.kind = PerturbationFamily::Kind::kernel;
    x.family.direction = detail::vector3(c, "perturbation", "direction", Vec3(0.48, -0.6, 0.64));
    if (x.family.direction.norm() == 0.0) c.fail("perturbation", "direction", "direction must be non-zero");
  } else if (pf == "custom") {
    x.family.kind = PerturbationFamily::Kind::custom;
    const auto md = detail::modes(c, "perturbation", "coefficients");
    if (md.empty()) c.fail("perturbation", "family", "custom family needs coefficients = l:m:value, ...");
    int top = 0;
    for (const auto& m : md) top = std::max(top, m.l);
    if (top > x.band) c.fail("perturbation", "coefficients", "harmonic degree exceeds the band");
    x.family.custom = single_harmonic(top, 0, 0.0);
    for (const auto& m : md) x.family.custom = combine(x.family.custom, 1.0, single_harmonic(m.l, m.m, m.amplitude), 1.0);
  } else {
    c.fail("perturbation", "family", "expected harmonic, kernel or custom");
  }
  // exponential graphs only exist over the round sphere, so anisotropic runs default to radial
  const bool round = x.integrand.family() == IntegrandFamily::constant;
  const std::string par =
      c.text("perturbation", "param", x.family.kind == PerturbationFamily::Kind::kernel || !round ? "radial" : "exponential");
  if (par == "radial") x.family.param = Parametrization::radial;
  else if (par == "exponential") x.family.param = Parametrization::exponential;
  else c.fail("perturbation", "param", "expected radial or exponential");
  if (x.family.param == Parametrization::exponential && !round)
    c.fail("perturbation", "param", "exponential graphs need the constant integrand");
  x.stability.normalize_area = c.boolean("perturbation", "normalize_area", false);

  x.amplitudes = c.numbers("perturbation", "amplitudes", x.amplitudes);
  for (std::size_t i = 0; i < x.amplitudes.size(); ++i) {
    if (!(x.amplitudes[i] > 0.0)) c.fail("perturbation", "amplitudes", "amplitudes must be positive");
    if (i > 0 && !(x.amplitudes[i] > x.amplitudes[i - 1]))
      c.fail("perturbation", "amplitudes", "amplitudes must be strictly increasing");
  }

  x.translation = detail::vector3(c, "center", "translation", x.translation);
  x.stability.centering.tolerance = c.number("center", "tolerance", 1e-8);
  x.stability.centering.max_iterations = static_cast<int>(c.integer("center", "max_iterations", 25));
  x.stability.centering.threshold = c.number("center", "threshold", 0.1);
  if (x.stability.centering.max_iterations < 1) c.fail("center", "max_iterations", "need at least one iteration");

  auto& e = x.einstein;
  if (c.find("einstein", "n")) {
    e.dims.clear();
    for (double v : c.numbers("einstein", "n", {})) {
      if (v != std::floor(v) || v < 3 || v > 12) c.fail("einstein", "n", "dimensions must be integers in [3, 12]");
      e.dims.push_back(static_cast<int>(v));
    }
  }
  e.kappa_bound = c.number("einstein", "kappa_bound", 10.0);
  e.kappas = c.numbers("einstein", "kappa", e.kappas);
  for (double k : e.kappas)
    if (std::abs(k) > e.kappa_bound) c.fail("einstein", "kappa", "kappa exceeds kappa_bound");
  auto count = [&](const char* key, std::size_t fallback) {
    const long v = c.integer("einstein", key, static_cast<long>(fallback));
    if (v < 1) c.fail("einstein", key, "sample counts must be positive");
    return static_cast<std::size_t>(v);
  };
  e.budget = count("budget", e.budget);
  e.starts = count("starts", e.starts);
  e.pinching_samples = count("pinching_samples", e.pinching_samples);
  e.alpha_p = c.number("einstein", "p", e.alpha_p);
  e.alpha_q = c.number("einstein", "q", e.alpha_q);

  x.gauge_tol = c.number("tolerances", "gauge", x.gauge_tol);
  x.kernel_tol = c.number("tolerances", "kernel", x.kernel_tol);
  x.slope_tol = c.number("tolerances", "slope", x.slope_tol);
  x.drift_tol = c.number("tolerances", "drift", x.drift_tol);
  x.center_tol = c.number("tolerances", "center", x.center_tol);
  return x;
}

}  // namespace wulffstab
