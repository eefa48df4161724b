#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "fcable/experiments.hpp"
#include "fcable/model.hpp"
#include "fcable/version.hpp"

namespace fcable {

enum class Subcommand { simulate, kernel_table, noise_check, convergence };

inline const char* subcommand_name(Subcommand sub) {
  switch (sub) {
    case Subcommand::simulate: return "simulate";
    case Subcommand::kernel_table: return "kernel-table";
    case Subcommand::noise_check: return "noise-check";
    case Subcommand::convergence: return "convergence";
  }
  throw std::invalid_argument("subcommand_name: unknown subcommand");
}

/// Typed view of a key = value config file. Fields not named in the file keep
/// their defaults; `present` records which keys the file actually set.
struct RunConfig {
  double alpha = 0.5;
  double beta = 0.5;
  double s = 0.5;
  double lambda = 1.0;
  double mu = 1.0;
  double length_l = 1.0;
  double horizon_t = 1.0;
  double hurst_h1 = 0.5;
  double hurst_h2 = 0.5;
  GammaKind gamma_kind = GammaKind::zero;
  double gamma_scale = 0.0;
  NonlinearityKind f_kind = NonlinearityKind::zero;
  double f_scale = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_modes = 1;
  std::size_t n_steps = 1;
  std::size_t wz_time = 1;
  std::size_t wz_space = 1;
  std::size_t record_every = 1;
  std::size_t field_points = 33;
  std::size_t field_snapshots = 5;
  bool noise_enabled = false;
  std::vector<double> table_times;
  std::size_t table_modes = 8;
  std::size_t nc_time_cells = 4;
  std::size_t nc_space_cells = 4;
  std::size_t nc_samples = 2000;
  StudyKind study_kind = StudyKind::temporal;
  std::size_t n_samples = 200;
  std::vector<Discretization> ladder;
  double slope_tol_lo = 0.3;
  double slope_tol_hi = 0.3;
  double error_time = 0.0;
  double sigma = 0.5;
  double theta_margin = 0.01;

  std::set<std::string> present;

  bool has(std::string_view key) const {
    return present.count(std::string(key)) != 0;
  }

  bool operator==(const RunConfig&) const = default;
};

/// Shortest decimal form that parses back to the same double (17 significant
/// digits covers every value).
inline std::string format_double(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  if (n <= 0 || static_cast<std::size_t>(n) >= sizeof buf)
    throw std::runtime_error("format_double: formatting failed");
  return std::string(buf, static_cast<std::size_t>(n));
}

namespace detail {

inline const std::vector<std::string>& config_key_universe() {
  static const std::vector<std::string> keys = {
      "alpha",         "beta",
      "s",             "lambda",
      "mu",            "length_l",
      "horizon_t",     "hurst_h1",
      "hurst_h2",      "gamma_kind",
      "gamma_scale",   "f_kind",
      "f_scale",       "seed",
      "n_modes",       "n_steps",
      "wz_time",       "wz_space",
      "record_every",  "field_points",
      "field_snapshots", "noise_enabled",
      "table_times",   "table_modes",
      "nc_time_cells", "nc_space_cells",
      "nc_samples",    "study_kind",
      "n_samples",     "ladder",
      "slope_tol_lo",  "slope_tol_hi",
      "error_time",    "sigma",
      "theta_margin"};
  return keys;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] inline void config_error(std::size_t line, std::string_view key,
                                      std::string_view what) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": key '" +
                              std::string(key) + "': " + std::string(what));
}

inline double parse_real(std::size_t line, std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    config_error(line, key, "expected a finite decimal number, got '" +
                                std::string(v) + "'");
  return out;
}

inline std::uint64_t parse_unsigned(std::size_t line, std::string_view key,
                                    std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    config_error(line, key,
                 "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

inline std::size_t parse_count(std::size_t line, std::string_view key,
                               std::string_view v, std::uint64_t min_value) {
  const std::uint64_t out = parse_unsigned(line, key, v);
  if (out < min_value)
    config_error(line, key, "value must be at least " + std::to_string(min_value));
  return static_cast<std::size_t>(out);
}

inline std::string lower(std::string_view v) {
  std::string out(v);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline bool parse_bool(std::size_t line, std::string_view key, std::string_view v) {
  const std::string w = lower(v);
  if (w == "true") return true;
  if (w == "false") return false;
  config_error(line, key, "expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<std::string_view> split(std::string_view v, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = v.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(v.substr(start));
      return parts;
    }
    parts.push_back(v.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<double> parse_real_list(std::size_t line, std::string_view key,
                                           std::string_view v) {
  std::vector<double> out;
  for (std::string_view part : split(v, ',')) {
    part = trim(part);
    if (part.empty())
      config_error(line, key, "empty entry in comma-separated list");
    out.push_back(parse_real(line, key, part));
  }
  return out;
}

/// Ladder entries are written n_modes x n_steps x wz_time x wz_space,
/// e.g. "64x32x32x8"; entries are comma separated.
inline std::vector<Discretization> parse_ladder(std::size_t line, std::string_view key,
                                                std::string_view v) {
  std::vector<Discretization> out;
  for (std::string_view entry : split(v, ',')) {
    entry = trim(entry);
    std::vector<std::string_view> dims = split(entry, 'x');
    if (dims.size() != 4)
      config_error(line, key,
                   "ladder entry '" + std::string(entry) +
                       "' must have the form n_modes x n_steps x wz_time x wz_space");
    Discretization d;
    d.n_modes = parse_count(line, key, trim(dims[0]), 1);
    d.n_steps = parse_count(line, key, trim(dims[1]), 1);
    d.wz_time = parse_count(line, key, trim(dims[2]), 1);
    d.wz_space = parse_count(line, key, trim(dims[3]), 1);
    out.push_back(d);
  }
  return out;
}

inline GammaKind parse_gamma_kind(std::size_t line, std::string_view key,
                                  std::string_view v) {
  const std::string w = lower(v);
  if (w == "zero") return GammaKind::zero;
  if (w == "poly_t") return GammaKind::poly_t;
  if (w == "sin_t") return GammaKind::sin_t;
  config_error(line, key,
               "expected one of zero, poly_t, sin_t; got '" + std::string(v) + "'");
}

inline NonlinearityKind parse_f_kind(std::size_t line, std::string_view key,
                                     std::string_view v) {
  const std::string w = lower(v);
  if (w == "zero") return NonlinearityKind::zero;
  if (w == "linear") return NonlinearityKind::linear;
  if (w == "bounded_sin") return NonlinearityKind::bounded_sin;
  config_error(line, key, "expected one of zero, linear, bounded_sin; got '" +
                              std::string(v) + "'");
}

inline StudyKind parse_study_kind(std::size_t line, std::string_view key,
                                  std::string_view v) {
  const std::string w = lower(v);
  if (w == "temporal") return StudyKind::temporal;
  if (w == "spatial_modes") return StudyKind::spatial_modes;
  if (w == "wz_mesh") return StudyKind::wz_mesh;
  if (w == "deterministic") return StudyKind::deterministic;
  config_error(line, key,
               "expected one of temporal, spatial_modes, wz_mesh, deterministic; "
               "got '" +
                   std::string(v) + "'");
}

inline double parse_real_in(std::size_t line, std::string_view key, std::string_view v,
                            double lo, double hi, bool open_lo, bool open_hi,
                            const char* range_text) {
  const double x = parse_real(line, key, v);
  const bool below = open_lo ? !(x > lo) : !(x >= lo);
  const bool above = open_hi ? !(x < hi) : !(x <= hi);
  if (below || above)
    config_error(line, key,
                 "value " + format_double(x) + " out of range, must lie in " +
                     range_text);
  return x;
}

inline const char* gamma_kind_name(GammaKind kind) {
  switch (kind) {
    case GammaKind::zero: return "zero";
    case GammaKind::poly_t: return "poly_t";
    case GammaKind::sin_t: return "sin_t";
  }
  throw std::invalid_argument("gamma_kind_name: unknown kind");
}

inline const char* f_kind_name(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::zero: return "zero";
    case NonlinearityKind::linear: return "linear";
    case NonlinearityKind::bounded_sin: return "bounded_sin";
  }
  throw std::invalid_argument("f_kind_name: unknown kind");
}

inline const char* study_kind_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::temporal: return "temporal";
    case StudyKind::spatial_modes: return "spatial_modes";
    case StudyKind::wz_mesh: return "wz_mesh";
    case StudyKind::deterministic: return "deterministic";
  }
  throw std::invalid_argument("study_kind_name: unknown kind");
}

inline std::string emit_value(const RunConfig& c, std::string_view key) {
  if (key == "alpha") return format_double(c.alpha);
  if (key == "beta") return format_double(c.beta);
  if (key == "s") return format_double(c.s);
  if (key == "lambda") return format_double(c.lambda);
  if (key == "mu") return format_double(c.mu);
  if (key == "length_l") return format_double(c.length_l);
  if (key == "horizon_t") return format_double(c.horizon_t);
  if (key == "hurst_h1") return format_double(c.hurst_h1);
  if (key == "hurst_h2") return format_double(c.hurst_h2);
  if (key == "gamma_kind") return gamma_kind_name(c.gamma_kind);
  if (key == "gamma_scale") return format_double(c.gamma_scale);
  if (key == "f_kind") return f_kind_name(c.f_kind);
  if (key == "f_scale") return format_double(c.f_scale);
  if (key == "seed") return std::to_string(c.seed);
  if (key == "n_modes") return std::to_string(c.n_modes);
  if (key == "n_steps") return std::to_string(c.n_steps);
  if (key == "wz_time") return std::to_string(c.wz_time);
  if (key == "wz_space") return std::to_string(c.wz_space);
  if (key == "record_every") return std::to_string(c.record_every);
  if (key == "field_points") return std::to_string(c.field_points);
  if (key == "field_snapshots") return std::to_string(c.field_snapshots);
  if (key == "noise_enabled") return c.noise_enabled ? "true" : "false";
  if (key == "table_times") {
    std::string out;
    for (std::size_t i = 0; i < c.table_times.size(); ++i) {
      if (i > 0) out += ", ";
      out += format_double(c.table_times[i]);
    }
    return out;
  }
  if (key == "table_modes") return std::to_string(c.table_modes);
  if (key == "nc_time_cells") return std::to_string(c.nc_time_cells);
  if (key == "nc_space_cells") return std::to_string(c.nc_space_cells);
  if (key == "nc_samples") return std::to_string(c.nc_samples);
  if (key == "study_kind") return study_kind_name(c.study_kind);
  if (key == "n_samples") return std::to_string(c.n_samples);
  if (key == "ladder") {
    std::string out;
    for (std::size_t i = 0; i < c.ladder.size(); ++i) {
      if (i > 0) out += ", ";
      const Discretization& d = c.ladder[i];
      out += std::to_string(d.n_modes) + "x" + std::to_string(d.n_steps) + "x" +
             std::to_string(d.wz_time) + "x" + std::to_string(d.wz_space);
    }
    return out;
  }
  if (key == "slope_tol_lo") return format_double(c.slope_tol_lo);
  if (key == "slope_tol_hi") return format_double(c.slope_tol_hi);
  if (key == "error_time") return format_double(c.error_time);
  if (key == "sigma") return format_double(c.sigma);
  if (key == "theta_margin") return format_double(c.theta_margin);
  throw std::invalid_argument("emit_value: unknown key '" + std::string(key) + "'");
}

inline void apply_key(RunConfig& c, std::size_t line, std::string_view key,
                      std::string_view v) {
  if (key == "alpha")
    c.alpha = parse_real_in(line, key, v, 0.0, 1.0, true, true, "(0, 1)");
  else if (key == "beta")
    c.beta = parse_real_in(line, key, v, 0.0, 1.0, true, true, "(0, 1)");
  else if (key == "s")
    c.s = parse_real_in(line, key, v, 0.0, 1.0, true, true, "(0, 1)");
  else if (key == "lambda")
    c.lambda = parse_real_in(line, key, v, 0.0, 1e12, false, true, "[0, 1e12)");
  else if (key == "mu")
    c.mu = parse_real_in(line, key, v, 0.0, 1e12, true, true, "(0, 1e12)");
  else if (key == "length_l")
    c.length_l = parse_real_in(line, key, v, 0.0, 1e12, true, true, "(0, 1e12)");
  else if (key == "horizon_t")
    c.horizon_t = parse_real_in(line, key, v, 0.0, 1e12, true, true, "(0, 1e12)");
  else if (key == "hurst_h1")
    c.hurst_h1 = parse_real_in(line, key, v, 0.0, 0.5, true, false, "(0, 1/2]");
  else if (key == "hurst_h2")
    c.hurst_h2 = parse_real_in(line, key, v, 0.0, 0.5, true, false, "(0, 1/2]");
  else if (key == "gamma_kind")
    c.gamma_kind = parse_gamma_kind(line, key, v);
  else if (key == "gamma_scale")
    c.gamma_scale = parse_real(line, key, v);
  else if (key == "f_kind")
    c.f_kind = parse_f_kind(line, key, v);
  else if (key == "f_scale")
    c.f_scale = parse_real(line, key, v);
  else if (key == "seed")
    c.seed = parse_unsigned(line, key, v);
  else if (key == "n_modes")
    c.n_modes = parse_count(line, key, v, 1);
  else if (key == "n_steps")
    c.n_steps = parse_count(line, key, v, 1);
  else if (key == "wz_time")
    c.wz_time = parse_count(line, key, v, 1);
  else if (key == "wz_space")
    c.wz_space = parse_count(line, key, v, 1);
  else if (key == "record_every")
    c.record_every = parse_count(line, key, v, 1);
  else if (key == "field_points")
    c.field_points = parse_count(line, key, v, 2);
  else if (key == "field_snapshots")
    c.field_snapshots = parse_count(line, key, v, 1);
  else if (key == "noise_enabled")
    c.noise_enabled = parse_bool(line, key, v);
  else if (key == "table_times") {
    c.table_times = parse_real_list(line, key, v);
    for (double t : c.table_times)
      if (t < 0.0) config_error(line, key, "times must be non-negative");
  } else if (key == "table_modes")
    c.table_modes = parse_count(line, key, v, 1);
  else if (key == "nc_time_cells")
    c.nc_time_cells = parse_count(line, key, v, 1);
  else if (key == "nc_space_cells")
    c.nc_space_cells = parse_count(line, key, v, 1);
  else if (key == "nc_samples")
    c.nc_samples = parse_count(line, key, v, 2);
  else if (key == "study_kind")
    c.study_kind = parse_study_kind(line, key, v);
  else if (key == "n_samples")
    c.n_samples = parse_count(line, key, v, 1);
  else if (key == "ladder")
    c.ladder = parse_ladder(line, key, v);
  else if (key == "slope_tol_lo")
    c.slope_tol_lo = parse_real_in(line, key, v, 0.0, 1e3, false, true, "[0, 1e3)");
  else if (key == "slope_tol_hi")
    c.slope_tol_hi = parse_real_in(line, key, v, 0.0, 1e3, false, true, "[0, 1e3)");
  else if (key == "error_time")
    c.error_time = parse_real_in(line, key, v, 0.0, 1e12, false, true, "[0, 1e12)");
  else if (key == "sigma")
    c.sigma = parse_real_in(line, key, v, 0.0, 1.0, true, false, "(0, 1]");
  else if (key == "theta_margin")
    c.theta_margin = parse_real_in(line, key, v, 0.0, 0.5, false, true, "[0, 1/2)");
  else
    throw std::invalid_argument("config line " + std::to_string(line) +
                                ": unknown key '" + std::string(key) + "'");
}

}  // namespace detail

/// Parses strict line-oriented `key = value` text. `#` starts a comment, blank
/// lines are skipped, keys may appear at most once, unknown keys are rejected,
/// values are type- and range-checked. Errors name the line and key.
inline RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::size_t line_no = 0;
  for (std::string_view raw : detail::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value', got '" +
                                  std::string(line) + "'");
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": missing key before '='");
    if (value.empty())
      detail::config_error(line_no, key, "missing value after '='");
    if (c.present.count(std::string(key)))
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": duplicate key '" + std::string(key) + "'");
    detail::apply_key(c, line_no, key, value);
    c.present.insert(std::string(key));
  }
  return c;
}

/// Serializes exactly the keys marked present, in canonical order, so that
/// parse_config(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& c) {
  std::string out;
  for (const std::string& key : detail::config_key_universe()) {
    if (!c.has(key)) continue;
    out += key;
    out += " = ";
    out += detail::emit_value(c, key);
    out += "\n";
  }
  return out;
}

/// Checks that every key the given subcommand consumes was actually present.
/// Conditionally required keys: noise keys for simulate with noise_enabled,
/// sample count and Hurst indices for stochastic convergence studies.
inline void require_keys(const RunConfig& c, Subcommand sub) {
  std::vector<std::string> required;
  const auto model_keys = [&required]() {
    for (const char* k : {"alpha", "beta", "s", "lambda", "mu", "length_l"})
      required.push_back(k);
  };
  switch (sub) {
    case Subcommand::simulate:
      model_keys();
      required.insert(required.end(), {"horizon_t", "n_modes", "n_steps"});
      if (c.noise_enabled)
        required.insert(required.end(),
                        {"hurst_h1", "hurst_h2", "wz_time", "wz_space"});
      break;
    case Subcommand::kernel_table:
      model_keys();
      required.insert(required.end(), {"table_modes", "table_times"});
      break;
    case Subcommand::noise_check:
      required.insert(required.end(),
                      {"hurst_h1", "hurst_h2", "horizon_t", "length_l",
                       "nc_time_cells", "nc_space_cells", "nc_samples"});
      break;
    case Subcommand::convergence:
      model_keys();
      required.insert(required.end(),
                      {"horizon_t", "study_kind", "n_modes", "n_steps", "wz_time",
                       "wz_space", "ladder", "slope_tol_lo", "slope_tol_hi"});
      if (c.study_kind != StudyKind::deterministic)
        required.insert(required.end(), {"hurst_h1", "hurst_h2", "n_samples"});
      break;
  }
  std::string missing;
  for (const std::string& key : required) {
    if (c.has(key)) continue;
    if (!missing.empty()) missing += ", ";
    missing += key;
  }
  if (!missing.empty())
    throw std::invalid_argument(std::string(subcommand_name(sub)) +
                                ": missing required keys: " + missing);
}

inline ModelParams to_model_params(const RunConfig& c) {
  ModelParams p;
  p.alpha = c.alpha;
  p.beta = c.beta;
  p.s = c.s;
  p.lambda = c.lambda;
  p.mu = c.mu;
  p.length_l = c.length_l;
  p.horizon_t = c.horizon_t;
  p.hurst = HurstPair(c.hurst_h1, c.hurst_h2);
  p.gamma = GammaSpec{c.gamma_kind, c.gamma_scale};
  switch (c.f_kind) {
    case NonlinearityKind::zero: p.nonlinearity = NonlinearitySpec::zero(); break;
    case NonlinearityKind::linear:
      p.nonlinearity = NonlinearitySpec::linear(c.f_scale);
      break;
    case NonlinearityKind::bounded_sin:
      p.nonlinearity = NonlinearitySpec::bounded_sin(c.f_scale);
      break;
  }
  return p;
}

inline Discretization to_discretization(const RunConfig& c) {
  return Discretization{c.n_modes, c.n_steps, c.wz_time, c.wz_space};
}

inline StudySpec to_study_spec(const RunConfig& c) {
  StudySpec spec;
  spec.params = to_model_params(c);
  spec.reference = to_discretization(c);
  spec.ladder = c.ladder;
  spec.n_samples = c.n_samples;
  spec.seed = c.seed;
  spec.error_time = c.error_time;
  spec.kind = c.study_kind;
  spec.sigma = c.sigma;
  spec.theta_margin = c.theta_margin;
  return spec;
}

/// CSV metadata header: `# key = value` lines carrying tool identity, the RNG
/// name, caller-supplied extras (seed, wall time), and the full config echo.
inline void write_metadata_block(
    std::ostream& os, const RunConfig& c,
    const std::vector<std::pair<std::string, std::string>>& extra) {
  os << "# tool = " << kToolName << " " << kToolVersion << "\n";
  os << "# rng = " << kRngIdentity << "\n";
  for (const auto& [key, value] : extra) os << "# " << key << " = " << value << "\n";
  for (const std::string& key : detail::config_key_universe()) {
    if (!c.has(key)) continue;
    os << "# " << key << " = " << detail::emit_value(c, key) << "\n";
  }
}

}  // namespace fcable
