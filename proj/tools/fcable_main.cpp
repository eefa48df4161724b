#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "fcable/config.hpp"
#include "fcable/experiments.hpp"
#include "fcable/kernel.hpp"
#include "fcable/noise.hpp"
#include "fcable/solver.hpp"
#include "fcable/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitToleranceFail = 1;
constexpr int kExitInputError = 2;
constexpr int kExitIoError = 3;

using Clock = std::chrono::steady_clock;
using MetaList = std::vector<std::pair<std::string, std::string>>;

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw std::ios_base::failure("cannot read config file '" + path + "'");
  return os.str();
}

std::ofstream open_output(const std::string& out_dir, const std::string& name,
                          std::string& full_path) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::ios_base::failure("cannot create output directory '" + out_dir +
                                 "': " + ec.message());
  const fs::path file = dir / name;
  full_path = file.string();
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::ios_base::failure("cannot open output file '" + full_path + "'");
  return os;
}

void finish_output(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw std::ios_base::failure("write failed for '" + path + "'");
}

std::string wall_ms_since(Clock::time_point start) {
  const auto elapsed = Clock::now() - start;
  const double ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed)
          .count();
  return fcable::format_double(ms);
}

MetaList base_meta(const char* subcommand, const CliOptions& opt,
                   Clock::time_point start) {
  return {{"subcommand", subcommand},
          {"threads", std::to_string(opt.threads)},
          {"wall_ms", wall_ms_since(start)}};
}

int run_kernel_table(const fcable::RunConfig& cfg, const CliOptions& opt) {
  const Clock::time_point start = Clock::now();
  const fcable::ModelParams p = fcable::to_model_params(cfg);
  fcable::require_valid(p);

  struct Row {
    std::size_t k;
    double rho_k, t, u_k;
  };
  std::vector<Row> rows;
  rows.reserve(cfg.table_modes * cfg.table_times.size());
  for (std::size_t k = 1; k <= cfg.table_modes; ++k) {
    const double rho_k = fcable::eigenvalue(k, p.length_l);
    const fcable::KernelEvaluator ev = fcable::make_kernel_evaluator(
        p.alpha, p.beta, p.lambda, p.mu, std::pow(rho_k, p.s));
    for (double t : cfg.table_times) rows.push_back({k, rho_k, t, fcable::eval_u(t, ev)});
  }

  std::string path;
  std::ofstream os = open_output(opt.out_dir, "kernel_table.csv", path);
  fcable::write_metadata_block(os, cfg, base_meta("kernel-table", opt, start));
  os << "k,rho_k,t,u_k\n";
  for (const Row& r : rows)
    os << r.k << "," << fcable::format_double(r.rho_k) << ","
       << fcable::format_double(r.t) << "," << fcable::format_double(r.u_k) << "\n";
  finish_output(os, path);
  std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
  return kExitOk;
}

int run_simulate(const fcable::RunConfig& cfg, const CliOptions& opt) {
  const Clock::time_point start = Clock::now();
  const fcable::ModelParams p = fcable::to_model_params(cfg);
  fcable::require_valid(p);
  const fcable::Discretization disc = fcable::to_discretization(cfg);

  fcable::SpectralTrajectory traj = [&] {
    if (!cfg.noise_enabled) return fcable::run(p, disc, nullptr, cfg.record_every);
    const fcable::SheetIncrements sheet = fcable::sample_sheet(
        p.hurst, disc.wz_time, disc.wz_space, p.horizon_t, p.length_l, cfg.seed);
    return fcable::run(p, disc, &sheet, cfg.record_every);
  }();

  const MetaList meta = base_meta("simulate", opt, start);
  const double tau = p.horizon_t / static_cast<double>(disc.n_steps);

  std::string traj_path;
  std::ofstream ts = open_output(opt.out_dir, "trajectory.csv", traj_path);
  fcable::write_metadata_block(ts, cfg, meta);
  ts << "n,t,k,u_k\n";
  for (std::size_t r = 0; r < traj.recorded_steps.size(); ++r) {
    const std::size_t n = traj.recorded_steps[r];
    const std::string t_text = fcable::format_double(tau * static_cast<double>(n));
    for (std::size_t k = 1; k <= disc.n_modes; ++k)
      ts << n << "," << t_text << "," << k << ","
         << fcable::format_double(traj.coeffs(r, k - 1)) << "\n";
  }
  finish_output(ts, traj_path);

  const std::size_t n_rows = traj.recorded_steps.size();
  std::set<std::size_t> snapshot_rows;
  if (cfg.field_snapshots == 1 || n_rows == 1) {
    snapshot_rows.insert(n_rows - 1);
  } else {
    const std::size_t count = std::min(cfg.field_snapshots, n_rows);
    for (std::size_t j = 0; j < count; ++j)
      snapshot_rows.insert((j * (n_rows - 1) + (count - 1) / 2) / (count - 1));
  }
  std::vector<double> xs(cfg.field_points);
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = p.length_l * static_cast<double>(i) /
            static_cast<double>(xs.size() - 1);

  std::string field_path;
  std::ofstream fs = open_output(opt.out_dir, "field.csv", field_path);
  fcable::write_metadata_block(fs, cfg, meta);
  fs << "t,x,u\n";
  for (std::size_t r : snapshot_rows) {
    const std::string t_text = fcable::format_double(
        tau * static_cast<double>(traj.recorded_steps[r]));
    const std::vector<double> u = fcable::evaluate_field(traj, r, xs);
    for (std::size_t i = 0; i < xs.size(); ++i)
      fs << t_text << "," << fcable::format_double(xs[i]) << ","
         << fcable::format_double(u[i]) << "\n";
  }
  finish_output(fs, field_path);

  std::cout << "wrote " << traj_path << " and " << field_path << "\n";
  return kExitOk;
}

int run_noise_check(const fcable::RunConfig& cfg, const CliOptions& opt) {
  const Clock::time_point start = Clock::now();
  const fcable::HurstPair hurst(cfg.hurst_h1, cfg.hurst_h2);
  const fcable::CovarianceReport rep = fcable::covariance_study(
      hurst, cfg.nc_time_cells, cfg.nc_space_cells, cfg.horizon_t, cfg.length_l,
      cfg.nc_samples, cfg.seed);

  MetaList meta = base_meta("noise-check", opt, start);
  meta.emplace_back("max_abs_z", fcable::format_double(rep.max_abs_z));
  meta.emplace_back("pass", rep.pass ? "true" : "false");

  std::string path;
  std::ofstream os = open_output(opt.out_dir, "covariance.csv", path);
  fcable::write_metadata_block(os, cfg, meta);
  os << "a_time,a_space,b_time,b_space,observed,expected,se,z\n";
  for (const fcable::CovarianceEntry& e : rep.entries)
    os << e.a_time << "," << e.a_space << "," << e.b_time << "," << e.b_space << ","
       << fcable::format_double(e.observed) << "," << fcable::format_double(e.expected)
       << "," << fcable::format_double(e.se) << "," << fcable::format_double(e.z)
       << "\n";
  finish_output(os, path);

  std::cout << "wrote " << path << " (" << rep.entries.size()
            << " entries, max |z| = " << fcable::format_double(rep.max_abs_z) << ")\n";
  if (!rep.pass) {
    std::cerr << "noise-check: empirical covariance outside 5 standard errors\n";
    return kExitToleranceFail;
  }
  return kExitOk;
}

int run_convergence(const fcable::RunConfig& cfg, const CliOptions& opt) {
  const Clock::time_point start = Clock::now();
  const fcable::StudySpec spec = fcable::to_study_spec(cfg);
  fcable::require_valid(spec.params);

  const fcable::RateReport rep = [&] {
    switch (spec.kind) {
      case fcable::StudyKind::temporal:
        return fcable::strong_error_temporal(spec, opt.threads);
      case fcable::StudyKind::spatial_modes:
        return fcable::spectral_error_study(spec, opt.threads);
      case fcable::StudyKind::wz_mesh:
        return fcable::strong_error_wz(spec, opt.threads);
      case fcable::StudyKind::deterministic:
        return fcable::deterministic_rate_study(spec);
    }
    throw std::invalid_argument("convergence: unknown study kind");
  }();

  const double lo = rep.theoretical_exponent - cfg.slope_tol_lo;
  const double hi = rep.theoretical_exponent + cfg.slope_tol_hi;
  const bool pass = !rep.degenerate && rep.slope >= lo && rep.slope <= hi;

  std::string path;
  std::ofstream os = open_output(opt.out_dir, "convergence.csv", path);
  fcable::write_metadata_block(os, cfg, base_meta("convergence", opt, start));
  os << "level,mesh,rms_error,stderr\n";
  for (std::size_t l = 0; l < rep.meshes.size(); ++l)
    os << (l + 1) << "," << fcable::format_double(rep.meshes[l]) << ","
       << fcable::format_double(rep.rms_errors[l]) << ","
       << fcable::format_double(rep.level_stderr[l]) << "\n";
  os << "# summary: slope = " << fcable::format_double(rep.slope)
     << ", slope_stderr = " << fcable::format_double(rep.slope_stderr)
     << ", theoretical = " << fcable::format_double(rep.theoretical_exponent) << "\n";
  os << "# degenerate = " << (rep.degenerate ? "true" : "false") << "\n";
  os << "# pass = " << (pass ? "true" : "false") << "\n";
  finish_output(os, path);

  std::cout << "wrote " << path << "\n";
  if (rep.degenerate) {
    std::cerr << "convergence: degenerate study (a level has zero error or too few "
                 "levels), no slope fit\n";
    return kExitToleranceFail;
  }
  std::cout << "slope = " << fcable::format_double(rep.slope)
            << " (theoretical = " << fcable::format_double(rep.theoretical_exponent)
            << ", accepted range [" << fcable::format_double(lo) << ", "
            << fcable::format_double(hi) << "])\n";
  if (!pass) {
    std::cerr << "convergence: fitted slope outside the accepted range\n";
    return kExitToleranceFail;
  }
  return kExitOk;
}

void add_common_options(CLI::App* sub, CliOptions& opt, CLI::Option*& seed_opt) {
  sub->add_option("--config", opt.config_path, "Path to a key = value config file")
      ->required();
  sub->add_option("--out", opt.out_dir, "Output directory (created if missing)");
  seed_opt = sub->add_option("--seed", opt.seed,
                             "RNG seed; overrides the config file's seed key");
  sub->add_option("--threads", opt.threads,
                  "Worker thread count; affects speed only, never results")
      ->check(CLI::Range(1u, 256u));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(fcable::kToolName) + " " + fcable::kToolVersion +
               ": spectral solver and experiment harness for a stochastic "
               "fractional cable equation"};
  app.require_subcommand(1);

  CliOptions opt;
  CLI::Option* seed_opts[4] = {nullptr, nullptr, nullptr, nullptr};

  CLI::App* sim = app.add_subcommand(
      "simulate",
      "Run one trajectory; writes trajectory.csv (columns n, t, k, u_k) and "
      "field.csv (columns t, x, u). Exit 0 on success.");
  CLI::App* ker = app.add_subcommand(
      "kernel-table",
      "Tabulate the per-mode relaxation function; writes kernel_table.csv "
      "(columns k, rho_k, t, u_k). Exit 0 on success.");
  CLI::App* noi = app.add_subcommand(
      "noise-check",
      "Compare empirical vs analytic covariance of sheet increments; writes "
      "covariance.csv (columns a_time, a_space, b_time, b_space, observed, "
      "expected, se, z). Exit 0 if every |z| <= 5, else 1.");
  CLI::App* conv = app.add_subcommand(
      "convergence",
      "Run a mesh-refinement study; writes convergence.csv (columns level, "
      "mesh, rms_error, stderr) plus summary comment lines (slope, "
      "slope_stderr, theoretical). Exit 0 if the fitted slope lies within "
      "[theoretical - slope_tol_lo, theoretical + slope_tol_hi], else 1.");
  add_common_options(sim, opt, seed_opts[0]);
  add_common_options(ker, opt, seed_opts[1]);
  add_common_options(noi, opt, seed_opts[2]);
  add_common_options(conv, opt, seed_opts[3]);
  app.footer(
      "Exit codes: 0 success, 1 study tolerance failure, 2 input error, 3 I/O "
      "error.\nEvery CSV starts with '# key = value' metadata lines (tool "
      "version, RNG identity, wall time, full config echo) followed by a "
      "column-header row.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }
  for (const CLI::Option* o : seed_opts)
    if (o != nullptr && o->count() > 0) opt.seed_given = true;

  try {
    fcable::RunConfig cfg = fcable::parse_config(read_file(opt.config_path));
    if (opt.seed_given) {
      cfg.seed = opt.seed;
      cfg.present.insert("seed");
    }
    if (app.got_subcommand(sim)) {
      fcable::require_keys(cfg, fcable::Subcommand::simulate);
      return run_simulate(cfg, opt);
    }
    if (app.got_subcommand(ker)) {
      fcable::require_keys(cfg, fcable::Subcommand::kernel_table);
      return run_kernel_table(cfg, opt);
    }
    if (app.got_subcommand(noi)) {
      fcable::require_keys(cfg, fcable::Subcommand::noise_check);
      return run_noise_check(cfg, opt);
    }
    fcable::require_keys(cfg, fcable::Subcommand::convergence);
    return run_convergence(cfg, opt);
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}
