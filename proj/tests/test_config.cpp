#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcable/config.hpp"

using namespace fcable;

namespace {

const char* kFullSimulate =
    "alpha = 0.6\n"
    "beta = 0.4\n"
    "s = 0.7\n"
    "lambda = 0.8\n"
    "mu = 1.3\n"
    "length_l = 3.1415926535897931\n"
    "horizon_t = 2\n"
    "hurst_h1 = 0.3\n"
    "hurst_h2 = 0.5\n"
    "gamma_kind = poly_t\n"
    "gamma_scale = 1.5\n"
    "f_kind = bounded_sin\n"
    "f_scale = 0.25\n"
    "seed = 12345\n"
    "n_modes = 16\n"
    "n_steps = 64\n"
    "wz_time = 32\n"
    "wz_space = 8\n"
    "noise_enabled = true\n";

}  // namespace

TEST_CASE("config parses a complete simulate file", "[config]") {
  const RunConfig c = parse_config(kFullSimulate);
  CHECK(c.alpha == 0.6);
  CHECK(c.beta == 0.4);
  CHECK(c.s == 0.7);
  CHECK(c.lambda == 0.8);
  CHECK(c.mu == 1.3);
  CHECK(c.length_l == 3.1415926535897931);
  CHECK(c.horizon_t == 2.0);
  CHECK(c.hurst_h1 == 0.3);
  CHECK(c.hurst_h2 == 0.5);
  CHECK(c.gamma_kind == GammaKind::poly_t);
  CHECK(c.gamma_scale == 1.5);
  CHECK(c.f_kind == NonlinearityKind::bounded_sin);
  CHECK(c.f_scale == 0.25);
  CHECK(c.seed == 12345u);
  CHECK(c.n_modes == 16u);
  CHECK(c.n_steps == 64u);
  CHECK(c.wz_time == 32u);
  CHECK(c.wz_space == 8u);
  CHECK(c.noise_enabled);
  CHECK(c.has("alpha"));
  CHECK_FALSE(c.has("table_modes"));
  CHECK_NOTHROW(require_keys(c, Subcommand::simulate));
}

TEST_CASE("config skips comments and blank lines", "[config]") {
  const RunConfig c = parse_config(
      "# leading comment\n"
      "\n"
      "alpha = 0.5   # trailing comment\n"
      "   \t  \n"
      "beta = 0.25\r\n"
      "#seed = 9\n");
  CHECK(c.alpha == 0.5);
  CHECK(c.beta == 0.25);
  CHECK_FALSE(c.has("seed"));
  CHECK(c.present.size() == 2u);
}

TEST_CASE("config keeps defaults for absent keys", "[config]") {
  const RunConfig c = parse_config("alpha = 0.9\n");
  CHECK(c.beta == 0.5);
  CHECK(c.record_every == 1u);
  CHECK(c.field_points == 33u);
  CHECK_FALSE(c.noise_enabled);
  CHECK(c.study_kind == StudyKind::temporal);
  CHECK(c.sigma == 0.5);
  CHECK(c.theta_margin == 0.01);
}

TEST_CASE("config rejects unknown duplicate and malformed lines", "[config]") {
  CHECK_THROWS_MATCHES(
      parse_config("alpha = 0.5\nfrobnicate = 1\n"), std::invalid_argument,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("line 2") &&
          Catch::Matchers::ContainsSubstring("unknown key 'frobnicate'")));
  CHECK_THROWS_MATCHES(
      parse_config("alpha = 0.5\nalpha = 0.6\n"), std::invalid_argument,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("line 2") &&
          Catch::Matchers::ContainsSubstring("duplicate key 'alpha'")));
  CHECK_THROWS_MATCHES(parse_config("alpha 0.5\n"), std::invalid_argument,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("line 1") &&
                           Catch::Matchers::ContainsSubstring("key = value")));
  CHECK_THROWS_MATCHES(parse_config("beta =\n"), std::invalid_argument,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("missing value")));
  CHECK_THROWS_MATCHES(parse_config("= 0.5\n"), std::invalid_argument,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("missing key")));
}

TEST_CASE("config rejects malformed numbers", "[config]") {
  CHECK_THROWS_AS(parse_config("alpha = 0.5x\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("alpha = abc\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("gamma_scale = inf\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("gamma_scale = nan\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n_steps = -4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n_steps = 4.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("seed = 99999999999999999999999\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config("noise_enabled = yes\n"), std::invalid_argument);
}

TEST_CASE("config enforces per-key ranges", "[config]") {
  CHECK_THROWS_MATCHES(parse_config("hurst_h1 = 0.7\n"), std::invalid_argument,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("line 1") &&
                           Catch::Matchers::ContainsSubstring("hurst_h1") &&
                           Catch::Matchers::ContainsSubstring("out of range")));
  CHECK_THROWS_AS(parse_config("hurst_h2 = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("alpha = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("beta = -0.1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("s = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("mu = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("lambda = -1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("length_l = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("horizon_t = -2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("n_modes = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("field_points = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("nc_samples = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("sigma = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("sigma = 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("theta_margin = 0.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("table_times = 0.5, -1\n"), std::invalid_argument);
  CHECK_NOTHROW(parse_config("hurst_h1 = 0.5\n"));
  CHECK_NOTHROW(parse_config("lambda = 0\n"));
  CHECK_NOTHROW(parse_config("theta_margin = 0\n"));
}

TEST_CASE("config enums and booleans are case-insensitive", "[config]") {
  const RunConfig c = parse_config(
      "gamma_kind = Poly_T\n"
      "f_kind = LINEAR\n"
      "study_kind = WZ_Mesh\n"
      "noise_enabled = True\n");
  CHECK(c.gamma_kind == GammaKind::poly_t);
  CHECK(c.f_kind == NonlinearityKind::linear);
  CHECK(c.study_kind == StudyKind::wz_mesh);
  CHECK(c.noise_enabled);
  CHECK_THROWS_AS(parse_config("gamma_kind = cosine\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("study_kind = spectral\n"), std::invalid_argument);
}

TEST_CASE("config parses ladder and time lists", "[config]") {
  const RunConfig c = parse_config(
      "ladder = 64x32x32x8, 64 x 64 x 64 x 8,64x128x128x8\n"
      "table_times = 0, 0.5, 1, 2\n");
  REQUIRE(c.ladder.size() == 3u);
  CHECK(c.ladder[0] == Discretization{64, 32, 32, 8});
  CHECK(c.ladder[1] == Discretization{64, 64, 64, 8});
  CHECK(c.ladder[2] == Discretization{64, 128, 128, 8});
  CHECK(c.table_times == std::vector<double>{0.0, 0.5, 1.0, 2.0});
  CHECK_THROWS_AS(parse_config("ladder = 64x32x32\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("ladder = 64x32x32x0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("ladder = 64x32xAx8\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("table_times = 1,,2\n"), std::invalid_argument);
}

TEST_CASE("config round trips through emit", "[config]") {
  RunConfig all;
  std::string text;
  for (const std::string& key : detail::config_key_universe()) {
    if (key == "ladder")
      text += "ladder = 64x32x32x8, 64x64x64x8\n";
    else if (key == "table_times")
      text += "table_times = 0, 0.33333333333333331, 1.75\n";
    else
      text += key + " = " + detail::emit_value(all, key) + "\n";
  }
  const RunConfig parsed = parse_config(text);
  CHECK(parsed.present.size() == detail::config_key_universe().size());
  CHECK(parse_config(emit_config(parsed)) == parsed);

  const RunConfig subset = parse_config(
      "alpha = 0.1\n"
      "mu = 0.30000000000000004\n"
      "seed = 18446744073709551615\n"
      "table_times = 0.12345678901234567\n");
  const RunConfig again = parse_config(emit_config(subset));
  CHECK(again == subset);
  CHECK(again.mu == 0.30000000000000004);
  CHECK(again.seed == 18446744073709551615ull);

  CHECK(emit_config(parse_config("beta = 0.25\nalpha = 0.75\n")) ==
        "alpha = 0.75\nbeta = 0.25\n");
}

TEST_CASE("floating point formatting is bit-faithful", "[config]") {
  for (double v : {1.0 / 3.0, 0.1, 1e-17, 6.02214076e23, -2.5, 0.0, 1.0}) {
    const std::string text = format_double(v);
    const RunConfig c = parse_config("gamma_scale = " + text + "\n");
    CHECK(c.gamma_scale == v);
  }
}

TEST_CASE("required key checks name every missing key", "[config]") {
  CHECK_THROWS_MATCHES(
      require_keys(parse_config("alpha = 0.5\nbeta = 0.5\n"), Subcommand::simulate),
      std::invalid_argument,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("simulate") &&
          Catch::Matchers::ContainsSubstring("missing required keys") &&
          Catch::Matchers::ContainsSubstring("s, lambda, mu, length_l") &&
          Catch::Matchers::ContainsSubstring("n_modes")));
  const char* base =
      "alpha = 0.5\nbeta = 0.5\ns = 0.5\nlambda = 1\nmu = 1\n"
      "length_l = 1\nhorizon_t = 1\nn_modes = 4\nn_steps = 8\n";
  CHECK_NOTHROW(require_keys(parse_config(base), Subcommand::simulate));
  CHECK_THROWS_MATCHES(
      require_keys(parse_config(std::string(base) + "noise_enabled = true\n"),
                   Subcommand::simulate),
      std::invalid_argument,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("hurst_h1") &&
          Catch::Matchers::ContainsSubstring("wz_space")));

  CHECK_THROWS_MATCHES(
      require_keys(parse_config(""), Subcommand::kernel_table),
      std::invalid_argument,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("kernel-table") &&
          Catch::Matchers::ContainsSubstring("table_modes") &&
          Catch::Matchers::ContainsSubstring("table_times")));
  CHECK_THROWS_MATCHES(require_keys(parse_config(""), Subcommand::noise_check),
                       std::invalid_argument,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("nc_time_cells") &&
                           Catch::Matchers::ContainsSubstring("nc_samples")));

  const char* conv =
      "alpha = 0.5\nbeta = 0.5\ns = 0.8\nlambda = 1\nmu = 1\n"
      "length_l = 1\nhorizon_t = 1\nstudy_kind = deterministic\n"
      "n_modes = 8\nn_steps = 4096\nwz_time = 1\nwz_space = 1\n"
      "ladder = 8x32x1x1, 8x64x1x1, 8x128x1x1\n"
      "slope_tol_lo = 0.2\nslope_tol_hi = 0.5\n";
  CHECK_NOTHROW(require_keys(parse_config(conv), Subcommand::convergence));
  const std::string stochastic =
      std::string(conv).replace(std::string(conv).find("deterministic"),
                                std::string("deterministic").size(), "temporal");
  CHECK_THROWS_MATCHES(
      require_keys(parse_config(stochastic), Subcommand::convergence),
      std::invalid_argument,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("hurst_h1") &&
          Catch::Matchers::ContainsSubstring("n_samples")));
}

TEST_CASE("config maps to solver and study inputs", "[config]") {
  const RunConfig c = parse_config(std::string(kFullSimulate) +
                                   "study_kind = spatial_modes\n"
                                   "n_samples = 50\n"
                                   "ladder = 4x64x32x8, 8x64x32x8\n"
                                   "error_time = 1.5\n"
                                   "sigma = 0.4\n"
                                   "theta_margin = 0.02\n");
  const ModelParams p = to_model_params(c);
  CHECK(p.alpha == 0.6);
  CHECK(p.beta == 0.4);
  CHECK(p.s == 0.7);
  CHECK(p.lambda == 0.8);
  CHECK(p.mu == 1.3);
  CHECK(p.length_l == 3.1415926535897931);
  CHECK(p.horizon_t == 2.0);
  CHECK(p.hurst.h1 == 0.3);
  CHECK(p.hurst.h2 == 0.5);
  CHECK(p.gamma.kind == GammaKind::poly_t);
  CHECK(p.gamma.scale == 1.5);
  CHECK(p.nonlinearity.kind == NonlinearityKind::bounded_sin);
  CHECK(p.nonlinearity.scale == 0.25);
  CHECK(p.nonlinearity.lipschitz == 0.25);

  CHECK(to_discretization(c) == Discretization{16, 64, 32, 8});

  const StudySpec spec = to_study_spec(c);
  CHECK(spec.kind == StudyKind::spatial_modes);
  CHECK(spec.reference == Discretization{16, 64, 32, 8});
  REQUIRE(spec.ladder.size() == 2u);
  CHECK(spec.ladder[1] == Discretization{8, 64, 32, 8});
  CHECK(spec.n_samples == 50u);
  CHECK(spec.seed == 12345u);
  CHECK(spec.error_time == 1.5);
  CHECK(spec.sigma == 0.4);
  CHECK(spec.theta_margin == 0.02);
}

TEST_CASE("metadata block echoes tool identity and config", "[config]") {
  const RunConfig c = parse_config("alpha = 0.6\nseed = 7\n");
  std::ostringstream os;
  write_metadata_block(os, c, {{"subcommand", "simulate"}, {"threads", "2"}});
  const std::string text = os.str();
  std::istringstream is(text);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(is, line)) {
    ++lines;
    CHECK(line.rfind("# ", 0) == 0);
  }
  CHECK(lines == 6u);
  CHECK(text.find("# tool = fcable 0.1.0\n") != std::string::npos);
  CHECK(text.find("# rng = ") != std::string::npos);
  CHECK(text.find("# subcommand = simulate\n") != std::string::npos);
  CHECK(text.find("# threads = 2\n") != std::string::npos);
  CHECK(text.find("# alpha = 0.59999999999999998\n") != std::string::npos);
  CHECK(text.find("# seed = 7\n") != std::string::npos);
}

TEST_CASE("subcommand names are stable", "[config]") {
  CHECK(std::string(subcommand_name(Subcommand::simulate)) == "simulate");
  CHECK(std::string(subcommand_name(Subcommand::kernel_table)) == "kernel-table");
  CHECK(std::string(subcommand_name(Subcommand::noise_check)) == "noise-check");
  CHECK(std::string(subcommand_name(Subcommand::convergence)) == "convergence");
}
