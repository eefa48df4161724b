#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcable {

/// Time modulation of the noise. Every kind satisfies gamma(0) = 0 and is
/// C^1 with bounded derivative on bounded intervals.
enum class GammaKind { zero, poly_t, sin_t };

struct GammaSpec {
  GammaKind kind = GammaKind::zero;
  double scale = 0.0;
};

/// Nonlinearity registry. Only kinds with a certifiable Lipschitz constant
/// are admitted: zero, linear (c*u), bounded_sin (c*sin(u) pointwise).
enum class NonlinearityKind { zero, linear, bounded_sin };

struct NonlinearitySpec {
  NonlinearityKind kind = NonlinearityKind::zero;
  double scale = 0.0;
  double lipschitz = 0.0;

  static NonlinearitySpec zero() { return {}; }
  static NonlinearitySpec linear(double c) {
    return {NonlinearityKind::linear, c, std::abs(c)};
  }
  static NonlinearitySpec bounded_sin(double c) {
    return {NonlinearityKind::bounded_sin, c, std::abs(c)};
  }
};

/// Hurst indices of the driving sheet; the rough regime is (0, 1/2] in both
/// variables.
struct HurstPair {
  double h1 = 0.5;
  double h2 = 0.5;

  HurstPair() = default;
  HurstPair(double h1_, double h2_) : h1(h1_), h2(h2_) {
    if (!(h1 > 0.0 && h1 <= 0.5) || !(h2 > 0.0 && h2 <= 0.5))
      throw std::invalid_argument("HurstPair: indices must lie in (0, 1/2]");
  }
};

struct ModelParams {
  double alpha = 0.5;
  double beta = 0.5;
  double s = 0.5;
  double lambda = 1.0;
  double mu = 1.0;
  double length_l = 1.0;
  double horizon_t = 1.0;
  HurstPair hurst;
  GammaSpec gamma;
  NonlinearitySpec nonlinearity;
};

/// Space-time discretization sizes: N spectral modes, n_steps solver steps
/// (tau = T/n_steps), and the regularization grid of wz_time x wz_space
/// cells (cell sizes T/wz_time and l/wz_space).
struct Discretization {
  std::size_t n_modes = 1;
  std::size_t n_steps = 1;
  std::size_t wz_time = 1;
  std::size_t wz_space = 1;

  friend bool operator==(const Discretization&, const Discretization&) = default;
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  std::string failure_summary() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& c : checks) {
      if (c.pass) continue;
      if (!first) os << "; ";
      os << c.name << ": " << c.detail;
      first = false;
    }
    return os.str();
  }
};

inline double eval_gamma(const GammaSpec& spec, double t,
                         double horizon_t = std::numeric_limits<double>::infinity()) {
  if (!(t >= 0.0) || t > horizon_t)
    throw std::invalid_argument("eval_gamma: t outside [0, T]");
  switch (spec.kind) {
    case GammaKind::zero:
      return 0.0;
    case GammaKind::poly_t:
      return t == 0.0 ? 0.0 : spec.scale * t;
    case GammaKind::sin_t:
      return t == 0.0 ? 0.0 : spec.scale * std::sin(t);
  }
  throw std::logic_error("eval_gamma: unknown kind");
}

namespace detail {

/// Pointwise application of c*sin on a physical grid with trapezoidal
/// re-projection. The grid has 4N equispaced points spanning [0, l]
/// inclusive, which keeps the discrete sine transforms exactly orthogonal
/// for mode counts up to N, so the coefficient-space Lipschitz constant is
/// exactly |c|.
inline std::vector<double> apply_sin_pseudospectral(double scale,
                                                    const std::vector<double>& u,
                                                    double length_l) {
  const std::size_t n = u.size();
  const std::size_t q = 4 * n;
  const std::size_t segs = q - 1;
  const double h = length_l / static_cast<double>(segs);
  const double norm = std::sqrt(2.0 / length_l);
  const double pi = std::numbers::pi;
  std::vector<double> field(q, 0.0);
  for (std::size_t j = 1; j + 1 < q; ++j) {
    const double frac = static_cast<double>(j) / static_cast<double>(segs);
    double v = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      v += u[k] * norm * std::sin(static_cast<double>(k + 1) * pi * frac);
    field[j] = scale * std::sin(v);
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j + 1 < q; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(segs);
      acc += field[j] * norm * std::sin(static_cast<double>(k + 1) * pi * frac);
    }
    out[k] = acc * h;
  }
  return out;
}

}  // namespace detail

/// Applies the registered nonlinearity to a coefficient vector. length_l is
/// needed only by bounded_sin, whose physical-space values depend on the
/// basis normalization.
inline std::vector<double> eval_f(const NonlinearitySpec& spec,
                                  const std::vector<double>& u,
                                  double length_l = 1.0) {
  for (double v : u)
    if (!std::isfinite(v)) throw std::invalid_argument("eval_f: non-finite input");
  switch (spec.kind) {
    case NonlinearityKind::zero:
      return std::vector<double>(u.size(), 0.0);
    case NonlinearityKind::linear: {
      std::vector<double> out(u);
      for (double& v : out) v *= spec.scale;
      return out;
    }
    case NonlinearityKind::bounded_sin:
      if (u.empty()) return {};
      return detail::apply_sin_pseudospectral(spec.scale, u, length_l);
  }
  throw std::logic_error("eval_f: unknown kind");
}

/// Checks every structural parameter constraint plus the well-posedness
/// inequality 2 s H2 / alpha + H1 - 1 > 0 (with a strict 1e-9 margin).
inline ValidationReport validate(const ModelParams& p) {
  ValidationReport r;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    r.checks.push_back({name, pass, detail});
  };
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  add("alpha_range", p.alpha > 0.0 && p.alpha < 1.0, "alpha = " + num(p.alpha) + ", need (0,1)");
  add("beta_range", p.beta > 0.0 && p.beta < 1.0, "beta = " + num(p.beta) + ", need (0,1)");
  add("order_relation", p.beta <= p.alpha,
      "beta = " + num(p.beta) + " exceeds alpha = " + num(p.alpha));
  add("s_range", p.s > 0.0 && p.s < 1.0, "s = " + num(p.s) + ", need (0,1)");
  add("lambda_nonnegative", p.lambda >= 0.0, "lambda = " + num(p.lambda));
  add("mu_positive", p.mu > 0.0, "mu = " + num(p.mu));
  add("length_positive", p.length_l > 0.0, "length_l = " + num(p.length_l));
  add("horizon_positive", p.horizon_t > 0.0, "horizon_t = " + num(p.horizon_t));
  add("hurst_range",
      p.hurst.h1 > 0.0 && p.hurst.h1 <= 0.5 && p.hurst.h2 > 0.0 && p.hurst.h2 <= 0.5,
      "H1 = " + num(p.hurst.h1) + ", H2 = " + num(p.hurst.h2) + ", need (0, 1/2]");
  bool gamma_zero_ok = false;
  try {
    gamma_zero_ok = eval_gamma(p.gamma, 0.0) == 0.0;
  } catch (const std::exception&) {
    gamma_zero_ok = false;
  }
  add("gamma_vanishes_at_zero", gamma_zero_ok, "gamma(0) must be exactly 0");
  bool wp = false;
  double margin = 0.0;
  if (p.alpha > 0.0) {
    margin = 2.0 * p.s * p.hurst.h2 / p.alpha + p.hurst.h1 - 1.0;
    wp = margin > 1e-9;
  }
  add("well_posedness", wp,
      "2 s H2 / alpha + H1 - 1 = " + num(margin) + ", need > 0");
  return r;
}

/// Throws std::invalid_argument listing every failed check.
inline void require_valid(const ModelParams& p) {
  const ValidationReport r = validate(p);
  if (!r.ok())
    throw std::invalid_argument("invalid model parameters: " + r.failure_summary());
}

}  // namespace fcable
