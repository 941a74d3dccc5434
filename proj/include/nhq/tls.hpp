#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nhq/errors.hpp"
#include "nhq/evolution.hpp"
#include "nhq/matrix.hpp"
#include "nhq/sample.hpp"

namespace nhq::tls {

// Three two-level models sharing H+ = -Delta sigma_x:
//   ed:  Gamma = Delta (a2 sigma_y + sigma_z + gamma I)        exponential approach
//   pd:  Gamma = Delta (sigma_z + gamma I)                     polynomial approach
//   dph: Gamma = -Delta (sigma_y - gamma (sigma_z + I))        asymptotic dephasing
enum class Model { ed, pd, dph };

// Initial families rho_x = (I + sigma_x - nu sigma_y)/2 and rho_z = (I + sigma_z - nu sigma_y)/2.
enum class InitFamily { x, z };

inline std::string to_string(Model m) {
  switch (m) {
    case Model::ed: return "ed";
    case Model::pd: return "pd";
    case Model::dph: return "dph";
  }
  return "?";
}

inline std::string to_string(InitFamily f) { return f == InitFamily::x ? "x" : "z"; }

inline std::optional<Model> parse_model(std::string_view s) {
  if (s == "ed") return Model::ed;
  if (s == "pd") return Model::pd;
  if (s == "dph") return Model::dph;
  return std::nullopt;
}

inline std::optional<InitFamily> parse_family(std::string_view s) {
  if (s == "x" || s == "rho_x") return InitFamily::x;
  if (s == "z" || s == "rho_z") return InitFamily::z;
  return std::nullopt;
}

struct TlsScenario {
  Model model = Model::ed;
  double delta = 1.0;
  double a2 = 0.0;  // ed only
  double gamma = 0.0;
  double nu = 0.0;
  InitFamily init = InitFamily::x;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InputError("TlsScenario: delta must be > 0");
    if (!std::isfinite(a2) || !std::isfinite(gamma) || !std::isfinite(nu))
      throw InputError("TlsScenario: parameters must be finite");
  }
};

/// alpha = 2 a2 Delta (ed) or Gamma = 2 gamma Delta (dph); pd has no exponential rate.
inline std::optional<double> exponential_rate(const TlsScenario& sc) {
  switch (sc.model) {
    case Model::ed: return 2.0 * sc.a2 * sc.delta;
    case Model::dph: return 2.0 * sc.gamma * sc.delta;
    case Model::pd: return std::nullopt;
  }
  return std::nullopt;
}

inline HamiltonianSplit build_model(const TlsScenario& sc) {
  sc.validate();
  using namespace pauli;
  const double d = sc.delta;
  ComplexMatrix h_plus = -d * sigma_x();
  ComplexMatrix gamma(2);
  switch (sc.model) {
    case Model::ed: gamma = d * (sc.a2 * sigma_y() + sigma_z() + sc.gamma * identity()); break;
    case Model::pd: gamma = d * (sigma_z() + sc.gamma * identity()); break;
    case Model::dph: gamma = -d * (sigma_y() - sc.gamma * (sigma_z() + identity())); break;
  }
  return {std::move(h_plus), std::move(gamma)};
}

inline StateMatrix initial_state(InitFamily init, double nu) {
  using namespace pauli;
  const ComplexMatrix axis = init == InitFamily::x ? sigma_x() : sigma_z();
  return StateMatrix(0.5 * (identity() + axis - nu * sigma_y()), true);
}

/// The observable whose average is pinned to 1 by the initial family.
inline ComplexMatrix family_axis(InitFamily init) {
  return init == InitFamily::x ? pauli::sigma_x() : pauli::sigma_z();
}

enum class Series : std::size_t { sx, sy, sz, c_xx, c_xx_l, c_zz, c_zz_l, c_zx, c_zx_l, c_zy, c_zy_l };

inline constexpr std::size_t kSeriesCount = 11;

inline constexpr std::array<Series, kSeriesCount> kAllSeries = {
    Series::sx,   Series::sy,     Series::sz,   Series::c_xx,   Series::c_xx_l, Series::c_zz,
    Series::c_zz_l, Series::c_zx, Series::c_zx_l, Series::c_zy, Series::c_zy_l};

inline std::string to_string(Series s) {
  static constexpr std::array<const char*, kSeriesCount> names = {
      "sx", "sy", "sz", "C_xx", "CL_xx", "C_zz", "CL_zz", "C_zx", "CL_zx", "C_zy", "CL_zy"};
  return names[static_cast<std::size_t>(s)];
}

struct Erratum {
  Series series;
  Sample printed;  // the expression as published
  std::string note;
};

/// Closed-form values at one time (or in the long-time limit). Fields not
/// covered by the scenario's initial family are left empty.
struct OracleSample {
  double t = 0.0;
  std::array<std::optional<Sample>, kSeriesCount> values{};
  std::vector<Erratum> errata;

  std::optional<Sample>& operator[](Series s) { return values[static_cast<std::size_t>(s)]; }
  const std::optional<Sample>& operator[](Series s) const { return values[static_cast<std::size_t>(s)]; }

  const Erratum* erratum(Series s) const {
    for (const auto& e : errata)
      if (e.series == s) return &e;
    return nullptr;
  }
};

namespace detail {

// p e^x + m e^-x + k. Hyperbolic combinations A cosh x + B sinh x are kept in
// this basis so that cancellations between cosh and sinh happen in the exact
// coefficients rather than in rounded exponentials.
struct ExpForm {
  cplx plus = 0.0;
  cplx minus = 0.0;
  cplx constant = 0.0;

  static ExpForm hyperbolic(cplx cosh_coef, cplx sinh_coef, cplx constant) {
    return {0.5 * (cosh_coef + sinh_coef), 0.5 * (cosh_coef - sinh_coef), constant};
  }

  cplx value(double x) const {
    cplx v = constant;
    if (plus != 0.0) v += plus * std::exp(x);
    if (minus != 0.0) v += minus * std::exp(-x);
    return v;
  }

  double scale(double x) const {
    double s = std::abs(constant);
    if (plus != 0.0) s += std::abs(plus) * std::exp(x);
    if (minus != 0.0) s += std::abs(minus) * std::exp(-x);
    return s;
  }
};

inline constexpr double kPoleTolerance = 1e-13;

struct Denominator {
  cplx value;
  double scale;
};

inline Denominator denom(const ExpForm& f, double x) { return {f.value(x), f.scale(x)}; }

inline Sample divide(cplx numerator, const Denominator& d) {
  if (std::abs(d.value) <= kPoleTolerance * std::max(1.0, d.scale)) return Sample::undefined();
  return {numerator / d.value, true};
}

inline constexpr cplx kI{0.0, 1.0};

inline OracleSample ed_sample(const TlsScenario& sc, double t) {
  const double a = sc.a2;
  const double nu = sc.nu;
  const double x = 2.0 * a * sc.delta * t;  // alpha t
  const double decay = std::exp(-x);
  OracleSample out;
  out.t = t;
  if (sc.init == InitFamily::x) {
    // S_b = (a^2 - b + 1) cosh + a^2 b sinh + b - 1
    const auto s_nu = denom(ExpForm::hyperbolic(a * a - nu + 1.0, a * a * nu, nu - 1.0), x);
    const auto sy_num = ExpForm::hyperbolic(nu * (1.0 - a * a) - 1.0, -a * a, 1.0 - nu).value(x);
    const auto cxx_den =
        denom(ExpForm::hyperbolic(a * a + kI * nu * a + 1.0, kI * nu * a, -kI * nu * a - 1.0), x);
    out[Series::sx] = divide(a * a, s_nu);
    out[Series::sy] = divide(sy_num, s_nu);
    out[Series::sz] = divide(a * (1.0 - nu) * std::expm1(-x), s_nu);
    out[Series::c_xx] = divide(a * a, cxx_den);
    out[Series::c_xx_l] = divide(a * a, s_nu);
    return out;
  }
  // T_b = (a^2 - a - b + 1) cosh - a (1 - a b) sinh + a + b - 1
  auto t_form = [&](double b) {
    return ExpForm::hyperbolic(a * a - a - b + 1.0, -a * (1.0 - a * b), a + b - 1.0);
  };
  const auto t_nu = denom(t_form(nu), x);
  const auto t_0 = denom(t_form(0.0), x);
  // (a - 1)[(1 - nu (a + 1)) cosh - a sinh - nu/(a - 1) - 1], with the pole at a = 1 cancelled
  const auto sy_num = ExpForm::hyperbolic((a - 1.0) * (1.0 - nu * (a + 1.0)), -a * (a - 1.0), -(a - 1.0) - nu).value(x);
  // a (1 - nu)(e^{-alpha t} + a/(1 - nu) - 1), with the pole at nu = 1 cancelled
  const cplx sz_num = a * (1.0 - nu) * std::expm1(-x) + a * a;
  const cplx czz_num = a * (decay + a - 1.0);
  const cplx czy_num = ExpForm::hyperbolic(a - 1.0, -a * (a - 1.0), -(a - 1.0)).value(x);
  const cplx czx_num = kI * a * a * nu;
  out[Series::sx] = Sample{0.0, true};
  out[Series::sy] = divide(sy_num, t_nu);
  out[Series::sz] = divide(sz_num, t_nu);
  out[Series::c_zz] = divide(czz_num, t_0);
  out[Series::c_zz_l] = divide(czz_num, t_nu);
  out[Series::c_zx] = divide(czx_num, t_0);
  out[Series::c_zx_l] = divide(czx_num, t_nu);
  out[Series::c_zy] = divide(czy_num, t_0);
  out[Series::c_zy_l] = divide(czy_num, t_nu);
  return out;
}

inline OracleSample pd_sample(const TlsScenario& sc, double t) {
  const double d = sc.delta;
  const double nu = sc.nu;
  OracleSample out;
  out.t = t;
  if (sc.init == InitFamily::x) {
    // S_b = 2 Delta^2 (1 - b) t^2 + 1
    auto s_form = [&](double b) -> Denominator {
      const double quad = 2.0 * d * d * (1.0 - b) * t * t;
      return {quad + 1.0, std::abs(quad) + 1.0};
    };
    const auto s_nu = s_form(nu);
    const auto s_0 = s_form(0.0);
    const Denominator cxx_den{s_0.value + 2.0 * kI * nu * d * t, s_0.scale + std::abs(2.0 * nu * d * t)};
    out[Series::sx] = divide(1.0, s_nu);
    out.errata.push_back({Series::sx, Sample{0.0, true},
                          "published <sigma_x> = 0 contradicts tr(sigma_x rho_x) = 1 at t = 0; using 1/S_nu"});
    out[Series::sy] = divide(1.0 - nu, s_nu);
    if (out[Series::sy]->defined) out[Series::sy]->value -= 1.0;
    out[Series::sz] = divide(2.0 * d * (nu - 1.0) * t, s_nu);
    out[Series::c_xx] = divide(1.0, cxx_den);
    out[Series::c_xx_l] = divide(1.0, s_nu);
    return out;
  }
  // T_b = 2 Delta [Delta (1 - b) t - 1] t + 1
  auto t_form = [&](double b) -> Denominator {
    const double quad = 2.0 * d * d * (1.0 - b) * t * t;
    const double lin = -2.0 * d * t;
    return {quad + lin + 1.0, std::abs(quad) + std::abs(lin) + 1.0};
  };
  const auto t_nu = t_form(nu);
  const auto t_0 = t_form(0.0);
  out[Series::sx] = Sample{0.0, true};
  out[Series::sy] = divide(1.0 - nu, t_nu);
  if (out[Series::sy]->defined) out[Series::sy]->value -= 1.0;
  out[Series::sz] = divide(1.0 - 2.0 * d * (1.0 - nu) * t, t_nu);
  const double czz_num = 1.0 - 2.0 * d * t;
  out[Series::c_zz] = divide(czz_num, t_0);
  out[Series::c_zz_l] = divide(czz_num, t_nu);
  out[Series::c_zx] = divide(kI * nu, t_0);
  out[Series::c_zx_l] = divide(kI * nu, t_nu);
  const double czy_num = 2.0 * d * (1.0 - d * t) * t;
  out[Series::c_zy] = divide(czy_num, t_0);
  out[Series::c_zy_l] = divide(czy_num, t_nu);
  return out;
}

inline OracleSample dph_sample(const TlsScenario& sc, double t) {
  const double g = sc.gamma;
  const double nu = sc.nu;
  const double g2 = g * g;
  const double gt2 = g2 + 1.0;  // gamma-tilde squared
  const double x = 2.0 * g * sc.delta * t;  // Gamma t
  const double decay = std::exp(-x);
  OracleSample out;
  out.t = t;
  if (sc.init == InitFamily::x) {
    // S_b = (gt^2 - b g) cosh - b g sinh + b g - 1
    auto s_form = [&](double b) { return ExpForm::hyperbolic(gt2 - b * g, -b * g, b * g - 1.0); };
    const auto s_nu = denom(s_form(nu), x);
    // S_0 + i nu (g^2 sinh - cosh + 1)
    const auto cxx_den = denom(ExpForm::hyperbolic(gt2 - kI * nu, kI * nu * g2, -1.0 + kI * nu), x);
    out[Series::sx] = divide(g2, s_nu);
    out[Series::sy] = divide(g * (1.0 - nu * g - decay), s_nu);
    out[Series::sz] = divide(g2 * decay, s_nu);
    if (out[Series::sz]->defined) out[Series::sz]->value -= 1.0;
    out[Series::c_xx] = divide(g2, cxx_den);
    out[Series::c_xx_l] = divide(g2, s_nu);
    return out;
  }
  // T_b = (gt^2 - b g + 1) cosh - g (g + b) sinh + b g - 2
  auto t_form = [&](double b) { return ExpForm::hyperbolic(gt2 - b * g + 1.0, -g * (g + b), b * g - 2.0); };
  const auto t_nu = denom(t_form(nu), x);
  const auto t_0 = denom(t_form(0.0), x);
  // T_0 + 4 (1 - cosh)
  const cplx czz_num = ExpForm::hyperbolic(gt2 + 1.0 - 4.0, -g2, 2.0).value(x);
  const cplx czy_num = 2.0 * g * -std::expm1(-x);
  const cplx czx_num = kI * g2 * nu;
  out[Series::sx] = Sample{0.0, true};
  out[Series::sy] = divide(g * (2.0 - nu * g - 2.0 * decay), t_nu);
  out[Series::sz] = divide(2.0 * g2 * decay, t_nu);
  if (out[Series::sz]->defined) out[Series::sz]->value -= 1.0;
  out[Series::c_zz] = divide(czz_num, t_0);
  out[Series::c_zz_l] = divide(czz_num, t_nu);
  out[Series::c_zx] = divide(czx_num, t_0);
  out[Series::c_zx_l] = divide(czx_num, t_nu);
  out[Series::c_zy] = divide(czy_num, t_0);
  out[Series::c_zy_l] = divide(czy_num, t_nu);
  return out;
}

inline double heaviside(double x) {
  if (x == 0.0) throw DegenerateLimitError("step function evaluated at 0");
  return x > 0.0 ? 1.0 : 0.0;
}

}  // namespace detail

/// Every published closed form for the scenario at time t >= 0.
/// Vanishing denominators give undefined samples, never exceptions.
inline OracleSample oracle_sample(const TlsScenario& sc, double t) {
  sc.validate();
  if (!(t >= 0.0)) throw ContractError("oracle_sample: t must be >= 0");
  switch (sc.model) {
    case Model::ed: return detail::ed_sample(sc, t);
    case Model::pd: return detail::pd_sample(sc, t);
    case Model::dph: return detail::dph_sample(sc, t);
  }
  return {};
}

/// Published t -> infinity limits. Throws DegenerateLimitError where the
/// limit formulas do not apply (alpha = 0, Gamma = 0, ed/rho_z with |a2| = 1,
/// and parameters that put the limit on a pole).
inline OracleSample oracle_asymptote(const TlsScenario& sc) {
  sc.validate();
  using detail::heaviside;
  OracleSample out;
  out.t = std::numeric_limits<double>::infinity();
  const bool x_family = sc.init == InitFamily::x;
  out[Series::sx] = Sample{0.0, true};

  switch (sc.model) {
    case Model::ed: {
      const double a = sc.a2;
      const double alpha = 2.0 * a * sc.delta;
      if (alpha == 0.0) throw DegenerateLimitError("ed asymptote: alpha = 0 (use the pd model)");
      if (!x_family && std::abs(a) == 1.0)
        throw DegenerateLimitError("ed/rho_z asymptote: |a2| = 1 breaks the dominant balance of T_b");
      const double th = heaviside(-alpha);
      const double sz = 2.0 * th * a / (1.0 + a * a);
      out[Series::sy] = Sample{-std::pow((1.0 - a * a) / (1.0 + a * a), th), true};
      out[Series::sz] = Sample{sz, true};
      if (x_family) {
        out[Series::c_xx] = Sample{0.0, true};
        out[Series::c_xx_l] = Sample{0.0, true};
      } else {
        if (sc.nu == 1.0) throw DegenerateLimitError("ed/rho_z asymptote: nu = 1 puts the linear limit on a pole");
        out[Series::c_zz] = Sample{sz, true};
        out[Series::c_zz_l] = Sample{sz / (1.0 - sc.nu), true};
      }
      break;
    }
    case Model::pd: {
      out[Series::sy] = Sample{-1.0, true};
      out[Series::sz] = Sample{0.0, true};
      if (x_family) {
        out[Series::c_xx] = Sample{0.0, true};
        out[Series::c_xx_l] = Sample{0.0, true};
      } else {
        out[Series::c_zz] = Sample{0.0, true};
        out[Series::c_zz_l] = Sample{sc.nu == 1.0 ? 1.0 : 0.0, true};
      }
      break;
    }
    case Model::dph: {
      const double g = sc.gamma;
      const double rate = 2.0 * g * sc.delta;
      if (rate == 0.0) throw DegenerateLimitError("dph asymptote: Gamma = 0");
      const double gt2 = g * g + 1.0;
      const double th = heaviside(-rate);
      const double sz = -std::pow((1.0 - g * g) / gt2, th);
      out[Series::sy] = Sample{-2.0 * g * th / gt2, true};
      out[Series::sz] = Sample{sz, true};
      if (x_family) {
        out[Series::c_xx] = Sample{0.0, true};
        out[Series::c_xx_l] = Sample{0.0, true};
      } else {
        out[Series::c_zz] = Sample{sz, true};
        if (rate > 0.0) {
          if (sc.nu * g == 1.0) throw DegenerateLimitError("dph/rho_z asymptote: nu gamma = 1 is a pole");
          out[Series::c_zz_l] = Sample{1.0 / (sc.nu * g - 1.0), true};
        } else {
          // Dominant e^{-Gamma t} terms give (g^2 - 1)/gt^2; the published (1 - g^2)/gt^2 has the
          // opposite sign and agrees only at |g| = 1, where both vanish.
          out[Series::c_zz_l] = Sample{(g * g - 1.0) / gt2, true};
          out.errata.push_back({Series::c_zz_l, Sample{(1.0 - g * g) / gt2, true},
                                "published Gamma < 0 limit (1 - gamma^2)/gamma~^2 has the wrong sign"});
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace nhq::tls
