#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nhq/errors.hpp"
#include "nhq/matrix.hpp"

namespace nhq {

// hbar = 1 throughout: rates, couplings and energies share one unit, time is its inverse.

/// H = H+ - i Gamma with both parts Hermitian.
struct HamiltonianSplit {
  ComplexMatrix h_plus;
  ComplexMatrix gamma;

  HamiltonianSplit(ComplexMatrix h_plus_part, ComplexMatrix gamma_part)
      : h_plus(std::move(h_plus_part)), gamma(std::move(gamma_part)) {
    if (h_plus.dim() != gamma.dim()) throw InputError("HamiltonianSplit: H+ and Gamma dimensions differ");
    if (!is_hermitian(h_plus)) throw InputError("HamiltonianSplit: H+ is not Hermitian");
    if (!is_hermitian(gamma)) throw InputError("HamiltonianSplit: Gamma is not Hermitian");
  }

  std::size_t dim() const noexcept { return h_plus.dim(); }

  ComplexMatrix full() const { return h_plus - cplx(0, 1) * gamma; }
};

inline HamiltonianSplit split_hamiltonian(const ComplexMatrix& h) {
  if (!h.is_finite()) throw InputError("split_hamiltonian: non-finite entry");
  const ComplexMatrix hd = h.adjoint();
  ComplexMatrix h_plus = 0.5 * (h + hd);
  ComplexMatrix gamma = cplx(0, 0.5) * (h - hd);
  // exact Hermitian symmetrization against rounding
  h_plus = 0.5 * (h_plus + h_plus.adjoint());
  gamma = 0.5 * (gamma + gamma.adjoint());
  return {std::move(h_plus), std::move(gamma)};
}

inline constexpr double kUnitTraceTolerance = 1e-10;
inline constexpr double kTraceSingularity = 1e-14;

/// A density-like operator. `normalized` asserts unit trace (rho); unset for
/// Omega and for evolved operator products such as xi * Omega.
class StateMatrix {
public:
  explicit StateMatrix(ComplexMatrix m, bool normalized = false) : matrix_(std::move(m)), normalized_(normalized) {
    if (!matrix_.is_finite()) throw InputError("StateMatrix: non-finite entry");
    if (normalized_ && std::abs(matrix_.trace() - 1.0) > kUnitTraceTolerance)
      throw ContractError("StateMatrix: flagged normalized but trace is not 1");
  }

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  bool normalized() const noexcept { return normalized_; }
  std::size_t dim() const noexcept { return matrix_.dim(); }
  cplx trace() const noexcept { return matrix_.trace(); }
  bool has_unit_trace() const noexcept { return std::abs(matrix_.trace() - 1.0) <= kUnitTraceTolerance; }

private:
  ComplexMatrix matrix_;
  bool normalized_;
};

enum class Method { exact_exponential, rk4 };

inline std::string to_string(Method m) { return m == Method::rk4 ? "rk4" : "exact"; }

struct PropagationConfig {
  Method method = Method::exact_exponential;
  double dt = 1e-3;
  std::size_t record_stride = 1;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("PropagationConfig: dt must be > 0");
    if (record_stride == 0) throw InputError("PropagationConfig: record_stride must be >= 1");
  }
};

namespace detail {

inline void check_dims(const ComplexMatrix& m, const HamiltonianSplit& ham, const char* where) {
  if (m.dim() != ham.dim()) throw InputError(std::string(where) + ": state and Hamiltonian dimensions differ");
}

inline void check_forward(double t0, double t1, const char* where) {
  if (!(t1 >= t0)) throw ContractError(std::string(where) + ": backward evolution (t1 < t0) is not supported");
}

// Number of equal RK4 steps covering [t0, t1] with step <= dt.
inline std::size_t rk4_steps(double t0, double t1, double dt) {
  const double span = t1 - t0;
  if (span <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

template <typename Rhs>
ComplexMatrix rk4_integrate(ComplexMatrix y, double t0, double t1, double dt, Rhs&& rhs) {
  const std::size_t n = rk4_steps(t0, t1, dt);
  if (n == 0) return y;
  const double h = (t1 - t0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ComplexMatrix k1 = rhs(y);
    const ComplexMatrix k2 = rhs(y + (h / 2) * k1);
    const ComplexMatrix k3 = rhs(y + (h / 2) * k2);
    const ComplexMatrix k4 = rhs(y + h * k3);
    y += (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

// Omega(t1) = U Omega U', U = e^{-iH dt}, U' = e^{+iH^dagger dt}.
inline ComplexMatrix exact_linear_step(const ComplexMatrix& omega, const HamiltonianSplit& ham, double span) {
  if (span == 0.0) return omega;
  const ComplexMatrix h = ham.full();
  const ComplexMatrix u = mat_exp(cplx(0, -span) * h);
  const ComplexMatrix u_right = mat_exp(cplx(0, span) * h.adjoint());
  return u * omega * u_right;
}

}  // namespace detail

/// dOmega/dt = -i[H+, Omega] - {Gamma, Omega}
inline ComplexMatrix linear_rhs(const ComplexMatrix& omega, const HamiltonianSplit& ham) {
  detail::check_dims(omega, ham, "linear_rhs");
  return cplx(0, -1) * commutator(ham.h_plus, omega) - anticommutator(ham.gamma, omega);
}

inline ComplexMatrix linear_rhs(const StateMatrix& omega, const HamiltonianSplit& ham) {
  return linear_rhs(omega.matrix(), ham);
}

/// drho/dt = -i[H+, rho] - {Gamma, rho} + 2 rho tr(rho Gamma)
///
/// Applied as written to any operator, including ones without unit trace.
inline ComplexMatrix nonlinear_rhs(const ComplexMatrix& rho, const HamiltonianSplit& ham) {
  detail::check_dims(rho, ham, "nonlinear_rhs");
  return linear_rhs(rho, ham) + (2.0 * (rho * ham.gamma).trace()) * rho;
}

inline ComplexMatrix nonlinear_rhs(const StateMatrix& rho, const HamiltonianSplit& ham) {
  return nonlinear_rhs(rho.matrix(), ham);
}

inline StateMatrix normalize(const StateMatrix& omega, double time = 0.0) {
  const cplx tr = omega.trace();
  if (std::abs(tr) < kTraceSingularity) throw SingularityError("normalize: trace vanished", time);
  ComplexMatrix m = omega.matrix() / tr;
  // trace is 1 up to rounding; flag after the division
  return StateMatrix(std::move(m), true);
}

/// Solution of the linear equation at t1. The result is never flagged normalized.
inline StateMatrix propagate_linear(const StateMatrix& omega0, const HamiltonianSplit& ham, double t0, double t1,
                                    const PropagationConfig& cfg = {}) {
  detail::check_dims(omega0.matrix(), ham, "propagate_linear");
  detail::check_forward(t0, t1, "propagate_linear");
  cfg.validate();
  if (cfg.method == Method::exact_exponential)
    return StateMatrix(detail::exact_linear_step(omega0.matrix(), ham, t1 - t0));
  return StateMatrix(detail::rk4_integrate(omega0.matrix(), t0, t1, cfg.dt,
                                           [&](const ComplexMatrix& y) { return linear_rhs(y, ham); }));
}

/// Route taken by the nonlinear kernel for a given input.
enum class NonlinearPath {
  // unit-trace input: rho(t) = Omega(t) / tr Omega(t)
  normalization_ansatz,
  // non-unit-trace input, closed form rho(t) = Omega(t) / (tr Omega(t) - tr x0 + 1)
  shifted_normalization,
  // non-unit-trace input, the nonlinear equation integrated directly with rk4
  direct_rk4,
};

inline std::string to_string(NonlinearPath p) {
  switch (p) {
    case NonlinearPath::normalization_ansatz: return "normalization-ansatz";
    case NonlinearPath::shifted_normalization: return "shifted-normalization";
    case NonlinearPath::direct_rk4: return "direct-rk4";
  }
  return "unknown";
}

inline NonlinearPath nonlinear_path(const StateMatrix& x0, const PropagationConfig& cfg) {
  if (x0.has_unit_trace()) return NonlinearPath::normalization_ansatz;
  return cfg.method == Method::rk4 ? NonlinearPath::direct_rk4 : NonlinearPath::shifted_normalization;
}

/// Evolves x0 from t0 to t1 under the nonlinear (trace-feedback) equation.
///
/// For a unit-trace input the linear solution is normalized by its own trace.
/// For any other trace the nonlinear flow still reduces to the linear one: with
/// Omega(t) the linear solution from x0, rho(t) = Omega(t) / (tr Omega(t) - tr x0 + 1)
/// solves the nonlinear equation, since d tr Omega/dt = -2 tr(Omega Gamma). The
/// exact method uses that form; rk4 integrates the nonlinear right-hand side as is.
inline StateMatrix propagate_nonlinear(const StateMatrix& x0, const HamiltonianSplit& ham, double t0, double t1,
                                       const PropagationConfig& cfg = {}) {
  detail::check_dims(x0.matrix(), ham, "propagate_nonlinear");
  detail::check_forward(t0, t1, "propagate_nonlinear");
  cfg.validate();
  switch (nonlinear_path(x0, cfg)) {
    case NonlinearPath::normalization_ansatz: {
      const StateMatrix omega = propagate_linear(x0, ham, t0, t1, cfg);
      return normalize(omega, t1);
    }
    case NonlinearPath::shifted_normalization: {
      const StateMatrix omega = propagate_linear(x0, ham, t0, t1, cfg);
      const cplx denom = omega.trace() - x0.trace() + 1.0;
      if (std::abs(denom) < kTraceSingularity)
        throw SingularityError("propagate_nonlinear: normalizing trace vanished", t1);
      return StateMatrix(omega.matrix() / denom);
    }
    case NonlinearPath::direct_rk4:
      break;
  }
  ComplexMatrix y = detail::rk4_integrate(x0.matrix(), t0, t1, cfg.dt,
                                          [&](const ComplexMatrix& m) { return nonlinear_rhs(m, ham); });
  if (!y.is_finite()) throw SingularityError("propagate_nonlinear: direct integration diverged", t1);
  return StateMatrix(std::move(y));
}

/// Statistical average tr(rho chi), normalizing first when the state is not flagged.
inline cplx expectation(const StateMatrix& state, const ComplexMatrix& obs, double time = 0.0) {
  if (state.dim() != obs.dim()) throw InputError("expectation: state and observable dimensions differ");
  if (state.normalized()) return (state.matrix() * obs).trace();
  const cplx tr = state.trace();
  if (std::abs(tr) < kTraceSingularity) throw SingularityError("expectation: trace vanished", time);
  return (state.matrix() * obs).trace() / tr;
}

struct TrajectoryPoint {
  double t;
  StateMatrix state;
};

/// Linear trajectory recorded every record_stride steps of size dt (the endpoint is always recorded).
inline std::vector<TrajectoryPoint> linear_trajectory(const StateMatrix& omega0, const HamiltonianSplit& ham, double t0,
                                                      double t1, const PropagationConfig& cfg = {}) {
  detail::check_dims(omega0.matrix(), ham, "linear_trajectory");
  detail::check_forward(t0, t1, "linear_trajectory");
  cfg.validate();
  const std::size_t n = detail::rk4_steps(t0, t1, cfg.dt);
  std::vector<TrajectoryPoint> out;
  out.push_back({t0, omega0});
  if (n == 0) return out;
  const double h = (t1 - t0) / static_cast<double>(n);
  ComplexMatrix y = omega0.matrix();
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    if (cfg.method == Method::exact_exponential) {
      y = detail::exact_linear_step(omega0.matrix(), ham, t - t0);
    } else {
      y = detail::rk4_integrate(std::move(y), t - h, t, h,
                                [&](const ComplexMatrix& m) { return linear_rhs(m, ham); });
    }
    if (i % cfg.record_stride == 0 || i == n) out.push_back({t, StateMatrix(y)});
  }
  return out;
}

}  // namespace nhq
