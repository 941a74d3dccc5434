#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhq/errors.hpp"
#include "nhq/evolution.hpp"
#include "nhq/matrix.hpp"
#include "nhq/sample.hpp"

namespace nhq {

enum class Side { left_xi, right_chi, both };

enum class CorrelationKind { nonlinear, linear };

inline std::string to_string(CorrelationKind k) { return k == CorrelationKind::linear ? "linear" : "nonlinear"; }

/// An operator inserted at a time, to the left of the state (xi), to the
/// right (chi), or on both sides (same operator as xi and chi).
struct OperatorEvent {
  ComplexMatrix op;
  double time;
  Side side;
};

inline constexpr double kMergeTolerance = 1e-12;

/// Ordered union of the xi times and chi times. Each slot records which sides are occupied.
struct TimeGrid {
  struct Slot {
    double tau;
    std::optional<std::size_t> xi_index;
    std::optional<std::size_t> chi_index;

    Side side() const {
      if (xi_index && chi_index) return Side::both;
      return xi_index ? Side::left_xi : Side::right_chi;
    }
  };

  double origin = 0.0;
  std::vector<Slot> slots;

  std::size_t size() const noexcept { return slots.size(); }

  std::vector<double> taus() const {
    std::vector<double> out;
    out.reserve(slots.size());
    for (const auto& s : slots) out.push_back(s.tau);
    return out;
  }
};

namespace detail {

inline void check_times(std::span<const double> times, double t0, const char* name) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) throw InputError(std::string("merge_times: non-finite time in ") + name);
    if (times[i] < t0) throw ContractError(std::string("merge_times: ") + name + " time precedes the origin");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw ContractError(std::string("merge_times: ") + name + " times are not strictly increasing");
  }
}

}  // namespace detail

/// Time-ordered union of t_list (xi) and s_list (chi). Times closer than 1e-12 share one slot.
inline TimeGrid merge_times(std::span<const double> t_list, std::span<const double> s_list, double t0 = 0.0) {
  detail::check_times(t_list, t0, "xi");
  detail::check_times(s_list, t0, "chi");
  TimeGrid grid;
  grid.origin = t0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < t_list.size() || j < s_list.size()) {
    TimeGrid::Slot slot{};
    if (j == s_list.size() || (i < t_list.size() && t_list[i] < s_list[j] - kMergeTolerance)) {
      slot = {t_list[i], i, std::nullopt};
      ++i;
    } else if (i == t_list.size() || s_list[j] < t_list[i] - kMergeTolerance) {
      slot = {s_list[j], std::nullopt, j};
      ++j;
    } else {
      slot = {std::min(t_list[i], s_list[j]), i, j};
      ++i;
      ++j;
    }
    if (!grid.slots.empty() && slot.tau - grid.slots.back().tau <= kMergeTolerance)
      throw ContractError("merge_times: times within one list closer than the merge tolerance");
    grid.slots.push_back(slot);
  }
  return grid;
}

/// Insertion superoperator at one grid slot: xi D, D chi, or xi D chi.
inline StateMatrix apply_insertion(const ComplexMatrix* xi, const ComplexMatrix* chi, const StateMatrix& d) {
  if (!xi && !chi) throw ContractError("apply_insertion: no operator event at this time");
  ComplexMatrix out = d.matrix();
  if (xi) out = *xi * out;
  if (chi) out = out * *chi;
  return StateMatrix(std::move(out));
}

namespace detail {

inline void check_initial(const StateMatrix& initial, const char* where) {
  if (!initial.has_unit_trace()) throw ContractError(std::string(where) + ": initial state must have unit trace");
}

inline StateMatrix propagate(CorrelationKind kind, const StateMatrix& d, const HamiltonianSplit& ham, double t0,
                             double t1, const PropagationConfig& cfg) {
  return kind == CorrelationKind::nonlinear ? propagate_nonlinear(d, ham, t0, t1, cfg)
                                            : propagate_linear(d, ham, t0, t1, cfg);
}

}  // namespace detail

/// Two-time correlation of xi at t1 and chi at t2 >= t1, origin at 0.
///
/// nonlinear: tr{chi K(t2,t1)[xi rho(t1)]}
/// linear:    tr{chi K_L(t2,t1)[xi Omega(t1)]} / tr Omega(t2)
inline cplx correlate_two_time(CorrelationKind kind, const ComplexMatrix& chi, const ComplexMatrix& xi, double t1,
                               double t2, const StateMatrix& initial, const HamiltonianSplit& ham,
                               const PropagationConfig& cfg = {}) {
  detail::check_initial(initial, "correlate_two_time");
  if (!(t1 >= 0.0) || !(t2 >= t1)) throw ContractError("correlate_two_time: requires t2 >= t1 >= 0");
  if (kind == CorrelationKind::nonlinear) {
    const StateMatrix rho1 = propagate_nonlinear(initial, ham, 0.0, t1, cfg);
    const StateMatrix inserted(xi * rho1.matrix());
    const StateMatrix evolved = propagate_nonlinear(inserted, ham, t1, t2, cfg);
    return (chi * evolved.matrix()).trace();
  }
  const StateMatrix omega1 = propagate_linear(initial, ham, 0.0, t1, cfg);
  const StateMatrix inserted(xi * omega1.matrix());
  const StateMatrix evolved = propagate_linear(inserted, ham, t1, t2, cfg);
  const cplx norm = propagate_linear(initial, ham, 0.0, t2, cfg).trace();
  if (std::abs(norm) < kTraceSingularity) throw SingularityError("correlate_two_time: tr Omega vanished", t2);
  return (chi * evolved.matrix()).trace() / norm;
}

/// Autocorrelation tr{chi K(t,0)[chi rho(0)]} (or its linear counterpart).
inline cplx autocorrelate(CorrelationKind kind, const ComplexMatrix& chi, double t, const StateMatrix& initial,
                          const HamiltonianSplit& ham, const PropagationConfig& cfg = {}) {
  return correlate_two_time(kind, chi, chi, 0.0, t, initial, ham, cfg);
}

/// Multi-time correlation: alternate propagation over [tau_{l-1}, tau_l] and insertion at tau_l.
/// The linear kind divides the final trace by tr Omega(tau_u).
inline cplx correlate_multitime(CorrelationKind kind, std::span<const OperatorEvent> events,
                                const StateMatrix& initial, const HamiltonianSplit& ham,
                                const PropagationConfig& cfg = {}) {
  if (events.empty()) throw ContractError("correlate_multitime: empty event list");
  detail::check_initial(initial, "correlate_multitime");

  std::vector<const OperatorEvent*> xis;
  std::vector<const OperatorEvent*> chis;
  for (const auto& e : events) {
    if (e.op.dim() != ham.dim()) throw InputError("correlate_multitime: operator dimension mismatch");
    if (e.side != Side::right_chi) xis.push_back(&e);
    if (e.side != Side::left_xi) chis.push_back(&e);
  }
  auto by_time = [](const OperatorEvent* a, const OperatorEvent* b) { return a->time < b->time; };
  std::stable_sort(xis.begin(), xis.end(), by_time);
  std::stable_sort(chis.begin(), chis.end(), by_time);
  std::vector<double> t_list;
  std::vector<double> s_list;
  for (const auto* e : xis) t_list.push_back(e->time);
  for (const auto* e : chis) s_list.push_back(e->time);
  const TimeGrid grid = merge_times(t_list, s_list, 0.0);

  StateMatrix d = initial;
  double t_prev = grid.origin;
  for (const auto& slot : grid.slots) {
    d = detail::propagate(kind, d, ham, t_prev, slot.tau, cfg);
    const ComplexMatrix* xi = slot.xi_index ? &xis[*slot.xi_index]->op : nullptr;
    const ComplexMatrix* chi = slot.chi_index ? &chis[*slot.chi_index]->op : nullptr;
    d = apply_insertion(xi, chi, d);
    t_prev = slot.tau;
  }
  if (kind == CorrelationKind::nonlinear) return d.trace();
  const cplx norm = propagate_linear(initial, ham, 0.0, t_prev, cfg).trace();
  if (std::abs(norm) < kTraceSingularity) throw SingularityError("correlate_multitime: tr Omega vanished", t_prev);
  return d.trace() / norm;
}

/// 1 - c / c_linear; undefined where the linear correlation vanishes.
inline Sample relative_difference(cplx c, cplx c_linear) {
  if (std::abs(c_linear) <= kTraceSingularity) return Sample::undefined();
  return {1.0 - c / c_linear, true};
}

}  // namespace nhq
