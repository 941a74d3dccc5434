#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nhq/config.hpp"
#include "nhq/correlators.hpp"
#include "nhq/evolution.hpp"
#include "nhq/tls.hpp"

namespace nhq {

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitSingularity = 2, kExitConfig = 3 };

struct CorrelationSeries {
  std::string label;
  std::vector<Sample> samples;  // aligned with SeriesTable::t
};

struct SeriesTable {
  std::vector<double> t;
  std::vector<CorrelationSeries> series;
  std::vector<std::string> notes;

  const CorrelationSeries* find(const std::string& label) const {
    for (const auto& s : series)
      if (s.label == label) return &s;
    return nullptr;
  }
};

namespace detail {

inline ComplexMatrix pauli_for(const std::string& average) {
  if (average == "sx") return pauli::sigma_x();
  if (average == "sy") return pauli::sigma_y();
  return pauli::sigma_z();
}

inline std::string format_real(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

}  // namespace detail

/// Evaluates every requested series on the output grid.
inline SeriesTable compute_series(const RunConfig& cfg) {
  cfg.validate();
  const HamiltonianSplit ham = cfg.hamiltonian();
  const StateMatrix rho0 = cfg.initial();
  const PropagationConfig& prop = cfg.propagation;
  SeriesTable table;
  table.t = cfg.output_times();
  const std::size_t n = table.t.size();

  for (const auto& name : cfg.averages) {
    const ComplexMatrix obs = detail::pauli_for(name);
    CorrelationSeries s{name, {}};
    s.samples.reserve(n);
    for (double t : table.t) {
      const StateMatrix rho = propagate_nonlinear(rho0, ham, 0.0, t, prop);
      s.samples.push_back({expectation(rho, obs, t), true});
    }
    table.series.push_back(std::move(s));
  }

  std::set<std::string> paths;
  const bool want_nl = cfg.kind != KindSelection::linear;
  const bool want_l = cfg.kind != KindSelection::nonlinear;
  for (const auto& pair : cfg.effective_pairs()) {
    const ComplexMatrix xi = pair.xi();
    const ComplexMatrix chi = pair.chi();
    CorrelationSeries c{"C_" + pair.name, {}};
    CorrelationSeries cl{"CL_" + pair.name, {}};
    for (double t : table.t) {
      if (want_nl) c.samples.push_back({correlate_two_time(CorrelationKind::nonlinear, chi, xi, 0.0, t, rho0, ham, prop), true});
      if (want_l) cl.samples.push_back({correlate_two_time(CorrelationKind::linear, chi, xi, 0.0, t, rho0, ham, prop), true});
    }
    if (want_nl) {
      const StateMatrix inserted(xi * rho0.matrix());
      paths.insert(to_string(nonlinear_path(inserted, prop)));
    }
    const bool both = want_nl && want_l;
    CorrelationSeries dc{"dC_" + pair.name, {}};
    CorrelationSeries ratio{"R_" + pair.name, {}};
    if (both) {
      for (std::size_t i = 0; i < n; ++i) {
        const Sample d = relative_difference(c.samples[i].value, cl.samples[i].value);
        if (cfg.delta_c) dc.samples.push_back(d);
        if (cfg.ratio) ratio.samples.push_back(d.defined ? Sample{1.0 - d.value, true} : Sample::undefined());
      }
    }
    if (want_nl) table.series.push_back(std::move(c));
    if (want_l) table.series.push_back(std::move(cl));
    if (both && cfg.delta_c) table.series.push_back(std::move(dc));
    if (both && cfg.ratio) table.series.push_back(std::move(ratio));
  }
  for (const auto& p : paths) table.notes.push_back("nonlinear kernel path: " + p);
  return table;
}

/// Wide CSV: t,<s>.re,<s>.im,<s>.ok ... Optional leading parameter column.
inline std::string csv_header(const SeriesTable& table, const std::string& param = {}) {
  std::string out;
  if (!param.empty()) out += param + ",";
  out += "t";
  for (const auto& s : table.series) out += "," + s.label + ".re," + s.label + ".im," + s.label + ".ok";
  out += "\n";
  return out;
}

inline std::string csv_rows(const SeriesTable& table, const std::string& param_value = {}) {
  std::string out;
  for (std::size_t i = 0; i < table.t.size(); ++i) {
    if (!param_value.empty()) out += param_value + ",";
    out += detail::format_real(table.t[i]);
    for (const auto& s : table.series) {
      const Sample& v = s.samples[i];
      if (v.defined)
        out += "," + detail::format_real(v.value.real()) + "," + detail::format_real(v.value.imag()) + ",1";
      else
        out += ",nan,nan,0";
    }
    out += "\n";
  }
  return out;
}

inline std::string to_csv(const SeriesTable& table) { return csv_header(table) + csv_rows(table); }

struct CommandResult {
  std::string output;  // primary output (CSV or report)
  std::string diagnostics;
  int exit_code = kExitOk;
};

/// Guards a command body: maps the error taxonomy onto exit codes.
template <typename Body>
CommandResult run_guarded(Body&& body) {
  CommandResult r;
  try {
    body(r);
  } catch (const ConfigError& e) {
    r.diagnostics += std::string("config error: ") + e.what() + "\n";
    r.exit_code = kExitConfig;
  } catch (const SingularityError& e) {
    r.diagnostics += std::string("singularity: ") + e.what() + "\n";
    r.exit_code = kExitSingularity;
  } catch (const DegenerateLimitError& e) {
    r.diagnostics += std::string("degenerate limit: ") + e.what() + "\n";
    r.exit_code = kExitSingularity;
  } catch (const InputError& e) {
    r.diagnostics += std::string("config error: ") + e.what() + "\n";
    r.exit_code = kExitConfig;
  }
  return r;
}

inline CommandResult run(const RunConfig& cfg) {
  return run_guarded([&](CommandResult& r) {
    const SeriesTable table = compute_series(cfg);
    r.output = to_csv(table);
    for (const auto& note : table.notes) r.diagnostics += "# " + note + "\n";
  });
}

// ---------------------------------------------------------------------------
// verify

/// |numeric - oracle| / max(1, |oracle|)
inline double relative_error(cplx numeric, cplx oracle) {
  return std::abs(numeric - oracle) / std::max(1.0, std::abs(oracle));
}

inline constexpr double kAsymptoteTolerance = 1e-3;

/// Time at which numerics are compared with the long-time limits: 30/|rate| for
/// exponentially converging models; pd converges algebraically (tails ~ 1/(Delta t)), so it is
/// compared at 1e4/Delta.
inline double asymptote_time(const tls::TlsScenario& sc) {
  if (auto rate = tls::exponential_rate(sc); rate && *rate != 0.0) return 30.0 / std::abs(*rate);
  return 1e4 / sc.delta;
}

namespace detail {

inline cplx numeric_series(tls::Series s, const HamiltonianSplit& ham, const StateMatrix& rho0, double t,
                           const PropagationConfig& prop) {
  using tls::Series;
  auto corr = [&](CorrelationKind k, const ComplexMatrix& xi, const ComplexMatrix& chi) {
    return correlate_two_time(k, chi, xi, 0.0, t, rho0, ham, prop);
  };
  const auto sx = pauli::sigma_x();
  const auto sy = pauli::sigma_y();
  const auto sz = pauli::sigma_z();
  switch (s) {
    case Series::sx: return expectation(propagate_nonlinear(rho0, ham, 0.0, t, prop), sx, t);
    case Series::sy: return expectation(propagate_nonlinear(rho0, ham, 0.0, t, prop), sy, t);
    case Series::sz: return expectation(propagate_nonlinear(rho0, ham, 0.0, t, prop), sz, t);
    case Series::c_xx: return corr(CorrelationKind::nonlinear, sx, sx);
    case Series::c_xx_l: return corr(CorrelationKind::linear, sx, sx);
    case Series::c_zz: return corr(CorrelationKind::nonlinear, sz, sz);
    case Series::c_zz_l: return corr(CorrelationKind::linear, sz, sz);
    case Series::c_zx: return corr(CorrelationKind::nonlinear, sz, sx);
    case Series::c_zx_l: return corr(CorrelationKind::linear, sz, sx);
    case Series::c_zy: return corr(CorrelationKind::nonlinear, sz, sy);
    case Series::c_zy_l: return corr(CorrelationKind::linear, sz, sy);
  }
  return {};
}

}  // namespace detail

/// Numeric value of an oracle series for a two-level scenario.
inline cplx numeric_series(tls::Series s, const tls::TlsScenario& sc, double t, const PropagationConfig& prop = {}) {
  return detail::numeric_series(s, tls::build_model(sc), tls::initial_state(sc.init, sc.nu), t, prop);
}

struct SeriesCheck {
  tls::Series series;
  double max_error = 0.0;
  std::size_t compared = 0;
  std::size_t undefined = 0;
  bool erratum = false;
};

/// Max relative error per oracle series over the given times.
inline std::vector<SeriesCheck> compare_with_oracle(const tls::TlsScenario& sc, const std::vector<double>& times,
                                                    const PropagationConfig& prop = {}) {
  const HamiltonianSplit ham = tls::build_model(sc);
  const StateMatrix rho0 = tls::initial_state(sc.init, sc.nu);
  std::vector<SeriesCheck> checks;
  const auto first = tls::oracle_sample(sc, 0.0);
  for (auto s : tls::kAllSeries)
    if (first[s]) checks.push_back({s, 0.0, 0, 0, first.erratum(s) != nullptr});
  for (double t : times) {
    const auto oracle = tls::oracle_sample(sc, t);
    for (auto& c : checks) {
      const auto& o = oracle[c.series];
      if (!o || !o->defined) {
        ++c.undefined;
        continue;
      }
      cplx n;
      try {
        n = detail::numeric_series(c.series, ham, rho0, t, prop);
      } catch (const SingularityError&) {
        ++c.undefined;  // tr rho vanishes: the state itself is undefined here
        continue;
      }
      c.max_error = std::max(c.max_error, relative_error(n, o->value));
      ++c.compared;
    }
  }
  return checks;
}

inline CommandResult verify(const RunConfig& cfg) {
  return run_guarded([&](CommandResult& r) {
    cfg.validate();
    if (cfg.is_raw()) throw ConfigError("verify: requires one of the two-level models (ed, pd, dph)");
    const auto& sc = cfg.scenario;
    std::ostringstream rep;
    bool ok = true;
    char line[256];
    rep << "scenario: model=" << tls::to_string(sc.model) << " delta=" << sc.delta << " a2=" << sc.a2
        << " gamma=" << sc.gamma << " nu=" << sc.nu << " init=" << tls::to_string(sc.init)
        << " method=" << to_string(cfg.propagation.method) << " dt=" << cfg.propagation.dt << "\n";
    std::snprintf(line, sizeof line, "rtol: %.3e\n", cfg.rtol);
    rep << line;

    const auto times = cfg.output_times();
    for (const auto& c : compare_with_oracle(sc, times, cfg.propagation)) {
      const bool pass = c.max_error <= cfg.rtol;
      ok = ok && pass;
      std::snprintf(line, sizeof line, "%-6s max_rel_err=%.3e compared=%zu undefined=%zu %s\n",
                    tls::to_string(c.series).c_str(), c.max_error, c.compared, c.undefined, pass ? "PASS" : "FAIL");
      rep << line;
      if (c.erratum)
        rep << "notice: " << tls::to_string(c.series)
            << " compared against the corrected form 1/S_nu (published expression is 0)\n";
    }

    // Relative difference of the two autocorrelation definitions.
    const auto ham = tls::build_model(sc);
    const auto rho0 = tls::initial_state(sc.init, sc.nu);
    const auto axis = tls::family_axis(sc.init);
    double max_dc = 0.0;
    std::size_t dc_undefined = 0;
    for (double t : times) {
      Sample d = Sample::undefined();
      try {
        d = relative_difference(autocorrelate(CorrelationKind::nonlinear, axis, t, rho0, ham, cfg.propagation),
                                autocorrelate(CorrelationKind::linear, axis, t, rho0, ham, cfg.propagation));
      } catch (const SingularityError&) {
      }
      if (!d.defined) {
        ++dc_undefined;
        continue;
      }
      max_dc = std::max(max_dc, std::abs(d.value));
    }
    const std::string dc_name = sc.init == tls::InitFamily::x ? "dC_xx" : "dC_zz";
    if (sc.nu == 0.0) {
      const bool pass = max_dc <= cfg.rtol;
      ok = ok && pass;
      std::snprintf(line, sizeof line, "%-6s max_abs=%.3e undefined=%zu (on-shell, expected 0) %s\n", dc_name.c_str(),
                    max_dc, dc_undefined, pass ? "PASS" : "FAIL");
    } else {
      std::snprintf(line, sizeof line, "%-6s max_abs=%.3e undefined=%zu (off-shell, informational)\n",
                    dc_name.c_str(), max_dc, dc_undefined);
    }
    rep << line;

    // Long-time limits.
    try {
      const auto limit = tls::oracle_asymptote(sc);
      const double t_inf = asymptote_time(sc);
      for (auto s : tls::kAllSeries) {
        if (!limit[s]) continue;
        const cplx n = detail::numeric_series(s, ham, rho0, t_inf, cfg.propagation);
        const double err = std::abs(n - limit[s]->value);
        const bool pass = err <= kAsymptoteTolerance;
        ok = ok && pass;
        std::snprintf(line, sizeof line, "lim %-6s t=%.4g abs_err=%.3e %s\n", tls::to_string(s).c_str(), t_inf, err,
                      pass ? "PASS" : "FAIL");
        rep << line;
        if (const auto* e = limit.erratum(s)) rep << "notice: lim " << tls::to_string(s) << ": " << e->note << "\n";
      }
    } catch (const DegenerateLimitError& e) {
      rep << "excluded: long-time limits (" << e.what() << ")\n";
    }
    rep << "result: " << (ok ? "PASS" : "FAIL") << "\n";
    r.output = rep.str();
    r.exit_code = ok ? kExitOk : kExitVerifyFailed;
  });
}

// ---------------------------------------------------------------------------
// sweep

inline std::size_t sweep_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NHQ_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<std::size_t>(v);
  }
  return n;
}

inline void set_parameter(RunConfig& cfg, const std::string& parameter, double value) {
  if (parameter == "nu")
    cfg.scenario.nu = value;
  else if (parameter == "a2")
    cfg.scenario.a2 = value;
  else if (parameter == "gamma")
    cfg.scenario.gamma = value;
  else if (parameter == "delta")
    cfg.scenario.delta = value;
  else
    throw ConfigError("sweep: unknown parameter '" + parameter + "' (nu, a2, gamma, delta)");
}

/// Independent runs per value, stacked in the order of `values` with a leading parameter column.
inline CommandResult sweep(const RunConfig& base, const std::string& parameter, const std::vector<double>& values,
                           std::size_t threads = sweep_threads()) {
  return run_guarded([&](CommandResult& r) {
    if (values.empty()) throw ConfigError("sweep: no values given");
    if (base.is_raw()) throw ConfigError("sweep: requires one of the two-level models");
    std::vector<RunConfig> configs(values.size(), base);
    for (std::size_t i = 0; i < values.size(); ++i) {
      set_parameter(configs[i], parameter, values[i]);
      configs[i].validate();
    }

    std::vector<SeriesTable> tables(values.size());
    std::vector<std::exception_ptr> errors(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < values.size(); i = next++) {
        try {
          tables[i] = compute_series(configs[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, values.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);

    std::string out = csv_header(tables.front(), parameter);
    std::set<std::string> notes;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out += csv_rows(tables[i], detail::format_real(values[i]));
      notes.insert(tables[i].notes.begin(), tables[i].notes.end());
    }
    r.output = std::move(out);
    for (const auto& n : notes) r.diagnostics += "# " + n + "\n";
  });
}

// ---------------------------------------------------------------------------
// asymptote

inline CommandResult asymptote(const RunConfig& cfg) {
  return run_guarded([&](CommandResult& r) {
    cfg.validate();
    if (cfg.is_raw()) throw ConfigError("asymptote: requires one of the two-level models");
    const auto limit = tls::oracle_asymptote(cfg.scenario);
    std::string out = "series,re,im,ok\n";
    for (auto s : tls::kAllSeries) {
      if (!limit[s]) continue;
      const Sample& v = *limit[s];
      out += tls::to_string(s) + "," + detail::format_real(v.value.real()) + "," +
             detail::format_real(v.value.imag()) + "," + (v.defined ? "1" : "0") + "\n";
      if (const auto* e = limit.erratum(s))
        r.diagnostics += "# notice: " + tls::to_string(s) + ": " + e->note + "; published value " +
                         detail::format_real(e->printed.value.real()) + "\n";
    }
    r.output = std::move(out);
  });
}

}  // namespace nhq
