#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nhq/correlators.hpp"
#include "nhq/evolution.hpp"
#include "nhq/matrix.hpp"
#include "nhq/tls.hpp"

namespace nhq {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operator pair (xi, chi) named by two letters: "zx" is xi = sigma_z, chi = sigma_x.
/// "id" is the identity on both sides.
struct OperatorPair {
  std::string name;

  ComplexMatrix xi() const { return letter(name == "id" ? 'i' : name[0]); }
  ComplexMatrix chi() const { return letter(name == "id" ? 'i' : name[1]); }

  static bool valid(std::string_view n) { return n == "xx" || n == "zz" || n == "zx" || n == "zy" || n == "id"; }

private:
  static ComplexMatrix letter(char c) {
    switch (c) {
      case 'x': return pauli::sigma_x();
      case 'y': return pauli::sigma_y();
      case 'z': return pauli::sigma_z();
      default: return pauli::identity();
    }
  }
};

enum class KindSelection { nonlinear, linear, both };

/// Explicit H+, Gamma and initial state instead of one of the two-level models.
struct RawScenario {
  std::size_t dim = 2;
  std::vector<double> h_plus;    // 2*dim^2 reals: row-major (re, im) pairs
  std::vector<double> gamma_op;  // same layout
  std::vector<double> rho0;      // same layout; empty means I/dim
};

struct RunConfig {
  tls::TlsScenario scenario;
  std::optional<RawScenario> raw;
  double t_max = 5.0;
  PropagationConfig propagation{Method::exact_exponential, 1e-3, 10};
  std::vector<std::string> averages{"sx", "sy", "sz"};
  std::vector<OperatorPair> pairs;  // empty: the autocorrelation matching the initial family
  KindSelection kind = KindSelection::both;
  bool delta_c = true;
  bool ratio = false;
  double rtol = 1e-8;
  std::string out;

  bool is_raw() const noexcept { return raw.has_value(); }

  HamiltonianSplit hamiltonian() const;
  StateMatrix initial() const;
  std::vector<OperatorPair> effective_pairs() const;
  std::vector<double> output_times() const;
  void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline double parse_double(const std::string& v, const std::string& where) {
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out))
    throw ConfigError(where + ": expected a finite number, got '" + v + "'");
  return out;
}

inline std::size_t parse_count(const std::string& v, const std::string& where) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || out == 0)
    throw ConfigError(where + ": expected a positive integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(where + ": expected a boolean, got '" + v + "'");
}

inline std::vector<double> parse_reals(const std::string& v, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : split_list(v)) out.push_back(parse_double(tok, where));
  return out;
}

inline ComplexMatrix matrix_from_reals(std::size_t dim, const std::vector<double>& reals, const std::string& what) {
  if (reals.size() != 2 * dim * dim)
    throw ConfigError(what + ": expected " + std::to_string(2 * dim * dim) + " reals (re im per entry), got " +
                      std::to_string(reals.size()));
  std::vector<cplx> entries;
  entries.reserve(dim * dim);
  for (std::size_t i = 0; i < dim * dim; ++i) entries.emplace_back(reals[2 * i], reals[2 * i + 1]);
  return ComplexMatrix(dim, std::move(entries));
}

}  // namespace detail

/// Set one `section.key` value. `where` prefixes diagnostics (file:line or flag name).
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
  using namespace detail;
  const std::string at = where + " [" + key + "]";
  auto raw = [&]() -> RawScenario& {
    if (!cfg.raw) cfg.raw = RawScenario{};
    return *cfg.raw;
  };
  if (key == "scenario.model") {
    if (value == "raw") {
      raw();
    } else if (auto m = tls::parse_model(value)) {
      cfg.scenario.model = *m;
      cfg.raw.reset();
    } else {
      throw ConfigError(at + ": unknown model '" + value + "' (ed, pd, dph, raw)");
    }
  } else if (key == "scenario.delta") {
    cfg.scenario.delta = parse_double(value, at);
  } else if (key == "scenario.a2") {
    cfg.scenario.a2 = parse_double(value, at);
  } else if (key == "scenario.gamma") {
    cfg.scenario.gamma = parse_double(value, at);
  } else if (key == "scenario.nu") {
    cfg.scenario.nu = parse_double(value, at);
  } else if (key == "scenario.init") {
    auto f = tls::parse_family(value);
    if (!f) throw ConfigError(at + ": unknown initial family '" + value + "' (x, z)");
    cfg.scenario.init = *f;
  } else if (key == "scenario.dim") {
    raw().dim = parse_count(value, at);
  } else if (key == "scenario.h_plus") {
    raw().h_plus = parse_reals(value, at);
  } else if (key == "scenario.gamma_op") {
    raw().gamma_op = parse_reals(value, at);
  } else if (key == "scenario.rho0") {
    raw().rho0 = parse_reals(value, at);
  } else if (key == "time.tmax") {
    cfg.t_max = parse_double(value, at);
  } else if (key == "time.stride") {
    cfg.propagation.record_stride = parse_count(value, at);
  } else if (key == "propagation.method") {
    if (value == "exact" || value == "exact-exponential")
      cfg.propagation.method = Method::exact_exponential;
    else if (value == "rk4")
      cfg.propagation.method = Method::rk4;
    else
      throw ConfigError(at + ": unknown method '" + value + "' (exact, rk4)");
  } else if (key == "propagation.dt") {
    cfg.propagation.dt = parse_double(value, at);
  } else if (key == "outputs.averages") {
    cfg.averages = split_list(value);
    for (const auto& a : cfg.averages)
      if (a != "sx" && a != "sy" && a != "sz") throw ConfigError(at + ": unknown average '" + a + "'");
  } else if (key == "outputs.pairs") {
    cfg.pairs.clear();
    for (const auto& p : split_list(value)) {
      if (!OperatorPair::valid(p)) throw ConfigError(at + ": unknown pair '" + p + "' (xx, zz, zx, zy, id)");
      cfg.pairs.push_back({p});
    }
  } else if (key == "outputs.kind") {
    if (value == "nonlinear")
      cfg.kind = KindSelection::nonlinear;
    else if (value == "linear")
      cfg.kind = KindSelection::linear;
    else if (value == "both")
      cfg.kind = KindSelection::both;
    else
      throw ConfigError(at + ": unknown kind '" + value + "' (nonlinear, linear, both)");
  } else if (key == "outputs.delta_c") {
    cfg.delta_c = parse_bool(value, at);
  } else if (key == "outputs.ratio") {
    cfg.ratio = parse_bool(value, at);
  } else if (key == "verify.rtol") {
    cfg.rtol = parse_double(value, at);
  } else if (key == "outputs.out") {
    cfg.out = value;
  } else {
    throw ConfigError(at + ": unknown key");
  }
}

/// Flat INI text: [scenario], [time], [propagation], [outputs], [verify] sections of key = value lines.
/// '#' and ';' start comments.
inline void parse_config_text(RunConfig& cfg, std::string_view text, const std::string& source = "config") {
  std::istringstream in{std::string(text)};
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  static const std::vector<std::string> sections = {"scenario", "time", "propagation", "outputs", "verify"};
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": malformed section header '" + body + "'");
      section = detail::trim(std::string_view(body).substr(1, body.size() - 2));
      if (std::find(sections.begin(), sections.end(), section) == sections.end())
        throw ConfigError(where + ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + body + "'");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    apply_setting(cfg, section + "." + key, value, where);
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  parse_config_text(cfg, buf.str(), path);
}

inline HamiltonianSplit RunConfig::hamiltonian() const {
  if (!raw) return tls::build_model(scenario);
  const auto h = detail::matrix_from_reals(raw->dim, raw->h_plus, "scenario.h_plus");
  const auto g = detail::matrix_from_reals(raw->dim, raw->gamma_op, "scenario.gamma_op");
  if (!is_hermitian(h)) throw ConfigError("scenario.h_plus: matrix is not Hermitian");
  if (!is_hermitian(g)) throw ConfigError("scenario.gamma_op: matrix is not Hermitian");
  return {h, g};
}

inline StateMatrix RunConfig::initial() const {
  if (!raw) return tls::initial_state(scenario.init, scenario.nu);
  if (raw->rho0.empty())
    return StateMatrix(ComplexMatrix::identity(raw->dim) / static_cast<double>(raw->dim), true);
  const auto m = detail::matrix_from_reals(raw->dim, raw->rho0, "scenario.rho0");
  if (std::abs(m.trace() - 1.0) > kUnitTraceTolerance) throw ConfigError("scenario.rho0: trace must be 1");
  return StateMatrix(m, true);
}

inline std::vector<OperatorPair> RunConfig::effective_pairs() const {
  if (!pairs.empty()) return pairs;
  if (raw) return {};
  return {{scenario.init == tls::InitFamily::x ? "xx" : "zz"}};
}

/// t_k = k * dt * stride for t_k <= t_max (t = 0 included).
inline std::vector<double> RunConfig::output_times() const {
  const double spacing = propagation.dt * static_cast<double>(propagation.record_stride);
  const auto n = static_cast<std::size_t>(std::floor(t_max / spacing + 1e-9));
  std::vector<double> ts;
  ts.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) ts.push_back(spacing * static_cast<double>(k));
  return ts;
}

inline void RunConfig::validate() const {
  if (!(t_max > 0.0)) throw ConfigError("time.tmax: must be > 0");
  if (!(propagation.dt > 0.0)) throw ConfigError("propagation.dt: must be > 0");
  if (!(rtol > 0.0)) throw ConfigError("verify.rtol: must be > 0");
  try {
    if (raw) {
      if (raw->dim != 2 && (!averages.empty() || std::any_of(pairs.begin(), pairs.end(),
                                                              [](const auto& p) { return p.name != "id"; })))
        throw ConfigError("scenario.dim: Pauli averages and pairs require dim = 2");
      (void)hamiltonian();
      (void)initial();
    } else {
      scenario.validate();
    }
  } catch (const InputError& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

}  // namespace nhq
