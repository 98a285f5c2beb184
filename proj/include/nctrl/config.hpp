#pragma once

// Scenario configuration files (JSON). See README.md for the schema.
//
// A config is parsed into a normalized document with every default made
// explicit; serialize() dumps that document, so parse∘serialize∘parse is
// value-identical to parse.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nctrl/modal.hpp"
#include "nctrl/problem.hpp"
#include "nctrl/resolvent_cache.hpp"
#include "nctrl/time_grid.hpp"
#include "nctrl/types.hpp"

namespace nctrl {

using Json = nlohmann::json;

/// Unparseable or schema-violating config; names the offending field or line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct Tolerances {
  double picard = 1e-10;
  double outer = 1e-10;
  int max_picard = 200;
  int max_outer = 100;
  double probe_radius = 1.0;
  int min_samples = 16;
};

namespace cfg {

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + key, "required field missing");
  return j.at(key);
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

inline double number_or(const Json& j, const std::string& key, double dflt, const std::string& path) {
  return j.contains(key) ? number(j.at(key), path + key) : dflt;
}

inline int integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

inline Vector vector(const Json& v, const std::string& path, std::optional<int> size = std::nullopt) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], path + "[" + std::to_string(i) + "]");
  if (size && out.size() != *size) {
    throw ConfigError(path, "expected " + std::to_string(*size) + " entries, got " + std::to_string(out.size()));
  }
  return out;
}

inline Matrix matrix(const Json& v, const std::string& path, std::optional<int> rows = std::nullopt,
                     std::optional<int> cols = std::nullopt) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nested array (list of rows)");
  const Eigen::Index r = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array()) throw ConfigError(path, "expected a nested array (list of rows)");
  const Eigen::Index c = static_cast<Eigen::Index>(v[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const Vector row = vector(v[static_cast<std::size_t>(i)], p);
    if (row.size() != c) throw ConfigError(p, "ragged matrix row");
    m.row(i) = row.transpose();
  }
  if (rows && r != *rows) throw ConfigError(path, "expected " + std::to_string(*rows) + " rows");
  if (cols && c != *cols) throw ConfigError(path, "expected " + std::to_string(*cols) + " columns");
  return m;
}

inline std::string kind(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object with a \"kind\" field");
  const Json& k = require(j, "kind", path + ".");
  if (!k.is_string()) throw ConfigError(path + ".kind", "expected a string");
  return k.get<std::string>();
}

[[noreturn]] inline void unknown_kind(const std::string& path, const std::string& k) {
  throw ConfigError(path + ".kind", "unknown kind \"" + k + "\"");
}

inline Json block_or_zero(const Json& j, const std::string& key) {
  return j.contains(key) ? j.at(key) : Json{{"kind", "zero"}};
}

}  // namespace cfg

/// Parsed, normalized scenario configuration.
class ScenarioConfig {
 public:
  ScenarioConfig() = default;

  static ScenarioConfig parse(const std::string& text) {
    Json raw;
    try {
      raw = Json::parse(text);
    } catch (const Json::parse_error& e) {
      const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
      std::size_t line = 1, col = 1;
      for (std::size_t i = 0; i + 1 < pos; ++i) {
        if (text[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      throw ConfigError("", "parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                                ": " + e.what());
    }
    ScenarioConfig c;
    c.doc_ = normalize(raw);
    return c;
  }

  static ScenarioConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  std::string serialize() const { return doc_.dump(2); }
  const Json& document() const { return doc_; }

  std::string scenario() const { return doc_.at("scenario").get<std::string>(); }
  double horizon() const { return doc_.at("horizon").get<double>(); }
  double grid_step() const { return doc_.at("grid_step").get<double>(); }
  int state_dim() const {
    return scenario() == "wave_memory" ? doc_.at("mode_count").get<int>() : doc_.at("state_dim").get<int>();
  }

  Tolerances tolerances() const {
    const Json& t = doc_.at("tolerances");
    Tolerances out;
    out.picard = t.at("picard").get<double>();
    out.outer = t.at("outer").get<double>();
    out.max_picard = t.at("max_picard").get<int>();
    out.max_outer = t.at("max_outer").get<int>();
    out.probe_radius = t.at("probe_radius").get<double>();
    out.min_samples = t.at("min_samples").get<int>();
    return out;
  }

  std::vector<double> epsilons() const {
    std::vector<double> e;
    for (const auto& v : doc_.at("epsilons")) e.push_back(v.get<double>());
    return e;
  }

  std::vector<double> impulse_times() const {
    std::vector<double> t;
    for (const auto& imp : doc_.at("impulses")) t.push_back(imp.at("time").get<double>());
    return t;
  }

  /// Target b: explicit vector, "free" (uncontrolled endpoint), or absent.
  const Json& target() const { return doc_.at("target"); }

  /// FNV-1a of the normalized document; stable across re-parses.
  std::uint64_t content_hash() const {
    ContentHash h;
    h.text(doc_.dump());
    return h.value();
  }

  void set(const std::string& key, Json value) {
    Json d = doc_;
    d[key] = std::move(value);
    doc_ = normalize(d);
  }

  ProblemSpec build_problem() const;
  TimeGrid build_grid(std::optional<double> step_override = std::nullopt) const {
    return TimeGrid::uniform(horizon(), step_override.value_or(grid_step()), impulse_times());
  }

 private:
  static Json normalize(const Json& raw);
  Json doc_;
};

namespace cfg {

inline void check_f1(const Json& j, const std::string& path, int dim) {
  const std::string k = kind(j, path);
  if (k == "zero") return;
  if (k == "constant") return (void)vector(require(j, "value", path + "."), path + ".value", dim);
  if (k == "linear") return (void)number(require(j, "gain", path + "."), path + ".gain");
  if (k == "sine_saturation" || k == "tanh_saturation") {
    return (void)number(require(j, "scale", path + "."), path + ".scale");
  }
  unknown_kind(path, k);
}

inline void check_f2(const Json& j, const std::string& path) {
  const std::string k = kind(j, path);
  if (k == "zero") return;
  if (k == "delay_linear") (void)number(require(j, "coeff", path + "."), path + ".coeff");
  else if (k == "delay_sine") (void)number(require(j, "scale", path + "."), path + ".scale");
  else unknown_kind(path, k);
  if (number(require(j, "delay", path + "."), path + ".delay") < 0.0) {
    throw ConfigError(path + ".delay", "delay must be nonnegative");
  }
}

inline void check_time_profile(const Json& j, const std::string& path) {
  const std::string k = kind(j, path);
  if (k == "zero") return;
  if (k == "constant") return (void)number(require(j, "value", path + "."), path + ".value");
  if (k == "cosine") {
    (void)number(require(j, "amplitude", path + "."), path + ".amplitude");
    (void)number(require(j, "frequency", path + "."), path + ".frequency");
    return;
  }
  if (k == "exp_decay") {
    (void)number(require(j, "amplitude", path + "."), path + ".amplitude");
    (void)number(require(j, "rate", path + "."), path + ".rate");
    return;
  }
  unknown_kind(path, k);
}

inline void check_spatial(const Json& j, const std::string& path) {
  const std::string k = kind(j, path);
  if (k == "zero") return;
  if (k == "sine_mode") {
    (void)integer(require(j, "mode", path + "."), path + ".mode");
    (void)number(require(j, "amplitude", path + "."), path + ".amplitude");
    return;
  }
  if (k == "bump") return (void)number(require(j, "amplitude", path + "."), path + ".amplitude");
  unknown_kind(path, k);
}

inline void check_impulse(const Json& j, const std::string& path, int dim, bool wave) {
  (void)number(require(j, "time", path + "."), path + ".time");
  const std::string k = kind(j, path);
  if (k == "zero") return;
  if (k == "constant") {
    (void)vector(require(j, "state", path + "."), path + ".state", dim);
    (void)vector(require(j, "velocity", path + "."), path + ".velocity", dim);
    return;
  }
  if (k == "linear") {
    (void)number(require(j, "state_gain", path + "."), path + ".state_gain");
    (void)number(require(j, "velocity_gain", path + "."), path + ".velocity_gain");
    return;
  }
  if (k == "saturation") {
    (void)number(require(j, "state_scale", path + "."), path + ".state_scale");
    (void)number(require(j, "velocity_scale", path + "."), path + ".velocity_scale");
    return;
  }
  if (wave && k == "integral_saturation") {
    (void)number(require(j, "phi_amplitude", path + "."), path + ".phi_amplitude");
    (void)number(require(j, "varsigma_amplitude", path + "."), path + ".varsigma_amplitude");
    return;
  }
  unknown_kind(path, k);
}

// Componentwise registry nonlinearities.
inline ForcingMap make_f1(const Json& j, int dim) {
  const std::string k = j.at("kind").get<std::string>();
  if (k == "zero") return {};
  if (k == "constant") {
    const Vector c = vector(j.at("value"), "f1.value", dim);
    return [c](double, const Vector&) { return c; };
  }
  if (k == "linear") {
    const double g = j.at("gain").get<double>();
    return [g](double, const Vector& x) -> Vector { return g * x; };
  }
  const double s = j.at("scale").get<double>();
  if (k == "sine_saturation") return [s](double, const Vector& x) -> Vector { return s * x.array().sin().matrix(); };
  return [s](double, const Vector& x) -> Vector { return s * x.array().tanh().matrix(); };
}

inline NeutralMap make_f2(const Json& j) {
  const std::string k = j.at("kind").get<std::string>();
  if (k == "zero") return {};
  const double delay = j.at("delay").get<double>();
  if (k == "delay_linear") {
    const double c = j.at("coeff").get<double>();
    return [c, delay](double, const HistorySegment& seg) -> Vector { return c * seg(-delay); };
  }
  const double s = j.at("scale").get<double>();
  return [s, delay](double, const HistorySegment& seg) -> Vector { return s * seg(-delay).array().sin().matrix(); };
}

inline ScalarField make_time_profile(const Json& j) {
  const std::string k = j.at("kind").get<std::string>();
  if (k == "zero") return {};
  if (k == "constant") {
    const double v = j.at("value").get<double>();
    return [v](double) { return v; };
  }
  if (k == "cosine") {
    const double a = j.at("amplitude").get<double>(), w = j.at("frequency").get<double>();
    return [a, w](double t) { return a * std::cos(w * t); };
  }
  const double a = j.at("amplitude").get<double>(), r = j.at("rate").get<double>();
  return [a, r](double t) { return a * std::exp(-r * t); };
}

// y(2π - y)(π - y)/π³: vanishes at 0, π, 2π and is odd about π, like every sin(m y).
inline double antisymmetric_profile(double y) {
  const double pi = std::numbers::pi;
  return y * (2.0 * pi - y) * (pi - y) / (pi * pi * pi);
}

inline ScalarField make_spatial(const Json& j) {
  const std::string k = j.at("kind").get<std::string>();
  if (k == "zero") return {};
  const double a = j.at("amplitude").get<double>();
  if (k == "sine_mode") {
    const int m = j.at("mode").get<int>();
    return [a, m](double y) { return a * std::sin(m * y); };
  }
  return [a](double y) { return a * antisymmetric_profile(y); };
}

inline std::function<double(double)> make_history_profile(const std::string& k) {
  if (k == "exp") return [](double th) { return std::exp(th); };
  if (k == "cos") return [](double th) { return std::cos(th); };
  return [](double) { return 1.0; };
}

inline void add_generic_impulse(ImpulseSchedule& s, const Json& j, int dim) {
  const std::string k = j.at("kind").get<std::string>();
  s.times.push_back(j.at("time").get<double>());
  if (k == "zero") {
    auto z = [dim](const Vector&) { return Vector(Vector::Zero(dim)); };
    s.jump_state.push_back(z);
    s.jump_velocity.push_back(z);
  } else if (k == "constant") {
    const Vector a = vector(j.at("state"), "impulse.state", dim), b = vector(j.at("velocity"), "impulse.velocity", dim);
    s.jump_state.push_back([a](const Vector&) { return a; });
    s.jump_velocity.push_back([b](const Vector&) { return b; });
  } else if (k == "linear") {
    const double a = j.at("state_gain").get<double>(), b = j.at("velocity_gain").get<double>();
    s.jump_state.push_back([a](const Vector& x) -> Vector { return a * x; });
    s.jump_velocity.push_back([b](const Vector& x) -> Vector { return b * x; });
  } else {
    const double a = j.at("state_scale").get<double>(), b = j.at("velocity_scale").get<double>();
    s.jump_state.push_back([a](const Vector& x) -> Vector {
      return a * (x.array().square() / (1.0 + x.array().square())).matrix();
    });
    s.jump_velocity.push_back([b](const Vector& x) -> Vector {
      const Eigen::ArrayXd x4 = x.array().square().square();
      return b * (x4 / (1.0 + x4)).matrix();
    });
  }
}

}  // namespace cfg

namespace cfg {
// Writes every real-valued entry as a float so that 1 and 1.0 hash alike.
inline void canonicalize_numbers(Json& j, const std::string& key = "") {
  static const char* const kIntegral[] = {"state_dim", "mode_count", "max_picard", "max_outer", "min_samples", "mode"};
  if (j.is_number_integer()) {
    for (const char* k : kIntegral) {
      if (key == k) return;
    }
    j = j.get<double>();
  } else if (j.is_array()) {
    for (auto& v : j) canonicalize_numbers(v, key);
  } else if (j.is_object()) {
    for (auto& [k, v] : j.items()) canonicalize_numbers(v, k);
  }
}
}  // namespace cfg

inline Json ScenarioConfig::normalize(const Json& raw) {
  using namespace cfg;
  if (!raw.is_object()) throw ConfigError("", "config must be a JSON object");
  Json d;
  const std::string scenario = raw.value("scenario", std::string("matrix"));
  if (scenario != "matrix" && scenario != "wave_memory") {
    throw ConfigError("scenario", "expected \"matrix\" or \"wave_memory\"");
  }
  const bool wave = scenario == "wave_memory";
  d["scenario"] = scenario;
  const double horizon = number(require(raw, "horizon", ""), "horizon");
  if (!(horizon > 0.0)) throw ConfigError("horizon", "must be positive");
  d["horizon"] = horizon;
  const double step = number_or(raw, "grid_step", 1e-3, "");
  if (!(step > 0.0)) throw ConfigError("grid_step", "must be positive");
  d["grid_step"] = step;

  Tolerances t;
  const Json traw = raw.value("tolerances", Json::object());
  d["tolerances"] = {
      {"picard", number_or(traw, "picard", t.picard, "tolerances.")},
      {"outer", number_or(traw, "outer", t.outer, "tolerances.")},
      {"max_picard", traw.contains("max_picard") ? integer(traw.at("max_picard"), "tolerances.max_picard") : t.max_picard},
      {"max_outer", traw.contains("max_outer") ? integer(traw.at("max_outer"), "tolerances.max_outer") : t.max_outer},
      {"probe_radius", number_or(traw, "probe_radius", t.probe_radius, "tolerances.")},
      {"min_samples", traw.contains("min_samples") ? integer(traw.at("min_samples"), "tolerances.min_samples") : t.min_samples},
  };
  for (const char* k : {"picard", "outer", "probe_radius"}) {
    if (!(d["tolerances"][k].get<double>() > 0.0)) throw ConfigError(std::string("tolerances.") + k, "must be positive");
  }

  int dim = 0;
  if (wave) {
    dim = integer(require(raw, "mode_count", ""), "mode_count");
    if (dim < 1) throw ConfigError("mode_count", "must be at least 1");
    d["mode_count"] = dim;
    const Json kh = block_or_zero(raw, "kernel_h");
    check_time_profile(kh, "kernel_h");
    d["kernel_h"] = kh;
    const Json pot = block_or_zero(raw, "potential");
    check_time_profile(pot, "potential");
    d["potential"] = pot;
    const Json hist = raw.value("history", Json::object());
    Json h;
    h["time"] = hist.value("time", Json{{"kind", "constant"}});
    const std::string tk = kind(h["time"], "history.time");
    if (tk != "constant" && tk != "exp" && tk != "cos") unknown_kind("history.time", tk);
    h["field"] = hist.value("field", Json{{"kind", "zero"}});
    check_spatial(h["field"], "history.field");
    h["memory_window"] = number_or(hist, "memory_window", 1.0, "history.");
    d["history"] = h;
    const Json iv = block_or_zero(raw, "initial_velocity");
    check_spatial(iv, "initial_velocity");
    d["initial_velocity"] = iv;
    if (raw.contains("b_matrix")) {
      (void)matrix(raw.at("b_matrix"), "b_matrix", dim);
      d["b_matrix"] = raw.at("b_matrix");
    } else {
      Json eye = Json::array();
      for (int r = 0; r < dim; ++r) {
        Json row = Json::array();
        for (int c = 0; c < dim; ++c) row.push_back(r == c ? 1.0 : 0.0);
        eye.push_back(row);
      }
      d["b_matrix"] = eye;
    }
  } else {
    dim = integer(require(raw, "state_dim", ""), "state_dim");
    if (dim < 1) throw ConfigError("state_dim", "must be at least 1");
    d["state_dim"] = dim;
    (void)matrix(require(raw, "a_matrix", ""), "a_matrix", dim, dim);
    d["a_matrix"] = raw.at("a_matrix");
    const Json at = block_or_zero(raw, "a_time");
    check_time_profile(at, "a_time");
    d["a_time"] = at;
    const Json k = block_or_zero(raw, "kernel");
    const std::string kk = kind(k, "kernel");
    if (kk == "exp_decay") {
      check_time_profile(k, "kernel");
      (void)matrix(require(k, "matrix", "kernel."), "kernel.matrix", dim, dim);
    } else if (kk != "zero") {
      unknown_kind("kernel", kk);
    }
    d["kernel"] = k;
    (void)matrix(require(raw, "b_matrix", ""), "b_matrix", dim);
    d["b_matrix"] = raw.at("b_matrix");
    const Json hist = raw.value("history", Json{{"kind", "constant"}});
    const std::string hk = kind(hist, "history");
    if (hk != "constant" && hk != "exp" && hk != "cos") unknown_kind("history", hk);
    Json h{{"kind", hk}};
    h["value"] = hist.contains("value") ? hist.at("value") : Json(std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    (void)vector(h["value"], "history.value", dim);
    h["memory_window"] = number_or(hist, "memory_window", 1.0, "history.");
    d["history"] = h;
    d["v0"] = raw.contains("v0") ? raw.at("v0") : Json(std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    (void)vector(d["v0"], "v0", dim);
  }
  if (d["history"]["memory_window"].get<double>() < 0.0) {
    throw ConfigError("history.memory_window", "must be nonnegative");
  }

  const Json f1 = block_or_zero(raw, "f1");
  check_f1(f1, "f1", dim);
  d["f1"] = f1;
  const Json f2 = block_or_zero(raw, "f2");
  check_f2(f2, "f2");
  d["f2"] = f2;

  d["impulses"] = Json::array();
  if (raw.contains("impulses")) {
    if (!raw.at("impulses").is_array()) throw ConfigError("impulses", "expected an array");
    for (std::size_t q = 0; q < raw.at("impulses").size(); ++q) {
      const Json& imp = raw.at("impulses")[q];
      check_impulse(imp, "impulses[" + std::to_string(q) + "]", dim, wave);
      d["impulses"].push_back(imp);
    }
  }

  if (raw.contains("v0_neutral")) {
    (void)vector(raw.at("v0_neutral"), "v0_neutral", dim);
    d["v0_neutral"] = raw.at("v0_neutral");
  }

  const Json ctl = block_or_zero(raw, "control");
  const std::string ck = kind(ctl, "control");
  if (ck == "constant") {
    if (!ctl.contains("value")) throw ConfigError("control.value", "required field missing");
  } else if (ck != "zero") {
    unknown_kind("control", ck);
  }
  d["control"] = ctl;

  d["target"] = raw.value("target", Json());
  if (d["target"].is_string()) {
    if (d["target"].get<std::string>() != "free") throw ConfigError("target", "expected a vector or \"free\"");
  } else if (!d["target"].is_null()) {
    (void)vector(d["target"], "target", dim);
  }

  d["epsilons"] = raw.value("epsilons", Json::array());
  if (!d["epsilons"].is_array()) throw ConfigError("epsilons", "expected an array");
  for (std::size_t e = 0; e < d["epsilons"].size(); ++e) {
    const std::string p = "epsilons[" + std::to_string(e) + "]";
    const double v = number(d["epsilons"][e], p);
    if (!(v > 0.0)) throw ConfigError(p, "epsilon must be positive");
    if (e > 0 && !(v < d["epsilons"][e - 1].get<double>())) throw ConfigError(p, "epsilons must be strictly decreasing");
  }
  canonicalize_numbers(d);
  return d;
}

inline ProblemSpec ScenarioConfig::build_problem() const {
  using namespace cfg;
  const Json& d = doc_;
  const int dim = state_dim();
  ProblemSpec spec;
  if (scenario() == "wave_memory") {
    WaveMemoryParams prm;
    prm.mode_count = dim;
    prm.horizon = horizon();
    prm.kernel_h = make_time_profile(d.at("kernel_h"));
    prm.potential_F = make_time_profile(d.at("potential"));
    const auto profile = make_history_profile(d.at("history").at("time").at("kind").get<std::string>());
    const ScalarField field = make_spatial(d.at("history").at("field"));
    if (field) prm.history = [profile, field](double th, double y) { return profile(th) * field(y); };
    prm.memory_window = d.at("history").at("memory_window").get<double>();
    prm.initial_velocity = make_spatial(d.at("initial_velocity"));
    prm.b_op = matrix(d.at("b_matrix"), "b_matrix", dim);
    for (const auto& imp : d.at("impulses")) {
      if (imp.at("kind").get<std::string>() == "integral_saturation") {
        const double a = imp.at("phi_amplitude").get<double>(), b = imp.at("varsigma_amplitude").get<double>();
        WaveImpulse w;
        w.time = imp.at("time").get<double>();
        // (1 + cos ξ) w(y): even in ξ about π so the saturated state does not integrate to zero.
        if (a != 0.0) w.phi = [a](double xi, double y) { return a * (1.0 + std::cos(xi)) * antisymmetric_profile(y); };
        if (b != 0.0) w.varsigma = [b](double xi, double y) { return b * (1.0 + std::cos(xi)) * antisymmetric_profile(y); };
        prm.impulses.push_back(std::move(w));
      } else {
        prm.impulses.push_back({imp.at("time").get<double>(), {}, {}});
      }
    }
    spec = build_wave_memory_scenario(prm);
    // Registry impulses other than the integral form act directly on modal coordinates.
    for (std::size_t q = 0; q < d.at("impulses").size(); ++q) {
      const Json& imp = d.at("impulses")[q];
      if (imp.at("kind").get<std::string>() == "integral_saturation") continue;
      ImpulseSchedule one;
      add_generic_impulse(one, imp, dim);
      spec.impulses.jump_state[q] = one.jump_state[0];
      spec.impulses.jump_velocity[q] = one.jump_velocity[0];
    }
  } else {
    spec.name = "matrix";
    spec.state_dim = dim;
    spec.horizon = horizon();
    const Matrix a0 = matrix(d.at("a_matrix"), "a_matrix", dim, dim);
    const ScalarField at = make_time_profile(d.at("a_time"));
    spec.a_op = [a0, at](double t) -> Matrix {
      if (!at) return a0;
      Matrix a = a0;
      a.diagonal().array() += at(t);
      return a;
    };
    if (d.at("kernel").at("kind").get<std::string>() != "zero") {
      const ScalarField h = make_time_profile(d.at("kernel"));
      const Matrix km = matrix(d.at("kernel").at("matrix"), "kernel.matrix", dim, dim);
      spec.kernel = [h, km](double t, double s) -> Matrix { return h(t - s) * km; };
    }
    spec.b_op = matrix(d.at("b_matrix"), "b_matrix", dim);
    const Json& hist = d.at("history");
    const Vector hv = vector(hist.at("value"), "history.value", dim);
    const auto profile = make_history_profile(hist.at("kind").get<std::string>());
    spec.history.memory_window = hist.at("memory_window").get<double>();
    spec.history.phi = [hv, profile](double th) -> Vector { return profile(th) * hv; };
    spec.v0 = vector(d.at("v0"), "v0", dim);
    for (const auto& imp : d.at("impulses")) add_generic_impulse(spec.impulses, imp, dim);
  }
  spec.f1 = make_f1(d.at("f1"), dim);
  spec.f2 = make_f2(d.at("f2"));
  if (d.contains("v0_neutral")) spec.v0_neutral = vector(d.at("v0_neutral"), "v0_neutral", dim);
  return spec;
}

}  // namespace nctrl
