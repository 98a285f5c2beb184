// Batch front end: validate | solve | control | sweep.
//
// Exit codes: 0 success, 2 config or usage error, 3 numeric divergence.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nctrl/nctrl.hpp"

namespace fs = std::filesystem;
using namespace nctrl;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string config;
  std::string out = "nctrl_out";
  std::optional<double> grid_step;
  std::optional<double> tol;
  std::optional<std::string> eps;
  std::optional<std::string> target;
  std::optional<std::string> cache;
};

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError(flag + ": not a number: '" + item + "'");
    }
  }
  return out;
}

/// Manifest written before any numeric output and rewritten after every stage.
class Manifest {
 public:
  Manifest(const Options& opt, const ScenarioConfig& cfg, const TimeGrid& grid) : path_(fs::path(opt.out) / "manifest.json") {
    doc_["command"] = opt.command;
    doc_["config"] = opt.config;
    doc_["out_dir"] = opt.out;
    doc_["content_hash"] = hex(cfg.content_hash());
    doc_["tolerances"] = cfg.document().at("tolerances");
    doc_["grid"] = {{"horizon", cfg.horizon()}, {"step", cfg.grid_step()}, {"nodes", grid.size()}};
    doc_["outputs"] = Json::array();
    doc_["timings"] = Json::object();
    flush();
  }

  void output(const std::string& name) {
    doc_["outputs"].push_back(name);
    flush();
  }

  void timing(const std::string& stage, double seconds) {
    doc_["timings"][stage] = seconds;
    flush();
  }

  void note(const std::string& key, Json value) {
    doc_[key] = std::move(value);
    flush();
  }

 private:
  void flush() const {
    std::ofstream os(path_);
    if (!os) throw std::runtime_error("cannot write " + path_.string());
    os << doc_.dump(2) << "\n";
  }

  fs::path path_;
  Json doc_;
};

class Stage {
 public:
  Stage(Manifest& m, std::string name) : m_(m), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~Stage() { m_.timing(name_, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count()); }

 private:
  Manifest& m_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

struct Pipeline {
  Options opt;
  ScenarioConfig cfg;
  ProblemSpec spec;
  TimeGrid grid;
  std::optional<Manifest> manifest;

  PicardOptions picard() const {
    const Tolerances t = cfg.tolerances();
    return {t.picard, t.max_picard};
  }

  SynthesisOptions synthesis() const {
    const Tolerances t = cfg.tolerances();
    return {t.outer, t.max_outer, picard()};
  }

  template <class Writer>
  void write(const std::string& name, Writer&& w) {
    manifest->output(name);
    csv::write_file((fs::path(opt.out) / name).string(), std::forward<Writer>(w));
  }

  ResolventGrid resolvent() {
    Stage s(*manifest, "resolvent");
    const std::uint64_t h = resolvent_content_hash(spec, grid);
    if (!opt.cache) return build_resolvent_grid(spec, grid);
    fs::create_directories(*opt.cache);
    const fs::path file = fs::path(*opt.cache) / ("resolvent_" + hex(h) + ".bin");
    if (auto hit = load_resolvent_cache(file, h, cfg.impulse_times())) {
      manifest->note("resolvent_cache", {{"file", file.string()}, {"hit", true}});
      return std::move(*hit);
    }
    ResolventGrid res = build_resolvent_grid(spec, grid);
    save_resolvent_cache(file, res, h);
    manifest->note("resolvent_cache", {{"file", file.string()}, {"hit", false}});
    return res;
  }

  std::vector<double> epsilons() const {
    if (!opt.eps) return cfg.epsilons();
    const std::vector<double> e = parse_list(*opt.eps, "--eps");
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (!(e[k] > 0.0)) throw UsageError("--eps: values must be positive");
      if (k > 0 && !(e[k] < e[k - 1])) throw UsageError("--eps: values must be strictly decreasing");
    }
    return e;
  }

  // Resolved before any numeric work so a bad target fails fast.
  std::optional<Vector> target_vector() const {
    Json t = cfg.target();
    if (opt.target) {
      if (*opt.target == "free") {
        t = "free";
      } else {
        const std::vector<double> v = parse_list(*opt.target, "--target");
        t = v;
      }
    }
    if (t.is_null()) throw UsageError("no target: pass --target or set \"target\" in the config");
    if (t.is_string()) return std::nullopt;
    if (static_cast<int>(t.size()) != spec.state_dim) {
      throw UsageError("target has " + std::to_string(t.size()) + " entries, state has " +
                       std::to_string(spec.state_dim));
    }
    return cfg::vector(t, "target");
  }

  Vector resolve_target(const std::optional<Vector>& t, const ResolventGrid& res) const {
    if (t) return *t;
    return picard_solve(spec, res, {}, picard()).trajectory.values.back();
  }

  ControlSignal config_control() const {
    const Json& c = cfg.document().at("control");
    if (c.at("kind").get<std::string>() != "constant") return {};
    const Vector v = cfg::vector(c.at("value"), "control.value", spec.control_dim());
    return ControlSignal(grid.size(), v);
  }
};

int cmd_validate(Pipeline& p) {
  std::vector<Violation> v;
  {
    Stage s(*p.manifest, "validate");
    v = validate_spec(p.spec);
  }
  for (const auto& x : v) std::cout << "violation " << x.code << ": " << x.message << "\n";
  if (!v.empty()) {
    std::cout << "structure: " << v.size() << " violation(s)\n";
    return kExitConfig;
  }
  std::cout << "structure: ok\n";
  const ResolventGrid res = p.resolvent();
  const Tolerances t = p.cfg.tolerances();
  HypothesisReport rep;
  {
    Stage s(*p.manifest, "estimate_constants");
    const ControlSignal u = p.config_control();
    rep = estimate_constants(p.spec, p.grid, res, t.probe_radius, {}, u.empty() ? nullptr : &u);
  }
  const Theorem32Check c = check_theorem32(rep, p.spec, static_cast<std::size_t>(t.min_samples));
  std::cout << "existence_condition_lhs: " << csv::real(c.lhs) << "\n";
  std::cout << "existence_condition_verdict: " << to_string(c.verdict) << "\n";
  p.write("hypotheses.csv", [&](std::ostream& os) {
    os << "key,value\n";
    const std::pair<const char*, double> rows[] = {
        {"M1", rep.M1_est},       {"M2", rep.M2_est},      {"LR", rep.LR_est},   {"MR", rep.MR_est},
        {"sigma", rep.sigma_est}, {"r1", rep.r1_est},      {"r2", rep.r2_est},   {"L2", rep.L2_est},
        {"lambda", rep.lambda_est}, {"h1", rep.h1_est},    {"h2", rep.h2_est},   {"Lzeta", rep.Lzeta_est},
        {"existence_condition_lhs", c.lhs},
    };
    for (const auto& [k, val] : rows) os << k << "," << csv::real(val) << "\n";
    for (std::size_t q = 0; q < rep.dq_est.size(); ++q) {
      os << "d_" << q + 1 << "," << csv::real(rep.dq_est[q]) << "\n";
      os << "e_" << q + 1 << "," << csv::real(rep.eq_est[q]) << "\n";
    }
    os << "existence_condition_verdict," << to_string(c.verdict) << "\n";
  });
  return 0;
}

int cmd_solve(Pipeline& p) {
  const ResolventGrid res = p.resolvent();
  PicardResult sol;
  {
    Stage s(*p.manifest, "picard");
    sol = picard_solve(p.spec, res, p.config_control(), p.picard());
  }
  p.manifest->note("picard", {{"iterations", sol.report.iterations}, {"residual", sol.report.residual}});
  p.write("trajectory.csv", [&](std::ostream& os) { csv::write_trajectory(os, sol.trajectory); });
  std::cout << "picard iterations: " << sol.report.iterations << ", residual " << csv::real(sol.report.residual) << "\n";
  return 0;
}

int cmd_control(Pipeline& p) {
  const auto target = p.target_vector();
  const std::vector<double> eps = p.epsilons();
  if (eps.empty()) throw UsageError("no epsilon: pass --eps or set \"epsilons\" in the config");
  const ResolventGrid res = p.resolvent();
  const Vector b = p.resolve_target(target, res);
  GramianPackage g;
  {
    Stage s(*p.manifest, "gramian");
    g = assemble_gramian(res, p.spec.b_op);
  }
  ControlSynthesis syn;
  {
    Stage s(*p.manifest, "synthesis");
    syn = synthesize_control(p.spec, res, g, b, eps.front(), p.synthesis());
  }
  p.write("control.csv", [&](std::ostream& os) { csv::write_control(os, p.grid, syn.control); });
  p.write("trajectory.csv", [&](std::ostream& os) { csv::write_trajectory(os, syn.trajectory); });
  p.write("summary.csv", [&](std::ostream& os) { csv::write_control_summary(os, syn, g); });
  std::cout << "epsilon " << csv::real(syn.epsilon) << ": terminal_error " << csv::real(syn.terminal_error)
            << ", outer iterations " << syn.outer_iterations << ", "
            << (g.positive_definite() ? "steerable" : "not steerable") << "\n";
  return 0;
}

std::vector<Vector> decay_probes(int dim) {
  std::vector<Vector> probes;
  for (int i = 0; i < dim; ++i) probes.push_back(Vector::Unit(dim, i));
  std::mt19937_64 rng(20240531);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    Vector z(dim);
    for (int i = 0; i < dim; ++i) z(i) = n(rng);
    probes.push_back(z.normalized());
  }
  return probes;
}

int cmd_sweep(Pipeline& p) {
  const auto target = p.target_vector();
  const std::vector<double> eps = p.epsilons();
  if (eps.empty()) throw UsageError("empty epsilon list");
  const ResolventGrid res = p.resolvent();
  const Vector b = p.resolve_target(target, res);
  GramianPackage g;
  {
    Stage s(*p.manifest, "gramian");
    g = assemble_gramian(res, p.spec.b_op);
  }
  const ControllabilityTest decay = test_linear_controllability(g, eps, decay_probes(p.spec.state_dim));
  SweepResult sw;
  {
    Stage s(*p.manifest, "sweep");
    sw = epsilon_sweep(p.spec, res, g, b, eps, p.synthesis());
  }
  p.manifest->note("sweep", {{"error_monotone", sw.error_monotone}, {"energy_monotone", sw.energy_monotone}});
  p.write("sweep.csv", [&](std::ostream& os) { csv::write_sweep(os, sw); });
  p.write("decay.csv", [&](std::ostream& os) { csv::write_decay_table(os, decay); });
  for (const auto& r : sw.rows) {
    std::cout << "epsilon " << csv::real(r.epsilon) << ": terminal_error " << csv::real(r.terminal_error) << "\n";
  }
  std::cout << "decay verdict: " << (decay.verdict() ? "positive" : "negative") << "\n";
  return 0;
}

int run(Options opt) {
  Pipeline p;
  p.opt = opt;
  p.cfg = ScenarioConfig::load(opt.config);
  if (opt.grid_step) {
    if (!(*opt.grid_step > 0.0)) throw UsageError("--grid-step must be positive");
    p.cfg.set("grid_step", *opt.grid_step);
  }
  if (opt.tol) {
    if (!(*opt.tol > 0.0)) throw UsageError("--tol must be positive");
    Json t = p.cfg.document().at("tolerances");
    t["picard"] = *opt.tol;
    t["outer"] = *opt.tol;
    p.cfg.set("tolerances", t);
  }
  p.spec = p.cfg.build_problem();
  p.grid = p.cfg.build_grid();
  fs::create_directories(opt.out);
  p.manifest.emplace(opt, p.cfg, p.grid);
  if (opt.command == "validate") return cmd_validate(p);
  if (opt.command == "solve") return cmd_solve(p);
  if (opt.command == "control") return cmd_control(p);
  return cmd_sweep(p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled neutral integro-differential systems: validate, solve, steer, sweep"};
  app.require_subcommand(1, 1);
  Options opt;
  for (const char* name : {"validate", "solve", "control", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "scenario JSON")->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--grid-step", opt.grid_step, "override grid step");
    sub->add_option("--tol", opt.tol, "Picard and outer-loop tolerance");
    sub->add_option("--eps", opt.eps, "comma-separated, strictly decreasing epsilon list");
    sub->add_option("--target", opt.target, "'free' or comma-separated target vector");
    sub->add_option("--cache", opt.cache, "resolvent cache directory");
    sub->callback([&opt, name] { opt.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  try {
    return run(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n  distances:";
    for (double d : e.distances()) std::cerr << " " << csv::real(d);
    std::cerr << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
