#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "hslab/hslab.hpp"

#ifndef HSLAB_VERSION
#define HSLAB_VERSION "unknown"
#endif

using namespace hslab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = default_jobs();
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Config keys must be a subset of the fully defaulted parameter object.
template <typename P>
P load_params(const std::string& path) {
  json defaults = P{};
  if (path.empty()) return P{};
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot read config " + path);
  const json j = json::parse(is);
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!defaults.contains(key)) throw InvalidArgument("unknown config key '" + key + "'");
  defaults.merge_patch(j);
  return defaults.get<P>();
}

class Run {
 public:
  Run(std::string name, const Common& c) : name_(std::move(name)), common_(c), started_(utc_now()) {
    dir_ = c.out.empty() ? fs::path("runs") / name_ : fs::path(c.out);
    fs::create_directories(dir_);
  }

  std::ofstream csv(const std::string& file) {
    outputs_.push_back(file);
    return std::ofstream(dir_ / file);
  }

  int finish(const json& params, const CheckOutcome& r) {
    json m;
    m["subcommand"] = name_;
    m["version"] = HSLAB_VERSION;
    m["config_file"] = common_.config;
    m["jobs"] = common_.jobs;
    m["parameters"] = params;
    m["outputs"] = outputs_;
    m["pass"] = r.pass;
    m["summary"] = r.summary;
    m["started"] = started_;
    m["finished"] = utc_now();
    std::ofstream(dir_ / "manifest.json") << m.dump(2) << '\n';
    std::cout << name_ << ": " << (r.pass ? "PASS" : "FAIL") << " (" << r.summary << ")\n"
              << "artifacts in " << dir_.string() << '\n';
    return r.pass ? 0 : 1;
  }

 private:
  std::string name_;
  Common common_;
  std::string started_;
  fs::path dir_;
  std::vector<std::string> outputs_;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON parameter file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "master seed");
  sub->add_option("--out", c.out, "run directory (default runs/<subcommand>)");
  sub->add_option("--jobs", c.jobs, "worker threads (default HSLAB_JOBS or hardware)")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hard-sphere Boltzmann-Grad lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HSLAB_VERSION);
  Common c;

  auto* flow_cmd = app.add_subcommand("flow-validate", "conservation, reversibility and flow Jacobian");
  add_common(flow_cmd, c);

  auto* dual_cmd = app.add_subcommand("duality-check", "duality bracket residuals on random cells");
  add_common(dual_cmd, c);
  std::vector<std::size_t> dual_Ns;
  std::optional<std::size_t> dual_cells, dual_runs;
  dual_cmd->add_option("--N", dual_Ns, "particle numbers");
  dual_cmd->add_option("--cells", dual_cells, "random cells per N");
  dual_cmd->add_option("--runs", dual_runs, "ensemble runs per bracket side");

  auto* hat_cmd = app.add_subcommand("hat-probe", "comparison, envelopes and hat-hierarchy structure");
  add_common(hat_cmd, c);
  std::optional<std::size_t> hat_probes;
  hat_cmd->add_option("--probes", hat_probes, "probes per property");

  auto* sing_cmd = app.add_subcommand("singular-scaling", "singular-set measure slope, W/V ratio, V/W agreement");
  add_common(sing_cmd, c);
  std::optional<std::size_t> sing_s, sing_k, sing_samples;
  sing_cmd->add_option("--s", sing_s, "particles (with --k: a single (s,k) pair)");
  sing_cmd->add_option("--k", sing_k, "creations");
  sing_cmd->add_option("--samples", sing_samples, "estimator samples per diameter");

  auto* jac_cmd = app.add_subcommand("jacobian-check", "pseudo-trajectory Jacobian identity");
  add_common(jac_cmd, c);
  std::optional<std::size_t> jac_k, jac_n;
  jac_cmd->add_option("--k", jac_k, "a single creation count (tolerance 1e-4 for k=1, 1e-3 otherwise)");
  jac_cmd->add_option("--trajectories", jac_n, "trajectories per k");

  auto* chaos_cmd = app.add_subcommand("chaos-run", "seminorm trend of the example family");
  add_common(chaos_cmd, c);
  std::vector<std::size_t> chaos_Ns;
  std::vector<double> chaos_t;
  std::optional<std::size_t> chaos_budget;
  chaos_cmd->add_option("--N", chaos_Ns, "particle numbers");
  chaos_cmd->add_option("--t-over-TL", chaos_t, "times as fractions of T_L");
  chaos_cmd->add_option("--mc-budget", chaos_budget, "outer Monte Carlo samples per cell");

  auto* dsmc_cmd = app.add_subcommand("dsmc-check", "DSMC Maxwellian invariance, conservation and refinement");
  add_common(dsmc_cmd, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*flow_cmd) {
      auto p = load_params<FlowValidateParams>(c.config);
      if (c.seed) p.seed = *c.seed;
      Run run("flow-validate", c);
      auto f = run.csv("flow.csv");
      return run.finish(p, flow_validate(p, f));
    }
    if (*dual_cmd) {
      auto p = load_params<DualityCheckParams>(c.config);
      if (c.seed) p.seed = *c.seed;
      if (!dual_Ns.empty()) p.Ns = dual_Ns;
      if (dual_cells) p.cells = *dual_cells;
      if (dual_runs) p.runs = *dual_runs;
      p.jobs = c.jobs;
      for (auto N : p.Ns)
        if (N < 1) throw InvalidArgument("invalid grid: N must be positive");
      Run run("duality-check", c);
      auto f = run.csv("duality.csv");
      json echo = p;
      echo.erase("jobs");
      return run.finish(echo, duality_check(p, f));
    }
    if (*hat_cmd) {
      auto p = load_params<HatProbeParams>(c.config);
      if (c.seed) p.seed = *c.seed;
      if (hat_probes) p.probes = *hat_probes;
      Run run("hat-probe", c);
      auto f1 = run.csv("comparison.csv");
      CheckOutcome r = comparison_check(p, f1);
      auto f2 = run.csv("hat.csv");
      merge(r, hat_structure_check(p, f2));
      return run.finish(p, r);
    }
    if (*sing_cmd) {
      auto p = load_params<SingularScalingParams>(c.config);
      if (c.seed) p.seed = *c.seed;
      if (sing_s.has_value() != sing_k.has_value()) throw InvalidArgument("--s and --k go together");
      if (sing_s) {
        if (*sing_k == 0 || *sing_k >= *sing_s) throw InvalidArgument("invalid grid: need 0 < k < s");
        p.sk = {{*sing_s, *sing_k}};
      }
      if (sing_samples) p.samples = *sing_samples;
      p.jobs = c.jobs;
      Run run("singular-scaling", c);
      auto m = run.csv("measures.csv");
      auto f = run.csv("fits.csv");
      CheckOutcome r = singular_scaling(p, m, f);
      auto v = run.csv("vw.csv");
      merge(r, vw_cross_validation(p, v));
      json echo = p;
      echo.erase("jobs");
      return run.finish(echo, r);
    }
    if (*jac_cmd) {
      auto p = load_params<JacobianCheckParams>(c.config);
      if (c.seed) p.seed = *c.seed;
      if (jac_k) {
        if (*jac_k == 0) throw InvalidArgument("invalid grid: k must be positive");
        p.ks = {*jac_k};
        p.tolerances = {*jac_k == 1 ? 1e-4 : 1e-3};
      }
      if (jac_n) p.trajectories = *jac_n;
      Run run("jacobian-check", c);
      auto f = run.csv("jacobian.csv");
      return run.finish(p, jacobian_check(p, f));
    }
    if (*chaos_cmd) {
      auto p = load_params<ChaosRunParams>(c.config);
      if (c.seed) p.config.seed = *c.seed;
      if (!chaos_Ns.empty()) p.config.Ns = chaos_Ns;
      if (!chaos_t.empty()) p.config.t_over_TL = chaos_t;
      if (chaos_budget) p.config.mc_budget = *chaos_budget;
      p.config.jobs = c.jobs;
      for (auto N : p.config.Ns)
        if (N < 2) throw InvalidArgument("invalid grid: N must be at least 2");
      Run run("chaos-run", c);
      auto f = run.csv("chaos.csv");
      ChaosResult res;
      const CheckOutcome r = chaos_run(p, f, &res);
      json echo = p;
      echo.erase("jobs");
      echo["lanford_window"] = {{"nu", res.window.nu},       {"T_L", res.window.T_L},   {"C_d", res.window.C_d},
                                {"mu0", res.window.mu0},     {"beta0", res.window.beta0}, {"ell", res.window.ell}};
      return run.finish(echo, r);
    }
    if (*dsmc_cmd) {
      auto p = load_params<DsmcCheckParams>(c.config);
      if (c.seed) p.seed = *c.seed;
      Run run("dsmc-check", c);
      auto f = run.csv("dsmc.csv");
      return run.finish(p, dsmc_check(p, f));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
