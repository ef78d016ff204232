#include "kdvlab/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "kdvlab/acceptance.h"
#include "kdvlab/config.h"
#include "kdvlab/control.h"
#include "kdvlab/nonlinear.h"
#include "kdvlab/serialize.h"

namespace kdvlab {

namespace {

struct Command {
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, std::string>> flags;  // flag name, config key
  std::map<std::string, std::string> values;
  std::string config_path;
};

void add_flags(Command& c, std::vector<std::pair<std::string, std::string>> flags) {
  c.flags = std::move(flags);
  for (const auto& [flag, key] : c.flags) {
    c.app->add_option("--" + flag, c.values[flag], fmt::format("sets '{}'", key));
  }
  c.app->add_option("--config", c.config_path, "key = value file; flags take precedence")
      ->check(CLI::ExistingFile);
}

RunConfig effective(const Command& c) {
  RunConfig cfg = default_config();
  if (!c.config_path.empty()) cfg = parse_config(c.config_path, cfg);
  for (const auto& [flag, key] : c.flags) {
    if (c.app->count("--" + flag) > 0) cfg.set(key, c.values.at(flag), "flag");
  }
  cfg.validate();
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

void write_json(const RunConfig& cfg, const std::string& name, const std::string& artifact, Json body) {
  body["metadata"] = metadata(artifact, cfg.to_json());
  write_text(out_path(cfg, name), body.dump(2) + "\n");
}

void write_csv(const RunConfig& cfg, const std::string& name, const std::string& artifact,
               const std::string& table) {
  write_text(out_path(cfg, name), csv_preamble(metadata(artifact, cfg.to_json())) + table);
}

GridFunction initial_state(const RunConfig& cfg, const Spectrum& spec) {
  GridFunction y = sample_modes(spec, initial_modes(cfg), cfg.n_x);
  if (cfg.amplitude > 0.0) y.values *= cfg.amplitude / y.l2_norm();
  return y;
}

ControlOptions control_options(const RunConfig& cfg) {
  ControlOptions o;
  o.n_x = cfg.n_x;
  o.dt_max = cfg.dt_max;
  o.gamma = cfg.gamma;
  o.gamma_start = cfg.gamma_start;
  o.synthesis.n_prod = cfg.N_prod;
  o.synthesis.band_width = cfg.band_width;
  return o;
}

int cmd_spectrum(const RunConfig& cfg) {
  ModeOptions mo;
  mo.critical_tol = cfg.critical_tol;
  const Spectrum spec = solve_modes(cfg.L, cfg.K, mo);
  write_json(cfg, "spectrum.json", "spectrum", to_json(spec));
  std::vector<std::string> lam;
  for (int k = 1; k <= cfg.K; ++k) lam.push_back(fmt::format("{:.10g}", spec.mode(k).lambda));
  fmt::print("spectrum L = {}: lambda_1..{} = {}\n", cfg.L, cfg.K, fmt::join(lam, ", "));
  return kExitOk;
}

int cmd_critical(const RunConfig& cfg) {
  const CriticalCheck c = is_critical(cfg.L, cfg.critical_tol);
  Json body{{"L", cfg.L},
            {"tol", cfg.critical_tol},
            {"critical", c.critical},
            {"nearest", c.nearest},
            {"distance", c.distance},
            {"quadratic_form", c.quadratic_form}};
  write_json(cfg, "critical.json", "critical", body);
  fmt::print("critical={} nearest={:.12g} distance={:.3e} (k^2+kl+l^2 = {})\n", c.critical, c.nearest, c.distance,
             c.quadratic_form);
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
  const Spectrum spec = solve_modes(cfg.L, 2 * cfg.K);
  const GridFunction y0 = initial_state(cfg, spec);
  const SynthesisMethod method = parse_method(cfg.method);
  const SynthesisReport r = null_control_linear(y0, spec, cfg.T, cfg.K, method, control_options(cfg));
  Json body;
  body["problem"] = to_json(r.problem);
  body["method"] = method_name(r.method);
  body["gamma"] = r.gamma_param;
  body["condition"] = r.condition;
  if (r.audit) body["audit"] = to_json(*r.audit);
  body["moment_residual"] = r.moments.max_residual;
  body["check_residual"] = r.moments.max_check_residual;
  body["residual"] = r.residual;
  body["discrepancy"] = r.discrepancy;
  body["v"] = to_json(r.v);
  body["u"] = to_json(r.u);
  body["passed"] = r.passed;
  write_json(cfg, "synth.json", "synth", body);
  write_csv(cfg, "synth_v.csv", "synth jump control v", signal_csv(r.v));
  write_csv(cfg, "synth_u.csv", "synth Neumann control u", signal_csv(r.u));
  fmt::print("synth {}: residual {:.3e}, moment residual {:.2e}, |v| {:.4g}, |u| {:.4g}{}\n", method_name(method),
             r.residual, r.moments.max_residual, r.norm_v, r.norm_u, r.passed ? "" : " (above bound)");
  return r.passed ? kExitOk : kExitFailure;
}

int cmd_simulate(const RunConfig& cfg) {
  const Spectrum spec = solve_modes(cfg.L, cfg.K);
  const GridFunction y0 = initial_state(cfg, spec);
  const Grid grid = Grid::make(cfg.L, cfg.T, cfg.n_x, cfg.dt_max);
  const TimeSignal ctrl =
      TimeSignal::from_real(cfg.T, std::vector<double>(grid.n_t + 1, cfg.control), "control");
  Trajectory traj;
  if (cfg.system == "neumann") {
    traj = solve_neumann(y0, SourceTerm::zero(), ctrl, grid);
  } else if (cfg.system == "jump") {
    traj = solve_jump(y0, SourceTerm::zero(), ctrl, grid);
  } else if (cfg.system == "modal") {
    traj = solve_jump(y0, SourceTerm::zero(), ctrl, grid, JumpMethod::kModal, &spec);
  } else {
    traj = solve_nonlinear(y0, ctrl, grid);
  }
  write_json(cfg, "simulate.json", "trajectory", to_json(traj));
  write_csv(cfg, "simulate_snapshots.csv", "trajectory snapshots", snapshots_csv(traj));
  write_csv(cfg, "simulate_traces.csv", "boundary traces", traces_csv(traj));
  fmt::print("simulate {}: {} steps, energy {:.6e} -> {:.6e}\n", cfg.system, grid.n_t, traj.energy.front(),
             traj.energy.back());
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
  const Spectrum spec = solve_modes(cfg.L, 2 * cfg.K);
  std::vector<std::pair<int, cd>> modes = initial_modes(cfg);
  if (cfg.amplitude > 0.0) {
    const double n = sample_modes(spec, modes, cfg.n_x).l2_norm();
    for (auto& m : modes) m.second *= cfg.amplitude / n;
  }
  const CostCurve c =
      cost_sweep(modes, spec, cfg.T_list, cfg.K, parse_method(cfg.method), control_options(cfg), cfg.workers);
  write_json(cfg, "sweep.json", "cost curve", to_json(c));
  write_csv(cfg, "sweep.csv", "cost curve", cost_csv(c));
  int failed = 0;
  for (const CostEntry& e : c.entries) {
    fmt::print("T = {:<8g} |u| = {:.6g}  |v| = {:.6g}  residual {:.2e}{}\n", e.T, e.norm_u, e.norm_v, e.residual,
               e.ok ? "" : "  (" + e.error + ")");
    if (!e.ok) ++failed;
  }
  fmt::print("fit ln|u| = c T^-1/2 + d: c = {:.4g}, d = {:.4g}, R^2 = {:.4f}; best exponent {:.2f}\n", c.fit.slope,
             c.fit.intercept, c.fit.r2, c.free_fit.exponent);
  return failed == 0 ? kExitOk : kExitFailure;
}

int cmd_nonlinear(RunConfig cfg) {
  if (cfg.origin.count("amplitude") == 0) {
    cfg.amplitude = 1e-2;
    cfg.origin["amplitude"] = "nonlinear default";
  }
  const Spectrum spec = solve_modes(cfg.L, 2 * cfg.K);
  NonlinearSetup setup;
  setup.spec = &spec;
  setup.horizon = cfg.T;
  setup.K = cfg.K;
  setup.n_x = cfg.n_x;
  setup.dt_max = cfg.dt_max;
  const GridFunction y = initial_state(cfg, spec);
  if (cfg.mode == "reach") {
    const ReachResult r = fixed_point_reach(y, setup, cfg.tol, cfg.max_iter);
    write_json(cfg, "nonlinear_reach.json", "nonlinear reach", to_json(r));
    write_csv(cfg, "nonlinear_reach_control.csv", "nonlinear reach control", signal_csv(r.control));
    fmt::print("reach: converged {} after {} iterations, residual {:.3e}, mean contraction {:.3e}\n", r.converged,
               r.iterations, r.residuals.back() / r.target_norm, r.mean_ratio());
    return r.converged ? kExitOk : kExitFailure;
  }
  const NullResult r = null_control_nonlinear(y, setup, cfg.tol, cfg.max_iter);
  write_json(cfg, "nonlinear_null.json", "nonlinear null control", to_json(r));
  write_csv(cfg, "nonlinear_null_control.csv", "nonlinear null control", signal_csv(r.control));
  fmt::print("null: converged {} after {} iterations, residual {:.3e}, |u| {:.4g}\n", r.converged, r.iterations,
             r.residuals.back() / r.initial_norm, r.control.l2_norm());
  return r.converged ? kExitOk : kExitFailure;
}

int cmd_accept(const RunConfig& cfg, const std::vector<int>& only) {
  const std::vector<int> ids = only.empty() ? criterion_ids() : only;
  const std::vector<int> all = criterion_ids();
  for (int id : ids) {
    if (std::find(all.begin(), all.end(), id) == all.end()) {
      throw UsageError(fmt::format("no acceptance criterion {}", id));
    }
  }
  Json results = Json::array();
  int failed = 0;
  run_acceptance(ids, [&](const CriterionResult& r) {
    fmt::print("{}\n", format_result(r));
    std::fflush(stdout);
    results.push_back(Json{{"id", r.id},
                           {"name", r.name},
                           {"passed", r.passed},
                           {"detail", r.detail},
                           {"seconds", r.seconds},
                           {"budget", r.budget}});
    if (!r.passed) ++failed;
  });
  write_json(cfg, "accept.json", "acceptance", Json{{"results", results}});
  fmt::print("{} of {} criteria passed\n", ids.size() - failed, ids.size());
  return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Boundary control laboratory for the linear and nonlinear KdV equation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const std::vector<std::pair<std::string, std::string>> grid_flags{
      {"L", "L"}, {"T", "T"}, {"K", "K"}, {"n_x", "n_x"}, {"dt_max", "dt_max"}, {"output_dir", "output_dir"}};
  auto with = [&](std::vector<std::pair<std::string, std::string>> extra,
                  std::vector<std::pair<std::string, std::string>> base) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
  };

  Command spectrum, critical, synth, simulate, sweep, nonlinear, accept;
  spectrum.app = app.add_subcommand("spectrum", "eigenvalues and eigenfunctions of A_m as JSON");
  add_flags(spectrum, {{"L", "L"}, {"K", "K"}, {"tol", "critical_tol"}, {"output_dir", "output_dir"}});
  critical.app = app.add_subcommand("critical", "membership of L in the critical set");
  add_flags(critical, {{"L", "L"}, {"tol", "critical_tol"}, {"output_dir", "output_dir"}});
  synth.app = app.add_subcommand("synth", "linear null control by the moment method");
  add_flags(synth, with({{"N_prod", "N_prod"},
                         {"method", "method"},
                         {"gamma", "gamma"},
                         {"gamma_start", "gamma_start"},
                         {"band_width", "band_width"},
                         {"y0", "y0"},
                         {"amplitude", "amplitude"},
                         {"seed", "seed"}},
                        grid_flags));
  simulate.app = app.add_subcommand("simulate", "one forward solve with a constant boundary datum");
  add_flags(simulate, with({{"system", "system"},
                            {"control", "control"},
                            {"y0", "y0"},
                            {"amplitude", "amplitude"},
                            {"seed", "seed"}},
                           grid_flags));
  sweep.app = app.add_subcommand("sweep", "control cost against the horizon");
  add_flags(sweep, {{"L", "L"},
                    {"T", "T_list"},
                    {"T0", "T0"},
                    {"K", "K"},
                    {"n_x", "n_x"},
                    {"dt_max", "dt_max"},
                    {"N_prod", "N_prod"},
                    {"method", "method"},
                    {"gamma_start", "gamma_start"},
                    {"band_width", "band_width"},
                    {"y0", "y0"},
                    {"amplitude", "amplitude"},
                    {"seed", "seed"},
                    {"workers", "workers"},
                    {"output_dir", "output_dir"}});
  nonlinear.app = app.add_subcommand("nonlinear", "fixed-point reach or Newton-Picard null control");
  add_flags(nonlinear, with({{"mode", "mode"},
                             {"tol", "tol"},
                             {"max_iter", "max_iter"},
                             {"y0", "y0"},
                             {"amplitude", "amplitude"},
                             {"seed", "seed"}},
                            grid_flags));
  accept.app = app.add_subcommand("accept", "run the acceptance criteria");
  std::vector<int> only;
  accept.app->add_option("ids", only, "criterion ids (default: all)");
  add_flags(accept, {{"output_dir", "output_dir"}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*spectrum.app) return cmd_spectrum(effective(spectrum));
    if (*critical.app) return cmd_critical(effective(critical));
    if (*synth.app) return cmd_synth(effective(synth));
    if (*simulate.app) return cmd_simulate(effective(simulate));
    if (*sweep.app) return cmd_sweep(effective(sweep));
    if (*nonlinear.app) return cmd_nonlinear(effective(nonlinear));
    if (*accept.app) return cmd_accept(effective(accept), only);
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace kdvlab
