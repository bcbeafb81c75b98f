#pragma once

// Subcommand implementations behind the `frictobs` tool. Each returns the
// process exit code and writes diagnostics to `err` only on failure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "frictobs/config.hpp"
#include "frictobs/csv.hpp"
#include "frictobs/gain_design.hpp"
#include "frictobs/ident.hpp"
#include "frictobs/observer.hpp"
#include "frictobs/plant.hpp"

namespace frictobs::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kDiverged = 2,
  kNotRobust = 3,
  kDataError = 4,
};

/// "out.csv" -> "out_measured.csv"
inline std::string with_suffix(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / (p.stem().string() + suffix + p.extension().string());
  return out.string();
}

/// Generic matplotlib script plotting every column of each CSV against t.
inline void write_plot_script(const std::string& script_path, const std::vector<std::string>& csv_paths) {
  std::ofstream os(script_path);
  if (!os) throw std::runtime_error("cannot write '" + script_path + "'");
  os << "#!/usr/bin/env python3\n"
        "import csv\nimport sys\n\nimport matplotlib.pyplot as plt\n\n"
        "paths = sys.argv[1:] or [\n";
  for (const auto& p : csv_paths) os << "    " << std::quoted(p) << ",\n";
  os << "]\n\n"
        "for path in paths:\n"
        "    with open(path) as fh:\n"
        "        rows = list(csv.reader(fh))\n"
        "    header, data = rows[0], [[float(v) for v in r] for r in rows[1:]]\n"
        "    t = [r[0] for r in data]\n"
        "    cols = header[1:]\n"
        "    fig, axes = plt.subplots(len(cols), 1, sharex=True, figsize=(8, 2 * len(cols)))\n"
        "    for i, name in enumerate(cols):\n"
        "        ax = axes[i] if len(cols) > 1 else axes\n"
        "        ax.plot(t, [r[i + 1] for r in data], lw=0.8)\n"
        "        ax.set_ylabel(name)\n"
        "    (axes[-1] if len(cols) > 1 else axes).set_xlabel('t')\n"
        "    fig.suptitle(path)\n"
        "    fig.tight_layout()\n"
        "    fig.savefig(path + '.png', dpi=120)\n";
}

inline void print_report(std::ostream& out, const ObserverGains& g, const RobustReport& r) {
  auto flag = [](bool b) { return b ? "pass" : "fail"; };
  out << "L1 = " << csv::format_double(g.l1) << '\n'
      << "L2 = " << csv::format_double(g.l2) << '\n'
      << "cond_a = " << flag(r.cond_a) << '\n'
      << "cond_b = " << flag(r.cond_b) << '\n'
      << "cond_stab = " << flag(r.cond_stab) << '\n'
      << "worst_discriminant = " << csv::format_double(r.worst_discriminant) << '\n'
      << "fast_pole_range = [" << csv::format_double(r.fast_range.lo) << ", "
      << csv::format_double(r.fast_range.hi) << "]\n"
      << "slow_pole_range = [" << csv::format_double(r.slow_range.lo) << ", "
      << csv::format_double(r.slow_range.hi) << "]\n"
      << "robust = " << flag(r.pass()) << '\n';
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out_path;
  std::string measured_path;  // empty: <out>_measured.csv
  int runs = 1;
  bool plot_script = false;
};

inline int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  try {
    cfg = load_config(args.config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (args.runs < 1) {
    err << "--runs must be >= 1\n";
    return kConfigError;
  }

  struct RunOutput {
    std::string sim_path;
    std::string measured_path;
    std::size_t rows = 0;
    std::string error;
  };
  auto run = [&cfg, &args](int i) {
    RunOutput r;
    SimConfig sim = cfg.sim;
    sim.seed += static_cast<unsigned long long>(i);
    r.sim_path = args.out_path;
    r.measured_path = args.measured_path.empty() ? with_suffix(args.out_path, "_measured") : args.measured_path;
    if (args.runs > 1) {
      r.sim_path = with_suffix(r.sim_path, "_run" + std::to_string(i));
      r.measured_path = with_suffix(r.measured_path, "_run" + std::to_string(i));
    }
    try {
      const Trajectory traj = simulate(cfg.plant, cfg.friction, cfg.scenario, sim);
      csv::write_file(r.sim_path, csv::to_table(traj));
      csv::write_file(r.measured_path, csv::to_table(measure(traj, sim)));
      r.rows = traj.size();
    } catch (const SimulationDiverged& e) {
      r.error = e.what();
    }
    return r;
  };

  std::vector<std::future<RunOutput>> jobs;
  for (int i = 0; i < args.runs; ++i) jobs.push_back(std::async(std::launch::async, run, i));
  std::vector<RunOutput> results;
  for (auto& j : jobs) results.push_back(j.get());

  for (const auto& r : results) {
    if (!r.error.empty()) {
      err << "simulation diverged: " << r.error << '\n';
      return kDiverged;
    }
  }
  std::vector<std::string> written;
  for (const auto& r : results) {
    out << "wrote " << r.sim_path << " (" << r.rows << " rows)\n"
        << "wrote " << r.measured_path << '\n';
    written.push_back(r.sim_path);
    written.push_back(r.measured_path);
  }
  if (args.plot_script) {
    const std::string script = with_suffix(args.out_path, "_plot");
    write_plot_script(std::filesystem::path(script).replace_extension(".py").string(), written);
  }
  return kOk;
}

// design --------------------------------------------------------------------

struct DesignArgs {
  double m = 0.052;
  double sob = 0.0;
  double kappa = 0.0;
  std::vector<double> poles;  // two real negative values
  std::vector<double> gains;  // alternatively, gains to check
};

inline int cmd_design(const DesignArgs& args, std::ostream& out, std::ostream& err) {
  if (!(args.m > 0.0) || !(args.sob >= 0.0) || !(args.kappa >= 0.0)) {
    err << "invalid arguments: need m > 0, sob >= 0, kappa >= 0\n";
    return kConfigError;
  }
  ObserverGains g;
  if (!args.gains.empty()) {
    if (args.gains.size() != 2) {
      err << "--gains expects two values L1,L2\n";
      return kConfigError;
    }
    g = {args.gains[0], args.gains[1]};
  } else {
    if (args.poles.size() != 2) {
      err << "--poles expects two real negative values\n";
      return kConfigError;
    }
    try {
      g = design_gains({args.poles[0], args.poles[1]}, args.m, args.sob);
    } catch (const std::invalid_argument& e) {
      err << e.what() << '\n';
      return kConfigError;
    }
  }
  const RobustReport report = validate_robust(g, args.m, args.sob, args.kappa);
  print_report(out, g, report);
  return report.pass() ? kOk : kNotRobust;
}

// observe -------------------------------------------------------------------

struct ObserveArgs {
  std::string config_path;
  std::string measured_path;
  std::string out_path;
  std::string truth_path;  // optional sim-out ground truth
};

inline ObserverConfig observer_config(const Config& cfg) {
  ObserverConfig oc;
  oc.gains = cfg.observer_gains();
  oc.m = cfg.plant.m;
  oc.friction = cfg.model;
  oc.deadband = cfg.observer.deadband;
  return oc;
}

/// Open-loop prediction of the nominal model driven by the measured input.
inline Trajectory model_prediction(const Config& cfg, const MeasuredSeries& measured, double dt) {
  if (measured.empty()) return {};
  SimConfig sim = cfg.sim;
  sim.dt = dt > 0.0 ? dt : cfg.sim.dt;
  sim.x0 = measured.front().x;
  std::vector<double> u(measured.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = measured[k].u;
  return simulate_sampled(cfg.plant, cfg.model, u, sim);
}

inline int cmd_observe(const ObserveArgs& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  try {
    cfg = load_config(args.config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const ObserverConfig oc = observer_config(cfg);
  const RobustReport report =
      validate_robust(oc.gains, oc.m, oc.friction.sigma_over_beta(), oc.friction.kappa);
  if (!report.pass()) {
    err << "observer gains fail the robustness conditions:\n";
    print_report(err, oc.gains, report);
    return kNotRobust;
  }

  MeasuredSeries measured;
  Trajectory truth;
  double dt = 0.0;
  try {
    measured = csv::to_measured(csv::read_file(args.measured_path, csv::kMeasuredHeader));
    dt = uniform_step(measured);
    if (!args.truth_path.empty()) {
      truth = csv::to_trajectory(csv::read_file(args.truth_path, csv::kSimHeader));
      if (truth.size() != measured.size()) {
        err << args.truth_path << ": " << truth.size() << " rows, measured has " << measured.size() << '\n';
        return kDataError;
      }
    }
  } catch (const csv::CsvError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const GridError& e) {
    // +1 for the header line.
    err << "data error: " << args.measured_path << ": non-uniform time grid at line " << e.row() + 2
        << " (data row " << e.row() << ")\n";
    return kDataError;
  }

  const std::vector<EstimateSample> est = run_observer(measured, oc);
  Trajectory model;
  try {
    model = model_prediction(cfg, measured, dt);
  } catch (const SimulationDiverged& e) {
    err << "model prediction diverged: " << e.what() << '\n';
    return kDiverged;
  }
  const ErrorMetrics metrics = error_metrics(measured, est, model);
  try {
    csv::write_file(args.out_path, csv::to_table(est, measured));
  } catch (const std::runtime_error& e) {
    err << e.what() << '\n';
    return kDataError;
  }

  out << "rows = " << est.size() << '\n'
      << "rms_e_obs = " << csv::format_double(metrics.rms_obs) << '\n'
      << "rms_e_model = " << csv::format_double(metrics.rms_model) << '\n';
  if (!truth.empty()) {
    out << "rms_velocity_error = " << csv::format_double(rms_velocity_error(est, truth)) << '\n';
  }
  return kOk;
}

// identify ------------------------------------------------------------------

struct IdentifyArgs {
  std::string config_path;
  std::string measured_path;
  std::string out_path;
};

inline void write_fit_report(std::ostream& os, const FitResult& r) {
  os << "sigma=" << csv::format_double(r.theta_hat.sigma) << '\n'
     << "beta=" << csv::format_double(r.theta_hat.beta) << '\n'
     << "s_scale=" << csv::format_double(r.theta_hat.s_scale) << '\n'
     << "amplitude=" << csv::format_double(r.theta_hat.amplitude) << '\n'
     << "width=" << csv::format_double(r.theta_hat.width) << '\n'
     << "rms_residual=" << csv::format_double(r.rms_residual) << '\n'
     << "iterations=" << r.iterations << '\n'
     << "converged=" << (r.converged ? "true" : "false") << '\n'
     << "beta_insensitive=" << (r.beta_insensitive ? "true" : "false") << '\n';
}

/// Fit problem from the configuration: nominal model as the starting point,
/// first scenario pulse as the pulse template. Samples from the second pulse
/// on are dropped.
inline std::pair<FitProblem, Theta> fit_setup(const Config& cfg, MeasuredSeries measured) {
  if (cfg.scenario.pulses.empty() && (!cfg.ident.theta0 || !cfg.ident.pulse_start)) {
    throw ConfigError("identify needs scenario.pulses or both ident.theta0 and ident.pulse_start");
  }
  const Pulse first = cfg.scenario.pulses.empty() ? Pulse{} : cfg.scenario.pulses.front();
  if (cfg.scenario.pulses.size() > 1) {
    const double next = cfg.scenario.pulses[1].t_start;
    std::erase_if(measured, [next](const MeasuredSample& s) { return s.t >= next; });
  }
  FitProblem problem;
  problem.measured = std::move(measured);
  problem.plant = cfg.plant;
  problem.base = cfg.model;
  problem.pulse_start = cfg.ident.pulse_start.value_or(first.t_start);
  problem.deadband = cfg.sim.deadband;
  problem.v_max = cfg.sim.v_max;
  problem.max_iterations = cfg.ident.max_iterations;
  problem.tolerance = cfg.ident.tolerance;

  Theta theta0 = cfg.ident.theta0.value_or(
      Theta{cfg.model.sigma, cfg.model.beta, cfg.model.s_scale, first.amplitude, first.duration});
  problem.pulse_sign = theta0.amplitude < 0.0 ? -1.0 : 1.0;
  theta0.amplitude = std::abs(theta0.amplitude);
  auto scaled = [&](double f) {
    auto a = theta0.to_array();
    for (double& v : a) v *= f;
    return Theta::from_array(a);
  };
  problem.lower = cfg.ident.lower.value_or(scaled(0.1));
  problem.upper = cfg.ident.upper.value_or(scaled(10.0));
  return {problem, theta0};
}

inline int cmd_identify(const IdentifyArgs& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  try {
    cfg = load_config(args.config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  MeasuredSeries measured;
  try {
    measured = csv::to_measured(csv::read_file(args.measured_path, csv::kMeasuredHeader));
    uniform_step(measured);
  } catch (const csv::CsvError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const GridError& e) {
    err << "data error: " << args.measured_path << ": " << e.what() << '\n';
    return kDataError;
  }
  if (measured.size() < 2) {
    err << "data error: " << args.measured_path << ": need at least two samples\n";
    return kDataError;
  }

  FitResult result;
  try {
    auto [problem, theta0] = fit_setup(cfg, std::move(measured));
    result = fit(problem, theta0);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  std::ofstream report(args.out_path);
  if (!report) {
    err << "cannot write '" << args.out_path << "'\n";
    return kDataError;
  }
  write_fit_report(report, result);
  write_fit_report(out, result);
  return kOk;
}

// compare -------------------------------------------------------------------

struct CompareArgs {
  std::string sim_path;
  std::string estimates_path;
  std::string out_path;
  bool plot_script = false;
};

struct CompareSummary {
  double rms_e_obs = 0.0;
  double rms_velocity_error = 0.0;
  double rms_friction_error = 0.0;
};

inline std::pair<csv::Table, CompareSummary> merge(const csv::Table& sim, const csv::Table& est) {
  csv::Table merged;
  merged.header = {"t", "x", "v", "f", "u", "w2_tilde", "w3_tilde", "phi", "e_obs", "v_err", "f_err"};
  std::vector<double> e_obs, v_err, f_err;
  for (std::size_t k = 0; k < sim.rows.size(); ++k) {
    const auto& s = sim.rows[k];
    const auto& e = est.rows[k];
    v_err.push_back(e[1] - s[2]);
    f_err.push_back(e[2] - s[3]);
    e_obs.push_back(e[4]);
    merged.rows.push_back({s[0], s[1], s[2], s[3], s[4], e[1], e[2], e[3], e[4], v_err.back(), f_err.back()});
  }
  return {merged, {rms(e_obs), rms(v_err), rms(f_err)}};
}

inline int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  csv::Table sim, est;
  try {
    sim = csv::read_file(args.sim_path, csv::kSimHeader);
    est = csv::read_file(args.estimates_path, csv::kEstimatesHeader);
  } catch (const csv::CsvError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
  if (sim.rows.size() != est.rows.size()) {
    err << "data error: row count mismatch: " << args.sim_path << " has " << sim.rows.size() << ", "
        << args.estimates_path << " has " << est.rows.size() << '\n';
    return kDataError;
  }
  for (std::size_t k = 0; k < sim.rows.size(); ++k) {
    const double ts = sim.rows[k][0];
    const double te = est.rows[k][0];
    if (std::abs(ts - te) > 1e-9 * std::max(1.0, std::abs(ts))) {
      err << "data error: time mismatch at data row " << k + 1 << '\n';
      return kDataError;
    }
  }
  const auto [merged, summary] = merge(sim, est);
  try {
    csv::write_file(args.out_path, merged);
    std::ofstream s(std::filesystem::path(with_suffix(args.out_path, "_summary")).replace_extension(".txt"));
    for (std::ostream* os : {static_cast<std::ostream*>(&out), static_cast<std::ostream*>(&s)}) {
      *os << "rows = " << merged.rows.size() << '\n'
          << "rms_e_obs = " << csv::format_double(summary.rms_e_obs) << '\n'
          << "rms_velocity_error = " << csv::format_double(summary.rms_velocity_error) << '\n'
          << "rms_friction_error = " << csv::format_double(summary.rms_friction_error) << '\n';
    }
    if (args.plot_script) {
      write_plot_script(std::filesystem::path(with_suffix(args.out_path, "_plot")).replace_extension(".py").string(),
                        {args.out_path});
    }
  } catch (const std::runtime_error& e) {
    err << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

}  // namespace frictobs::cli
