#pragma once

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pneusleeve/dataio.hpp"
#include "pneusleeve/fit.hpp"
#include "pneusleeve/pneumatics.hpp"
#include "pneusleeve/signals.hpp"
#include "pneusleeve/sleeve.hpp"
#include "pneusleeve/variants.hpp"

// Command-line harness. Subcommands: fit, predict, step, motion, workspace,
// emg. Exit codes: 0 success, 1 input/flag/parse errors, 2 model/computation
// failures, 3 expected non-convergence. Output files carry no timestamps, so
// identical invocations produce byte-identical bodies.

namespace pneusleeve::cli {

namespace detail {

inline std::filesystem::path resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("PNEUSLEEVE_OUT_DIR");
      env != nullptr && *env != '\0') {
    return env;
  }
  return ".";
}

inline ShoulderPose parse_pose(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw DomainError("pose must be 'aoe,poe' in degrees");
  }
  return {dataio::parse_value(text.substr(0, comma), 0),
          dataio::parse_value(text.substr(comma + 1), 0)};
}

inline std::string fixed3(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(3);
  s << v;
  return s.str();
}

struct FitOptions {
  std::string input;
  std::string model;
  bool fix_g = false;
  std::string geometry;
  std::string out_name = "fit_report.csv";
};

inline int run_fit(const FitOptions& opt, const std::filesystem::path& out_dir,
                   std::ostream& out) {
  std::vector<Sample2D> samples;
  std::vector<dataio::CharacterizationRow> rows;
  if (!opt.geometry.empty()) {
    const auto geom = dataio::parse_lever_geometry(opt.geometry);
    for (const auto& raw : dataio::parse_raw_platform(opt.input)) {
      const auto [aa_torque, bb_torque] =
          dataio::loadcell_to_torque(raw.forces_n, geom);
      (void)bb_torque;
      rows.push_back({raw.aa_angle_deg, raw.bb_angle_deg, raw.pressure_kpa,
                      aa_torque});
    }
  } else {
    rows = dataio::parse_characterization(opt.input);
  }
  for (const auto& r : rows) {
    samples.push_back(opt.model == "eq1" ? Sample2D{r.aa_angle_deg, r.torque_nm}
                                         : Sample2D{r.pressure_kpa, r.torque_nm});
  }

  FitReport report;
  std::string header, values;
  if (opt.model == "eq1") {
    report = fit_torque_angle(samples);
    header = "a,b,c,d,r_squared,residual_norm,iterations,converged";
    values = dataio::format_value(report.model.a) + "," +
             dataio::format_value(report.model.b) + "," +
             dataio::format_value(report.model.c) + "," +
             dataio::format_value(report.model.d);
  } else {
    report = fit_torque_pressure(samples, opt.fix_g);
    header = "f,g,r_squared,residual_norm,iterations,converged";
    values = dataio::format_value(report.model.f) + "," +
             dataio::format_value(report.model.g);
  }
  values += "," + dataio::format_value(report.r_squared) + "," +
            dataio::format_value(report.residual_norm) + "," +
            std::to_string(report.iterations) + "," +
            (report.converged ? "1" : "0");
  dataio::write_file(out_dir / opt.out_name, header + "\n" + values + "\n");

  out << opt.model << " fit: " << values << "\n";
  out << "report written to " << (out_dir / opt.out_name).string() << "\n";
  return 0;
}

struct StepOptions {
  std::string variant;
  std::vector<double> square = {60.0, 0.0, 80.0};
  double duration_s = 120.0;
  double dt_s = 0.01;
};

inline int run_step(const StepOptions& opt,
                    const std::filesystem::path& out_dir, std::ostream& out) {
  const auto dyn = catalog_dynamics(opt.variant);
  const auto input = square_wave(opt.square[0], opt.square[1], opt.square[2],
                                 opt.duration_s, opt.dt_s);
  const auto response = simulate_first_order(dyn, input, 0.0);
  const auto path = out_dir / ("step_" + opt.variant + ".csv");
  dataio::write_file(path, dataio::serialize_waveform(response));

  const auto report = [&](Transition dir) -> std::string {
    try {
      return fixed3(rise_time(response, dir));
    } catch (const NotFoundError&) {
      return "not-found";
    }
  };
  out << "rise_inflate_s=" << report(Transition::inflate) << "\n";
  out << "rise_deflate_s=" << report(Transition::deflate) << "\n";
  out << "trace written to " << path.string() << "\n";
  return 0;
}

struct MotionOptions {
  std::string start = "0,0";
  std::string target = "0,0";
  std::string variant = "D2";
  double mass_kg = 3.5;
  ControllerConfig controller;
};

inline int run_motion(const MotionOptions& opt,
                      const std::filesystem::path& out_dir,
                      std::ostream& out) {
  const auto layout = SleeveLayout::standard(catalog_variant(opt.variant));
  const auto arm = ArmParams::with_mass(opt.mass_kg);
  const auto result =
      simulate_reach(layout, parse_pose(opt.start), parse_pose(opt.target),
                     arm, opt.controller);
  const auto path = out_dir / "trajectory.csv";
  dataio::write_file(path, dataio::serialize_trajectory(result.trajectory));
  out << (result.success ? "reached" : "did-not-converge") << " final_aoe="
      << fixed3(result.final_pose.aoe_deg)
      << " final_poe=" << fixed3(result.final_pose.poe_deg)
      << " time_s=" << fixed3(result.time_s) << "\n";
  out << "trajectory written to " << path.string() << "\n";
  return result.success ? 0 : 3;
}

struct WorkspaceOptions {
  std::string variant = "D2";
  double aoe_step = 5.0;
  double poe_step = 15.0;
  double mass_kg = 3.5;
  bool no_gravity = false;
};

inline int run_workspace(const WorkspaceOptions& opt,
                         const std::filesystem::path& out_dir,
                         std::ostream& out) {
  const auto layout = SleeveLayout::standard(catalog_variant(opt.variant));
  const auto arm = ArmParams::with_mass(opt.mass_kg);
  const auto cells = workspace_grid(layout, arm, opt.aoe_step, opt.poe_step,
                                    !opt.no_gravity);
  const auto path = out_dir / "workspace.csv";
  dataio::write_file(path, dataio::serialize_workspace(cells));
  std::size_t feasible = 0, reachable = 0;
  for (const auto& c : cells) {
    feasible += c.feasible_hold ? 1 : 0;
    reachable += c.reachable ? 1 : 0;
  }
  out << "poses=" << cells.size() << " reachable=" << reachable
      << " feasible_hold=" << feasible << "\n";
  out << "map written to " << path.string() << "\n";
  return 0;
}

struct EmgOptions {
  std::string manifest;
  std::string mvc;
  std::string out_name = "emg_report.csv";
};

inline int run_emg(const EmgOptions& opt, const std::filesystem::path& out_dir,
                   std::ostream& out) {
  const auto trials = dataio::parse_trials(opt.manifest);
  const auto mvc = dataio::parse_mvc(opt.mvc);
  const auto rows = signals::emg_report(trials, mvc);
  const auto path = out_dir / opt.out_name;
  dataio::write_file(path, dataio::serialize_report(rows));
  out << "rows=" << rows.size() << "\n";
  out << "report written to " << path.string() << "\n";
  return 0;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Modeling and analysis toolkit for a 2-DOF pneumatic shoulder "
               "sleeve"};
  app.set_config("--config", "", "Read options from an INI config file");
  std::string out_dir_flag;
  app.add_option("--out-dir", out_dir_flag,
                 "Directory for output files (default: $PNEUSLEEVE_OUT_DIR "
                 "or the working directory)");

  detail::FitOptions fit_opt;
  auto* fit = app.add_subcommand(
      "fit", "Fit the torque-angle (eq1) or torque-pressure (eq2) model");
  fit->add_option("input", fit_opt.input, "Characterization CSV")->required();
  fit->add_option("--model", fit_opt.model, "Model to fit")
      ->required()
      ->check(CLI::IsMember({"eq1", "eq2"}));
  fit->add_flag("--fix-g", fit_opt.fix_g,
                "Force the eq2 regression through the origin");
  fit->add_option("--geometry", fit_opt.geometry,
                  "Lever geometry CSV for raw load-cell files");
  fit->add_option("--out", fit_opt.out_name, "Report file name");

  std::vector<std::string> predict_args;
  auto* predict = app.add_subcommand(
      "predict", "Predict torque for <variant> <aa_angle_deg> <pressure_kpa>");
  predict->add_option("args", predict_args, "variant angle pressure")
      ->expected(3);

  detail::StepOptions step_opt;
  auto* step = app.add_subcommand(
      "step", "Simulate the square-wave step response of a variant");
  step->add_option("variant", step_opt.variant, "Actuator variant (D1|D2|D3)")
      ->required();
  step->add_option("--square", step_opt.square,
                   "period_s low_kpa high_kpa (default 60 0 80)")
      ->expected(3);
  step->add_option("--duration", step_opt.duration_s, "Duration in seconds");
  step->add_option("--dt", step_opt.dt_s, "Sample step in seconds");

  detail::MotionOptions motion_opt;
  auto* motion = app.add_subcommand(
      "motion", "Closed-loop reach between two shoulder poses");
  motion->add_option("--start", motion_opt.start, "Start pose 'aoe,poe'");
  motion->add_option("--target", motion_opt.target, "Target pose 'aoe,poe'");
  motion->add_option("--variant", motion_opt.variant, "Actuator variant");
  motion->add_option("--mass", motion_opt.mass_kg, "Arm mass in kg");
  motion->add_option("--kp", motion_opt.controller.kp_nm_per_deg,
                     "Proportional gain, N-m per degree");
  motion->add_option("--dt", motion_opt.controller.dt_s, "Control step, s");
  motion->add_option("--time-cap", motion_opt.controller.time_cap_s,
                     "Simulation time cap, s");
  motion->add_option("--tol", motion_opt.controller.success_tol_deg,
                     "Success tolerance, deg");
  motion->add_option("--floor", motion_opt.controller.cocontraction_kpa,
                     "Co-contraction floor, kPa");

  detail::WorkspaceOptions ws_opt;
  auto* workspace =
      app.add_subcommand("workspace", "Sweep the ROM grid for reachability "
                                      "and gravity-hold feasibility");
  workspace->add_option("--variant", ws_opt.variant, "Actuator variant");
  workspace->add_option("--aoe-step", ws_opt.aoe_step, "AoE step, deg");
  workspace->add_option("--poe-step", ws_opt.poe_step, "PoE step, deg");
  workspace->add_option("--mass", ws_opt.mass_kg, "Arm mass in kg");
  workspace->add_flag("--no-gravity", ws_opt.no_gravity,
                      "Theoretical workspace (ignore gravity)");

  detail::EmgOptions emg_opt;
  auto* emg = app.add_subcommand(
      "emg", "Run the EMG pipeline and emit the relative-reduction table");
  emg->add_option("--manifest", emg_opt.manifest, "Trial manifest CSV")
      ->required();
  emg->add_option("--mvc", emg_opt.mvc, "MVC table CSV")->required();
  emg->add_option("--out", emg_opt.out_name, "Report file name");

  app.require_subcommand(0, 1);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 1;
  }

  try {
    const auto out_dir = detail::resolve_out_dir(out_dir_flag);
    std::filesystem::create_directories(out_dir);

    if (fit->parsed()) return detail::run_fit(fit_opt, out_dir, out);
    if (predict->parsed()) {
      const auto& variant = catalog_variant(predict_args[0]);
      const double angle = dataio::parse_value(predict_args[1], 0);
      const double pressure = dataio::parse_value(predict_args[2], 0);
      out << detail::fixed3(predict_torque(*variant.reference_model, angle,
                                           pressure))
          << "\n";
      return 0;
    }
    if (step->parsed()) return detail::run_step(step_opt, out_dir, out);
    if (motion->parsed()) return detail::run_motion(motion_opt, out_dir, out);
    if (workspace->parsed()) {
      return detail::run_workspace(ws_opt, out_dir, out);
    }
    if (emg->parsed()) return detail::run_emg(emg_opt, out_dir, out);

    out << app.help();
    return 0;
  } catch (const FitFailure& e) {
    err << "fit failed: " << e.what() << "\n";
    return 2;
  } catch (const SegmentationError& e) {
    err << "computation failed: " << e.what() << "\n";
    return 2;
  } catch (const UndefinedValueError& e) {
    err << "computation failed: " << e.what() << "\n";
    return 2;
  } catch (const CapabilityExceeded& e) {
    err << "computation failed: " << e.what() << " (max achievable "
        << detail::fixed3(e.max_achievable_nm()) << " N-m)\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pneusleeve::cli
