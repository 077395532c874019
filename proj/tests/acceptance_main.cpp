// Acceptance suite: one check per shipped claim, one pass/fail line each.
// Run with no arguments for all criteria, or pass a criterion number.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "pneusleeve/cli.hpp"
#include "pneusleeve/dataio.hpp"
#include "pneusleeve/fit.hpp"
#include "pneusleeve/pneumatics.hpp"
#include "pneusleeve/signals.hpp"
#include "pneusleeve/sleeve.hpp"
#include "pneusleeve/variants.hpp"

using namespace pneusleeve;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << "    " << what << "\n";
    }
  }
};

// --------------------------------------------------------------------------
// 1. Torque anchors reproduced by the derived reference models.

bool criterion_torque_anchors(std::ostream& log) {
  Check c;
  const struct {
    const char* name;
    double peak, at90, plateau;
  } anchors[] = {{"D1", 10.24, 1.27, 0.84},
                 {"D2", 11.15, 4.44, 1.54},
                 {"D3", 15.54, 4.66, 1.80}};
  const double tol = 0.01;
  for (const auto& a : anchors) {
    const auto& m = *catalog_variant(a.name).reference_model;
    const auto check_at = [&](double angle, double expected) {
      const double got = predict_torque(m, angle, 80.0);
      std::ostringstream what;
      what << a.name << " @" << angle << " deg: got " << got << ", expected "
           << expected << " +/- " << tol;
      c.expect(std::abs(got - expected) <= tol, what.str());
    };
    check_at(0.0, a.peak);
    check_at(90.0, a.at90);
    check_at(180.0, a.plateau);
    check_at(270.0, a.plateau);
  }
  if (!c.ok) {
    c.detail << "    note: the D2 anchor set admits no real two-exponential "
                "interpolant (its anchor recurrence has a negative root); "
                "the derived model holds the 0/90 deg operating anchors "
                "exactly and least-squares the plateau pair. See README "
                "model notes.\n";
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 2. Fit quality on model-shaped synthetic data.

bool criterion_fit_quality(std::ostream& log) {
  Check c;
  testutil::Rng rng(101);
  for (const auto* name : {"D1", "D2", "D3"}) {
    const auto& m = *catalog_variant(name).reference_model;
    // Noiseless 30-degree sampling refits to prediction error < 1e-6.
    std::vector<Sample2D> clean;
    for (double a = 0.0; a <= 270.0; a += 30.0) {
      clean.push_back({a, torque_at_reference(m, a)});
    }
    const auto refit = fit_torque_angle(clean);
    double worst = 0.0;
    for (const auto& s : clean) {
      worst = std::max(worst,
                       std::abs(torque_at_reference(refit.model, s.x) - s.y));
    }
    c.expect(worst < 1e-6, std::string(name) +
                               " noiseless refit error " +
                               std::to_string(worst) + " >= 1e-6");

    // 1% multiplicative noise keeps R^2 >= 0.977.
    std::vector<Sample2D> noisy = clean;
    for (auto& s : noisy) s.y *= 1.0 + 0.01 * rng.normal();
    const auto noisy_fit = fit_torque_angle(noisy);
    c.expect(noisy_fit.r_squared >= 0.977,
             std::string(name) + " noisy eq1 R^2 " +
                 std::to_string(noisy_fit.r_squared) + " < 0.977");

    // Pressure sweep with 1% noise keeps R^2 >= 0.991.
    std::vector<Sample2D> sweep;
    for (double p = 0.0; p <= 80.0; p += 10.0) {
      sweep.push_back({p, m.f * p * (1.0 + 0.01 * rng.normal())});
    }
    const auto line = fit_torque_pressure(sweep, false);
    c.expect(line.r_squared >= 0.991,
             std::string(name) + " noisy eq2 R^2 " +
                 std::to_string(line.r_squared) + " < 0.991");
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 3. Support fractions at 90 degrees of elevation, 80 kPa.

bool criterion_support_fractions(std::ostream& log) {
  Check c;
  const ArmParams arm;  // 18.06 N-m at 90 deg
  const struct {
    const char* name;
    double expected_pct;
  } cases[] = {{"D1", 7.0}, {"D2", 24.6}, {"D3", 25.8}};
  for (const auto& k : cases) {
    const auto layout = SleeveLayout::standard(catalog_variant(k.name));
    PressureSet p;
    p.kpa[kElevation] = 80.0;
    const double pct =
        100.0 * support_fraction(layout, {90.0, 0.0}, p, arm);
    std::ostringstream what;
    what << k.name << " support fraction " << pct << "%, expected "
         << k.expected_pct << " +/- 0.5 pp";
    c.expect(std::abs(pct - k.expected_pct) <= 0.5, what.str());
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 4. First-order dynamics reproduce all six rise times; no overshoot.

bool criterion_dynamics(std::ostream& log) {
  Check c;
  const struct {
    const char* name;
    double rise_in, rise_out;
  } cases[] = {{"D1", 4.72, 3.40}, {"D2", 2.12, 4.42}, {"D3", 3.62, 1.82}};
  for (const auto& k : cases) {
    const auto dyn = catalog_dynamics(k.name);
    const auto input = square_wave(60.0, 0.0, 80.0, 120.0, 0.01);
    const auto out = simulate_first_order(dyn, input, 0.0);
    const double rin = rise_time(out, Transition::inflate);
    const double rout = rise_time(out, Transition::deflate);
    c.expect(std::abs(rin - k.rise_in) <= 0.01 * k.rise_in,
             std::string(k.name) + " inflation rise " + std::to_string(rin) +
                 " vs " + std::to_string(k.rise_in));
    c.expect(std::abs(rout - k.rise_out) <= 0.01 * k.rise_out,
             std::string(k.name) + " deflation rise " + std::to_string(rout) +
                 " vs " + std::to_string(k.rise_out));

    // Overshoot-free: within each half-period the response is monotone and
    // never leaves [0, 360].
    const std::size_t half = static_cast<std::size_t>(30.0 / out.dt_s);
    for (std::size_t start = 0; start + 1 < out.size(); start += half) {
      const std::size_t end = std::min(out.size(), start + half);
      const bool rising = input.values[start] > 0.0;
      for (std::size_t i = start + 1; i < end; ++i) {
        const bool mono = rising ? out.values[i] >= out.values[i - 1]
                                 : out.values[i] <= out.values[i - 1];
        if (!mono) {
          c.expect(false, std::string(k.name) + " non-monotone at sample " +
                              std::to_string(i));
          break;
        }
      }
    }
    for (double v : out.values) {
      if (v < -1e-12 || v > 360.0 + 1e-12) {
        c.expect(false, std::string(k.name) + " overshoot detected");
        break;
      }
    }
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 5. Regulator contract, exhaustively over 0..200 kPa in 0.1 steps.

bool criterion_regulator(std::ostream& log) {
  Check c;
  const RegulatorSpec spec;
  for (int i = 0; i <= 2000; ++i) {
    const double req = i / 10.0;
    const double got = regulator_command(spec, req);
    const double expected =
        i == 0 ? 0.0 : std::clamp(std::round(req), 10.0, 150.0);
    if (got != expected) {
      std::ostringstream what;
      what << "request " << req << " -> " << got << ", expected " << expected;
      c.expect(false, what.str());
      break;
    }
    if (regulator_command(spec, got) != got) {
      c.expect(false, "not idempotent at " + std::to_string(req));
      break;
    }
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 6. Allocation round trip and equilibrium against the scan oracle.

double scan_equilibrium_oracle(const SleeveLayout& layout,
                               const PressureSet& p, const ArmParams& arm,
                               double poe) {
  const auto f = [&](double aoe) {
    return net_torque(layout, {aoe, poe}, p).elevation_nm -
           gravity_torque(arm, {aoe, poe});
  };
  double prev = f(0.0);
  if (prev <= 0.0) return 0.0;
  for (double aoe = 0.01; aoe <= 180.0 + 1e-9; aoe += 0.01) {
    const double cur = f(std::min(aoe, 180.0));
    if (cur == 0.0) return aoe;
    if ((cur > 0.0) != (prev > 0.0)) return aoe;
    prev = cur;
  }
  return 180.0;
}

bool criterion_allocation_equilibrium(std::ostream& log) {
  Check c;
  const auto layout = SleeveLayout::standard(catalog_variant("D2"));
  const ArmParams arm;
  testutil::Rng rng(77);

  int tested = 0;
  while (tested < 1000) {
    const ShoulderPose pose{rng.uniform(0.0, 180.0), rng.uniform(-90.0, 135.0)};
    const auto [el_pos, el_neg] =
        axis_capability(layout, pose, SleeveAxis::elevation, 0.0);
    const auto [st_pos, st_neg] =
        axis_capability(layout, pose, SleeveAxis::steering, 0.0);
    AxisTorques want;
    want.elevation_nm = rng.uniform(-0.98 * el_neg, 0.98 * el_pos);
    want.steering_nm = rng.uniform(-0.98 * st_neg, 0.98 * st_pos);
    const auto p = allocate_pressures(layout, pose, want, 0.0);
    const auto got = net_torque(layout, pose, p);
    const double err = std::max(std::abs(got.elevation_nm - want.elevation_nm),
                                std::abs(got.steering_nm - want.steering_nm));
    if (err >= 1e-9) {
      std::ostringstream what;
      what << "round-trip error " << err << " at pose (" << pose.aoe_deg
           << ", " << pose.poe_deg << ")";
      c.expect(false, what.str());
      break;
    }
    ++tested;
  }

  for (double elevation_kpa : {20.0, 40.0, 60.0, 80.0}) {
    PressureSet p;
    p.kpa[kElevation] = elevation_kpa;
    for (double poe : {0.0, 30.0, -45.0}) {
      const double eq = equilibrium_aoe(layout, p, arm, poe);
      const double oracle = scan_equilibrium_oracle(layout, p, arm, poe);
      std::ostringstream what;
      what << "equilibrium at " << elevation_kpa << " kPa, poe " << poe
           << ": " << eq << " vs oracle " << oracle;
      c.expect(std::abs(eq - oracle) <= 0.01, what.str());
      if (eq > 0.0 && eq < 180.0) {
        const double residual =
            net_torque(layout, {eq, poe}, p).elevation_nm -
            gravity_torque(arm, {eq, poe});
        c.expect(std::abs(residual) < 1e-3,
                 "equilibrium residual " + std::to_string(residual));
      }
    }
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 7. Workspace: theoretical reachability and the feasibility boundary.

bool criterion_workspace(std::ostream& log) {
  Check c;
  const auto layout = SleeveLayout::standard(catalog_variant("D2"));
  const ArmParams arm;

  const auto free_cells = workspace_grid(layout, arm, 5.0, 15.0, false);
  for (const auto& cell : free_cells) {
    if (!cell.reachable || !cell.feasible_hold) {
      c.expect(false, "gravity-free grid pose not reachable");
      break;
    }
  }

  const auto cells = workspace_grid(layout, arm, 1.0, 15.0, true);
  const auto& elev = layout.placements[kElevation];
  for (const auto& cell : cells) {
    const ShoulderPose pose{cell.aoe_deg, cell.poe_deg};
    const double cap = predict_torque(*elev.variant.reference_model,
                                      elev.actuator_angle(pose), 80.0);
    const double grav = gravity_torque(arm, pose);
    const bool oracle = cap >= grav;
    if (cell.feasible_hold != oracle) {
      std::ostringstream what;
      what << "boundary mismatch at (" << cell.aoe_deg << ", " << cell.poe_deg
           << ")";
      c.expect(false, what.str());
      break;
    }
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 8. EMG pipeline: filter spec, constructed reductions, scale invariance.

signals::TrialSet synthetic_trial(signals::Movement movement,
                                  signals::Condition condition, double scale,
                                  int cycles) {
  const double imu_rate = 100.0, emg_rate = 2000.0;
  const int rise = 100, fall = 100, rest = 50;
  signals::ImuTrace imu;
  imu.sample_rate_hz = imu_rate;
  for (int cyc = 0; cyc < cycles; ++cyc) {
    for (int i = 0; i < rise; ++i) imu.elevation_deg.push_back(90.0 * i / rise);
    for (int i = 0; i < fall; ++i) {
      imu.elevation_deg.push_back(90.0 * (fall - i) / fall);
    }
    for (int i = 0; i < rest; ++i) imu.elevation_deg.push_back(0.0);
  }
  const std::size_t emg_len = imu.elevation_deg.size() * 20;
  testutil::Rng rng(7);
  signals::EmgTrace emg;
  emg.sample_rate_hz = emg_rate;
  for (const auto& label : signals::muscle_labels()) {
    std::vector<double> ch(emg_len);
    for (std::size_t i = 0; i < emg_len; ++i) {
      const double t = i / emg_rate;
      ch[i] = scale * (0.4 + 0.3 * std::sin(2.0 * M_PI * 4.0 * t) +
                       0.1 * rng.normal());
    }
    emg.labels.emplace_back(label);
    emg.channels.push_back(std::move(ch));
  }
  signals::TrialSet t;
  t.movement = movement;
  t.condition = condition;
  t.repetitions.push_back({std::move(emg), std::move(imu)});
  return t;
}

bool criterion_emg(std::ostream& log) {
  Check c;
  const auto filter = signals::emg_lowpass_filter(2000.0);
  for (double f = 40.0; f <= 999.0; f += 1.0) {
    if (filter.attenuation_db(f, 2000.0) < 80.0 - 1e-6) {
      c.expect(false, "stopband attenuation below 80 dB at " +
                          std::to_string(f) + " Hz");
      break;
    }
  }
  for (double f = 1.0; f <= 20.0; f += 1.0) {
    if (filter.attenuation_db(f, 2000.0) > 1.0) {
      c.expect(false, "passband loss above 1 dB at " + std::to_string(f) +
                          " Hz");
      break;
    }
  }

  signals::MvcTable mvc;
  for (const auto& label : signals::muscle_labels()) {
    mvc.mvc_v[std::string(label)] = 2.0;
  }
  const auto reduction_for = [&](double k) {
    std::vector<signals::TrialSet> trials = {
        synthetic_trial(signals::Movement::abduction,
                        signals::Condition::unpowered, 1.0, 3),
        synthetic_trial(signals::Movement::abduction,
                        signals::Condition::powered, k, 3)};
    return signals::emg_report(trials, mvc);
  };
  const struct {
    double scale;
    double expected_pct;
  } predefined[] = {{0.6, 40.00}, {0.4645, 53.55}, {0.6027, 39.73}};
  for (const auto& k : predefined) {
    const auto rows = reduction_for(k.scale);
    for (const auto& r : rows) {
      if (std::abs(r.relative_reduction_pct - k.expected_pct) > 0.01) {
        std::ostringstream what;
        what << "constructed reduction " << k.expected_pct << " recovered as "
             << r.relative_reduction_pct;
        c.expect(false, what.str());
      }
    }
  }

  // Scale invariance to machine precision.
  const auto rows1 = reduction_for(0.55);
  std::vector<signals::TrialSet> scaled = {
      synthetic_trial(signals::Movement::abduction,
                      signals::Condition::unpowered, 3.7, 3),
      synthetic_trial(signals::Movement::abduction,
                      signals::Condition::powered, 0.55 * 3.7, 3)};
  const auto rows2 = signals::emg_report(scaled, mvc);
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    if (std::abs(rows1[i].relative_reduction_pct -
                 rows2[i].relative_reduction_pct) > 1e-10) {
      c.expect(false, "scale invariance violated");
      break;
    }
  }
  log << c.detail.str();
  return c.ok;
}

// --------------------------------------------------------------------------
// 9. CLI determinism: byte-identical outputs across repeated runs.

void write_emg_inputs(const testutil::TempDir& dir) {
  const double emg_rate = 2000.0, imu_rate = 100.0;
  const int rise = 100, fall = 100, rest = 50;
  std::string imu = "time_s,elevation_deg\n";
  const int cycles = 3;
  for (int cyc = 0; cyc < cycles; ++cyc) {
    const int base = cyc * (rise + fall + rest);
    for (int i = 0; i < rise; ++i) {
      imu += dataio::format_value((base + i) / imu_rate) + "," +
             dataio::format_value(90.0 * i / rise) + "\n";
    }
    for (int i = 0; i < fall; ++i) {
      imu += dataio::format_value((base + rise + i) / imu_rate) + "," +
             dataio::format_value(90.0 * (fall - i) / fall) + "\n";
    }
    for (int i = 0; i < rest; ++i) {
      imu += dataio::format_value((base + rise + fall + i) / imu_rate) +
             ",0\n";
    }
  }
  const std::size_t emg_samples =
      static_cast<std::size_t>(cycles * (rise + fall + rest)) * 20;
  testutil::Rng rng(5);
  std::vector<double> base(emg_samples);
  for (std::size_t i = 0; i < emg_samples; ++i) {
    const double t = i / emg_rate;
    base[i] =
        0.4 + 0.3 * std::sin(2.0 * M_PI * 4.0 * t) + 0.1 * rng.normal();
  }
  const auto emg_csv = [&](double scale) {
    std::string csv =
        "time_s,anterior_deltoid,lateral_deltoid,posterior_deltoid,"
        "pectoralis_major,infraspinatus\n";
    for (std::size_t i = 0; i < emg_samples; ++i) {
      const auto v = dataio::format_value(scale * base[i]);
      csv += dataio::format_value(i / emg_rate);
      for (int ch = 0; ch < 5; ++ch) csv += "," + v;
      csv += "\n";
    }
    return csv;
  };
  dir.write("imu.csv", imu);
  dir.write("emg_unpowered.csv", emg_csv(1.0));
  dir.write("emg_powered.csv", emg_csv(0.6));
  dir.write("mvc.csv",
            "muscle,mvc_v\n"
            "anterior_deltoid,2\nlateral_deltoid,2\nposterior_deltoid,2\n"
            "pectoralis_major,2\ninfraspinatus,2\n");
  dir.write("manifest.csv",
            "movement,condition,emg_csv,imu_csv\n"
            "abduction,unpowered,emg_unpowered.csv,imu.csv\n"
            "abduction,powered,emg_powered.csv,imu.csv\n");
}

bool criterion_determinism(std::ostream& log) {
  Check c;
  testutil::TempDir inputs("accept_inputs");
  write_emg_inputs(inputs);
  {
    const auto& m = *catalog_variant("D2").reference_model;
    std::string csv = "aa_angle_deg,bb_angle_deg,pressure_kpa,torque_nm\n";
    for (double a = 0.0; a <= 270.0; a += 30.0) {
      csv += dataio::format_value(a) + ",0,80," +
             dataio::format_value(torque_at_reference(m, a)) + "\n";
    }
    inputs.write("char.csv", csv);
  }

  const std::vector<std::vector<std::string>> commands = {
      {"fit", (inputs.path() / "char.csv").string(), "--model", "eq1"},
      {"fit", (inputs.path() / "char.csv").string(), "--model", "eq2",
       "--fix-g", "--out", "fit_eq2.csv"},
      {"predict", "D2", "90", "80"},
      {"step", "D2", "--square", "60", "0", "80", "--duration", "120"},
      {"motion", "--start", "0,0", "--target", "20,15", "--mass", "1.0"},
      {"workspace", "--aoe-step", "15", "--poe-step", "45"},
      {"emg", "--manifest", (inputs.path() / "manifest.csv").string(),
       "--mvc", (inputs.path() / "mvc.csv").string()},
  };

  testutil::TempDir run1("accept_run1");
  testutil::TempDir run2("accept_run2");
  for (const auto& cmd : commands) {
    std::string stdout1, stdout2;
    for (int pass = 0; pass < 2; ++pass) {
      const auto& dir = pass == 0 ? run1 : run2;
      std::vector<std::string> args = {"--out-dir", dir.path().string()};
      args.insert(args.end(), cmd.begin(), cmd.end());
      std::ostringstream out, err;
      cli::run(args, out, err);
      // Strip the output-path echo lines, which name the run directory.
      std::string filtered;
      std::istringstream lines(out.str());
      std::string line;
      while (std::getline(lines, line)) {
        if (line.find(dir.path().string()) == std::string::npos) {
          filtered += line + "\n";
        }
      }
      (pass == 0 ? stdout1 : stdout2) = filtered;
    }
    if (stdout1 != stdout2) {
      c.expect(false, "stdout differs for subcommand " + cmd[0]);
    }
  }
  for (const auto& entry :
       std::filesystem::directory_iterator(run1.path())) {
    const auto name = entry.path().filename();
    const auto body1 = testutil::read_file(entry.path());
    const auto body2 = testutil::read_file(run2.path() / name);
    if (body1 != body2 || body1.empty()) {
      c.expect(false, "output file " + name.string() +
                          " differs between runs or is empty");
    }
  }
  log << c.detail.str();
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  const struct {
    int id;
    const char* title;
    bool (*run)(std::ostream&);
  } criteria[] = {
      {1, "torque anchors within 0.01 N-m", criterion_torque_anchors},
      {2, "fit quality on synthetic curves", criterion_fit_quality},
      {3, "support fractions within 0.5 pp", criterion_support_fractions},
      {4, "rise times within 1%, overshoot-free", criterion_dynamics},
      {5, "regulator quantize/clamp/vent contract", criterion_regulator},
      {6, "allocation round trip and equilibrium oracle",
       criterion_allocation_equilibrium},
      {7, "workspace reachability and hold boundary", criterion_workspace},
      {8, "EMG filter spec and constructed reductions", criterion_emg},
      {9, "CLI determinism (byte-identical outputs)", criterion_determinism},
  };

  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& c : criteria) {
    if (selected != 0 && c.id != selected) continue;
    std::ostringstream detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail << "    exception: " << e.what() << "\n";
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": "
              << c.title << "\n"
              << detail.str();
    if (!ok) ++failures;
  }
  return failures;
}
