#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "pneusleeve/actuator.hpp"
#include "pneusleeve/errors.hpp"

// Least-squares fitting of the torque models.
//
// The torque-angle curve T_P(A) = a*exp(b*A) + c*exp(d*A) is fitted by
// damped Gauss-Newton (Levenberg-Marquardt) with multi-start initialization:
// sum-of-exponentials fitting is ill-conditioned, so each start fixes a rate
// pair (b, d) from a small grid and obtains (a, c) by solving the linear
// subproblem (variable projection). Rates are confined to
// [-1, +0.05] 1/deg -- generous for any torque-angle curve of these
// actuators, and it keeps exp(rate * 270) representable. Identifiability is
// asserted on predictions, never on raw parameters; reported parameters are
// canonicalized to b <= d.

namespace pneusleeve {

struct Sample2D {
  double x = 0.0;  // degrees or kilopascals
  double y = 0.0;  // newton-meters
};

struct FitReport {
  TorqueModel model;
  double r_squared = 0.0;
  double residual_norm = 0.0;  // sqrt(sum of squared residuals), N-m
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;  // projected-gradient inf norm at the solution
};

// Thrown when no start converges; carries the best attempt found.
class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, FitReport best)
      : Error(what), best_(std::move(best)) {}
  const FitReport& best_attempt() const { return best_; }

 private:
  FitReport best_;
};

namespace fitdetail {

inline constexpr double kRateMin = -1.0;   // 1/deg
inline constexpr double kRateMax = 0.05;   // 1/deg
inline constexpr double kRelTol = 1e-10;   // relative residual change
inline constexpr int kMaxIterations = 200;

inline double clamp_rate(double r) { return std::clamp(r, kRateMin, kRateMax); }

inline double eval2exp(const std::array<double, 4>& th, double x) {
  return th[0] * std::exp(th[1] * x) + th[2] * std::exp(th[3] * x);
}

// Solves M*delta = rhs in place by Gaussian elimination with partial
// pivoting. Returns false on a (numerically) singular system.
template <std::size_t N>
bool solve_dense(std::array<std::array<double, N>, N> m,
                 std::array<double, N> rhs, std::array<double, N>& out) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    if (std::abs(m[piv][col]) < 1e-300) return false;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double factor = m[r][col] / m[col][col];
      for (std::size_t k = col; k < N; ++k) m[r][k] -= factor * m[col][k];
      rhs[r] -= factor * rhs[col];
    }
  }
  for (std::size_t i = N; i-- > 0;) {
    double acc = rhs[i];
    for (std::size_t k = i + 1; k < N; ++k) acc -= m[i][k] * out[k];
    out[i] = acc / m[i][i];
  }
  return true;
}

// Least-squares (a, c) for fixed rates: variable projection with a small
// ridge so coincident rates stay solvable.
inline std::array<double, 2> project_linear(double b, double d,
                                            const std::vector<Sample2D>& s) {
  double g00 = 0.0, g01 = 0.0, g11 = 0.0, r0 = 0.0, r1 = 0.0;
  for (const auto& p : s) {
    const double eb = std::exp(b * p.x);
    const double ed = std::exp(d * p.x);
    g00 += eb * eb;
    g01 += eb * ed;
    g11 += ed * ed;
    r0 += eb * p.y;
    r1 += ed * p.y;
  }
  const double ridge = 1e-12 * std::max(1.0, g00 + g11);
  g00 += ridge;
  g11 += ridge;
  const double det = g00 * g11 - g01 * g01;
  if (std::abs(det) < 1e-300) return {0.0, 0.0};
  return {(r0 * g11 - r1 * g01) / det, (g00 * r1 - g01 * r0) / det};
}

inline double sum_sq_residual(const std::array<double, 4>& th,
                              const std::vector<Sample2D>& s) {
  double acc = 0.0;
  for (const auto& p : s) {
    const double r = eval2exp(th, p.x) - p.y;
    acc += r * r;
  }
  return acc;
}

struct LmResult {
  std::array<double, 4> theta{};
  double ssr = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
};

// Box-constrained LM on theta = (a, b, c, d). Gradient components that push
// an active rate bound further out are projected away, so convergence is
// judged on the feasible subspace.
inline LmResult levenberg_marquardt(std::array<double, 4> theta,
                                    const std::vector<Sample2D>& s) {
  theta[1] = clamp_rate(theta[1]);
  theta[3] = clamp_rate(theta[3]);
  LmResult res;
  res.theta = theta;
  res.ssr = sum_sq_residual(theta, s);
  double lambda = 1e-3;

  const auto projected_grad = [&](const std::array<double, 4>& th,
                                  std::array<double, 4> grad) {
    for (int k : {1, 3}) {
      if (th[k] <= kRateMin && grad[k] > 0.0) grad[k] = 0.0;
      if (th[k] >= kRateMax && grad[k] < 0.0) grad[k] = 0.0;
    }
    double n = 0.0;
    for (double v : grad) n = std::max(n, std::abs(v));
    return n;
  };

  for (res.iterations = 1; res.iterations <= kMaxIterations;
       ++res.iterations) {
    // J^T J and J^T r
    std::array<std::array<double, 4>, 4> h{};
    std::array<double, 4> g{};
    for (const auto& p : s) {
      const double eb = std::exp(res.theta[1] * p.x);
      const double ed = std::exp(res.theta[3] * p.x);
      const std::array<double, 4> row = {eb, res.theta[0] * p.x * eb, ed,
                                         res.theta[2] * p.x * ed};
      const double r = res.theta[0] * eb + res.theta[2] * ed - p.y;
      for (int i = 0; i < 4; ++i) {
        g[i] += row[i] * r;
        for (int j = 0; j < 4; ++j) h[i][j] += row[i] * row[j];
      }
    }
    res.grad_norm = projected_grad(res.theta, g);
    if (res.grad_norm <= 1e-12 * std::max(1.0, res.ssr)) {
      res.converged = true;
      break;
    }

    // Active-set handling: a rate pinned at its bound with the gradient
    // pushing outward is frozen out of the step so the reduced problem
    // keeps LM's fast local convergence.
    for (int k : {1, 3}) {
      const bool frozen =
          (res.theta[k] <= kRateMin && g[k] > 0.0) ||
          (res.theta[k] >= kRateMax && g[k] < 0.0);
      if (frozen) {
        g[k] = 0.0;
        for (int j = 0; j < 4; ++j) {
          h[k][j] = 0.0;
          h[j][k] = 0.0;
        }
        h[k][k] = 1.0;
      }
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      auto haug = h;
      for (int i = 0; i < 4; ++i) {
        haug[i][i] += lambda * std::max(h[i][i], 1e-12);
      }
      std::array<double, 4> delta{};
      std::array<double, 4> negg = {-g[0], -g[1], -g[2], -g[3]};
      if (!solve_dense<4>(haug, negg, delta)) {
        lambda *= 10.0;
        continue;
      }
      std::array<double, 4> trial = {
          res.theta[0] + delta[0], clamp_rate(res.theta[1] + delta[1]),
          res.theta[2] + delta[2], clamp_rate(res.theta[3] + delta[3])};
      const double trial_ssr = sum_sq_residual(trial, s);
      if (trial_ssr < res.ssr) {
        const double drop = res.ssr - trial_ssr;
        res.theta = trial;
        res.ssr = trial_ssr;
        lambda = std::max(lambda / 3.0, 1e-14);
        accepted = true;
        if (drop <= kRelTol * std::max(res.ssr, 1e-300) || res.ssr < 1e-28) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left at this damping: stationary point.
      res.converged = true;
      break;
    }
    if (res.converged) break;
  }

  // Final projected gradient for reporting.
  std::array<double, 4> g{};
  for (const auto& p : s) {
    const double eb = std::exp(res.theta[1] * p.x);
    const double ed = std::exp(res.theta[3] * p.x);
    const double r = res.theta[0] * eb + res.theta[2] * ed - p.y;
    g[0] += eb * r;
    g[1] += res.theta[0] * p.x * eb * r;
    g[2] += ed * r;
    g[3] += res.theta[2] * p.x * ed * r;
  }
  res.grad_norm = projected_grad(res.theta, g);
  return res;
}

inline double r_squared_raw(const std::vector<Sample2D>& s, double ssr) {
  double mean = 0.0;
  for (const auto& p : s) mean += p.y;
  mean /= static_cast<double>(s.size());
  double sstot = 0.0;
  for (const auto& p : s) sstot += (p.y - mean) * (p.y - mean);
  if (sstot == 0.0) return ssr <= 1e-24 ? 1.0 : 0.0;
  return 1.0 - ssr / sstot;
}

}  // namespace fitdetail

// Coefficient of determination of an arbitrary predictor on samples.
// May be negative for predictors worse than the mean.
inline double r_squared(const std::vector<Sample2D>& samples,
                        const std::function<double(double)>& predictor) {
  if (samples.size() < 2) {
    throw InsufficientDataError("R^2 needs at least 2 samples");
  }
  double mean = 0.0;
  for (const auto& p : samples) mean += p.y;
  mean /= static_cast<double>(samples.size());
  double sstot = 0.0, ssres = 0.0;
  for (const auto& p : samples) {
    sstot += (p.y - mean) * (p.y - mean);
    const double r = p.y - predictor(p.x);
    ssres += r * r;
  }
  if (sstot == 0.0) {
    throw UndefinedValueError("R^2 undefined: zero variance in y");
  }
  return 1.0 - ssres / sstot;
}

// Fits T_P(A) = a*exp(b*A) + c*exp(d*A) to (angle, torque) samples.
// Without `init`, starts from every rate pair of the default grid
// {-0.05, -0.02, -0.005, 0}; the best residual wins and ties keep the
// earliest start.
inline FitReport fit_torque_angle(
    const std::vector<Sample2D>& samples,
    const std::optional<std::array<double, 4>>& init = std::nullopt) {
  if (samples.size() < 4) {
    throw InsufficientDataError("torque-angle fit needs at least 4 samples");
  }
  for (const auto& p : samples) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DomainError("samples must be finite");
    }
    if (p.x < 0.0 || p.x > kAaAngleMaxDeg) {
      throw DomainError("sample angle outside [0, 270] deg");
    }
  }

  std::vector<std::array<double, 4>> starts;
  if (init) {
    starts.push_back(*init);
  } else {
    static constexpr std::array<double, 4> kGrid = {-0.05, -0.02, -0.005, 0.0};
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
      for (std::size_t j = i; j < kGrid.size(); ++j) {
        const auto ac = fitdetail::project_linear(kGrid[i], kGrid[j], samples);
        starts.push_back({ac[0], kGrid[i], ac[1], kGrid[j]});
      }
    }
  }

  fitdetail::LmResult best;
  bool any_converged = false;
  for (const auto& s0 : starts) {
    const auto r = fitdetail::levenberg_marquardt(s0, samples);
    any_converged = any_converged || r.converged;
    if (r.ssr < best.ssr) best = r;
  }

  FitReport report;
  report.model = TorqueModel::from_params(best.theta[0], best.theta[1],
                                          best.theta[2], best.theta[3]);
  report.residual_norm = std::sqrt(best.ssr);
  report.iterations = best.iterations;
  report.converged = best.converged;
  report.gradient_norm = best.grad_norm;
  report.r_squared = fitdetail::r_squared_raw(samples, best.ssr);
  if (!any_converged) {
    throw FitFailure("torque-angle fit did not converge from any start",
                     report);
  }
  return report;
}

// Fits T_A(P) = f*P + g by closed-form least squares; with fix_g_to_zero the
// regression passes through the origin.
inline FitReport fit_torque_pressure(const std::vector<Sample2D>& samples,
                                     bool fix_g_to_zero = false) {
  if (samples.size() < 2) {
    throw InsufficientDataError("torque-pressure fit needs at least 2 samples");
  }
  for (const auto& p : samples) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DomainError("samples must be finite");
    }
    if (p.x < 0.0 || p.x > kMaxPressureKpa) {
      throw DomainError("sample pressure outside [0, 150] kPa");
    }
  }
  const double n = static_cast<double>(samples.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : samples) {
    sx += p.x;
    sy += p.y;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
  }
  const bool degenerate_x = std::all_of(
      samples.begin(), samples.end(),
      [&](const Sample2D& p) { return p.x == samples.front().x; });
  if (degenerate_x) {
    throw DegenerateDataError("all pressures identical: slope unidentifiable");
  }

  double f = 0.0, g = 0.0;
  if (fix_g_to_zero) {
    f = sxy / sxx;
  } else {
    const double det = n * sxx - sx * sx;
    f = (n * sxy - sx * sy) / det;
    g = (sy - f * sx) / n;
  }
  double ssr = 0.0;
  for (const auto& p : samples) {
    const double r = f * p.x + g - p.y;
    ssr += r * r;
  }
  FitReport report;
  report.model.f = f;
  report.model.g = g;
  report.residual_norm = std::sqrt(ssr);
  report.converged = true;
  report.r_squared = fitdetail::r_squared_raw(samples, ssr);
  return report;
}

namespace fitdetail {

// Exact interpolation through four 90-degree-spaced anchors when the values
// are representable by two real exponentials: the anchors form a linear
// recurrence m[k+2] = p*m[k+1] + q*m[k] whose characteristic roots are the
// per-90-degree decay ratios (Prony's method).
inline std::optional<TorqueModel> prony_exact(double m0, double m1, double m2,
                                              double m3) {
  const double det = m1 * m1 - m0 * m2;
  if (std::abs(det) < 1e-9 * std::max({m0 * m0, m1 * m1, 1e-12})) {
    // Degenerate recurrence: geometric (single-exponential) data.
    if (m0 > 0.0 && m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
      const double r = m1 / m0;
      if (std::abs(m2 - m1 * r) < 1e-9 * m0 &&
          std::abs(m3 - m2 * r) < 1e-9 * m0 && r > 0.0) {
        const double b = std::log(r) / 90.0;
        if (b >= kRateMin && b <= kRateMax) {
          return TorqueModel::from_params(m0, b, 0.0, 0.0);
        }
      }
    }
    return std::nullopt;
  }
  const double p = (m2 * m1 - m3 * m0) / det;
  const double q = (m1 * m3 - m2 * m2) / det;
  const double disc = p * p + 4.0 * q;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double z1 = 0.5 * (p + sq);
  const double z2 = 0.5 * (p - sq);
  if (!(z1 > 0.0) || !(z2 > 0.0)) return std::nullopt;
  if (std::abs(z1 - z2) < 1e-12 * std::max(z1, z2)) return std::nullopt;
  const double b = std::log(z1) / 90.0;
  const double d = std::log(z2) / 90.0;
  if (b < kRateMin || b > kRateMax || d < kRateMin || d > kRateMax) {
    return std::nullopt;
  }
  const double a = (m1 - m0 * z2) / (z1 - z2);
  const double c = m0 - a;
  const auto model = TorqueModel::from_params(a, b, c, d);
  // Verify the reconstruction before accepting it.
  const std::array<double, 4> m = {m0, m1, m2, m3};
  for (int k = 0; k < 4; ++k) {
    const double v = model.a * std::exp(model.b * 90.0 * k) +
                     model.c * std::exp(model.d * 90.0 * k);
    if (std::abs(v - m[k]) > 1e-8 * std::max(1.0, m0)) return std::nullopt;
  }
  return model;
}

// Fallback when the anchors are not representable (the plateau pair forces a
// negative recurrence root): hold the operating anchors T(0) and T(90)
// exactly with a single decaying exponential over a constant floor,
// T(A) = a*exp(b*A) + c, and choose b to least-squares the plateau pair.
inline TorqueModel floor_family_fit(double peak, double t90, double plateau) {
  const auto coeffs = [&](double b) -> std::array<double, 2> {
    const double u = std::exp(90.0 * b);
    const double c = (t90 - peak * u) / (1.0 - u);
    return {peak - c, c};
  };
  const auto sse = [&](double b) {
    const auto ac = coeffs(b);
    const double t180 = ac[0] * std::exp(180.0 * b) + ac[1];
    const double t270 = ac[0] * std::exp(270.0 * b) + ac[1];
    return (t180 - plateau) * (t180 - plateau) +
           (t270 - plateau) * (t270 - plateau);
  };

  // Coarse scan, then golden-section refinement inside the best cell.
  const double blo = -0.5, bhi = -1e-6;
  const int cells = 4000;
  int best_i = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= cells; ++i) {
    const double b = blo + (bhi - blo) * i / cells;
    const double v = sse(b);
    if (v < best_v) {
      best_v = v;
      best_i = i;
    }
  }
  double lo = blo + (bhi - blo) * std::max(0, best_i - 1) / cells;
  double hi = blo + (bhi - blo) * std::min(cells, best_i + 1) / cells;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = sse(x1), f2 = sse(x2);
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = sse(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = sse(x2);
    }
  }
  const double b = 0.5 * (lo + hi);
  const auto ac = coeffs(b);
  auto model = TorqueModel::from_params(ac[0], b, ac[1], 0.0);
  // Guard: keep the curve positive; a plain single exponential through the
  // operating anchors always is.
  for (double A = 0.0; A <= kAaAngleMaxDeg; A += 0.5) {
    if (torque_at_reference(model, A) <= 0.0) {
      return TorqueModel::from_params(peak, std::log(t90 / peak) / 90.0, 0.0,
                                      0.0);
    }
  }
  return model;
}

}  // namespace fitdetail

// Derives the two-exponential reference model of a variant from its three
// torque anchors, with the plateau pinned at both 180 and 270 deg. Anchor
// sets representable by the model class are interpolated exactly (closed
// form, then polished by the general fitter); sets that are not -- the
// plateau pair can force a negative recurrence root -- keep the peak and
// 90-degree anchors exact and least-squares the plateau. The linear
// pressure parameters are anchored at the 90-degree characterization point
// with g = 0.
inline TorqueModel derive_reference_model(const ActuatorVariant& variant) {
  const double peak = variant.peak_torque_nm;
  const double t90 = variant.torque_90_nm;
  const double plateau = variant.plateau_torque_nm;
  const double f = t90 / kReferencePressureKpa;

  if (peak == t90 && t90 == plateau) {
    auto m = TorqueModel::from_params(peak, 0.0, 0.0, 0.0, f, 0.0);
    return m;
  }

  TorqueModel model;
  if (auto exact = fitdetail::prony_exact(peak, t90, plateau, plateau)) {
    const std::vector<Sample2D> anchors = {
        {0.0, peak}, {90.0, t90}, {180.0, plateau}, {270.0, plateau}};
    const std::array<double, 4> init = {exact->a, exact->b, exact->c,
                                        exact->d};
    model = fit_torque_angle(anchors, init).model;
  } else {
    model = fitdetail::floor_family_fit(peak, t90, plateau);
  }
  model.f = f;
  model.g = 0.0;
  return model;
}

// Caches the derived model on the variant.
inline const TorqueModel& ensure_reference_model(ActuatorVariant& variant) {
  if (!variant.reference_model) {
    variant.reference_model = derive_reference_model(variant);
  }
  return *variant.reference_model;
}

}  // namespace pneusleeve
