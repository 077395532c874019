#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "pneusleeve/errors.hpp"

// Chebyshev Type II low-pass design and cascaded-biquad filtering.
//
// The analog prototype places equiripple attenuation in the stopband and a
// maximally flat passband: poles are reciprocals of the Chebyshev Type I
// poles, zeros sit on the imaginary axis at j/cos(theta_k). The digital
// filter comes from the bilinear transform with the stopband edge prewarped,
// and each conjugate pole pair keeps its natural zero pair as one
// second-order section (odd orders add one first-order section). The overall
// gain is normalized so H(1) = 1 exactly.

namespace pneusleeve::signals {

struct SosSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
  double a1 = 0.0, a2 = 0.0;            // denominator (a0 = 1)
};

class SosFilter {
 public:
  explicit SosFilter(std::vector<SosSection> sections)
      : sections_(std::move(sections)) {}

  const std::vector<SosSection>& sections() const { return sections_; }

  // Causal single-pass filtering, zero initial state (direct form II
  // transposed per section).
  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y = x;
    for (const auto& s : sections_) {
      double z1 = 0.0, z2 = 0.0;
      for (double& v : y) {
        const double in = v;
        const double out = s.b0 * in + z1;
        z1 = s.b1 * in - s.a1 * out + z2;
        z2 = s.b2 * in - s.a2 * out;
        v = out;
      }
    }
    return y;
  }

  std::complex<double> response(double freq_hz, double sample_rate_hz) const {
    const double w = 2.0 * M_PI * freq_hz / sample_rate_hz;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h = 1.0;
    for (const auto& s : sections_) {
      h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    }
    return h;
  }

  // Attenuation in dB (positive numbers attenuate).
  double attenuation_db(double freq_hz, double sample_rate_hz) const {
    const double mag = std::abs(response(freq_hz, sample_rate_hz));
    return -20.0 * std::log10(std::max(mag, 1e-300));
  }

 private:
  std::vector<SosSection> sections_;
};

// Minimum order meeting a low-pass spec: passband edge fp (<= rp dB loss),
// stopband edge fs (>= rs dB loss). Frequencies prewarped for the bilinear
// transform.
inline int cheby2_min_order(double passband_hz, double stopband_hz,
                            double passband_ripple_db,
                            double stopband_atten_db, double sample_rate_hz) {
  if (!(passband_hz > 0.0) || !(stopband_hz > passband_hz) ||
      sample_rate_hz < 2.0 * stopband_hz) {
    throw ConfigError("invalid low-pass specification");
  }
  const double wp = std::tan(M_PI * passband_hz / sample_rate_hz);
  const double ws = std::tan(M_PI * stopband_hz / sample_rate_hz);
  const double g =
      std::sqrt((std::pow(10.0, stopband_atten_db / 10.0) - 1.0) /
                (std::pow(10.0, passband_ripple_db / 10.0) - 1.0));
  const double order = std::acosh(g) / std::acosh(ws / wp);
  return std::max(1, static_cast<int>(std::ceil(order - 1e-12)));
}

// Chebyshev Type II low-pass with the stopband edge at `stopband_hz` and at
// least `stopband_atten_db` attenuation beyond it.
inline SosFilter design_cheby2_lowpass(int order, double stopband_atten_db,
                                       double stopband_hz,
                                       double sample_rate_hz) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(stopband_hz > 0.0) || sample_rate_hz < 2.0 * stopband_hz) {
    throw ConfigError("stopband edge must lie below Nyquist");
  }
  using cplx = std::complex<double>;
  const double eps = 1.0 / std::sqrt(std::pow(10.0, stopband_atten_db / 10.0) -
                                     1.0);
  const double mu = std::asinh(1.0 / eps) / order;
  const double warped = std::tan(M_PI * stopband_hz / sample_rate_hz);

  // Conjugate pairs only; theta < pi/2. Odd orders have one real pole
  // (theta = pi/2) whose zero is at infinity.
  std::vector<SosSection> sections;
  cplx dc_gain = 1.0;  // product of section responses at z = 1

  const auto bilinear = [](cplx s) { return (1.0 + s) / (1.0 - s); };

  for (int k = 0; k < (order + 1) / 2; ++k) {
    const double theta = M_PI * (2.0 * k + 1.0) / (2.0 * order);
    const cplx cheb1_pole(-std::sinh(mu) * std::sin(theta),
                          std::cosh(mu) * std::cos(theta));
    const cplx pole = warped / cheb1_pole;
    const bool is_real_pole = std::abs(std::cos(theta)) < 1e-15;

    SosSection sec;
    if (is_real_pole) {
      const cplx zp = bilinear(pole);
      sec.b0 = 1.0;
      sec.b1 = 1.0;  // zero at infinity maps to z = -1
      sec.a1 = -zp.real();
      sec.a2 = 0.0;
    } else {
      const cplx zero = cplx(0.0, warped / std::cos(theta));
      const cplx zp = bilinear(pole);
      const cplx zz = bilinear(zero);
      sec.b0 = 1.0;
      sec.b1 = -2.0 * zz.real();
      sec.b2 = std::norm(zz);
      sec.a1 = -2.0 * zp.real();
      sec.a2 = std::norm(zp);
    }
    const cplx num(sec.b0 + sec.b1 + sec.b2, 0.0);
    const cplx den(1.0 + sec.a1 + sec.a2, 0.0);
    dc_gain *= num / den;
    sections.push_back(sec);
  }

  // Normalize the cascade to unit DC gain.
  const double g = 1.0 / dc_gain.real();
  sections.front().b0 *= g;
  sections.front().b1 *= g;
  sections.front().b2 *= g;
  return SosFilter(std::move(sections));
}

}  // namespace pneusleeve::signals
