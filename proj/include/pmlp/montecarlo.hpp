#pragma once

#include <cmath>
#include <span>

#include "pmlp/matrix.hpp"
#include "pmlp/rng.hpp"

namespace pmlp {

struct ReluMomentsEstimate {
  double m1 = 0.0;  // E[relu(w.a) relu(w.b)]
  double m0 = 0.0;  // E[1{w.a > 0} 1{w.b > 0}]
  double se1 = 0.0;
  double se0 = 0.0;
};

/// Monte-Carlo estimate of the ReLU Gaussian moments with w ~ N(0, I_d).
/// Plain sampling over w, kept independent of the closed-form arc-cosine
/// expressions it is used to check. The step derivative is the strict
/// indicator, so zero inputs contribute 0 to both moments.
inline ReluMomentsEstimate mc_relu_moments(std::span<const double> a, std::span<const double> b,
                                           std::size_t samples, Rng& rng) {
  require(a.size() == b.size(), ErrorKind::DimensionError, "mc_relu_moments dimension mismatch");
  require(samples >= 1, ErrorKind::DimensionError, "mc_relu_moments needs samples >= 1");
  const std::size_t d = a.size();
  Vector w(d);
  double s1 = 0.0, q1 = 0.0, s0 = 0.0, q0 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    double u = 0.0, v = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double wi = rng.normal();
      u += wi * a[i];
      v += wi * b[i];
    }
    const double r1 = (u > 0.0 && v > 0.0) ? u * v : 0.0;
    const double r0 = (u > 0.0 && v > 0.0) ? 1.0 : 0.0;
    s1 += r1;
    q1 += r1 * r1;
    s0 += r0;
    q0 += r0 * r0;
  }
  const auto n = static_cast<double>(samples);
  ReluMomentsEstimate e;
  e.m1 = s1 / n;
  e.m0 = s0 / n;
  if (samples > 1) {
    e.se1 = std::sqrt(std::max(0.0, (q1 / n - e.m1 * e.m1) / (n - 1.0)));
    e.se0 = std::sqrt(std::max(0.0, (q0 / n - e.m0 * e.m0) / (n - 1.0)));
  }
  return e;
}

}  // namespace pmlp
