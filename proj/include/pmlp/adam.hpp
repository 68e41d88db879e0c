#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pmlp/error.hpp"

namespace pmlp {

struct AdamParams {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers for a list of parameter blocks.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamState for_shapes(const std::vector<std::span<double>>& params) {
    AdamState s;
    for (const auto& p : params) {
      s.m.emplace_back(p.size(), 0.0);
      s.v.emplace_back(p.size(), 0.0);
    }
    return s;
  }
};

/// One bias-corrected Adam update applied in place to `params`.
inline void adam_step(AdamState& state, const std::vector<std::span<double>>& params,
                      const std::vector<std::span<const double>>& grads, const AdamParams& hp) {
  require(params.size() == grads.size() && params.size() == state.m.size(), ErrorKind::DimensionError,
          "adam_step block count mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    const auto g = grads[b];
    auto& m = state.m[b];
    auto& v = state.v[b];
    require(p.size() == g.size() && p.size() == m.size(), ErrorKind::DimensionError, "adam_step shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
      v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
  }
}

}  // namespace pmlp
