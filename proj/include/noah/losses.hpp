#pragma once

// Loss kernels for lifetime-value models: a gamma-style regression loss and a
// log-logistic accelerated-failure-time loss with right censoring. Each
// returns the summed loss and its gradient in the predictions mu.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "noah/common.hpp"

namespace noah {

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

struct GammaLossParams {
  double k = 1.0;
};

struct AftLossParams {
  double sigma = 1.0;
};

namespace detail {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw ValidationError(std::string(what) + ": non-finite input");
}

}  // namespace detail

/// L = sum_i k (mu_i + q_i exp(-mu_i)); dL/dmu_i = k (1 - q_i exp(-mu_i)).
inline LossResult gamma_loss(std::span<const double> mu, std::span<const double> q, GammaLossParams p) {
  if (mu.size() != q.size()) throw DimensionError("gamma_loss: |mu| != |q|");
  if (!(p.k > 0.0) || !std::isfinite(p.k)) throw ValidationError("gamma_loss: k must be positive");
  detail::require_finite(mu, "gamma_loss");
  detail::require_finite(q, "gamma_loss");
  LossResult r;
  r.grad.resize(mu.size());
  CompensatedSum total;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(q[i] > 0.0)) throw ValidationError("gamma_loss: q[" + std::to_string(i) + "] must be positive");
    const double ratio = q[i] * std::exp(-mu[i]);
    total.add(p.k * (mu[i] + ratio));
    r.grad[i] = p.k * (1.0 - ratio);
  }
  r.loss = total.value();
  return r;
}

/// With z = (s - mu) / sigma:
///   observed: log(2 + e^z + e^-z) = |z| + 2 log(1 + e^-|z|)
///   censored: z + log(1 + e^-z)   = softplus(z)
inline LossResult aft_loss(std::span<const double> mu, std::span<const double> s, const std::vector<bool>& censored,
                           AftLossParams p) {
  if (mu.size() != s.size() || mu.size() != censored.size())
    throw DimensionError("aft_loss: mu, s and censored must have equal length");
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw ValidationError("aft_loss: sigma must be positive");
  detail::require_finite(mu, "aft_loss");
  detail::require_finite(s, "aft_loss");
  LossResult r;
  r.grad.resize(mu.size());
  CompensatedSum total;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double z = (s[i] - mu[i]) / p.sigma;
    if (censored[i]) {
      total.add(detail::softplus(z));
      r.grad[i] = -detail::sigmoid(z) / p.sigma;
    } else {
      const double az = std::abs(z);
      total.add(az + 2.0 * std::log1p(std::exp(-az)));
      r.grad[i] = -std::tanh(0.5 * z) / p.sigma;
    }
  }
  r.loss = total.value();
  return r;
}

}  // namespace noah
