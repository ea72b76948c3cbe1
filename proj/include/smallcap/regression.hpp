#pragma once
// Log-log exponent regression: the workhorse that turns "value ~ R^s" claims
// into a measurable slope with residual diagnostics.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace smallcap {

struct FitResult {
  double slope = 0;
  double intercept = 0;
  double max_residual = 0;
};

// Least squares of log2(value) against log2(R).
inline FitResult fit_exponent(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3)
    throw std::invalid_argument("fit_exponent: need at least 3 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double N = static_cast<double>(samples.size());
  std::vector<double> lx, ly;
  for (const auto& [R, v] : samples) {
    if (v <= 0 || R <= 0)
      throw std::invalid_argument("fit_exponent: positive samples required");
    lx.push_back(std::log2(R));
    ly.push_back(std::log2(v));
  }
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = N * sxx - sx * sx;
  if (std::abs(denom) < 1e-12)
    throw std::invalid_argument("fit_exponent: degenerate abscissae");
  FitResult f;
  f.slope = (N * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / N;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double r = std::abs(ly[i] - (f.slope * lx[i] + f.intercept));
    f.max_residual = std::max(f.max_residual, r);
  }
  return f;
}

}  // namespace smallcap
