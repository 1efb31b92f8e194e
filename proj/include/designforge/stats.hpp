#pragma once

#include <cmath>
#include <utility>

namespace designforge {

// Wilson score interval for a binomial proportion (z = normal quantile).
inline std::pair<double, double> wilson_interval(long long successes, long long trials,
                                                 double z = 1.96) {
  if (trials <= 0) return {0.0, 1.0};
  double n = static_cast<double>(trials);
  double phat = successes / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double centre = phat + z2 / (2 * n);
  double rad = z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n));
  return {(centre - rad) / denom, (centre + rad) / denom};
}

// Binomial standard error of an empirical proportion (floored away from 0).
inline double proportion_sigma(long long successes, long long trials) {
  if (trials <= 0) return 1.0;
  double n = static_cast<double>(trials);
  double phat = successes / n;
  double var = phat * (1 - phat);
  if (var < 1.0 / n) var = 1.0 / n;  // floor: one pseudo-count
  return std::sqrt(var / n);
}

}  // namespace designforge
