#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/rng.hpp"

namespace wulff {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  CompensatedSum s;
  for (double x : xs) s += x;
  return s.value() / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  CompensatedSum s;
  for (double x : xs) s += (x - m) * (x - m);
  return s.value() / static_cast<double>(xs.size() - 1);
}

// Integrated autocorrelation time tau = 1 + 2 sum_k rho_k with Sokal's
// automatic window (smallest W with W >= c * tau(W)).
inline double integrated_autocorrelation_time(std::span<const double> xs, double window_c = 5.0) {
  const std::size_t n = xs.size();
  if (n < 4) return 1.0;
  const double m = mean(xs);
  double c0 = 0.0;
  for (double x : xs) c0 += (x - m) * (x - m);
  c0 /= static_cast<double>(n);
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double ck = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) ck += (xs[i] - m) * (xs[i + k] - m);
    ck /= static_cast<double>(n);
    tau += 2.0 * ck / c0;
    if (static_cast<double>(k) >= window_c * tau) break;
  }
  return std::max(tau, 1.0);
}

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double iat = 1.0;
  double ess = 0.0;
  std::size_t samples = 0;
};

// Mean with an autocorrelation-corrected standard error.
inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.samples = xs.size();
  if (xs.empty()) return s;
  s.mean = mean(xs);
  s.iat = integrated_autocorrelation_time(xs);
  s.ess = static_cast<double>(xs.size()) / s.iat;
  s.se = xs.size() > 1 ? std::sqrt(variance(xs) * s.iat / static_cast<double>(xs.size())) : 0.0;
  return s;
}

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.96) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("least squares needs >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("least squares: predictor has no spread");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

// Empirical quantile with linear interpolation, q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return xs[lo] * (1 - w) + xs[hi] * w;
}

}  // namespace wulff
