#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/gibbs.hpp"
#include "wulff/mcmc.hpp"
#include "wulff/rng.hpp"
#include "wulff/stats.hpp"

namespace wulff {

struct RunRecord {
  GibbsConfig config;
  std::uint64_t seed = 0;
  MoveMix mix;
  Schedule schedule;
  std::map<std::string, Summary> summary;
  std::int64_t burn_in_used = 0;
  std::vector<double> min_extent;  // per sample, min over axes
  std::string snapshot;            // final range in snapshot format, if requested
  std::string error;               // non-empty when the point failed

  bool ok() const { return error.empty(); }
  double mean(const std::string& obs) const {
    auto it = summary.find(obs);
    if (it == summary.end()) throw DomainError("record has no observable '" + obs + "'");
    return it->second.mean;
  }
};

template <int D>
RunRecord run_point(const GibbsConfig& config, const MoveMix& mix, const Schedule& schedule, std::uint64_t seed,
                    bool snapshot = false, const ChainOptions& opt = {}) {
  RunRecord rec;
  rec.config = config;
  rec.seed = seed;
  rec.mix = mix;
  rec.schedule = schedule;
  auto res = run_chain<D>(config, mix, schedule, seed, opt);
  rec.summary = res.summary;
  rec.burn_in_used = res.burn_in_used;
  for (const auto& s : res.trace) rec.min_extent.push_back(static_cast<double>(*std::min_element(s.extents.begin(), s.extents.end())));
  if (snapshot) {
    std::ostringstream os;
    write_snapshot<D>(os, res.final_range);
    rec.snapshot = os.str();
  }
  return rec;
}

// Runs every grid point on a pool of `threads` workers. A failing point
// keeps its error message; only a sweep where every point fails throws.
template <int D>
std::vector<RunRecord> sweep(const std::vector<GibbsConfig>& grid, const MoveMix& mix, const Schedule& schedule,
                             const std::vector<std::uint64_t>& seeds, int threads = 1, bool snapshots = false,
                             const ChainOptions& opt = {}) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  if (seeds.size() != grid.size()) throw ConfigError("need one seed per grid point");
  std::vector<RunRecord> out(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        out[i] = run_point<D>(grid[i], mix, schedule, seeds[i], snapshots, opt);
      } catch (const std::exception& e) {
        out[i].config = grid[i];
        out[i].seed = seeds[i];
        out[i].mix = mix;
        out[i].schedule = schedule;
        out[i].error = e.what();
      }
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(grid.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (std::none_of(out.begin(), out.end(), [](const RunRecord& r) { return r.ok(); })) {
    throw Error("every sweep point failed; first error: " + out.front().error);
  }
  return out;
}

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::vector<std::pair<double, double>> grid;  // (t, beta) per record used
};

// Log-log least squares with a studentized residual bootstrap: residuals are
// leverage-corrected and centred, and the interval comes from the bootstrap
// distribution of (slope* - slope) / se*, which keeps coverage near nominal
// with a handful of points. The interval always contains the point estimate.
inline ExponentFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y, std::uint64_t seed = 1,
                                 int resamples = 2000) {
  if (x.size() != y.size()) throw DomainError("fit needs paired data");
  if (x.size() < 4) throw DomainError("exponent fit needs >= 4 points, got " + std::to_string(x.size()));
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("power-law fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  if (std::log10(*hi_it / *lo_it) < 1.5) {
    throw DomainError("predictor spans " + std::to_string(std::log10(*hi_it / *lo_it)) + " decades; need >= 1.5");
  }
  const std::size_t n = lx.size();
  const double xbar = mean(lx);
  double sxx = 0.0;
  for (double v : lx) sxx += (v - xbar) * (v - xbar);
  const auto slope_se = [&](const std::vector<double>& yy, const LineFit& fit) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = yy[i] - fit.intercept - fit.slope * lx[i];
      ssr += e * e;
    }
    return std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  };
  ExponentFit f;
  const auto line = least_squares(lx, ly);
  f.slope = line.slope;
  f.intercept = line.intercept;
  const double se = slope_se(ly, line);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 1.0 / static_cast<double>(n) + (lx[i] - xbar) * (lx[i] - xbar) / sxx;
    resid[i] = (ly[i] - line.intercept - line.slope * lx[i]) / std::sqrt(1.0 - h);
  }
  const double rbar = mean(resid);
  for (double& r : resid) r -= rbar;
  if (!(se > 0.0)) {
    f.ci_lo = f.ci_hi = f.slope;
    return f;
  }
  Engine rng = make_engine(seed, 0xb007);
  std::vector<double> tstat;
  std::vector<double> by(n);
  for (int b = 0; b < resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      by[i] = line.intercept + line.slope * lx[i] + resid[static_cast<std::size_t>(uniform_index(rng, n))];
    }
    const auto fit = least_squares(lx, by);
    const double s = slope_se(by, fit);
    if (s > 0.0) tstat.push_back((fit.slope - line.slope) / s);
  }
  if (tstat.empty()) throw DomainError("bootstrap produced no usable resamples");
  f.ci_lo = std::min(f.slope - quantile(tstat, 0.975) * se, f.slope);
  f.ci_hi = std::max(f.slope - quantile(tstat, 0.025) * se, f.slope);
  return f;
}

// Exponent of an observable's mean against t/beta across records.
inline ExponentFit fit_exponent(const std::vector<RunRecord>& records, const std::string& observable, std::uint64_t seed = 1) {
  std::vector<double> x, y;
  std::vector<std::pair<double, double>> grid;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    x.push_back(r.config.horizon / r.config.beta);
    y.push_back(r.mean(observable));
    grid.emplace_back(r.config.horizon, r.config.beta);
  }
  auto f = fit_power_law(x, y, seed);
  f.grid = std::move(grid);
  return f;
}

// beta * (i/m)^power for i = 0..m: dense near 0 where E[H] moves fastest.
inline std::vector<double> thermo_grid(double beta, int m, double power = 2.0) {
  if (m < 2 || m % 2) throw ConfigError("thermodynamic grid needs an even number of intervals >= 2");
  std::vector<double> g;
  for (int i = 0; i <= m; ++i) g.push_back(beta * std::pow(static_cast<double>(i) / m, power));
  return g;
}

struct ThermoResult {
  double logZ = 0.0;
  double se = 0.0;
  double quadrature_error = 0.0;  // |T_h - T_2h| / 3
  std::vector<double> betas;
  std::vector<double> mean_H;
  std::vector<double> se_H;
};

// ln Z(beta) = -int_0^beta E_b[H] db by the trapezoid rule on the given
// means, with the quadrature error estimated by comparison against the rule
// on every other node.
inline ThermoResult thermo_integrate(const std::vector<double>& betas, const std::vector<double>& mean_H, const std::vector<double>& se_H) {
  const std::size_t n = betas.size();
  if (n < 3 || (n - 1) % 2) throw ConfigError("thermodynamic grid needs an even number of intervals >= 2");
  if (betas.front() != 0.0) throw ConfigError("thermodynamic grid must start at beta = 0");
  ThermoResult r;
  r.betas = betas;
  r.mean_H = mean_H;
  r.se_H = se_H;
  std::vector<double> w(n, 0.0), wc(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = betas[i + 1] - betas[i];
    if (!(h >= 0.0)) throw ConfigError("thermodynamic grid must be nondecreasing");
    w[i] += h / 2;
    w[i + 1] += h / 2;
  }
  for (std::size_t i = 0; i + 2 < n; i += 2) {
    const double h = betas[i + 2] - betas[i];
    wc[i] += h / 2;
    wc[i + 2] += h / 2;
  }
  CompensatedSum full, coarse;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    full += w[i] * mean_H[i];
    coarse += wc[i] * mean_H[i];
    var += w[i] * w[i] * se_H[i] * se_H[i];
  }
  r.logZ = -full.value();
  r.se = std::sqrt(var);
  r.quadrature_error = std::abs(full.value() - coarse.value()) / 3.0;
  return r;
}

// Thermodynamic-integration estimate of ln Z with one chain per grid point.
// Refuses when the quadrature error estimate exceeds `tolerance`.
template <int D>
ThermoResult estimate_logZ_thermo(const GibbsConfig& config, const std::vector<double>& betas, const MoveMix& mix,
                                  const Schedule& schedule, std::uint64_t seed, double tolerance = INFINITY, int threads = 1,
                                  const ChainOptions& opt = {}) {
  if (config.variant != HamiltonianVariant::BoundarySize) throw ConfigError("thermodynamic integration uses the boundary Hamiltonian");
  std::vector<GibbsConfig> grid;
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    GibbsConfig c = config;
    c.beta = betas[i];
    grid.push_back(c);
    seeds.push_back(stream_seed(seed, i));
  }
  const auto recs = sweep<D>(grid, mix, schedule, seeds, threads, false, opt);
  std::vector<double> m, s;
  for (const auto& r : recs) {
    if (!r.ok()) throw Error("thermodynamic point at beta=" + std::to_string(r.config.beta) + " failed: " + r.error);
    m.push_back(r.summary.at("H").mean);
    s.push_back(r.summary.at("H").se);
  }
  auto res = thermo_integrate(betas, m, s);
  if (res.quadrature_error > tolerance) {
    throw DomainError("trapezoid error estimate " + std::to_string(res.quadrature_error) + " exceeds tolerance " +
                      std::to_string(tolerance) + "; refine to " + std::to_string(2 * (betas.size() - 1)) + " intervals");
  }
  return res;
}

// Lower-bound shape -c t^{1-2/(d+1)} beta^{2/(d+1)} - (d/2) ln(t/beta).
inline double logZ_bound_shape(double c, double t, double beta, int d) {
  return -c * std::pow(t, 1.0 - 2.0 / (d + 1)) * std::pow(beta, 2.0 / (d + 1)) - 0.5 * d * std::log(t / beta);
}

// Constant c that makes the shape equal to a measured ln Z.
inline double calibrate_logZ_constant(double logZ, double t, double beta, int d) {
  return (-logZ - 0.5 * d * std::log(t / beta)) / (std::pow(t, 1.0 - 2.0 / (d + 1)) * std::pow(beta, 2.0 / (d + 1)));
}

struct ExtentTailRow {
  double t = 0.0;
  double beta = 0.0;
  std::int64_t n = 0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
  double probability = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  // log of the walk-confinement factor n exp(-pi^2 t / (4 n^2)); the Gibbs
  // bound adds c t^{1-2/(d+1)} beta^{2/(d+1)} with an unknown constant.
  double log_confinement = 0.0;
};

// Empirical P(min extent <= n) per record.
inline std::vector<ExtentTailRow> extent_tail_check(const std::vector<RunRecord>& records, std::int64_t n) {
  std::vector<ExtentTailRow> out;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    ExtentTailRow row;
    row.t = r.config.horizon;
    row.beta = r.config.beta;
    row.n = n;
    for (double e : r.min_extent) row.hits += e <= static_cast<double>(n) ? 1 : 0;
    row.samples = r.min_extent.size();
    row.probability = row.samples ? static_cast<double>(row.hits) / static_cast<double>(row.samples) : 0.0;
    std::tie(row.wilson_lo, row.wilson_hi) = wilson_interval(row.hits, row.samples);
    row.log_confinement = n > 0 ? std::log(static_cast<double>(n)) - std::numbers::pi * std::numbers::pi * row.t / (4.0 * static_cast<double>(n * n))
                                : -INFINITY;
    out.push_back(row);
  }
  return out;
}

}  // namespace wulff
