#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/gibbs.hpp"
#include "wulff/grid.hpp"
#include "wulff/lattice.hpp"
#include "wulff/stats.hpp"

namespace wulff {

inline constexpr int kMaxOracleSteps = 13;
inline constexpr double kMaxOracleLeaves = 1.4e8;

// Joint statistics of one skeleton that the oracle tabulates.
struct PathKey {
  std::int64_t H = 0;
  std::int64_t diam2 = 0;
  std::int64_t volume = 0;
  std::vector<std::int64_t> extents;

  friend auto operator<=>(const PathKey&, const PathKey&) = default;
};

namespace detail {

// Packs (H, diam^2, |R|, extents) into 64 bits; valid for n <= 13, D <= 5.
inline std::uint64_t pack_key(std::int64_t h, std::int64_t d2, std::int64_t vol, const std::int64_t* ext, int dim) {
  std::uint64_t k = static_cast<std::uint64_t>(h) | static_cast<std::uint64_t>(d2) << 10 | static_cast<std::uint64_t>(vol) << 22;
  for (int i = 0; i < dim; ++i) k |= static_cast<std::uint64_t>(ext[i]) << (30 + 6 * i);
  return k;
}

inline PathKey unpack_key(std::uint64_t k, int dim) {
  PathKey p;
  p.H = static_cast<std::int64_t>(k & 0x3ff);
  p.diam2 = static_cast<std::int64_t>((k >> 10) & 0xfff);
  p.volume = static_cast<std::int64_t>((k >> 22) & 0xff);
  for (int i = 0; i < dim; ++i) p.extents.push_back(static_cast<std::int64_t>((k >> (30 + 6 * i)) & 0x3f));
  return p;
}

}  // namespace detail

// Exact counts of skeletons per joint key.
using PathHistogram = std::map<PathKey, std::uint64_t>;

inline PathHistogram to_histogram(const std::unordered_map<std::uint64_t, std::uint64_t>& packed, int dim) {
  PathHistogram h;
  for (const auto& [k, c] : packed) h[detail::unpack_key(k, dim)] += c;
  return h;
}

inline void check_oracle_budget(int dim, int steps) {
  if (steps < 0) throw ConfigError("step count must be >= 0");
  if (dim < 1 || dim > 5) throw ConfigError("oracle supports 1 <= d <= 5");
  const double leaves = std::pow(2.0 * dim, steps);
  if (steps > kMaxOracleSteps || leaves > kMaxOracleLeaves) {
    throw ResourceError("exhaustive enumeration of (2d)^n = " + std::to_string(leaves) +
                        " skeletons exceeds the budget (n <= 13 and <= 1.4e8 leaves)");
  }
}

// Depth-first enumeration of all (2D)^n skeletons from the origin with an
// incremental range tracker, running squared diameter and extents; nothing
// but the current branch is stored. `prefix` fixes the first steps (for
// sharding). `per_depth_H`, when non-null, receives counts of H at every
// depth 0..n of the tree (nodes extending the prefix only).
template <int D>
std::unordered_map<std::uint64_t, std::uint64_t> enumerate_iterative(int n, const std::vector<int>& prefix = {},
                                                                     std::vector<std::vector<std::uint64_t>>* per_depth_H = nullptr) {
  check_oracle_budget(D, n);
  const auto N = static_cast<std::size_t>(n);
  std::vector<Site<D>> pos(N + 1);
  std::vector<std::int64_t> d2(N + 1, 0);
  std::vector<Site<D>> lo(N + 1), hi(N + 1);
  std::vector<int> next(N + 1, 0);
  RangeTracker<D> range;
  std::unordered_map<std::uint64_t, std::uint64_t> hist;
  if (per_depth_H) per_depth_H->assign(N + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(2 * D * (n + 1) + 2), 0));

  auto push = [&](std::size_t k, int dir) {
    pos[k + 1] = pos[k] + unit_step<D>(dir);
    range.add_visit(pos[k + 1]);
    std::int64_t best = d2[k];
    for (std::size_t i = 0; i <= k; ++i) best = std::max(best, squared_distance(pos[i], pos[k + 1]));
    d2[k + 1] = best;
    lo[k + 1] = lo[k];
    hi[k + 1] = hi[k];
    for (int a = 0; a < D; ++a) {
      lo[k + 1][a] = std::min(lo[k + 1][a], pos[k + 1][a]);
      hi[k + 1][a] = std::max(hi[k + 1][a], pos[k + 1][a]);
    }
  };
  auto arrive = [&](std::size_t k) {
    if (per_depth_H) ++(*per_depth_H)[k][static_cast<std::size_t>(range.boundary_size())];
    if (k == N) {
      std::int64_t ext[D];
      for (int a = 0; a < D; ++a) ext[a] = static_cast<std::int64_t>(hi[k][a]) - lo[k][a];
      ++hist[detail::pack_key(range.boundary_size(), d2[k], range.range_size(), ext, D)];
      next[k] = 2 * D;
    } else {
      next[k] = 0;
    }
  };

  range.add_visit(pos[0]);
  const std::size_t base = std::min(prefix.size(), N);
  for (std::size_t k = 0; k < base; ++k) push(k, prefix[k]);
  std::size_t k = base;
  arrive(k);
  for (;;) {
    if (next[k] < 2 * D) {
      push(k, next[k]++);
      ++k;
      arrive(k);
    } else {
      if (k == base) break;
      range.remove_visit(pos[k]);
      --k;
    }
  }
  return hist;
}

namespace detail {

template <int D>
void recurse_paths(std::vector<Site<D>>& path, int remaining, std::unordered_map<std::uint64_t, std::uint64_t>& hist) {
  if (remaining == 0) {
    const auto range = normalize(SiteSet<D>(path.begin(), path.end()));
    const auto h = static_cast<std::int64_t>(inner_boundary<D>(range).size());
    std::int64_t d2 = 0;
    for (const auto& a : range) {
      for (const auto& b : range) d2 = std::max(d2, squared_distance(a, b));
    }
    const auto e = bounding_extents<D>(range);
    ++hist[pack_key(h, d2, static_cast<std::int64_t>(range.size()), e.data(), D)];
    return;
  }
  for (int dir = 0; dir < 2 * D; ++dir) {
    path.push_back(path.back() + unit_step<D>(dir));
    recurse_paths<D>(path, remaining - 1, hist);
    path.pop_back();
  }
}

}  // namespace detail

// Second, independent enumeration: plain recursion over step sequences with
// every leaf evaluated from scratch by the set-geometry routines.
template <int D>
std::unordered_map<std::uint64_t, std::uint64_t> enumerate_recursive(int n) {
  check_oracle_budget(D, n);
  std::vector<Site<D>> path{Site<D>::origin()};
  std::unordered_map<std::uint64_t, std::uint64_t> hist;
  detail::recurse_paths<D>(path, n, hist);
  return hist;
}

struct OracleResult {
  double Z = 1.0;
  double logZ = 0.0;
  std::map<std::string, double> expectations;
  double n_or_t = 0.0;
  GibbsConfig config;
  double tail_bound = 0.0;  // certified bound on the truncated mass (continuous only)
  std::int64_t min_H = 0;
  std::uint64_t paths = 0;
};

// Gibbs averages from an exact histogram over equally weighted skeletons.
inline OracleResult oracle_from_histogram(const PathHistogram& hist, const GibbsConfig& config, int steps) {
  if (hist.empty()) throw DomainError("empty histogram");
  OracleResult r;
  r.config = config;
  r.n_or_t = static_cast<double>(steps);
  std::int64_t hmin = hist.begin()->first.H;
  for (const auto& [k, c] : hist) hmin = std::min(hmin, k.H);
  r.min_H = hmin;
  CompensatedSum s, sh, sh2, sd, sd2, sv;
  std::vector<CompensatedSum> se(static_cast<std::size_t>(config.dim));
  std::uint64_t total = 0;
  for (const auto& [k, c] : hist) {
    const double w = static_cast<double>(c) * std::exp(-config.beta * static_cast<double>(k.H - hmin));
    total += c;
    s += w;
    sh += w * static_cast<double>(k.H);
    sh2 += w * static_cast<double>(k.H) * static_cast<double>(k.H);
    sd += w * std::sqrt(static_cast<double>(k.diam2));
    sd2 += w * static_cast<double>(k.diam2);
    sv += w * static_cast<double>(k.volume);
    for (std::size_t a = 0; a < se.size() && a < k.extents.size(); ++a) se[a] += w * static_cast<double>(k.extents[a]);
  }
  r.paths = total;
  const double S = s.value();
  r.logZ = -config.beta * static_cast<double>(hmin) + std::log(S) - std::log(static_cast<double>(total));
  r.Z = std::exp(r.logZ);
  r.expectations["H"] = sh.value() / S;
  r.expectations["H2"] = sh2.value() / S;
  r.expectations["diam"] = sd.value() / S;
  r.expectations["diam2"] = sd2.value() / S;
  r.expectations["volume"] = sv.value() / S;
  for (std::size_t a = 0; a < se.size(); ++a) r.expectations["ext" + std::to_string(a + 1)] = se[a].value() / S;
  return r;
}

// Exact discrete-skeleton partition function and Gibbs expectations. The
// tree is split into (2D)^l shards by the first l steps, run on `threads`
// worker threads and merged by exact integer addition.
template <int D>
OracleResult enumerate_Z_discrete(const GibbsConfig& config, int threads = 1) {
  config.validate();
  if (config.dim != D) throw ConfigError("dimension mismatch");
  if (config.ensemble != Ensemble::DiscreteSkeleton || config.variant != HamiltonianVariant::BoundarySize) {
    throw ConfigError("discrete oracle needs the discrete ensemble and the boundary Hamiltonian");
  }
  const int n = static_cast<int>(config.steps());
  check_oracle_budget(D, n);
  const int depth = std::min(n, 2);
  std::vector<std::vector<int>> shards{{}};
  for (int l = 0; l < depth; ++l) {
    std::vector<std::vector<int>> grown;
    for (const auto& p : shards) {
      for (int dir = 0; dir < 2 * D; ++dir) {
        auto q = p;
        q.push_back(dir);
        grown.push_back(std::move(q));
      }
    }
    shards = std::move(grown);
  }
  std::vector<std::unordered_map<std::uint64_t, std::uint64_t>> parts(shards.size());
  const auto nthreads = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(shards.size())));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < shards.size(); ++i) parts[i] = enumerate_iterative<D>(n, shards[i]);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nthreads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < shards.size(); i += nthreads) parts[i] = enumerate_iterative<D>(n, shards[i]);
      });
    }
    for (auto& t : pool) t.join();
  }
  std::unordered_map<std::uint64_t, std::uint64_t> merged;
  for (const auto& p : parts) {
    for (const auto& [k, c] : p) merged[k] += c;
  }
  return oracle_from_histogram(to_histogram(merged, D), config, n);
}

inline double poisson_pmf(double t, int k) {
  if (t == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-t + k * std::log(t) - std::lgamma(k + 1.0));
}

// Continuous-time Z(t, beta) = sum_k Poisson(t; k) (2d)^-k sum_{|w|=k} e^{-beta H(w)},
// truncated at k_max with the neglected Poisson tail (times the weight bound
// 1) reported as tail_bound. Expectations of H are taken under the truncated
// law.
template <int D>
OracleResult Z_continuous_smallt(const GibbsConfig& config, int k_max, double tolerance = 1e-6) {
  config.validate();
  if (config.dim != D) throw ConfigError("dimension mismatch");
  if (config.ensemble != Ensemble::ContinuousTime || config.variant != HamiltonianVariant::BoundarySize) {
    throw ConfigError("continuous oracle needs the continuous ensemble and the boundary Hamiltonian");
  }
  check_oracle_budget(D, k_max);
  const double t = config.horizon;
  CompensatedSum head;
  for (int k = 0; k <= k_max; ++k) head += poisson_pmf(t, k);
  const double tail = std::max(0.0, 1.0 - head.value());
  if (tail > tolerance) {
    throw ResourceError("Poisson tail " + std::to_string(tail) + " above tolerance at k_max = " + std::to_string(k_max) +
                        "; t is too large for the truncated oracle");
  }
  std::vector<std::vector<std::uint64_t>> per_depth;
  enumerate_iterative<D>(k_max, {}, &per_depth);
  CompensatedSum z, zh;
  for (int k = 0; k <= k_max; ++k) {
    const double pk = poisson_pmf(t, k) * std::pow(2.0 * D, -k);
    const auto& row = per_depth[static_cast<std::size_t>(k)];
    for (std::size_t h = 0; h < row.size(); ++h) {
      if (!row[h]) continue;
      const double w = pk * static_cast<double>(row[h]) * std::exp(-config.beta * static_cast<double>(h));
      z += w;
      zh += w * static_cast<double>(h);
    }
  }
  OracleResult r;
  r.config = config;
  r.n_or_t = t;
  r.Z = z.value();
  r.logZ = std::log(r.Z);
  r.tail_bound = tail;
  r.expectations["H"] = zh.value() / r.Z;
  r.min_H = 1;
  return r;
}

// P_x(T > t) for the continuous-time walk on Z with jump rate 1/2 to each
// neighbour, killed on leaving {1..m}. Uses the sine eigenbasis of the
// tridiagonal generator: eigenvalues 1 - cos(pi k/(m+1)).
inline double survival_on_segment(int m, int x, double t) {
  if (m < 1 || x < 1 || x > m) throw DomainError("need 1 <= x <= m");
  if (!(t >= 0.0)) throw DomainError("need t >= 0");
  if (t == 0.0) return 1.0;
  const double h = std::numbers::pi / (m + 1);
  CompensatedSum s;
  for (int k = 1; k <= m; ++k) {
    double mass = 0.0;
    for (int y = 1; y <= m; ++y) mass += std::sin(h * k * y);
    s += 2.0 / (m + 1) * std::sin(h * k * x) * mass * std::exp(-(1.0 - std::cos(h * k)) * t);
  }
  return std::clamp(s.value(), 0.0, 1.0);
}

inline double exit_prob_oracle(int J, int x, double t) {
  if (J > 200) throw DomainError("exit oracle supports J <= 200");
  return survival_on_segment(J, x, t);
}

// The closed-form bound J exp(-(1 - cos(pi/J)) t).
inline double exit_bound(int J, double t) {
  return J * std::exp(-(1.0 - std::cos(std::numbers::pi / J)) * t);
}

}  // namespace wulff
