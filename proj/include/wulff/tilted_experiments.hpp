#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/lattice.hpp"
#include "wulff/resistance.hpp"
#include "wulff/rng.hpp"
#include "wulff/stats.hpp"
#include "wulff/tilted.hpp"

namespace wulff {

// (Delta f / f)(x) with f = sqrt(pi) and Delta the lattice Laplacian over all
// 2D neighbours (f = 0 off the support).
template <int D>
double laplacian_ratio(const TiltedProfile<D>& p, const Site<D>& x) {
  const double fx = std::sqrt(p.pi(x));
  double s = 0.0;
  for (const auto& y : neighbors(x)) s += std::sqrt(p.pi(y)) - fx;
  return s / fx;
}

// Radon-Nikodym weight of the rate-1-per-neighbour walk against the tilted
// chain on F_t: (f(X_0)/f(X_t)) exp(sum_x (Delta f/f)(x) L(t,x)).
template <int D>
double rn_weight(const JumpPath<D>& path, const TiltedProfile<D>& p) {
  const auto pos = path.positions();
  for (const auto& x : pos) {
    if (!p.in_support(x)) throw DomainError("path leaves the support at " + to_string(x));
  }
  const auto field = occupation(path);
  double expo = 0.0;
  for (const auto& [x, t] : field.local_times()) expo += laplacian_ratio(p, x) * t;
  return std::sqrt(p.pi(path.start)) / std::sqrt(p.pi(path.end())) * std::exp(expo);
}

struct EscapeEstimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double p = 0.0;
  double se = 0.0;
  double predicted = 0.0;  // 1 / (w_y Reff)
  double reff = 0.0;
  double w_y = 0.0;
};

// Simulated Q_y[T_x < T_y^+] for the jump chain, next to the network value.
template <int D>
EscapeEstimate escape_experiment(const TiltedProfile<D>& p, const Site<D>& y, const Site<D>& x, std::uint64_t runs, std::uint64_t seed) {
  if (x == y) throw DomainError("escape needs distinct sites");
  const auto net = tilted_escape<D>(p, y, x);
  EscapeEstimate e;
  e.reff = net.reff;
  e.w_y = net.w_y;
  e.predicted = net.escape;
  const TiltedGraph<D> g(p);
  Engine rng = make_engine(seed);
  const std::int64_t iy = p.index(y), ix = p.index(x);
  for (std::uint64_t r = 0; r < runs; ++r) {
    TiltedWalker<D> w(g, iy, rng);
    for (;;) {
      w.jump();
      if (w.at() == ix) {
        ++e.successes;
        break;
      }
      if (w.at() == iy) break;
    }
  }
  e.trials = runs;
  e.p = static_cast<double>(e.successes) / static_cast<double>(runs);
  e.se = std::sqrt(std::max(e.p * (1 - e.p), 1.0 / static_cast<double>(runs)) / static_cast<double>(runs));
  return e;
}

// Event families for the change-of-measure check; each includes staying in
// the support up to time t.
template <int D>
struct PathEvent {
  std::string name;
  std::function<bool(const JumpPath<D>&, const TiltedProfile<D>&)> holds;
};

template <int D>
bool stays_in_support(const JumpPath<D>& path, const TiltedProfile<D>& p) {
  for (const auto& x : path.positions()) {
    if (!p.in_support(x)) return false;
  }
  return true;
}

template <int D>
std::vector<PathEvent<D>> standard_events() {
  std::vector<PathEvent<D>> ev;
  ev.push_back({"moves", [](const JumpPath<D>& w, const TiltedProfile<D>& p) {
                  return stays_in_support(w, p) && occupation(w).range_size() >= 2;
                }});
  ev.push_back({"returns", [](const JumpPath<D>& w, const TiltedProfile<D>& p) {
                  return stays_in_support(w, p) && w.end() == w.start;
                }});
  ev.push_back({"three-jumps", [](const JumpPath<D>& w, const TiltedProfile<D>& p) {
                  return stays_in_support(w, p) && w.num_jumps() >= 3;
                }});
  ev.push_back({"within-2", [](const JumpPath<D>& w, const TiltedProfile<D>& p) {
                  if (!stays_in_support(w, p)) return false;
                  for (const auto& x : w.positions()) {
                    if (sup_norm(x - w.start) > 2) return false;
                  }
                  return true;
                }});
  ev.push_back({"lingers", [](const JumpPath<D>& w, const TiltedProfile<D>& p) {
                  return stays_in_support(w, p) && occupation(w).local_time(w.start) >= w.horizon / 2;
                }});
  return ev;
}

struct MeasureComparison {
  std::string event;
  double tilted_mean = 0.0;  // E_Q[w 1_A]
  double tilted_se = 0.0;
  double direct_mean = 0.0;  // P(A)
  double direct_se = 0.0;
  double z = 0.0;            // difference over combined SE
};

// Two-sided check of the change of measure: weighted tilted-chain estimates
// against direct simulation of the walk with unit rate to each neighbour.
template <int D>
std::vector<MeasureComparison> change_of_measure_check(const TiltedProfile<D>& p, double t, std::uint64_t runs, std::uint64_t seed,
                                                       const Site<D>& start = Site<D>::origin(),
                                                       const std::vector<PathEvent<D>>& events = standard_events<D>()) {
  const TiltedGraph<D> g(p);
  Engine rq = make_engine(seed, 1);
  Engine rp = make_engine(seed, 2);
  const std::size_t k = events.size();
  std::vector<std::vector<double>> wq(k), wp(k);
  for (std::uint64_t r = 0; r < runs; ++r) {
    const auto path = simulate_tilted<D>(g, t, rq, start);
    const double w = rn_weight(path, p);
    for (std::size_t e = 0; e < k; ++e) wq[e].push_back(events[e].holds(path, p) ? w : 0.0);
    auto direct = simulate_ctrw<D>(t, rp, 2.0 * D);
    direct.start = start;
    for (std::size_t e = 0; e < k; ++e) wp[e].push_back(events[e].holds(direct, p) ? 1.0 : 0.0);
  }
  std::vector<MeasureComparison> out;
  for (std::size_t e = 0; e < k; ++e) {
    MeasureComparison c;
    c.event = events[e].name;
    c.tilted_mean = mean(wq[e]);
    c.tilted_se = std::sqrt(variance(wq[e]) / static_cast<double>(runs));
    c.direct_mean = mean(wp[e]);
    c.direct_se = std::sqrt(variance(wp[e]) / static_cast<double>(runs));
    const double comb = std::hypot(c.tilted_se, c.direct_se);
    c.z = comb > 0.0 ? (c.tilted_mean - c.direct_mean) / comb : 0.0;
    out.push_back(c);
  }
  return out;
}

struct HittingTail {
  std::vector<double> t_grid;
  std::vector<double> survival;
  std::vector<double> lo;
  std::vector<double> hi;
  double rate = 0.0;       // fitted exponential decay rate
  double reference = 0.0;  // pi(y) in d >= 3, pi(y)/log L in d = 2
  std::uint64_t runs = 0;
};

// Empirical P_x(T_y > t) on a grid, with a fitted exponential rate from
// least squares on log survival over grid points with >= 10 survivors.
template <int D>
HittingTail hitting_tail_experiment(const TiltedProfile<D>& p, const Site<D>& x, const Site<D>& y, const std::vector<double>& t_grid,
                                    std::uint64_t runs, std::uint64_t seed) {
  if (!p.in_support(y) || !p.in_support(x)) throw DomainError("hitting sites must lie in the support");
  if (t_grid.empty()) throw ConfigError("empty time grid");
  const TiltedGraph<D> g(p);
  Engine rng = make_engine(seed);
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  const std::int64_t iy = p.index(y);
  std::vector<double> hit(runs);
  for (std::uint64_t r = 0; r < runs; ++r) {
    TiltedWalker<D> w(g, p.index(x), rng);
    double clock = 0.0;
    double T = x == y ? 0.0 : std::numeric_limits<double>::infinity();
    while (!(T <= clock) && clock <= t_max) {
      const auto [hold, dir] = w.advance();
      clock += hold;
      if (w.at() == iy) T = clock;
    }
    hit[r] = T;
  }
  HittingTail h;
  h.t_grid = t_grid;
  h.runs = runs;
  std::vector<double> xs, ys;
  for (double t : t_grid) {
    std::uint64_t alive = 0;
    for (double T : hit) alive += T > t ? 1 : 0;
    const double s = static_cast<double>(alive) / static_cast<double>(runs);
    h.survival.push_back(s);
    const auto [lo, hi] = wilson_interval(alive, runs);
    h.lo.push_back(lo);
    h.hi.push_back(hi);
    if (alive >= 10 && t > 0.0) {
      xs.push_back(t);
      ys.push_back(std::log(s));
    }
  }
  if (xs.size() >= 2) h.rate = -least_squares(xs, ys).slope;
  h.reference = D == 2 ? p.pi(y) / std::log(static_cast<double>(p.L)) : p.pi(y);
  return h;
}

struct ConcentrationResult {
  double t = 0.0;
  std::vector<double> deltas;
  std::vector<double> deviation_probability;
  std::vector<double> deviation_se;
  double max_conservation_error = 0.0;  // max_run |sum_y L(t,y) - t|
};

template <int D>
ConcentrationResult local_time_concentration_experiment(const TiltedProfile<D>& p, const Site<D>& y, double t,
                                                        const std::vector<double>& deltas, std::uint64_t runs, std::uint64_t seed,
                                                        const Site<D>& start = Site<D>::origin(), double min_time_factor = 0.0) {
  const double L = p.L;
  if (t < min_time_factor * L * L * std::log(L)) throw ConfigError("t below the configured multiple of L^2 log L");
  const TiltedGraph<D> g(p);
  Engine rng = make_engine(seed);
  ConcentrationResult c;
  c.t = t;
  c.deltas = deltas;
  std::vector<std::uint64_t> count(deltas.size(), 0);
  const double target = p.pi(y) * t;
  const std::int64_t iy = p.index(y);
  for (std::uint64_t r = 0; r < runs; ++r) {
    TiltedWalker<D> w(g, p.index(start), rng);
    double clock = 0.0, ly = 0.0;
    CompensatedSum total;
    while (clock < t) {
      const std::int64_t here = w.at();
      const double hold = std::min(w.advance().first, t - clock);
      clock += hold;
      total += hold;
      if (here == iy) ly += hold;
    }
    c.max_conservation_error = std::max(c.max_conservation_error, std::abs(total.value() - t));
    for (std::size_t k = 0; k < deltas.size(); ++k) count[k] += std::abs(ly / target - 1.0) >= deltas[k] ? 1 : 0;
  }
  for (auto n : count) {
    const double q = static_cast<double>(n) / static_cast<double>(runs);
    c.deviation_probability.push_back(q);
    c.deviation_se.push_back(std::sqrt(q * (1 - q) / static_cast<double>(runs)));
  }
  return c;
}

// L = ceil((t/beta)^{1/(d+1)}).
inline int regime_box_size(double t, double beta, int d) {
  return static_cast<int>(std::ceil(std::pow(t / beta, 1.0 / (d + 1)) - 1e-9));
}

struct GoodEventResult {
  int L = 0;
  double t = 0.0;
  double beta = 0.0;
  double c_level = 0.0;     // C' in A_r = {L(t,S_r) < C' pi(S_r) t}
  double c_boundary = 0.0;  // C'' in B = {|dR_t| <= C'' L^{d-1}}
  std::uint64_t runs = 0;
  double freq_A = 0.0;
  double freq_B = 0.0;
  double freq_G = 0.0;
  std::vector<double> freq_A_r;  // index r = 1..L (entry 0 unused)
  double mean_boundary = 0.0;
  double mean_uncovered = 0.0;   // |support \ R_t|
};

template <int D>
GoodEventResult good_event_experiment(double t, double beta, std::uint64_t runs, std::uint64_t seed, double c_level = 10.0,
                                      double c_boundary = 10.0, double log_floor = 2.0) {
  GoodEventResult res;
  res.L = regime_box_size(t, beta, D);
  res.t = t;
  res.beta = beta;
  res.c_level = c_level;
  res.c_boundary = c_boundary;
  res.runs = runs;
  const auto p = build_profile<D>(res.L, log_floor);
  const TiltedGraph<D> g(p);
  Engine rng = make_engine(seed);
  const auto L = static_cast<std::size_t>(res.L);
  std::vector<std::uint64_t> a_r(L + 1, 0);
  std::uint64_t nA = 0, nB = 0, nG = 0;
  CompensatedSum sum_b, sum_u;
  std::vector<double> time(static_cast<std::size_t>(g.n), 0.0);
  std::vector<std::int64_t> touched;
  const double bound_b = c_boundary * std::pow(static_cast<double>(res.L), D - 1);
  for (std::uint64_t run = 0; run < runs; ++run) {
    for (auto i : touched) time[static_cast<std::size_t>(i)] = 0.0;
    touched.clear();
    TiltedWalker<D> w(g, p.index(Site<D>::origin()), rng);
    double clock = 0.0;
    std::vector<double> level_time(L + 1, 0.0);
    while (clock < t) {
      const std::int64_t here = w.at();
      const double hold = std::min(w.advance().first, t - clock);
      clock += hold;
      if (time[static_cast<std::size_t>(here)] == 0.0) touched.push_back(here);
      time[static_cast<std::size_t>(here)] += hold;
      level_time[static_cast<std::size_t>(p.level(p.site(here)))] += hold;
    }
    bool A = true;
    for (std::size_t r = 1; r <= L; ++r) {
      const bool ok = level_time[r] < c_level * p.level_mass(static_cast<int>(r)) * t;
      a_r[r] += ok ? 1 : 0;
      A = A && ok;
    }
    std::int64_t boundary = 0;
    for (auto i : touched) {
      for (int dir = 0; dir < 2 * D; ++dir) {
        const std::int64_t j = g.neighbour(i, dir);
        if (j < 0 || time[static_cast<std::size_t>(j)] == 0.0) {
          ++boundary;
          break;
        }
      }
    }
    const bool B = static_cast<double>(boundary) <= bound_b;
    nA += A;
    nB += B;
    nG += A && B;
    sum_b += static_cast<double>(boundary);
    sum_u += static_cast<double>(g.n - static_cast<std::int64_t>(touched.size()));
  }
  const double n = static_cast<double>(runs);
  res.freq_A = static_cast<double>(nA) / n;
  res.freq_B = static_cast<double>(nB) / n;
  res.freq_G = static_cast<double>(nG) / n;
  res.freq_A_r.assign(L + 1, 0.0);
  for (std::size_t r = 1; r <= L; ++r) res.freq_A_r[r] = static_cast<double>(a_r[r]) / n;
  res.mean_boundary = sum_b.value() / n;
  res.mean_uncovered = sum_u.value() / n;
  return res;
}

}  // namespace wulff
