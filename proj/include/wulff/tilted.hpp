#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wulff/error.hpp"
#include "wulff/lattice.hpp"
#include "wulff/rng.hpp"
#include "wulff/stats.hpp"

namespace wulff {

enum class ProfileKind { Smoothed, Flat };

// Profile pi on the cube S = [-L, L]^D. A site z sits at level
// r(z) = L - |z|_inf (distance to the outer face); pi(z) = mu_{r(z)}. The
// outer face r = 0 carries no mass, so the chain lives on |z|_inf <= L-1.
//
//   mu_r = C r / (L^{D+1} l(r)^2)                 r <= L/2
//   mu_r = mu_{L/2} + C (r - L/2)^2 / L^{D+2}     r >  L/2
//
// with l(r) = max(log r, floor) and C fixing total mass 1.
template <int D>
struct TiltedProfile {
  int L = 0;
  double log_floor = 2.0;
  ProfileKind kind = ProfileKind::Smoothed;
  std::vector<double> mu;              // index r = 0..L, mu[0] = 0
  std::vector<std::int64_t> shell;     // |S_r|, r = 0..L
  double C = 1.0;

  int side() const { return 2 * L - 1; }
  std::int64_t support_size() const {
    std::int64_t n = 1;
    for (int a = 0; a < D; ++a) n *= side();
    return n;
  }

  int level(const Site<D>& z) const { return L - static_cast<int>(sup_norm(z)); }
  bool in_support(const Site<D>& z) const { return sup_norm(z) <= L - 1; }
  double pi(const Site<D>& z) const {
    const int r = level(z);
    return r >= 1 ? mu[static_cast<std::size_t>(r)] : 0.0;
  }

  std::int64_t index(const Site<D>& z) const {
    std::int64_t i = 0;
    std::int64_t stride = 1;
    for (int a = 0; a < D; ++a) {
      i += (z[a] + L - 1) * stride;
      stride *= side();
    }
    return i;
  }

  Site<D> site(std::int64_t i) const {
    Site<D> z{};
    for (int a = 0; a < D; ++a) {
      z[a] = static_cast<std::int32_t>(i % side()) - (L - 1);
      i /= side();
    }
    return z;
  }

  // pi(S_r) = |S_r| mu_r.
  double level_mass(int r) const { return static_cast<double>(shell[static_cast<std::size_t>(r)]) * mu[static_cast<std::size_t>(r)]; }

  bool monotone() const {
    for (int r = 2; r <= L; ++r) {
      if (mu[static_cast<std::size_t>(r)] < mu[static_cast<std::size_t>(r - 1)]) return false;
    }
    return true;
  }
};

// Number of sites at sup-distance exactly m from the centre.
inline std::int64_t cube_shell_count(int dim, int m) {
  if (m == 0) return 1;
  std::int64_t outer = 1, inner = 1;
  for (int a = 0; a < dim; ++a) {
    outer *= 2 * m + 1;
    inner *= 2 * m - 1;
  }
  return outer - inner;
}

template <int D>
TiltedProfile<D> build_profile(int L, double log_floor = 2.0, ProfileKind kind = ProfileKind::Smoothed) {
  if (L < 4) throw ConfigError("profile needs L >= 4");
  if (!(log_floor > 0.0)) throw ConfigError("log floor must be positive");
  if (std::pow(2.0 * L - 1, D) > 5e7) throw ResourceError("profile support too large");
  TiltedProfile<D> p;
  p.L = L;
  p.log_floor = log_floor;
  p.kind = kind;
  p.mu.assign(static_cast<std::size_t>(L) + 1, 0.0);
  p.shell.assign(static_cast<std::size_t>(L) + 1, 0);
  const double Ld = static_cast<double>(L);
  auto ell = [&](double r) { return std::max(std::log(r), log_floor); };
  const double a = Ld / 2.0;
  const double mu_a = a / (std::pow(Ld, D + 1) * ell(a) * ell(a));
  for (int r = 0; r <= L; ++r) {
    p.shell[static_cast<std::size_t>(r)] = cube_shell_count(D, L - r);
    if (r == 0) continue;
    double m = 1.0;
    if (kind == ProfileKind::Smoothed) {
      const double rd = r;
      m = rd <= a ? rd / (std::pow(Ld, D + 1) * ell(rd) * ell(rd)) : mu_a + (rd - a) * (rd - a) / std::pow(Ld, D + 2);
    }
    p.mu[static_cast<std::size_t>(r)] = m;
  }
  CompensatedSum total;
  for (int r = 1; r <= L; ++r) total += static_cast<double>(p.shell[static_cast<std::size_t>(r)]) * p.mu[static_cast<std::size_t>(r)];
  p.C = 1.0 / total.value();
  for (auto& m : p.mu) m *= p.C;
  return p;
}

// Neighbour table of the support with tilted rates Q(x,y) = sqrt(pi(y)/pi(x)).
template <int D>
struct TiltedGraph {
  const TiltedProfile<D>* profile = nullptr;
  std::int64_t n = 0;
  std::vector<std::int64_t> nbr;  // n * 2D, -1 outside the support
  std::vector<double> rate;       // n * 2D
  std::vector<double> q;          // total exit rate per site

  explicit TiltedGraph(const TiltedProfile<D>& p) : profile(&p), n(p.support_size()) {
    nbr.assign(static_cast<std::size_t>(n * 2 * D), -1);
    rate.assign(static_cast<std::size_t>(n * 2 * D), 0.0);
    q.assign(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      const Site<D> x = p.site(i);
      const double px = p.pi(x);
      double total = 0.0;
      for (int dir = 0; dir < 2 * D; ++dir) {
        const Site<D> y = x + unit_step<D>(dir);
        if (!p.in_support(y)) continue;
        const auto k = static_cast<std::size_t>(i * 2 * D + dir);
        nbr[k] = p.index(y);
        rate[k] = std::sqrt(p.pi(y) / px);
        total += rate[k];
      }
      q[static_cast<std::size_t>(i)] = total;
    }
  }

  std::int64_t neighbour(std::int64_t i, int dir) const { return nbr[static_cast<std::size_t>(i * 2 * D + dir)]; }
  double rate_to(std::int64_t i, int dir) const { return rate[static_cast<std::size_t>(i * 2 * D + dir)]; }
};

struct GeneratorResiduals {
  double detailed_balance = 0.0;  // max |pi(x)Q(x,y) - pi(y)Q(y,x)|
  double stationarity = 0.0;      // max |(pi Q)(y)|
  double mass = 0.0;              // |sum pi - 1|
};

template <int D>
GeneratorResiduals generator_residuals(const TiltedProfile<D>& p) {
  const TiltedGraph<D> g(p);
  GeneratorResiduals res;
  std::vector<CompensatedSum> inflow(static_cast<std::size_t>(g.n));
  CompensatedSum mass;
  for (std::int64_t i = 0; i < g.n; ++i) {
    const double px = p.pi(p.site(i));
    mass += px;
    for (int dir = 0; dir < 2 * D; ++dir) {
      const std::int64_t j = g.neighbour(i, dir);
      if (j < 0) continue;
      const double py = p.pi(p.site(j));
      const double back = g.rate_to(j, dir ^ 1);
      res.detailed_balance = std::max(res.detailed_balance, std::abs(px * g.rate_to(i, dir) - py * back));
      inflow[static_cast<std::size_t>(j)] += px * g.rate_to(i, dir);
    }
  }
  for (std::int64_t i = 0; i < g.n; ++i) {
    const double px = p.pi(p.site(i));
    res.stationarity = std::max(res.stationarity, std::abs(inflow[static_cast<std::size_t>(i)].value() - px * g.q[static_cast<std::size_t>(i)]));
  }
  res.mass = std::abs(mass.value() - 1.0);
  return res;
}

struct LevelKernel {
  double p_up = 0.0;
  double p_down = 0.0;
};

// Jump chain of the level coordinate. Rows r = 1 and r = L use mu_0 := mu_1
// and mu_{L+1} := mu_L.
template <int D>
double level_mu_ext(const TiltedProfile<D>& p, int r) {
  if (r <= 0) return p.mu[1];
  if (r > p.L) return p.mu[static_cast<std::size_t>(p.L)];
  return p.mu[static_cast<std::size_t>(r)];
}

template <int D>
LevelKernel level_chain_kernel(const TiltedProfile<D>& p, int r) {
  if (r < 1 || r > p.L) throw DomainError("level " + std::to_string(r) + " outside 1.." + std::to_string(p.L));
  const double up = std::sqrt(level_mu_ext(p, r + 1));
  const double down = std::sqrt(level_mu_ext(p, r - 1));
  return {up / (up + down), down / (up + down)};
}

// Reversible weight of the level chain.
template <int D>
double level_weight(const TiltedProfile<D>& p, int r) {
  return std::sqrt(level_mu_ext(p, r)) * (std::sqrt(level_mu_ext(p, r - 1)) + std::sqrt(level_mu_ext(p, r + 1)));
}

// Canonical-path congestion
//   B = max_e (1/Q(e)) sum_{(x,y): e in gamma_xy} |gamma_xy| pi(x) pi(y),
// Q(e) = pi(x)Q(x,y) = sqrt(pi(x)pi(y)), over ordered pairs with the path
// that fixes coordinate 0 first, then 1, and so on. Loads are accumulated
// with per-axis difference arrays indexed by the lower endpoint of each edge.
template <int D>
double canonical_path_bound(const TiltedProfile<D>& p) {
  const std::int64_t n = p.support_size();
  if constexpr (D == 2) {
    if (p.L > 64) throw ResourceError("canonical path bound supports L <= 64 in d=2");
  } else {
    if (static_cast<double>(n) * static_cast<double>(n) > 3e9) throw ResourceError("canonical path bound: support too large");
  }
  const int m = p.side();
  std::vector<std::int64_t> stride(D);
  std::int64_t s = 1;
  for (int a = 0; a < D; ++a) {
    stride[static_cast<std::size_t>(a)] = s;
    s *= m;
  }
  std::vector<double> pis(static_cast<std::size_t>(n));
  std::vector<std::array<int, D>> coord(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const Site<D> z = p.site(i);
    pis[static_cast<std::size_t>(i)] = p.pi(z);
    for (int a = 0; a < D; ++a) coord[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] = z[a] + p.L - 1;
  }
  std::vector<std::vector<double>> diff(D, std::vector<double>(static_cast<std::size_t>(n) + 1, 0.0));
  for (std::int64_t x = 0; x < n; ++x) {
    const auto& cx = coord[static_cast<std::size_t>(x)];
    const double px = pis[static_cast<std::size_t>(x)];
    for (std::int64_t y = 0; y < n; ++y) {
      if (x == y) continue;
      const auto& cy = coord[static_cast<std::size_t>(y)];
      std::int64_t len = 0;
      for (int a = 0; a < D; ++a) len += std::abs(cx[static_cast<std::size_t>(a)] - cy[static_cast<std::size_t>(a)]);
      const double w = static_cast<double>(len) * px * pis[static_cast<std::size_t>(y)];
      // Position at the start of the axis-a leg: coordinates < a from y, >= a from x.
      std::int64_t base = x;
      for (int a = 0; a < D; ++a) {
        const auto k = static_cast<std::size_t>(a);
        const int from = cx[k];
        const int to = cy[k];
        if (from != to) {
          const int lo = std::min(from, to);
          const int hi = std::max(from, to);
          const std::int64_t line = base - static_cast<std::int64_t>(from) * stride[k];
          diff[k][static_cast<std::size_t>(line + lo * stride[k])] += w;
          diff[k][static_cast<std::size_t>(line + hi * stride[k])] -= w;
        }
        base += static_cast<std::int64_t>(to - from) * stride[k];
      }
    }
  }
  double B = 0.0;
  for (int a = 0; a < D; ++a) {
    const auto k = static_cast<std::size_t>(a);
    std::vector<double> load(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      const int c = coord[static_cast<std::size_t>(i)][k];
      const double prev = c > 0 ? load[static_cast<std::size_t>(i - stride[k])] : 0.0;
      load[static_cast<std::size_t>(i)] = prev + diff[k][static_cast<std::size_t>(i)];
    }
    for (std::int64_t i = 0; i < n; ++i) {
      if (coord[static_cast<std::size_t>(i)][k] + 1 >= m) continue;
      const std::int64_t j = i + stride[k];
      const double qe = std::sqrt(pis[static_cast<std::size_t>(i)] * pis[static_cast<std::size_t>(j)]);
      B = std::max(B, load[static_cast<std::size_t>(i)] / qe);
    }
  }
  return B;
}

// Symmetrised generator Pi^{1/2} Q Pi^{-1/2}: unit off-diagonal entries on
// support edges and -q(x) on the diagonal.
template <int D>
Eigen::MatrixXd symmetrized_generator(const TiltedProfile<D>& p) {
  const TiltedGraph<D> g(p);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(g.n, g.n);
  for (std::int64_t i = 0; i < g.n; ++i) {
    S(i, i) = -g.q[static_cast<std::size_t>(i)];
    for (int dir = 0; dir < 2 * D; ++dir) {
      const std::int64_t j = g.neighbour(i, dir);
      if (j >= 0) S(i, j) = std::sqrt(p.pi(p.site(i))) * g.rate_to(i, dir) / std::sqrt(p.pi(p.site(j)));
    }
  }
  return S;
}

// Smallest nonzero eigenvalue of -Q via a dense symmetric eigensolve.
template <int D>
double spectral_gap(const TiltedProfile<D>& p) {
  if (p.support_size() > 2500) throw ResourceError("spectral gap: support above 2500 sites (L <= 24 in d=2)");
  const Eigen::MatrixXd S = symmetrized_generator<D>(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver did not converge on " + std::to_string(S.rows()) + " sites");
  const auto& ev = es.eigenvalues();
  if (ev.size() < 2) throw NumericalError("support has a single site");
  if (std::abs(ev(0)) > 1e-8 * std::max(1.0, ev(ev.size() - 1))) {
    throw NumericalError("ground eigenvalue " + std::to_string(ev(0)) + " is not zero");
  }
  return ev(1);
}

// Gap of the flat profile: the cube of side 2L-1 with unit rates.
inline double flat_gap(int L) { return 2.0 * (1.0 - std::cos(std::numbers::pi / (2.0 * L - 1.0))); }

// Continuous-time tilted walker on the support.
template <int D>
class TiltedWalker {
 public:
  TiltedWalker(const TiltedGraph<D>& g, std::int64_t start, Engine& rng) : g_(&g), rng_(&rng), at_(start) {}

  std::int64_t at() const { return at_; }

  // Holds, then jumps; returns (hold, dir).
  std::pair<double, int> advance() {
    const double qx = g_->q[static_cast<std::size_t>(at_)];
    const double hold = exponential(*rng_, qx);
    const int dir = jump_direction();
    at_ = g_->neighbour(at_, dir);
    return {hold, dir};
  }

  // Jump chain step only.
  int jump() {
    const int dir = jump_direction();
    at_ = g_->neighbour(at_, dir);
    return dir;
  }

 private:
  int jump_direction() {
    const double qx = g_->q[static_cast<std::size_t>(at_)];
    double u = uniform01(*rng_) * qx;
    int last = -1;
    for (int dir = 0; dir < 2 * D; ++dir) {
      const double r = g_->rate_to(at_, dir);
      if (r <= 0.0) continue;
      last = dir;
      if (u < r) return dir;
      u -= r;
    }
    return last;
  }

  const TiltedGraph<D>* g_;
  Engine* rng_;
  std::int64_t at_;
};

template <int D>
JumpPath<D> simulate_tilted(const TiltedGraph<D>& g, double t, Engine& rng, const Site<D>& start = Site<D>::origin()) {
  const auto& p = *g.profile;
  if (!p.in_support(start)) throw DomainError("start site outside the support");
  if (!(t >= 0.0)) throw ConfigError("horizon must be >= 0");
  JumpPath<D> path;
  path.start = start;
  path.horizon = t;
  TiltedWalker<D> w(g, p.index(start), rng);
  double elapsed = 0.0;
  for (;;) {
    const auto [hold, dir] = w.advance();
    if (elapsed + hold > t) break;
    elapsed += hold;
    path.events.push_back({hold, dir});
  }
  return path;
}

template <int D>
JumpPath<D> simulate_tilted(const TiltedProfile<D>& p, double t, std::uint64_t seed, const Site<D>& start = Site<D>::origin()) {
  const TiltedGraph<D> g(p);
  Engine rng = make_engine(seed);
  return simulate_tilted<D>(g, t, rng, start);
}

}  // namespace wulff
