#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "wulff/resistance.hpp"
#include "wulff/tilted.hpp"
#include "wulff/tilted_experiments.hpp"

using namespace wulff;

namespace {

// Congestion of the coordinate-by-coordinate paths, walking every path edge
// by edge.
template <int D>
double brute_canonical_path_bound(const TiltedProfile<D>& p) {
  std::map<std::pair<std::int64_t, std::int64_t>, double> load;
  const std::int64_t n = p.support_size();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Site<D> x = p.site(i);
      const Site<D> y = p.site(j);
      std::vector<std::pair<std::int64_t, std::int64_t>> edges;
      Site<D> z = x;
      for (int a = 0; a < D; ++a) {
        while (z[a] != y[a]) {
          Site<D> w = z;
          w[a] += y[a] > z[a] ? 1 : -1;
          const std::int64_t u = p.index(z), v = p.index(w);
          edges.emplace_back(std::min(u, v), std::max(u, v));
          z = w;
        }
      }
      const double mass = static_cast<double>(edges.size()) * p.pi(x) * p.pi(y);
      for (const auto& e : edges) load[e] += mass;
    }
  }
  double best = 0.0;
  for (const auto& [e, l] : load) best = std::max(best, l / std::sqrt(p.pi(p.site(e.first)) * p.pi(p.site(e.second))));
  return best;
}

}  // namespace

TEST(Profile, MassLevelsAndSupport) {
  for (int L : {4, 7, 16}) {
    const auto p = build_profile<2>(L);
    EXPECT_EQ(p.mu[0], 0.0);
    EXPECT_TRUE(p.monotone());
    double mass = 0.0;
    for (std::int64_t i = 0; i < p.support_size(); ++i) mass += p.pi(p.site(i));
    EXPECT_NEAR(mass, 1.0, 1e-12);
    std::int64_t total = 0;
    for (auto s : p.shell) total += s;
    EXPECT_EQ(total, (2 * L + 1) * (2 * L + 1));
    EXPECT_EQ(p.level(Site<2>::origin()), L);
    EXPECT_EQ(p.pi(Site<2>{{L, 0}}), 0.0);
    EXPECT_FALSE(p.in_support(Site<2>{{L, 0}}));
    EXPECT_TRUE(p.in_support(Site<2>{{L - 1, 1 - L}}));
    for (std::int64_t i = 0; i < p.support_size(); ++i) ASSERT_EQ(p.index(p.site(i)), i);
  }
  EXPECT_THROW(build_profile<2>(3), ConfigError);
  EXPECT_THROW(build_profile<2>(8, 0.0), ConfigError);
}

TEST(Profile, ShellCounts) {
  EXPECT_EQ(cube_shell_count(2, 0), 1);
  EXPECT_EQ(cube_shell_count(2, 1), 8);
  EXPECT_EQ(cube_shell_count(3, 1), 26);
  EXPECT_EQ(cube_shell_count(2, 3), 24);
}

TEST(Generator, DetailedBalanceAndStationarity) {
  for (int L : {4, 8, 16}) {
    const auto r = generator_residuals<2>(build_profile<2>(L));
    EXPECT_LE(r.detailed_balance, 1e-12);
    EXPECT_LE(r.stationarity, 1e-12);
    EXPECT_LE(r.mass, 1e-12);
  }
  const auto r3 = generator_residuals<3>(build_profile<3>(8));
  EXPECT_LE(r3.detailed_balance, 1e-12);
  EXPECT_LE(r3.stationarity, 1e-12);
}

TEST(Generator, FlatGapIsTheCosineFormula) {
  for (int L : {4, 6, 10}) {
    EXPECT_NEAR(spectral_gap<2>(build_profile<2>(L, 2.0, ProfileKind::Flat)), flat_gap(L), 1e-10);
  }
  EXPECT_NEAR(spectral_gap<3>(build_profile<3>(4, 2.0, ProfileKind::Flat)), flat_gap(4), 1e-10);
}

TEST(Generator, GapAboveInverseCongestion) {
  for (int L : {4, 6, 8}) {
    const auto p = build_profile<2>(L);
    const double B = canonical_path_bound<2>(p);
    EXPECT_NEAR(B, brute_canonical_path_bound<2>(p), 1e-10 * B) << L;
    EXPECT_GE(spectral_gap<2>(p), 1.0 / B);
  }
  const auto p3 = build_profile<3>(4);
  EXPECT_NEAR(canonical_path_bound<3>(p3), brute_canonical_path_bound<3>(p3), 1e-10 * canonical_path_bound<3>(p3));
  EXPECT_THROW(spectral_gap<2>(build_profile<2>(30)), ResourceError);
}

TEST(LevelChain, KernelIsReversible) {
  const auto p = build_profile<2>(12);
  for (int r = 1; r <= p.L; ++r) {
    const auto k = level_chain_kernel<2>(p, r);
    EXPECT_NEAR(k.p_up + k.p_down, 1.0, 1e-15);
    if (r < p.L) {
      const auto k1 = level_chain_kernel<2>(p, r + 1);
      EXPECT_NEAR(level_weight<2>(p, r) * k.p_up, level_weight<2>(p, r + 1) * k1.p_down, 1e-14);
    }
  }
  EXPECT_THROW(level_chain_kernel<2>(p, 0), DomainError);
}

TEST(Resistance, SeriesParallelAndBridge) {
  Network series;
  series.nodes = 3;
  series.add_edge(0, 1, 1.0);
  series.add_edge(1, 2, 2.0);
  EXPECT_NEAR(effective_resistance(series, 0, 2).reff, 1.5, 1e-9);

  Network parallel;
  parallel.nodes = 2;
  parallel.add_edge(0, 1, 1.0);
  parallel.add_edge(0, 1, 3.0);
  const auto r = effective_resistance(parallel, 0, 1);
  EXPECT_NEAR(r.reff, 0.25, 1e-9);
  EXPECT_NEAR(r.w_y, 4.0, 1e-15);
  EXPECT_NEAR(r.escape, 1.0, 1e-9);

  Network bridge;
  bridge.nodes = 4;
  bridge.add_edge(0, 1, 1.0);
  bridge.add_edge(0, 2, 1.0);
  bridge.add_edge(1, 3, 1.0);
  bridge.add_edge(2, 3, 1.0);
  bridge.add_edge(1, 2, 5.0);
  EXPECT_NEAR(effective_resistance(bridge, 0, 3).reff, 1.0, 1e-9);

  Network split;
  split.nodes = 3;
  split.add_edge(0, 1, 1.0);
  EXPECT_FALSE(effective_resistance(split, 0, 2).connected);
}

TEST(Resistance, EscapeSimulationMatchesNetwork) {
  const auto p = build_profile<2>(5);
  const auto e = escape_experiment<2>(p, Site<2>::origin(), Site<2>{{3, -2}}, 60000, 9);
  EXPECT_NEAR(e.p, e.predicted, 4 * e.se);
  EXPECT_THROW(escape_experiment<2>(p, Site<2>::origin(), Site<2>::origin(), 10, 1), DomainError);
}

TEST(ChangeOfMeasure, WeightOfAStillPath) {
  const auto p = build_profile<2>(6);
  JumpPath<2> still;
  still.horizon = 1.3;
  EXPECT_NEAR(rn_weight(still, p), std::exp(laplacian_ratio(p, Site<2>::origin()) * 1.3), 1e-12);
  JumpPath<2> out;
  out.horizon = 1.0;
  out.start = Site<2>{{5, 0}};
  out.events = {{0.5, 0}};
  EXPECT_THROW(rn_weight(out, p), DomainError);
}

TEST(ChangeOfMeasure, EventsAgreeAtSmallTime) {
  const auto p = build_profile<2>(6);
  for (const auto& c : change_of_measure_check<2>(p, 1.5, 40000, 12)) EXPECT_LT(std::abs(c.z), 4.0) << c.event;
}

TEST(TiltedWalk, StaysInSupport) {
  const auto p = build_profile<3>(5);
  const auto path = simulate_tilted<3>(p, 500.0, 4, Site<3>{{1, 1, 1}});
  EXPECT_GT(path.num_jumps(), 0u);
  for (const auto& x : path.positions()) ASSERT_TRUE(p.in_support(x));
  EXPECT_THROW(simulate_tilted<3>(p, 1.0, 4, Site<3>{{5, 0, 0}}), DomainError);
}

TEST(TiltedWalk, HittingTailAndConcentration) {
  const auto p = build_profile<2>(6);
  const auto h = hitting_tail_experiment<2>(p, Site<2>{{2, 2}}, Site<2>::origin(), {0.0, 20.0, 40.0, 80.0}, 4000, 5);
  EXPECT_DOUBLE_EQ(h.survival[0], 1.0);
  for (std::size_t i = 1; i < h.survival.size(); ++i) EXPECT_LE(h.survival[i], h.survival[i - 1]);
  EXPECT_GT(h.rate, 0.0);
  const auto c = local_time_concentration_experiment<2>(p, Site<2>::origin(), 2000.0, {0.5, 1.0}, 200, 6);
  EXPECT_LE(c.max_conservation_error, 1e-9);
  EXPECT_LE(c.deviation_probability[1], c.deviation_probability[0]);
}

TEST(GoodEvent, RegimeAndFrequencies) {
  EXPECT_EQ(regime_box_size(512.0, 1.0, 2), 8);
  EXPECT_EQ(regime_box_size(513.0, 1.0, 2), 9);
  const auto g = good_event_experiment<2>(512.0, 1.0, 200, 3);
  EXPECT_EQ(g.L, 8);
  EXPECT_GE(g.freq_A, g.freq_G);
  EXPECT_GE(g.freq_B, g.freq_G);
  EXPECT_GT(g.mean_boundary, 0.0);
}
