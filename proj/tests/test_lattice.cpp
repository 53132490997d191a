#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "wulff/grid.hpp"
#include "wulff/isoperimetry.hpp"
#include "wulff/lattice.hpp"
#include "wulff/stats.hpp"

using namespace wulff;

namespace {

SiteSet<2> block(int lo, int hi) {
  SiteSet<2> s;
  for (int x = lo; x <= hi; ++x) {
    for (int y = lo; y <= hi; ++y) s.push_back(Site<2>{{x, y}});
  }
  return s;
}

// Exterior by BFS from a far-away site inside a generous box.
std::set<Site<2>> exterior_bfs(const SiteSet<2>& a) {
  std::set<Site<2>> members(a.begin(), a.end());
  std::int32_t lo = 0, hi = 0;
  for (const auto& x : a) {
    lo = std::min({lo, x[0], x[1]});
    hi = std::max({hi, x[0], x[1]});
  }
  lo -= 5;
  hi += 5;
  std::set<Site<2>> seen{Site<2>{{lo, lo}}};
  std::vector<Site<2>> queue{Site<2>{{lo, lo}}};
  for (std::size_t h = 0; h < queue.size(); ++h) {
    for (const auto& y : neighbors(queue[h])) {
      if (y[0] < lo || y[0] > hi || y[1] < lo || y[1] > hi) continue;
      if (members.count(y) || seen.count(y)) continue;
      seen.insert(y);
      queue.push_back(y);
    }
  }
  return seen;
}

}  // namespace

TEST(Site, NeighboursAndSymmetries) {
  const Site<2> o = Site<2>::origin();
  for (const auto& y : neighbors(o)) EXPECT_TRUE(adjacent(o, y));
  EXPECT_EQ(cube_symmetries<2>().size(), 8u);
  EXPECT_EQ(cube_symmetries<3>().size(), 48u);
  EXPECT_TRUE(cube_symmetries<3>().front().is_identity());
  for (const auto& g : cube_symmetries<3>()) {
    const Site<3> x{{1, -2, 5}};
    EXPECT_EQ(g.inverse().apply(g.apply(x)), x);
    EXPECT_EQ(l1_norm(g.apply(x)), l1_norm(x));
  }
  EXPECT_NO_THROW(check_coordinate_bound(Site<2>{{1 << 30, 0}}));
  EXPECT_THROW(check_coordinate_bound(Site<2>{{0, -(1 << 30) - 1}}), DomainError);
}

TEST(Ctrw, StartsAtOriginWithPoissonJumps) {
  Engine rng = make_engine(17);
  const double t = 7.5;
  std::vector<double> jumps, r2;
  for (int i = 0; i < 20000; ++i) {
    const auto p = simulate_ctrw<2>(t, rng);
    EXPECT_EQ(p.start, Site<2>::origin());
    jumps.push_back(static_cast<double>(p.num_jumps()));
    const auto e = p.end();
    r2.push_back(static_cast<double>(e[0]) * e[0] + static_cast<double>(e[1]) * e[1]);
  }
  const double se_j = std::sqrt(t / 20000.0);
  EXPECT_NEAR(mean(jumps), t, 4 * se_j);
  EXPECT_NEAR(mean(r2), t, 4 * std::sqrt(variance(r2) / 20000.0));
  EXPECT_THROW(simulate_ctrw<2>(-1.0, rng), ConfigError);
}

TEST(Occupation, BookkeepingExamples) {
  JumpPath<2> still;
  still.horizon = 3.0;
  auto f = occupation(still);
  EXPECT_DOUBLE_EQ(f.local_time(Site<2>::origin()), 3.0);
  EXPECT_EQ(f.range_size(), 1u);

  JumpPath<2> back;
  back.horizon = 3.0;
  back.events = {{1.0, 0}, {1.0, 1}};
  f = occupation(back);
  EXPECT_DOUBLE_EQ(f.local_time(Site<2>::origin()), 2.0);
  EXPECT_DOUBLE_EQ(f.local_time(unit_step<2>(0)), 1.0);
}

TEST(Occupation, ConservesTimeAndBoundary) {
  Engine rng = make_engine(3);
  for (int i = 0; i < 200; ++i) {
    const double t = 1.0 + 50.0 * uniform01(rng);
    const auto p = simulate_ctrw<2>(t, rng);
    const auto f = occupation(p);
    CompensatedSum s;
    for (const auto& [x, l] : f.local_times()) s += l;
    EXPECT_NEAR(s.value(), t, 1e-9 * t);
    EXPECT_EQ(f.inner_boundary_size(), f.recount_inner_boundary());
    EXPECT_EQ(f.inner_boundary_size(), inner_boundary<2>(f.visited()).size());
  }
}

TEST(InnerBoundary, Examples) {
  EXPECT_EQ(inner_boundary<2>(SiteSet<2>{Site<2>::origin()}).size(), 1u);
  const auto b = inner_boundary<2>(block(-1, 1));
  EXPECT_EQ(b.size(), 8u);
  for (const auto& x : b) EXPECT_NE(x, Site<2>::origin());
  SiteSet<2> seg;
  for (int i = 0; i < 4; ++i) seg.push_back(Site<2>{{i, 0}});
  EXPECT_EQ(inner_boundary<2>(seg).size(), 4u);
  EXPECT_TRUE(inner_boundary<2>(SiteSet<2>{}).empty());
}

TEST(OuterBoundary, SingletonAndHole) {
  const auto s = outer_boundary<2>(SiteSet<2>{Site<2>::origin()});
  EXPECT_EQ(s.outer_vertex.size(), 1u);
  EXPECT_EQ(s.outer_edges.size(), 4u);

  auto ring = block(-2, 2);
  ring.erase(std::find(ring.begin(), ring.end(), Site<2>::origin()));
  const auto o = outer_boundary<2>(ring);
  EXPECT_EQ(o.outer_vertex.size(), 16u);
  EXPECT_EQ(inner_boundary<2>(ring).size(), 20u);
  for (const auto& x : o.outer_vertex) EXPECT_EQ(sup_norm(x), 2);
}

TEST(OuterBoundary, AgreesWithBreadthFirstExterior) {
  Engine rng = make_engine(11);
  for (int i = 0; i < 300; ++i) {
    const int size = 1 + static_cast<int>(uniform_index(rng, 10));
    const auto a = random_connected_growth<2>(size, rng);
    const auto ext = exterior_bfs(a);
    std::set<Site<2>> expect_v;
    std::size_t expect_e = 0;
    for (const auto& x : a) {
      for (const auto& y : neighbors(x)) {
        if (ext.count(y)) {
          expect_v.insert(x);
          ++expect_e;
        }
      }
    }
    const auto o = outer_boundary<2>(a);
    EXPECT_EQ(std::set<Site<2>>(o.outer_vertex.begin(), o.outer_vertex.end()), expect_v);
    EXPECT_EQ(o.outer_edges.size(), expect_e);
    const auto inner = inner_boundary<2>(a);
    const std::set<Site<2>> inner_set(inner.begin(), inner.end());
    for (const auto& x : o.outer_vertex) EXPECT_TRUE(inner_set.count(x));
    for (const auto& [x, y] : o.outer_edges) EXPECT_TRUE(ext.count(y) && !ext.count(x));
  }
}

TEST(Diameter, ExamplesAndBruteForce) {
  EXPECT_EQ(diameter<2>(SiteSet<2>{Site<2>::origin()}), 0.0);
  EXPECT_EQ(diameter<2>(SiteSet<2>{Site<2>{{0, 0}}, Site<2>{{3, 4}}}), 5.0);
  EXPECT_DOUBLE_EQ(diameter<2>(block(-1, 1)), 2.0 * std::sqrt(2.0));
  EXPECT_THROW(diameter<2>(SiteSet<2>{}), DomainError);
  Engine rng = make_engine(5);
  for (int i = 0; i < 200; ++i) {
    const auto p = simulate_ctrw<2>(200.0, rng).positions();
    std::int64_t best = 0;
    for (const auto& a : p) {
      for (const auto& b : p) best = std::max(best, squared_distance(a, b));
    }
    EXPECT_EQ(squared_diameter<2>(p), best);
    const auto p3 = simulate_ctrw<3>(60.0, rng).positions();
    std::int64_t best3 = 0;
    for (const auto& a : p3) {
      for (const auto& b : p3) best3 = std::max(best3, squared_distance(a, b));
    }
    EXPECT_EQ(squared_diameter<3>(p3), best3);
  }
}

TEST(Extents, Examples) {
  const auto e0 = bounding_extents<2>(SiteSet<2>{Site<2>::origin()});
  EXPECT_EQ(e0[0], 0);
  EXPECT_EQ(e0[1], 0);
  const SiteSet<2> tromino{Site<2>{{0, 0}}, Site<2>{{1, 0}}, Site<2>{{0, 1}}};
  const auto e = bounding_extents<2>(tromino);
  EXPECT_EQ(e[0], 1);
  EXPECT_EQ(e[1], 1);
  EXPECT_THROW(bounding_extents<2>(SiteSet<2>{}), DomainError);
  Engine rng = make_engine(8);
  for (int i = 0; i < 100; ++i) {
    const auto p = simulate_ctrw<2>(100.0, rng).positions();
    const auto ex = bounding_extents<2>(p);
    const double d = diameter<2>(p);
    EXPECT_LE(static_cast<double>(std::max(ex[0], ex[1])), d + 1e-12);
    EXPECT_LE(d, std::hypot(static_cast<double>(ex[0]), static_cast<double>(ex[1])) + 1e-12);
  }
}

TEST(Snapshot, RoundTrip) {
  Engine rng = make_engine(2);
  const auto f = occupation(simulate_ctrw<3>(300.0, rng));
  const auto v = normalize(f.visited());
  std::stringstream ss;
  write_snapshot<3>(ss, v);
  EXPECT_EQ(read_snapshot<3>(ss), v);
  std::stringstream bad("1 2\n");
  EXPECT_THROW(read_snapshot<3>(bad), ConfigError);
}

TEST(RangeTracker, MatchesRecountUnderRandomEdits) {
  Engine rng = make_engine(23);
  RangeTracker<2> r(true, 0.5);
  std::vector<std::pair<Site<2>, double>> visits;
  for (int step = 0; step < 20000; ++step) {
    if (visits.empty() || uniform01(rng) < 0.55) {
      const Site<2> x{{static_cast<std::int32_t>(uniform_index(rng, 15)) - 7, static_cast<std::int32_t>(uniform_index(rng, 15)) - 7}};
      const double h = uniform01(rng);
      r.add_visit(x, h);
      visits.emplace_back(x, h);
    } else {
      const auto i = static_cast<std::size_t>(uniform_index(rng, visits.size()));
      r.remove_visit(visits[i].first, visits[i].second);
      visits.erase(visits.begin() + static_cast<std::ptrdiff_t>(i));
    }
    if (step % 500 == 0) {
      OccupationField<2> f;
      for (const auto& [x, h] : visits) f.add_time(x, h);
      r.refresh_boundary_time();
      EXPECT_EQ(r.range_size(), f.range_size());
      EXPECT_EQ(r.boundary_size(), f.inner_boundary_size());
      double bt = 0.0;
      std::int64_t deficient = 0;
      for (const auto& [x, l] : f.local_times()) {
        if (f.is_boundary(x)) bt += l;
        if (l < 0.5) ++deficient;
      }
      EXPECT_NEAR(r.boundary_local_time(), bt, 1e-9);
      EXPECT_EQ(r.deficient_sites(), deficient);
    }
  }
}
