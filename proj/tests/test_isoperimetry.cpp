#include <gtest/gtest.h>

#include <set>

#include "wulff/isoperimetry.hpp"

using namespace wulff;

namespace {

// Distinct translated animals of size k found by scanning all k-subsets of a
// k x k box.
std::size_t brute_count_2d(int k) {
  std::vector<Site<2>> cells;
  for (int x = 0; x < k; ++x) {
    for (int y = 0; y < k; ++y) cells.push_back(Site<2>{{x, y}});
  }
  std::set<SiteSet<2>> found;
  std::vector<int> pick(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pick[static_cast<std::size_t>(i)] = i;
  const int n = static_cast<int>(cells.size());
  for (;;) {
    SiteSet<2> s;
    for (int i : pick) s.push_back(cells[static_cast<std::size_t>(i)]);
    if (is_connected<2>(s)) found.insert(canonical_form<2>(s).sites);
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return found.size();
}

}  // namespace

TEST(Animals, FixedPolyominoCounts) {
  const std::vector<std::uint64_t> expect{0, 1, 2, 6, 19, 63, 216, 760, 2725, 9910, 36446};
  EXPECT_EQ(count_animals<2>(10), expect);
}

TEST(Animals, FixedPolycubeCounts) {
  const std::vector<std::uint64_t> expect{0, 1, 3, 15, 86, 534, 3481};
  EXPECT_EQ(count_animals<3>(6), expect);
}

TEST(Animals, AgreeWithSubsetScan) {
  const auto counts = count_animals<2>(5);
  for (int k = 1; k <= 5; ++k) EXPECT_EQ(counts[static_cast<std::size_t>(k)], brute_count_2d(k)) << k;
}

TEST(Animals, EnumerationIsConnectedAndCanonical) {
  enumerate_animals<2>(7, [](const Polyomino<2>& a, std::size_t) {
    EXPECT_TRUE(is_connected<2>(a.sites));
    EXPECT_EQ(canonical_form<2>(a.sites), a);
  });
}

TEST(Lemmas, HoldForAllAnimalsAboveOne) {
  for (int k = 2; k <= 9; ++k) {
    std::size_t bad = 0;
    enumerate_animals<2>(k, [&](const Polyomino<2>& a, std::size_t id) {
      if (static_cast<int>(a.size()) != k) return;
      const auto r = analyze_animal<2>(a, id);
      bad += !(r.rectangle_ok && r.volume_ok && r.loomis_whitney_ok && r.edge_chain_ok);
    });
    EXPECT_EQ(bad, 0u) << k;
  }
}

TEST(Lemmas, SingletonViolatesVolumeBound) {
  const SiteSet<2> one{Site<2>::origin()};
  const auto v = check_volume_lemma<2>(one);
  EXPECT_FALSE(v.holds);
  EXPECT_DOUBLE_EQ(v.lhs, 1.0);
  EXPECT_DOUBLE_EQ(v.rhs, 4.0 / 3.0);
  EXPECT_TRUE(check_rectangle_lemma<2>(one).holds);
}

TEST(Lemmas, ExamplesByHand) {
  SiteSet<2> l{Site<2>{{0, 0}}, Site<2>{{1, 0}}, Site<2>{{2, 0}}, Site<2>{{0, 1}}, Site<2>{{0, 2}}};
  EXPECT_EQ(rectangle_hull<2>(l).size(), 9u);
  const auto r = check_rectangle_lemma<2>(l);
  EXPECT_EQ(r.lhs, 8);
  EXPECT_EQ(r.rhs, 15);
  const auto p = projection_sizes<2>(l);
  EXPECT_EQ(p[0], 3);
  EXPECT_EQ(p[1], 3);
  EXPECT_TRUE(check_loomis_whitney<2>(l).holds);
}

TEST(Lemmas, HoldOnRandomGrowthIn3D) {
  Engine rng = make_engine(91);
  for (int i = 0; i < 200; ++i) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 60));
    const auto a = random_connected_growth<3>(k, rng);
    EXPECT_EQ(static_cast<int>(a.size()), k);
    EXPECT_TRUE(is_connected<3>(a));
    EXPECT_TRUE(check_volume_lemma<3>(a).holds);
    EXPECT_TRUE(check_loomis_whitney<3>(a).holds);
  }
}

TEST(Animals, RejectsOversizedRequests) {
  EXPECT_THROW(count_animals<2>(kMaxAnimalSize + 1), ResourceError);
  Engine rng = make_engine(1);
  EXPECT_THROW(random_connected_growth<2>(0, rng), ConfigError);
}
