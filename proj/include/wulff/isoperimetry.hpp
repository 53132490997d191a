#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/lattice.hpp"
#include "wulff/rng.hpp"

namespace wulff {

inline constexpr int kMaxAnimalSize = 12;

// Connected lattice animal stored in translated canonical form: sites sorted
// lexicographically with the smallest one at the origin.
template <int D>
struct Polyomino {
  SiteSet<D> sites;

  std::size_t size() const { return sites.size(); }
  friend bool operator==(const Polyomino&, const Polyomino&) = default;
};

template <int D>
Polyomino<D> canonical_form(SiteSet<D> sites) {
  sites = normalize(std::move(sites));
  if (!sites.empty()) {
    const Site<D> shift = sites.front();
    for (auto& x : sites) x -= shift;
  }
  return Polyomino<D>{std::move(sites)};
}

template <int D>
bool is_connected(std::span<const Site<D>> set) {
  if (set.empty()) return true;
  SiteHashSet<D> members(set.begin(), set.end());
  SiteHashSet<D> seen{set.front()};
  std::vector<Site<D>> stack{set.front()};
  while (!stack.empty()) {
    const Site<D> x = stack.back();
    stack.pop_back();
    for (const auto& y : neighbors(x)) {
      if (members.count(y) && seen.insert(y).second) stack.push_back(y);
    }
  }
  return seen.size() == members.size();
}

namespace detail {

template <int D>
struct SiteSetHash {
  std::size_t operator()(const SiteSet<D>& s) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    const SiteHash<D> sh;
    for (const auto& x : s) h = (h ^ sh(x)) * 0x100000001b3ull;
    return h;
  }
};

}  // namespace detail

// Visits every translation class of connected animals with 1..max_size sites
// exactly once, in increasing size and, within a size, in lexicographic order
// of the canonical site list. The callback receives (animal, index-in-size).
//
// Level k+1 is grown from level k by adding every empty neighbour cell and
// deduplicating canonical forms in a hash set.
template <int D>
void enumerate_animals(int max_size, const std::function<void(const Polyomino<D>&, std::size_t)>& visit) {
  if (max_size < 0) throw ConfigError("max_size must be >= 0");
  if (max_size > kMaxAnimalSize) {
    throw ResourceError("animal enumeration above size " + std::to_string(kMaxAnimalSize) +
                        " is out of budget; use --max-size " + std::to_string(kMaxAnimalSize) + " or less");
  }
  if (max_size == 0) return;
  std::vector<SiteSet<D>> level{SiteSet<D>{Site<D>::origin()}};
  for (int size = 1;; ++size) {
    for (std::size_t i = 0; i < level.size(); ++i) visit(Polyomino<D>{level[i]}, i);
    if (size == max_size) break;
    std::unordered_set<SiteSet<D>, detail::SiteSetHash<D>> next;
    for (const auto& cells : level) {
      SiteHashSet<D> members(cells.begin(), cells.end());
      SiteHashSet<D> tried;
      for (const auto& x : cells) {
        for (const auto& y : neighbors(x)) {
          if (members.count(y) || !tried.insert(y).second) continue;
          SiteSet<D> grown = cells;
          grown.push_back(y);
          next.insert(canonical_form<D>(std::move(grown)).sites);
        }
      }
    }
    level.assign(next.begin(), next.end());
    std::sort(level.begin(), level.end());
  }
}

template <int D>
std::vector<std::uint64_t> count_animals(int max_size) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(std::max(max_size, 0)) + 1, 0);
  enumerate_animals<D>(max_size, [&](const Polyomino<D>& a, std::size_t) { ++counts[a.size()]; });
  return counts;
}

// Full integer box spanned by the coordinate extremes.
template <int D>
SiteSet<D> rectangle_hull(std::span<const Site<D>> set) {
  const auto box = bounding_box(set);
  const detail::BoxIndex<D> index(box.lo, box.hi);
  if (index.total > (std::int64_t{1} << 26)) throw ResourceError("rectangle hull too large");
  SiteSet<D> out;
  out.reserve(static_cast<std::size_t>(index.total));
  for (std::int64_t i = 0; i < index.total; ++i) {
    Site<D> x{};
    std::int64_t rem = i;
    for (int a = D - 1; a >= 0; --a) {
      const auto k = static_cast<std::size_t>(a);
      const std::int64_t c = rem / index.stride[k];
      rem -= c * index.stride[k];
      x[a] = static_cast<std::int32_t>(box.lo[a] + c);
    }
    out.push_back(x);
  }
  return normalize(std::move(out));
}

template <typename T>
struct LemmaCheck {
  T lhs{};
  T rhs{};
  bool holds = false;
};

// |d*R| <= 3 |d*A| with R the rectangle hull of A.
template <int D>
LemmaCheck<std::int64_t> check_rectangle_lemma(std::span<const Site<D>> a) {
  const auto hull = rectangle_hull<D>(a);
  LemmaCheck<std::int64_t> c;
  c.lhs = static_cast<std::int64_t>(outer_boundary<D>(hull).outer_vertex.size());
  c.rhs = 3 * static_cast<std::int64_t>(outer_boundary<D>(a).outer_vertex.size());
  c.holds = c.lhs <= c.rhs;
  return c;
}

// |d*A| >= (2d/(2d-1)) |A|^{(d-1)/d}.
template <int D>
LemmaCheck<double> check_volume_lemma(std::span<const Site<D>> a) {
  LemmaCheck<double> c;
  c.lhs = static_cast<double>(outer_boundary<D>(a).outer_vertex.size());
  const double n = static_cast<double>(normalize(SiteSet<D>(a.begin(), a.end())).size());
  c.rhs = (2.0 * D / (2.0 * D - 1.0)) * std::pow(n, (D - 1.0) / D);
  c.holds = c.lhs >= c.rhs;
  return c;
}

// Sizes of the D coordinate projections (axis i dropped in projection i).
template <int D>
std::array<std::int64_t, D> projection_sizes(std::span<const Site<D>> a) {
  std::array<std::int64_t, D> out{};
  for (int i = 0; i < D; ++i) {
    std::set<Site<D>> proj;
    for (auto x : a) {
      x[i] = 0;
      proj.insert(x);
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(proj.size());
  }
  return out;
}

// |A|^{d-1} <= prod_i |A_i|, compared in floating point with a relative slack.
template <int D>
LemmaCheck<double> check_loomis_whitney(std::span<const Site<D>> a) {
  LemmaCheck<double> c;
  const double n = static_cast<double>(normalize(SiteSet<D>(a.begin(), a.end())).size());
  c.lhs = std::pow(n, D - 1);
  c.rhs = 1.0;
  for (auto p : projection_sizes<D>(a)) c.rhs *= static_cast<double>(p);
  c.holds = c.lhs <= c.rhs * (1 + 1e-12);
  return c;
}

// Random connected set of `size` sites grown from the origin by repeatedly
// adding a uniformly chosen empty neighbour cell (Eden growth).
template <int D>
SiteSet<D> random_connected_growth(int size, Engine& rng) {
  if (size < 1) throw ConfigError("growth size must be >= 1");
  SiteSet<D> cells{Site<D>::origin()};
  SiteHashSet<D> members{Site<D>::origin()};
  std::vector<Site<D>> frontier;
  SiteHashSet<D> in_frontier;
  auto push_frontier = [&](const Site<D>& x) {
    for (const auto& y : neighbors(x)) {
      if (!members.count(y) && in_frontier.insert(y).second) frontier.push_back(y);
    }
  };
  push_frontier(Site<D>::origin());
  while (static_cast<int>(cells.size()) < size) {
    const auto k = static_cast<std::size_t>(uniform_index(rng, frontier.size()));
    const Site<D> y = frontier[k];
    frontier[k] = frontier.back();
    frontier.pop_back();
    in_frontier.erase(y);
    members.insert(y);
    cells.push_back(y);
    push_frontier(y);
  }
  return normalize(std::move(cells));
}

// One row of the isoperimetry report.
struct AnimalReport {
  std::size_t size = 0;
  std::size_t id = 0;
  std::size_t inner_boundary = 0;
  std::size_t outer_vertex = 0;
  std::size_t outer_edges = 0;
  std::int64_t hull_outer_vertex = 0;
  bool rectangle_ok = false;
  bool volume_ok = false;
  bool loomis_whitney_ok = false;
  bool edge_chain_ok = false;  // |d*A| <= |d*_e A| <= (2d-1)|d*A|
};

template <int D>
AnimalReport analyze_animal(const Polyomino<D>& a, std::size_t id) {
  const std::span<const Site<D>> s(a.sites);
  const auto ob = outer_boundary<D>(s);
  AnimalReport r;
  r.size = a.size();
  r.id = id;
  r.inner_boundary = inner_boundary<D>(s).size();
  r.outer_vertex = ob.outer_vertex.size();
  r.outer_edges = ob.outer_edges.size();
  const auto rect = check_rectangle_lemma<D>(s);
  r.hull_outer_vertex = rect.lhs;
  r.rectangle_ok = rect.holds;
  r.volume_ok = check_volume_lemma<D>(s).holds;
  r.loomis_whitney_ok = check_loomis_whitney<D>(s).holds;
  r.edge_chain_ok = r.outer_vertex <= r.outer_edges && r.outer_edges <= static_cast<std::size_t>(2 * D - 1) * r.outer_vertex;
  return r;
}

}  // namespace wulff
