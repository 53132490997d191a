#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/rng.hpp"
#include "wulff/site.hpp"

namespace wulff {

template <int D>
using SiteSet = std::vector<Site<D>>;

template <int D>
using SiteHashSet = std::unordered_set<Site<D>, SiteHash<D>>;

// Sorts lexicographically and drops duplicates.
template <int D>
SiteSet<D> normalize(SiteSet<D> s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

// One jump of a continuous-time path: the walker holds for `hold` time units
// at its current site, then moves in direction `dir`.
struct JumpEvent {
  double hold = 0.0;
  int dir = 0;
};

template <int D>
struct JumpPath {
  Site<D> start{};
  std::vector<JumpEvent> events;
  double horizon = 0.0;

  std::size_t num_jumps() const { return events.size(); }

  // X_0, X_{T_1}, ..., one entry per visited position in order.
  std::vector<Site<D>> positions() const {
    std::vector<Site<D>> out;
    out.reserve(events.size() + 1);
    Site<D> x = start;
    out.push_back(x);
    for (const auto& e : events) {
      x += unit_step<D>(e.dir);
      out.push_back(x);
    }
    return out;
  }

  Site<D> end() const {
    Site<D> x = start;
    for (const auto& e : events) x += unit_step<D>(e.dir);
    return x;
  }

  // Holding time at each visited position; the last one is the residual time
  // up to the horizon.
  std::vector<double> holds() const {
    std::vector<double> out;
    out.reserve(events.size() + 1);
    double used = 0.0;
    for (const auto& e : events) {
      out.push_back(e.hold);
      used += e.hold;
    }
    out.push_back(std::max(0.0, horizon - used));
    return out;
  }
};

// Continuous-time simple random walk started at the origin. Holds are
// exponential with total jump rate `rate` (1 by default) and directions are
// uniform over the 2D unit vectors.
template <int D>
JumpPath<D> simulate_ctrw(double horizon, Engine& rng, double rate = 1.0) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive and finite");
  if (!(rate > 0.0)) throw ConfigError("jump rate must be positive");
  JumpPath<D> path;
  path.horizon = horizon;
  double elapsed = 0.0;
  for (;;) {
    const double hold = exponential(rng, rate);
    if (elapsed + hold > horizon) break;
    elapsed += hold;
    path.events.push_back({hold, static_cast<int>(uniform_index(rng, 2 * D))});
  }
  return path;
}

template <int D>
JumpPath<D> simulate_ctrw(double horizon, std::uint64_t seed, double rate = 1.0) {
  Engine rng = make_engine(seed);
  return simulate_ctrw<D>(horizon, rng, rate);
}

// Visited set with per-site local time. The inner vertex boundary size is
// maintained incrementally as sites are added.
template <int D>
class OccupationField {
 public:
  void add_time(const Site<D>& x, double dt) {
    auto [it, inserted] = local_time_.try_emplace(x, 0.0);
    it->second += dt;
    total_ += dt;
    if (!inserted) return;
    // x is new: it is on the boundary unless all its neighbours are present,
    // and a present neighbour whose only missing neighbour was x leaves it.
    if (count_present_neighbors(x) < 2 * D) ++boundary_size_;
    for (const auto& y : neighbors(x)) {
      if (contains(y) && count_present_neighbors(y) == 2 * D) --boundary_size_;
    }
  }

  bool contains(const Site<D>& x) const { return local_time_.count(x) != 0; }

  double local_time(const Site<D>& x) const {
    auto it = local_time_.find(x);
    return it == local_time_.end() ? 0.0 : it->second;
  }

  std::size_t range_size() const { return local_time_.size(); }
  std::size_t inner_boundary_size() const { return boundary_size_; }
  double total_time() const { return total_; }

  bool is_boundary(const Site<D>& x) const {
    return contains(x) && count_present_neighbors(x) < 2 * D;
  }

  std::size_t recount_inner_boundary() const {
    std::size_t n = 0;
    for (const auto& [x, t] : local_time_) n += is_boundary(x) ? 1 : 0;
    return n;
  }

  SiteSet<D> visited() const {
    SiteSet<D> out;
    out.reserve(local_time_.size());
    for (const auto& [x, t] : local_time_) out.push_back(x);
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::unordered_map<Site<D>, double, SiteHash<D>>& local_times() const { return local_time_; }

 private:
  int count_present_neighbors(const Site<D>& x) const {
    int n = 0;
    for (const auto& y : neighbors(x)) n += contains(y) ? 1 : 0;
    return n;
  }

  std::unordered_map<Site<D>, double, SiteHash<D>> local_time_;
  std::size_t boundary_size_ = 0;
  double total_ = 0.0;
};

template <int D>
OccupationField<D> occupation(const JumpPath<D>& path) {
  OccupationField<D> field;
  Site<D> x = path.start;
  double elapsed = 0.0;
  for (const auto& e : path.events) {
    // A hold running past the horizon is truncated there.
    const double hold = std::min(e.hold, path.horizon - elapsed);
    if (hold < 0.0) break;
    field.add_time(x, hold);
    elapsed += hold;
    if (elapsed >= path.horizon) return field;
    x += unit_step<D>(e.dir);
    check_coordinate_bound(x);
  }
  field.add_time(x, path.horizon - elapsed);
  return field;
}

// Members of `set` with at least one neighbour outside it.
template <int D>
SiteSet<D> inner_boundary(std::span<const Site<D>> set) {
  SiteHashSet<D> members(set.begin(), set.end());
  SiteSet<D> out;
  for (const auto& x : members) {
    for (const auto& y : neighbors(x)) {
      if (!members.count(y)) {
        out.push_back(x);
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <int D>
struct Extents {
  Site<D> lo{};
  Site<D> hi{};

  std::array<std::int64_t, D> lengths() const {
    std::array<std::int64_t, D> out{};
    for (int i = 0; i < D; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(hi[i]) - lo[i];
    return out;
  }
};

template <int D>
Extents<D> bounding_box(std::span<const Site<D>> set) {
  if (set.empty()) throw DomainError("bounding box of an empty set");
  Extents<D> box{set.front(), set.front()};
  for (const auto& x : set) {
    for (int i = 0; i < D; ++i) {
      box.lo[i] = std::min(box.lo[i], x[i]);
      box.hi[i] = std::max(box.hi[i], x[i]);
    }
  }
  return box;
}

// Per-axis extent (max - min coordinate).
template <int D>
std::array<std::int64_t, D> bounding_extents(std::span<const Site<D>> set) {
  return bounding_box(set).lengths();
}

namespace detail {

// Dense indexing of an axis-aligned box; used for flood fills.
template <int D>
struct BoxIndex {
  Site<D> lo{};
  std::array<std::int64_t, D> size{};
  std::array<std::int64_t, D> stride{};
  std::int64_t total = 1;

  BoxIndex(const Site<D>& lo_, const Site<D>& hi_) : lo(lo_) {
    for (int i = 0; i < D; ++i) {
      const auto k = static_cast<std::size_t>(i);
      size[k] = static_cast<std::int64_t>(hi_[i]) - lo_[i] + 1;
      stride[k] = total;
      total *= size[k];
    }
  }

  bool inside(const Site<D>& x) const {
    for (int i = 0; i < D; ++i) {
      const std::int64_t off = static_cast<std::int64_t>(x[i]) - lo[i];
      if (off < 0 || off >= size[static_cast<std::size_t>(i)]) return false;
    }
    return true;
  }

  std::int64_t index(const Site<D>& x) const {
    std::int64_t idx = 0;
    for (int i = 0; i < D; ++i) idx += (static_cast<std::int64_t>(x[i]) - lo[i]) * stride[static_cast<std::size_t>(i)];
    return idx;
  }
};

}  // namespace detail

template <int D>
struct OuterBoundary {
  SiteSet<D> outer_vertex;                              // sites of G adjacent to Ext(G)
  std::vector<std::pair<Site<D>, Site<D>>> outer_edges;  // (x in G, y in Ext(G))
};

// Outer vertex and edge boundary. The exterior component is found by flood
// fill inside the bounding box padded by one layer; every complement cell not
// reached from the padding is a hole.
template <int D>
OuterBoundary<D> outer_boundary(std::span<const Site<D>> set) {
  OuterBoundary<D> out;
  if (set.empty()) return out;
  auto box = bounding_box(set);
  for (int i = 0; i < D; ++i) {
    box.lo[i] -= 1;
    box.hi[i] += 1;
  }
  const detail::BoxIndex<D> index(box.lo, box.hi);
  if (index.total > (std::int64_t{1} << 28)) throw ResourceError("outer_boundary: bounding box too large");
  enum : std::uint8_t { kFree = 0, kMember = 1, kExterior = 2 };
  std::vector<std::uint8_t> cell(static_cast<std::size_t>(index.total), kFree);
  for (const auto& x : set) cell[static_cast<std::size_t>(index.index(x))] = kMember;

  std::vector<Site<D>> stack{box.lo};
  cell[static_cast<std::size_t>(index.index(box.lo))] = kExterior;
  while (!stack.empty()) {
    const Site<D> x = stack.back();
    stack.pop_back();
    for (const auto& y : neighbors(x)) {
      if (!index.inside(y)) continue;
      auto& c = cell[static_cast<std::size_t>(index.index(y))];
      if (c == kFree) {
        c = kExterior;
        stack.push_back(y);
      }
    }
  }

  for (const auto& x : normalize(SiteSet<D>(set.begin(), set.end()))) {
    bool outer = false;
    for (const auto& y : neighbors(x)) {
      if (cell[static_cast<std::size_t>(index.index(y))] == kExterior) {
        outer = true;
        out.outer_edges.emplace_back(x, y);
      }
    }
    if (outer) out.outer_vertex.push_back(x);
  }
  return out;
}

namespace detail {

inline std::int64_t cross(const Site<2>& o, const Site<2>& a, const Site<2>& b) {
  return (static_cast<std::int64_t>(a[0]) - o[0]) * (static_cast<std::int64_t>(b[1]) - o[1]) -
         (static_cast<std::int64_t>(a[1]) - o[1]) * (static_cast<std::int64_t>(b[0]) - o[0]);
}

// Andrew's monotone chain.
inline std::vector<Site<2>> convex_hull(std::vector<Site<2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Site<2>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

template <int D>
std::int64_t max_squared_distance(std::span<const Site<D>> pts) {
  std::int64_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, squared_distance(pts[i], pts[j]));
  }
  return best;
}

}  // namespace detail

// Largest squared Euclidean distance between two members. The maximum is
// attained at convex-hull vertices, which lie on the inner boundary; in d=2
// the candidates are further cut down to the hull of the row extremes.
template <int D>
std::int64_t squared_diameter(std::span<const Site<D>> set) {
  if (set.empty()) throw DomainError("diameter of an empty set");
  if constexpr (D == 2) {
    std::unordered_map<std::int32_t, std::pair<std::int32_t, std::int32_t>> rows;
    for (const auto& x : set) {
      auto [it, fresh] = rows.try_emplace(x[1], x[0], x[0]);
      if (!fresh) {
        it->second.first = std::min(it->second.first, x[0]);
        it->second.second = std::max(it->second.second, x[0]);
      }
    }
    std::vector<Site<2>> pts;
    pts.reserve(2 * rows.size());
    for (const auto& [y, mm] : rows) {
      pts.push_back(Site<2>{{mm.first, y}});
      pts.push_back(Site<2>{{mm.second, y}});
    }
    const auto hull = detail::convex_hull(std::move(pts));
    return detail::max_squared_distance<2>(hull);
  } else {
    const auto boundary = inner_boundary<D>(set);
    return detail::max_squared_distance<D>(boundary);
  }
}

template <int D>
double diameter(std::span<const Site<D>> set) {
  return std::sqrt(static_cast<double>(squared_diameter<D>(set)));
}

// Snapshot format: one site per line, coordinates separated by single
// spaces, lines sorted lexicographically.
template <int D>
void write_snapshot(std::ostream& os, std::span<const Site<D>> set) {
  for (const auto& x : normalize(SiteSet<D>(set.begin(), set.end()))) {
    for (int i = 0; i < D; ++i) {
      if (i) os << ' ';
      os << x[i];
    }
    os << '\n';
  }
}

template <int D>
SiteSet<D> read_snapshot(std::istream& is) {
  SiteSet<D> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Site<D> x{};
    for (int i = 0; i < D; ++i) {
      long long v = 0;
      if (!(ls >> v)) throw ConfigError("snapshot line " + std::to_string(lineno) + ": expected " + std::to_string(D) + " coordinates");
      x[i] = static_cast<std::int32_t>(v);
    }
    std::string extra;
    if (ls >> extra) throw ConfigError("snapshot line " + std::to_string(lineno) + ": trailing data");
    out.push_back(x);
  }
  return out;
}

}  // namespace wulff
