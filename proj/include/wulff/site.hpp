#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "wulff/error.hpp"

namespace wulff {

// Coordinates beyond this magnitude abort the run instead of overflowing.
inline constexpr std::int64_t kDefaultCoordinateBound = std::int64_t{1} << 30;

// A point of Z^D.
template <int D>
struct Site {
  static_assert(D >= 1, "lattice dimension must be positive");
  std::array<std::int32_t, D> c{};

  constexpr std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  constexpr std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  constexpr Site& operator+=(const Site& o) {
    for (int i = 0; i < D; ++i) (*this)[i] += o[i];
    return *this;
  }
  constexpr Site& operator-=(const Site& o) {
    for (int i = 0; i < D; ++i) (*this)[i] -= o[i];
    return *this;
  }
  friend constexpr Site operator+(Site a, const Site& b) { return a += b; }
  friend constexpr Site operator-(Site a, const Site& b) { return a -= b; }
  friend constexpr Site operator-(Site a) {
    for (int i = 0; i < D; ++i) a[i] = -a[i];
    return a;
  }
  friend constexpr bool operator==(const Site&, const Site&) = default;
  friend constexpr auto operator<=>(const Site&, const Site&) = default;

  static constexpr Site origin() { return Site{}; }
};

template <int D>
struct SiteHash {
  std::size_t operator()(const Site<D>& s) const noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (int i = 0; i < D; ++i) {
      h ^= static_cast<std::uint32_t>(s[i]);
      h *= 0x9e3779b97f4a7c15ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

// Directions are numbered 0..2D-1: direction 2i is +e_i, 2i+1 is -e_i.
inline constexpr int num_directions(int d) { return 2 * d; }

template <int D>
constexpr Site<D> unit_step(int dir) {
  Site<D> s{};
  s[dir / 2] = (dir % 2 == 0) ? 1 : -1;
  return s;
}

inline constexpr int opposite(int dir) { return dir ^ 1; }

template <int D>
constexpr std::array<Site<D>, 2 * D> neighbors(const Site<D>& x) {
  std::array<Site<D>, 2 * D> out{};
  for (int dir = 0; dir < 2 * D; ++dir) out[static_cast<std::size_t>(dir)] = x + unit_step<D>(dir);
  return out;
}

template <int D>
constexpr std::int64_t l1_norm(const Site<D>& x) {
  std::int64_t n = 0;
  for (int i = 0; i < D; ++i) n += std::abs(static_cast<std::int64_t>(x[i]));
  return n;
}

template <int D>
constexpr std::int64_t sup_norm(const Site<D>& x) {
  std::int64_t n = 0;
  for (int i = 0; i < D; ++i) n = std::max<std::int64_t>(n, std::abs(static_cast<std::int64_t>(x[i])));
  return n;
}

template <int D>
constexpr std::int64_t squared_distance(const Site<D>& a, const Site<D>& b) {
  std::int64_t s = 0;
  for (int i = 0; i < D; ++i) {
    const std::int64_t dx = static_cast<std::int64_t>(a[i]) - b[i];
    s += dx * dx;
  }
  return s;
}

template <int D>
constexpr bool adjacent(const Site<D>& a, const Site<D>& b) {
  return squared_distance(a, b) == 1;
}

template <int D>
void check_coordinate_bound(const Site<D>& x, std::int64_t bound = kDefaultCoordinateBound) {
  for (int i = 0; i < D; ++i) {
    if (std::abs(static_cast<std::int64_t>(x[i])) > bound) {
      throw DomainError("site coordinate exceeds the safety bound " + std::to_string(bound));
    }
  }
}

// Element of the hyperoctahedral group: x -> y with y[i] = sign[i] * x[perm[i]].
template <int D>
struct CubeSymmetry {
  std::array<int, D> perm{};
  std::array<int, D> sign{};

  constexpr Site<D> apply(const Site<D>& x) const {
    Site<D> y{};
    for (int i = 0; i < D; ++i) y[i] = sign[static_cast<std::size_t>(i)] * x[perm[static_cast<std::size_t>(i)]];
    return y;
  }

  constexpr bool is_identity() const {
    for (int i = 0; i < D; ++i) {
      if (perm[static_cast<std::size_t>(i)] != i || sign[static_cast<std::size_t>(i)] != 1) return false;
    }
    return true;
  }

  constexpr CubeSymmetry inverse() const {
    CubeSymmetry inv{};
    for (int i = 0; i < D; ++i) {
      const auto j = static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]);
      inv.perm[j] = i;
      inv.sign[j] = sign[static_cast<std::size_t>(i)];
    }
    return inv;
  }
};

// All 2^D * D! symmetries of Z^D fixing the origin; the identity comes first.
template <int D>
std::vector<CubeSymmetry<D>> cube_symmetries() {
  std::vector<CubeSymmetry<D>> out;
  std::array<int, D> perm{};
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (unsigned mask = 0; mask < (1u << D); ++mask) {
      CubeSymmetry<D> g{};
      g.perm = perm;
      for (int i = 0; i < D; ++i) g.sign[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? -1 : 1;
      out.push_back(g);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::stable_partition(out.begin(), out.end(), [](const auto& g) { return g.is_identity(); });
  return out;
}

template <int D>
std::string to_string(const Site<D>& x) {
  std::string s = "(";
  for (int i = 0; i < D; ++i) {
    if (i) s += ",";
    s += std::to_string(x[i]);
  }
  return s + ")";
}

}  // namespace wulff
