#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <limits>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/site.hpp"

namespace wulff {

// Range bookkeeping on a dense, growable box of cells.
//
// Each cell keeps the number of chain visits, the number of occupied
// neighbours and (optionally) the accumulated local time. From these the
// tracker maintains |R|, |dR|, the local time summed over dR, and the number
// of visited sites whose local time is below a threshold, all in O(D) per
// visit added or removed. Occupied sites always sit at least one cell away
// from the box faces, so neighbour lookups never leave the box.
template <int D>
class RangeTracker {
 public:
  static constexpr int kDegree = 2 * D;

  explicit RangeTracker(bool track_time = false, double time_threshold = 0.0)
      : track_time_(track_time), threshold_(time_threshold) {}

  void add_visit(const Site<D>& x, double hold = 0.0) {
    ensure(x);
    const std::int64_t i = index(x);
    if (visits_[idx(i)] == 0) join(i);
    ++visits_[idx(i)];
    if (track_time_ && hold != 0.0) set_time(i, time_[idx(i)] + hold);
  }

  void remove_visit(const Site<D>& x, double hold = 0.0) {
    const std::int64_t i = index(x);
    assert(inside(x) && visits_[idx(i)] > 0);
    if (track_time_ && hold != 0.0) set_time(i, time_[idx(i)] - hold);
    if (--visits_[idx(i)] == 0) leave(i);
  }

  // Moves local time between two visited sites (hold resampling).
  void shift_time(const Site<D>& x, double delta) {
    if (!track_time_) return;
    const std::int64_t i = index(x);
    set_time(i, time_[idx(i)] + delta);
  }

  std::int32_t visits(const Site<D>& x) const {
    return inside(x) ? visits_[idx(index(x))] : 0;
  }
  bool in_range(const Site<D>& x) const { return visits(x) > 0; }
  double local_time(const Site<D>& x) const {
    return (track_time_ && inside(x)) ? time_[idx(index(x))] : 0.0;
  }

  std::int64_t range_size() const { return range_size_; }
  std::int64_t boundary_size() const { return boundary_size_; }
  double boundary_local_time() const { return boundary_time_; }
  std::int64_t deficient_sites() const { return deficient_; }
  bool tracks_time() const { return track_time_; }
  double time_threshold() const { return threshold_; }

  // Change in |dR| if an unvisited site x were added.
  int boundary_delta_if_added(const Site<D>& x) const {
    if (in_range(x)) return 0;
    int occupied = 0;
    int closed = 0;
    for (int dir = 0; dir < kDegree; ++dir) {
      const Site<D> y = x + unit_step<D>(dir);
      if (!inside(y)) continue;
      const std::int64_t j = index(y);
      if (visits_[idx(j)] > 0) {
        ++occupied;
        if (nbr_in_[idx(j)] == kDegree - 1) ++closed;
      }
    }
    return (occupied < kDegree ? 1 : 0) - closed;
  }

  // Recomputes the boundary local time from scratch to shed rounding drift.
  void refresh_boundary_time() {
    if (!track_time_) return;
    double s = 0.0;
    for (std::size_t i = 0; i < visits_.size(); ++i) {
      if (visits_[i] > 0 && nbr_in_[i] < kDegree) s += time_[i];
    }
    boundary_time_ = s;
  }

  // From-scratch recount of (|R|, |dR|) over the whole box.
  std::pair<std::int64_t, std::int64_t> recount() const {
    std::int64_t r = 0;
    std::int64_t b = 0;
    for (std::size_t i = 0; i < visits_.size(); ++i) {
      if (visits_[i] <= 0) continue;
      ++r;
      int occupied = 0;
      for (int a = 0; a < D; ++a) {
        occupied += visits_[i + static_cast<std::size_t>(stride_[static_cast<std::size_t>(a)])] > 0;
        occupied += visits_[i - static_cast<std::size_t>(stride_[static_cast<std::size_t>(a)])] > 0;
      }
      b += occupied < kDegree ? 1 : 0;
    }
    return {r, b};
  }

  void clear() {
    std::fill(visits_.begin(), visits_.end(), 0);
    std::fill(nbr_in_.begin(), nbr_in_.end(), 0);
    std::fill(time_.begin(), time_.end(), 0.0);
    range_size_ = boundary_size_ = deficient_ = 0;
    boundary_time_ = 0.0;
  }

 private:
  static std::size_t idx(std::int64_t i) { return static_cast<std::size_t>(i); }

  bool inside(const Site<D>& x) const {
    if (visits_.empty()) return false;
    for (int a = 0; a < D; ++a) {
      const std::int64_t off = static_cast<std::int64_t>(x[a]) - lo_[a];
      if (off < 0 || off >= size_[static_cast<std::size_t>(a)]) return false;
    }
    return true;
  }

  std::int64_t index(const Site<D>& x) const {
    std::int64_t i = 0;
    for (int a = 0; a < D; ++a) i += (static_cast<std::int64_t>(x[a]) - lo_[a]) * stride_[static_cast<std::size_t>(a)];
    return i;
  }

  bool on_boundary(std::int64_t i) const { return nbr_in_[idx(i)] < kDegree; }

  void join(std::int64_t i) {
    for (int a = 0; a < D; ++a) {
      for (const std::int64_t j : {i + stride_[static_cast<std::size_t>(a)], i - stride_[static_cast<std::size_t>(a)]}) {
        const auto before = nbr_in_[idx(j)]++;
        if (visits_[idx(j)] > 0 && before == kDegree - 1) {
          --boundary_size_;
          if (track_time_) boundary_time_ -= time_[idx(j)];
        }
      }
    }
    ++range_size_;
    if (on_boundary(i)) {
      ++boundary_size_;
      if (track_time_) boundary_time_ += time_[idx(i)];
    }
    if (track_time_ && time_[idx(i)] < threshold_) ++deficient_;
  }

  void leave(std::int64_t i) {
    if (on_boundary(i)) {
      --boundary_size_;
      if (track_time_) boundary_time_ -= time_[idx(i)];
    }
    if (track_time_ && time_[idx(i)] < threshold_) --deficient_;
    if (track_time_) time_[idx(i)] = 0.0;
    --range_size_;
    for (int a = 0; a < D; ++a) {
      for (const std::int64_t j : {i + stride_[static_cast<std::size_t>(a)], i - stride_[static_cast<std::size_t>(a)]}) {
        const auto after = --nbr_in_[idx(j)];
        if (visits_[idx(j)] > 0 && after == kDegree - 1) {
          ++boundary_size_;
          if (track_time_) boundary_time_ += time_[idx(j)];
        }
      }
    }
  }

  void set_time(std::int64_t i, double value) {
    double& t = time_[idx(i)];
    if (visits_[idx(i)] > 0) {
      if (on_boundary(i)) boundary_time_ += value - t;
      deficient_ += static_cast<std::int64_t>(value < threshold_) - static_cast<std::int64_t>(t < threshold_);
    }
    t = value;
  }

  // Grows the box so that x and its neighbours are interior cells.
  void ensure(const Site<D>& x) {
    bool fits = !visits_.empty();
    for (int a = 0; a < D && fits; ++a) {
      const std::int64_t off = static_cast<std::int64_t>(x[a]) - lo_[a];
      fits = off >= 1 && off < size_[static_cast<std::size_t>(a)] - 1;
    }
    if (fits) return;
    check_coordinate_bound(x);

    Site<D> new_lo{};
    std::array<std::int64_t, D> new_size{};
    for (int a = 0; a < D; ++a) {
      const auto k = static_cast<std::size_t>(a);
      std::int64_t lo = x[a] - 1;
      std::int64_t hi = x[a] + 1;
      if (!visits_.empty()) {
        lo = std::min<std::int64_t>(lo, lo_[a]);
        hi = std::max<std::int64_t>(hi, lo_[a] + size_[k] - 1);
      }
      const std::int64_t pad = std::max<std::int64_t>(8, (hi - lo + 1) / 2);
      new_lo[a] = static_cast<std::int32_t>(lo - pad);
      new_size[k] = hi - lo + 1 + 2 * pad;
    }
    std::array<std::int64_t, D> new_stride{};
    std::int64_t total = 1;
    for (int a = 0; a < D; ++a) {
      new_stride[static_cast<std::size_t>(a)] = total;
      total *= new_size[static_cast<std::size_t>(a)];
    }
    if (total > (std::int64_t{1} << 31)) throw ResourceError("range tracker box exceeds 2^31 cells");

    std::vector<std::int32_t> visits(static_cast<std::size_t>(total), 0);
    std::vector<std::uint8_t> nbr(static_cast<std::size_t>(total), 0);
    std::vector<double> time(track_time_ ? static_cast<std::size_t>(total) : 0, 0.0);
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(visits_.size()); ++i) {
      if (visits_[idx(i)] == 0 && nbr_in_[idx(i)] == 0 && (!track_time_ || time_[idx(i)] == 0.0)) continue;
      std::int64_t rem = i;
      std::int64_t j = 0;
      for (int a = D - 1; a >= 0; --a) {
        const auto k = static_cast<std::size_t>(a);
        const std::int64_t c = rem / stride_[k];
        rem -= c * stride_[k];
        j += (c + lo_[a] - new_lo[a]) * new_stride[k];
      }
      visits[idx(j)] = visits_[idx(i)];
      nbr[idx(j)] = nbr_in_[idx(i)];
      if (track_time_) time[idx(j)] = time_[idx(i)];
    }
    visits_ = std::move(visits);
    nbr_in_ = std::move(nbr);
    time_ = std::move(time);
    lo_ = new_lo;
    size_ = new_size;
    stride_ = new_stride;
  }

  bool track_time_;
  double threshold_;
  Site<D> lo_{};
  std::array<std::int64_t, D> size_{};
  std::array<std::int64_t, D> stride_{};
  std::vector<std::int32_t> visits_;
  std::vector<std::uint8_t> nbr_in_;
  std::vector<double> time_;
  std::int64_t range_size_ = 0;
  std::int64_t boundary_size_ = 0;
  double boundary_time_ = 0.0;
  std::int64_t deficient_ = 0;
};

}  // namespace wulff
