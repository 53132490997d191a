#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wulff/error.hpp"
#include "wulff/gibbs.hpp"
#include "wulff/grid.hpp"
#include "wulff/lattice.hpp"
#include "wulff/rng.hpp"
#include "wulff/stats.hpp"

namespace wulff {

enum class Move { HeatBath = 0, Pivot = 1, Reptation = 2, HoldResample = 3, Segment = 4 };
inline constexpr int kNumMoves = 5;

inline std::string_view move_name(Move m) {
  switch (m) {
    case Move::HeatBath: return "heat-bath";
    case Move::Pivot: return "pivot";
    case Move::Reptation: return "reptation";
    case Move::HoldResample: return "hold";
    case Move::Segment: return "segment";
  }
  return "?";
}

struct MoveMix {
  double heat_bath = 0.45;
  double pivot = 0.05;
  double reptation = 0.3;
  double hold = 0.0;
  double segment = 0.2;

  double weight(Move m) const {
    switch (m) {
      case Move::HeatBath: return heat_bath;
      case Move::Pivot: return pivot;
      case Move::Reptation: return reptation;
      case Move::HoldResample: return hold;
      case Move::Segment: return segment;
    }
    return 0.0;
  }

  void validate() const {
    for (double p : {heat_bath, pivot, reptation, hold, segment}) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("move probabilities must be finite and >= 0");
    }
    if (std::abs(heat_bath + pivot + reptation + hold + segment - 1.0) > 1e-9) throw ConfigError("move probabilities must sum to 1");
    if (!(heat_bath > 0.0 || reptation > 0.0)) throw ConfigError("move mix needs heat-bath or reptation with positive probability");
  }

  // "heat-bath=0.5,pivot=0.1,reptation=0.4,hold=0,segment=0"; omitted moves get 0.
  static MoveMix parse(const std::string& text) {
    MoveMix m{0, 0, 0, 0, 0};
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("move mix entry '" + item + "' is not name=prob");
      const std::string key = item.substr(0, eq);
      double v = 0.0;
      try {
        v = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw ConfigError("move mix entry '" + item + "' has a bad number");
      }
      if (key == "heat-bath") m.heat_bath = v;
      else if (key == "pivot") m.pivot = v;
      else if (key == "reptation") m.reptation = v;
      else if (key == "hold") m.hold = v;
      else if (key == "segment") m.segment = v;
      else throw ConfigError("unknown move '" + key + "'");
    }
    m.validate();
    return m;
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << "heat-bath=" << heat_bath << ",pivot=" << pivot << ",reptation=" << reptation << ",hold=" << hold << ",segment=" << segment;
    return os.str();
  }

  friend bool operator==(const MoveMix&, const MoveMix&) = default;
};

struct MoveStats {
  std::array<std::uint64_t, kNumMoves> attempted{};
  std::array<std::uint64_t, kNumMoves> accepted{};
  std::array<std::uint64_t, kNumMoves> skipped{};
};

// Path configuration: positions X_0..X_k (k = steps or jumps) and, in the
// continuous ensemble, the holding times tau_0..tau_k summing to the horizon.
// The range tracker is kept consistent with both.
template <int D>
struct ChainState {
  std::deque<Site<D>> positions;
  std::deque<double> holds;
  RangeTracker<D> range;
  double log_weight = 0.0;

  std::size_t steps() const { return positions.empty() ? 0 : positions.size() - 1; }
  bool timed() const { return !holds.empty(); }
};

namespace detail {

template <int D>
double log_weight(const RangeTracker<D>& r, const GibbsConfig& c) {
  switch (c.variant) {
    case HamiltonianVariant::BoundarySize:
      return -c.beta * static_cast<double>(r.boundary_size());
    case HamiltonianVariant::BoundaryLocalTime:
      return -c.beta * r.boundary_local_time();
    case HamiltonianVariant::ConditionedLocalTime:
      return r.deficient_sites() == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

inline bool metropolis(Engine& rng, double delta_log_weight) {
  if (delta_log_weight >= 0.0) return true;
  if (!(delta_log_weight > -std::numeric_limits<double>::infinity())) return false;
  return uniform01(rng) < std::exp(delta_log_weight);
}

}  // namespace detail

// Builds a consistent state from explicit positions (and holds, which may be
// empty for the discrete ensemble).
template <int D>
ChainState<D> make_state(const std::vector<Site<D>>& positions, const std::vector<double>& holds, const GibbsConfig& config) {
  if (positions.empty()) throw ConfigError("chain state needs at least one position");
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (!adjacent(positions[i - 1], positions[i])) throw ConfigError("chain positions must be nearest neighbours");
  }
  const bool timed = config.ensemble == Ensemble::ContinuousTime;
  if (timed && holds.size() != positions.size()) throw ConfigError("continuous state needs one hold per position");
  const double threshold = config.variant == HamiltonianVariant::ConditionedLocalTime ? config.beta : 0.0;
  ChainState<D> s{{}, {}, RangeTracker<D>(timed, threshold), 0.0};
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double h = timed ? holds[i] : 0.0;
    s.positions.push_back(positions[i]);
    if (timed) s.holds.push_back(h);
    s.range.add_visit(positions[i], h);
  }
  s.range.refresh_boundary_time();
  s.log_weight = detail::log_weight(s.range, config);
  return s;
}

// Holds of k+1 sites given k jumps before the horizon: uniform spacings.
inline std::vector<double> dirichlet_holds(std::size_t count, double horizon, Engine& rng) {
  std::vector<double> e(count);
  double total = 0.0;
  for (auto& x : e) {
    x = exponential(rng, 1.0);
    total += x;
  }
  for (auto& x : e) x *= horizon / total;
  return e;
}

enum class InitKind { RandomWalk, Compact };

struct ChainOptions {
  InitKind init = InitKind::RandomWalk;
  // Jump count for the continuous ensemble; negative draws it from Poisson(t).
  std::int64_t jumps = -1;
  // Compare the incremental range with a from-scratch recount after this many
  // accepted moves; 0 disables the check.
  std::uint64_t debug_check_every = 0;
  // Cube side for the compact start; 0 fits the whole path.
  std::int32_t compact_side = 0;
  // Longest sub-path a segment or pivot move transforms; 0 means the whole path.
  std::size_t segment_max = 512;
};

namespace detail {

// Walk that runs back and forth along a boustrophedon ordering of the cube
// [0, side)^D; side 0 picks the smallest cube holding every step.
template <int D>
std::vector<Site<D>> compact_positions(std::size_t steps, std::int32_t side = 0) {
  if (side <= 0) {
    side = static_cast<std::int32_t>(std::ceil(std::pow(static_cast<double>(steps + 1), 1.0 / D) - 1e-9));
  }
  side = std::max<std::int32_t>(side, 2);
  std::int64_t cells = 1;
  for (int a = 0; a < D; ++a) cells *= side;
  auto cell = [side, cells](std::int64_t i) {
    Site<D> x{};
    std::int64_t block = cells;
    for (int a = D - 1; a >= 0; --a) {
      block /= side;
      const std::int64_t v = i / block;
      i %= block;
      if (v % 2) i = block - 1 - i;
      x[a] = static_cast<std::int32_t>(v);
    }
    return x;
  };
  std::vector<Site<D>> out;
  out.reserve(steps + 1);
  const std::int64_t period = 2 * (cells - 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const std::int64_t r = static_cast<std::int64_t>(k) % period;
    out.push_back(cell(r < cells ? r : period - r));
  }
  return out;
}

}  // namespace detail

// Initial state: a simple random walk path (or a compact serpentine), with
// uniform-spacing holds in the continuous ensemble. For the conditioned
// variant the initial path oscillates between two sites so that every
// visited site collects at least beta.
template <int D>
ChainState<D> initial_state(const GibbsConfig& config, Engine& rng, const ChainOptions& opt = {}) {
  config.validate();
  std::size_t k = 0;
  if (config.ensemble == Ensemble::DiscreteSkeleton) {
    k = static_cast<std::size_t>(config.steps());
  } else if (opt.jumps >= 0) {
    k = static_cast<std::size_t>(opt.jumps);
  } else {
    k = simulate_ctrw<D>(config.horizon, rng).num_jumps();
  }
  std::vector<Site<D>> pos;
  const bool conditioned = config.variant == HamiltonianVariant::ConditionedLocalTime;
  if (conditioned) {
    for (std::size_t i = 0; i <= k; ++i) pos.push_back(i % 2 ? unit_step<D>(0) : Site<D>::origin());
  } else if (opt.init == InitKind::Compact) {
    pos = detail::compact_positions<D>(k, opt.compact_side);
  } else {
    pos.push_back(Site<D>::origin());
    for (std::size_t i = 0; i < k; ++i) pos.push_back(pos.back() + unit_step<D>(static_cast<int>(uniform_index(rng, 2 * D))));
  }
  std::vector<double> holds;
  if (config.ensemble == Ensemble::ContinuousTime) {
    holds = conditioned ? std::vector<double>(k + 1, config.horizon / static_cast<double>(k + 1))
                        : dirichlet_holds(k + 1, config.horizon, rng);
  }
  auto s = make_state<D>(pos, holds, config);
  if (!std::isfinite(s.log_weight)) {
    throw ResourceError("no admissible initial state: the two-site oscillating start needs t >= beta * (k+1) / floor((k+1)/2)");
  }
  return s;
}

// One Markov chain targeting the Gibbs law of `config` (conditional on the
// jump count in the continuous ensemble).
template <int D>
class Chain {
 public:
  Chain(const GibbsConfig& config, const MoveMix& mix, std::uint64_t seed, const ChainOptions& opt = {})
      : config_(config), mix_(mix), opt_(opt), rng_(make_engine(seed)) {
    mix_.validate();
    state_ = initial_state<D>(config_, rng_, opt_);
  }

  Chain(const GibbsConfig& config, const MoveMix& mix, ChainState<D> state, std::uint64_t seed, const ChainOptions& opt = {})
      : config_(config), mix_(mix), opt_(opt), rng_(make_engine(seed)), state_(std::move(state)) {
    config_.validate();
    mix_.validate();
  }

  const ChainState<D>& state() const { return state_; }
  const MoveStats& stats() const { return stats_; }
  const GibbsConfig& config() const { return config_; }
  Engine& rng() { return rng_; }

  Move draw_move() {
    double u = uniform01(rng_);
    for (int m = 0; m < kNumMoves; ++m) {
      const double w = mix_.weight(static_cast<Move>(m));
      if (u < w) return static_cast<Move>(m);
      u -= w;
    }
    return mix_.reptation > 0.0 ? Move::Reptation : Move::HeatBath;
  }

  // One move attempt; returns true if the configuration changed.
  bool step() { return step(draw_move()); }

  bool step(Move m) {
    const auto mi = static_cast<std::size_t>(m);
    ++stats_.attempted[mi];
    int outcome = -1;
    switch (m) {
      case Move::HeatBath: outcome = heat_bath(); break;
      case Move::Pivot: outcome = pivot(); break;
      case Move::Reptation: outcome = reptation(); break;
      case Move::HoldResample: outcome = hold_resample(); break;
      case Move::Segment: outcome = segment(); break;
    }
    if (outcome < 0) {
      ++stats_.skipped[mi];
      return false;
    }
    if (outcome > 0) {
      ++stats_.accepted[mi];
      if (opt_.debug_check_every && ++accepted_total_ % opt_.debug_check_every == 0) verify();
    }
    return outcome > 0;
  }

  // n+1 attempts, n the number of steps.
  void sweep() {
    const std::size_t attempts = state_.positions.size();
    for (std::size_t i = 0; i < attempts; ++i) step();
    state_.range.refresh_boundary_time();
    state_.log_weight = detail::log_weight(state_.range, config_);
    if (std::isnan(state_.log_weight)) throw NumericalError("non-finite energy: " + dump());
  }

  // From-scratch consistency check of the incremental bookkeeping.
  void verify() const {
    RangeTracker<D> fresh(state_.timed(), state_.range.time_threshold());
    for (std::size_t i = 0; i < state_.positions.size(); ++i) fresh.add_visit(state_.positions[i], state_.timed() ? state_.holds[i] : 0.0);
    const auto [r, b] = state_.range.recount();
    if (r != fresh.range_size() || b != fresh.boundary_size() || r != state_.range.range_size() ||
        b != state_.range.boundary_size()) {
      throw NumericalError("incremental range bookkeeping diverged: " + dump());
    }
  }

  std::string dump() const {
    std::ostringstream os;
    os << "steps=" << state_.steps() << " |R|=" << state_.range.range_size() << " H=" << state_.range.boundary_size()
       << " Htilde=" << state_.range.boundary_local_time() << " logw=" << state_.log_weight << " start=" << to_string(state_.positions.front())
       << " end=" << to_string(state_.positions.back());
    return os.str();
  }

 private:
  double hold_at(std::size_t i) const { return state_.timed() ? state_.holds[i] : 0.0; }

  double current_log_weight() const { return detail::log_weight(state_.range, config_); }

  // Gibbs update of position X_k given its chain neighbours. Returns 1 if X_k
  // moved, 0 if it stayed, -1 if the move does not apply.
  int heat_bath() {
    const std::size_t n = state_.steps();
    if (n == 0) return -1;
    const auto k = static_cast<std::size_t>(uniform_index(rng_, n + 1));
    std::array<Site<D>, 2 * D> cand{};
    int nc = 0;
    if (k == 0 || k == n) {
      const Site<D>& anchor = state_.positions[k == 0 ? 1 : n - 1];
      for (const auto& y : neighbors(anchor)) cand[static_cast<std::size_t>(nc++)] = y;
    } else {
      const Site<D>& a = state_.positions[k - 1];
      const Site<D>& b = state_.positions[k + 1];
      if (a == b) {
        for (const auto& y : neighbors(a)) cand[static_cast<std::size_t>(nc++)] = y;
      } else {
        for (const auto& y : neighbors(a)) {
          if (adjacent(y, b)) cand[static_cast<std::size_t>(nc++)] = y;
        }
      }
    }
    if (nc <= 1) return 0;
    const Site<D> old = state_.positions[k];
    const double h = hold_at(k);
    state_.range.remove_visit(old, h);
    std::array<double, 2 * D> lw{};
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nc; ++i) {
      const auto& c = cand[static_cast<std::size_t>(i)];
      state_.range.add_visit(c, h);
      lw[static_cast<std::size_t>(i)] = current_log_weight();
      state_.range.remove_visit(c, h);
      best = std::max(best, lw[static_cast<std::size_t>(i)]);
    }
    if (!(best > -std::numeric_limits<double>::infinity())) {
      state_.range.add_visit(old, h);
      throw NumericalError("heat-bath found no admissible candidate: " + dump());
    }
    double total = 0.0;
    for (int i = 0; i < nc; ++i) {
      auto& w = lw[static_cast<std::size_t>(i)];
      w = std::exp(w - best);
      total += w;
    }
    double u = uniform01(rng_) * total;
    int pick = nc - 1;
    for (int i = 0; i < nc; ++i) {
      u -= lw[static_cast<std::size_t>(i)];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    const Site<D> chosen = cand[static_cast<std::size_t>(pick)];
    state_.range.add_visit(chosen, h);
    state_.positions[k] = chosen;
    state_.log_weight = current_log_weight();
    return chosen == old ? 0 : 1;
  }

  // Random non-identity cube symmetry applied around X_k to the shorter side.
  int pivot() {
    const std::size_t n = state_.steps();
    if (n < 2) return -1;
    if (symmetries_.empty()) {
      symmetries_ = cube_symmetries<D>();
      symmetries_.erase(symmetries_.begin());
    }
    // Pivot sites within `cap` steps of either end once the path is longer
    // than 2 cap. The site set does not depend on the state, so the proposal
    // stays symmetric, and each attempt costs O(cap) instead of O(n).
    const std::size_t cap = opt_.segment_max;
    std::size_t k;
    if (cap == 0 || 2 * cap >= n - 1) {
      k = 1 + static_cast<std::size_t>(uniform_index(rng_, n - 1));
    } else {
      k = 1 + static_cast<std::size_t>(uniform_index(rng_, 2 * cap));
      if (k > cap) k = n - 2 * cap + k - 1;
    }
    const auto& g = symmetries_[static_cast<std::size_t>(uniform_index(rng_, symmetries_.size()))];
    const bool suffix = n - k <= k;
    const std::size_t lo = suffix ? k + 1 : 0;
    const std::size_t hi = suffix ? n + 1 : k;
    const Site<D> centre = state_.positions[k];
    const double before = state_.log_weight;
    buffer_.clear();
    for (std::size_t i = lo; i < hi; ++i) {
      const Site<D> y = centre + g.apply(state_.positions[i] - centre);
      buffer_.push_back(y);
      state_.range.remove_visit(state_.positions[i], hold_at(i));
    }
    for (std::size_t i = lo; i < hi; ++i) state_.range.add_visit(buffer_[i - lo], hold_at(i));
    const double after = current_log_weight();
    if (detail::metropolis(rng_, after - before)) {
      for (std::size_t i = lo; i < hi; ++i) state_.positions[i] = buffer_[i - lo];
      state_.log_weight = after;
      return 1;
    }
    for (std::size_t i = lo; i < hi; ++i) state_.range.remove_visit(buffer_[i - lo], hold_at(i));
    for (std::size_t i = lo; i < hi; ++i) state_.range.add_visit(state_.positions[i], hold_at(i));
    state_.log_weight = current_log_weight();
    return 0;
  }

  // Cube symmetry applied to the interior of a sub-path X_i..X_j, with
  // i < j and j - i log-uniform on [2, cap]. Either g fixes v = X_j - X_i and
  // acts around X_i, or g maps v to -v and the segment is also traversed
  // backwards; both keep the endpoints, and the candidate set depends only
  // on v and is closed under inverses.
  int segment() {
    const std::size_t n = state_.steps();
    if (n < 2) return -1;
    if (all_symmetries_.empty()) all_symmetries_ = cube_symmetries<D>();
    const std::size_t cap = opt_.segment_max ? std::min(opt_.segment_max, n) : n;
    if (cap < 2) return -1;
    auto m = static_cast<std::size_t>(std::floor(std::exp(uniform01(rng_) * std::log(static_cast<double>(cap) + 1.0))));
    m = std::clamp<std::size_t>(m, 2, cap);
    const auto i = static_cast<std::size_t>(uniform_index(rng_, n - m + 1));
    const std::size_t j = i + m;
    const Site<D> a = state_.positions[i];
    const Site<D> b = state_.positions[j];
    const Site<D> v = b - a;
    transforms_.clear();
    for (std::size_t s = 0; s < all_symmetries_.size(); ++s) {
      const Site<D> w = all_symmetries_[s].apply(v);
      if (w == v && !all_symmetries_[s].is_identity()) transforms_.emplace_back(s, false);
      if (w == -v) transforms_.emplace_back(s, true);
    }
    if (transforms_.empty()) return 0;
    const auto [si, reverse] = transforms_[static_cast<std::size_t>(uniform_index(rng_, transforms_.size()))];
    const auto& g = all_symmetries_[si];
    const double before = state_.log_weight;
    buffer_.clear();
    for (std::size_t k = i + 1; k < j; ++k) {
      buffer_.push_back(reverse ? b + g.apply(state_.positions[i + j - k] - a) : a + g.apply(state_.positions[k] - a));
    }
    for (std::size_t k = i + 1; k < j; ++k) state_.range.remove_visit(state_.positions[k], hold_at(k));
    for (std::size_t k = i + 1; k < j; ++k) state_.range.add_visit(buffer_[k - i - 1], hold_at(k));
    const double after = current_log_weight();
    if (detail::metropolis(rng_, after - before)) {
      for (std::size_t k = i + 1; k < j; ++k) state_.positions[k] = buffer_[k - i - 1];
      state_.log_weight = after;
      return 1;
    }
    for (std::size_t k = i + 1; k < j; ++k) state_.range.remove_visit(buffer_[k - i - 1], hold_at(k));
    for (std::size_t k = i + 1; k < j; ++k) state_.range.add_visit(state_.positions[k], hold_at(k));
    state_.log_weight = current_log_weight();
    return 0;
  }

  // Drop one end and grow the other by a uniform unit step; holds rotate.
  int reptation() {
    const std::size_t n = state_.steps();
    if (n == 0) return -1;
    const bool from_head = uniform01(rng_) < 0.5;
    const int dir = static_cast<int>(uniform_index(rng_, 2 * D));
    const double before = state_.log_weight;
    if (from_head) {
      const Site<D> gone = state_.positions.front();
      const double h = hold_at(0);
      const Site<D> fresh = state_.positions.back() + unit_step<D>(dir);
      state_.range.remove_visit(gone, h);
      state_.range.add_visit(fresh, h);
      const double after = current_log_weight();
      if (!detail::metropolis(rng_, after - before)) {
        state_.range.remove_visit(fresh, h);
        state_.range.add_visit(gone, h);
        state_.log_weight = current_log_weight();
        return 0;
      }
      state_.positions.pop_front();
      state_.positions.push_back(fresh);
      if (state_.timed()) {
        state_.holds.pop_front();
        state_.holds.push_back(h);
      }
      state_.log_weight = after;
    } else {
      const Site<D> gone = state_.positions.back();
      const double h = hold_at(n);
      const Site<D> fresh = state_.positions.front() + unit_step<D>(dir);
      state_.range.remove_visit(gone, h);
      state_.range.add_visit(fresh, h);
      const double after = current_log_weight();
      if (!detail::metropolis(rng_, after - before)) {
        state_.range.remove_visit(fresh, h);
        state_.range.add_visit(gone, h);
        state_.log_weight = current_log_weight();
        return 0;
      }
      state_.positions.pop_back();
      state_.positions.push_front(fresh);
      if (state_.timed()) {
        state_.holds.pop_back();
        state_.holds.push_front(h);
      }
      state_.log_weight = after;
    }
    return 1;
  }

  // Redistribute tau_i + tau_j uniformly between i and j: the Gibbs update of
  // the uniform-spacings law, Metropolis-corrected for time-dependent weights.
  int hold_resample() {
    if (!state_.timed() || state_.holds.size() < 2) return -1;
    const std::size_t m = state_.holds.size();
    const auto i = static_cast<std::size_t>(uniform_index(rng_, m));
    auto j = static_cast<std::size_t>(uniform_index(rng_, m - 1));
    if (j >= i) ++j;
    const double sum = state_.holds[i] + state_.holds[j];
    const double ti = uniform01(rng_) * sum;
    const double delta = ti - state_.holds[i];
    if (config_.variant == HamiltonianVariant::BoundarySize) {
      state_.range.shift_time(state_.positions[i], delta);
      state_.range.shift_time(state_.positions[j], -delta);
      state_.holds[i] = ti;
      state_.holds[j] = sum - ti;
      return 1;
    }
    const double before = state_.log_weight;
    state_.range.shift_time(state_.positions[i], delta);
    state_.range.shift_time(state_.positions[j], -delta);
    const double after = current_log_weight();
    if (!detail::metropolis(rng_, after - before)) {
      state_.range.shift_time(state_.positions[i], -delta);
      state_.range.shift_time(state_.positions[j], delta);
      state_.log_weight = current_log_weight();
      return 0;
    }
    state_.holds[i] = ti;
    state_.holds[j] = sum - ti;
    state_.log_weight = after;
    return 1;
  }

  GibbsConfig config_;
  MoveMix mix_;
  ChainOptions opt_;
  Engine rng_;
  ChainState<D> state_;
  MoveStats stats_;
  std::vector<CubeSymmetry<D>> symmetries_;
  std::vector<CubeSymmetry<D>> all_symmetries_;
  std::vector<std::pair<std::size_t, bool>> transforms_;
  std::vector<Site<D>> buffer_;
  std::uint64_t accepted_total_ = 0;
};

// Observables of one recorded configuration.
struct Sample {
  std::uint64_t sweep = 0;
  double H = 0.0;
  double Htilde = std::numeric_limits<double>::quiet_NaN();
  double diam = 0.0;
  double volume = 0.0;
  std::vector<std::int64_t> extents;
  double conditioned_ok = std::numeric_limits<double>::quiet_NaN();
};

template <int D>
Sample observe(const ChainState<D>& s, const GibbsConfig& config, std::uint64_t sweep) {
  Sample out;
  out.sweep = sweep;
  out.H = static_cast<double>(s.range.boundary_size());
  out.volume = static_cast<double>(s.range.range_size());
  const std::vector<Site<D>> pos(s.positions.begin(), s.positions.end());
  out.diam = diameter<D>(pos);
  const auto ext = bounding_extents<D>(pos);
  out.extents.assign(ext.begin(), ext.end());
  if (s.timed()) {
    out.Htilde = s.range.boundary_local_time();
    bool ok = true;
    if (config.variant == HamiltonianVariant::ConditionedLocalTime) {
      ok = s.range.deficient_sites() == 0;
    } else {
      for (const auto& x : pos) {
        if (s.range.local_time(x) < config.beta) {
          ok = false;
          break;
        }
      }
    }
    out.conditioned_ok = ok ? 1.0 : 0.0;
  }
  return out;
}

struct Schedule {
  // Negative burn_in selects the automatic rule: a pilot of `pilot` sweeps,
  // extended to 20 integrated autocorrelation times of H.
  std::int64_t burn_in = -1;
  std::int64_t samples = 1000;
  std::int64_t thinning = 1;
  std::int64_t pilot = 200;

  friend bool operator==(const Schedule&, const Schedule&) = default;

  void validate() const {
    if (samples < 0) throw ConfigError("samples must be >= 0");
    if (thinning < 1) throw ConfigError("thinning must be >= 1");
    if (burn_in < 0 && pilot < 8) throw ConfigError("automatic burn-in needs a pilot of >= 8 sweeps");
  }
};

inline std::vector<std::string> observable_names(int dim) {
  std::vector<std::string> v = {"H", "Htilde", "diam", "volume"};
  for (int i = 1; i <= dim; ++i) v.push_back("ext" + std::to_string(i));
  v.push_back("conditioned_ok");
  return v;
}

inline std::vector<double> column(const std::vector<Sample>& trace, const std::string& name) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& s : trace) {
    if (name == "H") out.push_back(s.H);
    else if (name == "Htilde") out.push_back(s.Htilde);
    else if (name == "diam") out.push_back(s.diam);
    else if (name == "volume") out.push_back(s.volume);
    else if (name == "conditioned_ok") out.push_back(s.conditioned_ok);
    else if (name.rfind("ext", 0) == 0) {
      const auto i = static_cast<std::size_t>(std::stoi(name.substr(3)) - 1);
      out.push_back(i < s.extents.size() ? static_cast<double>(s.extents[i]) : std::numeric_limits<double>::quiet_NaN());
    } else {
      throw ConfigError("unknown observable '" + name + "'");
    }
  }
  return out;
}

template <int D>
struct ChainResult {
  std::vector<Sample> trace;
  std::map<std::string, Summary> summary;
  MoveStats moves;
  std::int64_t burn_in_used = 0;
  std::size_t jumps = 0;
  SiteSet<D> final_range;
  bool heuristic = false;
};

inline std::map<std::string, Summary> summarize_trace(const std::vector<Sample>& trace, int dim) {
  std::map<std::string, Summary> out;
  if (trace.empty()) return out;
  for (const auto& name : observable_names(dim)) {
    const auto col = column(trace, name);
    if (std::isnan(col.front())) continue;
    out[name] = summarize(col);
  }
  return out;
}

template <int D>
ChainResult<D> run_chain(Chain<D>& chain, const Schedule& schedule) {
  schedule.validate();
  ChainResult<D> res;
  const auto& config = chain.config();
  std::int64_t burn = schedule.burn_in;
  if (burn < 0) {
    std::vector<double> pilot;
    pilot.reserve(static_cast<std::size_t>(schedule.pilot));
    for (std::int64_t i = 0; i < schedule.pilot; ++i) {
      chain.sweep();
      pilot.push_back(static_cast<double>(chain.state().range.boundary_size()));
    }
    const double tau = integrated_autocorrelation_time(pilot);
    const auto extra = static_cast<std::int64_t>(std::ceil(20.0 * tau)) - schedule.pilot;
    for (std::int64_t i = 0; i < extra; ++i) chain.sweep();
    burn = schedule.pilot + std::max<std::int64_t>(extra, 0);
  } else {
    for (std::int64_t i = 0; i < burn; ++i) chain.sweep();
  }
  res.burn_in_used = burn;
  std::uint64_t sweep = static_cast<std::uint64_t>(burn);
  res.trace.reserve(static_cast<std::size_t>(schedule.samples));
  for (std::int64_t s = 0; s < schedule.samples; ++s) {
    for (std::int64_t t = 0; t < schedule.thinning; ++t) {
      chain.sweep();
      ++sweep;
    }
    res.trace.push_back(observe<D>(chain.state(), config, sweep));
  }
  res.summary = summarize_trace(res.trace, D);
  res.moves = chain.stats();
  res.jumps = chain.state().steps();
  const std::vector<Site<D>> pos(chain.state().positions.begin(), chain.state().positions.end());
  res.final_range = normalize(SiteSet<D>(pos.begin(), pos.end()));
  res.heuristic = config.variant == HamiltonianVariant::ConditionedLocalTime;
  return res;
}

template <int D>
ChainResult<D> run_chain(const GibbsConfig& config, const MoveMix& mix, const Schedule& schedule, std::uint64_t seed,
                         const ChainOptions& opt = {}) {
  Chain<D> chain(config, mix, seed, opt);
  return run_chain<D>(chain, schedule);
}

inline void write_trace_csv(std::ostream& os, const std::vector<Sample>& trace, int dim) {
  os << "sweep,H,Htilde,diam,volume";
  for (int i = 1; i <= dim; ++i) os << ",ext" << i;
  os << ",conditioned_ok\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& s : trace) {
    os << s.sweep << ',' << num(s.H) << ',' << num(s.Htilde) << ',' << num(s.diam) << ',' << num(s.volume);
    for (auto e : s.extents) os << ',' << e;
    os << ',' << num(s.conditioned_ok) << '\n';
  }
}

enum class ConditionedMethod { Rejection, ConstrainedMCMC };

struct ConditionedOptions {
  std::int64_t samples = 1000;
  // Rejection: attempts per accepted sample are capped at 1/floor.
  double acceptance_floor = 1e-4;
  std::int64_t pilot_trials = 20000;
  MoveMix mix{0.5, 0.0, 0.3, 0.2, 0.0};
  Schedule schedule{};
};

template <int D>
struct ConditionedResult {
  std::vector<Sample> trace;
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  std::uint64_t tally = 0;  // accepted walks for which the tally predicate held
  bool heuristic = false;
};

// Walks conditioned on every visited site collecting local time >= beta.
template <int D>
ConditionedResult<D> conditioned_sample(const GibbsConfig& config, ConditionedMethod method, std::uint64_t seed,
                                        const ConditionedOptions& opt = {},
                                        const std::function<bool(const OccupationField<D>&)>& tally = {}) {
  config.validate();
  if (config.variant != HamiltonianVariant::ConditionedLocalTime) throw ConfigError("conditioned_sample needs the conditioned variant");
  if (config.horizon < config.beta) {
    throw ResourceError("conditioned event is empty for t < beta (acceptance 0): every site would need local time >= beta > t");
  }
  ConditionedResult<D> res;
  if (method == ConditionedMethod::ConstrainedMCMC) {
    auto chain_res = run_chain<D>(config, opt.mix, opt.schedule, seed);
    res.trace = std::move(chain_res.trace);
    res.trials = res.accepted = res.trace.size();
    res.heuristic = true;
    return res;
  }
  Engine rng = make_engine(seed);
  const auto max_trials = static_cast<std::uint64_t>(
      std::max<double>(static_cast<double>(opt.pilot_trials), static_cast<double>(opt.samples) / opt.acceptance_floor));
  while (res.accepted < static_cast<std::uint64_t>(opt.samples) && res.trials < max_trials) {
    const auto path = simulate_ctrw<D>(config.horizon, rng);
    const auto field = occupation(path);
    ++res.trials;
    if (res.trials == static_cast<std::uint64_t>(opt.pilot_trials) &&
        static_cast<double>(res.accepted) < opt.acceptance_floor * static_cast<double>(res.trials)) {
      throw ResourceError("rejection acceptance " + std::to_string(static_cast<double>(res.accepted) / static_cast<double>(res.trials)) +
                          " is below the floor; use the constrained MCMC method");
    }
    if (energy(field, HamiltonianVariant::ConditionedLocalTime, config.beta) == 0.0) continue;
    ++res.accepted;
    if (tally && tally(field)) ++res.tally;
    Sample s;
    s.sweep = res.trials;
    s.H = static_cast<double>(field.inner_boundary_size());
    s.Htilde = energy(field, HamiltonianVariant::BoundaryLocalTime);
    const auto vis = field.visited();
    s.diam = diameter<D>(vis);
    s.volume = static_cast<double>(vis.size());
    const auto ext = bounding_extents<D>(vis);
    s.extents.assign(ext.begin(), ext.end());
    s.conditioned_ok = 1.0;
    res.trace.push_back(std::move(s));
  }
  return res;
}

}  // namespace wulff
