#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "wulff/error.hpp"
#include "wulff/lattice.hpp"

namespace wulff {

enum class HamiltonianVariant {
  BoundarySize,          // H = |dR_t|
  BoundaryLocalTime,     // H~ = sum of L_t(x) over x in dR_t
  ConditionedLocalTime,  // indicator of {L_t(x) >= beta for all x in R_t}
};

enum class Ensemble {
  DiscreteSkeleton,  // n uniform steps
  ContinuousTime,    // rate-1 exponential holds, horizon t
};

inline std::string_view variant_name(HamiltonianVariant v) {
  switch (v) {
    case HamiltonianVariant::BoundarySize: return "boundary";
    case HamiltonianVariant::BoundaryLocalTime: return "boundary-local-time";
    case HamiltonianVariant::ConditionedLocalTime: return "conditioned";
  }
  return "?";
}

inline HamiltonianVariant parse_variant(std::string_view s) {
  if (s == "boundary") return HamiltonianVariant::BoundarySize;
  if (s == "boundary-local-time") return HamiltonianVariant::BoundaryLocalTime;
  if (s == "conditioned") return HamiltonianVariant::ConditionedLocalTime;
  throw ConfigError("unknown Hamiltonian variant '" + std::string(s) + "'");
}

inline std::string_view ensemble_name(Ensemble e) {
  return e == Ensemble::DiscreteSkeleton ? "discrete" : "continuous";
}

inline Ensemble parse_ensemble(std::string_view s) {
  if (s == "discrete") return Ensemble::DiscreteSkeleton;
  if (s == "continuous") return Ensemble::ContinuousTime;
  throw ConfigError("unknown ensemble '" + std::string(s) + "'");
}

struct GibbsConfig {
  int dim = 2;
  double beta = 1.0;
  // Step count n for DiscreteSkeleton, time t for ContinuousTime.
  double horizon = 1.0;
  HamiltonianVariant variant = HamiltonianVariant::BoundarySize;
  Ensemble ensemble = Ensemble::DiscreteSkeleton;

  // Number of skeleton steps; only meaningful for DiscreteSkeleton.
  std::int64_t steps() const { return static_cast<std::int64_t>(std::llround(horizon)); }

  void validate() const {
    if (dim < 1) throw ConfigError("dimension must be >= 1");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be finite and >= 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
    if (ensemble == Ensemble::DiscreteSkeleton && std::abs(horizon - std::round(horizon)) > 1e-9) {
      throw ConfigError("discrete ensemble needs an integer step count");
    }
    if (variant != HamiltonianVariant::BoundarySize && ensemble != Ensemble::ContinuousTime) {
      throw ConfigError(std::string(variant_name(variant)) + " requires the continuous-time ensemble");
    }
  }

  friend bool operator==(const GibbsConfig&, const GibbsConfig&) = default;
};

// Energy of an occupation field. For the conditioned variant the value is
// the indicator of the event (1 when every visited site has local time at
// least beta), not an energy.
template <int D>
double energy(const OccupationField<D>& field, HamiltonianVariant variant, double beta = 0.0) {
  switch (variant) {
    case HamiltonianVariant::BoundarySize:
      return static_cast<double>(field.inner_boundary_size());
    case HamiltonianVariant::BoundaryLocalTime: {
      double s = 0.0;
      for (const auto& [x, t] : field.local_times()) {
        if (field.is_boundary(x)) s += t;
      }
      return s;
    }
    case HamiltonianVariant::ConditionedLocalTime: {
      for (const auto& [x, t] : field.local_times()) {
        if (t < beta) return 0.0;
      }
      return 1.0;
    }
  }
  return 0.0;
}

// Unnormalised Gibbs weight exp(-beta * energy), or the event indicator for
// the conditioned variant.
template <int D>
double gibbs_weight(const OccupationField<D>& field, const GibbsConfig& config) {
  const double e = energy(field, config.variant, config.beta);
  if (config.variant == HamiltonianVariant::ConditionedLocalTime) return e;
  return std::exp(-config.beta * e);
}

}  // namespace wulff
