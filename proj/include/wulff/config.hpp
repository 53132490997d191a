#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wulff/error.hpp"
#include "wulff/gibbs.hpp"
#include "wulff/mcmc.hpp"
#include "wulff/scaling.hpp"

#ifndef WULFF_VERSION
#define WULFF_VERSION "0.1.0"
#endif

namespace wulff {

inline constexpr std::string_view kVersion = WULFF_VERSION;

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Flat "key = value" text; '#' starts a comment, blank lines are skipped.
inline KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
    if (!kv.emplace(key, value).second) throw ConfigError("config key '" + key + "' appears twice");
  }
  return kv;
}

inline std::string emit_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  return x;
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  return x;
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &used, 0);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
  if (used != v.size() || v.front() == '-') throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + v + "'");
  return x;
}

inline std::string_view init_name(InitKind k) { return k == InitKind::Compact ? "compact" : "random-walk"; }

inline InitKind parse_init(std::string_view s) {
  if (s == "compact") return InitKind::Compact;
  if (s == "random-walk") return InitKind::RandomWalk;
  throw ConfigError("unknown initial state '" + std::string(s) + "' (expected random-walk or compact)");
}

// Everything a sampling run depends on.
struct RunConfig {
  GibbsConfig gibbs{2, 1.0, 1000.0, HamiltonianVariant::BoundarySize, Ensemble::DiscreteSkeleton};
  MoveMix mix;
  Schedule schedule;
  std::uint64_t seed = 1;
  InitKind init = InitKind::Compact;
  std::size_t segment_max = 512;
  int threads = 1;

  ChainOptions chain_options() const {
    ChainOptions o;
    o.init = init;
    o.segment_max = segment_max;
    return o;
  }

  void validate() const {
    gibbs.validate();
    mix.validate();
    schedule.validate();
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline KeyValues to_key_values(const RunConfig& c) {
  return {
      {"dim", std::to_string(c.gibbs.dim)},
      {"beta", format_double(c.gibbs.beta)},
      {"horizon_time", format_double(c.gibbs.horizon)},
      {"variant", std::string(variant_name(c.gibbs.variant))},
      {"ensemble", std::string(ensemble_name(c.gibbs.ensemble))},
      {"moves", c.mix.to_string()},
      {"burn_in_sweeps", std::to_string(c.schedule.burn_in)},
      {"samples", std::to_string(c.schedule.samples)},
      {"thinning_sweeps", std::to_string(c.schedule.thinning)},
      {"pilot_sweeps", std::to_string(c.schedule.pilot)},
      {"seed", std::to_string(c.seed)},
      {"init", std::string(init_name(c.init))},
      {"segment_max_steps", std::to_string(c.segment_max)},
      {"threads", std::to_string(c.threads)},
  };
}

// Applies the keys present in `kv` on top of `base`; unknown keys are errors.
inline RunConfig apply_key_values(RunConfig c, const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "dim") c.gibbs.dim = static_cast<int>(parse_int(k, v));
    else if (k == "beta") c.gibbs.beta = parse_double(k, v);
    else if (k == "horizon_time") c.gibbs.horizon = parse_double(k, v);
    else if (k == "variant") c.gibbs.variant = parse_variant(v);
    else if (k == "ensemble") c.gibbs.ensemble = parse_ensemble(v);
    else if (k == "moves") c.mix = MoveMix::parse(v);
    else if (k == "burn_in_sweeps") c.schedule.burn_in = parse_int(k, v);
    else if (k == "samples") c.schedule.samples = parse_int(k, v);
    else if (k == "thinning_sweeps") c.schedule.thinning = parse_int(k, v);
    else if (k == "pilot_sweeps") c.schedule.pilot = parse_int(k, v);
    else if (k == "seed") c.seed = parse_seed(k, v);
    else if (k == "init") c.init = parse_init(v);
    else if (k == "segment_max_steps") {
      const auto m = parse_int(k, v);
      if (m < 0) throw ConfigError("segment_max_steps must be >= 0");
      c.segment_max = static_cast<std::size_t>(m);
    }
    else if (k == "threads") c.threads = static_cast<int>(parse_int(k, v));
    else throw ConfigError("unknown config key '" + k + "'");
  }
  return c;
}

inline RunConfig parse_run_config(std::string_view text, const RunConfig& base = {}) {
  auto c = apply_key_values(base, parse_key_values(text));
  c.validate();
  return c;
}

inline std::string emit_run_config(const RunConfig& c) { return emit_key_values(to_key_values(c)); }

// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string verb;
  KeyValues config;
  std::vector<std::uint64_t> seeds;
  std::string version{kVersion};
  std::string timestamp;
  std::map<std::string, std::string> outputs;  // file name -> FNV-1a of its bytes

  // Hash over every output hash, the one value artifacts carry.
  std::string content_hash() const {
    std::string all;
    for (const auto& [name, h] : outputs) all += name + ":" + h + "\n";
    return hex64(fnv1a64(all));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["verb"] = verb;
    j["config"] = config;
    j["seeds"] = seeds;
    j["version"] = version;
    j["timestamp"] = timestamp;
    j["outputs"] = outputs;
    j["content_hash"] = content_hash();
    return j;
  }

  static Manifest from_json(const nlohmann::json& j) {
    Manifest m;
    m.verb = j.at("verb").get<std::string>();
    m.config = j.at("config").get<KeyValues>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.version = j.at("version").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    return m;
  }

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline nlohmann::json number_json(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline double json_number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["dim"] = r.config.dim;
  j["beta"] = r.config.beta;
  j["horizon_time"] = r.config.horizon;
  j["variant"] = variant_name(r.config.variant);
  j["ensemble"] = ensemble_name(r.config.ensemble);
  j["seed"] = r.seed;
  j["moves"] = r.mix.to_string();
  j["burn_in_sweeps"] = r.schedule.burn_in;
  j["samples"] = r.schedule.samples;
  j["thinning_sweeps"] = r.schedule.thinning;
  j["pilot_sweeps"] = r.schedule.pilot;
  j["burn_in_used"] = r.burn_in_used;
  j["ok"] = r.ok();
  j["error"] = r.error;
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [name, s] : r.summary) {
    summary[name] = {{"mean", number_json(s.mean)}, {"se", number_json(s.se)}, {"iat", number_json(s.iat)},
                     {"ess", number_json(s.ess)}, {"samples", s.samples}};
  }
  j["summary"] = summary;
  j["min_extent"] = r.min_extent;
  j["snapshot"] = r.snapshot;
  return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  try {
    r.config.dim = j.at("dim").get<int>();
    r.config.beta = j.at("beta").get<double>();
    r.config.horizon = j.at("horizon_time").get<double>();
    r.config.variant = parse_variant(j.at("variant").get<std::string>());
    r.config.ensemble = parse_ensemble(j.at("ensemble").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mix = MoveMix::parse(j.at("moves").get<std::string>());
    r.schedule.burn_in = j.at("burn_in_sweeps").get<std::int64_t>();
    r.schedule.samples = j.at("samples").get<std::int64_t>();
    r.schedule.thinning = j.at("thinning_sweeps").get<std::int64_t>();
    r.schedule.pilot = j.at("pilot_sweeps").get<std::int64_t>();
    r.burn_in_used = j.at("burn_in_used").get<std::int64_t>();
    r.error = j.at("error").get<std::string>();
    for (const auto& [name, s] : j.at("summary").items()) {
      r.summary[name] = Summary{json_number(s.at("mean")), json_number(s.at("se")), json_number(s.at("iat")), json_number(s.at("ess")),
                                s.at("samples").get<std::size_t>()};
    }
    r.min_extent = j.at("min_extent").get<std::vector<double>>();
    r.snapshot = j.at("snapshot").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run record: ") + e.what());
  }
  return r;
}

// One JSON record per line.
inline std::vector<RunRecord> read_records(std::istream& in) {
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("record line is not JSON: ") + e.what());
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

}  // namespace wulff
