#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wulff/wulff.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wulff;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;
constexpr int kExitDomain = 4;
constexpr int kExitNumerical = 5;

std::string fmt(double x) { return format_double(x); }

template <class F>
auto with_dim(int dim, F&& f) {
  switch (dim) {
    case 1: return f(std::integral_constant<int, 1>{});
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
  }
  throw ConfigError("dimension " + std::to_string(dim) + " is not built in (use 1, 2 or 3)");
}

template <class F>
auto with_tilted_dim(int dim, F&& f) {
  switch (dim) {
    case 2: return f(std::integral_constant<int, 2>{});
    case 3: return f(std::integral_constant<int, 3>{});
  }
  throw ConfigError("tilted chain runs in dimension 2 or 3");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(parse_double("list", t));
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

template <int D>
Site<D> parse_site(const std::string& text) {
  const auto v = parse_list(text);
  if (v.size() != static_cast<std::size_t>(D)) throw ConfigError("site '" + text + "' needs " + std::to_string(D) + " coordinates");
  Site<D> x{};
  for (int i = 0; i < D; ++i) x[i] = static_cast<std::int32_t>(v[static_cast<std::size_t>(i)]);
  return x;
}

// Output directory of one invocation, named by a hash of the verb and its
// configuration so that reruns land in the same place.
class RunDir {
 public:
  RunDir(const std::string& root_flag, const std::string& verb, const std::string& identity) {
    fs::path root = root_flag;
    if (root.empty()) {
      const char* env = std::getenv("WULFF_RUN_DIR");
      root = env && *env ? env : "runs";
    }
    path_ = root / (verb + "-" + hex64(fnv1a64(verb + "\n" + identity)).substr(0, 12));
    fs::create_directories(path_);
    manifest_.verb = verb;
    manifest_.timestamp = utc_timestamp();
  }

  Manifest& manifest() { return manifest_; }
  const fs::path& path() const { return path_; }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = path_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw Error("cannot write " + p.string());
    manifest_.outputs[name] = hex64(fnv1a64(content));
  }

  void finish() {
    const fs::path p = path_ / "manifest.json";
    std::ofstream out(p);
    out << manifest_.to_json().dump(2) << "\n";
    if (!out) throw Error("cannot write " + p.string());
    std::cout << "manifest: " << p.string() << "\n";
  }

 private:
  fs::path path_;
  Manifest manifest_;
};

// Flags that map one-to-one onto config keys; given flags override the file.
class ConfigFlags {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    opts_.emplace_back(app->add_option(flag, store_[key], help), key);
  }

  RunConfig resolve(const std::string& file, KeyValues extra = {}) const {
    RunConfig base;
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw ConfigError("cannot read config file '" + file + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      base = parse_run_config(ss.str());
    }
    KeyValues kv = std::move(extra);
    for (const auto& [opt, key] : opts_) {
      if (opt->count()) kv[key] = store_.at(key);
    }
    auto rc = apply_key_values(base, kv);
    rc.validate();
    return rc;
  }

 private:
  std::map<std::string, std::string> store_;
  std::vector<std::pair<CLI::Option*, std::string>> opts_;
};

void add_chain_flags(CLI::App* app, ConfigFlags& f, bool with_point) {
  f.add(app, "--dim", "dim", "lattice dimension");
  if (with_point) {
    f.add(app, "--beta", "beta", "inverse temperature");
    f.add(app, "--horizon-time", "horizon_time", "time horizon t (continuous ensemble)");
  }
  f.add(app, "--variant", "variant", "boundary | boundary-local-time | conditioned");
  f.add(app, "--ensemble", "ensemble", "discrete | continuous");
  f.add(app, "--moves", "moves", "move mix, e.g. heat-bath=0.45,pivot=0.05,reptation=0.3,segment=0.2");
  f.add(app, "--burn-in", "burn_in_sweeps", "burn-in sweeps (negative: automatic)");
  f.add(app, "--samples", "samples", "recorded samples");
  f.add(app, "--thinning", "thinning_sweeps", "sweeps between samples");
  f.add(app, "--pilot", "pilot_sweeps", "pilot sweeps for automatic burn-in");
  f.add(app, "--seed", "seed", "master seed");
  f.add(app, "--init", "init", "compact | random-walk");
  f.add(app, "--segment-max", "segment_max_steps", "longest sub-path moved by a segment or pivot move (0: whole path)");
  f.add(app, "--threads", "threads", "worker threads");
}

json summary_json(const std::map<std::string, Summary>& s) {
  json j = json::object();
  for (const auto& [name, v] : s) {
    j[name] = {{"mean", number_json(v.mean)}, {"se", number_json(v.se)}, {"iat", number_json(v.iat)}, {"ess", number_json(v.ess)},
               {"samples", v.samples}};
  }
  return j;
}

json move_json(const MoveStats& m) {
  json j = json::object();
  for (int i = 0; i < kNumMoves; ++i) {
    const auto k = static_cast<std::size_t>(i);
    j[std::string(move_name(static_cast<Move>(i)))] = {{"attempted", m.attempted[k]}, {"accepted", m.accepted[k]}, {"skipped", m.skipped[k]}};
  }
  return j;
}

// ---- sample ----

int cmd_sample(const RunConfig& rc, bool snapshot, const std::string& out_root) {
  RunDir dir(out_root, "sample", emit_run_config(rc) + (snapshot ? "snapshot\n" : ""));
  dir.manifest().config = to_key_values(rc);
  dir.manifest().seeds = {rc.seed};
  dir.write("config.txt", emit_run_config(rc));
  with_dim(rc.gibbs.dim, [&](auto tag) {
    constexpr int D = decltype(tag)::value;
    const auto res = run_chain<D>(rc.gibbs, rc.mix, rc.schedule, rc.seed, rc.chain_options());
    std::ostringstream trace;
    write_trace_csv(trace, res.trace, D);
    dir.write("trace.csv", trace.str());
    json j;
    j["summary"] = summary_json(res.summary);
    j["burn_in_used"] = res.burn_in_used;
    j["jumps"] = res.jumps;
    j["moves"] = move_json(res.moves);
    j["heuristic"] = res.heuristic;
    j["final_range_size"] = res.final_range.size();
    dir.write("summary.json", j.dump(2) + "\n");
    if (snapshot) {
      std::ostringstream s;
      write_snapshot<D>(s, res.final_range);
      dir.write("snapshot.txt", s.str());
    }
    std::printf("burn-in %lld sweeps, %zu samples\n", static_cast<long long>(res.burn_in_used), res.trace.size());
    for (const auto& [name, v] : res.summary) {
      std::printf("%-14s mean %-12.6g se %-10.4g iat %-8.3g ess %.4g\n", name.c_str(), v.mean, v.se, v.iat, v.ess);
    }
    return 0;
  });
  dir.finish();
  return 0;
}

// ---- sweep ----

int cmd_sweep(const RunConfig& rc, const std::vector<double>& horizons, const std::vector<double>& betas, bool snapshot,
              std::int64_t extent_threshold, const std::string& out_root) {
  std::vector<GibbsConfig> grid;
  std::vector<std::uint64_t> seeds;
  for (double t : horizons) {
    for (double b : betas) {
      GibbsConfig c = rc.gibbs;
      c.horizon = t;
      c.beta = b;
      c.validate();
      seeds.push_back(stream_seed(rc.seed, grid.size()));
      grid.push_back(c);
    }
  }
  std::string identity = emit_run_config(rc);
  for (const auto& c : grid) identity += fmt(c.horizon) + "/" + fmt(c.beta) + ";";
  identity += snapshot ? "snapshot" : "";
  RunDir dir(out_root, "sweep", identity + std::to_string(extent_threshold));
  dir.manifest().config = to_key_values(rc);
  dir.manifest().seeds = seeds;
  dir.write("config.txt", emit_run_config(rc));
  const auto records = with_dim(rc.gibbs.dim, [&](auto tag) {
    constexpr int D = decltype(tag)::value;
    return sweep<D>(grid, rc.mix, rc.schedule, seeds, rc.threads, snapshot, rc.chain_options());
  });
  std::string jsonl;
  std::ostringstream csv;
  csv << "index,dim,horizon_time,beta,seed,ok,burn_in_used,H_mean,H_se,diam_mean,diam_se,volume_mean,volume_se,error\n";
  std::printf("%5s %12s %8s %10s %10s %10s %s\n", "index", "horizon", "beta", "H", "diam", "volume", "status");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    jsonl += record_to_json(r).dump() + "\n";
    auto get = [&](const char* obs, bool se) {
      auto it = r.summary.find(obs);
      return it == r.summary.end() ? std::string("nan") : fmt(se ? it->second.se : it->second.mean);
    };
    std::string err = r.error;
    for (auto& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    csv << i << ',' << r.config.dim << ',' << fmt(r.config.horizon) << ',' << fmt(r.config.beta) << ',' << r.seed << ',' << (r.ok() ? 1 : 0)
        << ',' << r.burn_in_used << ',' << get("H", false) << ',' << get("H", true) << ',' << get("diam", false) << ','
        << get("diam", true) << ',' << get("volume", false) << ',' << get("volume", true) << ',' << err << "\n";
    if (r.ok()) {
      std::printf("%5zu %12g %8g %10.4f %10.4f %10.2f ok\n", i, r.config.horizon, r.config.beta, r.mean("H"), r.mean("diam"), r.mean("volume"));
    } else {
      std::printf("%5zu %12g %8g %10s %10s %10s failed: %s\n", i, r.config.horizon, r.config.beta, "-", "-", "-", r.error.c_str());
    }
    if (snapshot && r.ok()) dir.write("snapshots/point-" + std::to_string(i) + ".txt", r.snapshot);
  }
  dir.write("records.jsonl", jsonl);
  dir.write("sweep.csv", csv.str());
  if (extent_threshold >= 0) {
    std::ostringstream tail;
    tail << "horizon_time,beta,n,hits,samples,probability,wilson_lo,wilson_hi,log_confinement\n";
    for (const auto& row : extent_tail_check(records, extent_threshold)) {
      tail << fmt(row.t) << ',' << fmt(row.beta) << ',' << row.n << ',' << row.hits << ',' << row.samples << ',' << fmt(row.probability)
           << ',' << fmt(row.wilson_lo) << ',' << fmt(row.wilson_hi) << ',' << fmt(row.log_confinement) << "\n";
    }
    dir.write("extent_tail.csv", tail.str());
  }
  dir.finish();
  return 0;
}

// ---- oracle ----

int cmd_oracle(int dim, double beta, double steps, double horizon, int k_max, double tolerance, bool cross_check, int threads,
               const std::string& out_root) {
  const bool continuous = horizon > 0.0;
  if (continuous == (steps > 0.0)) throw ConfigError("give exactly one of --steps (discrete) or --horizon-time (continuous)");
  GibbsConfig c{dim, beta, continuous ? horizon : steps, HamiltonianVariant::BoundarySize,
                continuous ? Ensemble::ContinuousTime : Ensemble::DiscreteSkeleton};
  c.validate();
  const std::string identity = "dim=" + std::to_string(dim) + " beta=" + fmt(beta) + " horizon=" + fmt(c.horizon) +
                               (continuous ? " k_max=" + std::to_string(k_max) + " tol=" + fmt(tolerance) : std::string()) +
                               (cross_check ? " cross" : "");
  RunDir dir(out_root, "oracle", identity);
  dir.manifest().config = {{"dim", std::to_string(dim)}, {"beta", fmt(beta)}, {"horizon_time", fmt(c.horizon)},
                           {"ensemble", std::string(ensemble_name(c.ensemble))}};
  const auto res = with_dim(dim, [&](auto tag) {
    constexpr int D = decltype(tag)::value;
    return continuous ? Z_continuous_smallt<D>(c, k_max, tolerance) : enumerate_Z_discrete<D>(c, threads);
  });
  json j;
  j["Z"] = res.Z;
  j["logZ"] = res.logZ;
  j["expectations"] = res.expectations;
  j["paths"] = res.paths;
  j["min_H"] = res.min_H;
  j["tail_bound"] = res.tail_bound;
  std::printf("Z = %.17g\nln Z = %.17g\n", res.Z, res.logZ);
  for (const auto& [k, v] : res.expectations) std::printf("E[%s] = %.17g\n", k.c_str(), v);
  if (continuous) std::printf("truncated mass <= %.3g\n", res.tail_bound);
  if (cross_check) {
    if (continuous) throw ConfigError("--cross-check applies to the discrete oracle");
    const bool same = with_dim(dim, [&](auto tag) {
      constexpr int D = decltype(tag)::value;
      const int n = static_cast<int>(c.steps());
      check_oracle_budget(D, n);
      return enumerate_iterative<D>(n) == enumerate_recursive<D>(n);
    });
    j["implementations_agree"] = same;
    std::printf("iterative and recursive enumerations agree: %s\n", same ? "yes" : "NO");
  }
  dir.write("oracle.json", j.dump(2) + "\n");
  dir.finish();
  return 0;
}

// ---- isoperimetry ----

int cmd_isoperimetry(int dim, int max_size, int random_count, int random_size, std::uint64_t seed, const std::string& out_root) {
  RunDir dir(out_root, "isoperimetry",
             "dim=" + std::to_string(dim) + " max=" + std::to_string(max_size) + " random=" + std::to_string(random_count) + "x" +
                 std::to_string(random_size) + " seed=" + std::to_string(seed));
  dir.manifest().config = {{"dim", std::to_string(dim)}, {"max_size", std::to_string(max_size)},
                           {"random_count", std::to_string(random_count)}, {"random_size", std::to_string(random_size)}};
  dir.manifest().seeds = {seed};
  const char* header = "size,id,inner_boundary,outer_vertex,outer_edges,hull_outer_vertex,rectangle_ok,volume_ok,loomis_whitney_ok,edge_chain_ok\n";
  auto row = [](std::ostringstream& os, const AnimalReport& r) {
    os << r.size << ',' << r.id << ',' << r.inner_boundary << ',' << r.outer_vertex << ',' << r.outer_edges << ',' << r.hull_outer_vertex
       << ',' << r.rectangle_ok << ',' << r.volume_ok << ',' << r.loomis_whitney_ok << ',' << r.edge_chain_ok << "\n";
  };
  with_dim(dim, [&](auto tag) {
    constexpr int D = decltype(tag)::value;
    struct Tally {
      std::uint64_t count = 0, rect = 0, vol = 0, lw = 0, edge = 0;
    };
    std::map<std::size_t, Tally> tally;
    std::ostringstream csv;
    csv << header;
    enumerate_animals<D>(max_size, [&](const Polyomino<D>& a, std::size_t id) {
      const auto r = analyze_animal<D>(a, id);
      row(csv, r);
      auto& t = tally[r.size];
      ++t.count;
      t.rect += !r.rectangle_ok;
      t.vol += !r.volume_ok;
      t.lw += !r.loomis_whitney_ok;
      t.edge += !r.edge_chain_ok;
    });
    dir.write("animals.csv", csv.str());
    std::printf("%5s %10s %12s %12s %12s %12s\n", "size", "animals", "rectangle", "volume", "projection", "edge-chain");
    for (const auto& [size, t] : tally) {
      std::printf("%5zu %10llu %12llu %12llu %12llu %12llu\n", size, static_cast<unsigned long long>(t.count),
                  static_cast<unsigned long long>(t.rect), static_cast<unsigned long long>(t.vol), static_cast<unsigned long long>(t.lw),
                  static_cast<unsigned long long>(t.edge));
    }
    std::printf("(columns after 'animals' count violations)\n");
    const SiteSet<D> single{Site<D>::origin()};
    const auto v1 = check_volume_lemma<D>(single);
    std::printf("single site: |d*A| = %.0f vs (2d/(2d-1))|A|^{(d-1)/d} = %.6f -> %s\n", v1.lhs, v1.rhs,
                v1.holds ? "holds" : "fails (the volume inequality needs |A| >= 2)");
    if (random_count > 0) {
      Engine rng = make_engine(seed);
      std::ostringstream rcsv;
      rcsv << header;
      Tally t;
      for (int i = 0; i < random_count; ++i) {
        const auto r = analyze_animal<D>(canonical_form<D>(random_connected_growth<D>(random_size, rng)), static_cast<std::size_t>(i));
        row(rcsv, r);
        ++t.count;
        t.rect += !r.rectangle_ok;
        t.vol += !r.volume_ok;
        t.lw += !r.loomis_whitney_ok;
        t.edge += !r.edge_chain_ok;
      }
      dir.write("random_animals.csv", rcsv.str());
      std::printf("random size-%d animals: %llu checked, violations rectangle %llu volume %llu projection %llu edge-chain %llu\n",
                  random_size, static_cast<unsigned long long>(t.count), static_cast<unsigned long long>(t.rect),
                  static_cast<unsigned long long>(t.vol), static_cast<unsigned long long>(t.lw), static_cast<unsigned long long>(t.edge));
    }
    return 0;
  });
  dir.finish();
  return 0;
}

// ---- tilted ----

struct TiltedArgs {
  int dim = 2;
  int L = 8;
  double floor = 2.0;
  std::string kind = "smoothed";
  std::string x = "";
  std::string y = "";
  double t = 2.0;
  double beta = 1.0;
  std::string t_grid = "5,10,20,40,80";
  std::string deltas = "0.1,0.25,0.5";
  std::uint64_t runs = 20000;
  std::uint64_t seed = 1;
  double c_level = 10.0;
  double c_boundary = 10.0;
};

ProfileKind parse_kind(const std::string& k) {
  if (k == "smoothed") return ProfileKind::Smoothed;
  if (k == "flat") return ProfileKind::Flat;
  throw ConfigError("unknown profile kind '" + k + "' (expected smoothed or flat)");
}

std::string tilted_identity(const std::string& sub, const TiltedArgs& a) {
  std::ostringstream os;
  os << sub << " dim=" << a.dim << " L=" << a.L << " floor=" << fmt(a.floor) << " kind=" << a.kind << " x=" << a.x << " y=" << a.y
     << " t=" << fmt(a.t) << " beta=" << fmt(a.beta) << " grid=" << a.t_grid << " deltas=" << a.deltas << " runs=" << a.runs
     << " seed=" << a.seed << " c=" << fmt(a.c_level) << "/" << fmt(a.c_boundary);
  return os.str();
}

int cmd_tilted(const std::string& sub, const TiltedArgs& a, const std::string& out_root) {
  RunDir dir(out_root, "tilted-" + sub, tilted_identity(sub, a));
  dir.manifest().config = {{"subcommand", sub}, {"dim", std::to_string(a.dim)}, {"L", std::to_string(a.L)}, {"log_floor", fmt(a.floor)},
                           {"kind", a.kind}, {"runs", std::to_string(a.runs)}, {"horizon_time", fmt(a.t)}, {"beta", fmt(a.beta)}};
  dir.manifest().seeds = {a.seed};
  with_tilted_dim(a.dim, [&](auto tag) {
    constexpr int D = decltype(tag)::value;
    auto site_or = [&](const std::string& s, Site<D> dflt) { return s.empty() ? dflt : parse_site<D>(s); };
    if (sub == "good-event") {
      const auto r = good_event_experiment<D>(a.t, a.beta, a.runs, a.seed, a.c_level, a.c_boundary, a.floor);
      json j = {{"L", r.L}, {"freq_A", r.freq_A}, {"freq_B", r.freq_B}, {"freq_G", r.freq_G}, {"freq_A_r", r.freq_A_r},
                {"mean_boundary", r.mean_boundary}, {"mean_uncovered", r.mean_uncovered}, {"runs", r.runs}};
      dir.write("good_event.json", j.dump(2) + "\n");
      std::printf("L = %d\nP(A) = %.6f\nP(B) = %.6f\nP(A and B) = %.6f\nmean |dR| = %.3f (bound %.3f)\nmean uncovered support = %.3f\n", r.L,
                  r.freq_A, r.freq_B, r.freq_G, r.mean_boundary, a.c_boundary * std::pow(r.L, D - 1), r.mean_uncovered);
      return 0;
    }
    const auto p = build_profile<D>(a.L, a.floor, parse_kind(a.kind));
    if (sub == "profile") {
      const auto res = generator_residuals<D>(p);
      std::ostringstream csv;
      csv << "r,mu,shell,level_mass,p_up,p_down\n";
      for (int r = 0; r <= p.L; ++r) {
        const auto k = level_chain_kernel<D>(p, std::max(r, 1));
        csv << r << ',' << fmt(p.mu[static_cast<std::size_t>(r)]) << ',' << p.shell[static_cast<std::size_t>(r)] << ',' << fmt(p.level_mass(r))
            << ',' << fmt(r >= 1 ? k.p_up : 0.0) << ',' << fmt(r >= 1 ? k.p_down : 0.0) << "\n";
      }
      dir.write("profile.csv", csv.str());
      json j = {{"support_size", p.support_size()}, {"C", p.C}, {"monotone", p.monotone()}, {"detailed_balance", res.detailed_balance},
                {"stationarity", res.stationarity}, {"mass", res.mass}};
      dir.write("profile.json", j.dump(2) + "\n");
      std::printf("support %lld sites, C = %.6g, monotone: %s\nresiduals: detailed balance %.3g, stationarity %.3g, mass %.3g\n",
                  static_cast<long long>(p.support_size()), p.C, p.monotone() ? "yes" : "no", res.detailed_balance, res.stationarity, res.mass);
    } else if (sub == "gap") {
      const double B = canonical_path_bound<D>(p);
      json j = {{"B", B}, {"inverse_B", 1.0 / B}, {"B_over_L2", B / (a.L * a.L)}, {"flat_gap", flat_gap(a.L)}};
      std::printf("canonical-path B = %.6g (B/L^2 = %.4f), 1/B = %.6g\n", B, B / (a.L * a.L), 1.0 / B);
      if (p.support_size() <= 2500) {
        const double gap = spectral_gap<D>(p);
        j["gap"] = gap;
        j["gap_L2"] = gap * a.L * a.L;
        std::printf("spectral gap = %.10g (gap*L^2 = %.4f), gap >= 1/B: %s\n", gap, gap * a.L * a.L, gap >= 1.0 / B ? "yes" : "no");
      } else {
        std::printf("spectral gap skipped: support %lld > 2500 sites\n", static_cast<long long>(p.support_size()));
      }
      std::printf("flat-profile reference gap 2(1-cos(pi/(2L-1))) = %.10g\n", flat_gap(a.L));
      dir.write("gap.json", j.dump(2) + "\n");
    } else if (sub == "escape") {
      Site<D> dx{};
      dx[0] = a.L / 2;
      const auto y = site_or(a.y, Site<D>::origin());
      const auto x = site_or(a.x, dx);
      const auto e = escape_experiment<D>(p, y, x, a.runs, a.seed);
      json j = {{"p", e.p}, {"se", e.se}, {"predicted", e.predicted}, {"reff", e.reff}, {"w_y", e.w_y}};
      dir.write("escape.json", j.dump(2) + "\n");
      std::printf("simulated P_y[T_x < T_y+] = %.6f +- %.6f\n1/(w_y Reff) = %.6f (Reff %.6g, w_y %.6g)\nz = %.3f\n", e.p, e.se, e.predicted, e.reff,
                  e.w_y, e.se > 0 ? (e.p - e.predicted) / e.se : 0.0);
    } else if (sub == "hit") {
      Site<D> dx{};
      dx[0] = a.L / 2;
      const auto x = site_or(a.x, dx);
      const auto y = site_or(a.y, Site<D>::origin());
      const auto h = hitting_tail_experiment<D>(p, x, y, parse_list(a.t_grid), a.runs, a.seed);
      std::ostringstream csv;
      csv << "t,survival,wilson_lo,wilson_hi\n";
      for (std::size_t i = 0; i < h.t_grid.size(); ++i) csv << fmt(h.t_grid[i]) << ',' << fmt(h.survival[i]) << ',' << fmt(h.lo[i]) << ',' << fmt(h.hi[i]) << "\n";
      dir.write("hitting.csv", csv.str());
      dir.write("hitting.json", json{{"rate", h.rate}, {"reference", h.reference}, {"runs", h.runs}}.dump(2) + "\n");
      for (std::size_t i = 0; i < h.t_grid.size(); ++i) std::printf("t = %-10g P(T_y > t) = %.5f [%.5f, %.5f]\n", h.t_grid[i], h.survival[i], h.lo[i], h.hi[i]);
      std::printf("fitted rate %.6g, reference %.6g, ratio %.4f\n", h.rate, h.reference, h.reference > 0 ? h.rate / h.reference : 0.0);
    } else if (sub == "rn") {
      const auto start = site_or(a.x, Site<D>::origin());
      const auto cmp = change_of_measure_check<D>(p, a.t, a.runs, a.seed, start);
      std::ostringstream csv;
      csv << "event,tilted_mean,tilted_se,direct_mean,direct_se,z\n";
      for (const auto& c : cmp) {
        csv << c.event << ',' << fmt(c.tilted_mean) << ',' << fmt(c.tilted_se) << ',' << fmt(c.direct_mean) << ',' << fmt(c.direct_se) << ','
            << fmt(c.z) << "\n";
        std::printf("%-12s E_Q[w 1_A] = %.5f +- %.5f   P(A) = %.5f +- %.5f   z = %+.2f\n", c.event.c_str(), c.tilted_mean, c.tilted_se, c.direct_mean,
                    c.direct_se, c.z);
      }
      dir.write("rn.csv", csv.str());
    } else if (sub == "local-time") {
      const auto y = site_or(a.y, Site<D>::origin());
      const auto c = local_time_concentration_experiment<D>(p, y, a.t, parse_list(a.deltas), a.runs, a.seed);
      std::ostringstream csv;
      csv << "delta,probability,se\n";
      for (std::size_t i = 0; i < c.deltas.size(); ++i) {
        csv << fmt(c.deltas[i]) << ',' << fmt(c.deviation_probability[i]) << ',' << fmt(c.deviation_se[i]) << "\n";
        std::printf("P(|L(t,y)/(pi(y) t) - 1| >= %g) = %.5f +- %.5f\n", c.deltas[i], c.deviation_probability[i], c.deviation_se[i]);
      }
      std::printf("max |sum_y L(t,y) - t| = %.3g\n", c.max_conservation_error);
      dir.write("local_time.csv", csv.str());
    } else {
      throw ConfigError("unknown tilted subcommand '" + sub + "'");
    }
    return 0;
  });
  dir.finish();
  return 0;
}

// ---- fit ----

int cmd_fit(const std::string& input, const std::string& observable, std::uint64_t seed, const std::string& out_root) {
  fs::path in_path = input;
  if (fs::is_directory(in_path)) in_path /= "records.jsonl";
  std::ifstream in(in_path);
  if (!in) throw ConfigError("cannot read records from '" + in_path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::istringstream records_in(text);
  const auto records = read_records(records_in);
  const auto f = fit_exponent(records, observable, seed);
  RunDir dir(out_root, "fit", observable + " " + std::to_string(seed) + " " + hex64(fnv1a64(text)));
  dir.manifest().config = {{"input", in_path.string()}, {"observable", observable}, {"input_hash", hex64(fnv1a64(text))}};
  dir.manifest().seeds = {seed};
  json grid = json::array();
  for (const auto& [t, b] : f.grid) grid.push_back({t, b});
  json j = {{"observable", observable}, {"slope", f.slope}, {"intercept", f.intercept}, {"ci_lo", f.ci_lo}, {"ci_hi", f.ci_hi}, {"grid", grid}};
  dir.write("fit.json", j.dump(2) + "\n");
  std::printf("%s ~ (t/beta)^slope over %zu points\nslope = %.6f, 95%% bootstrap CI [%.6f, %.6f]\nintercept = %.6f\n", observable.c_str(),
              f.grid.size(), f.slope, f.ci_lo, f.ci_hi, f.intercept);
  dir.finish();
  return 0;
}

// ---- exit-bound ----

int cmd_exit_bound(int j_min, int j_max, int t_count, double t_scale, const std::string& out_root) {
  if (j_min < 2 || j_max < j_min) throw ConfigError("need 2 <= J-min <= J-max");
  if (t_count < 1 || !(t_scale > 0.0)) throw ConfigError("need t-count >= 1 and t-scale > 0");
  RunDir dir(out_root, "exit-bound",
             std::to_string(j_min) + ".." + std::to_string(j_max) + " x" + std::to_string(t_count) + " scale " + fmt(t_scale));
  dir.manifest().config = {{"J_min", std::to_string(j_min)}, {"J_max", std::to_string(j_max)}, {"t_count", std::to_string(t_count)},
                           {"t_scale", fmt(t_scale)}};
  std::ostringstream csv;
  csv << "J,t,worst_x,survival,bound,ok,interior_survival,interior_ok\n";
  int bad = 0, bad_interior = 0, total = 0;
  for (int J = j_min; J <= j_max; ++J) {
    for (int k = 1; k <= t_count; ++k) {
      const double t = k * t_scale * J * J;
      double worst = 0.0, worst_in = 0.0;
      int wx = 1;
      for (int x = 1; x <= J; ++x) {
        const double s = exit_prob_oracle(J, x, t);
        if (s > worst) {
          worst = s;
          wx = x;
        }
        if (x <= J - 1) worst_in = std::max(worst_in, survival_on_segment(J - 1, x, t));
      }
      const double b = exit_bound(J, t);
      const bool ok = worst <= b;
      const bool ok_in = worst_in <= b;
      bad += !ok;
      bad_interior += !ok_in;
      ++total;
      csv << J << ',' << fmt(t) << ',' << wx << ',' << fmt(worst) << ',' << fmt(b) << ',' << ok << ',' << fmt(worst_in) << ',' << ok_in << "\n";
    }
  }
  dir.write("exit_bound.csv", csv.str());
  std::printf("walk on {1..J}: %d of %d grid points violate P_x(T>t) <= J exp(-(1-cos(pi/J)) t)\n", bad, total);
  std::printf("walk on {1..J-1}: %d of %d grid points violate the same bound\n", bad_interior, total);
  dir.finish();
  return 0;
}

void print_error(const std::string& kind, const std::string& message, int code) {
  json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-penalized random walks: sampling, exact oracles and the tilted chain"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string out_root;
  app.add_option("--out-dir", out_root, "output root (default: $WULFF_RUN_DIR, else ./runs)");

  auto* sample = app.add_subcommand("sample", "run one Markov chain");
  ConfigFlags sample_flags;
  std::string sample_config;
  std::string sample_steps;
  bool sample_snapshot = false;
  sample->add_option("--config", sample_config, "key = value config file; flags override it");
  sample->add_option("--steps", sample_steps, "skeleton step count n (selects the discrete ensemble)");
  sample->add_flag("--snapshot", sample_snapshot, "write the final range as a site-set file");
  add_chain_flags(sample, sample_flags, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "run a grid of chains");
  ConfigFlags sweep_flags;
  std::string sweep_config, sweep_steps, sweep_horizons, sweep_betas = "1";
  bool sweep_snapshot = false;
  std::int64_t sweep_extent = -1;
  sweep_cmd->add_option("--config", sweep_config, "key = value config file; flags override it");
  sweep_cmd->add_option("--steps", sweep_steps, "comma-separated step counts (discrete ensemble)");
  sweep_cmd->add_option("--horizon-times", sweep_horizons, "comma-separated horizons (continuous ensemble)");
  sweep_cmd->add_option("--betas", sweep_betas, "comma-separated inverse temperatures");
  sweep_cmd->add_flag("--snapshot", sweep_snapshot, "write final ranges as site-set files");
  sweep_cmd->add_option("--extent-threshold", sweep_extent, "also tabulate P(min extent <= n)");
  add_chain_flags(sweep_cmd, sweep_flags, false);

  auto* oracle = app.add_subcommand("oracle", "exact partition function by enumeration");
  int o_dim = 2, o_kmax = 8, o_threads = 1;
  double o_beta = 1.0, o_steps = 0.0, o_horizon = 0.0, o_tol = 1e-6;
  bool o_cross = false;
  oracle->add_option("--dim", o_dim, "lattice dimension");
  oracle->add_option("--beta", o_beta, "inverse temperature");
  oracle->add_option("--steps", o_steps, "skeleton step count (discrete)");
  oracle->add_option("--horizon-time", o_horizon, "time horizon (continuous, truncated jump series)");
  oracle->add_option("--k-max", o_kmax, "largest jump count in the continuous series");
  oracle->add_option("--tolerance", o_tol, "largest allowed truncated mass");
  oracle->add_option("--threads", o_threads, "worker threads");
  oracle->add_flag("--cross-check", o_cross, "compare the iterative and recursive enumerations");

  auto* iso = app.add_subcommand("isoperimetry", "check the isoperimetric inequalities on lattice animals");
  int i_dim = 2, i_max = 8, i_rcount = 0, i_rsize = 50;
  std::uint64_t i_seed = 1;
  iso->add_option("--dim", i_dim, "lattice dimension");
  iso->add_option("--max-size", i_max, "largest animal size for exhaustive enumeration");
  iso->add_option("--random-count", i_rcount, "number of random Eden animals");
  iso->add_option("--random-size", i_rsize, "size of the random animals");
  iso->add_option("--seed", i_seed, "seed for random animals");

  auto* tilted = app.add_subcommand("tilted", "tilted chain experiments");
  tilted->require_subcommand(1);
  TiltedArgs ta;
  auto tilted_common = [&](CLI::App* s) {
    s->add_option("--dim", ta.dim, "lattice dimension (2 or 3)");
    s->add_option("--L", ta.L, "box size");
    s->add_option("--log-floor", ta.floor, "floor of the logarithmic smoothing");
    s->add_option("--kind", ta.kind, "smoothed | flat");
  };
  auto* t_profile = tilted->add_subcommand("profile", "profile, residuals and level chain");
  auto* t_gap = tilted->add_subcommand("gap", "spectral gap and canonical-path bound");
  auto* t_escape = tilted->add_subcommand("escape", "escape probability against effective resistance");
  auto* t_hit = tilted->add_subcommand("hit", "hitting-time tail");
  auto* t_rn = tilted->add_subcommand("rn", "change-of-measure check");
  auto* t_local = tilted->add_subcommand("local-time", "local-time concentration");
  auto* t_good = tilted->add_subcommand("good-event", "frequency of the good event");
  for (auto* s : {t_profile, t_gap, t_escape, t_hit, t_rn, t_local, t_good}) tilted_common(s);
  for (auto* s : {t_escape, t_hit, t_rn, t_local, t_good}) {
    s->add_option("--runs", ta.runs, "Monte Carlo runs");
    s->add_option("--seed", ta.seed, "seed");
  }
  for (auto* s : {t_escape, t_hit}) {
    s->add_option("--x", ta.x, "target site, comma-separated");
    s->add_option("--y", ta.y, "start/reference site, comma-separated");
  }
  t_rn->add_option("--start", ta.x, "start site, comma-separated");
  t_local->add_option("--y", ta.y, "observed site");
  for (auto* s : {t_rn, t_local, t_good}) s->add_option("--t", ta.t, "time horizon");
  t_hit->add_option("--t-grid", ta.t_grid, "comma-separated times");
  t_local->add_option("--deltas", ta.deltas, "comma-separated relative deviations");
  t_good->add_option("--beta", ta.beta, "inverse temperature");
  t_good->add_option("--c-level", ta.c_level, "constant of the level events");
  t_good->add_option("--c-boundary", ta.c_boundary, "constant of the boundary event");

  auto* fit = app.add_subcommand("fit", "power-law exponent from sweep records");
  std::string f_input, f_obs = "diam";
  std::uint64_t f_seed = 1;
  fit->add_option("--input", f_input, "records.jsonl or a sweep run directory")->required();
  fit->add_option("--observable", f_obs, "diam | volume | H");
  fit->add_option("--seed", f_seed, "bootstrap seed");

  auto* exitb = app.add_subcommand("exit-bound", "exact exit probabilities against the closed-form bound");
  int e_jmin = 5, e_jmax = 50, e_tcount = 20;
  double e_scale = 0.25;
  exitb->add_option("--J-min", e_jmin, "smallest interval size");
  exitb->add_option("--J-max", e_jmax, "largest interval size");
  exitb->add_option("--t-count", e_tcount, "times per J");
  exitb->add_option("--t-scale", e_scale, "t_k = k * scale * J^2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    if (sample->parsed()) {
      KeyValues extra;
      if (!sample_steps.empty()) {
        extra["horizon_time"] = sample_steps;
        extra["ensemble"] = "discrete";
      }
      return cmd_sample(sample_flags.resolve(sample_config, extra), sample_snapshot, out_root);
    }
    if (sweep_cmd->parsed()) {
      if (sweep_steps.empty() == sweep_horizons.empty()) throw ConfigError("give exactly one of --steps or --horizon-times");
      KeyValues extra;
      if (!sweep_steps.empty()) extra["ensemble"] = "discrete";
      const auto rc = sweep_flags.resolve(sweep_config, extra);
      return cmd_sweep(rc, parse_list(sweep_steps.empty() ? sweep_horizons : sweep_steps), parse_list(sweep_betas), sweep_snapshot,
                       sweep_extent, out_root);
    }
    if (oracle->parsed()) return cmd_oracle(o_dim, o_beta, o_steps, o_horizon, o_kmax, o_tol, o_cross, o_threads, out_root);
    if (iso->parsed()) return cmd_isoperimetry(i_dim, i_max, i_rcount, i_rsize, i_seed, out_root);
    if (tilted->parsed()) {
      for (auto* s : tilted->get_subcommands()) return cmd_tilted(s->get_name(), ta, out_root);
    }
    if (fit->parsed()) return cmd_fit(f_input, f_obs, f_seed, out_root);
    if (exitb->parsed()) return cmd_exit_bound(e_jmin, e_jmax, e_tcount, e_scale, out_root);
  } catch (const ConfigError& e) {
    print_error("config", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const ResourceError& e) {
    print_error("resource", e.what(), kExitResource);
    return kExitResource;
  } catch (const DomainError& e) {
    print_error("domain", e.what(), kExitDomain);
    return kExitDomain;
  } catch (const NumericalError& e) {
    print_error("numerical", e.what(), kExitNumerical);
    return kExitNumerical;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), 1);
    return 1;
  }
  print_error("usage", "no verb given", kExitUsage);
  return kExitUsage;
}
