#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "wulff/wulff.hpp"

using namespace wulff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

GibbsConfig discrete(int dim, double n, double beta) {
  GibbsConfig c;
  c.dim = dim;
  c.horizon = n;
  c.beta = beta;
  return c;
}

// Oracle agreement at n in {8, 10, 12}, beta in {0.5, 1, 2}.
Outcome criterion1() {
  Outcome o{true, ""};
  double worst_z = 0.0;
  double worst_impl = 0.0;
  for (int n : {8, 10, 12}) {
    const auto a = to_histogram(enumerate_iterative<2>(n), 2);
    const auto b = to_histogram(enumerate_recursive<2>(n), 2);
    for (double beta : {0.5, 1.0, 2.0}) {
      const auto c = discrete(2, n, beta);
      const auto ra = oracle_from_histogram(a, c, n);
      const auto rb = oracle_from_histogram(b, c, n);
      worst_impl = std::max(worst_impl, std::abs(ra.logZ - rb.logZ));
      for (const char* k : {"H", "diam"}) worst_impl = std::max(worst_impl, std::abs(ra.expectations.at(k) - rb.expectations.at(k)));
      Schedule s;
      s.burn_in = 1000;
      s.samples = 50000;
      const auto r = run_chain<2>(c, MoveMix{}, s, stream_seed(101, static_cast<std::uint64_t>(n * 10) + static_cast<std::uint64_t>(beta * 2)));
      for (const char* k : {"H", "diam"}) {
        const auto& sm = r.summary.at(k);
        const double z = (sm.mean - ra.expectations.at(k)) / sm.se;
        worst_z = std::max(worst_z, std::abs(z));
        if (std::abs(z) > 3.0) {
          o.pass = false;
          o.detail += fmt(" [n=%d beta=%g %s: mcmc %.5f exact %.5f z=%.2f]", n, beta, k, sm.mean, ra.expectations.at(k), z);
        }
      }
    }
  }
  if (worst_impl > 1e-12) o.pass = false;
  o.detail = fmt("max |z| = %.2f over 18 MCMC checks; implementations differ by %.1e", worst_z, worst_impl) + o.detail;
  return o;
}

// Both isoperimetric parts over all animals of size 2..10.
Outcome criterion2() {
  std::uint64_t animals = 0, rect_bad = 0, vol_bad = 0;
  enumerate_animals<2>(10, [&](const Polyomino<2>& a, std::size_t) {
    if (a.size() < 2) return;
    ++animals;
    rect_bad += !check_rectangle_lemma<2>(a.sites).holds;
    vol_bad += !check_volume_lemma<2>(a.sites).holds;
  });
  const SiteSet<2> one{Site<2>::origin()};
  const auto single = check_volume_lemma<2>(one);
  const bool counterexample = !single.holds && single.lhs == 1.0;
  Outcome o;
  o.pass = animals == 50147 && rect_bad == 0 && vol_bad == 0 && counterexample;
  o.detail = fmt("%llu animals, %llu rectangle and %llu volume violations; size 1: |d*A| = %g < %.4f (%s)",
                 static_cast<unsigned long long>(animals), static_cast<unsigned long long>(rect_bad),
                 static_cast<unsigned long long>(vol_bad), single.lhs, single.rhs, counterexample ? "reproduced" : "missing");
  return o;
}

// Generator residuals, gap against canonical paths, gap scaling.
Outcome criterion3() {
  Outcome o{true, ""};
  double worst_res = 0.0;
  for (int L : {4, 8, 12, 16}) {
    const auto r = generator_residuals<2>(build_profile<2>(L));
    worst_res = std::max({worst_res, r.detailed_balance, r.stationarity});
  }
  for (int L : {4, 8, 12, 16}) {
    const auto r = generator_residuals<3>(build_profile<3>(L));
    worst_res = std::max({worst_res, r.detailed_balance, r.stationarity});
  }
  if (worst_res > 1e-12) o.pass = false;
  double worst_ratio = INFINITY;
  int profiles = 0;
  auto gap_check = [&](double gap, double B) {
    ++profiles;
    worst_ratio = std::min(worst_ratio, gap * B);
    if (gap < 1.0 / B) o.pass = false;
  };
  std::vector<double> scaled;
  for (int L : {4, 8, 16, 24}) {
    const auto p = build_profile<2>(L);
    const double gap = spectral_gap<2>(p);
    gap_check(gap, canonical_path_bound<2>(p));
    if (L >= 8) scaled.push_back(gap * L * L);
  }
  for (int L : {4, 6, 7}) {
    const auto p = build_profile<3>(L);
    gap_check(spectral_gap<3>(p), canonical_path_bound<3>(p));
  }
  const double spread = *std::max_element(scaled.begin(), scaled.end()) / *std::min_element(scaled.begin(), scaled.end());
  if (spread > 8.0) o.pass = false;
  o.detail = fmt("max residual %.1e; min gap*B = %.3f over %d profiles; gap*L^2 at L=8,16,24: %.4f %.4f %.4f (spread x%.2f)", worst_res,
                 worst_ratio, profiles, scaled[0], scaled[1], scaled[2], spread);
  return o;
}

// Escape probabilities against effective resistance.
Outcome criterion4() {
  struct Case {
    int L;
    Site<2> y, x;
  };
  const std::vector<Case> cases{
      {4, {{0, 0}}, {{1, 0}}},   {4, {{0, 0}}, {{2, 2}}},   {4, {{-3, -3}}, {{3, 3}}}, {5, {{0, 0}}, {{4, 0}}},
      {5, {{2, 1}}, {{-2, 0}}},  {6, {{0, 0}}, {{3, -3}}},  {6, {{5, 5}}, {{0, 0}}},  {8, {{0, 0}}, {{1, 1}}},
      {8, {{0, 0}}, {{6, -6}}},  {8, {{-7, 0}}, {{7, 0}}},
  };
  Outcome o{true, ""};
  double worst = 0.0;
  std::uint64_t i = 0;
  for (const auto& c : cases) {
    const auto p = build_profile<2>(c.L);
    const auto e = escape_experiment<2>(p, c.y, c.x, 20000, stream_seed(404, i++));
    const double z = (e.p - e.predicted) / e.se;
    worst = std::max(worst, std::abs(z));
    if (std::abs(z) > 3.0) {
      o.pass = false;
      o.detail += fmt(" [L=%d y=%s x=%s: %.4f vs %.4f]", c.L, to_string(c.y).c_str(), to_string(c.x).c_str(), e.p, e.predicted);
    }
  }
  o.detail = fmt("%zu cases, max |z| = %.2f", cases.size(), worst) + o.detail;
  return o;
}

// Change of measure at L = 6 for five event families.
Outcome criterion5() {
  Outcome o{true, ""};
  const auto p = build_profile<2>(6);
  double worst = 0.0;
  int checks = 0;
  for (double t : {2.0, 4.0}) {
    for (const auto& c : change_of_measure_check<2>(p, t, 100000, stream_seed(505, static_cast<std::uint64_t>(t)))) {
      ++checks;
      worst = std::max(worst, std::abs(c.z));
      if (std::abs(c.z) > 3.0) {
        o.pass = false;
        o.detail += fmt(" [t=%g %s: %.4f vs %.4f, z=%.2f]", t, c.event.c_str(), c.tilted_mean, c.direct_mean, c.z);
      }
    }
  }
  o.detail = fmt("%d comparisons at t in {2,4}, max |z| = %.2f", checks, worst) + o.detail;
  return o;
}

// Exact survival against J exp(-(1 - cos(pi/J)) t) on t_k = k J^2 / 4.
Outcome criterion6() {
  std::uint64_t points = 0, bad = 0, bad_inner = 0;
  double worst = 0.0;
  int worst_J = 0;
  double worst_t = 0.0;
  for (int J = 5; J <= 50; ++J) {
    for (int k = 1; k <= 20; ++k) {
      const double t = k * J * J / 4.0;
      const double bound = exit_bound(J, t);
      double top = 0.0, top_inner = 0.0;
      for (int x = 1; x <= J; ++x) top = std::max(top, exit_prob_oracle(J, x, t));
      for (int x = 1; x <= J - 1; ++x) top_inner = std::max(top_inner, exit_prob_oracle(J - 1, x, t));
      ++points;
      if (top > bound) {
        ++bad;
        if (top / bound > worst) {
          worst = top / bound;
          worst_J = J;
          worst_t = t;
        }
      }
      bad_inner += top_inner > bound;
    }
  }
  std::printf("info 6: walk on {1..J-1}: %llu of %llu grid points violate the bound\n", static_cast<unsigned long long>(bad_inner),
              static_cast<unsigned long long>(points));
  Outcome o;
  o.pass = bad == 0;
  o.detail = fmt("walk on {1..J}: %llu of %llu grid points violate the bound", static_cast<unsigned long long>(bad),
                 static_cast<unsigned long long>(points));
  if (bad) o.detail += fmt("; worst ratio %.3g at J=%d t=%g", worst, worst_J, worst_t);
  return o;
}

// Diameter and volume exponents at beta = 1.
Outcome criterion7() {
  std::vector<GibbsConfig> grid;
  std::vector<std::uint64_t> seeds;
  for (int e = 10; e <= 16; ++e) {
    grid.push_back(discrete(2, std::ldexp(1.0, e), 1.0));
    seeds.push_back(stream_seed(707, static_cast<std::uint64_t>(e)));
  }
  Schedule s;
  s.burn_in = 1000;
  s.samples = 1000;
  ChainOptions opt;
  opt.init = InitKind::Compact;
  const auto recs = sweep<2>(grid, MoveMix{}, s, seeds, 1, false, opt);
  for (const auto& r : recs) {
    if (!r.ok()) return {false, "sweep point failed: " + r.error};
  }
  const auto fd = fit_exponent(recs, "diam", 7);
  const auto fv = fit_exponent(recs, "volume", 7);
  Outcome o;
  o.pass = fd.slope >= 0.25 && fd.slope <= 0.42 && fv.slope >= 0.55 && fv.slope <= 0.79;
  o.detail = fmt("diam exponent %.4f [%.4f, %.4f] (band 0.25..0.42); volume exponent %.4f [%.4f, %.4f] (band 0.55..0.79)", fd.slope,
                 fd.ci_lo, fd.ci_hi, fv.slope, fv.ci_lo, fv.ci_hi);
  return o;
}

// Thermodynamic ln Z against the oracle, then the calibrated lower-bound shape.
Outcome criterion8() {
  Outcome o{true, ""};
  {
    const auto c = discrete(2, 10, 1.0);
    const auto exact = enumerate_Z_discrete<2>(c);
    Schedule s;
    s.burn_in = 500;
    s.samples = 20000;
    const auto r = estimate_logZ_thermo<2>(c, thermo_grid(1.0, 16), MoveMix{}, s, 808);
    const double tol = std::max(3 * r.se, 2 * r.quadrature_error);
    if (std::abs(r.logZ - exact.logZ) > tol) o.pass = false;
    o.detail = fmt("n=10: %.5f vs exact %.5f (tol %.5f)", r.logZ, exact.logZ, tol);
  }
  ChainOptions opt;
  opt.init = InitKind::Compact;
  double c_fit = 0.0, slack0 = 0.0;
  for (double t : {1024.0, 2048.0, 4096.0}) {
    Schedule s;
    s.burn_in = 1000;
    s.samples = 1000;
    const auto r = estimate_logZ_thermo<2>(discrete(2, t, 1.0), thermo_grid(1.0, 16), MoveMix{}, s,
                                           stream_seed(809, static_cast<std::uint64_t>(t)), INFINITY, 1, opt);
    const double err = r.se + r.quadrature_error;
    if (t == 1024.0) {
      c_fit = calibrate_logZ_constant(r.logZ, t, 1.0, 2);
      slack0 = err;
      o.detail += fmt("; t=1024: lnZ %.3f +- %.3f, c = %.4f", r.logZ, err, c_fit);
      continue;
    }
    const double shape = logZ_bound_shape(c_fit, t, 1.0, 2);
    const double margin = 3.0 * std::hypot(err, slack0);
    const bool ok = r.logZ + margin >= shape;
    if (!ok) o.pass = false;
    o.detail += fmt("; t=%g: lnZ %.3f +- %.3f vs shape %.3f (%s, effective c %.4f)", t, r.logZ, err, shape, ok ? "ok" : "below",
                    calibrate_logZ_constant(r.logZ, t, 1.0, 2));
  }
  return o;
}

// Fig.-1 regime: H and diameter decrease with beta at t = 25000.
Outcome criterion9() {
  Outcome o{true, ""};
  ChainOptions opt;
  opt.init = InitKind::Compact;
  double prev_h = INFINITY, prev_d = INFINITY;
  std::uint64_t i = 0;
  for (double beta : {0.01, 0.1, 1.0, 2.0}) {
    Schedule s;
    s.burn_in = 1000;
    s.samples = 500;
    const auto r = run_chain<2>(discrete(2, 25000, beta), MoveMix{}, s, stream_seed(909, i++), opt);
    const auto& h = r.summary.at("H");
    const auto& d = r.summary.at("diam");
    if (!(h.mean < prev_h) || !(d.mean < prev_d)) o.pass = false;
    prev_h = h.mean;
    prev_d = d.mean;
    o.detail += fmt("%sbeta=%g: H %.1f +- %.1f, diam %.2f +- %.2f", i > 1 ? "; " : "", beta, h.mean, h.se, d.mean, d.se);
  }
  return o;
}

// Rejection estimate of P(R_6 = unit square and every site held >= 1).
Outcome criterion10() {
  const double t = 6.0, beta = 1.0;
  const std::uint64_t runs = 2000000;
  Engine rng = make_engine(1010);
  std::uint64_t hits = 0, event = 0;
  for (std::uint64_t r = 0; r < runs; ++r) {
    const auto f = occupation(simulate_ctrw<2>(t, rng));
    if (energy(f, HamiltonianVariant::ConditionedLocalTime, beta) == 0.0) continue;
    ++event;
    if (f.range_size() != 4) continue;
    const auto e = bounding_extents<2>(f.visited());
    hits += e[0] == 1 && e[1] == 1;
  }
  const double p = static_cast<double>(hits) / runs;
  const double se = std::sqrt(std::max(p * (1 - p), 1.0 / runs) / runs);
  const double bound = std::exp(-4 * beta);
  Outcome o;
  o.pass = p <= bound + 3 * se;
  o.detail = fmt("P = %.3e +- %.1e over %llu walks (event alone %.3e); bound e^-4 = %.3e", p, se, static_cast<unsigned long long>(runs),
                 static_cast<double>(event) / runs, bound);
  return o;
}

const char* const kNames[] = {"",
                              "oracle agreement",
                              "isoperimetry",
                              "tilted-chain exactness",
                              "resistance and escape",
                              "change of measure",
                              "exit bound",
                              "condensation exponent",
                              "ln Z sandwich",
                              "beta ordering at t=25000",
                              "conditioned-walk cost"};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N]\n");
      return 2;
    }
  }
  if (only < 0 || only > 10) {
    std::fprintf(stderr, "criterion must be 1..10\n");
    return 2;
  }
  const std::vector<std::function<Outcome()>> checks{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                     criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  for (int k = 1; k <= 10; ++k) {
    if (only && k != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", k, kNames[k], o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
