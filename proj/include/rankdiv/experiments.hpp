#pragma once
// Experiment runners behind the command-line tool. Each runner reads its
// parameters from a Config, returns the computed table and, when an output
// path is configured, writes it as CSV with a JSON header line.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rankdiv/config.hpp"
#include "rankdiv/distributions.hpp"
#include "rankdiv/divergence.hpp"
#include "rankdiv/entropy.hpp"
#include "rankdiv/io.hpp"
#include "rankdiv/ratio.hpp"
#include "rankdiv/rng.hpp"
#include "rankdiv/sliced.hpp"
#include "rankdiv/targets.hpp"
#include "rankdiv/transport.hpp"

namespace rankdiv {

// ---------------------------------------------------------------------------
// Shared plumbing

/// Runs fn(0..n-1) on up to `threads` workers. Results must be written by
/// index so the output does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline std::size_t default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// "family:kind:param"
struct CaseSpec {
  std::string family;
  EntropyKind kind = EntropyKind::KL;
  double param = 0.0;
};

inline CaseSpec parse_case(const std::string& s) {
  const auto a = s.find(':'), b = s.rfind(':');
  if (a == std::string::npos || a == b) throw ConfigError("case '" + s + "' is not family:kind:param");
  CaseSpec c;
  c.family = s.substr(0, a);
  try {
    c.kind = parse_entropy_kind(s.substr(a + 1, b - a - 1));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  c.param = detail::parse_double("case", s.substr(b + 1));
  return c;
}

inline std::vector<CaseSpec> parse_cases(const std::vector<std::string>& items) {
  std::vector<CaseSpec> out;
  for (const auto& s : items) out.push_back(parse_case(s));
  return out;
}

struct RunOptions {
  std::size_t seeds = 10;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
  std::string output;  // empty: do not write
};

inline RunOptions read_run_options(Config& cfg, std::size_t default_seeds) {
  RunOptions o;
  const auto R = cfg.get_int("seeds", static_cast<long long>(default_seeds));
  if (R < 1) throw ConfigError("seeds must be at least 1");
  o.seeds = static_cast<std::size_t>(R);
  o.base_seed = cfg.get_seed("base_seed", 20240901);
  const auto th = cfg.get_int("threads", static_cast<long long>(default_threads()));
  o.threads = static_cast<std::size_t>(std::max<long long>(1, th));
  o.output = cfg.get_string("output", "");
  return o;
}

inline RouteOptions read_route(Config& cfg) {
  RouteOptions r;
  try {
    r.route = parse_route(cfg.get_string("route", "smoothed"));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  r.tau = cfg.get_double("tau", 0.0);
  if (r.tau < 0.0) throw ConfigError("tau must be nonnegative");
  return r;
}

inline std::vector<int> to_int_grid(const std::vector<long long>& v, const char* what, long long lo) {
  std::vector<int> out;
  for (auto x : v) {
    if (x < lo) throw ConfigError(std::string(what) + " values must be at least " + std::to_string(lo));
    out.push_back(static_cast<int>(x));
  }
  return out;
}

inline std::uint64_t run_seed(std::uint64_t base, std::size_t r) { return derive_seed(base, {r}); }

// ---------------------------------------------------------------------------
// Univariate families
//   mean-shift(D)  N(0,1) vs N(D,1)
//   scale(s)       N(0,1) vs N(0,s)
//   multimodal(D)  1/2 N(-D,1) + 1/2 N(D,1) vs N(0,1)
//   heavy-tail     Laplace(0,1) vs N(0,1)   (param unused)
//   student-t(df)  t(df) vs N(0,1)

struct Pair1D {
  Dist1D mu, nu;
};

inline Pair1D make_pair_1d(const std::string& family, double p) {
  const auto std_normal = Dist1D::gaussian(0.0, 1.0);
  if (family == "mean-shift") return {std_normal, Dist1D::gaussian(p, 1.0)};
  if (family == "scale") return {std_normal, Dist1D::gaussian(0.0, p)};
  if (family == "multimodal") return {Dist1D::gauss_mix2(p, 1.0), std_normal};
  if (family == "heavy-tail") return {Dist1D::laplace(0.0, 1.0), std_normal};
  if (family == "student-t") return {Dist1D::student_t(p), std_normal};
  throw ConfigError("unknown univariate family '" + family + "'");
}

inline std::optional<double> closed_form_1d(const std::string& family, double p, EntropyKind kind) {
  if (family == "mean-shift") {
    if (kind == EntropyKind::KL) return kl_gaussian(0.0, 1.0, p, 1.0);
    if (kind == EntropyKind::SqHellinger) return hellinger2_gaussian(0.0, 1.0, p, 1.0);
    if (kind == EntropyKind::TV) return tv_l1_gaussian_shift(p);
  }
  if (family == "scale") {
    if (kind == EntropyKind::KL) return kl_gaussian(0.0, 1.0, 0.0, p);
    if (kind == EntropyKind::SqHellinger) return hellinger2_gaussian(0.0, 1.0, 0.0, p);
    if (kind == EntropyKind::TV) return tv_l1_gaussian_scale(p);
  }
  return std::nullopt;
}

struct ReferenceValue {
  double value = 0.0;
  std::string route;  // closed-form | quadrature | mc | gaussian-proxy
};

/// mode: auto (closed form, else cached MC), closed-form, quadrature or mc.
inline ReferenceValue reference_1d(const CaseSpec& c, const std::string& mode, std::size_t n_ref,
                                   std::uint64_t ref_seed, ReferenceCache* cache) {
  const auto pair = make_pair_1d(c.family, c.param);
  const EntropySpec spec{c.kind};
  const auto closed = closed_form_1d(c.family, c.param, c.kind);
  if (mode == "closed-form" || (mode == "auto" && closed)) {
    if (!closed)
      throw ConfigError("no closed-form reference for " + c.family + "/" + std::string(to_string(c.kind)));
    return {*closed, "closed-form"};
  }
  if (mode == "quadrature") return {continuous_divergence(pair.mu, pair.nu, spec), "quadrature"};
  if (mode != "mc" && mode != "auto") throw ConfigError("unknown reference mode '" + mode + "'");
  auto compute = [&] {
    const auto r = mc_reference(pair.mu, pair.nu, spec, n_ref, ref_seed);
    return CachedReference{r.value, n_ref, ref_seed, "mc"};
  };
  const std::string key = "1d|" + pair.mu.name() + "|" + pair.nu.name() + "|" + std::string(to_string(c.kind)) +
                          "|n_ref=" + std::to_string(n_ref) + "|seed=" + std::to_string(ref_seed);
  const auto r = cache ? cache->get_or_compute(key, compute) : compute();
  return {r.value, "mc"};
}

inline std::string case_name(const CaseSpec& c) {
  return c.family + ":" + std::string(to_string(c.kind)) + ":" + fmt_double(c.param);
}

// ---------------------------------------------------------------------------
// bench1d

struct Bench1dRow {
  CaseSpec c;
  int K = 0;
  std::size_t n_mu = 0, n_nu = 0, seeds = 0;
  double mean_estimate = 0.0, std_estimate = 0.0;
  double reference = 0.0;
  std::string reference_route;
  double mean_ratio = 0.0, std_ratio = 0.0;
};

struct Bench1dRun {
  CaseSpec c;
  int K = 0;
  std::size_t n_mu = 0, n_nu = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0, reference = 0.0, ratio = 0.0;
};

struct Bench1dResult {
  std::vector<Bench1dRow> rows;
  std::vector<Bench1dRun> runs;
  nlohmann::json config;
};

inline Bench1dResult run_bench1d(Config& cfg) {
  const auto cases = parse_cases(cfg.get_strings(
      "cases", {"mean-shift:kl:2", "scale:kl:2", "multimodal:js:2", "heavy-tail:js:0", "mean-shift:tv:1"}));
  const auto Ks = to_int_grid(cfg.get_ints("K", {32, 64, 128, 256, 512}), "K", 1);
  const auto n_mu = static_cast<std::size_t>(cfg.get_int("n_mu", 10000));
  const auto n_nu = static_cast<std::size_t>(cfg.get_int("n_nu", 10000));
  auto route = read_route(cfg);
  const auto ref_mode = cfg.get_string("reference", "auto");
  const auto n_ref = static_cast<std::size_t>(cfg.get_int("ref_n", 10000000));
  const auto ref_seed = cfg.get_seed("ref_seed", 7);
  const auto cache_path = cfg.get_string("cache", ReferenceCache::default_path().string());
  const auto runs_output = cfg.get_string("runs_output", "");
  const auto opt = read_run_options(cfg, 10);
  cfg.check_all_used();
  if (n_mu < 1 || n_nu < 1) throw ConfigError("sample sizes must be at least 1");

  ReferenceCache cache(cache_path);
  std::vector<ReferenceValue> refs;
  for (const auto& c : cases) refs.push_back(reference_1d(c, ref_mode, n_ref, ref_seed, &cache));

  // est[case][seed][K]
  const std::size_t C = cases.size(), R = opt.seeds, NK = Ks.size();
  std::vector<double> est(C * R * NK);
  parallel_for(C * R, opt.threads, [&](std::size_t job) {
    const std::size_t ci = job / R, r = job % R;
    const auto pair = make_pair_1d(cases[ci].family, cases[ci].param);
    const auto s = run_seed(opt.base_seed, r);
    const auto X = pair.mu.sample(n_mu, derive_seed(s, {stream::kMu}));
    const auto Y = pair.nu.sample(n_nu, derive_seed(s, {stream::kNu}));
    for (std::size_t k = 0; k < NK; ++k) {
      RouteOptions o = route;
      o.seed = derive_seed(s, {stream::kResample, static_cast<std::uint64_t>(Ks[k])});
      est[(ci * R + r) * NK + k] = rank_divergence(X, Y, Ks[k], EntropySpec{cases[ci].kind}, o).value;
    }
  });

  Bench1dResult out;
  out.config = cfg.resolved();
  for (std::size_t ci = 0; ci < C; ++ci) {
    for (std::size_t k = 0; k < NK; ++k) {
      std::vector<double> e, ratio;
      for (std::size_t r = 0; r < R; ++r) {
        const double v = est[(ci * R + r) * NK + k];
        e.push_back(v);
        ratio.push_back(v / refs[ci].value);
        out.runs.push_back({cases[ci], Ks[k], n_mu, n_nu, run_seed(opt.base_seed, r), v, refs[ci].value, v / refs[ci].value});
      }
      out.rows.push_back({cases[ci], Ks[k], n_mu, n_nu, R, mean_of(e), stddev_of(e), refs[ci].value,
                          refs[ci].route, mean_of(ratio), stddev_of(ratio)});
    }
  }

  if (!opt.output.empty()) {
    CsvTable t({"family", "kind", "param", "K", "n_mu", "n_nu", "seeds", "mean_estimate", "std_estimate",
                "reference", "reference_route", "mean_ratio", "std_ratio"});
    for (const auto& r : out.rows)
      t.add_row({r.c.family, std::string(to_string(r.c.kind)), fmt_double(r.c.param), std::to_string(r.K),
                 std::to_string(r.n_mu), std::to_string(r.n_nu), std::to_string(r.seeds), fmt_double(r.mean_estimate),
                 fmt_double(r.std_estimate), fmt_double(r.reference), r.reference_route, fmt_double(r.mean_ratio),
                 fmt_double(r.std_ratio)});
    t.write(opt.output, output_header("bench1d", out.config));
  }
  if (!runs_output.empty()) {
    CsvTable t({"family", "kind", "param", "K", "n_mu", "n_nu", "seed", "estimate", "reference", "ratio"});
    for (const auto& r : out.runs)
      t.add_row({r.c.family, std::string(to_string(r.c.kind)), fmt_double(r.c.param), std::to_string(r.K),
                 std::to_string(r.n_mu), std::to_string(r.n_nu), std::to_string(r.seed), fmt_double(r.estimate),
                 fmt_double(r.reference), fmt_double(r.ratio)});
    t.write(runs_output, output_header("bench1d", out.config));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multivariate families (dimension d)
//   mean-shift(D)   N(0,I) vs N(D e1, I)
//   scale(s)        N(0,I) vs N(0, s^2 I)
//   anisotropic     N(0,I) vs N(0, diag(1..2)), variances evenly spaced
//   laplace         product Laplace(0,1) vs N(0,I)
//   student-t(df)   product t(df) vs N(0,I)
//   mixture(D)      1/2 N(-D e1, I) + 1/2 N(D e1, I) vs N(0,I)

struct PairND {
  DistND mu, nu;
};

inline std::vector<double> anisotropic_variances(std::size_t d) {
  std::vector<double> v(d, 1.0);
  for (std::size_t j = 0; j < d && d > 1; ++j) v[j] = 1.0 + static_cast<double>(j) / static_cast<double>(d - 1);
  return v;
}

inline PairND make_pair_nd(const std::string& family, double p, std::size_t d) {
  const std::vector<double> zero(d, 0.0);
  const auto std_normal = DistND::iso_gaussian(zero, 1.0);
  if (family == "mean-shift") {
    auto m = zero;
    m[0] = p;
    return {std_normal, DistND::iso_gaussian(m, 1.0)};
  }
  if (family == "scale") return {std_normal, DistND::iso_gaussian(zero, p)};
  if (family == "anisotropic") return {std_normal, DistND::diag_gaussian(zero, anisotropic_variances(d))};
  if (family == "laplace") return {DistND::factor_laplace(d), std_normal};
  if (family == "student-t") return {DistND::student_t_product(p, d), std_normal};
  if (family == "mixture") return {DistND::gauss_mix2(p, d), std_normal};
  throw ConfigError("unknown multivariate family '" + family + "'");
}

// Means and variances of the Gaussian-Gaussian families.
inline std::optional<std::pair<std::vector<double>, std::vector<double>>> gaussian_nu_params(const std::string& family,
                                                                                          double p, std::size_t d) {
  std::vector<double> m(d, 0.0), v(d, 1.0);
  if (family == "mean-shift") m[0] = p;
  else if (family == "scale") v.assign(d, p * p);
  else if (family == "anisotropic") v = anisotropic_variances(d);
  else return std::nullopt;
  return std::pair{m, v};
}

/// mode: auto (closed form, else cached MC), closed-form, mc or proxy (the
/// moment-matched Gaussian JS approximation, labeled as such).
inline ReferenceValue reference_nd(const CaseSpec& c, std::size_t d, const std::string& mode, std::size_t n_ref,
                                   std::uint64_t ref_seed, ReferenceCache* cache) {
  const auto g = gaussian_nu_params(c.family, c.param, d);
  const std::vector<double> m0(d, 0.0), v0(d, 1.0);
  std::optional<double> closed;
  if (g && c.kind == EntropyKind::KL) closed = kl_gaussian_diag(m0, v0, g->first, g->second);
  if (g && c.kind == EntropyKind::SqHellinger) closed = hellinger2_gaussian_diag(m0, v0, g->first, g->second);
  if (mode == "proxy") {
    if (!g || c.kind != EntropyKind::JS) throw ConfigError("the Gaussian proxy reference only covers JS on Gaussian pairs");
    return {js_gaussian_proxy(m0, v0, g->first, g->second), "gaussian-proxy"};
  }
  if (mode == "closed-form" || (mode == "auto" && closed)) {
    if (!closed) throw ConfigError("no closed-form reference for " + c.family + "/" + std::string(to_string(c.kind)));
    return {*closed, "closed-form"};
  }
  if (mode != "mc" && mode != "auto") throw ConfigError("unknown reference mode '" + mode + "'");
  const auto pair = make_pair_nd(c.family, c.param, d);
  auto compute = [&] {
    const auto r = mc_reference(pair.mu, pair.nu, EntropySpec{c.kind}, n_ref, ref_seed);
    return CachedReference{r.value, n_ref, ref_seed, "mc"};
  };
  const std::string key = "nd|" + case_name(c) + "|d=" + std::to_string(d) + "|n_ref=" + std::to_string(n_ref) +
                          "|seed=" + std::to_string(ref_seed);
  const auto r = cache ? cache->get_or_compute(key, compute) : compute();
  return {r.value, "mc"};
}

// ---------------------------------------------------------------------------
// bench-sliced

struct SlicedRow {
  CaseSpec c;
  std::size_t d = 0;
  int K = 0;
  std::size_t L = 0, n = 0, seeds = 0;
  double mean_sliced = 0.0, std_sliced = 0.0;
  double reference = 0.0;
  std::string reference_route;
  double mean_ratio = 0.0, std_ratio = 0.0;  // ratio = d * sliced / reference
};

struct SlicedResult {
  std::vector<SlicedRow> rows;
  nlohmann::json config;
};

inline SlicedResult run_bench_sliced(Config& cfg) {
  const auto cases = parse_cases(cfg.get_strings("cases", {"mean-shift:kl:1"}));
  const auto dims = to_int_grid(cfg.get_ints("dims", {5}), "dims", 1);
  const auto Ks = to_int_grid(cfg.get_ints("K", {64}), "K", 1);
  const auto L = static_cast<std::size_t>(cfg.get_int("L", 128));
  const auto n = static_cast<std::size_t>(cfg.get_int("n", 10000));
  const bool antithetic = cfg.get_bool("antithetic", false);
  auto route = read_route(cfg);
  const auto ref_mode = cfg.get_string("reference", "auto");
  const auto n_ref = static_cast<std::size_t>(cfg.get_int("ref_n", 1000000));
  const auto ref_seed = cfg.get_seed("ref_seed", 7);
  const auto cache_path = cfg.get_string("cache", ReferenceCache::default_path().string());
  const auto slice_output = cfg.get_string("per_slice_output", "");
  const auto opt = read_run_options(cfg, 10);
  cfg.check_all_used();
  if (L < 1 || n < 1) throw ConfigError("L and n must be at least 1");

  ReferenceCache cache(cache_path);
  const std::size_t C = cases.size(), D = dims.size(), R = opt.seeds, NK = Ks.size();
  std::vector<ReferenceValue> refs;
  for (const auto& c : cases)
    for (int d : dims) refs.push_back(reference_nd(c, static_cast<std::size_t>(d), ref_mode, n_ref, ref_seed, &cache));

  std::vector<double> est(C * D * R * NK);
  std::vector<std::vector<double>> slices(C * D * R * NK);
  parallel_for(C * D * R, opt.threads, [&](std::size_t job) {
    const std::size_t r = job % R, di = (job / R) % D, ci = job / (R * D);
    const auto d = static_cast<std::size_t>(dims[di]);
    const auto pair = make_pair_nd(cases[ci].family, cases[ci].param, d);
    const auto s = run_seed(opt.base_seed, r);
    const auto X = pair.mu.sample(n, derive_seed(s, {stream::kMu, d}));
    const auto Y = pair.nu.sample(n, derive_seed(s, {stream::kNu, d}));
    // one direction set per run, shared across K
    const auto dirs = sample_directions(d, L, derive_seed(s, {stream::kDirections, d}), antithetic);
    for (std::size_t k = 0; k < NK; ++k) {
      RouteOptions o = route;
      o.seed = derive_seed(s, {stream::kResample, static_cast<std::uint64_t>(Ks[k])});
      auto se = sliced_rank_divergence(X, Y, Ks[k], EntropySpec{cases[ci].kind}, dirs, o);
      const std::size_t idx = ((ci * D + di) * R + r) * NK + k;
      est[idx] = se.estimate.value;
      slices[idx] = std::move(se.per_slice);
    }
  });

  SlicedResult out;
  out.config = cfg.resolved();
  for (std::size_t ci = 0; ci < C; ++ci) {
    for (std::size_t di = 0; di < D; ++di) {
      const auto& ref = refs[ci * D + di];
      for (std::size_t k = 0; k < NK; ++k) {
        std::vector<double> e, ratio;
        for (std::size_t r = 0; r < R; ++r) {
          const double v = est[((ci * D + di) * R + r) * NK + k];
          e.push_back(v);
          ratio.push_back(dims[di] * v / ref.value);
        }
        out.rows.push_back({cases[ci], static_cast<std::size_t>(dims[di]), Ks[k], L, n, R, mean_of(e), stddev_of(e),
                            ref.value, ref.route, mean_of(ratio), stddev_of(ratio)});
      }
    }
  }

  if (!opt.output.empty()) {
    CsvTable t({"family", "kind", "param", "d", "K", "L", "n", "seeds", "mean_sliced", "std_sliced", "reference",
                "reference_route", "mean_ratio", "std_ratio"});
    for (const auto& r : out.rows)
      t.add_row({r.c.family, std::string(to_string(r.c.kind)), fmt_double(r.c.param), std::to_string(r.d),
                 std::to_string(r.K), std::to_string(r.L), std::to_string(r.n), std::to_string(r.seeds),
                 fmt_double(r.mean_sliced), fmt_double(r.std_sliced), fmt_double(r.reference), r.reference_route,
                 fmt_double(r.mean_ratio), fmt_double(r.std_ratio)});
    t.write(opt.output, output_header("bench-sliced", out.config));
  }
  if (!slice_output.empty()) {
    CsvTable t({"family", "kind", "param", "d", "K", "seed", "direction_index", "slice_value"});
    for (std::size_t ci = 0; ci < C; ++ci)
      for (std::size_t di = 0; di < D; ++di)
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t k = 0; k < NK; ++k) {
            const auto& sl = slices[((ci * D + di) * R + r) * NK + k];
            for (std::size_t l = 0; l < sl.size(); ++l)
              t.add_row({cases[ci].family, std::string(to_string(cases[ci].kind)), fmt_double(cases[ci].param),
                         std::to_string(dims[di]), std::to_string(Ks[k]), std::to_string(run_seed(opt.base_seed, r)),
                         std::to_string(l), fmt_double(sl[l])});
          }
    t.write(slice_output, output_header("bench-sliced", out.config));
  }
  return out;
}

// ---------------------------------------------------------------------------
// kl-vs-n: axis-corrected KL between a truncated Gaussian and the uniform law
// on the same box.

struct KlVsNRow {
  std::size_t d = 0, n = 0;
  int K = 0;
  std::size_t seeds = 0;
  double mean = 0.0, std = 0.0, truth = 0.0;
};

struct KlVsNResult {
  std::vector<KlVsNRow> rows;
  nlohmann::json config;
};

inline KlVsNResult run_kl_vs_n(Config& cfg) {
  const auto dims = to_int_grid(cfg.get_ints("dims", {2, 5, 10}), "dims", 1);
  const auto ns = cfg.get_ints("n", {10000, 20000, 40000, 80000, 160000, 320000, 640000});
  const int K = static_cast<int>(cfg.get_int("K", 64));
  auto route = read_route(cfg);
  const auto opt = read_run_options(cfg, 10);
  cfg.check_all_used();
  for (int d : dims) {
    if (d != 2 && d != 5 && d != 10) throw ConfigError("kl-vs-n supports d in {2, 5, 10}");
  }
  for (auto n : ns) {
    if (n < 1) throw ConfigError("n values must be at least 1");
  }

  const std::size_t D = dims.size(), NN = ns.size(), R = opt.seeds;
  std::vector<double> est(D * NN * R);
  parallel_for(D * NN * R, opt.threads, [&](std::size_t job) {
    const std::size_t r = job % R, ni = (job / R) % NN, di = job / (R * NN);
    const auto box = box_for_dim(dims[di]);
    const auto mu = DistND::trunc_gaussian_box(box), nu = DistND::uniform_box(box);
    const auto n = static_cast<std::size_t>(ns[ni]);
    const auto s = run_seed(opt.base_seed, r);
    const auto X = mu.sample(n, derive_seed(s, {stream::kMu, static_cast<std::uint64_t>(dims[di]), n}));
    const auto Y = nu.sample(n, derive_seed(s, {stream::kNu, static_cast<std::uint64_t>(dims[di]), n}));
    RouteOptions o = route;
    o.seed = derive_seed(s, {stream::kResample});
    est[job] = axis_corrected_divergence(X, Y, K, EntropySpec{EntropyKind::KL}, o).value;
  });

  KlVsNResult out;
  out.config = cfg.resolved();
  for (std::size_t di = 0; di < D; ++di) {
    const double truth = kl_truncgauss_vs_uniform(box_for_dim(dims[di]));
    for (std::size_t ni = 0; ni < NN; ++ni) {
      std::span<const double> e(est.data() + (di * NN + ni) * R, R);
      out.rows.push_back({static_cast<std::size_t>(dims[di]), static_cast<std::size_t>(ns[ni]), K, R, mean_of(e),
                          stddev_of(e), truth});
    }
  }
  if (!opt.output.empty()) {
    CsvTable t({"d", "n", "K", "seeds", "mean", "std", "truth"});
    for (const auto& r : out.rows)
      t.add_row({std::to_string(r.d), std::to_string(r.n), std::to_string(r.K), std::to_string(r.seeds),
                 fmt_double(r.mean), fmt_double(r.std), fmt_double(r.truth)});
    t.write(opt.output, output_header("kl-vs-n", out.config));
  }
  return out;
}

// ---------------------------------------------------------------------------
// rates: noise-free D^(K) from the exact pmf against the continuous value.

struct RatePoint {
  CaseSpec c;
  int K = 0;
  double exact = 0.0, reference = 0.0, gap = 0.0, abs_one_minus_ratio = 0.0;
};

struct RateFit {
  CaseSpec c;
  int K_min = 0, K_max = 0;
  double slope = 0.0;
};

struct RatesResult {
  std::vector<RatePoint> points;
  std::vector<RateFit> fits;
  nlohmann::json config;
};

inline RatesResult run_rates(Config& cfg) {
  const auto cases = parse_cases(cfg.get_strings("cases", {"scale:chi2:2", "heavy-tail:js:0", "mean-shift:kl:1"}));
  const auto Ks = to_int_grid(cfg.get_ints("K", {16, 32, 64, 128, 256, 512, 1024}), "K", 1);
  const auto quad_points = cfg.get_int("quad_points", 0);  // 0: size-dependent default
  const auto output = cfg.get_string("output", "");
  const auto fit_output = cfg.get_string("fit_output", "");
  const auto threads = static_cast<std::size_t>(std::max<long long>(1, cfg.get_int("threads", default_threads())));
  cfg.check_all_used();

  RatesResult out;
  out.config = cfg.resolved();
  const std::size_t C = cases.size(), NK = Ks.size();
  std::vector<double> exact(C * NK), refs(C);
  for (std::size_t ci = 0; ci < C; ++ci) {
    const auto pair = make_pair_1d(cases[ci].family, cases[ci].param);
    refs[ci] = continuous_divergence(pair.mu, pair.nu, EntropySpec{cases[ci].kind});
  }
  parallel_for(C * NK, threads, [&](std::size_t job) {
    const std::size_t ci = job / NK, k = job % NK;
    const auto pair = make_pair_1d(cases[ci].family, cases[ci].param);
    const auto ratio = quantile_density_ratio(pair.mu, pair.nu);
    const int qp = quad_points > 0 ? static_cast<int>(quad_points) : default_quad_points(Ks[k]);
    exact[job] = rank_divergence_exact(ratio, Ks[k], EntropySpec{cases[ci].kind}, qp).value;
  });
  for (std::size_t ci = 0; ci < C; ++ci) {
    std::vector<double> kx, gy;
    for (std::size_t k = 0; k < NK; ++k) {
      const double e = exact[ci * NK + k], gap = refs[ci] - e;
      out.points.push_back({cases[ci], Ks[k], e, refs[ci], gap, std::abs(1.0 - e / refs[ci])});
      kx.push_back(Ks[k]);
      gy.push_back(gap);
    }
    double slope = std::numeric_limits<double>::quiet_NaN();
    if (NK >= 2 && std::all_of(gy.begin(), gy.end(), [](double g) { return g > 0.0; })) slope = loglog_slope(kx, gy);
    out.fits.push_back({cases[ci], *std::min_element(Ks.begin(), Ks.end()), *std::max_element(Ks.begin(), Ks.end()),
                        slope});
  }
  const auto header = output_header("rates", out.config);
  if (!output.empty()) {
    CsvTable t({"family", "kind", "param", "K", "exact", "reference", "gap", "abs_one_minus_ratio"});
    for (const auto& p : out.points)
      t.add_row({p.c.family, std::string(to_string(p.c.kind)), fmt_double(p.c.param), std::to_string(p.K),
                 fmt_double(p.exact), fmt_double(p.reference), fmt_double(p.gap), fmt_double(p.abs_one_minus_ratio)});
    t.write(output, header);
  }
  if (!fit_output.empty()) {
    CsvTable t({"family", "kind", "param", "K_min", "K_max", "slope"});
    for (const auto& f : out.fits)
      t.add_row({f.c.family, std::string(to_string(f.c.kind)), fmt_double(f.c.param), std::to_string(f.K_min),
                 std::to_string(f.K_max), fmt_double(f.slope)});
    t.write(fit_output, header);
  }
  return out;
}

// ---------------------------------------------------------------------------
// bounds: trial-mean error and concentration coverage against the
// finite-sample theory.

struct BoundsReport {
  std::string family;
  double param = 0.0;
  EntropyKind kind = EntropyKind::TV;
  int K = 0;
  std::size_t N = 0, M = 0, trials = 0;
  double lipschitz = 0.0, truth = 0.0;
  double mean_abs_error = 0.0, mean_bound = 0.0;
  double delta = 0.0, radius = 0.0, coverage = 0.0;
  bool mean_ok = false, coverage_ok = false;
  std::vector<double> estimates;
  nlohmann::json config;
};

inline BoundsReport run_bounds(Config& cfg) {
  BoundsReport rep;
  rep.family = cfg.get_string("family", "mean-shift");
  rep.param = cfg.get_double("param", 0.0);
  try {
    rep.kind = parse_entropy_kind(cfg.get_string("kind", "tv"));
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  rep.K = static_cast<int>(cfg.get_int("K", 8));
  rep.N = static_cast<std::size_t>(cfg.get_int("n_mu", 1000));
  rep.M = static_cast<std::size_t>(cfg.get_int("n_nu", 1000));
  rep.trials = static_cast<std::size_t>(cfg.get_int("trials", 200));
  rep.delta = cfg.get_double("delta", 0.05);
  auto route = read_route(cfg);
  const auto opt = read_run_options(cfg, 1);
  cfg.check_all_used();
  if (rep.K < 1 || rep.N < 1 || rep.M < 1 || rep.trials < 1) throw ConfigError("K, sample sizes and trials must be >= 1");

  const EntropySpec spec{rep.kind};
  const auto tb = theory_bounds(spec, rep.K, rep.N, rep.M);
  if (!std::isfinite(tb.lipschitz))
    throw ConfigError("the bounds harness needs a generator that is Lipschitz on [0, K+1]");
  rep.lipschitz = tb.lipschitz;
  rep.mean_bound = tb.finite_sample_mean_bound;
  rep.radius = tb.concentration_radius(rep.delta);

  const auto pair = make_pair_1d(rep.family, rep.param);
  rep.truth = rank_divergence_exact(quantile_density_ratio(pair.mu, pair.nu), rep.K, spec).value;

  rep.estimates.assign(rep.trials, 0.0);
  parallel_for(rep.trials, opt.threads, [&](std::size_t t) {
    const auto s = run_seed(opt.base_seed, t);
    RouteOptions o = route;
    o.seed = derive_seed(s, {stream::kResample});
    rep.estimates[t] = rank_divergence(pair.mu.sample(rep.N, derive_seed(s, {stream::kMu})),
                                       pair.nu.sample(rep.M, derive_seed(s, {stream::kNu})), rep.K, spec, o)
                           .value;
  });
  std::size_t inside = 0;
  double err = 0.0;
  for (double e : rep.estimates) {
    const double a = std::abs(e - rep.truth);
    err += a;
    if (a <= rep.radius) ++inside;
  }
  rep.mean_abs_error = err / static_cast<double>(rep.trials);
  rep.coverage = static_cast<double>(inside) / static_cast<double>(rep.trials);
  rep.mean_ok = rep.mean_abs_error <= rep.mean_bound;
  rep.coverage_ok = rep.coverage >= 1.0 - rep.delta;
  rep.config = cfg.resolved();

  if (!opt.output.empty()) {
    CsvTable t({"family", "param", "kind", "K", "N", "M", "trials", "lipschitz", "truth", "mean_abs_error",
                "mean_bound", "mean_ok", "delta", "radius", "coverage", "coverage_ok"});
    t.add_row({rep.family, fmt_double(rep.param), std::string(to_string(rep.kind)), std::to_string(rep.K),
               std::to_string(rep.N), std::to_string(rep.M), std::to_string(rep.trials), fmt_double(rep.lipschitz),
               fmt_double(rep.truth), fmt_double(rep.mean_abs_error), fmt_double(rep.mean_bound),
               rep.mean_ok ? "true" : "false", fmt_double(rep.delta), fmt_double(rep.radius), fmt_double(rep.coverage),
               rep.coverage_ok ? "true" : "false"});
    t.write(opt.output, output_header("bounds", rep.config));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// transport

struct TransportCliResult {
  TransportRun run;
  std::vector<int> snapshot_steps;
  std::vector<std::filesystem::path> files;  // snapshots then the energy trace
  nlohmann::json config;
};

namespace detail {

template <class Cfg>
void read_schedules(Config& c, Cfg& cfg) {
  cfg.K.start = c.get_double("K_start", cfg.K.start);
  cfg.K.end = c.get_double("K_end", cfg.K.end);
  cfg.tau.start = c.get_double("tau_start", cfg.tau.start);
  cfg.tau.end = c.get_double("tau_end", cfg.tau.end);
  cfg.eps.start = c.get_double("eps_start", cfg.eps.start);
  cfg.eps.end = c.get_double("eps_end", cfg.eps.end);
  cfg.eta = c.get_double("eta", cfg.eta);
  cfg.inner_steps = static_cast<int>(c.get_int("inner_steps", cfg.inner_steps));
  cfg.inner_lr = c.get_double("inner_lr", cfg.inner_lr);
  const double clip = c.get_double("clip", cfg.clip_cap.value_or(0.0));
  cfg.clip_cap = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
  try {
    cfg.generator = EntropySpec{parse_entropy_kind(c.get_string("kind", std::string(to_string(cfg.generator.kind))))};
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  cfg.total_steps = static_cast<int>(c.get_int("steps", cfg.total_steps));
  cfg.energy_slices = static_cast<int>(c.get_int("energy_slices", cfg.energy_slices));
}

}  // namespace detail

inline TransportCliResult run_transport_cli(Config& c) {
  const Target target = parse_target(c.get_string("target", "two-blobs"));
  const auto algo = c.get_string("algo", "rpt");
  const auto N = static_cast<std::size_t>(c.get_int("n_particles", 1000));
  const auto M = static_cast<std::size_t>(c.get_int("n_reference", 1000));
  const auto seed = c.get_seed("seed", 0);
  const bool default_snaps = !c.has("snapshots");
  auto snaps = to_int_grid(c.get_ints("snapshots", {0, 1, 5, 10, 20, 40, 100, 200, 400}), "snapshots", 0);
  const auto dir = c.get_string("output_dir", ".");
  const auto tag = c.get_string("tag", std::string(to_string(target)) + "_" + algo);
  if (N < 1 || M < 1) throw ConfigError("particle and reference counts must be at least 1");

  TransportCliResult out;
  const auto initial = sample_isotropic(N, 2, derive_seed(seed, {stream::kInitial}));
  const auto reference = sample_target(target, M, derive_seed(seed, {stream::kReference}));
  // the default snapshot list is cut at the run length; explicit lists are validated
  auto trim_snaps = [&](int T) {
    if (default_snaps) std::erase_if(snaps, [T](int t) { return t > T; });
  };
  int T = 0;
  if (algo == "rpt") {
    TransportConfig cfg;
    cfg.seed = seed;
    cfg.clip_cap = std::nullopt;
    detail::read_schedules(c, cfg);
    cfg.L = static_cast<int>(c.get_int("L", cfg.L));
    cfg.monotone_coupling = c.get_bool("monotone", cfg.monotone_coupling);
    cfg.antithetic = c.get_bool("antithetic", cfg.antithetic);
    c.check_all_used();
    T = cfg.total_steps;
    trim_snaps(T);
    out.config = c.resolved();
    out.run = run_transport(initial, reference, cfg, snaps);
  } else if (algo == "co-rpt") {
    CoRptConfig cfg;
    cfg.seed = seed;
    detail::read_schedules(c, cfg);
    cfg.beta = c.get_double("beta", cfg.beta);
    cfg.whiten = c.get_bool("whiten", cfg.whiten);
    cfg.ridge_factor = c.get_double("ridge_factor", cfg.ridge_factor);
    c.check_all_used();
    T = cfg.total_steps;
    trim_snaps(T);
    out.config = c.resolved();
    out.run = run_co_rpt(initial, reference, cfg, snaps);
  } else {
    throw ConfigError("unknown algorithm '" + algo + "' (expected rpt or co-rpt)");
  }
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  out.snapshot_steps = T == 0 ? std::vector<int>{0} : snaps;

  const auto header = output_header("transport", out.config);
  const std::filesystem::path base(dir);
  for (const auto& s : out.run.snapshots) {
    const auto p = base / (tag + "_step_" + std::to_string(s.step_index) + ".csv");
    write_samples_csv(p, s.positions, header);
    out.files.push_back(p);
  }
  CsvTable trace({"step", "K", "tau", "eps", "energy"});
  for (const auto& d : out.run.trace)
    trace.add_row({std::to_string(d.step), std::to_string(d.K), fmt_double(d.tau), fmt_double(d.eps),
                   fmt_double(d.energy)});
  const auto tp = base / (tag + "_energy.csv");
  trace.write(tp, header);
  out.files.push_back(tp);
  return out;
}

// ---------------------------------------------------------------------------
// estimate: one-shot estimation from two sample files.

struct EstimateResult {
  DivergenceEstimate estimate;
  std::string mode;  // univariate | sliced | axis
  std::size_t dim = 0;
  std::vector<double> per_slice;
  std::optional<RankHistogram> histogram;
  nlohmann::json config;
};

inline EstimateResult run_estimate(Config& c, const SampleSet& mu, const SampleSet& nu) {
  EstimateResult out;
  const int K = static_cast<int>(c.get_int("K", 64));
  EntropySpec spec;
  try {
    spec = EntropySpec{parse_entropy_kind(c.get_string("kind", "kl"))};
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  auto route = read_route(c);
  route.seed = c.get_seed("seed", 0);
  auto mode = c.get_string("mode", "auto");
  const auto L = static_cast<std::size_t>(c.get_int("L", 128));
  const auto output = c.get_string("output", "");
  c.check_all_used();
  if (K < 1) throw ConfigError("K must be at least 1");
  if (mu.dim() != nu.dim()) throw ConfigError("the two sample files have different numbers of columns");
  if (!mu.all_finite() || !nu.all_finite()) throw ConfigError("sample files contain non-finite values");
  out.dim = mu.dim();
  if (mode == "auto") mode = out.dim == 1 ? "univariate" : "sliced";
  out.mode = mode;
  if (mode == "univariate") {
    if (out.dim != 1) throw ConfigError("univariate mode needs one-column sample files");
    const Samples1D X(mu.column(0)), Y(nu.column(0));
    out.histogram = rank_pmf(X, Y, K, route);
    out.estimate = {discrete_f_divergence(*out.histogram, spec), K, spec.kind, out.histogram->provenance,
                    X.size(), Y.size(), route.seed};
  } else if (mode == "sliced") {
    const auto dirs = sample_directions(out.dim, L, derive_seed(route.seed, {stream::kDirections}));
    auto se = sliced_rank_divergence(mu, nu, K, spec, dirs, route);
    out.estimate = se.estimate;
    out.per_slice = std::move(se.per_slice);
  } else if (mode == "axis") {
    out.estimate = axis_corrected_divergence(mu, nu, K, spec, route);
  } else {
    throw ConfigError("unknown estimate mode '" + mode + "'");
  }
  out.config = c.resolved();
  if (!output.empty()) {
    CsvTable t({"mode", "kind", "K", "n_mu", "n_nu", "dim", "seed", "estimate"});
    t.add_row({out.mode, std::string(to_string(spec.kind)), std::to_string(K), std::to_string(mu.rows()),
               std::to_string(nu.rows()), std::to_string(out.dim), std::to_string(route.seed),
               fmt_double(out.estimate.value)});
    t.write(output, output_header("estimate", out.config));
  }
  return out;
}

}  // namespace rankdiv
