// Acceptance run: one PASS/FAIL line per criterion, then a summary.
// Exits 0 whenever the run completes; failures are reported, not hidden.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rankdiv/experiments.hpp"

using namespace rankdiv;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string f(const char* fmt, auto... v) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, v...);
  return buf;
}

const std::vector<EntropyKind> kFive = {EntropyKind::KL, EntropyKind::ChiSq, EntropyKind::JS, EntropyKind::SqHellinger,
                                        EntropyKind::TV};

std::string cache_path() { return ReferenceCache::default_path("rankdiv_reference_cache.json").string(); }

Outcome table1d() {
  Config c;
  c.set("cases", "mean-shift:kl:2,scale:kl:2,multimodal:js:2,heavy-tail:js:0,mean-shift:tv:1");
  c.set("K", "32,256,512");
  c.set("n_mu", "10000");
  c.set("n_nu", "10000");
  c.set("seeds", "10");
  c.set("ref_n", "10000000");
  c.set("cache", cache_path());
  const auto r = run_bench1d(c);
  struct Target {
    std::string family;
    int K;
    double mean, sd;
  };
  const std::vector<Target> targets = {{"mean-shift:kl", 32, 0.775, 0.030}, {"mean-shift:kl", 512, 0.959, 0.048},
                                       {"scale:kl", 512, 0.998, 0.066},     {"multimodal:js", 512, 0.985, 0.063},
                                       {"heavy-tail:js", 512, 0.933, 0.138}, {"mean-shift:tv", 256, 0.994, 0.033}};
  Outcome o;
  for (const auto& t : targets) {
    bool found = false;
    for (const auto& row : r.rows) {
      if (row.c.family + ":" + std::string(to_string(row.c.kind)) != t.family || row.K != t.K) continue;
      found = true;
      o.check(std::abs(row.mean_ratio - t.mean) <= 3 * t.sd,
              f("%s K=%d ratio %.4f (target %.3f +- %.3f)", t.family.c_str(), t.K, row.mean_ratio, t.mean, 3 * t.sd));
    }
    if (!found) o.check(false, t.family + " row missing");
  }
  return o;
}

Outcome kl_vs_n() {
  Outcome o;
  auto run = [](int d, long long n, int seeds) {
    Config c;
    c.set("dims", std::to_string(d));
    c.set("n", std::to_string(n));
    c.set("K", "64");
    c.set("seeds", std::to_string(seeds));
    return run_kl_vs_n(c).rows.at(0);
  };
  const auto a = run(2, 10000, 10);
  o.check(a.mean >= 0.123 && a.mean <= 0.153, f("d=2 n=1e4 mean %.5f in [0.123, 0.153]", a.mean));
  const auto b = run(2, 640000, 10);
  o.check(std::abs(b.mean - 0.138189) <= 0.004, f("d=2 n=6.4e5 mean %.5f sd %.5f (target 0.138189 +- 0.004)", b.mean, b.std));
  const auto c = run(10, 1000000, 5);
  o.check(std::abs(c.mean - 0.785051) <= 0.01, f("d=10 n=1e6 mean %.5f sd %.5f (target 0.785051 +- 0.01)", c.mean, c.std));
  return o;
}

Outcome sliced_row() {
  Config c;
  c.set("cases", "mean-shift:kl:1");
  c.set("dims", "5");
  c.set("K", "64");
  c.set("L", "128");
  c.set("n", "10000");
  c.set("seeds", "10");
  c.set("cache", cache_path());
  const auto row = run_bench_sliced(c).rows.at(0);
  Outcome o;
  o.check(std::abs(row.mean_ratio - 1.087) <= 3 * 0.032,
          f("d*sliced/truth %.4f sd %.4f (target 1.087 +- 0.096), reference %.4f", row.mean_ratio, row.std_ratio,
            row.reference));
  return o;
}

Outcome rates() {
  Config c;
  c.set("cases", "scale:chi2:2,heavy-tail:js:0");
  c.set("K", "16,32,64,128,256,512,1024");
  const auto r = run_rates(c);
  Outcome o;
  const double chi = r.fits.at(0).slope, js = r.fits.at(1).slope;
  o.check(chi <= -0.9, f("chi2 scale slope %.4f <= -0.9", chi));
  o.check(js >= -0.7 && js <= -0.35, f("JS Laplace/Gaussian slope %.4f in [-0.7, -0.35]", js));
  return o;
}

Outcome constants() {
  Outcome o;
  const double targets[] = {0.138189, 0.392526, 0.785051};
  const int dims[] = {2, 5, 10};
  for (int i = 0; i < 3; ++i) {
    const double v = kl_truncgauss_vs_uniform(box_for_dim(dims[i]));
    o.check(std::abs(v - targets[i]) <= 1e-5, f("box d=%d %.7f", dims[i], v));
  }
  const double ms = kl_gaussian(0, 1, 2, 1);
  o.check(ms == 2.0, f("mean-shift KL %.17g", ms));
  const double sc = kl_gaussian(0, 1, 0, 2);
  o.check(std::abs(sc - 0.318147) <= 1e-5, f("scale KL %.7f", sc));
  const double js = continuous_divergence(Dist1D::laplace(0, 1), Dist1D::gaussian(0, 1), EntropySpec{EntropyKind::JS});
  o.check(std::abs(js - 0.021869) <= 1e-4, f("Laplace/Gaussian JS %.7f", js));
  return o;
}

Outcome monotonicity() {
  std::vector<std::pair<Dist1D, Dist1D>> pairs;
  for (double d : {0.5, 1.0, 2.0}) pairs.emplace_back(Dist1D::gaussian(d, 1.0), Dist1D::gaussian(0.0, 1.0));
  for (double s : {1.5, 2.0}) pairs.emplace_back(Dist1D::gaussian(0.0, 1.0), Dist1D::gaussian(0.0, s));
  Outcome o;
  int checks = 0, bad = 0;
  double worst = -INFINITY;
  for (const auto& [mu, nu] : pairs) {
    const auto r = quantile_density_ratio(mu, nu);
    std::vector<RankHistogram> pmfs;
    for (int K = 2; K <= 512; K *= 2) pmfs.push_back(rank_pmf_exact(r, K, default_quad_points(K)));
    for (auto k : kFive) {
      const EntropySpec spec{k};
      const double cont = continuous_divergence(mu, nu, spec);
      double prev = 0.0;
      for (const auto& P : pmfs) {
        const double v = discrete_f_divergence(P, spec);
        worst = std::max({worst, prev - v, v - cont});
        bad += (v < prev - 1e-9) + (v > cont + 1e-9);
        checks += 2;
        prev = v;
      }
    }
  }
  o.check(bad == 0, f("%d/%d comparisons violated, worst excess %.3g", bad, checks, worst));
  return o;
}

Outcome uniformity() {
  Outcome o;
  int bad = 0, checks = 0;
  double worst_p = 0.0, worst_d = 0.0;
  for (int K : {1, 2, 7, 16, 64, 255, 512, 1024}) {
    const auto P = rank_pmf_exact(QuantileDensityRatio::identity(), K, default_quad_points(K));
    for (double p : P.probs) worst_p = std::max(worst_p, std::abs(p * (K + 1.0) - 1.0));
    for (auto k : kAllEntropyKinds) {
      const double d = discrete_f_divergence(P, EntropySpec{k});
      worst_d = std::max(worst_d, std::abs(d));
      ++checks;
      bad += !(std::abs(d) <= 1e-12);
    }
  }
  o.check(worst_p <= 1e-12, f("max |(K+1)p - 1| = %.3g", worst_p));
  o.check(bad == 0, f("max |D| = %.3g over %d generator/K pairs", worst_d, checks));
  return o;
}

Outcome tv_isl() {
  std::mt19937_64 rng(2024);
  std::exponential_distribution<double> e(1.0);
  std::uniform_int_distribution<int> Kd(1, 512);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int K = Kd(rng);
    std::vector<double> p(K + 1);
    double s = 0.0;
    for (auto& x : p) s += (x = e(rng));
    for (auto& x : p) x /= s;
    const auto [tv, isl] = tv_isl_identity_check(RankHistogram{K, p, Provenance::Smoothed});
    double direct = 0.0;
    for (double x : p) direct += std::abs(x - 1.0 / (K + 1.0));
    worst = std::max({worst, std::abs(tv - isl), std::abs(isl - direct)});
  }
  Outcome o;
  o.check(worst <= 1e-14, f("max deviation %.3g over 1000 pmfs", worst));
  return o;
}

Outcome bounds() {
  Outcome o;
  for (const char* param : {"0", "0.5"}) {
    Config c;
    c.set("family", "mean-shift");
    c.set("param", param);
    c.set("kind", "tv");
    c.set("K", "8");
    c.set("trials", "200");
    c.set("delta", "0.05");
    const auto r = run_bounds(c);
    o.check(r.mean_ok, f("shift %s mean |err| %.4g <= bound %.4g", param, r.mean_abs_error, r.mean_bound));
    o.check(r.coverage_ok, f("shift %s coverage %.3f >= 0.95", param, r.coverage));
  }
  return o;
}

Outcome pushforward() {
  const std::vector<std::function<double(double)>> maps = {
      [](double x) { return std::exp(x); }, [](double x) { return x * x * x + x; },
      [](double x) { return std::atan(x); }, [](double x) { return 3.0 * x - 1.0; }};
  const auto mu = Dist1D::laplace(0.3, 1.0), nu = Dist1D::gaussian(0.0, 1.0);
  int bad = 0, checks = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto X = mu.sample(2000, derive_seed(s, {stream::kMu})), Y = nu.sample(3000, derive_seed(s, {stream::kNu}));
    for (std::size_t m = 0; m < maps.size(); ++m) {
      std::vector<double> gx, gy;
      for (double x : X.values()) gx.push_back(maps[m](x));
      for (double y : Y.values()) gy.push_back(maps[m](y));
      const Samples1D GX(gx), GY(gy);
      for (int K : {4, 64, 256}) {
        for (auto k : kFive) {
          const EntropySpec spec{k};
          const auto P = rank_pmf(X, Y, K, RouteOptions{}), Q = rank_pmf(GX, GY, K, RouteOptions{});
          const bool same = P.probs == Q.probs && rank_divergence(X, Y, K, spec).value == rank_divergence(GX, GY, K, spec).value;
          ++checks;
          bad += !same;
        }
      }
    }
  }
  Outcome o;
  o.check(bad == 0, f("%d/%d estimates differ bitwise", bad, checks));
  return o;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Outcome transport() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U01(0.0, 1.0);
  const std::vector<EntropyKind> smooth = {EntropyKind::KL, EntropyKind::JS, EntropyKind::ChiSq, EntropyKind::SqHellinger};

  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const EntropySpec spec{smooth[c % smooth.size()]};
    std::vector<double> U(32);
    for (auto& u : U) u = 0.02 + 0.96 * U01(rng);
    const auto g = rank_energy_gradient(U, 16, spec);
    std::vector<double> diff(U.size()), fd(U.size());
    for (std::size_t i = 0; i < U.size(); ++i) {
      auto a = U, b = U;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      fd[i] = (rank_energy(a, 16, spec) - rank_energy(b, 16, spec)) / 2e-6;
      diff[i] = g[i] - fd[i];
    }
    worst = std::max(worst, l2(diff) / l2(fd));
  }
  o.check(worst < 1e-5, f("gradient FD max rel err %.2g over 100 configs", worst));

  int increases = 0;
  for (int c = 0; c < 100; ++c) {
    std::vector<double> U0(64);
    for (auto& u : U0) u = U01(rng) < 0.5 ? 0.5 * U01(rng) : U01(rng);
    const double eta = 0.05 + U01(rng);
    const auto r = rank_prox(U0, 2 + static_cast<int>(62 * U01(rng)), EntropySpec{smooth[c % smooth.size()]}, eta, 8,
                             2.0 * eta);
    for (std::size_t s = 1; s < r.objectives.size(); ++s) increases += r.objectives[s] > r.objectives[s - 1];
  }
  o.check(increases == 0, f("prox objective increases: %d over 100 calls", increases));

  const auto X = sample_isotropic(1000, 2, derive_seed(1, {stream::kInitial}));
  const auto Y = sample_target(Target::TwoBlobs, 1000, derive_seed(1, {stream::kReference}));
  TransportConfig cfg;
  cfg.total_steps = 400;
  cfg.seed = 1;
  const auto run = run_transport(X, Y, cfg, {400});
  double best = run.trace.front().energy;
  for (const auto& d : run.trace) best = std::min(best, d.energy);
  const double frac = run.trace.back().energy / run.trace.front().energy;
  o.check(frac < 0.15, f("two-blobs energy %.4f -> %.4f (%.1f%%, min over run %.4f)", run.trace.front().energy,
                         run.trace.back().energy, 100 * frac, best));

  cfg.total_steps = 25;
  cfg.seed = 9;
  const auto a = run_transport(X, Y, cfg, {0, 10, 25}), b = run_transport(X, Y, cfg, {0, 10, 25});
  bool same = a.snapshots.size() == b.snapshots.size();
  for (std::size_t k = 0; same && k < a.snapshots.size(); ++k)
    same = a.snapshots[k].positions.data() == b.snapshots[k].positions.data();
  for (std::size_t t = 0; same && t < a.trace.size(); ++t) same = a.trace[t].energy == b.trace[t].energy;
  o.check(same, "repeat run with the same seed is bitwise identical");
  return o;
}

Outcome variance_decay() {
  const auto mu = Dist1D::gaussian(1, 1), nu = Dist1D::gaussian(0, 1);
  std::vector<double> sd;
  const std::size_t Ns[] = {1000, 4000, 16000};
  for (std::size_t N : Ns) {
    std::vector<double> v;
    for (std::uint64_t s = 0; s < 30; ++s)
      v.push_back(rank_divergence(mu.sample(N, derive_seed(s, {stream::kMu, N})),
                                  nu.sample(N, derive_seed(s, {stream::kNu, N})), 64, EntropySpec{EntropyKind::TV})
                      .value);
    sd.push_back(stddev_of(v));
  }
  Outcome o;
  for (int i = 0; i < 2; ++i) {
    const double q = sd[i] / sd[i + 1];
    o.check(q >= 2.0 / 1.6 && q <= 2.0 * 1.6,
            f("sd(N=%zu)/sd(N=%zu) = %.3f (expected 2 within factor 1.6)", Ns[i], Ns[i + 1], q));
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion all[] = {{"univariate benchmark ratios", table1d},
                           {"axis-corrected KL against n", kl_vs_n},
                           {"sliced mean-shift ratio", sliced_row},
                           {"noise-free convergence slopes", rates},
                           {"reference constants", constants},
                           {"monotonicity in K", monotonicity},
                           {"uniformity at equality", uniformity},
                           {"TV/ISL identity", tv_isl},
                           {"finite-sample and concentration bounds", bounds},
                           {"pushforward invariance", pushforward},
                           {"transport", transport},
                           {"variance decay", variance_decay}};
  int passed = 0, n = 0;
  for (const auto& c : all) {
    ++n;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    passed += o.pass;
    std::printf("%s %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", n, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("SUMMARY %d/%d criteria passed\n", passed, n);
  return 0;
}
