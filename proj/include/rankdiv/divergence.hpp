#pragma once
// Discrete f-divergence on {0..K}, the rank-statistic divergence and the
// finite-sample / concentration bounds.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rankdiv/entropy.hpp"
#include "rankdiv/error.hpp"
#include "rankdiv/ratio.hpp"
#include "rankdiv/univariate.hpp"

namespace rankdiv {

/// (1/(K+1)) sum_n f((K+1) P(n)). Generators that are infinite at zero
/// (reverse_kl, jeffreys) give +inf as soon as one bin is empty.
inline double discrete_f_divergence(const RankHistogram& P, const EntropySpec& spec) {
  const int K = P.order;
  const double k1 = K + 1.0;
  double s = 0.0;
  for (double p : P.probs) {
    if (p == 0.0 && infinite_at_zero(spec.kind)) return std::numeric_limits<double>::infinity();
    s += eval(spec, k1 * p);
  }
  return s / k1;
}

enum class Route { Counted, Smoothed };

inline std::string_view to_string(Route r) { return r == Route::Counted ? "counted" : "smoothed"; }

inline Route parse_route(std::string_view s) {
  if (s == "counted") return Route::Counted;
  if (s == "smoothed") return Route::Smoothed;
  throw DomainError("unknown route '" + std::string(s) + "'");
}

struct RouteOptions {
  Route route = Route::Smoothed;
  double tau = 0.0;         // smoothed route only; 0 means the hard empirical CDF
  std::uint64_t seed = 0;   // counted route only
};

struct DivergenceEstimate {
  double value = 0.0;
  int K = 0;
  EntropyKind entropy = EntropyKind::KL;
  Provenance provenance = Provenance::Smoothed;
  std::size_t n_mu = 0, n_nu = 0;
  std::uint64_t seed = 0;

  bool infinite() const { return std::isinf(value); }
};

inline RankHistogram rank_pmf(const Samples1D& mu, const Samples1D& nu, int K, const RouteOptions& opt) {
  return opt.route == Route::Counted ? rank_pmf_counted(mu, nu, K, opt.seed) : rank_pmf_smoothed(mu, nu, K, opt.tau);
}

/// D^(K)_{f,nu}(mu) estimated from samples.
inline DivergenceEstimate rank_divergence(const Samples1D& mu, const Samples1D& nu, int K, const EntropySpec& spec,
                                          const RouteOptions& opt = {}) {
  const auto P = rank_pmf(mu, nu, K, opt);
  return {discrete_f_divergence(P, spec), K, spec.kind, P.provenance, mu.size(), nu.size(), opt.seed};
}

/// Noise-free D^(K) from the exact pmf.
inline DivergenceEstimate rank_divergence_exact(const QuantileDensityRatio& ratio, int K, const EntropySpec& spec,
                                                int quad_points) {
  const auto P = rank_pmf_exact(ratio, K, quad_points);
  return {discrete_f_divergence(P, spec), K, spec.kind, Provenance::QuadratureExact, 0, 0, 0};
}

inline DivergenceEstimate rank_divergence_exact(const QuantileDensityRatio& ratio, int K, const EntropySpec& spec) {
  return rank_divergence_exact(ratio, K, spec, default_quad_points(K));
}

/// (D^(K) with the |t-1| generator, sum_n |P(n) - 1/(K+1)|). Both sides are
/// evaluated independently; they agree up to rounding.
inline std::pair<double, double> tv_isl_identity_check(const RankHistogram& P) {
  const double lhs = discrete_f_divergence(P, EntropySpec{EntropyKind::TV});
  const double u = 1.0 / (P.order + 1.0);
  double rhs = 0.0;
  for (double p : P.probs) rhs += std::abs(p - u);
  return {lhs, rhs};
}

struct TheoryBounds {
  double lipschitz = 0.0;
  int K = 0;
  std::size_t N = 0, M = 0;
  double finite_sample_mean_bound = 0.0;

  /// Radius r with P(|D_hat - D| > r) <= delta.
  double concentration_radius(double delta) const {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    const double inv = 1.0 / static_cast<double>(N) + 1.0 / static_cast<double>(M);
    return lipschitz * (K + 1.0) * std::sqrt(2.0 * std::log(2.0 / delta) * inv);
  }
};

inline TheoryBounds theory_bounds(const EntropySpec& spec, int K, std::size_t N, std::size_t M) {
  if (N < 1 || M < 1) throw DomainError("sample sizes must be at least 1");
  if (K < 0) throw DomainError("K must be nonnegative");
  TheoryBounds b;
  b.lipschitz = lipschitz_bound(spec, K + 1.0);
  b.K = K;
  b.N = N;
  b.M = M;
  b.finite_sample_mean_bound = b.lipschitz * (K + 1.0) * std::sqrt(2.0 * std::numbers::pi) *
                               (1.0 / std::sqrt(static_cast<double>(N)) + 1.0 / std::sqrt(static_cast<double>(M)));
  return b;
}

// Small statistics helpers shared by the experiment runners.

inline double mean_of(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope needs two or more matching points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("loglog_slope needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace rankdiv
