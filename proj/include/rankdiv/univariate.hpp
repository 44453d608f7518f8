#pragma once
// One-dimensional building blocks: empirical CDF / quantile, Bernstein basis,
// rank counting and the three routes to the rank histogram Q^(K).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankdiv/error.hpp"
#include "rankdiv/rng.hpp"

namespace rankdiv {

class Samples1D {
 public:
  Samples1D() = default;
  explicit Samples1D(std::vector<double> values, std::uint64_t seed = 0) : values_(std::move(values)), seed_(seed) {
    if (values_.empty()) throw DomainError("Samples1D needs at least one value");
    for (double v : values_) {
      if (std::isnan(v)) throw DomainError("Samples1D contains NaN");
    }
    order_.resize(values_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return values_[a] < values_[b]; });
    sorted_.resize(values_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) sorted_[k] = values_[order_[k]];
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  /// values()[order()[k]] is the k-th smallest value (stable for ties).
  const std::vector<std::size_t>& order() const { return order_; }
  const std::vector<double>& sorted() const { return sorted_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<double> values_;
  std::vector<std::size_t> order_;
  std::vector<double> sorted_;
  std::uint64_t seed_ = 0;
};

/// Fraction of values <= x.
inline double empirical_cdf(const Samples1D& s, double x) {
  const auto& v = s.sorted();
  const auto c = std::upper_bound(v.begin(), v.end(), x) - v.begin();
  return static_cast<double>(c) / static_cast<double>(v.size());
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Beyond this many temperatures the logistic is 0 or 1 to double precision.
inline constexpr double kSigmoidWindow = 36.0;

/// (1/M) sum_j sigmoid((x - y_j) / tau).
inline double smoothed_cdf(const Samples1D& s, double x, double tau) {
  if (!(tau > 0.0)) throw DomainError("smoothed_cdf needs tau > 0");
  const auto& v = s.sorted();
  const double w = kSigmoidWindow * tau;
  const auto lo = std::lower_bound(v.begin(), v.end(), x - w);
  const auto hi = std::upper_bound(lo, v.end(), x + w);
  double acc = static_cast<double>(lo - v.begin());
  for (auto it = lo; it != hi; ++it) acc += sigmoid((x - *it) / tau);
  return acc / static_cast<double>(v.size());
}

/// smoothed_cdf at every point of xs. Same value up to rounding, but the
/// exponentials are factored per block of reference points, so each pair
/// costs a multiply and a divide instead of an exp.
inline std::vector<double> smoothed_cdf_batch(const Samples1D& s, std::span<const double> xs, double tau) {
  if (!(tau > 0.0)) throw DomainError("smoothed_cdf needs tau > 0");
  const auto& v = s.sorted();
  const std::size_t M = v.size();
  const double w = kSigmoidWindow * tau;
  // blocks spanning at most 256 tau keep exp((y - anchor) / tau) finite
  std::vector<std::size_t> block_start;
  std::vector<double> scaled(M);
  double anchor = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    if (block_start.empty() || v[j] - anchor > 256.0 * tau) {
      block_start.push_back(j);
      anchor = v[j];
    }
    scaled[j] = std::exp((v[j] - anchor) / tau);
  }
  block_start.push_back(M);
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    const auto lo = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x - w) - v.begin());
    const auto hi = static_cast<std::size_t>(std::upper_bound(v.begin() + lo, v.end(), x + w) - v.begin());
    double acc = static_cast<double>(lo);
    std::size_t b = static_cast<std::size_t>(std::upper_bound(block_start.begin(), block_start.end(), lo) -
                                             block_start.begin()) - 1;
    for (std::size_t j = lo; j < hi; ++b) {
      const std::size_t end = std::min(hi, block_start[b + 1]);
      // sigmoid((x - y) / tau) = 1 / (1 + exp((y - anchor) / tau) exp((anchor - x) / tau))
      const double g = std::exp((v[block_start[b]] - x) / tau);
      for (; j < end; ++j) acc += 1.0 / (1.0 + scaled[j] * g);
    }
    out[i] = acc / static_cast<double>(M);
  }
  return out;
}

/// Inverse of smoothed_cdf(s, ., tau), linear between knots spaced tau / 10
/// (at most 8192) over [min - 12 tau, max + 12 tau]. Arguments below or above
/// the CDF at the end knots map to the end knots.
class SmoothedQuantile {
 public:
  SmoothedQuantile(const Samples1D& s, double tau) {
    if (!(tau > 0.0)) throw DomainError("SmoothedQuantile needs tau > 0");
    const double lo = s.sorted().front() - 12.0 * tau, hi = s.sorted().back() + 12.0 * tau;
    const auto G = static_cast<std::size_t>(std::clamp(std::ceil((hi - lo) / (0.1 * tau)), 64.0, 8192.0));
    y_.resize(G + 1);
    for (std::size_t g = 0; g <= G; ++g) y_[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(G);
    F_ = smoothed_cdf_batch(s, y_, tau);
  }

  double operator()(double u) const {
    const auto it = std::lower_bound(F_.begin(), F_.end(), u);
    if (it == F_.begin()) return y_.front();
    if (it == F_.end()) return y_.back();
    const auto k = static_cast<std::size_t>(it - F_.begin());
    const double span = F_[k] - F_[k - 1];
    const double t = span > 0.0 ? (u - F_[k - 1]) / span : 0.0;
    return y_[k - 1] + t * (y_[k] - y_[k - 1]);
  }

 private:
  std::vector<double> y_, F_;
};

/// Inverse of the piecewise-linear interpolated CDF through the order
/// statistics: u = 0 gives the minimum, u = 1 the maximum.
inline double empirical_quantile(const Samples1D& s, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("empirical_quantile needs u in [0, 1]");
  const auto& v = s.sorted();
  const double h = u * static_cast<double>(v.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(h));
  if (k + 1 >= v.size()) return v.back();
  const double frac = h - static_cast<double>(k);
  return v[k] + frac * (v[k + 1] - v[k]);
}

/// Writes b_{0,K}(u), ..., b_{K,K}(u) into out[0..K]. Starts at the mode in
/// log space and recurs outward, so nothing overflows for large K.
inline void bernstein_basis_into(int K, double u, double* out) {
  if (K < 0) throw DomainError("Bernstein order must be nonnegative");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("Bernstein basis needs u in [0, 1]");
  std::fill(out, out + K + 1, 0.0);
  if (u == 0.0) {
    out[0] = 1.0;
    return;
  }
  if (u == 1.0) {
    out[K] = 1.0;
    return;
  }
  // (K - n) / (n + 1), n / (K - n + 1) and log n!, cached for the last order seen
  thread_local int cached_K = -1;
  thread_local std::vector<double> up, down, lfact;
  if (cached_K != K) {
    up.assign(K + 1, 0.0);
    down.assign(K + 1, 0.0);
    lfact.assign(K + 1, 0.0);
    for (int n = 0; n <= K; ++n) {
      up[n] = static_cast<double>(K - n) / (n + 1);
      down[n] = static_cast<double>(n) / (K - n + 1);
      lfact[n] = std::lgamma(n + 1.0);
    }
    cached_K = K;
  }
  const int m = std::clamp(static_cast<int>(std::floor((K + 1) * u)), 0, K);
  const double lu = std::log(u), l1u = std::log1p(-u);
  out[m] = std::exp(lfact[K] - lfact[m] - lfact[K - m] + m * lu + (K - m) * l1u);
  const double odds = u / (1.0 - u), inv_odds = (1.0 - u) / u;
  // terms below 1e-18 of the mode do not change the normalized result
  const double cut = out[m] * 1e-18;
  double sum = out[m];
  for (int n = m; n < K; ++n) {
    const double v = out[n] * up[n] * odds;
    out[n + 1] = v;
    sum += v;
    if (v < cut) break;
  }
  for (int n = m; n > 0; --n) {
    const double v = out[n] * down[n] * inv_odds;
    out[n - 1] = v;
    sum += v;
    if (v < cut) break;
  }
  const double inv = 1.0 / sum;
  for (int n = 0; n <= K; ++n) out[n] *= inv;
}

inline std::vector<double> bernstein_basis(int K, double u) {
  std::vector<double> out(static_cast<std::size_t>(K < 0 ? 0 : K) + 1);
  bernstein_basis_into(K, u, out.data());
  return out;
}

/// d/du b_{n,K}(u) = K (b_{n-1,K-1}(u) - b_{n,K-1}(u)).
inline std::vector<double> bernstein_basis_derivative(int K, double u) {
  if (K < 1) throw DomainError("Bernstein derivative needs K >= 1");
  const auto low = bernstein_basis(K - 1, u);
  std::vector<double> d(K + 1, 0.0);
  for (int n = 0; n <= K; ++n) {
    const double prev = n >= 1 ? low[n - 1] : 0.0;
    const double cur = n <= K - 1 ? low[n] : 0.0;
    d[n] = K * (prev - cur);
  }
  return d;
}

/// Number of reference draws <= x (ties count).
inline int rank_count(double x, std::span<const double> reference_draws) {
  int c = 0;
  for (double y : reference_draws) c += (y <= x) ? 1 : 0;
  return c;
}

enum class Provenance { Counted, Smoothed, QuadratureExact };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Counted: return "counted";
    case Provenance::Smoothed: return "smoothed";
    case Provenance::QuadratureExact: return "quadrature_exact";
  }
  return "?";
}

inline Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::Counted, Provenance::Smoothed, Provenance::QuadratureExact}) {
    if (to_string(p) == s) return p;
  }
  throw DomainError("unknown provenance '" + std::string(s) + "'");
}

struct RankHistogram {
  int order = 0;
  std::vector<double> probs;
  Provenance provenance = Provenance::Smoothed;

  /// Throws unless probs is a pmf on {0..order}.
  void validate(double tol = 1e-12) const {
    if (order < 0 || probs.size() != static_cast<std::size_t>(order) + 1)
      throw DomainError("rank histogram has wrong length");
    double s = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw DomainError("rank histogram has a negative or NaN bin");
      s += p;
    }
    if (std::abs(s - 1.0) > tol) throw DomainError("rank histogram does not sum to one");
  }
};

inline RankHistogram uniform_histogram(int K) {
  return {K, std::vector<double>(K + 1, 1.0 / (K + 1)), Provenance::QuadratureExact};
}

/// Literal estimator: for every X_i draw K reference values with
/// replacement from nu and histogram the rank counts. A draw is represented
/// by its uniform position in the sorted reference sample, which is the same
/// law as drawing the value itself. X is visited in sorted order.
inline RankHistogram rank_pmf_counted(const Samples1D& mu, const Samples1D& nu, int K, std::uint64_t rng_seed) {
  if (K < 0) throw DomainError("K must be nonnegative");
  Rng rng = make_rng(rng_seed);
  const auto& ys = nu.sorted();
  const std::size_t M = ys.size();
  std::uniform_int_distribution<std::size_t> pick(0, M - 1);
  std::vector<double> counts(K + 1, 0.0);
  std::size_t below = 0;
  for (double x : mu.sorted()) {
    while (below < M && ys[below] <= x) ++below;
    int rank = 0;
    for (int k = 0; k < K; ++k) rank += pick(rng) < below ? 1 : 0;
    counts[rank] += 1.0;
  }
  const double n = static_cast<double>(mu.size());
  for (double& c : counts) c /= n;
  return {K, std::move(counts), Provenance::Counted};
}

/// (1/N) sum_i b_{.,K}(U_i) with U_i the empirical (tau = 0) or logistic
/// smoothed (tau > 0) CDF of nu at X_i. Terms are summed in sorted X order.
inline RankHistogram rank_pmf_smoothed(const Samples1D& mu, const Samples1D& nu, int K, double tau) {
  if (K < 0) throw DomainError("K must be nonnegative");
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  std::vector<double> probs(K + 1, 0.0), basis(K + 1);
  const auto& xs = mu.sorted();
  const auto& ys = nu.sorted();
  const double M = static_cast<double>(ys.size());
  if (tau == 0.0) {
    std::size_t c = 0;
    std::size_t last = static_cast<std::size_t>(-1);
    for (double x : xs) {
      while (c < ys.size() && ys[c] <= x) ++c;
      if (c != last) {
        bernstein_basis_into(K, static_cast<double>(c) / M, basis.data());
        last = c;
      }
      for (int n = 0; n <= K; ++n) probs[n] += basis[n];
    }
  } else {
    for (double x : xs) {
      bernstein_basis_into(K, std::min(1.0, smoothed_cdf(nu, x, tau)), basis.data());
      for (int n = 0; n <= K; ++n) probs[n] += basis[n];
    }
  }
  const double N = static_cast<double>(xs.size());
  for (double& p : probs) p /= N;
  return {K, std::move(probs), Provenance::Smoothed};
}

/// Bernstein histogram of given ranks U (used by the transport energy).
inline std::vector<double> bernstein_histogram(std::span<const double> U, int K) {
  std::vector<double> probs(K + 1, 0.0), basis(K + 1);
  for (double u : U) {
    bernstein_basis_into(K, u, basis.data());
    for (int n = 0; n <= K; ++n) probs[n] += basis[n];
  }
  for (double& p : probs) p /= static_cast<double>(U.size());
  return probs;
}

}  // namespace rankdiv
