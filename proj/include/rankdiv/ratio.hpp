#pragma once
// Quantile-domain density ratio r = (dmu/dnu) o Q_nu and the exact rank pmf
// Q^(K)(n) = int_0^1 b_{n,K}(s) r(s) ds.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "rankdiv/error.hpp"
#include "rankdiv/quadrature.hpp"
#include "rankdiv/univariate.hpp"

namespace rankdiv {

/// x-space description of a ratio coming from a distribution pair. With it
/// the pmf integral is evaluated as int b_{n,K}(F_nu(y)) p_mu(y) dy, which
/// avoids the endpoint singularities of r on (0, 1).
struct RatioPushforward {
  std::function<double(double)> pdf_mu;
  std::function<double(double)> cdf_nu;
  double core_lo = 0.0, core_hi = 0.0;  // region where either law has mass
  double tail_lo = 0.0, tail_hi = 0.0;  // mu tails cut at negligible mass
  double scale = 1.0;                   // length scale of nu
  std::vector<double> breakpoints;      // kinks and jumps of the integrand
};

class QuantileDensityRatio {
 public:
  static constexpr double kWindow = 1e-9;

  explicit QuantileDensityRatio(std::function<double(double)> r, std::optional<RatioPushforward> pf = std::nullopt)
      : r_(std::move(r)), pf_(std::move(pf)) {}

  /// r(u), with u clamped to [kWindow, 1 - kWindow].
  double operator()(double u) const { return r_(std::clamp(u, kWindow, 1.0 - kWindow)); }

  const std::optional<RatioPushforward>& pushforward() const { return pf_; }

  static QuantileDensityRatio identity() {
    return QuantileDensityRatio([](double) { return 1.0; });
  }

  /// w a + (1 - w) b. Both must share the same reference law nu.
  static QuantileDensityRatio mixture(const QuantileDensityRatio& a, const QuantileDensityRatio& b, double w) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("mixture weight must lie in [0, 1]");
    auto r = [a, b, w](double u) { return w * a(u) + (1.0 - w) * b(u); };
    std::optional<RatioPushforward> pf;
    if (a.pf_ && b.pf_) {
      RatioPushforward m;
      const auto pa = a.pf_->pdf_mu, pb = b.pf_->pdf_mu;
      m.pdf_mu = [pa, pb, w](double x) { return w * pa(x) + (1.0 - w) * pb(x); };
      m.cdf_nu = a.pf_->cdf_nu;
      m.core_lo = std::min(a.pf_->core_lo, b.pf_->core_lo);
      m.core_hi = std::max(a.pf_->core_hi, b.pf_->core_hi);
      m.tail_lo = std::min(a.pf_->tail_lo, b.pf_->tail_lo);
      m.tail_hi = std::max(a.pf_->tail_hi, b.pf_->tail_hi);
      m.scale = std::min(a.pf_->scale, b.pf_->scale);
      m.breakpoints = a.pf_->breakpoints;
      m.breakpoints.insert(m.breakpoints.end(), b.pf_->breakpoints.begin(), b.pf_->breakpoints.end());
      pf = std::move(m);
    }
    return QuantileDensityRatio(std::move(r), std::move(pf));
  }

 private:
  std::function<double(double)> r_;
  std::optional<RatioPushforward> pf_;
};

namespace detail {

/// Panel width used for the Bernstein integrand at order K.
inline double exact_panel_width(int K) { return std::min(0.05, 0.3 / std::sqrt(K + 1.0)); }

/// Panels widening geometrically from `from` towards `to` (either direction).
inline void append_tail_edges(std::vector<double>& edges, double from, double to, double h) {
  const double dir = to > from ? 1.0 : -1.0;
  double x = from, w = h;
  while ((to - x) * dir > w) {
    x += dir * w;
    edges.push_back(x);
    w *= 2.0;
  }
  edges.push_back(to);
}

inline QuadratureRule exact_rule_x(const RatioPushforward& pf, int K, int min_nodes) {
  double h = exact_panel_width(K) * pf.scale;
  for (;;) {
    auto core = panel_edges(pf.core_lo, pf.core_hi, h, pf.breakpoints);
    std::vector<double> left{pf.core_lo}, right{pf.core_hi};
    if (pf.tail_lo < pf.core_lo) append_tail_edges(left, pf.core_lo, pf.tail_lo, h);
    if (pf.tail_hi > pf.core_hi) append_tail_edges(right, pf.core_hi, pf.tail_hi, h);
    std::vector<double> edges(left.rbegin(), left.rend());
    edges.insert(edges.end(), core.begin() + 1, core.end());
    edges.insert(edges.end(), right.begin() + 1, right.end());
    auto rule = composite_rule(edges);
    if (static_cast<int>(rule.size()) >= min_nodes) return rule;
    h *= 0.5;
  }
}

inline QuadratureRule exact_rule_u(int K, int min_nodes) {
  double h = exact_panel_width(K);
  for (;;) {
    constexpr double kEdge = 0.01;
    std::vector<double> edges{0.0};
    for (double e = 1e-14; e < kEdge; e *= 4.0) edges.push_back(e);
    auto mid = panel_edges(kEdge, 1.0 - kEdge, h);
    edges.insert(edges.end(), mid.begin(), mid.end());
    std::vector<double> upper;
    for (double e = 1e-14; e < kEdge; e *= 4.0) upper.push_back(1.0 - e);
    edges.insert(edges.end(), upper.rbegin(), upper.rend());
    edges.push_back(1.0);
    auto rule = composite_rule(edges);
    if (static_cast<int>(rule.size()) >= min_nodes) return rule;
    h *= 0.5;
  }
}

}  // namespace detail

/// Default node count for exact pmfs.
inline int default_quad_points(int K) { return K > 256 ? 2048 : 512; }

/// Raw quadrature values of int b_{n,K}(s) r(s) ds, before renormalization.
inline std::vector<double> rank_pmf_exact_unnormalized(const QuantileDensityRatio& ratio, int K, int quad_points) {
  if (K < 0) throw DomainError("K must be nonnegative");
  if (quad_points < 64) throw DomainError("quad_points must be at least 64");
  std::vector<double> probs(K + 1, 0.0), basis(K + 1);
  if (const auto& pf = ratio.pushforward()) {
    const auto rule = detail::exact_rule_x(*pf, K, quad_points);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double y = rule.nodes[i];
      const double p = pf->pdf_mu(y);
      if (!std::isfinite(p)) throw EvaluationError("non-finite density at a quadrature node");
      if (p == 0.0) continue;
      const double u = pf->cdf_nu(y);
      if (!(u >= 0.0 && u <= 1.0)) throw EvaluationError("reference CDF outside [0, 1] at a quadrature node");
      bernstein_basis_into(K, u, basis.data());
      const double wp = rule.weights[i] * p;
      for (int n = 0; n <= K; ++n) probs[n] += wp * basis[n];
    }
  } else {
    const auto rule = detail::exact_rule_u(K, quad_points);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double r = ratio(rule.nodes[i]);
      if (!std::isfinite(r)) throw EvaluationError("non-finite density ratio at a quadrature node");
      bernstein_basis_into(K, rule.nodes[i], basis.data());
      const double wr = rule.weights[i] * r;
      for (int n = 0; n <= K; ++n) probs[n] += wr * basis[n];
    }
  }
  return probs;
}

inline RankHistogram rank_pmf_exact(const QuantileDensityRatio& ratio, int K, int quad_points) {
  auto probs = rank_pmf_exact_unnormalized(ratio, K, quad_points);
  double s = 0.0;
  for (double p : probs) s += p;
  if (!(s > 0.0)) throw EvaluationError("exact rank pmf has no mass");
  for (double& p : probs) p /= s;
  return {K, std::move(probs), Provenance::QuadratureExact};
}

inline RankHistogram rank_pmf_exact(const QuantileDensityRatio& ratio, int K) {
  return rank_pmf_exact(ratio, K, default_quad_points(K));
}

}  // namespace rankdiv
