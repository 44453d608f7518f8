#pragma once
// Gauss-Legendre rules and composite panel rules.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rankdiv/error.hpp"

namespace rankdiv {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

/// Order used for every panel of a composite rule.
inline constexpr int kPanelOrder = 16;

inline const QuadratureRule& panel_rule() {
  static const QuadratureRule rule = gauss_legendre(kPanelOrder);
  return rule;
}

/// Composite Gauss-Legendre rule over consecutive panels [edges[k], edges[k+1]].
inline QuadratureRule composite_rule(const std::vector<double>& edges) {
  const auto& base = panel_rule();
  QuadratureRule out;
  if (edges.size() < 2) return out;
  out.nodes.reserve((edges.size() - 1) * base.size());
  out.weights.reserve((edges.size() - 1) * base.size());
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], b = edges[k + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t i = 0; i < base.size(); ++i) {
      out.nodes.push_back(mid + half * base.nodes[i]);
      out.weights.push_back(half * base.weights[i]);
    }
  }
  return out;
}

/// Uniform subdivision of [a, b] into panels no wider than h, always
/// including the given breakpoints as panel edges.
inline std::vector<double> panel_edges(double a, double b, double h, std::vector<double> breakpoints = {}) {
  std::vector<double> cuts{a, b};
  for (double x : breakpoints) {
    if (x > a && x < b) cuts.push_back(x);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<double> edges;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / h)));
    for (std::size_t j = 0; j < m; ++j) edges.push_back(lo + (hi - lo) * static_cast<double>(j) / m);
  }
  edges.push_back(cuts.back());
  return edges;
}

}  // namespace rankdiv
