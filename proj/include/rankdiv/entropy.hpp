#pragma once
// Entropy functions f: convex, lower semicontinuous on [0, inf), f(1) = 0.
// Each generator D_f(P || Q) = sum_n Q(n) f(P(n) / Q(n)) is normalised so
// that the continuous divergence matches the usual textbook quantity:
//
//   tv          |t - 1|                         (L1 distance, twice the TV)
//   kl          t log t
//   reverse_kl  -log t
//   js          1/2 [t log(2t/(t+1)) + log(2/(t+1))]   (Jensen-Shannon)
//   hellinger2  1/2 (sqrt(t) - 1)^2              (1 - Bhattacharyya coeff.)
//   chi2        1/2 (t - 1)^2
//   triangular  (t - 1)^2 / (t + 1)
//   jeffreys    (t - 1) log t

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "rankdiv/error.hpp"

namespace rankdiv {

enum class EntropyKind { TV, KL, ReverseKL, JS, SqHellinger, ChiSq, Triangular, Jeffreys };

inline constexpr std::array<EntropyKind, 8> kAllEntropyKinds = {
    EntropyKind::TV,          EntropyKind::KL,    EntropyKind::ReverseKL,  EntropyKind::JS,
    EntropyKind::SqHellinger, EntropyKind::ChiSq, EntropyKind::Triangular, EntropyKind::Jeffreys};

struct EntropySpec {
  EntropyKind kind = EntropyKind::KL;
  double epsilon_clamp = 1e-12;
};

inline std::string_view to_string(EntropyKind kind) {
  switch (kind) {
    case EntropyKind::TV: return "tv";
    case EntropyKind::KL: return "kl";
    case EntropyKind::ReverseKL: return "reverse_kl";
    case EntropyKind::JS: return "js";
    case EntropyKind::SqHellinger: return "hellinger2";
    case EntropyKind::ChiSq: return "chi2";
    case EntropyKind::Triangular: return "triangular";
    case EntropyKind::Jeffreys: return "jeffreys";
  }
  return "?";
}

inline EntropyKind parse_entropy_kind(std::string_view name) {
  for (auto k : kAllEntropyKinds) {
    if (to_string(k) == name) return k;
  }
  throw DomainError("unknown entropy function '" + std::string(name) + "'");
}

inline EntropySpec make_entropy(std::string_view name) { return EntropySpec{parse_entropy_kind(name)}; }

/// Derivative blows up at t = 0.
inline bool singular_at_zero(EntropyKind kind) {
  switch (kind) {
    case EntropyKind::KL:
    case EntropyKind::ReverseKL:
    case EntropyKind::JS:
    case EntropyKind::SqHellinger:
    case EntropyKind::Jeffreys: return true;
    default: return false;
  }
}

/// f(0) = +inf in exact arithmetic; a zero rank bin makes the divergence infinite.
inline bool infinite_at_zero(EntropyKind kind) {
  return kind == EntropyKind::ReverseKL || kind == EntropyKind::Jeffreys;
}

inline bool differentiable(EntropyKind kind) { return kind != EntropyKind::TV; }

inline bool strictly_convex(EntropyKind kind) { return kind != EntropyKind::TV; }

/// f(t). ReverseKL is clamped at epsilon_clamp; Jeffreys returns +inf at 0.
inline double eval(const EntropySpec& spec, double t) {
  if (!(t >= 0.0)) throw DomainError("entropy function evaluated at negative or NaN argument");
  constexpr double kLn2 = 0.69314718055994530942;
  switch (spec.kind) {
    case EntropyKind::TV: return std::abs(t - 1.0);
    case EntropyKind::KL: return t == 0.0 ? 0.0 : t * std::log(t);
    case EntropyKind::ReverseKL: return -std::log(std::max(t, spec.epsilon_clamp));
    case EntropyKind::JS: {
      if (t == 0.0) return 0.5 * kLn2;
      if (std::isinf(t)) return t;
      const double lt1 = std::log1p(t);
      return 0.5 * (t * (kLn2 + std::log(t) - lt1) + (kLn2 - lt1));
    }
    case EntropyKind::SqHellinger: {
      const double d = std::sqrt(t) - 1.0;
      return 0.5 * d * d;
    }
    case EntropyKind::ChiSq: return 0.5 * (t - 1.0) * (t - 1.0);
    case EntropyKind::Triangular: return (t - 1.0) * (t - 1.0) / (t + 1.0);
    case EntropyKind::Jeffreys:
      if (t == 0.0) return std::numeric_limits<double>::infinity();
      return (t - 1.0) * std::log(t);
  }
  return 0.0;
}

struct DerivativeValue {
  double value;
  bool clamped;  // t was raised to epsilon_clamp before evaluation
};

/// f'(t) with the clamp flag. TV returns the subgradient 0 at the kink t = 1.
inline DerivativeValue derivative_checked(const EntropySpec& spec, double t) {
  if (!(t >= 0.0)) throw DomainError("entropy derivative evaluated at negative or NaN argument");
  bool clamped = false;
  if (singular_at_zero(spec.kind) && t < spec.epsilon_clamp) {
    t = spec.epsilon_clamp;
    clamped = true;
  }
  double v = 0.0;
  switch (spec.kind) {
    case EntropyKind::TV: v = t < 1.0 ? -1.0 : (t > 1.0 ? 1.0 : 0.0); break;
    case EntropyKind::KL: v = std::log(t) + 1.0; break;
    case EntropyKind::ReverseKL: v = -1.0 / t; break;
    case EntropyKind::JS: v = 0.5 * (0.69314718055994530942 + std::log(t) - std::log1p(t)); break;
    case EntropyKind::SqHellinger: v = 0.5 * (1.0 - 1.0 / std::sqrt(t)); break;
    case EntropyKind::ChiSq: v = t - 1.0; break;
    case EntropyKind::Triangular: v = (t - 1.0) * (t + 3.0) / ((t + 1.0) * (t + 1.0)); break;
    case EntropyKind::Jeffreys: v = std::log(t) + 1.0 - 1.0 / t; break;
  }
  return {v, clamped};
}

inline double derivative(const EntropySpec& spec, double t) { return derivative_checked(spec, t).value; }

/// Lipschitz constant of f on [lo, interval_hi]. The default lower end is
/// epsilon_clamp for generators whose derivative is singular at zero and 0
/// otherwise. f' is monotone, so the bound is max(|f'(lo)|, |f'(hi)|).
inline double lipschitz_bound(const EntropySpec& spec, double interval_hi,
                              std::optional<double> interval_lo = std::nullopt) {
  if (!(interval_hi > 0.0)) throw DomainError("lipschitz_bound needs a positive upper end");
  if (spec.kind == EntropyKind::TV) return 1.0;
  double lo = interval_lo.value_or(singular_at_zero(spec.kind) ? spec.epsilon_clamp : 0.0);
  lo = std::clamp(lo, 0.0, interval_hi);
  return std::max(std::abs(derivative(spec, lo)), std::abs(derivative(spec, interval_hi)));
}

/// The perspective q f(p / q) evaluated from log-densities, finite whenever the
/// exact value is. Used by quadrature and Monte Carlo reference routes.
inline double perspective_log(const EntropySpec& spec, double log_p, double log_q) {
  const double inf = std::numeric_limits<double>::infinity();
  if (log_p == -inf && log_q == -inf) return 0.0;
  if (log_q == -inf) {
    // mass of p outside the support of q: f(t)/t limit as t -> inf times p
    switch (spec.kind) {
      case EntropyKind::TV: return std::exp(log_p);
      case EntropyKind::JS: return 0.5 * 0.69314718055994530942 * std::exp(log_p);
      case EntropyKind::SqHellinger: return 0.5 * std::exp(log_p);
      case EntropyKind::Triangular: return std::exp(log_p);
      case EntropyKind::ReverseKL: return 0.0;
      default: return inf;
    }
  }
  const double p = std::exp(log_p);
  const double q = std::exp(log_q);
  const double d = log_p - log_q;
  switch (spec.kind) {
    case EntropyKind::KL: return log_p == -inf ? 0.0 : p * d;
    case EntropyKind::ReverseKL: return log_p == -inf ? inf : -q * d;
    case EntropyKind::Jeffreys:
      if (log_p == -inf) return inf;
      return (p - q) * d;
    case EntropyKind::JS: {
      if (log_p == -inf) return 0.5 * 0.69314718055994530942 * q;
      // 1/2 [p log(2p/(p+q)) + q log(2q/(p+q))] with log(p+q) via log-sum-exp
      const double m = std::max(log_p, log_q);
      const double lse = m + std::log(std::exp(log_p - m) + std::exp(log_q - m));
      constexpr double kLn2 = 0.69314718055994530942;
      return 0.5 * (p * (kLn2 + log_p - lse) + q * (kLn2 + log_q - lse));
    }
    default: break;
  }
  switch (spec.kind) {
    case EntropyKind::TV: return std::abs(p - q);
    case EntropyKind::SqHellinger: {
      const double s = std::sqrt(p) - std::sqrt(q);
      return 0.5 * s * s;
    }
    case EntropyKind::ChiSq: {
      // 1/2 q (e^d - 1)^2, kept in logs when q underflows
      if (d > 0.0) return 0.5 * std::exp(log_q + 2.0 * std::log(std::expm1(d)));
      const double v = std::expm1(d);
      return 0.5 * q * v * v;
    }
    case EntropyKind::Triangular: return p + q > 0.0 ? (p - q) * (p - q) / (p + q) : 0.0;
    default: break;
  }
  return q * eval(spec, std::exp(d));
}

}  // namespace rankdiv
