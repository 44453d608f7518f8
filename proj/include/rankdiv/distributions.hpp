#pragma once
// Benchmark distributions, density ratios and reference divergences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rankdiv/entropy.hpp"
#include "rankdiv/error.hpp"
#include "rankdiv/ratio.hpp"
#include "rankdiv/rng.hpp"
#include "rankdiv/sample_set.hpp"
#include "rankdiv/univariate.hpp"

namespace rankdiv {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double std_normal_quantile(double u) {
  if (u <= 0.0) return -std::numeric_limits<double>::infinity();
  if (u >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), u);
}

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

enum class Dist1DKind { Gaussian, Laplace, StudentT, UniformInterval, GaussMix2 };

/// A univariate law. Parameters:
///   Gaussian(mean, std), Laplace(loc, scale), StudentT(df, loc, scale),
///   UniformInterval(a, b), GaussMix2(delta, std) = 1/2 N(-delta, std) + 1/2 N(delta, std).
class Dist1D {
 public:
  static Dist1D gaussian(double m, double s) {
    if (!(s > 0.0)) throw DomainError("Gaussian std must be positive");
    return Dist1D(Dist1DKind::Gaussian, m, s, 0.0);
  }
  static Dist1D laplace(double loc, double scale) {
    if (!(scale > 0.0)) throw DomainError("Laplace scale must be positive");
    return Dist1D(Dist1DKind::Laplace, loc, scale, 0.0);
  }
  static Dist1D student_t(double df, double loc = 0.0, double scale = 1.0) {
    if (!(df > 0.0) || !(scale > 0.0)) throw DomainError("Student-t needs df > 0 and scale > 0");
    return Dist1D(Dist1DKind::StudentT, df, loc, scale);
  }
  static Dist1D uniform(double a, double b) {
    if (!(a < b)) throw DomainError("uniform interval needs a < b");
    return Dist1D(Dist1DKind::UniformInterval, a, b, 0.0);
  }
  static Dist1D gauss_mix2(double delta, double s = 1.0) {
    if (!(s > 0.0)) throw DomainError("mixture std must be positive");
    return Dist1D(Dist1DKind::GaussMix2, delta, s, 0.0);
  }

  Dist1DKind kind() const { return kind_; }

  std::string name() const {
    auto num = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      return std::string(buf);
    };
    switch (kind_) {
      case Dist1DKind::Gaussian: return "gaussian(" + num(a_) + "," + num(b_) + ")";
      case Dist1DKind::Laplace: return "laplace(" + num(a_) + "," + num(b_) + ")";
      case Dist1DKind::StudentT: return "student_t(" + num(a_) + "," + num(b_) + "," + num(c_) + ")";
      case Dist1DKind::UniformInterval: return "uniform(" + num(a_) + "," + num(b_) + ")";
      case Dist1DKind::GaussMix2: return "gauss_mix2(" + num(a_) + "," + num(b_) + ")";
    }
    return "?";
  }

  double log_pdf(double x) const {
    constexpr double kHalfLog2Pi = 0.91893853320467274178;
    const double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Dist1DKind::Gaussian: {
        const double z = (x - a_) / b_;
        return -0.5 * z * z - kHalfLog2Pi - std::log(b_);
      }
      case Dist1DKind::Laplace: return -std::abs(x - a_) / b_ - std::log(2.0 * b_);
      case Dist1DKind::StudentT: {
        const double nu = a_, z = (x - b_) / c_;
        return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
               0.5 * (nu + 1.0) * std::log1p(z * z / nu) - std::log(c_);
      }
      case Dist1DKind::UniformInterval: return (x >= a_ && x <= b_) ? -std::log(b_ - a_) : -inf;
      case Dist1DKind::GaussMix2: {
        const double z1 = (x + a_) / b_, z2 = (x - a_) / b_;
        return log_sum_exp(-0.5 * z1 * z1, -0.5 * z2 * z2) - std::log(2.0) - kHalfLog2Pi - std::log(b_);
      }
    }
    return -inf;
  }

  double pdf(double x) const { return std::exp(log_pdf(x)); }

  double cdf(double x) const {
    switch (kind_) {
      case Dist1DKind::Gaussian: return std_normal_cdf((x - a_) / b_);
      case Dist1DKind::Laplace: {
        const double z = (x - a_) / b_;
        return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
      }
      case Dist1DKind::StudentT:
        if (std::isinf(x)) return x < 0 ? 0.0 : 1.0;
        return boost::math::cdf(boost::math::students_t_distribution<double>(a_), (x - b_) / c_);
      case Dist1DKind::UniformInterval: return std::clamp((x - a_) / (b_ - a_), 0.0, 1.0);
      case Dist1DKind::GaussMix2: return 0.5 * (std_normal_cdf((x + a_) / b_) + std_normal_cdf((x - a_) / b_));
    }
    return 0.0;
  }

  double quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile needs u in [0, 1]");
    if (u == 0.0) return support_lo();
    if (u == 1.0) return support_hi();
    switch (kind_) {
      case Dist1DKind::Gaussian: return a_ + b_ * std_normal_quantile(u);
      case Dist1DKind::Laplace: return u < 0.5 ? a_ + b_ * std::log(2.0 * u) : a_ - b_ * std::log(2.0 * (1.0 - u));
      case Dist1DKind::UniformInterval: return a_ + u * (b_ - a_);
      case Dist1DKind::StudentT: {
        // bracket from the exact t quantile, then polish by bisection on the CDF
        const double q = b_ + c_ * boost::math::quantile(boost::math::students_t_distribution<double>(a_), u);
        const double w = 1e-6 * (1.0 + std::abs(q));
        return bisect_quantile(u, q - w, q + w);
      }
      case Dist1DKind::GaussMix2: {
        const double z = b_ * std_normal_quantile(u);
        return bisect_quantile(u, z - std::abs(a_) - 1e-12, z + std::abs(a_) + 1e-12);
      }
    }
    return 0.0;
  }

  /// x with P(X > x) = q, accurate for tiny q.
  double upper_quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("upper_quantile needs q in [0, 1]");
    if (q == 0.0) return support_hi();
    if (q == 1.0) return support_lo();
    switch (kind_) {
      case Dist1DKind::Gaussian: return a_ - b_ * std_normal_quantile(q);
      case Dist1DKind::Laplace: return q < 0.5 ? a_ - b_ * std::log(2.0 * q) : quantile(1.0 - q);
      case Dist1DKind::StudentT:
      case Dist1DKind::GaussMix2: return 2.0 * mean() - quantile(q);  // symmetric laws
      case Dist1DKind::UniformInterval: return b_ - q * (b_ - a_);
    }
    return 0.0;
  }

  double support_lo() const {
    return kind_ == Dist1DKind::UniformInterval ? a_ : -std::numeric_limits<double>::infinity();
  }
  double support_hi() const {
    return kind_ == Dist1DKind::UniformInterval ? b_ : std::numeric_limits<double>::infinity();
  }

  /// Typical length scale of the law.
  double scale() const {
    switch (kind_) {
      case Dist1DKind::Gaussian:
      case Dist1DKind::Laplace:
      case Dist1DKind::GaussMix2: return b_;
      case Dist1DKind::StudentT: return c_;
      case Dist1DKind::UniformInterval: return b_ - a_;
    }
    return 1.0;
  }

  /// Points where the density is not smooth.
  std::vector<double> breakpoints() const {
    switch (kind_) {
      case Dist1DKind::Laplace: return {a_};
      case Dist1DKind::UniformInterval: return {a_, b_};
      default: return {};
    }
  }

  double mean() const {
    switch (kind_) {
      case Dist1DKind::Gaussian:
      case Dist1DKind::Laplace: return a_;
      case Dist1DKind::StudentT: return b_;
      case Dist1DKind::UniformInterval: return 0.5 * (a_ + b_);
      case Dist1DKind::GaussMix2: return 0.0;
    }
    return 0.0;
  }

  double draw(Rng& rng) const {
    switch (kind_) {
      case Dist1DKind::Gaussian: return std::normal_distribution<double>(a_, b_)(rng);
      case Dist1DKind::Laplace: {
        const double u = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
        const double s = u < 0.0 ? -1.0 : 1.0;
        return a_ - b_ * s * std::log1p(-2.0 * std::abs(u));
      }
      case Dist1DKind::StudentT: return b_ + c_ * std::student_t_distribution<double>(a_)(rng);
      case Dist1DKind::UniformInterval: return std::uniform_real_distribution<double>(a_, b_)(rng);
      case Dist1DKind::GaussMix2: {
        const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        return sign * a_ + std::normal_distribution<double>(0.0, b_)(rng);
      }
    }
    return 0.0;
  }

  Samples1D sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw DomainError("sample size must be at least 1");
    Rng rng = make_rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = draw(rng);
    return Samples1D(std::move(v), seed);
  }

 private:
  Dist1D(Dist1DKind k, double a, double b, double c) : kind_(k), a_(a), b_(b), c_(c) {}

  double bisect_quantile(double u, double lo, double hi) const {
    while (cdf(lo) > u) lo -= 2.0 * (hi - lo) + 1.0;
    while (cdf(hi) < u) hi += 2.0 * (hi - lo) + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < u)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  Dist1DKind kind_;
  double a_, b_, c_;
};

// ---------------------------------------------------------------------------
// Multivariate families

struct Box {
  std::vector<std::pair<double, double>> intervals;
  std::size_t dim() const { return intervals.size(); }
};

inline Box box_x2() { return Box{{{0.1, 2.0}, {-1.0, 0.0}}}; }
inline Box box_x5() {
  auto b = box_x2();
  b.intervals.insert(b.intervals.end(), {{2.0, 3.0}, {-2.0, -1.5}, {-1.0, 1.0}});
  return b;
}
inline Box box_x10() {
  auto b = box_x5();
  const auto c = box_x5();
  b.intervals.insert(b.intervals.end(), c.intervals.begin(), c.intervals.end());
  return b;
}
inline Box box_for_dim(int d) {
  switch (d) {
    case 2: return box_x2();
    case 5: return box_x5();
    case 10: return box_x10();
    default: throw ConfigError("no benchmark box for dimension " + std::to_string(d));
  }
}

enum class DistNDKind { IsoGaussian, DiagGaussian, TruncGaussianBox, UniformBox, FactorLaplace, StudentTProduct, GaussMix2ND };

/// Multivariate benchmark law.
///   IsoGaussian(mean, s)       N(mean, s^2 I)
///   DiagGaussian(mean, diag)   N(mean, diag(diag)), diag holds variances
///   TruncGaussianBox(box)      N(0, I) restricted to the box
///   UniformBox(box)
///   FactorLaplace(d)           product of Laplace(0, 1)
///   StudentTProduct(df, d)     product of standard t(df)
///   GaussMix2ND(delta, d)      1/2 N(-delta e1, I) + 1/2 N(delta e1, I)
class DistND {
 public:
  static DistND iso_gaussian(std::vector<double> mean, double s) {
    if (!(s > 0.0)) throw DomainError("std must be positive");
    DistND d(DistNDKind::IsoGaussian, mean.size());
    d.mean_ = std::move(mean);
    d.var_.assign(d.dim_, s * s);
    return d;
  }
  static DistND diag_gaussian(std::vector<double> mean, std::vector<double> variances) {
    if (mean.size() != variances.size()) throw DomainError("mean and diagonal sizes differ");
    for (double v : variances) {
      if (!(v > 0.0)) throw DomainError("variances must be positive");
    }
    DistND d(DistNDKind::DiagGaussian, mean.size());
    d.mean_ = std::move(mean);
    d.var_ = std::move(variances);
    return d;
  }
  static DistND trunc_gaussian_box(Box box) {
    DistND d(DistNDKind::TruncGaussianBox, box.dim());
    d.check_box(box);
    d.box_ = std::move(box);
    return d;
  }
  static DistND uniform_box(Box box) {
    DistND d(DistNDKind::UniformBox, box.dim());
    d.check_box(box);
    d.box_ = std::move(box);
    return d;
  }
  static DistND factor_laplace(std::size_t dim) { return DistND(DistNDKind::FactorLaplace, dim); }
  static DistND student_t_product(double df, std::size_t dim) {
    if (!(df > 0.0)) throw DomainError("df must be positive");
    DistND d(DistNDKind::StudentTProduct, dim);
    d.param_ = df;
    return d;
  }
  static DistND gauss_mix2(double delta, std::size_t dim) {
    DistND d(DistNDKind::GaussMix2ND, dim);
    d.param_ = delta;
    return d;
  }

  DistNDKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const Box& box() const { return box_; }

  /// Coordinate marginal for laws that factorize over coordinates.
  std::optional<Dist1D> marginal(std::size_t j) const {
    switch (kind_) {
      case DistNDKind::IsoGaussian:
      case DistNDKind::DiagGaussian: return Dist1D::gaussian(mean_[j], std::sqrt(var_[j]));
      case DistNDKind::UniformBox: return Dist1D::uniform(box_.intervals[j].first, box_.intervals[j].second);
      case DistNDKind::FactorLaplace: return Dist1D::laplace(0.0, 1.0);
      case DistNDKind::StudentTProduct: return Dist1D::student_t(param_);
      default: return std::nullopt;
    }
  }

  double log_pdf(std::span<const double> x) const {
    constexpr double kHalfLog2Pi = 0.91893853320467274178;
    const double inf = std::numeric_limits<double>::infinity();
    double lp = 0.0;
    switch (kind_) {
      case DistNDKind::IsoGaussian:
      case DistNDKind::DiagGaussian:
        for (std::size_t j = 0; j < dim_; ++j) {
          const double z = x[j] - mean_[j];
          lp += -0.5 * z * z / var_[j] - 0.5 * std::log(var_[j]) - kHalfLog2Pi;
        }
        return lp;
      case DistNDKind::TruncGaussianBox:
        for (std::size_t j = 0; j < dim_; ++j) {
          const auto [a, b] = box_.intervals[j];
          if (x[j] < a || x[j] > b) return -inf;
          lp += -0.5 * x[j] * x[j] - kHalfLog2Pi - std::log(std_normal_cdf(b) - std_normal_cdf(a));
        }
        return lp;
      case DistNDKind::UniformBox:
        for (std::size_t j = 0; j < dim_; ++j) {
          const auto [a, b] = box_.intervals[j];
          if (x[j] < a || x[j] > b) return -inf;
          lp -= std::log(b - a);
        }
        return lp;
      case DistNDKind::FactorLaplace:
        for (std::size_t j = 0; j < dim_; ++j) lp += -std::abs(x[j]) - std::log(2.0);
        return lp;
      case DistNDKind::StudentTProduct: {
        const auto t = Dist1D::student_t(param_);
        for (std::size_t j = 0; j < dim_; ++j) lp += t.log_pdf(x[j]);
        return lp;
      }
      case DistNDKind::GaussMix2ND: {
        for (std::size_t j = 1; j < dim_; ++j) lp += -0.5 * x[j] * x[j] - kHalfLog2Pi;
        return lp + Dist1D::gauss_mix2(param_, 1.0).log_pdf(x[0]);
      }
    }
    return -inf;
  }

  SampleSet sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw DomainError("sample size must be at least 1");
    SampleSet out(n, dim_, seed);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    switch (kind_) {
      case DistNDKind::IsoGaussian:
      case DistNDKind::DiagGaussian:
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < dim_; ++j) out(i, j) = mean_[j] + std::sqrt(var_[j]) * gauss(rng);
        break;
      case DistNDKind::TruncGaussianBox: {
        for (const auto& [a, b] : box_.intervals) {
          if (std_normal_cdf(b) - std_normal_cdf(a) < 1e-6)
            throw ConfigError("box interval has Gaussian mass below 1e-6; rejection sampling is degenerate");
        }
        // Accept-reject per coordinate: the box and N(0, I) both factorize,
        // so this is the same law as rejecting whole vectors.
        constexpr int kMaxRejections = 10000;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < dim_; ++j) {
            const auto [a, b] = box_.intervals[j];
            int tries = 0;
            double z = gauss(rng);
            while (z < a || z > b) {
              if (++tries > kMaxRejections) throw ConfigError("truncated Gaussian sampler exceeded its rejection cap");
              z = gauss(rng);
            }
            out(i, j) = z;
          }
        }
        break;
      }
      case DistNDKind::UniformBox:
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < dim_; ++j)
            out(i, j) = std::uniform_real_distribution<double>(box_.intervals[j].first, box_.intervals[j].second)(rng);
        break;
      case DistNDKind::FactorLaplace:
      case DistNDKind::StudentTProduct: {
        const auto m = *marginal(0);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < dim_; ++j) out(i, j) = m.draw(rng);
        break;
      }
      case DistNDKind::GaussMix2ND: {
        const auto m = Dist1D::gauss_mix2(param_, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
          out(i, 0) = m.draw(rng);
          for (std::size_t j = 1; j < dim_; ++j) out(i, j) = gauss(rng);
        }
        break;
      }
    }
    return out;
  }

 private:
  DistND(DistNDKind k, std::size_t dim) : kind_(k), dim_(dim) {
    if (dim < 1) throw DomainError("dimension must be at least 1");
  }
  void check_box(const Box& box) const {
    for (const auto& [a, b] : box.intervals) {
      if (!(a < b)) throw DomainError("box intervals must be nonempty");
    }
  }

  DistNDKind kind_;
  std::size_t dim_;
  std::vector<double> mean_, var_;
  Box box_;
  double param_ = 0.0;
};

/// Law of s^T X for X ~ N(mean, diag(var)).
inline Dist1D gaussian_projection(const std::vector<double>& mean, const std::vector<double>& var,
                                  std::span<const double> s) {
  double m = 0.0, v = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    m += s[j] * mean[j];
    v += s[j] * s[j] * var[j];
  }
  return Dist1D::gaussian(m, std::sqrt(v));
}

// ---------------------------------------------------------------------------
// Closed-form references

inline double kl_gaussian(double m0, double s0, double m1, double s1) {
  if (!(s0 > 0.0 && s1 > 0.0)) throw DomainError("standard deviations must be positive");
  const double dm = m0 - m1;
  return std::log(s1 / s0) + (s0 * s0 + dm * dm) / (2.0 * s1 * s1) - 0.5;
}

/// KL(N(m0, diag v0) || N(m1, diag v1)) as a sum over coordinates.
inline double kl_gaussian_diag(const std::vector<double>& m0, const std::vector<double>& v0,
                               const std::vector<double>& m1, const std::vector<double>& v1) {
  double s = 0.0;
  for (std::size_t j = 0; j < m0.size(); ++j) s += kl_gaussian(m0[j], std::sqrt(v0[j]), m1[j], std::sqrt(v1[j]));
  return s;
}

inline double hellinger2_gaussian(double m0, double s0, double m1, double s1) {
  if (!(s0 > 0.0 && s1 > 0.0)) throw DomainError("standard deviations must be positive");
  const double ss = s0 * s0 + s1 * s1, dm = m0 - m1;
  return 1.0 - std::sqrt(2.0 * s0 * s1 / ss) * std::exp(-dm * dm / (4.0 * ss));
}

/// Squared Hellinger for diagonal Gaussians: 1 - prod of coordinate affinities.
inline double hellinger2_gaussian_diag(const std::vector<double>& m0, const std::vector<double>& v0,
                                       const std::vector<double>& m1, const std::vector<double>& v1) {
  double bc = 1.0;
  for (std::size_t j = 0; j < m0.size(); ++j)
    bc *= 1.0 - hellinger2_gaussian(m0[j], std::sqrt(v0[j]), m1[j], std::sqrt(v1[j]));
  return 1.0 - bc;
}

/// Moment-matched Gaussian proxy of JS for diagonal Gaussians:
/// 1/2 KL(mu || M) + 1/2 KL(nu || M) with M the Gaussian matching the
/// mean and covariance of the midpoint mixture. An approximation only.
inline double js_gaussian_proxy(const std::vector<double>& m0, const std::vector<double>& v0,
                                const std::vector<double>& m1, const std::vector<double>& v1) {
  double s = 0.0;
  for (std::size_t j = 0; j < m0.size(); ++j) {
    const double mm = 0.5 * (m0[j] + m1[j]);
    const double vm = 0.5 * (v0[j] + v1[j]) + 0.25 * (m0[j] - m1[j]) * (m0[j] - m1[j]);
    s += 0.5 * kl_gaussian(m0[j], std::sqrt(v0[j]), mm, std::sqrt(vm)) +
         0.5 * kl_gaussian(m1[j], std::sqrt(v1[j]), mm, std::sqrt(vm));
  }
  return s;
}

/// L1 distance between N(0,1) and N(delta,1) (the |t-1| generator).
inline double tv_l1_gaussian_shift(double delta) { return 2.0 * (2.0 * std_normal_cdf(std::abs(delta) / 2.0) - 1.0); }

/// L1 distance between N(0,1) and N(0,sigma^2).
inline double tv_l1_gaussian_scale(double sigma) {
  if (sigma == 1.0) return 0.0;
  const double s2 = sigma * sigma;
  const double c = std::sqrt(2.0 * s2 * std::log(sigma) / (s2 - 1.0));
  return 4.0 * std::abs(std_normal_cdf(c) - std_normal_cdf(c / sigma));
}

/// KL between the box-truncated standard Gaussian and the uniform law on the
/// box, summed over coordinates.
inline double kl_truncgauss_vs_uniform(const Box& box) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double kl = 0.0;
  for (const auto& [a, b] : box.intervals) {
    if (!(a < b)) throw DomainError("box intervals must be nonempty");
    const double Z = std_normal_cdf(b) - std_normal_cdf(a);
    const double ex2 = 1.0 + (a * std_normal_pdf(a) - b * std_normal_pdf(b)) / Z;
    kl += -std::log(Z) - kHalfLog2Pi - 0.5 * ex2 + std::log(b - a);
  }
  return kl;
}

// ---------------------------------------------------------------------------
// Quadrature references

namespace detail {

inline double finite_lo(const Dist1D& d) { return std::isfinite(d.support_lo()) ? d.support_lo() : d.quantile(1e-13); }
inline double finite_hi(const Dist1D& d) { return std::isfinite(d.support_hi()) ? d.support_hi() : d.upper_quantile(1e-13); }

/// Adaptive Gauss-Kronrod over the real line, split into `pieces` equal
/// intervals on [lo, hi] plus the breakpoints and two infinite tails.
template <class F>
double integrate_line(F f, double lo, double hi, std::vector<double> breakpoints, bool left_tail, bool right_tail,
                      int pieces) {
  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> cuts;
  for (int k = 0; k <= pieces; ++k) cuts.push_back(lo + (hi - lo) * k / pieces);
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const double inf = std::numeric_limits<double>::infinity();
  double total = 0.0, err_total = 0.0, l1_total = 0.0;
  auto piece = [&](double a, double b) {
    double err = 0.0, l1 = 0.0;
    const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13, &err, &l1);
    total += v;
    err_total += err;
    l1_total += l1;
  };
  if (left_tail) piece(-inf, cuts.front());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) piece(cuts[k], cuts[k + 1]);
  if (right_tail) piece(cuts.back(), inf);
  if (!std::isfinite(total)) return total;
  if (err_total > 1e-9 * std::max(1.0, l1_total)) throw EvaluationError("quadrature did not converge");
  return total;
}

}  // namespace detail

/// D_f(mu || nu) = int p_nu f(p_mu / p_nu) dx by adaptive quadrature.
/// Returns +inf when mu puts mass where nu has none and f grows superlinearly.
inline double continuous_divergence(const Dist1D& mu, const Dist1D& nu, const EntropySpec& spec, int pieces = 64) {
  if (pieces < 1) throw DomainError("need at least one quadrature piece");
  const double lo = std::min(detail::finite_lo(mu), detail::finite_lo(nu));
  const double hi = std::max(detail::finite_hi(mu), detail::finite_hi(nu));
  auto bp = mu.breakpoints();
  const auto bn = nu.breakpoints();
  bp.insert(bp.end(), bn.begin(), bn.end());
  const bool lt = !std::isfinite(mu.support_lo()) || !std::isfinite(nu.support_lo());
  const bool rt = !std::isfinite(mu.support_hi()) || !std::isfinite(nu.support_hi());
  // mass of mu outside the support of nu
  if (mu.support_lo() < nu.support_lo() || mu.support_hi() > nu.support_hi()) {
    const double outside = mu.cdf(nu.support_lo()) + (1.0 - mu.cdf(nu.support_hi()));
    if (outside > 0.0 && std::isinf(perspective_log(spec, 0.0, -std::numeric_limits<double>::infinity())))
      return std::numeric_limits<double>::infinity();
  }
  // points where the densities cross are kinks of the TV integrand
  auto gap = [&](double x) { return mu.log_pdf(x) - nu.log_pdf(x); };
  constexpr int kScan = 2000;
  for (int k = 0; k < kScan; ++k) {
    double a = lo + (hi - lo) * k / kScan, b = lo + (hi - lo) * (k + 1) / kScan;
    double ga = gap(a), gb = gap(b);
    if (!std::isfinite(ga) || !std::isfinite(gb) || (ga > 0) == (gb > 0)) continue;
    for (int it = 0; it < 100 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
      const double m = 0.5 * (a + b), gm = gap(m);
      if ((gm > 0) == (ga > 0)) {
        a = m;
        ga = gm;
      } else {
        b = m;
      }
    }
    bp.push_back(0.5 * (a + b));
  }
  auto f = [&](double x) { return perspective_log(spec, mu.log_pdf(x), nu.log_pdf(x)); };
  return detail::integrate_line(f, lo, hi, bp, lt, rt, pieces);
}

/// Jensen-Shannon divergence by log-domain adaptive quadrature; quad_points
/// sets the number of core subintervals.
inline double js_reference_quadrature(const Dist1D& mu, const Dist1D& nu, int quad_points = 64) {
  return continuous_divergence(mu, nu, EntropySpec{EntropyKind::JS}, quad_points);
}

/// Builds r = (p_mu / p_nu) o Q_nu together with its x-space form.
inline QuantileDensityRatio quantile_density_ratio(const Dist1D& mu, const Dist1D& nu) {
  if (mu.support_lo() < nu.support_lo() || mu.support_hi() > nu.support_hi())
    throw DomainError("mu is not absolutely continuous with respect to nu");
  auto r = [mu, nu](double u) {
    const double y = nu.quantile(u);
    return std::exp(mu.log_pdf(y) - nu.log_pdf(y));
  };
  RatioPushforward pf;
  pf.pdf_mu = [mu](double x) { return mu.pdf(x); };
  pf.cdf_nu = [nu](double x) { return nu.cdf(x); };
  pf.core_lo = std::min(detail::finite_lo(mu), detail::finite_lo(nu));
  pf.core_hi = std::max(detail::finite_hi(mu), detail::finite_hi(nu));
  pf.tail_lo = std::min(pf.core_lo, std::isfinite(mu.support_lo()) ? mu.support_lo() : mu.quantile(1e-17));
  pf.tail_hi = std::max(pf.core_hi, std::isfinite(mu.support_hi()) ? mu.support_hi() : mu.upper_quantile(1e-17));
  pf.scale = nu.scale();
  pf.breakpoints = mu.breakpoints();
  const auto bn = nu.breakpoints();
  pf.breakpoints.insert(pf.breakpoints.end(), bn.begin(), bn.end());
  return QuantileDensityRatio(std::move(r), std::move(pf));
}

// ---------------------------------------------------------------------------
// Monte Carlo references

struct McReference {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_ref = 0;
  std::size_t skipped = 0;  // non-finite log-ratio terms dropped
};

namespace detail {

struct RunningMoments {
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double var_of_mean() const { return n > 1 ? m2 / static_cast<double>(n - 1) / static_cast<double>(n) : 0.0; }
};

/// Plug-in estimate from log-densities. lp_mu_on_mu(i) etc. return log
/// densities at the i-th draw of mu (or nu).
template <class LpMu, class LpNu>
McReference mc_from_logpdfs(const EntropySpec& spec, std::size_t n, LpMu lp_at_mu, LpNu lp_at_nu) {
  constexpr double kLn2 = 0.69314718055994530942;
  McReference out;
  out.n_ref = n;
  RunningMoments a, b;
  for (std::size_t i = 0; i < n; ++i) {
    switch (spec.kind) {
      case EntropyKind::KL: {
        const auto [lm, ln] = lp_at_mu(i);
        const double t = lm - ln;
        if (std::isfinite(t)) a.add(t); else ++out.skipped;
        break;
      }
      case EntropyKind::JS: {
        const auto [lm, ln] = lp_at_mu(i);
        const auto [lm2, ln2] = lp_at_nu(i);
        const double t1 = kLn2 + lm - log_sum_exp(lm, ln);
        const double t2 = kLn2 + ln2 - log_sum_exp(lm2, ln2);
        if (std::isfinite(t1)) a.add(0.5 * t1); else ++out.skipped;
        if (std::isfinite(t2)) b.add(0.5 * t2); else ++out.skipped;
        break;
      }
      default: {
        const auto [lm, ln] = lp_at_nu(i);
        const double t = std::exp(lm - ln);
        const double v = std::isfinite(t) ? eval(spec, t) : t;
        if (std::isfinite(v)) a.add(v); else ++out.skipped;
      }
    }
  }
  out.value = a.mean + b.mean;
  out.std_error = std::sqrt(a.var_of_mean() + b.var_of_mean());
  return out;
}

}  // namespace detail

/// High-sample plug-in reference. KL uses E_mu[log p_mu - log p_nu], JS the
/// two-term form, other generators E_nu[f(p_mu / p_nu)].
inline McReference mc_reference(const Dist1D& mu, const Dist1D& nu, const EntropySpec& spec, std::size_t n_ref,
                                std::uint64_t seed) {
  const auto xs = mu.sample(n_ref, derive_seed(seed, {stream::kMu}));
  const auto ys = nu.sample(n_ref, derive_seed(seed, {stream::kNu}));
  auto at_mu = [&](std::size_t i) {
    const double x = xs.values()[i];
    return std::pair{mu.log_pdf(x), nu.log_pdf(x)};
  };
  auto at_nu = [&](std::size_t i) {
    const double y = ys.values()[i];
    return std::pair{mu.log_pdf(y), nu.log_pdf(y)};
  };
  return detail::mc_from_logpdfs(spec, n_ref, at_mu, at_nu);
}

inline McReference mc_reference(const DistND& mu, const DistND& nu, const EntropySpec& spec, std::size_t n_ref,
                                std::uint64_t seed) {
  if (mu.dim() != nu.dim()) throw DomainError("dimension mismatch");
  const auto xs = mu.sample(n_ref, derive_seed(seed, {stream::kMu}));
  const auto ys = nu.sample(n_ref, derive_seed(seed, {stream::kNu}));
  auto at_mu = [&](std::size_t i) { return std::pair{mu.log_pdf(xs.row(i)), nu.log_pdf(xs.row(i))}; };
  auto at_nu = [&](std::size_t i) { return std::pair{mu.log_pdf(ys.row(i)), nu.log_pdf(ys.row(i))}; };
  return detail::mc_from_logpdfs(spec, n_ref, at_mu, at_nu);
}

}  // namespace rankdiv
