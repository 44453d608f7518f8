#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "rankdiv/distributions.hpp"
#include "rankdiv/sliced.hpp"

using namespace rankdiv;

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

const RouteOptions kHard{Route::Smoothed, 0.0, 0};

}  // namespace

TEST(Directions, OneDimensionIsPlusMinusOne) {
  const auto D = sample_directions(1, 50, 3);
  for (const auto& s : D.dirs) EXPECT_TRUE(s[0] == 1.0 || s[0] == -1.0);
}

TEST(Directions, UnitNormAndIsotropic) {
  const auto D = sample_directions(3, 10000, 4);
  ASSERT_EQ(D.size(), 10000u);
  std::vector<double> mean(3, 0.0);
  for (const auto& s : D.dirs) {
    EXPECT_NEAR(norm(s), 1.0, 1e-12);
    for (int j = 0; j < 3; ++j) mean[j] += s[j] / 1e4;
  }
  EXPECT_LT(norm(mean), 0.05);
  for (double m : mean) EXPECT_LT(std::abs(m), 3.0 * std::sqrt(1.0 / 3e4));
}

TEST(Directions, AntitheticPairs) {
  const auto D = sample_directions(4, 8, 5, true);
  ASSERT_EQ(D.size(), 8u);
  EXPECT_TRUE(D.antithetic);
  for (std::size_t l = 0; l < 8; l += 2)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(D[l][j], -D[l + 1][j]);
  EXPECT_THROW(sample_directions(4, 7, 5, true), DomainError);
  EXPECT_THROW(sample_directions(0, 4, 5), DomainError);
}

TEST(Directions, Deterministic) {
  EXPECT_EQ(sample_directions(5, 20, 9).dirs, sample_directions(5, 20, 9).dirs);
  EXPECT_NE(sample_directions(5, 20, 9).dirs, sample_directions(5, 20, 10).dirs);
}

TEST(Project, Examples) {
  const auto X = DistND::iso_gaussian({0.0, 0.0, 0.0}, 1.0).sample(10000, 6);
  const std::vector<double> e1{1.0, 0.0, 0.0};
  EXPECT_EQ(project(X, e1).values(), X.column(0));
  const auto s = sample_directions(3, 1, 7)[0];
  std::vector<double> neg(s);
  for (auto& v : neg) v = -v;
  const auto a = project(X, s).values(), b = project(X, neg).values();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], -a[i]);
  double m = 0.0, v = 0.0;
  for (double x : a) m += x / 1e4;
  for (double x : a) v += (x - m) * (x - m) / (1e4 - 1);
  EXPECT_NEAR(v, 1.0, 0.05);
  EXPECT_THROW(project(X, std::vector<double>{1.0, 0.0}), DomainError);
}

TEST(Sliced, IdenticalSetsBelowBound) {
  const auto X = DistND::iso_gaussian({0.0, 0.0, 0.0, 0.0}, 1.0).sample(1000, 8);
  const auto dirs = sample_directions(4, 16, 9);
  const auto r = sliced_rank_divergence(X, X, 8, EntropySpec{EntropyKind::TV}, dirs, kHard);
  const double bound = theory_bounds(EntropySpec{EntropyKind::TV}, 8, 1000, 1000).finite_sample_mean_bound;
  ASSERT_EQ(r.per_slice.size(), 16u);
  for (double v : r.per_slice) EXPECT_LE(v, bound);
  EXPECT_LE(r.estimate.value, bound);
}

TEST(Sliced, AverageOfPerSliceUnivariate) {
  const auto X = DistND::iso_gaussian({1.0, 0.0}, 1.0).sample(2000, 1);
  const auto Y = DistND::iso_gaussian({0.0, 0.0}, 1.0).sample(2000, 2);
  const auto dirs = sample_directions(2, 12, 3);
  const EntropySpec kl{EntropyKind::KL};
  const auto r = sliced_rank_divergence(X, Y, 32, kl, dirs, kHard);
  double sum = 0.0;
  for (std::size_t l = 0; l < dirs.size(); ++l) {
    const double v = rank_divergence(project(X, dirs[l]), project(Y, dirs[l]), 32, kl, kHard).value;
    EXPECT_EQ(r.per_slice[l], v);
    sum += v;
  }
  EXPECT_EQ(r.estimate.value, sum / 12.0);
  EXPECT_EQ(r.estimate.K, 32);
}

TEST(Sliced, RotationEquivariance) {
  const std::size_t d = 4;
  const auto X = DistND::diag_gaussian({0.5, 0.0, -1.0, 0.0}, {1.0, 2.0, 0.5, 1.0}).sample(3000, 11);
  const auto Y = DistND::iso_gaussian({0.0, 0.0, 0.0, 0.0}, 1.0).sample(3000, 12);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  Eigen::MatrixXd A(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) A(i, j) = g(rng);
  const Eigen::MatrixXd R = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();
  auto rotate = [&](const SampleSet& S) {
    SampleSet out(S.rows(), d, S.seed());
    for (std::size_t i = 0; i < S.rows(); ++i) {
      Eigen::VectorXd x(d);
      for (std::size_t j = 0; j < d; ++j) x(j) = S(i, j);
      const Eigen::VectorXd y = R * x;
      for (std::size_t j = 0; j < d; ++j) out(i, j) = y(j);
    }
    return out;
  };
  const auto dirs = sample_directions(d, 32, 14);
  DirectionSet rdirs = dirs;
  for (auto& s : rdirs.dirs) {
    const Eigen::VectorXd v = R * Eigen::Map<const Eigen::VectorXd>(s.data(), d);
    for (std::size_t j = 0; j < d; ++j) s[j] = v(j);
  }
  for (auto k : {EntropyKind::KL, EntropyKind::TV, EntropyKind::JS}) {
    const auto a = sliced_rank_divergence(X, Y, 64, EntropySpec{k}, dirs, kHard);
    const auto b = sliced_rank_divergence(rotate(X), rotate(Y), 64, EntropySpec{k}, rdirs, kHard);
    EXPECT_EQ(a.per_slice, b.per_slice) << to_string(k);
  }
}

TEST(Sliced, ExactSliceAverageMonotoneAndDominated) {
  // per-slice exact values for N(m, diag v) vs N(0, I): s^T X is Gaussian
  const std::vector<double> m{1.0, 0.0, 0.5}, v{1.0, 1.5, 0.8}, z(3, 0.0), one(3, 1.0);
  const auto dirs = sample_directions(3, 24, 21);
  for (auto k : {EntropyKind::KL, EntropyKind::JS, EntropyKind::SqHellinger, EntropyKind::TV}) {
    const EntropySpec spec{k};
    double cont = 0.0;
    for (const auto& s : dirs.dirs) cont += continuous_divergence(gaussian_projection(m, v, s), gaussian_projection(z, one, s), spec);
    cont /= static_cast<double>(dirs.size());
    double prev = 0.0;
    for (int K : {2, 8, 32, 128}) {
      double avg = 0.0;
      for (const auto& s : dirs.dirs) {
        const auto r = quantile_density_ratio(gaussian_projection(m, v, s), gaussian_projection(z, one, s));
        avg += rank_divergence_exact(r, K, spec).value;
      }
      avg /= static_cast<double>(dirs.size());
      EXPECT_GE(avg, prev - 1e-9) << to_string(k) << " K=" << K;
      EXPECT_LE(avg, cont + 1e-9) << to_string(k) << " K=" << K;
      prev = avg;
    }
  }
}

TEST(Sliced, DirectionCountStandardError) {
  const auto X = DistND::diag_gaussian({1.0, 0.0, 0.0}, {1.0, 2.0, 1.0}).sample(4000, 31);
  const auto Y = DistND::iso_gaussian({0.0, 0.0, 0.0}, 1.0).sample(4000, 32);
  std::vector<double> se;
  for (std::size_t L : {16u, 64u, 256u}) {
    const auto r = sliced_rank_divergence(X, Y, 32, EntropySpec{EntropyKind::KL}, sample_directions(3, L, 33 + L), kHard);
    se.push_back(stddev_of(r.per_slice) / std::sqrt(static_cast<double>(L)));
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_GT(se[i] / se[i + 1], 2.0 / 1.5) << i;
    EXPECT_LT(se[i] / se[i + 1], 2.0 * 1.5) << i;
  }
}

TEST(Sliced, MeanShiftMatchesExactSliceAverage) {
  // oracle: each slice of N(e1, I) vs N(0, I) is N(s_1, 1) vs N(0, 1), whose
  // noise-free D^(64) comes from the exact pmf; the estimator adds a small
  // positive finite-sample bias
  const std::size_t d = 10;
  std::vector<double> m(d, 0.0), z(d, 0.0);
  m[0] = 1.0;
  const auto mu = DistND::iso_gaussian(m, 1.0), nu = DistND::iso_gaussian(z, 1.0);
  const auto dirs = sample_directions(d, 128, 41);
  const EntropySpec kl{EntropyKind::KL};
  double exact = 0.0, cont = 0.0;
  for (const auto& s : dirs.dirs) {
    exact += rank_divergence_exact(quantile_density_ratio(Dist1D::gaussian(s[0], 1), Dist1D::gaussian(0, 1)), 64, kl).value;
    cont += 0.5 * s[0] * s[0];
  }
  exact /= static_cast<double>(dirs.size());
  cont /= static_cast<double>(dirs.size());
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto X = mu.sample(10000, derive_seed(s, {stream::kMu})), Y = nu.sample(10000, derive_seed(s, {stream::kNu}));
    v.push_back(sliced_rank_divergence(X, Y, 64, kl, dirs, kHard).estimate.value);
  }
  const double se = stddev_of(v) / std::sqrt(10.0);
  EXPECT_NEAR(mean_of(v), exact, 4.0 * se + 2e-3);
  EXPECT_LT(exact, cont);
}

TEST(AxisCorrected, OneDimensionIsUnivariate) {
  const auto X = DistND::iso_gaussian({0.7}, 1.0).sample(3000, 1), Y = DistND::iso_gaussian({0.0}, 1.0).sample(3000, 2);
  const EntropySpec kl{EntropyKind::KL};
  EXPECT_EQ(axis_corrected_divergence(X, Y, 32, kl, kHard).value,
            rank_divergence(Samples1D(X.column(0)), Samples1D(Y.column(0)), 32, kl, kHard).value);
}

TEST(AxisCorrected, ProductOfIdenticalFactors) {
  const std::size_t d = 4;
  const auto mu = DistND::iso_gaussian(std::vector<double>(d, 0.5), 1.0), nu = DistND::iso_gaussian(std::vector<double>(d, 0.0), 1.0);
  const EntropySpec kl{EntropyKind::KL};
  std::vector<double> axis, single;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto X = mu.sample(5000, derive_seed(s, {stream::kMu})), Y = nu.sample(5000, derive_seed(s, {stream::kNu}));
    axis.push_back(axis_corrected_divergence(X, Y, 32, kl, kHard).value);
    for (std::size_t j = 0; j < d; ++j)
      single.push_back(rank_divergence(Samples1D(X.column(j)), Samples1D(Y.column(j)), 32, kl, kHard).value);
  }
  const double se = static_cast<double>(d) * stddev_of(single) / std::sqrt(static_cast<double>(single.size()));
  EXPECT_NEAR(mean_of(axis), static_cast<double>(d) * mean_of(single), 1e-12);
  const double exact = rank_divergence_exact(quantile_density_ratio(Dist1D::gaussian(0.5, 1), Dist1D::gaussian(0, 1)), 32, kl).value;
  EXPECT_NEAR(mean_of(axis), static_cast<double>(d) * exact, 4.0 * se + 0.01 * d * exact);
}

TEST(AxisCorrected, TruncatedGaussianBoxD2) {
  const auto mu = DistND::trunc_gaussian_box(box_x2()), nu = DistND::uniform_box(box_x2());
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto X = mu.sample(10000, derive_seed(s, {stream::kMu})), Y = nu.sample(10000, derive_seed(s, {stream::kNu}));
    v.push_back(axis_corrected_divergence(X, Y, 64, EntropySpec{EntropyKind::KL}, kHard).value);
  }
  EXPECT_NEAR(mean_of(v), 0.1379, 3 * 0.0048);
}

namespace {

// Noise-free D^(K) for N(0,1) truncated to [a,b] against U[a,b], by direct
// quadrature of the Bernstein-weighted ratio.
double box_interval_dk(double a, double b, int K) {
  auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  const double Z = Phi(b) - Phi(a);
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  double d = 0.0;
  for (int n = 0; n <= K; ++n) {
    const double Q = gk.integrate(
        [&](double u) {
          const double x = a + u * (b - a);
          const double r = (b - a) * std::exp(-0.5 * x * x) / (std::sqrt(2.0 * std::numbers::pi) * Z);
          return boost::math::binomial_coefficient<double>(K, n) * std::pow(u, n) * std::pow(1.0 - u, K - n) * r;
        },
        0.0, 1.0, 15, 1e-14);
    const double t = (K + 1.0) * Q;
    if (t > 0) d += t * std::log(t);
  }
  return d / (K + 1.0);
}

}  // namespace

TEST(AxisCorrected, TruncatedGaussianBoxD2LargeN) {
  const auto box = box_x2();
  const auto mu = DistND::trunc_gaussian_box(box), nu = DistND::uniform_box(box);
  double exact = 0.0;
  for (const auto& [a, b] : box.intervals) exact += box_interval_dk(a, b, 64);
  EXPECT_LT(exact, kl_truncgauss_vs_uniform(box));
  const std::size_t n = 5120000;
  const auto X = mu.sample(n, derive_seed(1, {stream::kMu})), Y = nu.sample(n, derive_seed(1, {stream::kNu}));
  EXPECT_NEAR(axis_corrected_divergence(X, Y, 64, EntropySpec{EntropyKind::KL}, kHard).value, exact, 1.5e-3);
}
