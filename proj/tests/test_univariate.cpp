#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rankdiv/distributions.hpp"
#include "rankdiv/ratio.hpp"
#include "rankdiv/univariate.hpp"

using namespace rankdiv;

TEST(Samples1D, SortedViewAndValidation) {
  Samples1D s({3.0, 1.0, 2.0, 1.0}, 9);
  EXPECT_EQ(s.sorted(), (std::vector<double>{1.0, 1.0, 2.0, 3.0}));
  EXPECT_EQ(s.order(), (std::vector<std::size_t>{1, 3, 2, 0}));
  EXPECT_EQ(s.seed(), 9u);
  EXPECT_THROW(Samples1D(std::vector<double>{}), DomainError);
  EXPECT_THROW(Samples1D({std::nan("")}), DomainError);
}

TEST(EmpiricalCdf, Examples) {
  Samples1D s({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(empirical_cdf(s, 2.0), 2.0 / 3.0);
  EXPECT_EQ(empirical_cdf(s, 0.0), 0.0);
  EXPECT_EQ(empirical_cdf(s, 9.0), 1.0);
}

TEST(SmoothedCdf, Examples) {
  EXPECT_DOUBLE_EQ(smoothed_cdf(Samples1D({0.0}), 0.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(smoothed_cdf(Samples1D({0.0}), 1e300, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(smoothed_cdf(Samples1D({-1.0, 1.0}), 0.0, 0.5), 0.5);
  EXPECT_THROW(smoothed_cdf(Samples1D({0.0}), 0.0, 0.0), DomainError);
}

TEST(SmoothedCdf, IncreasingAndConvergesToStepCdf) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> v(200);
  for (auto& x : v) x = g(rng);
  Samples1D s(v);
  double prev = -1.0;
  for (double x = -3.0; x <= 3.0; x += 0.01) {
    const double c = smoothed_cdf(s, x, 0.2);
    EXPECT_GT(c, prev);
    prev = c;
  }
  // away from atoms the tau -> 0 limit is the step CDF
  for (std::size_t k = 0; k + 1 < s.size(); k += 17) {
    const double x = 0.5 * (s.sorted()[k] + s.sorted()[k + 1]);
    if (s.sorted()[k + 1] - s.sorted()[k] < 1e-4) continue;
    EXPECT_NEAR(smoothed_cdf(s, x, 1e-6), empirical_cdf(s, x), 1e-12);
  }
}

TEST(EmpiricalQuantile, Examples) {
  Samples1D s({1.0, 2.0, 3.0});
  EXPECT_EQ(empirical_quantile(s, 0.0), 1.0);
  EXPECT_EQ(empirical_quantile(s, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(empirical_quantile(Samples1D({0.0, 10.0}), 0.5), 5.0);
  EXPECT_THROW(empirical_quantile(s, -0.1), DomainError);
  EXPECT_THROW(empirical_quantile(s, 1.1), DomainError);
}

TEST(EmpiricalQuantile, InvertsInterpolatedCdf) {
  Samples1D s({-2.0, 0.5, 0.7, 4.0, 9.0});
  // piecewise-linear CDF through (x_(k), k/(N-1))
  for (double u = 0.0; u <= 1.0; u += 0.05) {
    const double x = empirical_quantile(s, u);
    const auto& v = s.sorted();
    std::size_t k = 0;
    while (k + 2 < v.size() && v[k + 1] < x) ++k;
    const double F = (k + (x - v[k]) / (v[k + 1] - v[k])) / (v.size() - 1.0);
    EXPECT_NEAR(F, u, 1e-12);
  }
}

TEST(Bernstein, Examples) {
  auto b = bernstein_basis(1, 0.5);
  EXPECT_DOUBLE_EQ(b[0], 0.5);
  EXPECT_DOUBLE_EQ(b[1], 0.5);
  EXPECT_EQ(bernstein_basis(2, 0.0), (std::vector<double>{1.0, 0.0, 0.0}));
  b = bernstein_basis(2, 0.5);
  EXPECT_DOUBLE_EQ(b[0], 0.25);
  EXPECT_DOUBLE_EQ(b[1], 0.5);
  EXPECT_DOUBLE_EQ(b[2], 0.25);
  EXPECT_EQ(bernstein_basis(0, 0.3), (std::vector<double>{1.0}));
}

TEST(Bernstein, PartitionOfUnityAndNonnegativity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int K : {1, 8, 64, 512, 4096}) {
    for (int i = 0; i < 100; ++i) {
      const auto b = bernstein_basis(K, U(rng));
      double s = 0.0;
      for (double x : b) {
        EXPECT_GE(x, 0.0);
        s += x;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Bernstein, MatchesBinomialFormula) {
  for (int K : {5, 30}) {
    for (double u : {0.1, 0.37, 0.9}) {
      const auto b = bernstein_basis(K, u);
      for (int n = 0; n <= K; ++n) {
        const double exact = std::exp(std::lgamma(K + 1.0) - std::lgamma(n + 1.0) - std::lgamma(K - n + 1.0)) *
                             std::pow(u, n) * std::pow(1 - u, K - n);
        EXPECT_NEAR(b[n], exact, 1e-13);
      }
    }
  }
}

TEST(Bernstein, DegreeRecurrence) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int K : {2, 9, 64, 512}) {
    for (int i = 0; i < 50; ++i) {
      const double u = U(rng);
      const auto hi = bernstein_basis(K, u), lo = bernstein_basis(K - 1, u);
      for (int n = 0; n < K; ++n) {
        const double rec = (double(K - n) / K) * hi[n] + (double(n + 1) / K) * hi[n + 1];
        EXPECT_NEAR(lo[n], rec, 1e-12);
      }
    }
  }
}

TEST(Bernstein, TinyArgumentsDoNotOverflow) {
  for (double u : {1e-300, 1e-17, 1.0 - 1e-16}) {
    const auto b = bernstein_basis(4096, u);
    double s = 0.0;
    for (double x : b) {
      EXPECT_TRUE(std::isfinite(x));
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(BernsteinDerivative, Examples) {
  auto d = bernstein_basis_derivative(1, 0.5);
  EXPECT_DOUBLE_EQ(d[0], -1.0);
  EXPECT_DOUBLE_EQ(d[1], 1.0);
  d = bernstein_basis_derivative(2, 0.0);
  EXPECT_DOUBLE_EQ(d[0], -2.0);
  EXPECT_DOUBLE_EQ(d[1], 2.0);
  EXPECT_DOUBLE_EQ(d[2], 0.0);
  EXPECT_THROW(bernstein_basis_derivative(0, 0.5), DomainError);
}

TEST(BernsteinDerivative, FiniteDifferenceAndZeroSum) {
  const double h = 1e-7;
  for (int K : {2, 7, 40}) {
    for (double u : {0.2, 0.5, 0.81}) {
      const auto d = bernstein_basis_derivative(K, u);
      const auto bp = bernstein_basis(K, u + h), bm = bernstein_basis(K, u - h);
      double s = 0.0;
      for (int n = 0; n <= K; ++n) {
        EXPECT_NEAR(d[n], (bp[n] - bm[n]) / (2 * h), 1e-6 * std::max(1.0, std::abs(d[n])));
        s += d[n];
      }
      EXPECT_NEAR(s, 0.0, 1e-10);
    }
  }
}

TEST(RankCount, Examples) {
  const std::vector<double> draws{0.1, 0.7, 0.4};
  EXPECT_EQ(rank_count(0.5, draws), 2);
  EXPECT_EQ(rank_count(-1e300, draws), 0);
  const std::vector<double> one{0.5};
  EXPECT_EQ(rank_count(0.5, one), 1);
}

TEST(RankPmfCounted, DegenerateCases) {
  auto P = rank_pmf_counted(Samples1D({2.0, 2.0}), Samples1D({2.0}), 5, 1);
  EXPECT_EQ(P.probs[5], 1.0);
  P = rank_pmf_counted(Samples1D({-5.0, -4.0}), Samples1D({0.0, 1.0, 2.0}), 4, 1);
  EXPECT_EQ(P.probs, (std::vector<double>{1, 0, 0, 0, 0}));
  EXPECT_EQ(P.provenance, Provenance::Counted);
}

TEST(RankPmfCounted, UniformUnderEquality) {
  const auto g = Dist1D::gaussian(0, 1);
  const auto P = rank_pmf_counted(g.sample(100000, 1), g.sample(100000, 2), 8, 3);
  P.validate();
  for (double p : P.probs) EXPECT_NEAR(p, 1.0 / 9.0, 0.01);
}

TEST(RankPmfCounted, DeterministicGivenSeed) {
  const auto g = Dist1D::gaussian(0, 1);
  const auto mu = g.sample(500, 1), nu = g.sample(400, 2);
  EXPECT_EQ(rank_pmf_counted(mu, nu, 12, 77).probs, rank_pmf_counted(mu, nu, 12, 77).probs);
}

TEST(RankPmfSmoothed, DegenerateCases) {
  auto P = rank_pmf_smoothed(Samples1D({-5.0, -4.0}), Samples1D({0.0, 1.0}), 3, 0.0);
  EXPECT_EQ(P.probs, (std::vector<double>{1, 0, 0, 0}));
  P = rank_pmf_smoothed(Samples1D({5.0, 4.0}), Samples1D({0.0, 1.0}), 3, 0.0);
  EXPECT_EQ(P.probs, (std::vector<double>{0, 0, 0, 1}));
  EXPECT_EQ(P.provenance, Provenance::Smoothed);
}

TEST(RankPmfSmoothed, AgreesWithCountedWithinSamplingError) {
  const auto mu = Dist1D::gaussian(0.5, 1).sample(20000, 4);
  const auto nu = Dist1D::gaussian(0, 1.3).sample(20000, 5);
  const auto S = rank_pmf_smoothed(mu, nu, 16, 0.0);
  const auto C = rank_pmf_counted(mu, nu, 16, 6);
  const double sigma = std::sqrt(1.0 / (4.0 * 20000));
  for (int n = 0; n <= 16; ++n) EXPECT_NEAR(S.probs[n], C.probs[n], 3 * sigma);
}

TEST(RankPmfSmoothed, MonotonePushforwardInvarianceIsBitExact) {
  auto warp = [](const Samples1D& s) {
    std::vector<double> v(s.values());
    for (auto& x : v) x = x * x * x + x;
    return Samples1D(v);
  };
  const auto mu = Dist1D::laplace(0.3, 1).sample(5000, 8);
  const auto nu = Dist1D::gaussian(0, 1).sample(4000, 9);
  for (int K : {4, 64, 300}) {
    EXPECT_EQ(rank_pmf_smoothed(mu, nu, K, 0.0).probs, rank_pmf_smoothed(warp(mu), warp(nu), K, 0.0).probs);
  }
}

TEST(RankPmfSmoothed, PositiveTauIsValidPmf) {
  const auto mu = Dist1D::gaussian(0, 1).sample(1000, 1);
  const auto nu = Dist1D::gaussian(1, 1).sample(1000, 2);
  rank_pmf_smoothed(mu, nu, 32, 0.2).validate();
}

TEST(RankPmfExact, IdentityRatioIsExactlyUniform) {
  for (int K : {0, 1, 5, 64, 512, 1024}) {
    const auto P = rank_pmf_exact(QuantileDensityRatio::identity(), K, 512);
    for (double p : P.probs) EXPECT_NEAR(p, 1.0 / (K + 1), 1e-12);
    EXPECT_EQ(P.provenance, Provenance::QuadratureExact);
  }
}

TEST(RankPmfExact, SymmetricPairGivesHalfHalf) {
  const auto r = quantile_density_ratio(Dist1D::gaussian(0, 1), Dist1D::gaussian(0, 2));
  const auto P = rank_pmf_exact(r, 1, 512);
  EXPECT_NEAR(P.probs[0], 0.5, 1e-12);
  EXPECT_NEAR(P.probs[1], 0.5, 1e-12);
}

TEST(RankPmfExact, DriftIsNegligibleForAnalyticPairs) {
  const std::vector<std::pair<Dist1D, Dist1D>> pairs{
      {Dist1D::gaussian(0, 1), Dist1D::gaussian(2, 1)},
      {Dist1D::gaussian(0, 1), Dist1D::gaussian(0, 2)},
      {Dist1D::laplace(0, 1), Dist1D::gaussian(0, 1)},
      {Dist1D::gauss_mix2(2, 1), Dist1D::gaussian(0, 1)}};
  for (const auto& [mu, nu] : pairs) {
    for (int K : {8, 256, 1024}) {
      const auto raw = rank_pmf_exact_unnormalized(quantile_density_ratio(mu, nu), K, default_quad_points(K));
      double s = 0.0;
      for (double p : raw) s += p;
      EXPECT_NEAR(s, 1.0, 1e-10) << mu.name() << " K=" << K;
    }
  }
}

TEST(RankPmfExact, MatchesLargeSampleCounting) {
  const auto mu = Dist1D::gaussian(0, 1), nu = Dist1D::gaussian(2, 1);
  const int K = 32;
  const std::size_t n = 10000000;
  const auto E = rank_pmf_exact(quantile_density_ratio(mu, nu), K, 512);
  const auto C = rank_pmf_counted(mu.sample(n, 21), nu.sample(n, 22), K, 23);
  for (int k = 0; k <= K; ++k) {
    // binomial sd of a bin frequency, inflated for the finite reference sample
    const double sd = std::sqrt(E.probs[k] * (1 - E.probs[k]) / n) * 2.0 + 1e-7;
    EXPECT_NEAR(C.probs[k], E.probs[k], 3 * sd) << "bin " << k;
  }
}

TEST(RankPmfExact, RejectsTooFewNodes) {
  EXPECT_THROW(rank_pmf_exact(QuantileDensityRatio::identity(), 4, 32), DomainError);
}

TEST(RankPmfExact, NonFiniteRatioIsAnEvaluationError) {
  QuantileDensityRatio bad([](double) { return std::numeric_limits<double>::infinity(); });
  EXPECT_THROW(rank_pmf_exact(bad, 4, 64), EvaluationError);
}

TEST(RankHistogram, ValidateCatchesBadPmfs) {
  EXPECT_THROW((RankHistogram{2, {0.5, 0.5}, Provenance::Counted}.validate()), DomainError);
  EXPECT_THROW((RankHistogram{1, {1.5, -0.5}, Provenance::Counted}.validate()), DomainError);
  EXPECT_THROW((RankHistogram{1, {0.4, 0.4}, Provenance::Counted}.validate()), DomainError);
  EXPECT_NO_THROW((RankHistogram{1, {0.25, 0.75}, Provenance::Counted}.validate()));
}
