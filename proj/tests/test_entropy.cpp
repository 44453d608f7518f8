#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rankdiv/entropy.hpp"

using namespace rankdiv;

TEST(Entropy, EvalExamples) {
  EXPECT_EQ(eval(EntropySpec{EntropyKind::TV}, 1.0), 0.0);
  EXPECT_EQ(eval(EntropySpec{EntropyKind::ChiSq}, 0.0), 0.5);
  EXPECT_EQ(eval(EntropySpec{EntropyKind::KL}, 0.0), 0.0);
}

TEST(Entropy, ZeroAtOneForEveryKind) {
  for (auto k : kAllEntropyKinds) EXPECT_EQ(eval(EntropySpec{k}, 1.0), 0.0) << to_string(k);
}

TEST(Entropy, NegativeArgumentThrows) {
  for (auto k : kAllEntropyKinds) {
    EXPECT_THROW(eval(EntropySpec{k}, -0.1), DomainError);
    EXPECT_THROW(eval(EntropySpec{k}, std::nan("")), DomainError);
  }
}

TEST(Entropy, DerivativeExamples) {
  EXPECT_DOUBLE_EQ(derivative(EntropySpec{EntropyKind::ChiSq}, 3.0), 2.0);
  EXPECT_DOUBLE_EQ(derivative(EntropySpec{EntropyKind::KL}, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(derivative(EntropySpec{EntropyKind::TV}, 0.5), -1.0);
  EXPECT_DOUBLE_EQ(derivative(EntropySpec{EntropyKind::TV}, 1.0), 0.0);
}

TEST(Entropy, DerivativeClampFlag) {
  const EntropySpec kl{EntropyKind::KL};
  auto v = derivative_checked(kl, 1e-20);
  EXPECT_TRUE(v.clamped);
  EXPECT_DOUBLE_EQ(v.value, std::log(kl.epsilon_clamp) + 1.0);
  EXPECT_FALSE(derivative_checked(kl, 0.5).clamped);
  EXPECT_FALSE(derivative_checked(EntropySpec{EntropyKind::ChiSq}, 0.0).clamped);
}

TEST(Entropy, ConvexityOnRandomTriples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> t(0.0, 65.0), lam(0.0, 1.0);
  for (auto k : kAllEntropyKinds) {
    const EntropySpec spec{k};
    for (int i = 0; i < 1000; ++i) {
      double a = t(rng), b = t(rng);
      if (a > b) std::swap(a, b);
      const double l = lam(rng);
      const double lhs = eval(spec, l * a + (1 - l) * b);
      const double rhs = l * eval(spec, a) + (1 - l) * eval(spec, b);
      EXPECT_LE(lhs, rhs + 1e-12 * std::max(1.0, std::abs(rhs))) << to_string(k);
    }
  }
}

TEST(Entropy, TvSymmetry) {
  const EntropySpec tv{EntropyKind::TV};
  for (double t = 0.0; t <= 2.0; t += 0.01) EXPECT_DOUBLE_EQ(eval(tv, t), eval(tv, 2.0 - t));
}

TEST(Entropy, DerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (auto k : kAllEntropyKinds) {
    if (!differentiable(k)) continue;
    const EntropySpec spec{k};
    for (double t : {0.01, 0.1, 0.5, 0.9, 1.3, 2.0, 7.5, 33.0, 65.0}) {
      const double fd = (eval(spec, t + h) - eval(spec, t - h)) / (2 * h);
      const double d = derivative(spec, t);
      EXPECT_NEAR(fd, d, 1e-6 * std::max(1.0, std::abs(d))) << to_string(k) << " t=" << t;
    }
  }
}

TEST(Entropy, LipschitzExamples) {
  EXPECT_EQ(lipschitz_bound(EntropySpec{EntropyKind::TV}, 65.0), 1.0);
  EXPECT_DOUBLE_EQ(lipschitz_bound(EntropySpec{EntropyKind::ChiSq}, 65.0), 64.0);
  // On [e^-2/65, 65] the KL endpoint derivative at 65 dominates.
  EXPECT_NEAR(lipschitz_bound(EntropySpec{EntropyKind::KL}, 65.0, std::exp(-2.0) / 65.0), std::log(65.0) + 1.0, 1e-12);
}

TEST(Entropy, LipschitzBoundIsValidOnGrid) {
  for (auto k : kAllEntropyKinds) {
    const EntropySpec spec{k};
    const double lo = 1e-3, hi = 65.0;
    const double L = lipschitz_bound(spec, hi, lo);
    double worst = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double a = lo + (hi - lo) * i / n, b = lo + (hi - lo) * (i + 1) / n;
      worst = std::max(worst, std::abs(eval(spec, b) - eval(spec, a)) / (b - a));
    }
    EXPECT_LE(worst, L * (1 + 1e-9)) << to_string(k);
  }
}

TEST(Entropy, NamesRoundTrip) {
  for (auto k : kAllEntropyKinds) EXPECT_EQ(parse_entropy_kind(to_string(k)), k);
  EXPECT_THROW(parse_entropy_kind("renyi"), DomainError);
  EXPECT_EQ(make_entropy("hellinger2").kind, EntropyKind::SqHellinger);
}

TEST(Entropy, PerspectiveMatchesDirectEvaluation) {
  for (auto k : kAllEntropyKinds) {
    const EntropySpec spec{k};
    for (double p : {0.01, 0.3, 1.0, 2.5}) {
      for (double q : {0.02, 0.4, 1.0, 3.0}) {
        const double direct = q * eval(spec, p / q);
        EXPECT_NEAR(perspective_log(spec, std::log(p), std::log(q)), direct, 1e-12 * std::max(1.0, std::abs(direct)))
            << to_string(k);
      }
    }
  }
}
