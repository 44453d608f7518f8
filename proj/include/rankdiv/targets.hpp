#pragma once
// Two-dimensional toy targets for the transport dynamics.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>

#include "rankdiv/error.hpp"
#include "rankdiv/rng.hpp"
#include "rankdiv/sample_set.hpp"

namespace rankdiv {

enum class Target { Checkerboard, Ring, Spirals, TwoBlobs, GaussianMix };

inline std::string_view to_string(Target t) {
  switch (t) {
    case Target::Checkerboard: return "checkerboard";
    case Target::Ring: return "ring";
    case Target::Spirals: return "spirals";
    case Target::TwoBlobs: return "two-blobs";
    case Target::GaussianMix: return "gaussian-mix";
  }
  return "?";
}

inline Target parse_target(std::string_view s) {
  for (auto t : {Target::Checkerboard, Target::Ring, Target::Spirals, Target::TwoBlobs, Target::GaussianMix}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown target '" + std::string(s) + "'");
}

/// M draws from the target.
///   checkerboard  uniform on the dark cells of a 4x4 board over [-2, 2]^2
///   ring          radius 2 with N(0, 0.1^2) radial noise
///   spirals       two interleaved spirals with N(0, 0.1^2) noise
///   two-blobs     1/2 N((-2, 0), 0.5^2 I) + 1/2 N((2, 0), 0.5^2 I)
///   gaussian-mix  8 Gaussians of std 0.2 evenly placed on the circle of radius 2
inline SampleSet sample_target(Target t, std::size_t M, std::uint64_t seed) {
  SampleSet out(M, 2, seed);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < M; ++i) {
    double x = 0.0, y = 0.0;
    switch (t) {
      case Target::Checkerboard: {
        for (;;) {
          x = 4.0 * unif(rng) - 2.0;
          y = 4.0 * unif(rng) - 2.0;
          const int cx = static_cast<int>(std::floor(x + 2.0)), cy = static_cast<int>(std::floor(y + 2.0));
          if ((cx + cy) % 2 == 0) break;
        }
        break;
      }
      case Target::Ring: {
        const double a = 2.0 * pi * unif(rng);
        const double r = 2.0 + 0.1 * gauss(rng);
        x = r * std::cos(a);
        y = r * std::sin(a);
        break;
      }
      case Target::Spirals: {
        const double s = unif(rng);
        const double a = 3.0 * pi * std::sqrt(s);
        const double r = 0.2 + 1.8 * std::sqrt(s);
        const double sign = unif(rng) < 0.5 ? 1.0 : -1.0;
        x = sign * r * std::cos(a) + 0.1 * gauss(rng);
        y = sign * r * std::sin(a) + 0.1 * gauss(rng);
        break;
      }
      case Target::TwoBlobs: {
        const double cx = unif(rng) < 0.5 ? -2.0 : 2.0;
        x = cx + 0.5 * gauss(rng);
        y = 0.5 * gauss(rng);
        break;
      }
      case Target::GaussianMix: {
        const int k = static_cast<int>(std::floor(8.0 * unif(rng))) % 8;
        const double a = 2.0 * pi * k / 8.0;
        x = 2.0 * std::cos(a) + 0.2 * gauss(rng);
        y = 2.0 * std::sin(a) + 0.2 * gauss(rng);
        break;
      }
    }
    out(i, 0) = x;
    out(i, 1) = y;
  }
  return out;
}

/// N(0, I_d) particles.
inline SampleSet sample_isotropic(std::size_t N, std::size_t d, std::uint64_t seed) {
  SampleSet out(N, d, seed);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : out.data()) v = gauss(rng);
  return out;
}

}  // namespace rankdiv
