#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rankdiv/error.hpp"

namespace rankdiv {

/// N x d matrix of draws, row-major.
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::size_t n, std::size_t d, std::uint64_t seed = 0) : n_(n), d_(d), data_(n * d, 0.0), seed_(seed) {
    if (n == 0 || d == 0) throw DomainError("SampleSet needs N >= 1 and d >= 1");
  }
  SampleSet(std::size_t n, std::size_t d, std::vector<double> data, std::uint64_t seed = 0)
      : n_(n), d_(d), data_(std::move(data)), seed_(seed) {
    if (n == 0 || d == 0) throw DomainError("SampleSet needs N >= 1 and d >= 1");
    if (data_.size() != n * d) throw DomainError("SampleSet data has wrong size");
  }

  std::size_t rows() const { return n_; }
  std::size_t dim() const { return d_; }
  std::uint64_t seed() const { return seed_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * d_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * d_, d_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = data_[i * d_ + j];
    return c;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const SampleSet& o) const { return n_ == o.n_ && d_ == o.d_ && data_ == o.data_; }

 private:
  std::size_t n_ = 0, d_ = 0;
  std::vector<double> data_;
  std::uint64_t seed_ = 0;
};

}  // namespace rankdiv
