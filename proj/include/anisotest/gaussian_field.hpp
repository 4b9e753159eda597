#pragma once

#include <memory>
#include <vector>

#include "anisotest/rng.hpp"

namespace anisotest {

/// Regular lattice of nx * ny cell centres with spacings dx, dy.
struct FieldGrid {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;

  friend bool operator==(const FieldGrid&, const FieldGrid&) = default;
};

/// C(d) = variance * exp(-d / scale).
struct ExponentialCovariance {
  double variance = 0.0;
  double scale = 1.0;

  double operator()(double d) const;
  friend bool operator==(const ExponentialCovariance&, const ExponentialCovariance&) = default;
};

/// Draws zero-mean stationary Gaussian fields on a lattice.
///
/// Large lattices use circulant embedding (FFT of the wrapped covariance on a
/// padded torus); small ones fall back to a dense Cholesky factor.
class GaussianFieldSampler {
 public:
  enum class Method { automatic, circulant, dense };

  GaussianFieldSampler(FieldGrid grid, ExponentialCovariance cov, Method method = Method::automatic);
  ~GaussianFieldSampler();
  GaussianFieldSampler(const GaussianFieldSampler&) = delete;
  GaussianFieldSampler& operator=(const GaussianFieldSampler&) = delete;

  /// Row-major values, index iy * nx + ix.
  std::vector<double> sample(RngStream& rng) const;

  const FieldGrid& grid() const { return grid_; }
  Method method() const { return method_; }
  /// Padded torus size used by circulant embedding (0 for dense).
  int embed_x() const { return mx_; }
  int embed_y() const { return my_; }

  static constexpr std::size_t kDenseLimit = 1024;

 private:
  struct Impl;
  FieldGrid grid_;
  ExponentialCovariance cov_;
  Method method_;
  int mx_ = 0, my_ = 0;
  std::unique_ptr<Impl> impl_;
};

/// Shared sampler for repeated draws with the same lattice and covariance.
std::shared_ptr<const GaussianFieldSampler> cached_field_sampler(const FieldGrid& grid,
                                                                 const ExponentialCovariance& cov);

}  // namespace anisotest
