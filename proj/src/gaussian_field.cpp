#include "anisotest/gaussian_field.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <list>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace anisotest {

namespace {

// FFTW planning is not thread-safe; execution on fresh arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Smallest 2^a 3^b 5^c >= n.
int fft_friendly(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int k = m;
    for (int f : {2, 3, 5})
      while (k % f == 0) k /= f;
    if (k == 1) return m;
  }
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

double ExponentialCovariance::operator()(double d) const { return variance * std::exp(-d / scale); }

struct GaussianFieldSampler::Impl {
  // circulant
  fftw_plan plan = nullptr;
  std::vector<double> sqrt_eigen;  // sqrt(lambda / M)
  // dense
  Eigen::MatrixXd lower;

  ~Impl() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

GaussianFieldSampler::GaussianFieldSampler(FieldGrid grid, ExponentialCovariance cov, Method method)
    : grid_(grid), cov_(cov), method_(method), impl_(std::make_unique<Impl>()) {
  if (grid.nx < 1 || grid.ny < 1 || !(grid.dx > 0.0) || !(grid.dy > 0.0))
    throw std::invalid_argument("Gaussian field grid needs positive size and spacing");
  if (!(cov.variance >= 0.0) || !(cov.scale > 0.0))
    throw std::invalid_argument("exponential covariance needs variance >= 0 and scale > 0");
  const std::size_t cells = static_cast<std::size_t>(grid.nx) * grid.ny;
  if (method_ == Method::automatic) method_ = cells <= kDenseLimit ? Method::dense : Method::circulant;

  if (method_ == Method::dense) {
    Eigen::MatrixXd c(cells, cells);
    for (std::size_t a = 0; a < cells; ++a) {
      const double ax = static_cast<double>(a % grid.nx) * grid.dx, ay = static_cast<double>(a / grid.nx) * grid.dy;
      for (std::size_t b = 0; b <= a; ++b) {
        const double bx = static_cast<double>(b % grid.nx) * grid.dx, by = static_cast<double>(b / grid.nx) * grid.dy;
        c(a, b) = c(b, a) = cov(std::hypot(ax - bx, ay - by));
      }
    }
    // A tiny nugget keeps the factorisation stable for variance 0 or very smooth fields.
    c.diagonal().array() += 1e-12 * std::max(cov.variance, 1e-300);
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "dense covariance factorisation failed on a " << grid.nx << "x" << grid.ny
         << " grid (dx=" << grid.dx << ", dy=" << grid.dy << ")";
      throw std::runtime_error(os.str());
    }
    impl_->lower = llt.matrixL();
    return;
  }

  // Circulant embedding: wrap the covariance on a torus of at least twice the grid,
  // enlarging it until the embedding is non-negative definite.
  double worst_ratio = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const int factor = 1 << attempt;
    mx_ = fft_friendly(factor * std::max(2 * (grid.nx - 1), 1));
    my_ = fft_friendly(factor * std::max(2 * (grid.ny - 1), 1));
    const std::size_t m = static_cast<std::size_t>(mx_) * my_;
    FftwBuffer buf(m);
    for (int j = 0; j < my_; ++j) {
      const double ddy = std::min(j, my_ - j) * grid.dy;
      for (int i = 0; i < mx_; ++i) {
        const double ddx = std::min(i, mx_ - i) * grid.dx;
        buf.data[static_cast<std::size_t>(j) * mx_ + i][0] = cov(std::hypot(ddx, ddy));
        buf.data[static_cast<std::size_t>(j) * mx_ + i][1] = 0.0;
      }
    }
    {
      std::lock_guard lock(fftw_planner_mutex());
      if (impl_->plan) fftw_destroy_plan(impl_->plan);
      // Forward and backward differ only by conjugation, irrelevant for a real symmetric kernel
      // and for complex white noise, so a single forward plan serves both.
      FftwBuffer scratch(m);
      impl_->plan = fftw_plan_dft_2d(my_, mx_, scratch.data, scratch.data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute_dft(impl_->plan, buf.data, buf.data);
    double max_ev = 0.0, min_ev = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      max_ev = std::max(max_ev, buf.data[k][0]);
      min_ev = std::min(min_ev, buf.data[k][0]);
    }
    worst_ratio = max_ev > 0.0 ? -min_ev / max_ev : 0.0;
    if (worst_ratio <= 1e-8 || cov.variance == 0.0) {
      impl_->sqrt_eigen.resize(m);
      for (std::size_t k = 0; k < m; ++k)
        impl_->sqrt_eigen[k] = std::sqrt(std::max(buf.data[k][0], 0.0) / static_cast<double>(m));
      return;
    }
  }
  std::ostringstream os;
  os << "circulant embedding is not non-negative definite for a " << grid.nx << "x" << grid.ny
     << " grid (dx=" << grid.dx << ", dy=" << grid.dy << ", embedding " << mx_ << "x" << my_
     << ", min/max eigenvalue ratio " << -worst_ratio << ")";
  throw std::runtime_error(os.str());
}

GaussianFieldSampler::~GaussianFieldSampler() = default;

std::vector<double> GaussianFieldSampler::sample(RngStream& rng) const {
  const std::size_t cells = static_cast<std::size_t>(grid_.nx) * grid_.ny;
  std::vector<double> out(cells);
  if (method_ == Method::dense) {
    Eigen::VectorXd z(cells);
    for (std::size_t k = 0; k < cells; ++k) z[k] = rng.normal();
    Eigen::VectorXd f = impl_->lower * z;
    for (std::size_t k = 0; k < cells; ++k) out[k] = f[k];
    return out;
  }
  const std::size_t m = static_cast<std::size_t>(mx_) * my_;
  FftwBuffer buf(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double s = impl_->sqrt_eigen[k];
    buf.data[k][0] = s * rng.normal();
    buf.data[k][1] = s * rng.normal();
  }
  fftw_execute_dft(impl_->plan, buf.data, buf.data);
  for (int j = 0; j < grid_.ny; ++j)
    for (int i = 0; i < grid_.nx; ++i)
      out[static_cast<std::size_t>(j) * grid_.nx + i] = buf.data[static_cast<std::size_t>(j) * mx_ + i][0];
  return out;
}

std::shared_ptr<const GaussianFieldSampler> cached_field_sampler(const FieldGrid& grid,
                                                                 const ExponentialCovariance& cov) {
  struct Entry {
    FieldGrid grid;
    ExponentialCovariance cov;
    std::shared_ptr<const GaussianFieldSampler> sampler;
  };
  static std::mutex mutex;
  static std::list<Entry> cache;
  constexpr std::size_t kCapacity = 8;
  {
    std::lock_guard lock(mutex);
    for (auto it = cache.begin(); it != cache.end(); ++it)
      if (it->grid == grid && it->cov == cov) {
        cache.splice(cache.begin(), cache, it);
        return cache.front().sampler;
      }
  }
  auto sampler = std::make_shared<const GaussianFieldSampler>(grid, cov);
  std::lock_guard lock(mutex);
  cache.push_front({grid, cov, sampler});
  if (cache.size() > kCapacity) cache.pop_back();
  return sampler;
}

}  // namespace anisotest
