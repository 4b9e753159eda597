#pragma once

#include <functional>
#include <span>
#include <vector>

namespace anisotest {

struct NelderMeadOptions {
  int max_iterations = 500;
  double rel_tol = 1e-8;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Deterministic Nelder-Mead simplex. The start simplex is x0 plus steps[i] along axis i.
/// Non-finite objective values count as +infinity. The returned value never exceeds f(x0).
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             std::vector<double> steps, const NelderMeadOptions& opts = {});

}  // namespace anisotest
