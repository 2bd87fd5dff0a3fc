#pragma once

#include <functional>
#include <vector>

namespace fluxgate {

// Downhill simplex on a box. Trial points are clipped onto the bounds.
struct NelderMeadOptions {
  int max_evals = 400;
  double f_tol = 1e-10;   // spread of simplex values
  double x_tol = 1e-6;    // simplex extent relative to the box width
  double initial_step = 0.1;  // fraction of each box width
};

struct NelderMeadResult {
  std::vector<double> x;   // best point ever evaluated
  double f = 0.0;
  int evals = 0;
  bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opts = {});

}  // namespace fluxgate
