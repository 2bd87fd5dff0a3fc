#include "fluxgate/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fluxgate/errors.hpp"

namespace fluxgate {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opts) {
  const size_t n = x0.size();
  if (n == 0 || lower.size() != n || upper.size() != n)
    throw InvalidArgument("nelder_mead: dimension mismatch");
  for (size_t i = 0; i < n; ++i)
    if (!(lower[i] < upper[i])) throw InvalidArgument("nelder_mead: empty box");

  NelderMeadResult best;
  auto clip = [&](std::vector<double>& x) {
    for (size_t i = 0; i < n; ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  };
  // Thrown to stop mid-iteration once the evaluation budget is spent.
  struct BudgetSpent {};
  auto eval = [&](const std::vector<double>& x) {
    if (best.evals >= opts.max_evals) throw BudgetSpent{};
    double v = f(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::max();
    ++best.evals;
    if (best.x.empty() || v < best.f) {
      best.x = x;
      best.f = v;
    }
    return v;
  };

  clip(x0);
  std::vector<std::vector<double>> simplex{x0};
  for (size_t i = 0; i < n; ++i) {
    auto x = x0;
    const double step = opts.initial_step * (upper[i] - lower[i]);
    x[i] += (x[i] + step <= upper[i]) ? step : -step;
    simplex.push_back(x);
  }
  std::vector<double> values;
  std::vector<size_t> order(n + 1);
  try {
    for (const auto& x : simplex) values.push_back(eval(x));
    while (true) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
      const size_t lo = order.front(), hi = order.back(), second = order[n - 1];

      double extent = 0.0;
      for (size_t k = 0; k <= n; ++k)
        for (size_t i = 0; i < n; ++i)
          extent = std::max(extent, std::abs(simplex[k][i] - simplex[lo][i]) / (upper[i] - lower[i]));
      if (std::abs(values[hi] - values[lo]) <= opts.f_tol || extent <= opts.x_tol) {
        best.converged = true;
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (size_t k = 0; k <= n; ++k)
        if (k != hi)
          for (size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
      auto along = [&](double t) {
        std::vector<double> x(n);
        for (size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (simplex[hi][i] - centroid[i]);
        clip(x);
        return x;
      };

      auto xr = along(-1.0);
      const double fr = eval(xr);
      if (fr < values[lo]) {
        auto xe = along(-2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          simplex[hi] = xe;
          values[hi] = fe;
        } else {
          simplex[hi] = xr;
          values[hi] = fr;
        }
      } else if (fr < values[second]) {
        simplex[hi] = xr;
        values[hi] = fr;
      } else {
        const bool outside = fr < values[hi];
        auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : values[hi])) {
          simplex[hi] = xc;
          values[hi] = fc;
        } else {
          for (size_t k = 0; k <= n; ++k) {
            if (k == lo) continue;
            for (size_t i = 0; i < n; ++i)
              simplex[k][i] = simplex[lo][i] + 0.5 * (simplex[k][i] - simplex[lo][i]);
            values[k] = eval(simplex[k]);
          }
        }
      }
    }
  } catch (const BudgetSpent&) {
  }
  return best;
}

}  // namespace fluxgate
