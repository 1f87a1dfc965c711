#include "composition_oracle.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace diftrans::testing {

double composition_ss(const CompositionData& data, const std::vector<double>& f,
                      const std::vector<double>& r) {
  double ss = 0.0;
  for (std::size_t t = 0; t < data.p.size(); ++t)
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double e = data.phi[t] * f[i] + (1.0 - data.phi[t]) * r[i] - data.p[t][i];
      ss += e * e;
    }
  return ss;
}

GridOptimum composition_grid_search(const CompositionData& data, int units) {
  const std::size_t k = data.p.front().size();
  const double step = 1.0 / units;
  double C = 0.0, B = 0.0;
  std::vector<double> w(k, 0.0);
  for (std::size_t t = 0; t < data.p.size(); ++t) {
    const double wf = data.phi[t], wr = 1.0 - wf;
    C += wr * wr;
    B += wf * wr;
    for (std::size_t i = 0; i < k; ++i) w[i] += wr * data.p[t][i];
  }

  GridOptimum best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<int> fu(k, 0);
  std::vector<double> f(k), r(k);
  std::vector<int> ru(k);

  auto evaluate = [&] {
    for (std::size_t i = 0; i < k; ++i) f[i] = fu[i] * step;
    std::fill(ru.begin(), ru.end(), 0);
    for (int u = 0; u < units; ++u) {
      std::size_t pick = 0;
      double least = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < k; ++i) {
        const double x = ru[i] * step;
        const double gain = C * ((x + step) * (x + step) - x * x) - 2.0 * step * (w[i] - B * f[i]);
        if (gain < least) {
          least = gain;
          pick = i;
        }
      }
      ++ru[pick];
    }
    for (std::size_t i = 0; i < k; ++i) r[i] = ru[i] * step;
    const double v = composition_ss(data, f, r);
    if (v < best.value) best = {v, f, r};
  };

  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == k) {
      fu[i] = left;
      evaluate();
      return;
    }
    for (int u = 0; u <= left; ++u) {
      fu[i] = u;
      rec(i + 1, left - u);
    }
  };
  rec(0, units);
  return best;
}

}  // namespace diftrans::testing
