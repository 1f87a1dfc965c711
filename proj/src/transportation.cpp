#include "transportation.hpp"

#include <algorithm>
#include <limits>

namespace diftrans::detail {

namespace {
constexpr double kEps = 1e-15;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::vector<FlowEntry> solve_transportation(
    std::span<const double> supply, std::span<const double> demand,
    const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  const std::size_t S = n + m;
  const std::size_t T = n + m + 1;
  const std::size_t V = n + m + 2;

  std::vector<double> c(n * m), flow(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) c[i * m + j] = cost(i, j);

  std::vector<double> rem_s(supply.begin(), supply.end());
  std::vector<double> rem_d(demand.begin(), demand.end());
  std::vector<double> pot(V, 0.0), dist(V);
  std::vector<std::size_t> prev(V);
  std::vector<char> done(V);

  for (;;) {
    double left = 0.0;
    for (double r : rem_s) left += r;
    if (left <= 1e-13) break;

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    dist[S] = 0.0;
    auto relax = [&](std::size_t u, std::size_t v, double w) {
      const double nd = dist[u] + std::max(0.0, w + pot[u] - pot[v]);
      if (nd < dist[v]) {
        dist[v] = nd;
        prev[v] = u;
      }
    };
    for (;;) {
      std::size_t u = V;
      double best = kInf;
      for (std::size_t v = 0; v < V; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == V) break;
      done[u] = 1;
      if (u == T) break;
      if (u == S) {
        for (std::size_t i = 0; i < n; ++i)
          if (rem_s[i] > kEps) relax(S, i, 0.0);
      } else if (u < n) {
        for (std::size_t j = 0; j < m; ++j) relax(u, n + j, c[u * m + j]);
      } else {
        const std::size_t j = u - n;
        for (std::size_t i = 0; i < n; ++i)
          if (flow[i * m + j] > kEps) relax(u, i, -c[i * m + j]);
        if (rem_d[j] > kEps) relax(u, T, 0.0);
      }
    }
    if (dist[T] == kInf) break;
    for (std::size_t v = 0; v < V; ++v) pot[v] += std::min(dist[v], dist[T]);

    // Bottleneck along the path T <- ... <- S.
    double push = kInf;
    for (std::size_t v = T; v != S; v = prev[v]) {
      const std::size_t u = prev[v];
      if (u == S) {
        push = std::min(push, rem_s[v]);
      } else if (v == T) {
        push = std::min(push, rem_d[u - n]);
      } else if (u >= n) {  // reverse edge target u -> source v
        push = std::min(push, flow[v * m + (u - n)]);
      }
    }
    for (std::size_t v = T; v != S; v = prev[v]) {
      const std::size_t u = prev[v];
      if (u == S) {
        rem_s[v] -= push;
      } else if (v == T) {
        rem_d[u - n] -= push;
      } else if (u < n) {
        flow[u * m + (v - n)] += push;
      } else {
        flow[v * m + (u - n)] -= push;
      }
    }
  }

  std::vector<FlowEntry> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (flow[i * m + j] > 0.0) out.push_back({i, j, flow[i * m + j]});
  return out;
}

}  // namespace diftrans::detail
