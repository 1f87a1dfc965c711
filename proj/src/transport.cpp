#include "diftrans/transport.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <ostream>

#include "diftrans/error.hpp"
#include "diftrans/format.hpp"
#include "transportation.hpp"

namespace diftrans {

Bandwidth::Bandwidth(std::int64_t d) : d_(d) {
  if (d < 0) throw ValidationError("bandwidth must be nonnegative");
}

double TransportPlan::displacement() const {
  double total = 0.0;
  for (const auto& e : entries)
    total += e.mass * static_cast<double>(
                          std::llabs(source_support[e.source] - target_support[e.target]));
  return total;
}

double TransportPlan::marginal_violation(const PricePMF& source,
                                         const PricePMF& target) const {
  std::vector<double> rows(source.size(), 0.0), cols(target.size(), 0.0);
  for (const auto& e : entries) {
    rows.at(e.source) += e.mass;
    cols.at(e.target) += e.mass;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    worst = std::max(worst, std::abs(rows[i] - source.mass()[i]));
  for (std::size_t j = 0; j < cols.size(); ++j)
    worst = std::max(worst, std::abs(cols[j] - target.mass()[j]));
  return worst;
}

namespace {

// Remainders below this are rounding residue of the mass subtractions.
constexpr double kMassResidue = 1e-14;

// Sweep over sources in ascending order, filling the lowest reachable target
// first. Reachable windows [x - d, x + d] move right monotonically, so a target
// left behind by one source is unreachable for every later source and the
// greedy fill is a maximum free flow. Calls emit(i, j, mass) for every free
// move and leaves the unmatched masses in rem_a / rem_b.
template <class Emit>
void sweep_free_moves(std::span<const std::int64_t> xs, std::vector<double>& rem_a,
                      std::span<const std::int64_t> ys, std::vector<double>& rem_b,
                      std::int64_t d, Emit&& emit) {
  std::size_t j = 0;
  const std::size_t m = ys.size();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double& ra = rem_a[i];
    if (ra <= 0.0) continue;
    while (j < m && ys[j] < xs[i] - d) ++j;
    while (ra > 0.0 && j < m && ys[j] <= xs[i] + d) {
      const double t = std::min(ra, rem_b[j]);
      if (t > 0.0) {
        ra -= t;
        rem_b[j] -= t;
        if (ra < kMassResidue) ra = 0.0;
        if (rem_b[j] < kMassResidue) rem_b[j] = 0.0;
        emit(i, j, t);
      }
      if (rem_b[j] <= 0.0) {
        ++j;
      } else {
        break;
      }
    }
  }
}

void check_sorted(std::span<const std::int64_t> s) {
  if (!std::is_sorted(s.begin(), s.end()))
    throw ValidationError("transport supports must be ascending");
}

double residual_cost(const std::vector<double>& rem_a, const std::vector<double>& rem_b) {
  double ra = 0.0, rb = 0.0;
  for (double v : rem_a) ra += v;
  for (double v : rem_b) rb += v;
  return std::clamp(0.5 * (ra + rb), 0.0, 1.0);
}

}  // namespace

double ot_cost(std::span<const std::int64_t> xs, std::span<const double> a,
               std::span<const std::int64_t> ys, std::span<const double> b,
               std::int64_t d) {
  if (xs.size() != a.size() || ys.size() != b.size())
    throw ValidationError("support and mass lengths differ");
  if (d < 0) throw ValidationError("bandwidth must be nonnegative");
  check_sorted(xs);
  check_sorted(ys);
  std::vector<double> rem_a(a.begin(), a.end()), rem_b(b.begin(), b.end());
  sweep_free_moves(xs, rem_a, ys, rem_b, d, [](std::size_t, std::size_t, double) {});
  return residual_cost(rem_a, rem_b);
}

double ot_cost(const PricePMF& a, const PricePMF& b, Bandwidth d) {
  return ot_cost(a.support(), a.mass(), b.support(), b.mass(), d.value());
}

TransportPlan solve_ot(const PricePMF& a, const PricePMF& b, Bandwidth d) {
  TransportPlan plan;
  plan.d = d;
  plan.source_support.assign(a.support().begin(), a.support().end());
  plan.target_support.assign(b.support().begin(), b.support().end());

  std::vector<double> rem_a(a.mass().begin(), a.mass().end());
  std::vector<double> rem_b(b.mass().begin(), b.mass().end());
  sweep_free_moves(a.support(), rem_a, b.support(), rem_b, d.value(),
                   [&](std::size_t i, std::size_t j, double t) {
                     plan.entries.push_back({i, j, t});
                   });

  // Whatever is left has to move farther than d; pair it in order.
  std::size_t i = 0, j = 0;
  while (i < rem_a.size() && j < rem_b.size()) {
    if (rem_a[i] <= 0.0) {
      ++i;
      continue;
    }
    if (rem_b[j] <= 0.0) {
      ++j;
      continue;
    }
    const double t = std::min(rem_a[i], rem_b[j]);
    plan.entries.push_back({i, j, t});
    rem_a[i] -= t;
    rem_b[j] -= t;
  }

  double cost = 0.0;
  for (const auto& e : plan.entries)
    if (std::llabs(plan.source_support[e.source] - plan.target_support[e.target]) >
        d.value())
      cost += e.mass;
  plan.cost = std::clamp(cost, 0.0, 1.0);
  return plan;
}

TransportPlan solve_ot_regularized(const PricePMF& a, const PricePMF& b, Bandwidth d,
                                   double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ValidationError("lambda must be finite and nonnegative");
  if (lambda == 0.0) return solve_ot(a, b, d);

  const auto xs = a.support();
  const auto ys = b.support();
  const std::int64_t lo = std::min(xs.front(), ys.front());
  const std::int64_t hi = std::max(xs.back(), ys.back());
  const double span = hi > lo ? static_cast<double>(hi - lo) : 1.0;
  const double target_cost = ot_cost(a, b, d);

  for (int attempt = 0;; ++attempt) {
    auto entries = detail::solve_transportation(
        a.mass(), b.mass(), [&](std::size_t i, std::size_t j) {
          const auto gap = std::llabs(xs[i] - ys[j]);
          return (gap > d.value() ? 1.0 : 0.0) +
                 lambda * static_cast<double>(gap) / span;
        });
    TransportPlan plan;
    plan.d = d;
    plan.regularization = lambda;
    plan.source_support.assign(xs.begin(), xs.end());
    plan.target_support.assign(ys.begin(), ys.end());
    double cost = 0.0;
    for (const auto& e : entries) {
      plan.entries.push_back({e.source, e.target, e.mass});
      if (std::llabs(xs[e.source] - ys[e.target]) > d.value()) cost += e.mass;
    }
    plan.cost = std::clamp(cost, 0.0, 1.0);
    if (plan.cost <= target_cost + 1e-8 || attempt >= 60) return plan;
    lambda *= 0.5;
  }
}

StrassenCertificate strassen_certificate(const PricePMF& a, const PricePMF& b,
                                         Bandwidth d) {
  const PricePMF both[] = {a, b};
  if (union_support(both).size() > kMaxStrassenSupport)
    throw SizeError("support too large for exhaustive set duality (limit " +
                    std::to_string(kMaxStrassenSupport) + " points)");
  const std::size_t n = a.size();
  const std::size_t m = b.size();

  // reach[i]: bitmask of target points within d of source point i.
  std::vector<std::uint32_t> reach(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (std::llabs(a.support()[i] - b.support()[j]) <= d.value())
        reach[i] |= (1u << j);

  StrassenCertificate best;
  std::uint32_t best_mask = 0;
  const std::uint64_t subsets = std::uint64_t{1} << n;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    double in_a = 0.0;
    std::uint32_t covered = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) {
        in_a += a.mass()[i];
        covered |= reach[i];
      }
    double in_b = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (covered >> j & 1u) in_b += b.mass()[j];
    const double value = in_a - in_b;
    if (value > best.value) {
      best.value = value;
      best_mask = static_cast<std::uint32_t>(mask);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (best_mask >> i & 1u) best.source_set.push_back(i);
  return best;
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << "i,j,x_i,x_j,mass\n";
  for (const auto& e : plan.entries) {
    out << e.source << ',' << e.target << ',' << plan.source_support[e.source] << ','
        << plan.target_support[e.target] << ',' << format_number(e.mass) << '\n';
  }
}

}  // namespace diftrans
