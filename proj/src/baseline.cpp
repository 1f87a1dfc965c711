#include "diftrans/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diftrans/error.hpp"

namespace diftrans {

namespace {

int cell_index(bool treated, bool post) { return (treated ? 2 : 0) + (post ? 1 : 0); }

}  // namespace

DidResult did_ols(std::span<const DidObservation> obs) {
  // Cells: 0 control pre, 1 control post, 2 treated pre, 3 treated post.
  std::array<double, 4> weight{}, sum{};
  double total_weight = 0.0;
  for (const auto& o : obs) {
    if (!(o.price > 0.0)) throw DomainError("log price needs positive prices");
    if (!(o.weight >= 0.0)) throw ValidationError("observation weights must be nonnegative");
    const int c = cell_index(o.treated, o.post);
    weight[c] += o.weight;
    sum[c] += o.weight * std::log(o.price);
    total_weight += o.weight;
  }
  for (int c = 0; c < 4; ++c)
    if (!(weight[c] > 0.0))
      throw SingularDesignError("difference-in-differences cell " +
                                std::string(c >= 2 ? "treated " : "control ") +
                                (c % 2 ? "post" : "pre") + " is empty");

  std::array<double, 4> m{};
  for (int c = 0; c < 4; ++c) m[c] = sum[c] / weight[c];

  DidResult r;
  r.alpha0 = m[0];
  r.alpha1 = m[2] - m[0];
  r.alpha2 = m[1] - m[0];
  r.alpha3 = (m[3] - m[2]) - (m[1] - m[0]);

  const double grand = (sum[0] + sum[1] + sum[2] + sum[3]) / total_weight;
  double ssr = 0.0, sst = 0.0;
  for (const auto& o : obs) {
    const double y = std::log(o.price);
    const double e = y - m[cell_index(o.treated, o.post)];
    ssr += o.weight * e * e;
    sst += o.weight * (y - grand) * (y - grand);
  }
  r.n_obs = static_cast<std::int64_t>(std::llround(total_weight));
  r.r2 = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 1.0;

  const double dof = total_weight - 4.0;
  const double sigma2 = dof > 0.0 ? ssr / dof : std::numeric_limits<double>::quiet_NaN();
  const double i0 = 1.0 / weight[0], i1 = 1.0 / weight[1];
  const double i2 = 1.0 / weight[2], i3 = 1.0 / weight[3];
  r.se = {std::sqrt(sigma2 * i0), std::sqrt(sigma2 * (i0 + i2)), std::sqrt(sigma2 * (i0 + i1)),
          std::sqrt(sigma2 * (i0 + i1 + i2 + i3))};
  return r;
}

std::vector<DidObservation> did_observations(std::span<const SalesRecord> records,
                                             const std::string& treated_city,
                                             const std::string& control_city,
                                             const PeriodFilter& pre, const PeriodFilter& post,
                                             DidWeighting weighting) {
  if (treated_city == control_city)
    throw ValidationError("treated and control cities must differ");
  std::vector<DidObservation> out;
  for (const auto& rec : records) {
    if (rec.quantity <= 0) continue;
    const bool treated = rec.city == treated_city;
    if (!treated && rec.city != control_city) continue;
    const bool in_pre = pre.contains(rec.period());
    const bool in_post = post.contains(rec.period());
    if (in_pre == in_post) continue;
    out.push_back({treated, in_post, static_cast<double>(rec.price),
                   weighting == DidWeighting::kUnits ? static_cast<double>(rec.quantity) : 1.0});
  }
  return out;
}

}  // namespace diftrans
