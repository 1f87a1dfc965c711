#include "diftrans/composition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "diftrans/error.hpp"

namespace diftrans {

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) return {};
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

namespace {

struct Problem {
  std::vector<std::int64_t> support;
  std::vector<std::vector<double>> p;  // p[t][i]
  std::vector<double> phi_f;
  std::int64_t units = 0;
};

Problem setup(const CompositionInputs& in) {
  if (in.monthly_pmfs.empty()) throw ValidationError("composition fit needs monthly PMFs");
  if (!(in.rho > 0.0 && in.rho <= 1.0)) throw ValidationError("rho must lie in (0, 1]");
  for (const auto& theta : {in.theta_pre, in.theta_post})
    if (theta[0] < 0.0 || theta[1] < 0.0 || std::abs(theta[0] + theta[1] - 1.0) > 1e-12)
      throw ValidationError("theta weights must be nonnegative and sum to one");

  std::map<YearMonth, std::int64_t> licenses;
  for (const auto& [ym, l] : in.licenses) {
    if (l < 0) throw ValidationError("negative license count for " + ym.to_string());
    licenses[ym] = l;
  }

  Problem pr;
  std::vector<PricePMF> pmfs;
  for (const auto& [ym, pmf] : in.monthly_pmfs) {
    const auto it = licenses.find(ym);
    if (it == licenses.end()) throw ValidationError("no license count for " + ym.to_string());
    const double phi = in.rho * static_cast<double>(it->second) / static_cast<double>(pmf.n());
    if (phi < 0.0 || phi > 1.0)
      throw ValidationError("first-time buyer share for " + ym.to_string() +
                            " falls outside [0, 1]");
    pr.phi_f.push_back(phi);
    pr.units += pmf.n();
    pmfs.push_back(pmf);
  }
  pr.support = union_support(pmfs);
  for (const auto& pmf : pmfs) pr.p.push_back(masses_on(pmf, pr.support));
  return pr;
}

double objective(const Problem& pr, std::span<const double> f, std::span<const double> r) {
  double ss = 0.0;
  for (std::size_t t = 0; t < pr.p.size(); ++t) {
    const double wf = pr.phi_f[t];
    const double wr = 1.0 - wf;
    for (std::size_t i = 0; i < pr.support.size(); ++i) {
      const double e = wf * f[i] + wr * r[i] - pr.p[t][i];
      ss += e * e;
    }
  }
  return ss;
}

std::vector<double> average_pmf(const Problem& pr) {
  std::vector<double> avg(pr.support.size(), 0.0);
  for (const auto& row : pr.p)
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += row[i];
  for (auto& v : avg) v /= static_cast<double>(pr.p.size());
  return avg;
}

PricePMF to_pmf(const std::vector<std::int64_t>& support, std::vector<double> mass,
                std::int64_t n) {
  // Projection output sums to one up to rounding; renormalize the last bits.
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (auto& m : mass) m /= total;
  return PricePMF::from_masses(support, std::move(mass), n);
}

}  // namespace

double composition_objective(const CompositionInputs& inputs, std::span<const double> f,
                             std::span<const double> r) {
  const auto pr = setup(inputs);
  if (f.size() != pr.support.size() || r.size() != pr.support.size())
    throw ValidationError("f and r must be laid out on the union support");
  return objective(pr, f, r);
}

CompositionEstimate composition_fit(const CompositionInputs& inputs,
                                    std::optional<std::array<std::vector<double>, 2>> start) {
  const auto pr = setup(inputs);
  const std::size_t k = pr.support.size();

  const bool f_identified =
      std::any_of(pr.phi_f.begin(), pr.phi_f.end(), [](double w) { return w != 0.0; });
  const bool r_identified =
      std::any_of(pr.phi_f.begin(), pr.phi_f.end(), [](double w) { return w != 1.0; });
  const bool varies = std::any_of(pr.phi_f.begin(), pr.phi_f.end(),
                                  [&](double w) { return w != pr.phi_f.front(); });
  if (!varies && f_identified && r_identified)
    throw IdentificationError(
        "first-time buyer shares are identical across periods; f and r are not identified");

  // Gram matrix of the (phi_f, phi_r) weights and the linear terms.
  double A = 0.0, B = 0.0, C = 0.0;
  std::vector<double> u(k, 0.0), w(k, 0.0);
  for (std::size_t t = 0; t < pr.p.size(); ++t) {
    const double wf = pr.phi_f[t];
    const double wr = 1.0 - wf;
    A += wf * wf;
    B += wf * wr;
    C += wr * wr;
    for (std::size_t i = 0; i < k; ++i) {
      u[i] += wf * pr.p[t][i];
      w[i] += wr * pr.p[t][i];
    }
  }
  const double lmax = 0.5 * (A + C) + std::sqrt(0.25 * (A - C) * (A - C) + B * B);
  const double lipschitz = 2.0 * lmax;

  std::vector<double> f, r;
  if (start) {
    if ((*start)[0].size() != k || (*start)[1].size() != k)
      throw ValidationError("start point must be laid out on the union support");
    f = project_to_simplex((*start)[0]);
    r = project_to_simplex((*start)[1]);
  } else {
    f = average_pmf(pr);
    r = f;
  }

  constexpr int kMaxIterations = 100000;
  constexpr double kTolerance = 1e-9;
  std::vector<double> gf(k), gr(k), tf(k), tr(k);
  // Norm of the projected-gradient mapping with step 1/L at (f, r).
  auto mapping_norm = [&] {
    for (std::size_t i = 0; i < k; ++i) {
      gf[i] = 2.0 * (A * f[i] + B * r[i] - u[i]);
      gr[i] = 2.0 * (B * f[i] + C * r[i] - w[i]);
      tf[i] = f[i] - gf[i] / lipschitz;
      tr[i] = r[i] - gr[i] / lipschitz;
    }
    const auto pf = project_to_simplex(tf);
    const auto pr_ = project_to_simplex(tr);
    double m2 = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      m2 += (pf[i] - f[i]) * (pf[i] - f[i]) + (pr_[i] - r[i]) * (pr_[i] - r[i]);
    return std::sqrt(m2) * lipschitz;
  };

  double step = 1.0 / lipschitz;
  double gnorm = mapping_norm();
  int it = 0;
  for (; it < kMaxIterations && gnorm >= kTolerance; ++it) {
    step = std::min(step * 2.0, 64.0 / lipschitz);
    std::vector<double> nf, nr;
    // For the quadratic objective the sufficient-decrease test reduces to
    // d'Hd <= |d|^2 / (2 step), evaluated without cancellation.
    for (;;) {
      for (std::size_t i = 0; i < k; ++i) {
        tf[i] = f[i] - step * gf[i];
        tr[i] = r[i] - step * gr[i];
      }
      nf = project_to_simplex(tf);
      nr = project_to_simplex(tr);
      double curvature = 0.0, dist2 = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double df = nf[i] - f[i];
        const double dr = nr[i] - r[i];
        curvature += A * df * df + 2.0 * B * df * dr + C * dr * dr;
        dist2 += df * df + dr * dr;
      }
      if (curvature <= dist2 / (2.0 * step) || step <= 1.0 / lipschitz) break;
      step *= 0.5;
    }
    f = std::move(nf);
    r = std::move(nr);
    gnorm = mapping_norm();
  }

  if (!r_identified) r = average_pmf(pr);
  if (!f_identified) f = average_pmf(pr);

  const double ss = objective(pr, f, r);
  return CompositionEstimate{
      .f_hat = to_pmf(pr.support, f, pr.units),
      .r_hat = to_pmf(pr.support, r, pr.units),
      .residual_ss = ss,
      .f_identified = f_identified,
      .r_identified = r_identified,
      .phi_f = pr.phi_f,
      .theta_pre = inputs.theta_pre,
      .theta_post = inputs.theta_post,
      .iterations = it,
      .gradient_mapping_norm = gnorm,
  };
}

CompositionCorrection composition_correction(const CompositionEstimate& est,
                                             std::span<const Bandwidth> grid) {
  std::map<Bandwidth, double> cost;
  for (const auto d : grid) cost[d] = ot_cost(est.f_hat, est.r_hat, d);

  const PricePMF both[] = {est.f_hat, est.r_hat};
  const auto support = union_support(both);
  const auto f = masses_on(est.f_hat, support);
  const auto r = masses_on(est.r_hat, support);
  auto mix = [&](const std::array<double, 2>& theta) {
    std::vector<double> m(support.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = theta[0] * f[i] + theta[1] * r[i];
    return to_pmf(support, std::move(m), est.f_hat.n());
  };
  return CompositionCorrection{
      .cost = std::move(cost),
      .p_pre = mix(est.theta_pre),
      .p_post = mix(est.theta_post),
  };
}

}  // namespace diftrans
