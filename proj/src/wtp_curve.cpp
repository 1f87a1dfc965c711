#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include "csv_util.hpp"
#include "diftrans/equilibrium.hpp"
#include "diftrans/error.hpp"

namespace diftrans {

WtpCurve WtpCurve::from_knots(std::vector<Knot> knots, Strictify mode) {
  if (knots.size() < 2) throw ValidationError("willingness-to-pay curve needs two knots");
  for (const auto& k : knots)
    if (!std::isfinite(k.n) || !std::isfinite(k.v) || k.v < 0.0 || k.n < 0.0)
      throw ValidationError("willingness-to-pay knots must be finite and nonnegative");
  if (knots.front().n != 0.0) throw ValidationError("first knot must be at n = 0");
  if (knots.back().v != 0.0) throw ValidationError("last knot must have v = 0");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i].n > knots[i - 1].n))
      throw ValidationError("knot volumes must be strictly ascending");

  const double eps = 1e-6 * knots.front().v;
  for (std::size_t i = knots.size() - 1; i-- > 0;) {
    if (knots[i].v > knots[i + 1].v) continue;
    if (knots[i].v < knots[i + 1].v)
      throw ValidationError("willingness to pay must decrease in n");
    if (mode == Strictify::kReject || eps <= 0.0)
      throw ValidationError("willingness to pay is flat between n = " +
                            std::to_string(knots[i].n) + " and n = " +
                            std::to_string(knots[i + 1].n));
    knots[i].v = knots[i + 1].v + eps;
  }
  // Raising ties can push an earlier knot above its predecessor only when the
  // curve was not decreasing there to begin with, which was rejected above.
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i].v < knots[i - 1].v))
      throw ValidationError("willingness to pay must be strictly decreasing");
  return WtpCurve(std::move(knots));
}

WtpCurve WtpCurve::load_csv(const std::filesystem::path& path, Strictify mode) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_csv(in, mode);
}

WtpCurve WtpCurve::load_csv(std::istream& in, Strictify mode) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("willingness-to-pay CSV is empty");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || detail::trim(header[0]) != "n" || detail::trim(header[1]) != "v")
    throw SchemaError("willingness-to-pay CSV must start with header n,v");
  std::vector<Knot> knots;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    const auto n = f.size() >= 2 ? detail::parse_double(f[0]) : std::nullopt;
    const auto v = f.size() >= 2 ? detail::parse_double(f[1]) : std::nullopt;
    if (!n || !v) throw ParseError("non-numeric knot, row " + std::to_string(row));
    knots.push_back({*n, *v});
  }
  return from_knots(std::move(knots), mode);
}

WtpCurve WtpCurve::uniform(double v_max) {
  if (!(v_max > 0.0)) throw ValidationError("v_max must be positive");
  return WtpCurve({{0.0, v_max}, {1.0, 0.0}});
}

double WtpCurve::value_at(double n) const {
  if (n <= 0.0) return knots_.front().v;
  if (n >= n_max()) return 0.0;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), n,
                                   [](double x, const Knot& k) { return x < k.n; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (n - lo.n) / (hi.n - lo.n);
  return lo.v + w * (hi.v - lo.v);
}

double WtpCurve::cdf(double v) const {
  if (v <= 0.0) return 0.0;
  if (v >= v_max()) return 1.0;
  // Knots have decreasing v; find the first knot with value <= v.
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), v,
                                   [](const Knot& k, double x) { return k.v > x; });
  const auto& below = *it;
  const auto& above = *(it - 1);
  const double w = (above.v - v) / (above.v - below.v);
  const double n = above.n + w * (below.n - above.n);
  return 1.0 - n / n_max();
}

double WtpCurve::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  return value_at((1.0 - u) * n_max());
}

double WtpCurve::density(double v) const {
  if (v <= 0.0 || v >= v_max()) return 0.0;
  // Segment [below.v, above.v) containing v.
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), v,
                                   [](double x, const Knot& k) { return x >= k.v; });
  const auto& below = *it;
  const auto& above = *(it - 1);
  return (below.n - above.n) / ((above.v - below.v) * n_max());
}

}  // namespace diftrans
