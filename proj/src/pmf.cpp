#include "diftrans/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "csv_util.hpp"
#include "diftrans/error.hpp"

namespace diftrans {

YearMonth YearMonth::parse(const std::string& text) {
  const auto t = detail::trim(text);
  const auto dash = t.find('-');
  if (dash == std::string_view::npos)
    throw ParseError("expected YYYY-MM, got '" + text + "'");
  const auto y = detail::parse_int(t.substr(0, dash));
  const auto m = detail::parse_int(t.substr(dash + 1));
  if (!y || !m) throw ParseError("expected YYYY-MM, got '" + text + "'");
  if (*m < 1 || *m > 12) throw ValidationError("month out of range in '" + text + "'");
  return {static_cast<int>(*y), static_cast<int>(*m)};
}

std::string YearMonth::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

PeriodFilter::PeriodFilter(std::vector<std::pair<YearMonth, YearMonth>> include,
                           std::vector<YearMonth> exclude)
    : include_(std::move(include)), exclude_(std::move(exclude)) {
  for (const auto& [lo, hi] : include_) {
    if (hi < lo)
      throw ValidationError("period range " + lo.to_string() + ":" + hi.to_string() +
                            " is reversed");
  }
  std::sort(exclude_.begin(), exclude_.end());
  exclude_.erase(std::unique(exclude_.begin(), exclude_.end()), exclude_.end());
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto t = detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

}  // namespace

PeriodFilter PeriodFilter::parse(const std::string& ranges, const std::string& excludes) {
  std::vector<std::pair<YearMonth, YearMonth>> include;
  for (const auto& r : split_list(ranges)) {
    const auto colon = r.find(':');
    if (colon == std::string::npos) {
      const auto ym = YearMonth::parse(r);
      include.emplace_back(ym, ym);
    } else {
      include.emplace_back(YearMonth::parse(r.substr(0, colon)),
                           YearMonth::parse(r.substr(colon + 1)));
    }
  }
  std::vector<YearMonth> exclude;
  for (const auto& e : split_list(excludes)) exclude.push_back(YearMonth::parse(e));
  return PeriodFilter(std::move(include), std::move(exclude));
}

bool PeriodFilter::contains(YearMonth ym) const {
  if (std::binary_search(exclude_.begin(), exclude_.end(), ym)) return false;
  if (include_.empty()) return true;
  return std::any_of(include_.begin(), include_.end(), [&](const auto& r) {
    return r.first <= ym && ym <= r.second;
  });
}

std::string PeriodFilter::describe() const {
  std::string out;
  if (include_.empty()) out = "all";
  for (std::size_t i = 0; i < include_.size(); ++i) {
    if (i) out += ',';
    out += include_[i].first.to_string() + ":" + include_[i].second.to_string();
  }
  if (!exclude_.empty()) {
    out += " excl ";
    for (std::size_t i = 0; i < exclude_.size(); ++i) {
      if (i) out += ',';
      out += exclude_[i].to_string();
    }
  }
  return out;
}

PricePMF PricePMF::from_masses(std::vector<std::int64_t> support, std::vector<double> mass,
                               std::int64_t n) {
  if (support.size() != mass.size())
    throw ValidationError("support and mass lengths differ");
  if (support.empty()) throw EmptyDistributionError("PMF has empty support");
  if (n < 1) throw ValidationError("PMF sample size must be positive");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] < 0) throw ValidationError("negative support point");
    if (i > 0 && support[i] <= support[i - 1])
      throw ValidationError("support must be strictly ascending");
    if (!(mass[i] >= 0.0) || !std::isfinite(mass[i]))
      throw ValidationError("mass entries must be finite and nonnegative");
  }
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (std::abs(total - 1.0) > kMassTolerance)
    throw ValidationError("masses must sum to one");
  PricePMF p;
  p.support_ = std::move(support);
  p.mass_ = std::move(mass);
  p.n_ = n;
  return p;
}

PricePMF PricePMF::from_counts(std::vector<std::int64_t> support,
                               std::vector<std::int64_t> counts) {
  if (support.size() != counts.size())
    throw ValidationError("support and count lengths differ");
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw ValidationError("negative count");
    total += c;
  }
  if (total == 0) throw EmptyDistributionError("no units in distribution");
  std::vector<double> mass(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    mass[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  auto p = from_masses(std::move(support), std::move(mass), total);
  p.counts_ = std::move(counts);
  return p;
}

PricePMF PricePMF::point_mass(std::int64_t price, std::int64_t n) {
  return from_counts({price}, {n});
}

double PricePMF::mass_at(std::int64_t price) const {
  const auto it = std::lower_bound(support_.begin(), support_.end(), price);
  if (it == support_.end() || *it != price) return 0.0;
  return mass_[static_cast<std::size_t>(it - support_.begin())];
}

std::vector<std::int64_t> union_support(std::span<const PricePMF> pmfs) {
  std::vector<std::int64_t> all;
  for (const auto& p : pmfs) all.insert(all.end(), p.support().begin(), p.support().end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::vector<double> masses_on(const PricePMF& pmf, std::span<const std::int64_t> support) {
  std::vector<double> out(support.size(), 0.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    while (k < support.size() && support[k] < pmf.support()[i]) ++k;
    if (k == support.size() || support[k] != pmf.support()[i])
      throw ValidationError("target support does not contain the PMF support");
    out[k] = pmf.mass()[i];
  }
  return out;
}

std::vector<SalesRecord> ingest_csv(const std::filesystem::path& path,
                                    const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return ingest_csv(in, schema);
}

std::vector<SalesRecord> ingest_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("CSV has no header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);

  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (detail::trim(header[i]) == name) return i;
    throw SchemaError("missing column '" + name + "'");
  };
  const std::size_t c_city = column(schema.city);
  const std::size_t c_year = column(schema.year);
  const std::size_t c_month = column(schema.month);
  const std::size_t c_price = column(schema.price);
  const std::size_t c_qty = column(schema.quantity);
  const std::size_t needed = std::max({c_city, c_year, c_month, c_price, c_qty}) + 1;

  std::vector<SalesRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    const std::string where = ", row " + std::to_string(row);
    if (f.size() < needed) throw ParseError("too few fields" + where);

    auto integer = [&](std::size_t col, const char* what) {
      const auto v = detail::parse_int(f[col]);
      if (!v) throw ParseError(std::string("non-numeric ") + what + where);
      return *v;
    };
    SalesRecord r;
    r.city = std::string(detail::trim(f[c_city]));
    r.year = static_cast<int>(integer(c_year, "year"));
    const auto month = integer(c_month, "month");
    r.price = integer(c_price, "price");
    r.quantity = integer(c_qty, "quantity");
    if (month < 1 || month > 12) throw ValidationError("month out of range" + where);
    if (r.price < 0) throw ValidationError("negative price" + where);
    if (r.quantity < 0) throw ValidationError("negative quantity" + where);
    r.month = static_cast<int>(month);
    out.push_back(std::move(r));
  }
  return out;
}

PricePMF build_pmf(std::span<const SalesRecord> records, const std::string& city,
                   const PeriodFilter& filter) {
  std::map<std::int64_t, std::int64_t> units;
  for (const auto& r : records) {
    if (r.city != city || r.quantity == 0 || !filter.contains(r.period())) continue;
    units[r.price] += r.quantity;
  }
  if (units.empty())
    throw EmptyDistributionError("no units for city '" + city + "' in " + filter.describe());
  std::vector<std::int64_t> support, counts;
  support.reserve(units.size());
  counts.reserve(units.size());
  for (const auto& [price, q] : units) {
    support.push_back(price);
    counts.push_back(q);
  }
  return PricePMF::from_counts(std::move(support), std::move(counts));
}

std::vector<std::pair<YearMonth, PricePMF>> build_monthly_pmfs(
    std::span<const SalesRecord> records, const std::string& city,
    const PeriodFilter& filter) {
  std::map<YearMonth, std::map<std::int64_t, std::int64_t>> by_month;
  for (const auto& r : records) {
    if (r.city != city || r.quantity == 0 || !filter.contains(r.period())) continue;
    by_month[r.period()][r.price] += r.quantity;
  }
  std::vector<std::pair<YearMonth, PricePMF>> out;
  for (const auto& [ym, units] : by_month) {
    std::vector<std::int64_t> support, counts;
    for (const auto& [price, q] : units) {
      support.push_back(price);
      counts.push_back(q);
    }
    out.emplace_back(ym, PricePMF::from_counts(std::move(support), std::move(counts)));
  }
  return out;
}

}  // namespace diftrans
