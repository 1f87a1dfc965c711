#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace diftrans {

/// Calendar month, ordered chronologically.
struct YearMonth {
  int year = 0;
  int month = 1;

  friend constexpr auto operator<=>(const YearMonth&, const YearMonth&) = default;

  /// Parses "YYYY-MM".
  static YearMonth parse(const std::string& text);
  std::string to_string() const;
};

/// One city-month-price cell of the registration data.
struct SalesRecord {
  std::string city;
  int year = 0;
  int month = 1;
  std::int64_t price = 0;
  std::int64_t quantity = 0;

  YearMonth period() const { return {year, month}; }
};

/// Set of months selected by inclusive ranges minus individual exclusions.
/// An empty include list selects every month.
class PeriodFilter {
 public:
  PeriodFilter() = default;
  PeriodFilter(std::vector<std::pair<YearMonth, YearMonth>> include,
               std::vector<YearMonth> exclude);

  /// `ranges` is a comma-separated list of "YYYY-MM:YYYY-MM" or "YYYY-MM";
  /// `excludes` a comma-separated list of "YYYY-MM". Either may be empty.
  static PeriodFilter parse(const std::string& ranges,
                            const std::string& excludes = "");

  bool contains(YearMonth ym) const;

  const std::vector<std::pair<YearMonth, YearMonth>>& include() const {
    return include_;
  }
  const std::vector<YearMonth>& exclude() const { return exclude_; }

  /// Canonical text form, e.g. "2010-01:2010-12 excl 2010-12".
  std::string describe() const;

 private:
  std::vector<std::pair<YearMonth, YearMonth>> include_;
  std::vector<YearMonth> exclude_;
};

/// Discrete probability mass function over a strictly ascending integer
/// price support, tagged with the number of units it was built from.
///
/// Invariants: support strictly increasing and nonnegative, mass entries
/// nonnegative and summing to one within 1e-12, n >= 1. When built from unit
/// counts, counts() holds them and mass[i] == counts[i] / n.
class PricePMF {
 public:
  static constexpr double kMassTolerance = 1e-12;

  /// Builds from explicit masses; validates every invariant.
  static PricePMF from_masses(std::vector<std::int64_t> support,
                              std::vector<double> mass, std::int64_t n);

  /// Builds from unit counts on a strictly ascending support. Zero counts are
  /// kept as zero-mass support points.
  static PricePMF from_counts(std::vector<std::int64_t> support,
                              std::vector<std::int64_t> counts);

  /// Point mass at `price`.
  static PricePMF point_mass(std::int64_t price, std::int64_t n = 1);

  std::span<const std::int64_t> support() const { return support_; }
  std::span<const double> mass() const { return mass_; }
  std::span<const std::int64_t> counts() const { return counts_; }
  bool has_counts() const { return !counts_.empty(); }
  std::int64_t n() const { return n_; }
  std::size_t size() const { return support_.size(); }

  /// Mass at `price`, zero when it is not a support point.
  double mass_at(std::int64_t price) const;

  friend bool operator==(const PricePMF&, const PricePMF&) = default;

 private:
  PricePMF() = default;

  std::vector<std::int64_t> support_;
  std::vector<double> mass_;
  std::vector<std::int64_t> counts_;
  std::int64_t n_ = 0;
};

/// Sorted union of the supports of `pmfs`.
std::vector<std::int64_t> union_support(std::span<const PricePMF> pmfs);

/// Masses of `pmf` laid out on `support` (which must contain pmf's support).
std::vector<double> masses_on(const PricePMF& pmf,
                              std::span<const std::int64_t> support);

/// Column names used to locate fields in a sales CSV.
struct CsvSchema {
  std::string city = "city";
  std::string year = "year";
  std::string month = "month";
  std::string price = "price";
  std::string quantity = "quantity";
};

std::vector<SalesRecord> ingest_csv(const std::filesystem::path& path,
                                    const CsvSchema& schema = {});
std::vector<SalesRecord> ingest_csv(std::istream& in,
                                    const CsvSchema& schema = {});

/// Aggregates the units of `city` within `filter` into a PMF over the exact
/// observed prices. Throws EmptyDistributionError when no units match.
PricePMF build_pmf(std::span<const SalesRecord> records, const std::string& city,
                   const PeriodFilter& filter = {});

/// One PMF per month of `city` within `filter`, ascending by month. Months
/// with zero units are skipped.
std::vector<std::pair<YearMonth, PricePMF>> build_monthly_pmfs(
    std::span<const SalesRecord> records, const std::string& city,
    const PeriodFilter& filter = {});

}  // namespace diftrans
