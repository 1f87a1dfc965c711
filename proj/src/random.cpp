#include "diftrans/random.hpp"

#include <algorithm>
#include <unordered_set>

#include "diftrans/error.hpp"

namespace diftrans {

std::vector<std::int64_t> sample_multinomial(Rng& rng, std::span<const double> p,
                                             std::int64_t n) {
  std::vector<std::int64_t> out(p.size(), 0);
  double left_mass = 1.0;
  std::int64_t left = n;
  for (std::size_t k = 0; k < p.size() && left > 0; ++k) {
    if (p[k] <= 0.0) continue;
    if (k + 1 == p.size() || p[k] >= left_mass) {
      out[k] = left;
      left = 0;
      break;
    }
    std::binomial_distribution<std::int64_t> bin(left, std::clamp(p[k] / left_mass, 0.0, 1.0));
    out[k] = bin(rng);
    left -= out[k];
    left_mass -= p[k];
  }
  if (left > 0) {
    // Rounding left mass on the table; give it to the last positive cell.
    for (std::size_t k = p.size(); k-- > 0;)
      if (p[k] > 0.0) {
        out[k] += left;
        break;
      }
  }
  return out;
}

std::vector<std::int64_t> sample_without_replacement(Rng& rng,
                                                     std::span<const std::int64_t> counts,
                                                     std::int64_t draws) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (draws < 0 || draws > total)
    throw ConfigError("cannot draw " + std::to_string(draws) + " units from " +
                      std::to_string(total));

  // Floyd's algorithm picks k distinct unit indices; when k is more than half
  // the population, pick the complement instead.
  const bool complement = draws > total / 2;
  const std::int64_t k = complement ? total - draws : draws;
  std::unordered_set<std::int64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2);
  for (std::int64_t j = total - k; j < total; ++j) {
    std::uniform_int_distribution<std::int64_t> pick(0, j);
    const std::int64_t t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::int64_t> idx(chosen.begin(), chosen.end());
  std::sort(idx.begin(), idx.end());

  std::vector<std::int64_t> out(counts.size(), 0);
  std::size_t cell = 0;
  std::int64_t upper = counts.empty() ? 0 : counts[0];
  for (auto u : idx) {
    while (u >= upper) upper += counts[++cell];
    ++out[cell];
  }
  if (complement)
    for (std::size_t c = 0; c < counts.size(); ++c) out[c] = counts[c] - out[c];
  return out;
}

}  // namespace diftrans
