#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "diftrans/pmf.hpp"

namespace diftrans {

/// Transport distance (in RMB) up to which a move is free.
class Bandwidth {
 public:
  constexpr Bandwidth() = default;
  explicit Bandwidth(std::int64_t d);

  constexpr std::int64_t value() const { return d_; }
  Bandwidth doubled() const { return Bandwidth(2 * d_); }

  friend constexpr auto operator<=>(const Bandwidth&, const Bandwidth&) = default;

 private:
  std::int64_t d_ = 0;
};

/// Sparse coupling between a source and a target PMF.
struct TransportPlan {
  struct Entry {
    std::size_t source = 0;
    std::size_t target = 0;
    double mass = 0.0;
  };

  std::vector<Entry> entries;
  std::vector<std::int64_t> source_support;
  std::vector<std::int64_t> target_support;
  /// Sum of mass over entries moved farther than d.
  double cost = 0.0;
  Bandwidth d;
  /// Distance penalty actually used by the regularized solver, per unit of
  /// normalized distance. Zero for the exact indicator solver.
  double regularization = 0.0;

  /// Sum of mass times |x_i - x_j| in RMB.
  double displacement() const;
  /// Largest absolute deviation of the plan's row/column sums from the given
  /// marginals.
  double marginal_violation(const PricePMF& source, const PricePMF& target) const;
};

/// Minimum share of mass that has to move farther than `d` to turn `a` into
/// `b`: the exact optimum of the transport LP with ground cost
/// 1(|x - y| > d). Runs in O(|a| + |b|).
double ot_cost(const PricePMF& a, const PricePMF& b, Bandwidth d);

/// Same, on raw (support, mass) arrays. Supports must be ascending; masses
/// may contain zeros.
double ot_cost(std::span<const std::int64_t> xs, std::span<const double> a,
               std::span<const std::int64_t> ys, std::span<const double> b,
               std::int64_t d);

/// An optimal coupling for ot_cost. Which optimal plan is returned is not part
/// of the contract.
TransportPlan solve_ot(const PricePMF& a, const PricePMF& b, Bandwidth d);

/// Optimal plan for the ground cost 1(|x - y| > d) + lambda * |x - y| / span,
/// where span is the width of the union support. Among plans achieving
/// ot_cost this picks one with small moves. If lambda is past the instance's
/// breakpoint (the indicator part would exceed ot_cost by more than 1e-8) it
/// is halved until it is not; the value used is reported in the plan.
TransportPlan solve_ot_regularized(const PricePMF& a, const PricePMF& b, Bandwidth d,
                                   double lambda = 0.01);

/// Set-duality certificate: the source set A maximizing a(A) - b(A^d), where
/// A^d holds the target points within d of A.
struct StrassenCertificate {
  std::vector<std::size_t> source_set;  // indices into a's support, ascending
  double value = 0.0;
};

/// Exhaustive search over subsets of a's support. Throws SizeError when the
/// union support exceeds kMaxStrassenSupport points.
inline constexpr std::size_t kMaxStrassenSupport = 24;
StrassenCertificate strassen_certificate(const PricePMF& a, const PricePMF& b,
                                         Bandwidth d);

/// Writes `i,j,x_i,x_j,mass` rows.
void write_plan_csv(std::ostream& out, const TransportPlan& plan);

}  // namespace diftrans
