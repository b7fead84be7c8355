#pragma once

// Hankel blocks [M_gamma]^n_k of a finite moment prefix, k-positivity verdicts,
// determinant tables by Desnanot-Jacobi condensation, and the propagation check
// for vanishing block determinants.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hankelshift/numkit.hpp"

namespace hankelshift {

/// Finite prefix gamma_0..gamma_N with gamma_0 > 0 and gamma_n >= 0.
template <typename T>
class MomentSequence {
 public:
  /// Throws InputError when empty, gamma_0 <= 0, or any gamma_n < 0.
  explicit MomentSequence(std::vector<T> values);

  std::size_t horizon() const noexcept { return values_.size() - 1; }
  std::size_t size() const noexcept { return values_.size(); }
  const T& operator[](std::size_t n) const { return values_[n]; }
  std::span<const T> values() const noexcept { return values_; }

  bool strictly_positive() const;
  /// Max |gamma_n| as a double.
  double sup_norm() const;

  bool operator==(const MomentSequence& other) const = default;

 private:
  std::vector<T> values_;
};

/// Anchor n and size parameter k of the (k+1)x(k+1) block [M_gamma]^n_k.
struct BlockIndex {
  std::size_t n = 0;
  std::size_t k = 0;

  /// The largest moment index the block touches.
  std::size_t last_index() const noexcept { return n + 2 * k; }
  bool feasible(std::size_t horizon) const noexcept { return last_index() <= horizon; }
  bool operator==(const BlockIndex&) const = default;
};

template <typename T>
struct DetTable {
  std::size_t k = 0;
  std::vector<T> dets;         // indexed by anchor n
  std::vector<Method> method;  // condensation or direct, per anchor
};

template <typename T>
struct PositivityVerdict {
  std::size_t k = 0;
  bool holds = false;
  std::size_t horizon = 0;  // positivity is certified only for anchors n <= horizon - 2k
  std::optional<BlockIndex> first_failure;
  std::optional<Matrix<T>> witness;
  std::vector<BlockIndex> marginal;  // float mode: blocks decided within the tolerance band
};

template <typename T>
struct PropagationReport {
  std::size_t k = 0;      // positivity order assumed
  std::size_t order = 0;  // determinant order inspected (k - 1)
  DetTable<T> table;
  std::optional<std::size_t> first_zero;  // smallest anchor with vanishing determinant
  bool vanishing_found = false;
  /// Every anchor 1 <= n <= N - 2(k-1) has vanishing determinant (meaningful when vanishing_found).
  bool conclusion_verified = false;
  /// vanishing_found and the n = 0 determinant is nonzero.
  bool anchor_zero_nonzero = false;
  /// The only nonvanishing anchors n >= 1 sit past the range finite data can force (n > N - 2k + 1).
  bool horizon_edge_only = false;
  std::vector<std::size_t> nonvanishing;  // anchors n >= 1 that violate the conclusion
  bool marginal = false;                  // float mode: some zero test fell inside the tolerance band
  std::vector<std::string> notes;
};

/// Entry (i, j) = gamma_{n+i+j}. Throws HorizonError when n + 2k > N.
template <typename T>
Matrix<T> block(const MomentSequence<T>& gamma, std::size_t n, std::size_t k);

/// Every feasible block [M_gamma]^n_k is positive semi-definite. Throws HorizonError when N < 2k.
template <typename T>
PositivityVerdict<T> is_k_positive(const MomentSequence<T>& gamma, std::size_t k, const ToleranceContext& ctx);

/// gamma_n gamma_{n+2} >= gamma_{n+1}^2 for all n <= N - 2.
template <typename T>
bool log_convexity(const MomentSequence<T>& gamma, const ToleranceContext& ctx);

/// Checks on the data: some gamma_{n0} == 0 implies gamma_n == 0 for all 1 <= n <= N.
template <typename T>
bool zero_moment_collapse(const MomentSequence<T>& gamma, const ToleranceContext& ctx);

/// det([M_gamma]^n_k) for every feasible anchor, by condensation with per-entry direct fallback.
template <typename T>
DetTable<T> det_sequence(const MomentSequence<T>& gamma, std::size_t k, const ToleranceContext& ctx);

/// Zero test for a block determinant: exact equality, or |det| <= zero_eps + rel_eps * Hadamard bound.
template <typename T>
bool det_vanishes(const T& det, const Matrix<T>& blk, const ToleranceContext& ctx);

/// Inspects order-(k-1) determinants of a k-positive sequence for the propagation
/// phenomenon. Throws PreconditionError unless k >= 1 and gamma is k-positive on the horizon.
template <typename T>
PropagationReport<T> propagation_report(const MomentSequence<T>& gamma, std::size_t k, const ToleranceContext& ctx);

}  // namespace hankelshift
