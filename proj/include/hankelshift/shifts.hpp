#pragma once

// Unilateral weighted shifts, handled through their squared weights alpha_n^2 so
// the exact pipeline stays inside the rationals.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hankelshift/hankel.hpp"

namespace hankelshift {

/// Squared weights alpha_0^2..alpha_{N-1}^2, all > 0.
template <typename T>
class WeightSequence {
 public:
  /// Throws InputError when any squared weight is <= 0.
  static WeightSequence from_squared(std::vector<T> squared);
  /// Squares the given weights; throws InputError when any weight is <= 0.
  static WeightSequence from_weights(const std::vector<T>& weights);

  std::size_t size() const noexcept { return squared_.size(); }
  const T& squared(std::size_t n) const { return squared_[n]; }
  const std::vector<T>& squared() const noexcept { return squared_; }
  /// alpha_n as a double (display only).
  double weight(std::size_t n) const;
  /// max_n alpha_n^2 over the prefix.
  T max_squared() const;

  bool operator==(const WeightSequence& other) const = default;

 private:
  explicit WeightSequence(std::vector<T> squared) : squared_(std::move(squared)) {}
  std::vector<T> squared_;
};

template <typename T>
struct HyponormalityVerdict {
  std::size_t k = 0;
  bool holds = false;
  std::size_t horizon = 0;
  std::optional<BlockIndex> first_failure;
  std::vector<BlockIndex> marginal;
};

struct FlatnessReport {
  bool flat_pair_found = false;
  std::optional<std::size_t> first_pair;  // smallest n0 with alpha_{n0} == alpha_{n0+1}
  bool propagation_verified = false;      // alpha_n == alpha_{n0} for every 1 <= n < N
  bool alpha0_exception = false;          // alpha_0 differs from the flat tail
  bool horizon_edge_only = false;         // only the last weight breaks the flat tail
  std::vector<std::size_t> mismatches;
  std::vector<std::string> notes;
};

template <typename T>
struct ShiftPropagationReport {
  std::size_t k = 0;
  std::size_t p = 0;
  PropagationReport<T> propagation;
  /// Highest order L such that every order in [p, L] is positive on the horizon.
  std::size_t positive_through = 0;
  /// positive_through reached the largest order the horizon supports.
  bool all_orders_positive = false;
  std::vector<std::string> notes;
};

/// gamma_0 = 1, gamma_{n+1} = alpha_n^2 gamma_n.
template <typename T>
MomentSequence<T> weights_to_moments(const WeightSequence<T>& alpha);

/// alpha_n^2 = gamma_{n+1} / gamma_n. Throws PreconditionError on a zero moment.
template <typename T>
WeightSequence<T> moments_to_weights(const MomentSequence<T>& gamma);

/// alpha is nondecreasing on the prefix.
template <typename T>
bool is_hyponormal(const WeightSequence<T>& alpha, const ToleranceContext& ctx);

/// k-positivity of the moment Hankel matrix. Throws HorizonError when N < 2k.
template <typename T>
HyponormalityVerdict<T> is_k_hyponormal(const WeightSequence<T>& alpha, std::size_t k, const ToleranceContext& ctx);

/// Equal adjacent weights and their propagation along the tail.
/// Throws PreconditionError unless k >= 2 and alpha is k-hyponormal on the horizon.
template <typename T>
FlatnessReport flatness_check(const WeightSequence<T>& alpha, std::size_t k, const ToleranceContext& ctx);

/// Propagation of a vanishing order-p determinant under k-hyponormality, p < k.
/// Throws PreconditionError when p >= k or alpha is not k-hyponormal.
template <typename T>
ShiftPropagationReport<T> propagation_for_shift(const WeightSequence<T>& alpha, std::size_t k, std::size_t p,
                                                const ToleranceContext& ctx);

}  // namespace hankelshift
