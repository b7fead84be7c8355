#pragma once

// Finite atomic measures on [0, inf): their moments, linear recursions among
// the moments, the finite-mass test on Hankel determinants, and recovery of
// atoms and densities from a recursion.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hankelshift/hankel.hpp"
#include "hankelshift/shifts.hpp"

namespace hankelshift {

/// sum_j densities_j * delta_{atoms_j}.
template <typename T>
class AtomicMeasure {
 public:
  /// Throws InputError unless atoms are >= 0 and strictly increasing, densities > 0,
  /// and both lists are nonempty and of equal length.
  AtomicMeasure(std::vector<T> atoms, std::vector<T> densities);

  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<T>& atoms() const noexcept { return atoms_; }
  const std::vector<T>& densities() const noexcept { return densities_; }
  T total_mass() const;

  bool operator==(const AtomicMeasure& other) const = default;

 private:
  std::vector<T> atoms_;
  std::vector<T> densities_;
};

/// gamma_{p+r} = a_{r-1} gamma_{p+r-1} + ... + a_0 gamma_p for every p >= valid_from on the horizon.
template <typename T>
struct Recursion {
  std::size_t order = 0;
  std::vector<T> coeffs;  // a_0..a_{r-1}
  std::size_t valid_from = 0;
  bool marginal = false;  // float mode: residual within the band around the fit threshold
  double residual = 0.0;  // float mode: max abs residual of the fitted system
};

struct FiniteMassVerdict {
  bool finite = false;
  std::optional<BlockIndex> witness;  // first vanishing block in (k, p) order
  bool marginal = false;
  std::vector<std::string> notes;
};

/// A recovered atom: pinned (lo == hi) or certified to lie in [lo, hi].
template <typename T>
struct RecoveredAtom {
  T lo;
  T hi;
  bool pinned = true;

  double approx() const;
};

template <typename T>
struct Recovery {
  std::vector<RecoveredAtom<T>> atoms;
  /// Present when every atom is pinned; densities are then solved and verified in T.
  std::optional<AtomicMeasure<T>> measure;
  /// Densities in double precision, always filled.
  std::vector<double> approx_densities;
  std::vector<std::string> notes;
};

/// gamma_n = sum_j rho_j x_j^n for 0 <= n <= N.
template <typename T>
MomentSequence<T> moments_of(const AtomicMeasure<T>& mu, std::size_t N);

/// Minimal-order recursion valid from index 0, or nullopt if none of order <= max_order fits.
/// Throws HorizonError when N < 2 * max_order.
template <typename T>
std::optional<Recursion<T>> detect_recursion(const MomentSequence<T>& gamma, std::size_t max_order,
                                             const ToleranceContext& ctx);

/// Screens double Hankel positivity (blocks at anchors 0 and 1), then returns the first
/// vanishing block determinant in (k, p) order with k >= 1.
/// Throws PreconditionError when the screen fails.
template <typename T>
FiniteMassVerdict is_finite_mass(const MomentSequence<T>& gamma, const ToleranceContext& ctx);

/// Atoms from the roots of t^r - a_{r-1} t^{r-1} - ... - a_0, densities from the
/// first r moments, verified against every moment on the horizon.
/// Throws PreconditionError for a recursion not valid from 0, for complex, negative or
/// repeated roots, and for nonpositive densities; ConsistencyError when verification fails.
template <typename T>
Recovery<T> recover_atoms(const Recursion<T>& rec, const MomentSequence<T>& gamma, const ToleranceContext& ctx);

/// Moments of mu match the shift moments on the horizon and every atom is <= max alpha_n^2.
template <typename T>
bool verify_berger(const WeightSequence<T>& alpha, const AtomicMeasure<T>& mu, const ToleranceContext& ctx);

}  // namespace hankelshift
