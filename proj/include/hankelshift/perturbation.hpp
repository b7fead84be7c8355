#pragma once

// Rank-one perturbations gamma'_n = t * gamma_n (n > l) of a moment prefix and
// the sets of t for which every perturbed block at anchor n <= l stays
// positive semi-definite.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hankelshift/hankel.hpp"
#include "hankelshift/shifts.hpp"

namespace hankelshift {

/// Perturbed index l >= 1 and scale t >= 0.
template <typename T>
struct PerturbationSpec {
  std::size_t l = 1;
  T t = T(1);
};

struct PerturbationOptions {
  double bisect_eps = 1e-12;       // endpoint bracket width, relative to max(1, |endpoint|)
  double interior_margin = 1e-6;   // float mode: distance from 1 below which interiority is marginal

  /// Throws InputError unless both fields are finite and > 0.
  void validate() const;
};

/// a t^2 + b t + c.
template <typename T>
struct Quadratic {
  T a;
  T b;
  T c;

  T operator()(const T& t) const { return T((a * t + b) * t + c); }
  T discriminant() const { return T(b * b - 4 * a * c); }
};

/// One end of a t-interval: pinned (lo == hi) or bracketed with lo <= endpoint <= hi.
template <typename T>
struct Endpoint {
  T lo;
  T hi;
  Method method = Method::closed_form;
  bool pinned = true;

  static Endpoint exact(T value, Method m) { return {value, value, m, true}; }
  double approx() const;
  T mid() const { return T((lo + hi) / 2); }
};

template <typename T>
struct BlockInterval {
  std::size_t n = 0;
  Endpoint<T> lower;
  std::optional<Endpoint<T>> upper;  // nullopt: no upper bound from this block
  bool t_independent = false;        // n + 2k <= l: the perturbation does not reach the block
  bool degenerate = false;           // closed form unavailable; bisection used
  bool at_cap = false;               // right end reached the I1 bound used as search cap
};

template <typename T>
struct IntervalReport {
  std::size_t k = 0;
  std::size_t l = 0;
  std::vector<BlockInterval<T>> per_block;
  Endpoint<T> lower;
  Endpoint<T> upper;
  std::size_t lower_block = 0;  // anchor that attains the lower end
  std::size_t upper_block = 0;  // anchor that attains the upper end
  bool contains_one = false;
  bool one_interior = false;
  bool marginal = false;  // float mode: 1 sits within interior_margin of an endpoint
  std::vector<std::string> notes;
};

template <typename T>
struct DiscriminantDiagnostic {
  T left;   // min(gamma_{l-1}^2 gamma_{l+1} gamma_{l+3}, gamma_{l-2} gamma_l gamma_{l+2}^2)
  T right;  // (2 gamma_l gamma_{l+1} - gamma_{l-1} gamma_{l+2})^2
  bool holds = false;
};

struct InteriorVerdict {
  bool interior = false;
  bool pd_all = false;
  std::optional<std::size_t> failing_block;  // first n <= l whose block is not positive definite
  bool agree = false;
  bool marginal = false;
  std::vector<std::string> notes;
};

/// gamma'_n = gamma_n for n <= l, t gamma_n beyond. Throws PreconditionError when l > N or l == 0.
template <typename T>
MomentSequence<T> perturb_moments(const MomentSequence<T>& gamma, const PerturbationSpec<T>& spec);

/// alpha'^2_l = t alpha^2_l. Throws PreconditionError when l >= N, l == 0 or t <= 0.
template <typename T>
WeightSequence<T> perturb_weights(const WeightSequence<T>& alpha, const PerturbationSpec<T>& spec);

/// Block entries gamma_{n+i+j} with n+i+j <= l, zero otherwise.
/// Throws PreconditionError when n > l, HorizonError when n + 2k > N.
template <typename T>
Matrix<T> truncated_block(const MomentSequence<T>& gamma, std::size_t n, std::size_t k, std::size_t l);

/// [gamma_l^2 / (gamma_{l-1} gamma_{l+1}), gamma_l gamma_{l+2} / gamma_{l+1}^2].
/// Throws PreconditionError unless l >= 1 and gamma > 0; HorizonError when l + 2 > N.
template <typename T>
Interval<T> interval_I1(const MomentSequence<T>& gamma, std::size_t l);

/// Determinant quadratic of the perturbed block at anchor l-2 (k = 2). Needs l >= 2, l + 2 <= N.
template <typename T>
Quadratic<T> poly_P(const MomentSequence<T>& gamma, std::size_t l);

/// Determinant quadratic of the perturbed block at anchor l-1 (k = 2), divided by t. Needs l >= 1, l + 3 <= N.
template <typename T>
Quadratic<T> poly_Q(const MomentSequence<T>& gamma, std::size_t l);

/// Upper end of the feasible t for the perturbed block at anchor l (k = 2):
/// -gamma_l det[[g_{l+2}, g_{l+3}], [g_{l+3}, g_{l+4}]] / det of the bordered 3x3 with 0 corner.
/// nullopt when the denominator vanishes. Throws HorizonError when l + 4 > N.
template <typename T>
std::optional<T> matrix4_bound(const MomentSequence<T>& gamma, std::size_t l);

/// I^2 from per-block closed forms (anchors l-3..l), degenerate blocks by bisection.
/// Throws PreconditionError unless l >= 1, gamma > 0 and gamma is 2-positive; HorizonError when l + 4 > N.
template <typename T>
IntervalReport<T> interval_I2(const MomentSequence<T>& gamma, std::size_t l, const ToleranceContext& ctx,
                              const PerturbationOptions& opts = {});

/// I^k by bisection on the PSD predicate for every anchor n <= l.
/// Throws PreconditionError unless l >= 1, k >= 1, gamma > 0 and gamma is k-positive; HorizonError when l + 2k > N.
template <typename T>
IntervalReport<T> interval_Ik(const MomentSequence<T>& gamma, std::size_t l, std::size_t k,
                              const ToleranceContext& ctx, const PerturbationOptions& opts = {});

/// interval_Ik for the moments of a weight sequence, warning when t = 0 is admissible.
template <typename T>
IntervalReport<T> interval_Ik_for_weights(const WeightSequence<T>& alpha, std::size_t l, std::size_t k,
                                          const ToleranceContext& ctx, const PerturbationOptions& opts = {});

/// Reported alongside I^2; never asserted.
template <typename T>
std::optional<DiscriminantDiagnostic<T>> discriminant_diagnostic(const MomentSequence<T>& gamma, std::size_t l);

/// Positive definiteness of every block n <= l against 1 being interior to I^k.
template <typename T>
InteriorVerdict is_interior(const MomentSequence<T>& gamma, std::size_t l, std::size_t k,
                            const ToleranceContext& ctx, const PerturbationOptions& opts = {});

/// det(t B + (1-t) H) == t^{k+1} det B + (1-t) t^k gamma_l Cof(B) at anchor l,
/// Cof the (0,0) cofactor. Throws HorizonError when l + 2k > N.
template <typename T>
bool cofactor_identity_check(const MomentSequence<T>& gamma, std::size_t l, std::size_t k, const T& t,
                             const ToleranceContext& ctx);

}  // namespace hankelshift
