#pragma once

// Scalar backends and dense matrix primitives shared by every other module.
//
// All algorithms are templates over the scalar type. Two instantiations are
// provided: `Rational` (GMP rationals, lossless) and `double` (compared against
// zero through a ToleranceContext). Exact mode never consults the tolerances.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "hankelshift/errors.hpp"

namespace hankelshift {

using Rational = mpq_class;

template <typename T>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static constexpr std::string_view name = "exact";
  static double to_double(const Rational& x) { return x.get_d(); }
  static Rational from_double(double x) { return Rational(x); }
  static Rational abs(const Rational& x) { return Rational(::abs(x)); }
};

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static constexpr std::string_view name = "float";
  static double to_double(double x) { return x; }
  static double from_double(double x) { return x; }
  static double abs(double x) { return std::fabs(x); }
};

template <typename T>
inline constexpr bool is_exact_v = ScalarTraits<T>::exact;

template <typename T>
double to_double(const T& x) {
  return ScalarTraits<T>::to_double(x);
}

/// Renders a scalar: "p/q" for rationals, shortest round-trip text for doubles.
std::string to_string(const Rational& x);
std::string to_string(double x);

/// Parses "[+-]digits[/digits]". Throws InputError on malformed text or a zero denominator.
Rational parse_rational(std::string_view text);

/// Tolerances for float mode. Ignored by the exact instantiation.
struct ToleranceContext {
  double zero_eps = 1e-12;
  double rel_eps = 1e-10;
  double psd_floor = 1e-10;

  /// Throws InputError unless every field is finite and > 0.
  void validate() const;
};

/// Relative width of the band around a float decision threshold inside which
/// a verdict is reported as marginal (decided, but close to singular).
inline constexpr double kMarginFactor = 100.0;

/// A yes/no answer plus whether float rounding could have flipped it.
struct Decision {
  bool holds = false;
  bool marginal = false;
};

/// How a reported number was obtained.
enum class Method { closed_form, quadratic_root, bisection, direct, condensation };

std::string_view to_string(Method m);

/// `x` is zero under the float policy |x| <= zero_eps + rel_eps * scale; exact equality otherwise.
template <typename T>
bool is_zero(const T& x, const ToleranceContext& ctx, double scale);

/// is_zero plus a marginal flag: in float mode the value sits inside the band
/// (kMarginFactor times the threshold) yet above the level plain rounding explains.
template <typename T>
Decision zero_decision(const T& x, const ToleranceContext& ctx, double scale);

/// Sign of `x` with the same zero band as is_zero.
template <typename T>
int sign_of(const T& x, const ToleranceContext& ctx, double scale);

/// Dense square matrix, row-major.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t order) : order_(order), data_(order * order, T(0)) {}
  Matrix(std::initializer_list<std::initializer_list<T>> rows);

  static Matrix identity(std::size_t order);

  std::size_t order() const noexcept { return order_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * order_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * order_ + j]; }

  bool operator==(const Matrix& other) const = default;

  /// The matrix with row `row` and column `col` removed.
  Matrix without(std::size_t row, std::size_t col) const;
  /// Leading principal submatrix of the given order.
  Matrix leading(std::size_t m) const;

  /// Largest absolute entry, as a double (0 for the empty matrix).
  double max_abs() const;
  /// Product of Euclidean row norms, an upper bound on |det|.
  double hadamard_bound() const;

  bool is_symmetric(const ToleranceContext& ctx) const;

 private:
  std::size_t order_ = 0;
  std::vector<T> data_;
};

/// Closed interval [lo, hi] with lo <= hi. Emptiness is expressed as std::nullopt.
template <typename T>
class Interval {
 public:
  Interval(T lo, T hi);

  const T& lo() const noexcept { return lo_; }
  const T& hi() const noexcept { return hi_; }
  bool contains(const T& x) const { return lo_ <= x && x <= hi_; }
  T width() const { return T(hi_ - lo_); }

  bool operator==(const Interval& other) const = default;

  static std::optional<Interval> intersect(const Interval& a, const Interval& b);

 private:
  T lo_;
  T hi_;
};

/// Determinant by single-step fraction-free (Bareiss) elimination with row pivoting.
/// Order 0 yields 1.
template <typename T>
T det_bareiss(const Matrix<T>& m);

/// Coefficients (1, c_1, ..., c_m) of det(lambda*I + M) by the Berkowitz algorithm (division-free).
template <typename T>
std::vector<T> char_poly(const Matrix<T>& m);

/// Positive semi-definiteness. Throws PreconditionError for non-symmetric input.
template <typename T>
Decision psd_decision(const Matrix<T>& m, const ToleranceContext& ctx);

/// Positive definiteness. Throws PreconditionError for non-symmetric input.
template <typename T>
Decision pd_decision(const Matrix<T>& m, const ToleranceContext& ctx);

template <typename T>
bool is_psd(const Matrix<T>& m, const ToleranceContext& ctx) {
  return psd_decision(m, ctx).holds;
}

template <typename T>
bool is_pd(const Matrix<T>& m, const ToleranceContext& ctx) {
  return pd_decision(m, ctx).holds;
}

/// Smallest eigenvalue of a symmetric matrix, computed in double precision.
double min_eigenvalue(const Matrix<double>& m);

/// A real root, either pinned (lo == hi, exact) or enclosed in [lo, hi] with a
/// certified sign change of the polynomial at the ends.
template <typename T>
struct Root {
  T lo;
  T hi;
  bool exact = true;
  int multiplicity = 1;

  double approx() const;
};

template <typename T>
struct QuadraticSolution {
  std::vector<Root<T>> roots;  // ascending; a double root appears once with multiplicity 2
  T discriminant;
};

/// Real roots of a*t^2 + b*t + c. Throws PreconditionError when a == 0.
template <typename T>
QuadraticSolution<T> solve_quadratic(const T& a, const T& b, const T& c);

/// Solves sum_j rho_j * nodes_j^i = rhs_i (i = 0..m-1) by the Bjorck-Pereyra scheme.
/// Throws PreconditionError on repeated nodes or a size mismatch.
template <typename T>
std::vector<T> solve_vandermonde(const std::vector<T>& nodes, const std::vector<T>& rhs);

/// Evaluates a polynomial given by coefficients in ascending powers.
template <typename T>
T eval_poly(const std::vector<T>& ascending, const T& x);

}  // namespace hankelshift
