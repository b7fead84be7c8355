#include "hankelshift/numkit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

#include <Eigen/Eigenvalues>

namespace hankelshift {

std::string to_string(const Rational& x) { return x.get_str(); }

std::string to_string(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Rational parse_rational(std::string_view text) {
  auto fail = [&](const std::string& why) {
    return InputError("invalid rational \"" + std::string(text) + "\": " + why);
  };
  std::size_t i = 0;
  std::string num;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    if (text[i] == '-') num.push_back('-');
    ++i;
  }
  const std::size_t num_start = i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) num.push_back(text[i++]);
  if (i == num_start) throw fail("expected digits");
  std::string den = "1";
  if (i < text.size() && text[i] == '/') {
    ++i;
    const std::size_t den_start = i;
    den.clear();
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) den.push_back(text[i++]);
    if (i == den_start) throw fail("expected denominator digits");
  }
  if (i != text.size()) throw fail("unexpected character");
  mpz_class n(num, 10);
  mpz_class d(den, 10);
  if (d == 0) throw fail("zero denominator");
  Rational r(n, d);
  r.canonicalize();
  return r;
}

void ToleranceContext::validate() const {
  for (double v : {zero_eps, rel_eps, psd_floor}) {
    if (!std::isfinite(v) || v <= 0.0) throw InputError("tolerances must be finite and > 0");
  }
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::closed_form: return "closed_form";
    case Method::quadratic_root: return "quadratic_root";
    case Method::bisection: return "bisection";
    case Method::direct: return "direct";
    case Method::condensation: return "condensation";
  }
  return "unknown";
}

template <typename T>
bool is_zero(const T& x, const ToleranceContext& ctx, double scale) {
  if constexpr (is_exact_v<T>) {
    return x == 0;
  } else {
    return std::fabs(x) <= ctx.zero_eps + ctx.rel_eps * scale;
  }
}

template <typename T>
Decision zero_decision(const T& x, const ToleranceContext& ctx, double scale) {
  if constexpr (is_exact_v<T>) {
    return {x == 0, false};
  } else {
    const double thr = ctx.zero_eps + ctx.rel_eps * scale;
    const double ax = std::fabs(x);
    // rounded input cannot certify an exact zero, so every zero verdict is flagged
    return {ax <= thr, ax <= kMarginFactor * thr};
  }
}

template <typename T>
int sign_of(const T& x, const ToleranceContext& ctx, double scale) {
  if (is_zero(x, ctx, scale)) return 0;
  return x > 0 ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Matrix

template <typename T>
Matrix<T>::Matrix(std::initializer_list<std::initializer_list<T>> rows) : order_(rows.size()) {
  data_.reserve(order_ * order_);
  for (const auto& row : rows) {
    if (row.size() != order_) throw InputError("matrix literal is not square");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

template <typename T>
Matrix<T> Matrix<T>::identity(std::size_t order) {
  Matrix m(order);
  for (std::size_t i = 0; i < order; ++i) m(i, i) = T(1);
  return m;
}

template <typename T>
Matrix<T> Matrix<T>::without(std::size_t row, std::size_t col) const {
  Matrix out(order_ - 1);
  for (std::size_t i = 0, oi = 0; i < order_; ++i) {
    if (i == row) continue;
    for (std::size_t j = 0, oj = 0; j < order_; ++j) {
      if (j == col) continue;
      out(oi, oj++) = (*this)(i, j);
    }
    ++oi;
  }
  return out;
}

template <typename T>
Matrix<T> Matrix<T>::leading(std::size_t m) const {
  Matrix out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = (*this)(i, j);
  return out;
}

template <typename T>
double Matrix<T>::max_abs() const {
  double best = 0.0;
  for (const auto& x : data_) best = std::max(best, std::fabs(to_double(x)));
  return best;
}

template <typename T>
double Matrix<T>::hadamard_bound() const {
  double bound = 1.0;
  for (std::size_t i = 0; i < order_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < order_; ++j) {
      const double v = to_double((*this)(i, j));
      s += v * v;
    }
    bound *= std::sqrt(s);
  }
  return bound;
}

template <typename T>
bool Matrix<T>::is_symmetric(const ToleranceContext& ctx) const {
  const double scale = max_abs();
  for (std::size_t i = 0; i < order_; ++i)
    for (std::size_t j = i + 1; j < order_; ++j) {
      const T diff = (*this)(i, j) - (*this)(j, i);
      if (!is_zero(diff, ctx, scale)) return false;
    }
  return true;
}

// ---------------------------------------------------------------------------
// Interval

template <typename T>
Interval<T>::Interval(T lo, T hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (hi_ < lo_) throw PreconditionError("interval with lo > hi; use an empty optional instead");
}

template <typename T>
std::optional<Interval<T>> Interval<T>::intersect(const Interval& a, const Interval& b) {
  const T& lo = a.lo_ < b.lo_ ? b.lo_ : a.lo_;
  const T& hi = a.hi_ < b.hi_ ? a.hi_ : b.hi_;
  if (hi < lo) return std::nullopt;
  return Interval(lo, hi);
}

// ---------------------------------------------------------------------------
// Determinants and characteristic polynomials

template <typename T>
T det_bareiss(const Matrix<T>& m) {
  const std::size_t n = m.order();
  if (n == 0) return T(1);
  Matrix<T> a = m;
  T prev(1);
  bool negate = false;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    std::size_t pivot = k;
    if constexpr (is_exact_v<T>) {
      while (pivot < n && a(pivot, k) == 0) ++pivot;
      if (pivot == n) return T(0);
    } else {
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::fabs(a(i, k)) > std::fabs(a(pivot, k))) pivot = i;
      if (a(pivot, k) == 0.0) return T(0);
    }
    if (pivot != k) {
      for (std::size_t j = k; j < n; ++j) std::swap(a(pivot, j), a(k, j));
      negate = !negate;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        a(i, j) = (a(i, j) * a(k, k) - a(i, k) * a(k, j)) / prev;
      }
    }
    prev = a(k, k);
  }
  T det = a(n - 1, n - 1);
  if (negate) det = -det;
  return det;
}

template <typename T>
std::vector<T> char_poly(const Matrix<T>& m) {
  const std::size_t n = m.order();
  // Berkowitz: coefficients of det(lambda*I - M), highest power first, built up
  // one leading principal submatrix at a time via Toeplitz products.
  std::vector<T> coeffs{T(1)};
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<T> toeplitz(r + 2, T(0));
    toeplitz[0] = T(1);
    toeplitz[1] = -m(r, r);
    std::vector<T> x(r);  // A_sub^i * C
    for (std::size_t i = 0; i < r; ++i) x[i] = m(i, r);
    for (std::size_t p = 2; p < r + 2; ++p) {
      T dot(0);
      for (std::size_t i = 0; i < r; ++i) dot += m(r, i) * x[i];
      toeplitz[p] = -dot;
      std::vector<T> next(r, T(0));
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) next[i] += m(i, j) * x[j];
      x = std::move(next);
    }
    std::vector<T> out(r + 2, T(0));
    for (std::size_t i = 0; i < r + 2; ++i)
      for (std::size_t j = 0; j <= std::min(i, r); ++j) out[i] += toeplitz[i - j] * coeffs[j];
    coeffs = std::move(out);
  }
  // det(lambda*I + M) flips the sign of odd-index coefficients.
  for (std::size_t i = 1; i < coeffs.size(); i += 2) coeffs[i] = -coeffs[i];
  return coeffs;
}

double min_eigenvalue(const Matrix<double>& m) {
  const auto n = static_cast<Eigen::Index>(m.order());
  if (n == 0) return 0.0;
  Eigen::MatrixXd e(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) e(i, j) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

namespace {

template <typename T>
void require_symmetric(const Matrix<T>& m, const ToleranceContext& ctx) {
  if (!m.is_symmetric(ctx)) throw PreconditionError("matrix is not symmetric");
}

}  // namespace

template <typename T>
Decision psd_decision(const Matrix<T>& m, const ToleranceContext& ctx) {
  require_symmetric(m, ctx);
  if constexpr (is_exact_v<T>) {
    // p(t) = prod (t + lambda_i) has all coefficients >= 0 iff every lambda_i >= 0.
    const auto coeffs = char_poly(m);
    return {std::all_of(coeffs.begin(), coeffs.end(), [](const T& c) { return c >= 0; }), false};
  } else {
    if (m.order() == 0) return {true, false};
    const double floor = ctx.psd_floor * (1.0 + m.max_abs());
    const double lam = min_eigenvalue(m);
    return {lam >= -floor, std::fabs(lam) <= kMarginFactor * floor};
  }
}

template <typename T>
Decision pd_decision(const Matrix<T>& m, const ToleranceContext& ctx) {
  require_symmetric(m, ctx);
  if constexpr (is_exact_v<T>) {
    // Fraction-free elimination without pivoting: pivot k is the k-th leading principal minor.
    const std::size_t n = m.order();
    Matrix<T> a = m;
    T prev(1);
    for (std::size_t k = 0; k < n; ++k) {
      if (a(k, k) <= 0) return {false, false};
      for (std::size_t i = k + 1; i < n; ++i)
        for (std::size_t j = k + 1; j < n; ++j) a(i, j) = (a(i, j) * a(k, k) - a(i, k) * a(k, j)) / prev;
      prev = a(k, k);
    }
    return {true, false};
  } else {
    if (m.order() == 0) return {true, false};
    const double floor = ctx.psd_floor * (1.0 + m.max_abs());
    const double lam = min_eigenvalue(m);
    return {lam > floor, std::fabs(lam) <= kMarginFactor * floor};
  }
}

// ---------------------------------------------------------------------------
// Roots

template <typename T>
double Root<T>::approx() const {
  if (exact) return to_double(lo);
  return 0.5 * (to_double(lo) + to_double(hi));
}

template <typename T>
T eval_poly(const std::vector<T>& ascending, const T& x) {
  T acc(0);
  for (auto it = ascending.rbegin(); it != ascending.rend(); ++it) acc = acc * x + *it;
  return acc;
}

namespace {

// Bisects a*t^2 + b*t + c on [lo, hi] (strict sign change at the ends) until the
// width drops below 2^-96 * max(1, |lo|, |hi|).
Root<Rational> enclose_root(const std::vector<Rational>& q, Rational lo, Rational hi) {
  auto sign_at = [&](const Rational& t) { return sgn(eval_poly(q, t)); };
  const int slo = sign_at(lo);
  const double mag = std::max({1.0, std::fabs(lo.get_d()), std::fabs(hi.get_d())});
  const Rational target(std::ldexp(mag, -96));
  while (hi - lo > target) {
    Rational mid = (lo + hi) / 2;
    const int s = sign_at(mid);
    if (s == 0) return {mid, mid, true, 1};
    (s == slo ? lo : hi) = mid;
  }
  return {lo, hi, false, 1};
}

bool rational_sqrt(const Rational& x, Rational& out) {
  if (x < 0) return false;
  const mpz_class& num = x.get_num();
  const mpz_class& den = x.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t())) return false;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
  out = Rational(rn, rd);
  out.canonicalize();
  return true;
}

}  // namespace

template <typename T>
QuadraticSolution<T> solve_quadratic(const T& a, const T& b, const T& c) {
  if (a == 0) throw PreconditionError("solve_quadratic: leading coefficient is zero");
  QuadraticSolution<T> out;
  out.discriminant = b * b - 4 * a * c;
  const T& d = out.discriminant;
  if (d < 0) return out;
  if (d == 0) {
    T r = -b / (2 * a);
    out.roots.push_back({r, r, true, 2});
    return out;
  }
  if constexpr (is_exact_v<T>) {
    Rational s;
    if (rational_sqrt(d, s)) {
      Rational r1 = (-b - s) / (2 * a);
      Rational r2 = (-b + s) / (2 * a);
      if (r2 < r1) std::swap(r1, r2);
      out.roots.push_back({r1, r1, true, 1});
      out.roots.push_back({r2, r2, true, 1});
      return out;
    }
    // The vertex separates the roots; the Cauchy bound lies beyond both.
    const std::vector<Rational> q{c, b, a};
    const Rational vertex = -b / (2 * a);
    const Rational bound = 1 + std::max(Rational(::abs(b / a)), Rational(::abs(c / a)));
    out.roots.push_back(enclose_root(q, Rational(-bound), vertex));
    out.roots.push_back(enclose_root(q, vertex, bound));
  } else {
    const double s = std::sqrt(d);
    const double q = -0.5 * (b + std::copysign(s, b));
    double r1 = q / a, r2 = c / q;
    if (r2 < r1) std::swap(r1, r2);
    out.roots.push_back({r1, r1, true, 1});
    out.roots.push_back({r2, r2, true, 1});
  }
  return out;
}

template <typename T>
std::vector<T> solve_vandermonde(const std::vector<T>& nodes, const std::vector<T>& rhs) {
  const std::size_t m = nodes.size();
  if (rhs.size() != m) throw PreconditionError("solve_vandermonde: node and rhs counts differ");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (nodes[i] == nodes[j]) throw PreconditionError("solve_vandermonde: repeated node " + to_string(nodes[i]));
  if (m == 0) return {};
  // Bjorck-Pereyra for V z = b with V(i, j) = nodes_j^i.
  std::vector<T> z = rhs;
  const std::size_t n = m - 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = n; i > k; --i) z[i] -= nodes[k] * z[i - 1];
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t i = kk + 1; i <= n; ++i) z[i] /= nodes[i] - nodes[i - kk - 1];
    for (std::size_t i = kk; i < n; ++i) z[i] -= z[i + 1];
  }
  return z;
}

// ---------------------------------------------------------------------------
// Instantiations

#define HANKELSHIFT_INSTANTIATE_NUMKIT(T)                                                   \
  template bool is_zero<T>(const T&, const ToleranceContext&, double);                     \
  template Decision zero_decision<T>(const T&, const ToleranceContext&, double);          \
  template int sign_of<T>(const T&, const ToleranceContext&, double);                      \
  template class Matrix<T>;                                                                \
  template class Interval<T>;                                                              \
  template T det_bareiss<T>(const Matrix<T>&);                                             \
  template std::vector<T> char_poly<T>(const Matrix<T>&);                                  \
  template Decision psd_decision<T>(const Matrix<T>&, const ToleranceContext&);            \
  template Decision pd_decision<T>(const Matrix<T>&, const ToleranceContext&);             \
  template struct Root<T>;                                                                 \
  template QuadraticSolution<T> solve_quadratic<T>(const T&, const T&, const T&);          \
  template std::vector<T> solve_vandermonde<T>(const std::vector<T>&, const std::vector<T>&); \
  template T eval_poly<T>(const std::vector<T>&, const T&);

HANKELSHIFT_INSTANTIATE_NUMKIT(Rational)
HANKELSHIFT_INSTANTIATE_NUMKIT(double)

}  // namespace hankelshift
