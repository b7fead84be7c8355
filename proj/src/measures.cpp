#include "hankelshift/measures.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>

namespace hankelshift {

template <typename T>
AtomicMeasure<T>::AtomicMeasure(std::vector<T> atoms, std::vector<T> densities)
    : atoms_(std::move(atoms)), densities_(std::move(densities)) {
  if (atoms_.empty()) throw InputError("measure needs at least one atom");
  if (atoms_.size() != densities_.size()) throw InputError("measure has mismatched atom and density counts");
  for (std::size_t j = 0; j < atoms_.size(); ++j) {
    if (atoms_[j] < 0) throw InputError("atom " + std::to_string(j) + " is negative");
    if (j > 0 && !(atoms_[j - 1] < atoms_[j])) throw InputError("atoms must be strictly increasing");
    if (!(densities_[j] > 0)) throw InputError("density " + std::to_string(j) + " must be positive");
  }
}

template <typename T>
T AtomicMeasure<T>::total_mass() const {
  T sum(0);
  for (const auto& rho : densities_) sum += rho;
  return sum;
}

template <typename T>
double RecoveredAtom<T>::approx() const {
  if (pinned) return to_double(lo);
  return 0.5 * (to_double(lo) + to_double(hi));
}

template <typename T>
MomentSequence<T> moments_of(const AtomicMeasure<T>& mu, std::size_t N) {
  std::vector<T> gamma(N + 1, T(0));
  for (std::size_t j = 0; j < mu.size(); ++j) {
    T power = mu.densities()[j];
    for (std::size_t n = 0; n <= N; ++n) {
      gamma[n] += power;
      power *= mu.atoms()[j];
    }
  }
  return MomentSequence<T>(std::move(gamma));
}

namespace {

// Gaussian elimination on an augmented system; nullopt when inconsistent.
// Free variables are set to zero.
std::optional<std::vector<Rational>> solve_consistent(std::vector<std::vector<Rational>> rows, std::size_t cols) {
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
    std::size_t p = r;
    while (p < rows.size() && rows[p][c] == 0) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[p], rows[r]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      const Rational f = rows[i][c] / rows[r][c];
      for (std::size_t j = c; j <= cols; ++j) rows[i][j] -= f * rows[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < rows.size(); ++i)
    if (rows[i][cols] != 0) return std::nullopt;
  std::vector<Rational> x(cols, Rational(0));
  for (std::size_t i = 0; i < r; ++i) x[pivot_col[i]] = rows[i][cols] / rows[i][pivot_col[i]];
  return x;
}

template <typename T>
std::optional<Recursion<T>> fit_order(const MomentSequence<T>& gamma, std::size_t r, const ToleranceContext& ctx) {
  const std::size_t N = gamma.horizon();
  const std::size_t m = N - r + 1;
  Recursion<T> rec;
  rec.order = r;
  if constexpr (is_exact_v<T>) {
    std::vector<std::vector<Rational>> rows(m, std::vector<Rational>(r + 1));
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t j = 0; j <= r; ++j) rows[p][j] = gamma[p + j];
    auto sol = solve_consistent(std::move(rows), r);
    if (!sol) return std::nullopt;
    rec.coeffs = std::move(*sol);
    return rec;
  } else {
    Eigen::MatrixXd G(m, r);
    Eigen::VectorXd g(m);
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t j = 0; j < r; ++j) G(p, j) = gamma[p + j];
      g(p) = gamma[p + r];
    }
    const Eigen::VectorXd a = G.colPivHouseholderQr().solve(g);
    const double residual = (G * a - g).cwiseAbs().maxCoeff();
    const double thr = ctx.zero_eps + ctx.rel_eps * gamma.sup_norm();
    rec.residual = residual;
    rec.marginal = residual <= kMarginFactor * thr;
    if (residual > thr) return std::nullopt;
    rec.coeffs.assign(a.data(), a.data() + r);
    return rec;
  }
}

}  // namespace

template <typename T>
std::optional<Recursion<T>> detect_recursion(const MomentSequence<T>& gamma, std::size_t max_order,
                                             const ToleranceContext& ctx) {
  if (gamma.horizon() < 2 * max_order) throw HorizonError(2 * max_order, gamma.horizon());
  for (std::size_t r = 1; r <= max_order; ++r)
    if (auto rec = fit_order(gamma, r, ctx)) return rec;
  return std::nullopt;
}

namespace {

// Float singularity of a symmetric block by its spectrum: lambda_min is zero
// relative to lambda_max. Scale-invariant, so Hilbert-type blocks with tiny
// but well-conditioned determinants are not mistaken for singular ones.
Decision spectral_singular(const Matrix<double>& m, const ToleranceContext& ctx) {
  Eigen::MatrixXd a(m.order(), m.order());
  for (std::size_t i = 0; i < m.order(); ++i)
    for (std::size_t j = 0; j < m.order(); ++j) a(i, j) = m(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = std::fabs(ev(0));
  const double thr = ctx.zero_eps + ctx.rel_eps * std::fabs(ev(ev.size() - 1));
  return {lo <= thr, lo <= kMarginFactor * thr};
}

template <typename T>
Decision block_singular(const Matrix<T>& m, const ToleranceContext& ctx) {
  if constexpr (is_exact_v<T>) {
    return {det_bareiss(m) == 0, false};
  } else {
    return spectral_singular(m, ctx);
  }
}

}  // namespace

template <typename T>
FiniteMassVerdict is_finite_mass(const MomentSequence<T>& gamma, const ToleranceContext& ctx) {
  const std::size_t N = gamma.horizon();
  FiniteMassVerdict verdict;
  for (std::size_t shift = 0; shift <= 1; ++shift) {
    for (std::size_t k = 0; shift + 2 * k <= N; ++k) {
      const Decision d = psd_decision(block(gamma, shift, k), ctx);
      verdict.marginal = verdict.marginal || d.marginal;
      if (!d.holds) {
        throw PreconditionError("not a Stieltjes moment prefix: block n=" + std::to_string(shift) +
                                ", k=" + std::to_string(k) + " is not positive semi-definite");
      }
    }
  }
  for (std::size_t k = 1; 2 * k <= N && !verdict.finite; ++k) {
    for (std::size_t p = 0; p + 2 * k <= N; ++p) {
      const Decision d = block_singular(block(gamma, p, k), ctx);
      verdict.marginal = verdict.marginal || d.marginal;
      if (d.holds) {
        verdict.finite = true;
        verdict.witness = BlockIndex{p, k};
        break;
      }
    }
  }
  if (!verdict.finite) verdict.notes.push_back("no vanishing block determinant on the horizon");
  if (verdict.marginal) verdict.notes.push_back("some block was decided within the tolerance band");
  return verdict;
}

namespace {

using Poly = std::vector<Rational>;  // ascending powers

void trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

Poly derivative(const Poly& p) {
  Poly d;
  for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * static_cast<long>(i));
  trim(d);
  return d;
}

Poly remainder(Poly a, const Poly& b) {
  trim(a);
  while (a.size() >= b.size() && !a.empty()) {
    const Rational f = a.back() / b.back();
    const std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) a[shift + i] -= f * b[i];
    a.pop_back();
    trim(a);
  }
  return a;
}

std::vector<Poly> sturm_chain(const Poly& h) {
  std::vector<Poly> chain{h, derivative(h)};
  while (chain.back().size() > 1) {
    Poly r = remainder(chain[chain.size() - 2], chain.back());
    if (r.empty()) break;
    for (auto& c : r) c = -c;
    chain.push_back(std::move(r));
  }
  return chain;
}

int variations(const std::vector<Poly>& chain, const Rational& x) {
  int count = 0;
  int last = 0;
  for (const auto& p : chain) {
    const int s = sgn(eval_poly(p, x));
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

// Distinct roots in (a, b].
int count_roots(const std::vector<Poly>& chain, const Rational& a, const Rational& b) {
  return variations(chain, a) - variations(chain, b);
}

void isolate(const std::vector<Poly>& chain, const Rational& a, const Rational& b,
             std::vector<std::pair<Rational, Rational>>& out) {
  const int c = count_roots(chain, a, b);
  if (c == 0) return;
  if (c == 1) {
    out.emplace_back(a, b);
    return;
  }
  const Rational mid = (a + b) / 2;
  isolate(chain, a, mid, out);
  isolate(chain, mid, b, out);
}

Rational round_rational(const Rational& x) {
  mpz_class num = 2 * x.get_num() + x.get_den();
  mpz_class den = 2 * x.get_den();
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return Rational(q);
}

// Refines the unique root in (a, b]. A rational root p/q has q | D (rational
// root theorem on D*h), so once the bracket is narrower than 1/(2D) the only
// candidate is the nearest multiple of 1/D.
RecoveredAtom<Rational> refine(const std::vector<Poly>& chain, Rational a, Rational b, const mpz_class& D) {
  const Poly& h = chain.front();
  if (eval_poly(h, b) == 0) return {b, b, true};
  const Rational candidate_width(mpz_class(1), 2 * D);
  bool candidate_tried = false;
  const double mag = std::max({1.0, std::fabs(a.get_d()), std::fabs(b.get_d())});
  const Rational target(std::ldexp(mag, -96));
  while (b - a > target) {
    if (!candidate_tried && b - a < candidate_width) {
      candidate_tried = true;
      const Rational mid = (a + b) / 2;
      const Rational c = round_rational(Rational(mid * D)) / D;
      if (a < c && c <= b && eval_poly(h, c) == 0) return {c, c, true};
    }
    const Rational mid = (a + b) / 2;
    if (eval_poly(h, mid) == 0) return {mid, mid, true};
    if (count_roots(chain, a, mid) == 1) b = mid;
    else a = mid;
  }
  return {a, b, false};
}

std::vector<std::complex<double>> companion_roots(const std::vector<double>& monic_ascending) {
  const std::size_t r = monic_ascending.size() - 1;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(r, r);
  for (std::size_t i = 1; i < r; ++i) C(i, i - 1) = 1.0;
  for (std::size_t i = 0; i < r; ++i) C(i, r - 1) = -monic_ascending[i];
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + r);
  std::sort(out.begin(), out.end(), [](auto x, auto y) { return x.real() < y.real(); });
  return out;
}

std::string describe(std::complex<double> z) {
  std::ostringstream os;
  os.precision(12);
  os << z.real();
  if (z.imag() != 0.0) os << (z.imag() < 0 ? " - " : " + ") << std::fabs(z.imag()) << "i";
  return os.str();
}

template <typename T>
Poly exact_char_poly(const Recursion<T>& rec) {
  Poly h;
  for (const auto& a : rec.coeffs) h.push_back(Rational(-Rational(a)));
  h.push_back(Rational(1));
  return h;
}

template <typename T>
std::vector<double> char_poly_double(const Recursion<T>& rec) {
  std::vector<double> h;
  for (const auto& a : rec.coeffs) h.push_back(-to_double(a));
  h.push_back(1.0);
  return h;
}

template <typename T>
std::string complex_root_message(const Recursion<T>& rec) {
  for (const auto& z : companion_roots(char_poly_double(rec)))
    if (z.imag() != 0.0) return "not Stieltjes-atomic: complex root " + describe(z);
  return "not Stieltjes-atomic: complex root";
}

std::vector<RecoveredAtom<Rational>> exact_atoms(const Recursion<Rational>& rec) {
  const Poly h = exact_char_poly(rec);
  const std::size_t r = rec.order;

  Poly sqf_check = derivative(h);
  Poly g = h;
  while (!sqf_check.empty()) {
    Poly rem = remainder(g, sqf_check);
    g = std::move(sqf_check);
    sqf_check = std::move(rem);
  }
  if (g.size() > 1) {
    // gcd(h, h') is nonconstant: report one of its roots.
    std::vector<double> gd;
    for (const auto& c : g) gd.push_back(Rational(c / g.back()).get_d());
    const auto z = companion_roots(gd).front();
    throw PreconditionError("not Stieltjes-atomic: repeated root " + describe(z));
  }

  Rational bound(0);
  for (std::size_t i = 0; i < r; ++i) bound = std::max(bound, Rational(abs(h[i])));
  bound += 1;
  const auto chain = sturm_chain(h);
  const int real = count_roots(chain, -bound, bound);
  if (real < static_cast<int>(r)) throw PreconditionError(complex_root_message(rec));

  const bool zero_root = h[0] == 0;
  const int nonpositive = count_roots(chain, -bound, Rational(0));
  if (nonpositive - (zero_root ? 1 : 0) > 0) {
    std::vector<std::pair<Rational, Rational>> neg;
    isolate(chain, -bound, Rational(0), neg);
    mpz_class D(1);
    for (const auto& c : h) mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), c.get_den().get_mpz_t());
    const auto bad = refine(chain, neg.front().first, neg.front().second, D);
    throw PreconditionError("not Stieltjes-atomic: negative root " + describe(bad.approx()));
  }

  mpz_class D(1);
  for (const auto& c : h) mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), c.get_den().get_mpz_t());
  std::vector<RecoveredAtom<Rational>> atoms;
  if (zero_root) atoms.push_back({Rational(0), Rational(0), true});
  std::vector<std::pair<Rational, Rational>> brackets;
  isolate(chain, Rational(0), bound, brackets);
  for (const auto& [a, b] : brackets) atoms.push_back(refine(chain, a, b, D));
  return atoms;
}

std::vector<RecoveredAtom<double>> float_atoms(const Recursion<double>& rec, const ToleranceContext& ctx) {
  const auto h = char_poly_double(rec);
  const auto roots = companion_roots(h);
  double scale = 1.0;
  for (const auto& z : roots) scale = std::max(scale, std::abs(z));
  const double tol = ctx.zero_eps + ctx.rel_eps * scale;
  std::vector<RecoveredAtom<double>> atoms;
  for (const auto& z : roots) {
    if (std::fabs(z.imag()) > tol) throw PreconditionError("not Stieltjes-atomic: complex root " + describe(z));
    double x = z.real();
    if (x < -tol) throw PreconditionError("not Stieltjes-atomic: negative root " + describe(z));
    // Newton polish on h; roots are simple once the repeated-root test below passes.
    for (int it = 0; it < 3; ++it) {
      double v = 0.0;
      double dv = 0.0;
      for (auto c = h.rbegin(); c != h.rend(); ++c) {
        dv = dv * x + v;
        v = v * x + *c;
      }
      if (dv == 0.0) break;
      x -= v / dv;
    }
    atoms.push_back({std::max(x, 0.0), std::max(x, 0.0), true});
  }
  std::sort(atoms.begin(), atoms.end(), [](const auto& u, const auto& v) { return u.lo < v.lo; });
  for (std::size_t j = 1; j < atoms.size(); ++j) {
    if (std::fabs(atoms[j].lo - atoms[j - 1].lo) <= tol)
      throw PreconditionError("not Stieltjes-atomic: repeated root " + describe(atoms[j].lo));
  }
  return atoms;
}

// Gauss-Newton on sum_j rho_j x_j^n = gamma_n over the whole horizon. The fitted
// recursion carries the conditioning of the Hankel system; this pulls atoms and
// densities back onto the data.
void polish(std::vector<double>& x, std::vector<double>& rho, const MomentSequence<double>& gamma) {
  const std::size_t m = x.size();
  const std::size_t rows = gamma.size();
  for (int it = 0; it < 6; ++it) {
    Eigen::MatrixXd J(rows, 2 * m);
    Eigen::VectorXd res(rows);
    for (std::size_t n = 0; n < rows; ++n) {
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double pw = std::pow(x[j], double(n));
        sum += rho[j] * pw;
        J(n, j) = pw;
        J(n, m + j) = n == 0 ? 0.0 : rho[j] * double(n) * std::pow(x[j], double(n - 1));
      }
      const double w = 1.0 / std::max(1.0, std::fabs(gamma[n]));
      res(n) = (gamma[n] - sum) * w;
      J.row(n) *= w;
    }
    const Eigen::VectorXd step = J.colPivHouseholderQr().solve(res);
    for (std::size_t j = 0; j < m; ++j) {
      rho[j] += step(j);
      if (x[j] != 0.0) x[j] += step(m + j);
    }
  }
}

template <typename T>
void verify_moments(const Recovery<T>& out, const MomentSequence<T>& gamma, const ToleranceContext& ctx) {
  const auto recomputed = moments_of(*out.measure, gamma.horizon());
  for (std::size_t n = 0; n <= gamma.horizon(); ++n) {
    const T diff = recomputed[n] - gamma[n];
    const double scale = std::max(std::fabs(to_double(gamma[n])), std::fabs(to_double(recomputed[n])));
    if (!is_zero(diff, ctx, scale)) {
      throw ConsistencyError("recovered measure does not reproduce gamma_" + std::to_string(n) +
                             " (got " + to_string(recomputed[n]) + ", expected " + to_string(gamma[n]) + ")");
    }
  }
}

}  // namespace

template <typename T>
Recovery<T> recover_atoms(const Recursion<T>& rec, const MomentSequence<T>& gamma, const ToleranceContext& ctx) {
  if (rec.valid_from != 0) throw PreconditionError("atom recovery needs a recursion valid from index 0");
  if (rec.order == 0 || rec.coeffs.size() != rec.order) throw PreconditionError("malformed recursion");
  if (gamma.horizon() + 1 < rec.order) throw HorizonError(rec.order - 1, gamma.horizon());

  Recovery<T> out;
  if constexpr (is_exact_v<T>) {
    out.atoms = exact_atoms(rec);
  } else {
    out.atoms = float_atoms(rec, ctx);
  }

  const bool all_pinned = std::all_of(out.atoms.begin(), out.atoms.end(), [](const auto& a) { return a.pinned; });
  std::vector<T> first(gamma.values().begin(), gamma.values().begin() + rec.order);
  if (all_pinned) {
    std::vector<T> nodes;
    for (const auto& a : out.atoms) nodes.push_back(a.lo);
    auto rho = solve_vandermonde(nodes, first);
    if constexpr (!is_exact_v<T>) polish(nodes, rho, gamma);
    for (std::size_t j = 0; j < rho.size(); ++j) {
      if (!(rho[j] > 0)) {
        throw PreconditionError("densities not positive: rho_" + std::to_string(j) + " = " + to_string(rho[j]) +
                                " at atom " + to_string(nodes[j]));
      }
      out.approx_densities.push_back(to_double(rho[j]));
    }
    out.measure = AtomicMeasure<T>(std::move(nodes), rho);
    verify_moments(out, gamma, ctx);
    return out;
  }

  // Irrational atoms: densities and verification in double precision.
  std::vector<double> nodes;
  std::vector<double> rhs;
  for (const auto& a : out.atoms) nodes.push_back(a.approx());
  for (const auto& g : first) rhs.push_back(to_double(g));
  out.approx_densities = solve_vandermonde(nodes, rhs);
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (!(out.approx_densities[j] > 0))
      throw PreconditionError("densities not positive: rho_" + std::to_string(j) + " ~ " +
                              to_string(out.approx_densities[j]));
  for (std::size_t n = 0; n <= gamma.horizon(); ++n) {
    double sum = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) sum += out.approx_densities[j] * std::pow(nodes[j], double(n));
    const double expect = to_double(gamma[n]);
    if (std::fabs(sum - expect) > 1e-8 * std::max(1.0, std::fabs(expect)))
      throw ConsistencyError("recovered measure does not reproduce gamma_" + std::to_string(n));
  }
  out.notes.push_back("irrational atoms: locations certified by enclosure, densities approximate");
  return out;
}

template <typename T>
bool verify_berger(const WeightSequence<T>& alpha, const AtomicMeasure<T>& mu, const ToleranceContext& ctx) {
  const auto gamma = weights_to_moments(alpha);
  const auto mom = moments_of(mu, gamma.horizon());
  for (std::size_t n = 0; n <= gamma.horizon(); ++n) {
    const double scale = std::max(std::fabs(to_double(gamma[n])), std::fabs(to_double(mom[n])));
    if (!is_zero(T(mom[n] - gamma[n]), ctx, scale)) return false;
  }
  const T& top = mu.atoms().back();
  const T bound = alpha.max_squared();
  return !(top > bound) || is_zero(T(top - bound), ctx, std::fabs(to_double(bound)));
}

#define HANKELSHIFT_INSTANTIATE_MEASURES(T)                                                                    \
  template class AtomicMeasure<T>;                                                                             \
  template struct RecoveredAtom<T>;                                                                            \
  template MomentSequence<T> moments_of<T>(const AtomicMeasure<T>&, std::size_t);                              \
  template std::optional<Recursion<T>> detect_recursion<T>(const MomentSequence<T>&, std::size_t,              \
                                                           const ToleranceContext&);                           \
  template FiniteMassVerdict is_finite_mass<T>(const MomentSequence<T>&, const ToleranceContext&);             \
  template Recovery<T> recover_atoms<T>(const Recursion<T>&, const MomentSequence<T>&, const ToleranceContext&); \
  template bool verify_berger<T>(const WeightSequence<T>&, const AtomicMeasure<T>&, const ToleranceContext&);

HANKELSHIFT_INSTANTIATE_MEASURES(Rational)
HANKELSHIFT_INSTANTIATE_MEASURES(double)

}  // namespace hankelshift
