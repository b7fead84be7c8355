#include "hankelshift/perturbation.hpp"

#include <algorithm>
#include <cmath>

namespace hankelshift {

void PerturbationOptions::validate() const {
  if (!std::isfinite(bisect_eps) || !(bisect_eps > 0)) throw InputError("bisect_eps must be finite and > 0");
  if (!std::isfinite(interior_margin) || !(interior_margin > 0))
    throw InputError("interior_margin must be finite and > 0");
}

template <typename T>
double Endpoint<T>::approx() const {
  if (pinned) return to_double(lo);
  return 0.5 * (to_double(lo) + to_double(hi));
}

template <typename T>
MomentSequence<T> perturb_moments(const MomentSequence<T>& gamma, const PerturbationSpec<T>& spec) {
  if (spec.l == 0) throw PreconditionError("perturbation index l must be >= 1");
  if (spec.l > gamma.horizon()) throw HorizonError(spec.l, gamma.horizon());
  if (spec.t < 0) throw PreconditionError("perturbation scale t must be >= 0");
  std::vector<T> out(gamma.values().begin(), gamma.values().end());
  for (std::size_t n = spec.l + 1; n < out.size(); ++n) out[n] *= spec.t;
  return MomentSequence<T>(std::move(out));
}

template <typename T>
WeightSequence<T> perturb_weights(const WeightSequence<T>& alpha, const PerturbationSpec<T>& spec) {
  if (spec.l == 0) throw PreconditionError("perturbation index l must be >= 1");
  if (spec.l >= alpha.size()) throw HorizonError(spec.l, alpha.size() == 0 ? 0 : alpha.size() - 1);
  if (!(spec.t > 0)) throw PreconditionError("t = 0 makes alpha_l vanish; the perturbed shift is not injective");
  std::vector<T> sq = alpha.squared();
  sq[spec.l] *= spec.t;
  return WeightSequence<T>::from_squared(std::move(sq));
}

template <typename T>
Matrix<T> truncated_block(const MomentSequence<T>& gamma, std::size_t n, std::size_t k, std::size_t l) {
  if (n > l) throw PreconditionError("truncated block needs n <= l (above l the perturbed block is t times the block)");
  Matrix<T> m = block(gamma, n, k);
  for (std::size_t i = 0; i <= k; ++i)
    for (std::size_t j = 0; j <= k; ++j)
      if (n + i + j > l) m(i, j) = T(0);
  return m;
}

namespace {

template <typename T>
void require_positive(const MomentSequence<T>& gamma) {
  if (!gamma.strictly_positive()) throw PreconditionError("perturbation analysis needs every gamma_n > 0");
}

template <typename T>
void require_k_positive(const MomentSequence<T>& gamma, std::size_t k, const ToleranceContext& ctx) {
  const auto v = is_k_positive(gamma, k, ctx);
  if (!v.holds) {
    throw PreconditionError("sequence is not " + std::to_string(k) + "-positive (block n=" +
                            std::to_string(v.first_failure->n) + " fails), so 1 need not lie in I^" +
                            std::to_string(k));
  }
}

// t B + (1 - t) H at anchor n <= l: entries past index l are scaled by t.
template <typename T>
Matrix<T> perturbed_block(const MomentSequence<T>& gamma, std::size_t n, std::size_t k, std::size_t l, const T& t) {
  Matrix<T> m = block(gamma, n, k);
  for (std::size_t i = 0; i <= k; ++i)
    for (std::size_t j = 0; j <= k; ++j)
      if (n + i + j > l) m(i, j) = T(m(i, j) * t);
  return m;
}

template <typename T>
bool narrow_enough(const T& a, const T& b, double eps) {
  const double mag = std::max({1.0, std::fabs(to_double(a)), std::fabs(to_double(b))});
  return to_double(T(b - a)) <= eps * mag;
}

// I^k_n by bisection on the PSD predicate: lower end in [0, 1], upper end in [1, cap].
template <typename T>
BlockInterval<T> bisect_block(const MomentSequence<T>& gamma, std::size_t n, std::size_t k, std::size_t l,
                              const T& cap, const ToleranceContext& ctx, const PerturbationOptions& opts) {
  BlockInterval<T> out;
  out.n = n;
  if (n + 2 * k <= l) {
    out.t_independent = true;
    out.lower = Endpoint<T>::exact(T(0), Method::closed_form);
    return out;
  }
  auto feasible = [&](const T& t) { return psd_decision(perturbed_block(gamma, n, k, l, t), ctx).holds; };

  if (feasible(T(0))) {
    out.lower = Endpoint<T>::exact(T(0), Method::bisection);
  } else {
    T a(0);  // infeasible
    T b(1);  // feasible
    while (!narrow_enough(a, b, opts.bisect_eps)) {
      const T mid = (a + b) / 2;
      (feasible(mid) ? b : a) = mid;
    }
    out.lower = {a, b, Method::bisection, false};
  }

  if (feasible(cap)) {
    out.at_cap = true;
    out.upper = Endpoint<T>::exact(cap, Method::closed_form);
  } else {
    T a(1);    // feasible
    T b(cap);  // infeasible
    while (!narrow_enough(a, b, opts.bisect_eps)) {
      const T mid = (a + b) / 2;
      (feasible(mid) ? a : b) = mid;
    }
    out.upper = Endpoint<T>{a, b, Method::bisection, false};
  }
  return out;
}

template <typename T>
Endpoint<T> from_root(const Root<T>& r) {
  return {r.lo, r.hi, Method::quadratic_root, r.exact};
}

template <typename T>
void finish(IntervalReport<T>& report, const ToleranceContext& ctx, const PerturbationOptions& opts) {
  (void)ctx;
  bool have_lower = false;
  bool have_upper = false;
  for (const auto& b : report.per_block) {
    if (!have_lower || b.lower.mid() > report.lower.mid()) {
      report.lower = b.lower;
      report.lower_block = b.n;
      have_lower = true;
    }
    if (b.upper && (!have_upper || b.upper->mid() < report.upper.mid())) {
      report.upper = *b.upper;
      report.upper_block = b.n;
      have_upper = true;
    }
  }
  if (!have_upper) throw ConsistencyError("no block bounds I^k from above");
  const T one(1);
  if constexpr (is_exact_v<T>) {
    report.contains_one = report.lower.lo <= one && one <= report.upper.hi;
    report.one_interior = report.lower.hi < one && one < report.upper.lo;
  } else {
    const double below = 1.0 - report.lower.hi;
    const double above = report.upper.lo - 1.0;
    // rounding can push a collapsed interval off 1
    report.contains_one = 1.0 - report.lower.lo >= -opts.interior_margin && report.upper.hi - 1.0 >= -opts.interior_margin;
    report.one_interior = below > opts.interior_margin && above > opts.interior_margin;
    // 1 near an endpoint but not on it
    auto near = [&](double d) { return d != 0.0 && std::fabs(d) <= opts.interior_margin; };
    report.marginal = near(below) || near(above);
  }
  if (!report.contains_one) {
    report.notes.push_back("1 lies outside the computed interval; the input is not positive enough at this order");
  }
  if (report.upper.pinned && report.upper.method == Method::closed_form) {
    for (const auto& b : report.per_block)
      if (b.at_cap && b.n == report.upper_block) report.notes.push_back("endpoint at I1 bound (exact)");
  }
  if (report.lower.pinned && report.lower.lo == T(0)) {
    report.notes.push_back("t = 0 is admissible: the perturbed moments vanish beyond index l");
  }
}

// Float: a t-dependent block that is singular or nearly so at t = 1 makes the
// interior verdict depend on the PSD tolerance.
template <typename T>
void flag_near_singular(IntervalReport<T>& report, const MomentSequence<T>& gamma, std::size_t k, std::size_t l,
                        const ToleranceContext& ctx) {
  if constexpr (!is_exact_v<T>) {
    for (std::size_t n = l + 1 > 2 * k ? l + 1 - 2 * k : 0; n <= l; ++n) {
      const Decision d = pd_decision(block(gamma, n, k), ctx);
      if (!d.holds || d.marginal) {
        report.marginal = true;
        report.notes.push_back("block n=" + std::to_string(n) +
                               " is numerically singular at t = 1; the interior verdict depends on tolerances");
        return;
      }
    }
  } else {
    (void)report, (void)gamma, (void)k, (void)l, (void)ctx;
  }
}

}  // namespace

template <typename T>
Interval<T> interval_I1(const MomentSequence<T>& gamma, std::size_t l) {
  if (l == 0) throw PreconditionError("perturbation index l must be >= 1");
  if (l + 2 > gamma.horizon()) throw HorizonError(l + 2, gamma.horizon());
  require_positive(gamma);
  const T lo = gamma[l] * gamma[l] / (gamma[l - 1] * gamma[l + 1]);
  const T hi = gamma[l] * gamma[l + 2] / (gamma[l + 1] * gamma[l + 1]);
  if (hi < lo) {
    // float: a collapsed interval can come out inverted by rounding
    if constexpr (!is_exact_v<T>) {
      const ToleranceContext ctx;
      if (lo - hi <= ctx.zero_eps + ctx.rel_eps * std::max(std::fabs(lo), std::fabs(hi))) {
        const T mid = (lo + hi) / 2;
        return Interval<T>(mid, mid);
      }
    }
    throw PreconditionError("sequence is not 1-positive at anchors l-1, l: I1 is empty");
  }
  return Interval<T>(lo, hi);
}

template <typename T>
Quadratic<T> poly_P(const MomentSequence<T>& gamma, std::size_t l) {
  if (l < 2) throw PreconditionError("P needs l >= 2");
  if (l + 2 > gamma.horizon()) throw HorizonError(l + 2, gamma.horizon());
  const auto& g = gamma;
  return {T(-g[l - 2] * g[l + 1] * g[l + 1]),
          T(g[l - 2] * g[l] * g[l + 2] + 2 * g[l - 1] * g[l] * g[l + 1] - g[l - 1] * g[l - 1] * g[l + 2]),
          T(-g[l] * g[l] * g[l])};
}

template <typename T>
Quadratic<T> poly_Q(const MomentSequence<T>& gamma, std::size_t l) {
  if (l < 1) throw PreconditionError("Q needs l >= 1");
  if (l + 3 > gamma.horizon()) throw HorizonError(l + 3, gamma.horizon());
  const auto& g = gamma;
  return {T(-g[l + 1] * g[l + 1] * g[l + 1]),
          T(g[l - 1] * g[l + 1] * g[l + 3] + 2 * g[l] * g[l + 1] * g[l + 2] - g[l - 1] * g[l + 2] * g[l + 2]),
          T(-g[l] * g[l] * g[l + 3])};
}

template <typename T>
std::optional<T> matrix4_bound(const MomentSequence<T>& gamma, std::size_t l) {
  if (l + 4 > gamma.horizon()) throw HorizonError(l + 4, gamma.horizon());
  const auto& g = gamma;
  const T minor = g[l + 2] * g[l + 4] - g[l + 3] * g[l + 3];
  const Matrix<T> bordered{{T(0), g[l + 1], g[l + 2]}, {g[l + 1], g[l + 2], g[l + 3]}, {g[l + 2], g[l + 3], g[l + 4]}};
  const T den = det_bareiss(bordered);
  if (den == 0) return std::nullopt;
  return T(-g[l] * minor / den);
}

template <typename T>
std::optional<DiscriminantDiagnostic<T>> discriminant_diagnostic(const MomentSequence<T>& gamma, std::size_t l) {
  if (l < 2 || l + 3 > gamma.horizon()) return std::nullopt;
  const auto& g = gamma;
  DiscriminantDiagnostic<T> d;
  const T u = g[l - 1] * g[l - 1] * g[l + 1] * g[l + 3];
  const T v = g[l - 2] * g[l] * g[l + 2] * g[l + 2];
  d.left = std::min(u, v);
  const T w = 2 * g[l] * g[l + 1] - g[l - 1] * g[l + 2];
  d.right = w * w;
  d.holds = d.left >= d.right;
  return d;
}

namespace {

// Closed-form [lo, hi] between the two roots of a concave quadratic, or nullopt
// when the roots are not simple and real.
template <typename T>
std::optional<std::pair<Endpoint<T>, Endpoint<T>>> quadratic_window(const Quadratic<T>& q, const ToleranceContext& ctx) {
  if (!(q.a < 0)) return std::nullopt;
  const T disc = q.discriminant();
  const double scale = std::fabs(to_double(T(q.b * q.b))) + std::fabs(to_double(T(4 * q.a * q.c)));
  if (disc < 0 || zero_decision(disc, ctx, scale).holds) return std::nullopt;
  const auto sol = solve_quadratic(q.a, q.b, q.c);
  if (sol.roots.size() != 2) return std::nullopt;
  return std::make_pair(from_root(sol.roots[0]), from_root(sol.roots[1]));
}

}  // namespace

template <typename T>
IntervalReport<T> interval_I2(const MomentSequence<T>& gamma, std::size_t l, const ToleranceContext& ctx,
                              const PerturbationOptions& opts) {
  opts.validate();
  if (l == 0) throw PreconditionError("perturbation index l must be >= 1");
  if (l + 4 > gamma.horizon()) throw HorizonError(l + 4, gamma.horizon());
  require_positive(gamma);
  require_k_positive(gamma, 2, ctx);

  const auto& g = gamma;
  const Interval<T> i1 = interval_I1(gamma, l);
  const T ratio = i1.lo();
  IntervalReport<T> report;
  report.k = 2;
  report.l = l;

  for (std::size_t n = 0; n <= l; ++n) {
    if (n + 4 <= l) {
      report.per_block.push_back(bisect_block(gamma, n, 2, l, i1.hi(), ctx, opts));
      continue;
    }
    BlockInterval<T> b;
    b.n = n;
    bool closed = false;
    if (n + 3 == l) {
      const T d1 = g[l - 3] * g[l - 1] - g[l - 2] * g[l - 2];
      const double scale = std::fabs(to_double(T(g[l - 3] * g[l - 1]))) + std::fabs(to_double(T(g[l - 2] * g[l - 2])));
      if (!zero_decision(d1, ctx, scale).holds && d1 > 0) {
        const T dm = g[l - 2] * g[l] - g[l - 1] * g[l - 1];
        b.lower = Endpoint<T>::exact(T(ratio + dm * dm / (d1 * g[l - 1] * g[l + 1])), Method::closed_form);
        closed = true;
      }
    } else if (n + 2 == l || n + 1 == l) {
      const auto q = n + 2 == l ? poly_P(gamma, l) : poly_Q(gamma, l);
      if (const auto w = quadratic_window(q, ctx)) {
        b.lower = w->first;
        b.upper = w->second;
        closed = true;
      }
    } else {
      if (const auto m4 = matrix4_bound(gamma, l)) {
        b.lower = Endpoint<T>::exact(T(0), Method::closed_form);
        b.upper = Endpoint<T>::exact(*m4, Method::closed_form);
        closed = true;
      }
    }
    if (!closed) {
      b = bisect_block(gamma, n, 2, l, i1.hi(), ctx, opts);
      b.degenerate = true;
      report.notes.push_back("block n=" + std::to_string(n) + ": degenerate closed form, endpoints by bisection");
    }
    report.per_block.push_back(std::move(b));
  }
  finish(report, ctx, opts);
  flag_near_singular(report, gamma, 2, l, ctx);

  if (l >= 3) {
    const auto& b3 = report.per_block[l - 3];
    if (!b3.degenerate && report.lower_block == l - 3 && b3.lower.lo > ratio) {
      report.notes.push_back("block n=l-3 sets the lower end above the I1 left ratio " + to_string(ratio));
    }
  }
  if (l < 3) report.notes.push_back("l < 3: blocks with negative anchors do not exist and are skipped");
  if (l > 3) report.notes.push_back("blocks n <= l-4 are untouched by the perturbation and impose no constraint");
  return report;
}

template <typename T>
IntervalReport<T> interval_Ik(const MomentSequence<T>& gamma, std::size_t l, std::size_t k,
                              const ToleranceContext& ctx, const PerturbationOptions& opts) {
  opts.validate();
  if (l == 0) throw PreconditionError("perturbation index l must be >= 1");
  if (k == 0) throw PreconditionError("interval_Ik needs k >= 1");
  if (l + 2 * k > gamma.horizon()) throw HorizonError(l + 2 * k, gamma.horizon());
  require_positive(gamma);
  require_k_positive(gamma, k, ctx);

  const T cap = interval_I1(gamma, l).hi();
  IntervalReport<T> report;
  report.k = k;
  report.l = l;
  for (std::size_t n = 0; n <= l; ++n) report.per_block.push_back(bisect_block(gamma, n, k, l, cap, ctx, opts));
  finish(report, ctx, opts);
  flag_near_singular(report, gamma, k, l, ctx);
  if (l >= 2 * k) {
    report.notes.push_back("blocks n <= " + std::to_string(l - 2 * k) +
                           " are untouched by the perturbation and impose no constraint");
  }
  return report;
}

template <typename T>
IntervalReport<T> interval_Ik_for_weights(const WeightSequence<T>& alpha, std::size_t l, std::size_t k,
                                          const ToleranceContext& ctx, const PerturbationOptions& opts) {
  auto report = interval_Ik(weights_to_moments(alpha), l, k, ctx, opts);
  if (report.lower.pinned && report.lower.lo == T(0)) {
    report.notes.push_back("warning: t = 0 lies in I^" + std::to_string(k) +
                           ", but the perturbed weight sqrt(t) alpha_l would vanish and the shift would not be injective");
  }
  return report;
}

template <typename T>
InteriorVerdict is_interior(const MomentSequence<T>& gamma, std::size_t l, std::size_t k,
                            const ToleranceContext& ctx, const PerturbationOptions& opts) {
  const auto report = interval_Ik(gamma, l, k, ctx, opts);
  InteriorVerdict v;
  v.pd_all = true;
  for (std::size_t n = 0; n <= l; ++n) {
    const Decision d = pd_decision(block(gamma, n, k), ctx);
    v.marginal = v.marginal || d.marginal;
    if (!d.holds && v.pd_all) {
      v.pd_all = false;
      v.failing_block = n;
    }
  }
  v.interior = report.one_interior;
  v.marginal = v.marginal || report.marginal;
  v.agree = v.pd_all == v.interior;
  if (k != l) v.notes.push_back("positive definiteness is checked for every anchor n <= l, not n <= k");
  if (!v.agree) {
    v.notes.push_back(std::string("incident: blocks are ") + (v.pd_all ? "all" : "not all") +
                      " positive definite but 1 is " + (v.interior ? "" : "not ") + "interior to I^" +
                      std::to_string(k));
    if (v.failing_block && *v.failing_block + 2 * k <= l) {
      v.notes.push_back("block n=" + std::to_string(*v.failing_block) +
                        " is singular but untouched by the perturbation");
    }
    if (v.marginal) v.notes.push_back("the disagreement sits inside the float tolerance band");
  }
  return v;
}

template <typename T>
bool cofactor_identity_check(const MomentSequence<T>& gamma, std::size_t l, std::size_t k, const T& t,
                             const ToleranceContext& ctx) {
  const Matrix<T> b = block(gamma, l, k);
  const T lhs = det_bareiss(perturbed_block(gamma, l, k, l, t));
  const T det_b = det_bareiss(b);
  const T cof = det_bareiss(b.without(0, 0));
  T tk(1);
  for (std::size_t i = 0; i < k; ++i) tk *= t;
  const T rhs = tk * t * det_b + (1 - t) * tk * gamma[l] * cof;
  const double scale = std::max(std::fabs(to_double(lhs)), std::fabs(to_double(rhs))) +
                       perturbed_block(gamma, l, k, l, t).hadamard_bound();
  return is_zero(T(lhs - rhs), ctx, scale);
}

#define HANKELSHIFT_INSTANTIATE_PERTURBATION(T)                                                                   \
  template struct Endpoint<T>;                                                                                    \
  template MomentSequence<T> perturb_moments<T>(const MomentSequence<T>&, const PerturbationSpec<T>&);            \
  template WeightSequence<T> perturb_weights<T>(const WeightSequence<T>&, const PerturbationSpec<T>&);            \
  template Matrix<T> truncated_block<T>(const MomentSequence<T>&, std::size_t, std::size_t, std::size_t);         \
  template Interval<T> interval_I1<T>(const MomentSequence<T>&, std::size_t);                                     \
  template Quadratic<T> poly_P<T>(const MomentSequence<T>&, std::size_t);                                         \
  template Quadratic<T> poly_Q<T>(const MomentSequence<T>&, std::size_t);                                         \
  template std::optional<T> matrix4_bound<T>(const MomentSequence<T>&, std::size_t);                              \
  template std::optional<DiscriminantDiagnostic<T>> discriminant_diagnostic<T>(const MomentSequence<T>&,         \
                                                                                 std::size_t);                    \
  template IntervalReport<T> interval_I2<T>(const MomentSequence<T>&, std::size_t, const ToleranceContext&,       \
                                            const PerturbationOptions&);                                          \
  template IntervalReport<T> interval_Ik<T>(const MomentSequence<T>&, std::size_t, std::size_t,                   \
                                            const ToleranceContext&, const PerturbationOptions&);                 \
  template IntervalReport<T> interval_Ik_for_weights<T>(const WeightSequence<T>&, std::size_t, std::size_t,       \
                                                        const ToleranceContext&, const PerturbationOptions&);     \
  template InteriorVerdict is_interior<T>(const MomentSequence<T>&, std::size_t, std::size_t,                     \
                                          const ToleranceContext&, const PerturbationOptions&);                   \
  template bool cofactor_identity_check<T>(const MomentSequence<T>&, std::size_t, std::size_t, const T&,          \
                                           const ToleranceContext&);

HANKELSHIFT_INSTANTIATE_PERTURBATION(Rational)
HANKELSHIFT_INSTANTIATE_PERTURBATION(double)

}  // namespace hankelshift
