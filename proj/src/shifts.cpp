#include "hankelshift/shifts.hpp"

#include <algorithm>
#include <cmath>

namespace hankelshift {

template <typename T>
WeightSequence<T> WeightSequence<T>::from_squared(std::vector<T> squared) {
  for (std::size_t n = 0; n < squared.size(); ++n)
    if (!(squared[n] > 0)) throw InputError("weight alpha_" + std::to_string(n) + " must be positive");
  return WeightSequence(std::move(squared));
}

template <typename T>
WeightSequence<T> WeightSequence<T>::from_weights(const std::vector<T>& weights) {
  std::vector<T> squared;
  squared.reserve(weights.size());
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (!(weights[n] > 0)) throw InputError("weight alpha_" + std::to_string(n) + " must be positive");
    squared.push_back(weights[n] * weights[n]);
  }
  return WeightSequence(std::move(squared));
}

template <typename T>
double WeightSequence<T>::weight(std::size_t n) const {
  return std::sqrt(to_double(squared_[n]));
}

template <typename T>
T WeightSequence<T>::max_squared() const {
  if (squared_.empty()) return T(0);
  return *std::max_element(squared_.begin(), squared_.end());
}

template <typename T>
MomentSequence<T> weights_to_moments(const WeightSequence<T>& alpha) {
  std::vector<T> gamma;
  gamma.reserve(alpha.size() + 1);
  gamma.push_back(T(1));
  for (std::size_t n = 0; n < alpha.size(); ++n) gamma.push_back(T(alpha.squared(n) * gamma.back()));
  return MomentSequence<T>(std::move(gamma));
}

template <typename T>
WeightSequence<T> moments_to_weights(const MomentSequence<T>& gamma) {
  std::vector<T> squared;
  squared.reserve(gamma.horizon());
  for (std::size_t n = 0; n < gamma.horizon(); ++n) {
    if (!(gamma[n] > 0) || !(gamma[n + 1] > 0)) {
      throw PreconditionError("moment gamma_" + std::to_string(gamma[n] > 0 ? n + 1 : n) +
                              " is zero: a vanishing moment forces the whole tail to zero, so no "
                              "injective shift has these moments");
    }
    squared.push_back(T(gamma[n + 1] / gamma[n]));
  }
  return WeightSequence<T>::from_squared(std::move(squared));
}

namespace {

template <typename T>
bool weights_equal(const T& a, const T& b, const ToleranceContext& ctx) {
  const double scale = std::max(std::fabs(to_double(a)), std::fabs(to_double(b)));
  return is_zero(T(a - b), ctx, scale);
}

}  // namespace

template <typename T>
bool is_hyponormal(const WeightSequence<T>& alpha, const ToleranceContext& ctx) {
  for (std::size_t n = 0; n + 1 < alpha.size(); ++n) {
    if (alpha.squared(n) > alpha.squared(n + 1) && !weights_equal(alpha.squared(n), alpha.squared(n + 1), ctx))
      return false;
  }
  return true;
}

template <typename T>
HyponormalityVerdict<T> is_k_hyponormal(const WeightSequence<T>& alpha, std::size_t k, const ToleranceContext& ctx) {
  const auto v = is_k_positive(weights_to_moments(alpha), k, ctx);
  return {v.k, v.holds, v.horizon, v.first_failure, v.marginal};
}

namespace {

template <typename T>
void require_k_hyponormal(const WeightSequence<T>& alpha, std::size_t k, const ToleranceContext& ctx) {
  const auto v = is_k_hyponormal(alpha, k, ctx);
  if (!v.holds) {
    throw PreconditionError("shift is not " + std::to_string(k) + "-hyponormal: block n=" +
                            std::to_string(v.first_failure->n) + " fails");
  }
}

}  // namespace

template <typename T>
FlatnessReport flatness_check(const WeightSequence<T>& alpha, std::size_t k, const ToleranceContext& ctx) {
  if (k < 2) throw PreconditionError("flatness_check needs k >= 2");
  require_k_hyponormal(alpha, k, ctx);

  FlatnessReport report;
  const std::size_t N = alpha.size();
  for (std::size_t n = 0; n + 1 < N; ++n) {
    if (weights_equal(alpha.squared(n), alpha.squared(n + 1), ctx)) {
      report.first_pair = n;
      break;
    }
  }
  report.flat_pair_found = report.first_pair.has_value();
  if (!report.flat_pair_found) {
    report.notes.push_back("no equal adjacent weights on the horizon");
    return report;
  }
  // The flat value is read from the pair itself; when n0 = 0 it is alpha_1 as well.
  const T& flat = alpha.squared(*report.first_pair + 1);
  for (std::size_t n = 1; n < N; ++n)
    if (!weights_equal(alpha.squared(n), flat, ctx)) report.mismatches.push_back(n);
  report.propagation_verified = report.mismatches.empty();
  report.alpha0_exception = !weights_equal(alpha.squared(0), flat, ctx);
  report.horizon_edge_only = report.mismatches.size() == 1 && report.mismatches.front() == N - 1;
  if (report.alpha0_exception) report.notes.push_back("alpha_0 differs from the flat tail (allowed)");
  if (report.horizon_edge_only) report.notes.push_back("only the last weight breaks the tail; finite data cannot force it");
  return report;
}

template <typename T>
ShiftPropagationReport<T> propagation_for_shift(const WeightSequence<T>& alpha, std::size_t k, std::size_t p,
                                                const ToleranceContext& ctx) {
  if (p >= k) {
    throw PreconditionError("propagation_for_shift needs p < k (got p=" + std::to_string(p) +
                            ", k=" + std::to_string(k) + "); the positivity order must exceed the vanishing order");
  }
  require_k_hyponormal(alpha, k, ctx);
  const auto gamma = weights_to_moments(alpha);

  ShiftPropagationReport<T> report;
  report.k = k;
  report.p = p;
  report.propagation = propagation_report(gamma, p + 1, ctx);

  const std::size_t max_order = gamma.horizon() / 2;
  report.positive_through = p;
  bool ok = true;
  for (std::size_t order = p; order <= max_order && ok; ++order) {
    ok = is_k_positive(gamma, order, ctx).holds;
    if (ok) report.positive_through = order;
  }
  report.all_orders_positive = ok && report.positive_through == max_order;
  if (report.propagation.vanishing_found) {
    report.notes.push_back("k-hyponormal up to horizon for every order " + std::to_string(p) + ".." +
                           std::to_string(report.positive_through) +
                           "; subnormality itself is not certifiable from finite data");
  } else {
    report.notes.push_back("hypothesis not triggered: no vanishing order-" + std::to_string(p) + " determinant");
  }
  return report;
}

#define HANKELSHIFT_INSTANTIATE_SHIFTS(T)                                                                       \
  template class WeightSequence<T>;                                                                             \
  template MomentSequence<T> weights_to_moments<T>(const WeightSequence<T>&);                                   \
  template WeightSequence<T> moments_to_weights<T>(const MomentSequence<T>&);                                   \
  template bool is_hyponormal<T>(const WeightSequence<T>&, const ToleranceContext&);                            \
  template HyponormalityVerdict<T> is_k_hyponormal<T>(const WeightSequence<T>&, std::size_t,                    \
                                                      const ToleranceContext&);                                 \
  template FlatnessReport flatness_check<T>(const WeightSequence<T>&, std::size_t, const ToleranceContext&);    \
  template ShiftPropagationReport<T> propagation_for_shift<T>(const WeightSequence<T>&, std::size_t, std::size_t, \
                                                              const ToleranceContext&);

HANKELSHIFT_INSTANTIATE_SHIFTS(Rational)
HANKELSHIFT_INSTANTIATE_SHIFTS(double)

}  // namespace hankelshift
