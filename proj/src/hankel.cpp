#include "hankelshift/hankel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hankelshift {

template <typename T>
MomentSequence<T>::MomentSequence(std::vector<T> values) : values_(std::move(values)) {
  if (values_.empty()) throw InputError("moment sequence is empty");
  if (!(values_[0] > 0)) throw InputError("moment sequence needs gamma_0 > 0");
  for (std::size_t n = 1; n < values_.size(); ++n) {
    if (values_[n] < 0) throw InputError("moment gamma_" + std::to_string(n) + " is negative");
  }
}

template <typename T>
bool MomentSequence<T>::strictly_positive() const {
  return std::all_of(values_.begin(), values_.end(), [](const T& x) { return x > 0; });
}

template <typename T>
double MomentSequence<T>::sup_norm() const {
  double best = 0.0;
  for (const auto& x : values_) best = std::max(best, std::fabs(to_double(x)));
  return best;
}

template <typename T>
Matrix<T> block(const MomentSequence<T>& gamma, std::size_t n, std::size_t k) {
  const BlockIndex idx{n, k};
  if (!idx.feasible(gamma.horizon())) throw HorizonError(idx.last_index(), gamma.horizon());
  Matrix<T> m(k + 1);
  for (std::size_t i = 0; i <= k; ++i)
    for (std::size_t j = 0; j <= k; ++j) m(i, j) = gamma[n + i + j];
  return m;
}

template <typename T>
PositivityVerdict<T> is_k_positive(const MomentSequence<T>& gamma, std::size_t k, const ToleranceContext& ctx) {
  const std::size_t N = gamma.horizon();
  if (2 * k > N) throw HorizonError(2 * k, N);
  PositivityVerdict<T> verdict;
  verdict.k = k;
  verdict.horizon = N;
  verdict.holds = true;
  for (std::size_t n = 0; n + 2 * k <= N; ++n) {
    auto blk = block(gamma, n, k);
    const Decision d = psd_decision(blk, ctx);
    if (d.marginal) verdict.marginal.push_back({n, k});
    if (!d.holds) {
      verdict.holds = false;
      verdict.first_failure = BlockIndex{n, k};
      verdict.witness = std::move(blk);
      break;
    }
  }
  return verdict;
}

template <typename T>
bool log_convexity(const MomentSequence<T>& gamma, const ToleranceContext& ctx) {
  for (std::size_t n = 0; n + 2 <= gamma.horizon(); ++n) {
    const T lhs = gamma[n] * gamma[n + 2];
    const T rhs = gamma[n + 1] * gamma[n + 1];
    const T gap = lhs - rhs;
    const double scale = std::max(std::fabs(to_double(lhs)), std::fabs(to_double(rhs)));
    if (sign_of(gap, ctx, scale) < 0) return false;
  }
  return true;
}

template <typename T>
bool zero_moment_collapse(const MomentSequence<T>& gamma, const ToleranceContext& ctx) {
  const double scale = gamma.sup_norm();
  bool any_zero = false;
  bool tail_zero = true;
  for (std::size_t n = 0; n <= gamma.horizon(); ++n) {
    const bool z = is_zero(gamma[n], ctx, scale);
    any_zero = any_zero || z;
    if (n >= 1) tail_zero = tail_zero && z;
  }
  return !any_zero || tail_zero;
}

template <typename T>
bool det_vanishes(const T& det, const Matrix<T>& blk, const ToleranceContext& ctx) {
  return is_zero(det, ctx, blk.hadamard_bound());
}

namespace {

// Relative cancellation level below which a float condensation step is
// recomputed directly (about sqrt of the unit roundoff).
constexpr double kCancellationGuard = 1.5e-8;

}  // namespace

template <typename T>
DetTable<T> det_sequence(const MomentSequence<T>& gamma, std::size_t k, const ToleranceContext& ctx) {
  const std::size_t N = gamma.horizon();
  if (2 * k > N) throw HorizonError(2 * k, N);

  // Order 0 holds the moments themselves; order -1 (empty blocks) is all ones.
  std::vector<T> minus2(N + 3, T(1));
  DetTable<T> cur;
  cur.k = 0;
  cur.dets.assign(gamma.values().begin(), gamma.values().end());
  cur.method.assign(N + 1, Method::direct);

  for (std::size_t j = 1; j <= k; ++j) {
    const DetTable<T> prev = std::move(cur);
    cur = DetTable<T>{};
    cur.k = j;
    const std::size_t anchors = N - 2 * j + 1;
    cur.dets.reserve(anchors);
    cur.method.reserve(anchors);
    for (std::size_t i = 0; i < anchors; ++i) {
      // det[M]^i_j * det[M]^{i+2}_{j-2} = det[M]^i_{j-1} det[M]^{i+2}_{j-1} - (det[M]^{i+1}_{j-1})^2
      const T& divisor = minus2[i + 2];
      const T a = prev.dets[i] * prev.dets[i + 2];
      const T b = prev.dets[i + 1] * prev.dets[i + 1];
      bool direct = false;
      if constexpr (is_exact_v<T>) {
        direct = divisor == 0;
      } else {
        const double div_scale = j >= 2 ? block(gamma, i + 2, j - 2).hadamard_bound() : 1.0;
        const double terms = std::fabs(a) + std::fabs(b);
        direct = is_zero(divisor, ctx, div_scale) || std::fabs(a - b) < kCancellationGuard * terms;
      }
      if (direct) {
        cur.dets.push_back(det_bareiss(block(gamma, i, j)));
        cur.method.push_back(Method::direct);
      } else {
        cur.dets.push_back(T((a - b) / divisor));
        cur.method.push_back(Method::condensation);
      }
    }
    minus2 = prev.dets;
  }
  return cur;
}

template <typename T>
PropagationReport<T> propagation_report(const MomentSequence<T>& gamma, std::size_t k, const ToleranceContext& ctx) {
  if (k == 0) throw PreconditionError("propagation_report needs k >= 1");
  const auto verdict = is_k_positive(gamma, k, ctx);
  if (!verdict.holds) {
    throw PreconditionError("sequence is not " + std::to_string(k) + "-positive: block n=" +
                            std::to_string(verdict.first_failure->n) + " is not positive semi-definite");
  }
  const std::size_t N = gamma.horizon();
  PropagationReport<T> report;
  report.k = k;
  report.order = k - 1;
  report.table = det_sequence(gamma, k - 1, ctx);

  const std::size_t anchors = report.table.dets.size();
  std::vector<bool> zero(anchors);
  for (std::size_t n = 0; n < anchors; ++n) {
    const auto blk = block(gamma, n, k - 1);
    const Decision d = zero_decision(report.table.dets[n], ctx, blk.hadamard_bound());
    zero[n] = d.holds;
    report.marginal = report.marginal || d.marginal;
    if (zero[n] && !report.first_zero) report.first_zero = n;
  }
  report.vanishing_found = report.first_zero.has_value();
  if (!report.vanishing_found) {
    report.notes.push_back("no vanishing order-" + std::to_string(k - 1) +
                           " determinant on the horizon; hypothesis not triggered");
    return report;
  }
  for (std::size_t n = 1; n < anchors; ++n)
    if (!zero[n]) report.nonvanishing.push_back(n);
  report.conclusion_verified = report.nonvanishing.empty();
  report.anchor_zero_nonzero = !zero[0];
  // Identity chaining reaches anchors 1..N-2k+1; the last order-(k-1) anchor is
  // covered by no k-block in which it is the middle minor.
  const std::size_t forced_last = N + 1 - 2 * k;
  report.horizon_edge_only = !report.nonvanishing.empty() &&
                             std::all_of(report.nonvanishing.begin(), report.nonvanishing.end(),
                                         [&](std::size_t n) { return n > forced_last; });
  if (report.anchor_zero_nonzero) {
    report.notes.push_back("anchor n=0 is exempt: its determinant is nonzero while anchors n>=1 vanish");
  }
  if (report.horizon_edge_only) {
    report.notes.push_back("only the last anchor fails to vanish; finite data cannot force it");
  }
  return report;
}

#define HANKELSHIFT_INSTANTIATE_HANKEL(T)                                                                      \
  template class MomentSequence<T>;                                                                            \
  template Matrix<T> block<T>(const MomentSequence<T>&, std::size_t, std::size_t);                             \
  template PositivityVerdict<T> is_k_positive<T>(const MomentSequence<T>&, std::size_t, const ToleranceContext&); \
  template bool log_convexity<T>(const MomentSequence<T>&, const ToleranceContext&);                           \
  template bool zero_moment_collapse<T>(const MomentSequence<T>&, const ToleranceContext&);                    \
  template DetTable<T> det_sequence<T>(const MomentSequence<T>&, std::size_t, const ToleranceContext&);        \
  template bool det_vanishes<T>(const T&, const Matrix<T>&, const ToleranceContext&);                          \
  template PropagationReport<T> propagation_report<T>(const MomentSequence<T>&, std::size_t, const ToleranceContext&);

HANKELSHIFT_INSTANTIATE_HANKEL(Rational)
HANKELSHIFT_INSTANTIATE_HANKEL(double)

}  // namespace hankelshift
