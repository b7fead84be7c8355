#include <gtest/gtest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "hankelshift/errors.hpp"
#include "hankelshift/measures.hpp"
#include "hankelshift/perturbation.hpp"

using namespace hankelshift;
using Q = Rational;

namespace {

const ToleranceContext ctx{};

MomentSequence<Q> bergman(std::size_t N) {
  std::vector<Q> v;
  for (std::size_t n = 0; n <= N; ++n) v.emplace_back(1, n + 1);
  return MomentSequence<Q>(v);
}

MomentSequence<Q> ones(std::size_t N) { return MomentSequence<Q>(std::vector<Q>(N + 1, Q(1))); }

MomentSequence<Q> geometric(std::size_t N, Q q, Q scale = Q(1)) {
  std::vector<Q> v;
  Q p(scale);
  for (std::size_t n = 0; n <= N; ++n, p *= q) v.push_back(p);
  return MomentSequence<Q>(v);
}

MomentSequence<Q> two_atom(std::size_t N) { return moments_of(AtomicMeasure<Q>({Q(1), Q(4)}, {Q(1, 2), Q(1, 2)}), N); }

MomentSequence<double> to_float(const MomentSequence<Q>& g) {
  std::vector<double> v;
  for (const auto& x : g.values()) v.push_back(x.get_d());
  return MomentSequence<double>(v);
}

// Brute-force feasible t-range of the perturbed blocks n <= l, by Jacobi eigenvalues.
std::optional<std::pair<double, double>> scan(const MomentSequence<Q>& gamma, std::size_t l, std::size_t k,
                                              double cap, double step = 1e-5) {
  const auto g = oracle::to_doubles(std::vector<Q>(gamma.values().begin(), gamma.values().end()));
  auto feasible = [&](double t) {
    for (std::size_t n = 0; n <= l && n + 2 * k < g.size(); ++n) {
      std::vector<std::vector<double>> b(k + 1, std::vector<double>(k + 1));
      for (std::size_t i = 0; i <= k; ++i)
        for (std::size_t j = 0; j <= k; ++j) {
          const std::size_t m = n + i + j;
          b[i][j] = m <= l ? g[m] : t * g[m];
        }
      if (!oracle::psd_double(b)) return false;
    }
    return true;
  };
  return oracle::scan_interval(feasible, 0.0, cap, step);
}

}  // namespace

TEST(PerturbMoments, Examples) {
  const auto p = perturb_moments(bergman(4), PerturbationSpec<Q>{1, Q(2)});
  EXPECT_EQ(std::vector<Q>(p.values().begin(), p.values().end()),
            (std::vector<Q>{Q(1), Q(1, 2), Q(2, 3), Q(1, 2), Q(2, 5)}));
  EXPECT_EQ(perturb_moments(bergman(4), PerturbationSpec<Q>{2, Q(1)}), bergman(4));
  const auto z = perturb_moments(bergman(4), PerturbationSpec<Q>{2, Q(0)});
  EXPECT_EQ(z[2], Q(1, 3));
  EXPECT_EQ(z[3], Q(0));
  EXPECT_THROW(perturb_moments(bergman(4), PerturbationSpec<Q>{0, Q(1)}), PreconditionError);
  EXPECT_THROW(perturb_moments(bergman(4), PerturbationSpec<Q>{5, Q(1)}), PreconditionError);
}

TEST(PerturbWeights, Examples) {
  const auto a = perturb_weights(WeightSequence<Q>::from_squared(std::vector<Q>(4, Q(1))), PerturbationSpec<Q>{2, Q(4)});
  EXPECT_EQ(a.squared(), (std::vector<Q>{Q(1), Q(1), Q(4), Q(1)}));
  std::vector<Q> b;
  for (int n = 0; n < 5; ++n) b.emplace_back(n + 1, n + 2);
  const auto w = WeightSequence<Q>::from_squared(b);
  EXPECT_EQ(perturb_weights(w, PerturbationSpec<Q>{1, Q(1)}), w);
  EXPECT_EQ(perturb_weights(w, PerturbationSpec<Q>{1, Q(1, 2)}).squared(1), Q(1, 3));
  EXPECT_THROW(perturb_weights(w, PerturbationSpec<Q>{1, Q(0)}), PreconditionError);
}

TEST(PerturbWeights, MatchesMomentPerturbation) {
  // scaling alpha_l^2 by t scales every gamma_n, n > l, by t
  std::vector<Q> b;
  for (int n = 0; n < 6; ++n) b.emplace_back(n + 1, n + 2);
  const auto w = WeightSequence<Q>::from_squared(b);
  const PerturbationSpec<Q> spec{2, Q(3, 7)};
  EXPECT_EQ(weights_to_moments(perturb_weights(w, spec)), perturb_moments(weights_to_moments(w), spec));
}

TEST(TruncatedBlock, Examples) {
  const auto b = bergman(6);
  EXPECT_EQ(truncated_block(b, 0, 1, 1), (Matrix<Q>{{Q(1), Q(1, 2)}, {Q(1, 2), Q(0)}}));
  const auto h = truncated_block(b, 2, 2, 2);
  EXPECT_EQ(h(0, 0), Q(1, 3));
  for (std::size_t i = 0; i <= 2; ++i)
    for (std::size_t j = 0; j <= 2; ++j)
      if (i + j > 0) EXPECT_EQ(h(i, j), Q(0));
  EXPECT_EQ(truncated_block(b, 0, 2, 4), block(b, 0, 2));
  EXPECT_THROW(truncated_block(b, 3, 1, 2), PreconditionError);
}

TEST(I1, Examples) {
  EXPECT_EQ(interval_I1(bergman(4), 1), Interval<Q>(Q(3, 4), Q(9, 8)));
  for (std::size_t l = 1; l <= 3; ++l) {
    EXPECT_EQ(interval_I1(geometric(6, Q(5, 3)), l), Interval<Q>(Q(1), Q(1)));
    EXPECT_EQ(interval_I1(geometric(6, Q(3), Q(2)), l), Interval<Q>(Q(1), Q(1)));
  }
  EXPECT_THROW(interval_I1(bergman(4), 3), HorizonError);
}

TEST(I1, FloatCollapsedIntervalSurvivesRounding) {
  std::vector<double> v;
  double p = 1.0;
  for (int n = 0; n <= 6; ++n, p *= 41.0 / 7.0) v.push_back(p);
  const auto I = interval_I1(MomentSequence<double>(v), 2);
  EXPECT_NEAR(I.lo(), 1.0, 1e-14);
  EXPECT_NEAR(I.hi(), 1.0, 1e-14);
}

TEST(I1, MatchesScanAndBisection) {
  oracle::Gen gen(51);
  for (int i = 0; i < 20; ++i) {
    const auto g = moments_of(gen.measure(static_cast<std::size_t>(gen.uniform(2, 5))), 6);
    for (std::size_t l = 1; l <= 3; ++l) {
      const auto I = interval_I1(g, l);
      const auto s = scan(g, l, 1, I.hi().get_d() * 1.25 + 0.01);
      ASSERT_TRUE(s);
      EXPECT_NEAR(s->first, I.lo().get_d(), 2e-5);
      EXPECT_NEAR(s->second, I.hi().get_d(), 2e-5);
      const auto r = interval_Ik(g, l, 1, ctx);
      EXPECT_NEAR(r.lower.approx(), I.lo().get_d(), 1e-9);
      EXPECT_NEAR(r.upper.approx(), I.hi().get_d(), 1e-9);
    }
  }
}

TEST(PolyP, Examples) {
  const auto P = poly_P(bergman(6), 2);
  EXPECT_EQ(P.a, Q(-1, 16));
  EXPECT_EQ(P.b, Q(1, 1) * Q(1, 3) * Q(1, 5) + 2 * Q(1, 2) * Q(1, 3) * Q(1, 4) - Q(1, 4) * Q(1, 5));
  EXPECT_EQ(P.c, Q(-1, 27));
  const auto O = poly_P(ones(6), 2);
  EXPECT_EQ(O.a, Q(-1));
  EXPECT_EQ(O.b, Q(2));
  EXPECT_EQ(O.c, Q(-1));
  const auto G = poly_P(geometric(6, Q(2)), 2);
  EXPECT_EQ(G.discriminant(), Q(0));
  EXPECT_EQ(G(Q(1)), Q(0));
}

TEST(PolyQ, Examples) {
  const auto O = poly_Q(ones(6), 2);
  EXPECT_EQ(O(Q(1)), Q(0));
  EXPECT_EQ(O.discriminant(), Q(0));
  const auto B = poly_Q(bergman(6), 1);
  const Q g0(1), g1(1, 2), g2(1, 3), g3(1, 4), g4(1, 5);
  EXPECT_EQ(B.a, -g2 * g2 * g2);
  EXPECT_EQ(B.b, g0 * g2 * g4 + 2 * g1 * g2 * g3 - g0 * g3 * g3);
  EXPECT_EQ(B.c, -g1 * g1 * g4);
  const auto G = poly_Q(geometric(6, Q(2)), 2);
  EXPECT_EQ(G.discriminant(), Q(0));
  EXPECT_EQ(G(Q(1)), Q(0));
}

TEST(PolyP, RootsBoundTheDeterminant) {
  // P(t) is the determinant of the perturbed block at anchor l-2
  oracle::Gen gen(52);
  for (int i = 0; i < 20; ++i) {
    const auto g = moments_of(gen.measure(static_cast<std::size_t>(gen.uniform(3, 5))), 8);
    const std::size_t l = 2 + static_cast<std::size_t>(i % 3);
    const Q t = gen.rational(1, 30, 20);
    const auto pg = perturb_moments(g, PerturbationSpec<Q>{l, t});
    EXPECT_EQ(poly_P(g, l)(t), oracle::det_cofactor(block(pg, l - 2, 2)));
    EXPECT_EQ(t * poly_Q(g, l)(t), oracle::det_cofactor(block(pg, l - 1, 2)));
  }
}

TEST(Matrix4, Examples) {
  const auto m = matrix4_bound(bergman(6), 1);
  ASSERT_TRUE(m);
  // scan the anchor-l block on its own
  const auto b6 = bergman(6);
  auto g = oracle::to_doubles(std::vector<Q>(b6.values().begin(), b6.values().end()));
  auto only_l = [&](double t) {
    std::vector<std::vector<double>> b(3, std::vector<double>(3));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) b[i][j] = i + j == 0 ? g[1] : t * g[1 + i + j];
    return oracle::psd_double(b);
  };
  const auto r = oracle::scan_interval(only_l, 0.0, 2.0, 1e-5);
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->second, m->get_d(), 2e-5);
  EXPECT_FALSE(matrix4_bound(ones(6), 1));
  const auto two = matrix4_bound(two_atom(6), 1);
  ASSERT_TRUE(two);
  const auto t6 = two_atom(6);
  g = oracle::to_doubles(std::vector<Q>(t6.values().begin(), t6.values().end()));
  const auto r2 = oracle::scan_interval(only_l, 0.0, 2.0, 1e-5);
  ASSERT_TRUE(r2);
  EXPECT_NEAR(r2->second, two->get_d(), 2e-5 * std::max(1.0, two->get_d()));
}

TEST(I2, Ones) {
  const auto r = interval_I2(ones(8), 3, ctx);
  EXPECT_NEAR(r.lower.approx(), 1.0, 1e-12);
  EXPECT_EQ(r.upper.approx(), 1.0);
  EXPECT_TRUE(r.contains_one);
  EXPECT_FALSE(r.one_interior);
}

TEST(I2, BergmanAgreesWithBisection) {
  const auto g = bergman(8);
  const auto a = interval_I2(g, 3, ctx);
  const auto b = interval_Ik(g, 3, 2, ctx);
  EXPECT_NEAR(a.lower.approx(), b.lower.approx(), 1e-9);
  EXPECT_NEAR(a.upper.approx(), b.upper.approx(), 1e-9);
  EXPECT_NEAR(a.upper.approx(), 225.0 / 224.0, 1e-15);
  EXPECT_TRUE(a.one_interior);
  EXPECT_TRUE(discriminant_diagnostic(g, 3));
}

TEST(I2, TwoAtomsPinned) {
  const auto r = interval_I2(two_atom(8), 3, ctx);
  EXPECT_NEAR(r.lower.approx(), 1.0, 1e-12);
  EXPECT_NEAR(r.upper.approx(), 1.0, 1e-12);
  EXPECT_FALSE(r.one_interior);
}

TEST(I2, FirstBlockUsesCorrectedBound) {
  // Bergman l=3: anchor 0 needs t >= 35/36, above the I1 left ratio 15/16
  const auto r = interval_I2(bergman(8), 3, ctx);
  ASSERT_GE(r.per_block.size(), 1u);
  EXPECT_EQ(r.per_block[0].n, 0u);
  EXPECT_EQ(r.per_block[0].lower.lo, Q(35, 36));
}

TEST(I2, RandomAgreesWithScan) {
  oracle::Gen gen(53);
  for (int i = 0; i < 10; ++i) {
    const auto g = moments_of(gen.measure(static_cast<std::size_t>(gen.uniform(3, 5))), 8);
    const std::size_t l = 3 + static_cast<std::size_t>(i % 2);
    const auto r = interval_I2(g, l, ctx);
    const auto s = scan(g, l, 2, r.upper.approx() * 1.25 + 0.01);
    ASSERT_TRUE(s);
    EXPECT_NEAR(s->first, r.lower.approx(), 2e-5);
    EXPECT_NEAR(s->second, r.upper.approx(), 2e-5);
  }
}

TEST(I2, Preconditions) {
  EXPECT_THROW(interval_I2(bergman(6), 3, ctx), HorizonError);
  EXPECT_THROW(interval_I2(MomentSequence<Q>({Q(1), Q(2), Q(1), Q(1), Q(1), Q(1), Q(1), Q(1)}), 3, ctx),
               PreconditionError);
}

TEST(Ik, OnesCollapse) {
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto r = interval_Ik(ones(10), 2, k, ctx);
    EXPECT_NEAR(r.lower.approx(), 1.0, 1e-12);
    EXPECT_NEAR(r.upper.approx(), 1.0, 1e-12);
  }
}

TEST(Ik, Nesting) {
  oracle::Gen gen(54);
  for (int i = 0; i < 10; ++i) {
    const auto g = moments_of(gen.measure(5), 12);
    const std::size_t l = 1 + static_cast<std::size_t>(i % 3);
    const auto i1 = interval_I1(g, l);
    double lo = i1.lo().get_d(), hi = i1.hi().get_d();
    for (std::size_t k = 1; k <= 4; ++k) {
      const auto r = interval_Ik(g, l, k, ctx);
      EXPECT_TRUE(r.contains_one);
      EXPECT_GE(r.lower.approx(), lo - 1e-12);
      EXPECT_LE(r.upper.approx(), hi + 1e-12);
      lo = r.lower.approx();
      hi = r.upper.approx();
    }
  }
}

TEST(Ik, WeightsWarnWhenZeroAdmissible) {
  // flat shift: perturbing alpha_1 of (1/4, 1, 1, ...) keeps every block PSD down to t = 0
  const auto w = WeightSequence<Q>::from_squared({Q(1, 4), Q(1), Q(1), Q(1), Q(1), Q(1)});
  const auto r = interval_Ik_for_weights(w, 1, 1, ctx);
  if (r.lower.pinned && r.lower.lo == Q(0)) {
    bool warned = false;
    for (const auto& n : r.notes) warned = warned || n.find("warning") != std::string::npos;
    EXPECT_TRUE(warned);
  }
  EXPECT_TRUE(r.contains_one);
}

TEST(Interior, Examples) {
  const auto b = is_interior(bergman(8), 2, 2, ctx);
  EXPECT_TRUE(b.pd_all);
  EXPECT_TRUE(b.interior);
  EXPECT_TRUE(b.agree);
  const auto t = is_interior(two_atom(8), 2, 2, ctx);
  EXPECT_FALSE(t.pd_all);
  EXPECT_FALSE(t.interior);
  const auto o = is_interior(ones(6), 2, 1, ctx);
  EXPECT_FALSE(o.pd_all);
  EXPECT_FALSE(o.interior);
}

TEST(Interior, UntouchedSingularBlockIsAnIncident) {
  // block (0,1) singular but not reached by the perturbation at l=2
  const MomentSequence<Q> g({Q(1), Q(1), Q(1), Q(2), Q(5), Q(14)});
  const auto v = is_interior(g, 2, 1, ctx);
  EXPECT_FALSE(v.pd_all);
  EXPECT_TRUE(v.interior);
  EXPECT_FALSE(v.agree);
  ASSERT_TRUE(v.failing_block);
  EXPECT_EQ(*v.failing_block, 0u);
}

TEST(Interior, FloatNearSingularIsFlagged) {
  const auto v = is_interior(to_float(two_atom(8)), 2, 2, ctx);
  EXPECT_FALSE(v.interior);
  EXPECT_TRUE(v.marginal);
}

TEST(Cofactor, Examples) {
  oracle::Gen gen(55);
  for (int i = 0; i < 30; ++i) {
    std::vector<Q> v;
    for (int n = 0; n <= 8; ++n) v.push_back(gen.rational(1, 40, 9));
    const MomentSequence<Q> g(v);
    EXPECT_TRUE(cofactor_identity_check(g, 2, 2, Q(1, 3), ctx));
    EXPECT_TRUE(cofactor_identity_check(g, 2, 2, Q(1), ctx));
    EXPECT_TRUE(cofactor_identity_check(g, 2, 2, Q(0), ctx));
    EXPECT_TRUE(cofactor_identity_check(g, 1, 3, gen.rational(0, 50, 7), ctx));
  }
  EXPECT_THROW(cofactor_identity_check(bergman(4), 2, 2, Q(1), ctx), HorizonError);
}

TEST(Options, Validate) {
  PerturbationOptions o;
  EXPECT_NO_THROW(o.validate());
  o.bisect_eps = 0;
  EXPECT_THROW(o.validate(), InputError);
}
