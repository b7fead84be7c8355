#include <gtest/gtest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "hankelshift/errors.hpp"
#include "hankelshift/measures.hpp"

using namespace hankelshift;
using Q = Rational;

namespace {

const ToleranceContext ctx{};

MomentSequence<Q> two_atom(std::size_t N) { return moments_of(AtomicMeasure<Q>({Q(1), Q(4)}, {Q(1, 2), Q(1, 2)}), N); }

MomentSequence<Q> bergman(std::size_t N) {
  std::vector<Q> v;
  for (std::size_t n = 0; n <= N; ++n) v.emplace_back(1, n + 1);
  return MomentSequence<Q>(v);
}

MomentSequence<double> to_float(const MomentSequence<Q>& g) {
  std::vector<double> v;
  for (const auto& x : g.values()) v.push_back(x.get_d());
  return MomentSequence<double>(v);
}

}  // namespace

TEST(Measure, Validation) {
  EXPECT_THROW(AtomicMeasure<Q>({}, {}), InputError);
  EXPECT_THROW(AtomicMeasure<Q>({Q(1)}, {Q(1), Q(2)}), InputError);
  EXPECT_THROW(AtomicMeasure<Q>({Q(-1)}, {Q(1)}), InputError);
  EXPECT_THROW(AtomicMeasure<Q>({Q(2), Q(1)}, {Q(1), Q(1)}), InputError);
  EXPECT_THROW(AtomicMeasure<Q>({Q(1)}, {Q(0)}), InputError);
  EXPECT_EQ(AtomicMeasure<Q>({Q(0), Q(1)}, {Q(1, 4), Q(3, 4)}).total_mass(), Q(1));
}

TEST(MomentsOf, Examples) {
  const auto dirac = moments_of(AtomicMeasure<Q>({Q(1)}, {Q(1)}), 5);
  for (const auto& x : dirac.values()) EXPECT_EQ(x, Q(1));
  const auto g = two_atom(4);
  EXPECT_EQ(std::vector<Q>(g.values().begin(), g.values().end()),
            (std::vector<Q>{Q(1), Q(5, 2), Q(17, 2), Q(65, 2), Q(257, 2)}));
  const auto z = moments_of(AtomicMeasure<Q>({Q(0)}, {Q(2)}), 3);
  EXPECT_EQ(std::vector<Q>(z.values().begin(), z.values().end()), (std::vector<Q>{Q(2), Q(0), Q(0), Q(0)}));
}

TEST(Recursion, TwoAtoms) {
  const auto r = detect_recursion(two_atom(8), 3, ctx);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->order, 2u);
  EXPECT_EQ(r->coeffs, (std::vector<Q>{Q(-4), Q(5)}));
}

TEST(Recursion, Constant) {
  const auto r = detect_recursion(MomentSequence<Q>(std::vector<Q>(8, Q(1))), 3, ctx);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->order, 1u);
  EXPECT_EQ(r->coeffs, (std::vector<Q>{Q(1)}));
}

TEST(Recursion, BergmanHasNone) {
  EXPECT_FALSE(detect_recursion(bergman(8), 4, ctx));
  EXPECT_FALSE(detect_recursion(to_float(bergman(8)), 4, ctx));
}

TEST(Recursion, NeedsHorizon) { EXPECT_THROW(detect_recursion(bergman(5), 3, ctx), HorizonError); }

TEST(Recursion, HoldsAcrossHorizon) {
  oracle::Gen gen(41);
  for (int i = 0; i < 40; ++i) {
    const auto mu = gen.measure(static_cast<std::size_t>(gen.uniform(1, 4)), i % 2 == 0);
    const auto g = moments_of(mu, 10);
    const auto r = detect_recursion(g, 5, ctx);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->order, mu.size());
    for (std::size_t p = 0; p + r->order <= 10; ++p) {
      Q s(0);
      for (std::size_t j = 0; j < r->order; ++j) s += r->coeffs[j] * g[p + j];
      EXPECT_EQ(s, g[p + r->order]);
    }
  }
}

TEST(FiniteMass, Examples) {
  const auto a = is_finite_mass(two_atom(8), ctx);
  EXPECT_TRUE(a.finite);
  ASSERT_TRUE(a.witness);
  EXPECT_EQ(*a.witness, (BlockIndex{0, 2}));
  const auto b = is_finite_mass(MomentSequence<Q>(std::vector<Q>(6, Q(1))), ctx);
  ASSERT_TRUE(b.witness);
  EXPECT_EQ(*b.witness, (BlockIndex{0, 1}));
  EXPECT_FALSE(is_finite_mass(bergman(12), ctx).finite);
}

TEST(FiniteMass, FloatBergmanIsNotFinite) {
  const auto v = is_finite_mass(to_float(bergman(12)), ctx);
  EXPECT_FALSE(v.finite);
}

TEST(FiniteMass, RejectsNonStieltjes) {
  EXPECT_THROW(is_finite_mass(MomentSequence<Q>({Q(1), Q(2), Q(1), Q(1), Q(1)}), ctx), PreconditionError);
}

TEST(Recover, TwoAtoms) {
  const auto g = two_atom(8);
  const auto rec = recover_atoms(*detect_recursion(g, 3, ctx), g, ctx);
  ASSERT_TRUE(rec.measure);
  EXPECT_EQ(*rec.measure, AtomicMeasure<Q>({Q(1), Q(4)}, {Q(1, 2), Q(1, 2)}));
}

TEST(Recover, Dirac) {
  const MomentSequence<Q> ones(std::vector<Q>(6, Q(1)));
  EXPECT_EQ(*recover_atoms(*detect_recursion(ones, 2, ctx), ones, ctx).measure, AtomicMeasure<Q>({Q(1)}, {Q(1)}));
  const auto g = moments_of(AtomicMeasure<Q>({Q(3)}, {Q(2)}), 6);
  Recursion<Q> r;
  r.order = 1;
  r.coeffs = {Q(3)};
  EXPECT_EQ(*recover_atoms(r, g, ctx).measure, AtomicMeasure<Q>({Q(3)}, {Q(2)}));
}

TEST(Recover, AtomAtZero) {
  const auto g = moments_of(AtomicMeasure<Q>({Q(0), Q(1)}, {Q(1, 4), Q(3, 4)}), 6);
  const auto rec = detect_recursion(g, 3, ctx);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->order, 2u);
  EXPECT_EQ(*recover_atoms(*rec, g, ctx).measure, AtomicMeasure<Q>({Q(0), Q(1)}, {Q(1, 4), Q(3, 4)}));
}

TEST(Recover, IrrationalAtomsAreEnclosed) {
  // atoms 2 -+ sqrt(2): t^2 - 4t + 2
  std::vector<Q> v{Q(2), Q(4)};
  for (int n = 2; n <= 8; ++n) v.push_back(4 * v[n - 1] - 2 * v[n - 2]);
  const MomentSequence<Q> g(v);
  const auto rec = detect_recursion(g, 3, ctx);
  ASSERT_TRUE(rec);
  const auto out = recover_atoms(*rec, g, ctx);
  ASSERT_EQ(out.atoms.size(), 2u);
  EXPECT_FALSE(out.atoms[0].pinned);
  EXPECT_NEAR(out.atoms[0].approx(), 2.0 - std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(out.atoms[1].approx(), 2.0 + std::sqrt(2.0), 1e-14);
  EXPECT_FALSE(out.measure);
  ASSERT_EQ(out.approx_densities.size(), 2u);
  EXPECT_NEAR(out.approx_densities[0], 1.0, 1e-12);
}

TEST(Recover, RejectsNegativeRoots) {
  // gamma_n = (-1)^n + 2^n + 2 has a recursion but a negative root
  std::vector<Q> v;
  for (int n = 0; n <= 8; ++n) v.push_back(Q(n % 2 == 0 ? 1 : -1) + Q(1L << n) + Q(2));
  const MomentSequence<Q> g(v);
  const auto rec = detect_recursion(g, 4, ctx);
  ASSERT_TRUE(rec);
  EXPECT_THROW(recover_atoms(*rec, g, ctx), PreconditionError);
}

TEST(Recover, RandomRoundTrip) {
  oracle::Gen gen(42);
  for (int i = 0; i < 60; ++i) {
    const auto mu = gen.measure(static_cast<std::size_t>(gen.uniform(1, 5)));
    const auto g = moments_of(mu, 12);
    const auto rec = detect_recursion(g, 5, ctx);
    ASSERT_TRUE(rec);
    const auto out = recover_atoms(*rec, g, ctx);
    ASSERT_TRUE(out.measure);
    EXPECT_EQ(*out.measure, mu);
    const auto fm = is_finite_mass(g, ctx);
    ASSERT_TRUE(fm.witness);
    EXPECT_EQ(fm.witness->k, mu.size());
  }
}

TEST(Recover, FloatRoundTrip) {
  oracle::Gen gen(43);
  for (int i = 0; i < 30; ++i) {
    const auto mu = gen.measure(static_cast<std::size_t>(gen.uniform(1, 3)));
    const auto g = to_float(moments_of(mu, 10));
    const auto rec = detect_recursion(g, 4, ctx);
    ASSERT_TRUE(rec);
    ASSERT_EQ(rec->order, mu.size());
    const auto out = recover_atoms(*rec, g, ctx);
    ASSERT_TRUE(out.measure);
    for (std::size_t j = 0; j < mu.size(); ++j) {
      EXPECT_NEAR(out.measure->atoms()[j], mu.atoms()[j].get_d(), 1e-7 * (1 + mu.atoms()[j].get_d()));
      EXPECT_NEAR(out.measure->densities()[j], mu.densities()[j].get_d(), 1e-7 * (1 + mu.densities()[j].get_d()));
    }
  }
}

TEST(Berger, Examples) {
  const auto ones = WeightSequence<Q>::from_squared(std::vector<Q>(6, Q(1)));
  EXPECT_TRUE(verify_berger(ones, AtomicMeasure<Q>({Q(1)}, {Q(1)}), ctx));
  const auto flat = WeightSequence<Q>::from_squared({Q(1, 4), Q(1), Q(1), Q(1), Q(1)});
  EXPECT_TRUE(verify_berger(flat, AtomicMeasure<Q>({Q(0), Q(1)}, {Q(3, 4), Q(1, 4)}), ctx));
  std::vector<Q> b;
  for (int n = 0; n < 6; ++n) b.emplace_back(n + 1, n + 2);
  EXPECT_FALSE(verify_berger(WeightSequence<Q>::from_squared(b), AtomicMeasure<Q>({Q(1)}, {Q(1)}), ctx));
}
