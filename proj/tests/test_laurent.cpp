#include <gtest/gtest.h>

#include "germrh/laurent.hpp"
#include "germrh/torsor.hpp"

namespace germrh {
namespace {

struct Series : ::testing::Test {
  Ring R = make_ring(3, 3, 1, 8);
  int cap = R->max_prec;
  int W = 24;
  RLaurent T(int k, const RElem& c) const { return RLaurent::monomial(R, k, c, cap, W); }
  RLaurent T(int k) const { return T(k, RElem::one(R)); }
  RLaurent one() const { return RLaurent::one(R, cap, W); }
  RElem pi(int k = 1) const { return RElem::pi_power(R, k); }
  KLaurent t(int k, KElem c = 1) const { return KLaurent::monomial(R, k, c, W); }
};

TEST_F(Series, GeometricInverse) {
  RLaurent u = one() + T(1);
  RLaurent v = u.invert_unit();
  EXPECT_TRUE((u * v).agrees(one()));
  // coefficients alternate +1, -1
  for (int k = 0; k <= 6; ++k) EXPECT_TRUE(v.coeff(k) == RElem::from_int(R, k % 2 ? -1 : 1).with_prec(v.coeff(k).prec())) << k;
  EXPECT_TRUE(one().invert_unit().agrees(one()));
}

TEST_F(Series, InvertOnePlusPiT) {
  RLaurent u = one() + T(1, pi());
  RLaurent v = u.invert_unit();
  EXPECT_TRUE((u * v).agrees(one()));
  for (int k = 0; k <= 5; ++k) {
    RElem want = pi(k) * RElem::from_int(R, k % 2 ? -1 : 1);
    EXPECT_TRUE(v.coeff(k).agrees(want)) << k;
  }
}

TEST_F(Series, SeriesRoot) {
  EXPECT_TRUE(one().series_root(2).agrees(one()));
  RLaurent u = one() + T(1);
  RLaurent s = u.series_root(2);
  EXPECT_TRUE(s.pow(2).agrees(u));
  EXPECT_EQ(s.coeff(0).residue(), 1);
  // 1/2 = 2 in F_3
  EXPECT_EQ(s.coeff(1).residue(), 2);
  EXPECT_TRUE(u.series_root(1).agrees(u));
  EXPECT_THROW(u.series_root(3), Error);
}

TEST_F(Series, MonomialSubstitution) {
  EXPECT_TRUE(T(1).substitute(T(3)).agrees(T(3)));
  EXPECT_TRUE((T(1) + T(3)).substitute(T(3)).agrees(T(3) + T(9)));
  RLaurent u = one() + T(2, pi()) + T(-1, pi(2));
  EXPECT_TRUE(u.substitute(T(1)).agrees(u));
}

TEST_F(Series, InverseSubstitution) {
  // T = Z^3 (1 + pi Z^-1 + Z): then T^-1 * T = 1
  RLaurent phi = T(3) * (one() + T(-1, pi()) + T(1));
  RLaurent inv = T(-1).substitute(phi);
  EXPECT_TRUE((inv * phi).agrees(one()));
}

TEST_F(Series, SubstituteIsMultiplicative) {
  RLaurent phi = T(1) * (one() + T(1) + T(-1, pi(2)));
  RLaurent u = one() + T(1) + T(-2, pi());
  RLaurent v = one() + T(2, pi()) + T(3);
  EXPECT_TRUE((u * v).substitute(phi).agrees(u.substitute(phi) * v.substitute(phi)));
}

TEST_F(Series, BinomialPower) {
  RLaurent B = T(1, pi()) + T(2);
  EXPECT_TRUE(B.binom_power(0, 1).agrees(one()));
  EXPECT_TRUE(B.binom_power(1, 1).agrees(one() + B));
  RLaurent h = B.binom_power(1, 2);
  EXPECT_TRUE(h.pow(2).agrees(one() + B));
  EXPECT_TRUE((B.binom_power(1, 2) * B.binom_power(-1, 2)).agrees(one()));
}

TEST_F(Series, ResidueSeries) {
  EXPECT_TRUE((one() + T(1, pi())).residue_series() == KLaurent::monomial(R, 0, 1, W));
  EXPECT_TRUE(T(-4).residue_series() == t(-4));
  EXPECT_TRUE((one() + T(2, pi(6))).residue_series() == KLaurent::monomial(R, 0, 1, W));
}

TEST_F(Series, ArtinSchreierReduction) {
  ASReduction a = as_reduce(t(-3));
  EXPECT_TRUE(a.rep == t(-1));
  EXPECT_EQ(a.m, -1);
  ASReduction b = as_reduce(t(2));
  EXPECT_TRUE(b.zero_class);
  EXPECT_FALSE(b.m.has_value());
  ASReduction c = as_reduce(t(-2));
  EXPECT_TRUE(c.rep == t(-2));
  EXPECT_EQ(c.m, -2);
  // witness identity u = rep + w^p - w
  KLaurent u = t(-9, 2) + t(-2) + t(4) + t(0, 1);
  ASReduction d = as_reduce(u);
  EXPECT_TRUE((d.rep + d.witness.pow(3) - d.witness).agrees(u));
  EXPECT_EQ(d.m, -2);
}

TEST_F(Series, PthPowerTest) {
  EXPECT_TRUE(t(3).is_pth_power());
  EXPECT_FALSE(t(1).is_pth_power());
  EXPECT_TRUE((t(0) + t(3) + t(6)).is_pth_power());
}

TEST_F(Series, StripRemovesMonomialPower) {
  RLaurent v = one() + T(2);
  StripWitness sw = strip_pth_powers(T(3) * v);
  EXPECT_TRUE((sw.u * sw.w.invert_unit().pow(3)).agrees(T(3) * v));
  // the stripped unit keeps v's conductor variable
  EXPECT_EQ(sw.info.outcome, StripOutcome::ResidueNotPower);
  EXPECT_EQ(sw.info.m, 2);
}

TEST_F(Series, StripOnePlusZSix) {
  // 1 + Z^6 = (1 + Z^2)^3 - 3 Z^2 - 3 Z^4
  StripWitness sw = strip_pth_powers(one() + T(6));
  EXPECT_TRUE((sw.u * sw.w.invert_unit().pow(3)).agrees(one() + T(6)));
  EXPECT_EQ(sw.info.outcome, StripOutcome::CoprimeLevel);
  EXPECT_EQ(sw.info.m, 2);
  EXPECT_EQ(sw.info.level, R->e);
  // the remaining coefficient at Z^2 is -3 times a unit
  EXPECT_EQ(sw.u.val_at(2), R->e);
}

TEST_F(Series, StripFixedPoint) {
  RLaurent u = one() + T(2, pi(3));
  StripWitness sw = strip_pth_powers(u);
  EXPECT_TRUE(sw.u.agrees(u));
  EXPECT_EQ(sw.info.m, 2);
  EXPECT_EQ(sw.info.level, 3);
}

TEST_F(Series, JsonRoundTrip) {
  RLaurent u = one() + T(2, pi(3)) + T(-1, RElem::from_int(R, 5));
  RLaurent back = RLaurent::from_json(R, u.to_json(), cap, W);
  EXPECT_TRUE(back.agrees(u));
}

}  // namespace
}  // namespace germrh
