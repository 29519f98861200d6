#include <gtest/gtest.h>

#include "germrh/propagation.hpp"

namespace germrh {
namespace {

TorsorData et(int m, int p = 3, int r = 3) { return abstract_torsor(GroupTag::etale(), m, p, r); }
TorsorData mu(int m, int p = 3, int r = 3) { return abstract_torsor(GroupTag::mu(), m, p, r); }
TorsorData hn(int n, int m, int p = 3, int r = 3) { return abstract_torsor(GroupTag::hn(n), m, p, r); }

TEST(Propagate, EtaleEtale) {
  PPResult res = propagate({et(-5), et(-2), 3, 3});
  EXPECT_EQ(res.m1p, -2);
  EXPECT_EQ(res.m2p, -11);
  EXPECT_EQ(res.c1p, 2);
  EXPECT_EQ(res.c2p, 11);
  EXPECT_EQ(res.ds, 26);
  EXPECT_EQ(res.d1p, 0);
  EXPECT_EQ(res.d2p, 0);
}

TEST(Propagate, EtaleMu) {
  PPResult res = propagate({et(-4), mu(2), 3, 3});
  EXPECT_EQ(res.m1p, 14);
  EXPECT_EQ(res.m2p, -4);
  EXPECT_EQ(res.d1p, 6);
  EXPECT_EQ(res.d2p, 0);
  EXPECT_EQ(res.g1p, GroupTag::mu());
  EXPECT_EQ(res.g2p, GroupTag::etale());
}

TEST(Propagate, ReversedOrderSwapsResults) {
  PPResult a = propagate({et(-4), mu(2), 3, 3});
  PPResult b = propagate({mu(2), et(-4), 3, 3});
  EXPECT_EQ(a.m1p, b.m2p);
  EXPECT_EQ(a.m2p, b.m1p);
  EXPECT_EQ(a.d1p, b.d2p);
  EXPECT_TRUE(b.swapped);
}

TEST(Propagate, HnLevelsDiffer) {
  PPResult res = propagate({hn(1, 1), hn(2, 2), 3, 3});
  EXPECT_EQ(res.m1p, 2);
  EXPECT_EQ(res.m2p, -1);
}

TEST(Propagate, MuMuZeroNeedsOracle) {
  try {
    propagate({mu(0), mu(0), 3, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OracleRequired);
  }
}

TEST(Propagate, SymmetricCases) {
  for (auto [a, b] : {std::pair{et(-5), et(-2)}, std::pair{mu(1), mu(4)}, std::pair{hn(1, 2, 3, 4), hn(1, -1, 3, 4)}}) {
    const int r = a.tag.kind == GroupKind::Hn ? 4 : 3;
    PPResult x = propagate({a, b, 3, r});
    PPResult y = propagate({b, a, 3, r});
    EXPECT_EQ(x.m1p, y.m2p);
    EXPECT_EQ(x.m2p, y.m1p);
  }
}

TEST(Propagate, OutputsStayCoprime) {
  for (int m1 : {-1, -2, -4, -5, -7})
    for (int m2 : {1, 2, 4, 5}) {
      PPResult res = propagate({et(m1), mu(m2), 3, 3});
      EXPECT_NE(res.m1p % 3, 0);
      EXPECT_NE(res.m2p % 3, 0);
    }
}

TEST(SpecialDifferent, Values) {
  EXPECT_EQ(special_different(5, 2, 3), 26);
  EXPECT_EQ(special_different(2, 11, 3), 26);
  EXPECT_EQ(special_different(1, 1, 3), 0);
  EXPECT_EQ(special_different(5, 2, 2, 11, 3), 26);
  EXPECT_THROW(special_different(5, 2, 2, 10, 3), Error);
}

TEST(ConductorRelation, Values) {
  EXPECT_TRUE(conductor_relation_check(5, 2, 2, 11, 3));
  for (int x : {1, 4, 7}) EXPECT_TRUE(conductor_relation_check(3, 3, x, x, 5));
  EXPECT_FALSE(conductor_relation_check(5, 2, 2, 10, 3));
}

TEST(UpperDifferents, Table) {
  EXPECT_EQ(upper_differents({et(-2), mu(4), 3, 3}), std::pair(6, 0));
  EXPECT_EQ(upper_differents({et(-2), mu(0), 3, 3}), std::pair(6, 0));
  EXPECT_EQ(upper_differents({mu(1), mu(2), 3, 3}), std::pair(2, 2));
  EXPECT_EQ(upper_differents({et(-1), et(-2), 3, 3}), std::pair(0, 0));
  // (H_n, mu) with p | v(p) + n: p = 3, r = 4, n = 1 gives v(p) = 8
  auto [d1, d2] = upper_differents({hn(1, 2, 3, 4), mu(1, 3, 4), 3, 4});
  EXPECT_EQ(d1, 8 - ((8 - 2) / 3) * 2);
  EXPECT_EQ(d2, 8 - ((8 + 1) / 3) * 2);
}

TEST(UpperDifferents, NonIntegralRowRejected) {
  try {
    upper_differents({hn(1, 2), mu(1), 3, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IncompatibleRing);
  }
}

TEST(FiberProduct, Criterion) {
  EXPECT_TRUE(is_fiber_product_torsor({GroupTag::etale(), GroupTag::mu()}));
  EXPECT_FALSE(is_fiber_product_torsor({GroupTag::mu(), GroupTag::hn(1)}));
  EXPECT_TRUE(is_fiber_product_torsor({GroupTag::etale(), GroupTag::etale(), GroupTag::mu()}));
  EXPECT_FALSE(is_fiber_product_torsor({GroupTag::etale(), GroupTag::mu(), GroupTag::mu()}));
  EXPECT_EQ(fiber_product_reason({GroupTag::mu(), GroupTag::mu()}), "0 etale factors, need >= 1");
}

TEST(Tower, ClosedFormArithmetic) {
  EXPECT_EQ(tower_closed_form_c1pp(2, 3, 5, 3), 23);
  EXPECT_EQ(tower_closed_form_c1pp(2, 2, 2, 3), 2);
}

TEST(Tower, IteratedPropagateMatchesClosedForm) {
  TowerResult t = tower_propagate({et(-2), et(-5), et(-8)}, 3, 3);
  EXPECT_EQ(t.c1pp, tower_closed_form_c1pp(2, 5, 8, 3));
  EXPECT_EQ(t.c1pp, 38);
  TowerResult u = tower_propagate({et(-2), et(-2), et(-2)}, 3, 3);
  EXPECT_EQ(u.c1pp, 2);
}

TEST(Tower, TwoLevelsIsPropagate) {
  TowerResult t = tower_propagate({et(-2), et(-5), et(-8)}, 3, 3);
  PPResult direct = propagate({et(-2), et(-5), 3, 3});
  EXPECT_EQ(t.c1p, direct.c1p);
  EXPECT_EQ(t.c2p, direct.c2p);
  EXPECT_THROW(tower_propagate({et(-2), et(-5)}, 3, 3), Error);
}

TEST(Tower, EtaleConductorDivisibleByP) {
  EXPECT_THROW(et(-3), Error);
}

}  // namespace
}  // namespace germrh
