#include <gtest/gtest.h>

#include "germrh/grid.hpp"
#include "germrh/oracle.hpp"

namespace germrh {
namespace {

struct Oracle : ::testing::Test {
  Ring R = make_ring(3, 3, 1, 8);
  int cap = R->max_prec;
  int W = 40;
  RLaurent T(int k, const RElem& c) const { return RLaurent::monomial(R, k, c, cap, W); }
  RLaurent T(int k) const { return T(k, RElem::one(R)); }
  RLaurent one() const { return RLaurent::one(R, cap, W); }
  RElem pi(int k) const { return RElem::pi_power(R, k); }
};

TEST_F(Oracle, EtaleEtaleBothRoles) {
  TorsorEquation e1 = TorsorEquation::etale(T(-5));
  TorsorEquation e2 = TorsorEquation::etale(T(-2));
  OracleResult a = oracle_conductor(e1, e2);
  OracleResult b = oracle_conductor(e2, e1);
  EXPECT_EQ(a.m1p, -2);
  EXPECT_EQ(b.m1p, -11);
  EXPECT_TRUE(a.stable);
  EXPECT_TRUE(b.stable);
  EXPECT_EQ(a.upper_tag, GroupTag::etale());
}

TEST_F(Oracle, MuMuFixture) {
  FixtureResult f = mu_mu_fixture();
  EXPECT_EQ(f.o1.m1p, 2);
  EXPECT_EQ(f.o2.m1p, 2);
  EXPECT_EQ(f.o1.n_prime, 2);
  EXPECT_EQ(f.o2.n_prime, 2);
  EXPECT_EQ(f.o1.upper_tag, GroupTag::hn(2));
  EXPECT_TRUE(f.o1.stable && f.o2.stable);
}

TEST_F(Oracle, SelfPullbackIsDegenerate) {
  TorsorEquation e = TorsorEquation::kummer(one() + T(2));
  EXPECT_THROW(oracle_conductor(e, e), Error);
  TorsorEquation f = TorsorEquation::etale(T(-2));
  EXPECT_THROW(oracle_conductor(f, f), Error);
}

TEST_F(Oracle, EtaleExpansionIsGeometric) {
  TorsorData td = abstract_torsor(GroupTag::etale(), -1, 3, 3);
  ParameterExpansion ex = parameter_expansion(td, R, cap, 30, true);
  ASSERT_TRUE(ex.t.has_value());
  for (int k = 0; k <= 25; ++k) EXPECT_EQ(ex.t->coeff(k), (k >= 3 && k % 2 == 1) ? 1 : 0) << k;
  // z^3 - z = 1/t
  KLaurent z3 = KLaurent::monomial(R, -3, 1, 30), z1 = KLaurent::monomial(R, -1, 1, 30);
  EXPECT_TRUE(ex.t->inverse().agrees(z3 - z1));
  EXPECT_TRUE(expansion_round_trip(td, ex));
}

TEST_F(Oracle, KummerA1Expansion) {
  TorsorData td = abstract_torsor(GroupTag::mu(), 0, 3, 3);
  ParameterExpansion ex = parameter_expansion(td, R, cap, 30, true);
  EXPECT_TRUE(*ex.t == KLaurent::monomial(R, 3, 1, 30));
  ParameterExpansion big = parameter_expansion(td, R, cap, 30, false);
  EXPECT_TRUE(big.T->agrees(RLaurent::monomial(R, 3, RElem::one(R), cap, 30)));
}

TEST_F(Oracle, RoundTripOverR) {
  for (auto [tag, m] : {std::pair{GroupTag::hn(1), 2}, std::pair{GroupTag::hn(2), -1}, std::pair{GroupTag::mu(), 4},
                        std::pair{GroupTag::mu(), -2}}) {
    TorsorData td = abstract_torsor(tag, m, 3, 3);
    ParameterExpansion ex = parameter_expansion(td, R, cap, W, false);
    EXPECT_TRUE(expansion_round_trip(td, ex)) << tag.to_string() << " " << m;
  }
}

TEST_F(Oracle, PullbackMonomial) {
  ParameterExpansion ex;
  ex.T = T(3);
  PulledBackEquation pb = pullback(TorsorEquation::kummer(T(1)), ex);
  EXPECT_TRUE(pb.rhs->agrees(T(3)));
}

TEST_F(Oracle, PullbackHn) {
  RLaurent unit = one() + T(1, pi(1));
  ParameterExpansion ex;
  ex.T = T(3) * unit;
  PulledBackEquation pb = pullback(TorsorEquation::hn(1, T(2)), ex);
  RLaurent want = one() + (T(6) * unit * unit).scaled(pi(3));
  EXPECT_TRUE(pb.rhs->agrees(want));
}

TEST_F(Oracle, ReducednessFollowsEtaleCount) {
  TorsorEquation et = TorsorEquation::etale(T(-2));
  TorsorEquation mu = TorsorEquation::kummer(T(1));
  TorsorEquation mu2 = TorsorEquation::kummer(one() + T(2));
  TorsorEquation h = TorsorEquation::hn(1, T(-1));
  EXPECT_TRUE(boundary_reducedness(et, mu));
  EXPECT_TRUE(boundary_reducedness(mu, et));
  EXPECT_FALSE(boundary_reducedness(mu, h));
  EXPECT_FALSE(boundary_reducedness(mu, mu2));
}

TEST_F(Oracle, TraceLogsStages) {
  OracleResult a = oracle_conductor(TorsorEquation::etale(T(-4)), TorsorEquation::kummer(one() + T(2)));
  EXPECT_EQ(a.m1p, 14);
  ASSERT_FALSE(a.log.empty());
  EXPECT_EQ(a.log.front().step, "mode");
  EXPECT_EQ(a.log.back().step, "stability");
}

TEST_F(Oracle, PerturbedParameterChange) {
  // the same Etale class written in a shifted parameter keeps its conductors
  RLaurent s = one() + T(1) + T(-1, pi(4));
  TorsorEquation e1 = TorsorEquation::etale(T(-4).substitute(T(1) * s));
  TorsorEquation e2 = TorsorEquation::kummer(one() + T(2));
  EXPECT_EQ(oracle_conductor(e1, e2).m1p, 14);
  EXPECT_EQ(oracle_conductor(e2, e1).m1p, -4);
}

}  // namespace
}  // namespace germrh
