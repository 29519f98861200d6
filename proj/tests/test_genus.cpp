#include <gtest/gtest.h>

#include "germrh/genus.hpp"
#include "germrh/propagation.hpp"

namespace germrh {
namespace {

using BP = BranchPattern;

TEST(Genus, PointGenus) {
  EXPECT_EQ(genus_point(0, 1), 0);
  EXPECT_EQ(genus_point(2, 3), 0);
  EXPECT_EQ(genus_point(3, 1), 3);
  EXPECT_THROW(genus_point(0, 2), Error);
  EXPECT_THROW(genus_point(1, 0), Error);
}

TEST(Genus, DegreeP) {
  EXPECT_EQ(rh_degree_p(0, 6, {2}, 3), 0);
  // g_y1 = (r1 - c1 - 1)(p - 1)/2 for a unibranched disc
  for (int r1 = 2; r1 <= 6; ++r1)
    for (int c1 : {1, 2, 4}) {
      const int want2 = (r1 - c1 - 1) * 2;
      if (want2 < 0) continue;
      EXPECT_EQ(rh_degree_p(0, r1 * 2, {c1}, 3), want2 / 2) << r1 << " " << c1;
    }
  EXPECT_EQ(rh_degree_p(1, 0, {1}, 3), 1);
  EXPECT_THROW(rh_degree_p(0, 0, {1}, 3), Error);
  EXPECT_THROW(rh_degree_p(0, 3, {1}, 2), Error);  // odd Euler characteristic: 2(-2)+3 = -1
}

TEST(Genus, TypePP) {
  const std::vector<BoundaryBranchData> uu{{BP::UU, 2, 2}};
  EXPECT_THROW(rh_type_pp(0, {1, 2}, uu, 3), Error);
  EXPECT_EQ(rh_type_pp(0, {2, 2}, uu, 3), 0);
  EXPECT_EQ(rh_type_pp(0, {2, 1}, {{BP::PP, 1, 1}}, 3), 1);
  EXPECT_EQ(rh_type_pp(1, {0, 0}, {{BP::UU, 1, 1}}, 3), 1);
}

TEST(Genus, UUTermIsSpecialDifferent) {
  for (int p : {2, 3, 5})
    for (int c : {1, 2, 3, 5})
      for (int cp : {1, 2, 3, 5}) EXPECT_EQ(boundary_special_different({BP::UU, c, cp}, p), special_different(c, cp, p));
}

TEST(Genus, SmoothDisc) {
  EXPECT_EQ(smooth_disc_genus(1, 2, 2, 2, 2, 3), 0);
  EXPECT_THROW(smooth_disc_genus(1, 2, 1, 2, 2, 3), Error);
  EXPECT_EQ(smooth_disc_genus(4, 2, 1, 1, 1, 3), 1);
  EXPECT_EQ(smooth_disc_genus(3, 2, 1, 1, 2, 3), 0);
  EXPECT_THROW(smooth_disc_genus(5, 2, 1, 1, 1, 3), Error);
}

TEST(Genus, SmoothDiscAgainstDisplayedForms) {
  // closed forms written out here independently of the library
  for (int p : {2, 3, 5})
    for (int r1 = 0; r1 <= 4; ++r1)
      for (int r2 = 0; r2 <= 4; ++r2)
        for (int c : {1, 2, 3, 5})
          for (int cp : {1, 2, 3, 5}) {
            const int s = r1 + r2;
            const long long twice[4] = {(p * (s - c - 1) - cp - 1) * (p - 1), (p * (s - c - 1) - 2) * (p - 1),
                                        (p * (s - 2) - cp - 1) * (p - 1), (p * (s - 2) - 2) * (p - 1)};
            for (int k = 1; k <= 4; ++k) {
              const long long t = twice[k - 1];
              if (t < 0 || t % 2) {
                EXPECT_THROW(smooth_disc_genus(k, r1, r2, c, cp, p), Error);
              } else {
                EXPECT_EQ(smooth_disc_genus(k, r1, r2, c, cp, p), t / 2);
              }
            }
          }
}

TEST(Genus, SmoothnessTest) {
  EXPECT_TRUE(smoothness_test(2, 1, 1, 2, 3, BP::UU));
  for (BP b : {BP::UP, BP::PU, BP::PP}) EXPECT_FALSE(smoothness_test(2, 1, 1, 2, 3, b));
  EXPECT_FALSE(smoothness_test(2, 1, 1, 3, 3, BP::UU));
}

TEST(Genus, SmoothIffGenusZero) {
  for (int p : {2, 3, 5})
    for (int r1 = 0; r1 <= 5; ++r1)
      for (int r2 = 0; r2 <= 5; ++r2)
        for (int c = 1; c <= 6; ++c)
          for (int cp = 1; cp <= 12; ++cp) {
            long long chi = rh_type_pp_euler(-2, {r1, r2}, {{BP::UU, c, cp}}, p);
            EXPECT_EQ(chi == -2, smoothness_test(r1, r2, c, cp, p, BP::UU));
          }
}

TEST(Genus, TwoStepComposition) {
  for (int p : {2, 3, 5})
    for (int gx = 0; gx <= 2; ++gx)
      for (int r1 = 0; r1 <= 4; ++r1)
        for (int r2 = 0; r2 <= 4; ++r2)
          for (BP b : {BP::UU, BP::UP, BP::PU, BP::PP})
            for (int c : {1, 2, 3, 5}) {
              std::vector<BoundaryBranchData> bd{{b, c, 2 * c + 1}, {BP::UU, 2, 3}};
              EXPECT_EQ(rh_type_pp_euler(2 * gx - 2, {r1, r2}, bd, p), rh_two_step_euler(2 * gx - 2, {r1, r2}, bd, p));
            }
}

TEST(Genus, PatternParsing) {
  EXPECT_EQ(parse_pattern("PU"), BP::PU);
  EXPECT_THROW(parse_pattern("UX"), Error);
  EXPECT_THROW(boundary_special_different({BP::UU, 0, 1}, 3), Error);
}

}  // namespace
}  // namespace germrh
