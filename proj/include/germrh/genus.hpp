#pragma once

// Local Riemann-Hurwitz: genus of a point above a germ for degree-p and
// type-(p,p) covers, the smooth-disc specializations and the smoothness test.

#include <string>
#include <vector>

#include "germrh/error.hpp"
#include "germrh/propagation.hpp"

namespace germrh {

/// g_x = delta_x - r_x + 1.
inline int genus_point(int delta_x, int r_x) {
  require(delta_x >= 0, ErrorKind::InvalidInput, "delta_x must be >= 0");
  require(r_x >= 1, ErrorKind::InvalidInput, "r_x must be >= 1");
  const int g = delta_x - r_x + 1;
  require(g >= 0, ErrorKind::InvalidInput,
          "invalid germ data: delta_x - r_x + 1 = " + std::to_string(g) + " < 0");
  return g;
}

enum class BranchPattern { UU, UP, PU, PP };

inline const char* to_string(BranchPattern b) {
  switch (b) {
    case BranchPattern::UU: return "UU";
    case BranchPattern::UP: return "UP";
    case BranchPattern::PU: return "PU";
    case BranchPattern::PP: return "PP";
  }
  return "?";
}

inline BranchPattern parse_pattern(const std::string& s) {
  if (s == "UU") return BranchPattern::UU;
  if (s == "UP") return BranchPattern::UP;
  if (s == "PU") return BranchPattern::PU;
  if (s == "PP") return BranchPattern::PP;
  fail(ErrorKind::InvalidInput, "boundary pattern must be one of UU, UP, PU, PP; got '" + s + "'");
}

/// One boundary of the germ; trivial stages carry conductor 1.
struct BoundaryBranchData {
  BranchPattern pattern = BranchPattern::UU;
  int c1 = 1;   // first stage
  int c1p = 1;  // second stage
  bool first_unibranched() const { return pattern == BranchPattern::UU || pattern == BranchPattern::UP; }
  bool second_unibranched() const { return pattern == BranchPattern::UU || pattern == BranchPattern::PU; }
  // conductors actually read by the pattern
  int first_conductor() const { return first_unibranched() ? c1 : 1; }
  int second_conductor() const { return second_unibranched() ? c1p : 1; }
};

struct RamificationData {
  int r1 = 0;  // ramified points of Y_1,K -> X_K
  int r2 = 0;  // ramified points of Y_K -> Y_1,K
  int total(int p) const { return r1 * p + r2; }
};

struct GermData {
  int g_x = 0;
  std::vector<BoundaryBranchData> boundaries;
};

namespace detail {

inline void check_prime(int p) { require(p >= 2 && is_prime(p), ErrorKind::InvalidInput, "p must be prime"); }

inline void check_conductor(int c) {
  require(c >= 1, ErrorKind::InvalidInput, "boundary conductor must be >= 1 (use 1 for a trivial stage)");
}

/// g from 2g - 2; errors on odd or negative results.
inline int genus_from_euler(long long chi, const std::string& what) {
  require((chi + 2) % 2 == 0, ErrorKind::InvalidInput,
          what + ": 2g - 2 = " + std::to_string(chi) + " is odd; inconsistent input");
  const long long g = (chi + 2) / 2;
  require(g >= 0, ErrorKind::InvalidInput,
          what + ": g = " + std::to_string(g) + " < 0; no cover with this data");
  return static_cast<int>(g);
}

}  // namespace detail

/// d_s = sum (c_i - 1)(p - 1) for a degree-p cover.
inline long long special_different_degree_p(const std::vector<int>& conductors, int p) {
  long long ds = 0;
  for (int c : conductors) {
    detail::check_conductor(c);
    ds += static_cast<long long>(c - 1) * (p - 1);
  }
  return ds;
}

/// 2g_y - 2 = p(2g_x - 2) + d_eta - d_s, without the integrality check.
inline long long rh_degree_p_euler(long long chi_x, long long d_eta, const std::vector<int>& conductors, int p) {
  detail::check_prime(p);
  require(d_eta >= 0, ErrorKind::InvalidInput, "d_eta must be >= 0");
  return p * chi_x + d_eta - special_different_degree_p(conductors, p);
}

inline int rh_degree_p(int g_x, long long d_eta, const std::vector<int>& conductors, int p) {
  require(g_x >= 0, ErrorKind::InvalidInput, "g_x must be >= 0");
  return detail::genus_from_euler(rh_degree_p_euler(2LL * g_x - 2, d_eta, conductors, p), "degree-p genus");
}

/// Boundary term of the type-(p,p) formula.
inline long long boundary_special_different(const BoundaryBranchData& b, int p) {
  detail::check_conductor(b.c1);
  detail::check_conductor(b.c1p);
  switch (b.pattern) {
    case BranchPattern::UU: return special_different(b.c1, b.c1p, p);
    case BranchPattern::UP: return static_cast<long long>(b.c1 - 1) * p * (p - 1);
    case BranchPattern::PU: return static_cast<long long>(b.c1p - 1) * (p - 1);
    case BranchPattern::PP: return 0;
  }
  return 0;
}

inline long long d_eta_pp(const RamificationData& ram, int p) {
  require(ram.r1 >= 0 && ram.r2 >= 0, ErrorKind::InvalidInput, "r1, r2 must be >= 0");
  return static_cast<long long>(ram.r1 + ram.r2) * p * (p - 1);
}

inline long long d_s_pp(const std::vector<BoundaryBranchData>& boundaries, int p) {
  long long ds = 0;
  for (const auto& b : boundaries) ds += boundary_special_different(b, p);
  return ds;
}

inline long long rh_type_pp_euler(long long chi_x, const RamificationData& ram,
                                  const std::vector<BoundaryBranchData>& boundaries, int p) {
  detail::check_prime(p);
  return static_cast<long long>(p) * p * chi_x + d_eta_pp(ram, p) - d_s_pp(boundaries, p);
}

inline int rh_type_pp(int g_x, const RamificationData& ram, const std::vector<BoundaryBranchData>& boundaries, int p) {
  require(g_x >= 0, ErrorKind::InvalidInput, "g_x must be >= 0");
  return detail::genus_from_euler(rh_type_pp_euler(2LL * g_x - 2, ram, boundaries, p), "type-(p,p) genus");
}

/// The same Euler characteristic as two degree-p steps Y -> Y_1 -> X.  The
/// second step counts r2 p(p-1) for the ramification divisor and one
/// conductor term per boundary of X.
inline long long rh_two_step_euler(long long chi_x, const RamificationData& ram,
                                   const std::vector<BoundaryBranchData>& boundaries, int p) {
  std::vector<int> first, second;
  for (const auto& b : boundaries) {
    first.push_back(b.first_conductor());
    second.push_back(b.second_conductor());
  }
  const long long chi_y1 = rh_degree_p_euler(chi_x, static_cast<long long>(ram.r1) * (p - 1), first, p);
  return rh_degree_p_euler(chi_y1, static_cast<long long>(ram.r2) * p * (p - 1), second, p);
}

/// Closed forms over a smooth disc (g_x = 0, one boundary):
/// 1 UU, 2 UP (c = c1), 3 PU (c = c1p), 4 PP.
inline int smooth_disc_genus(int which, int r1, int r2, int c1, int c1p, int p) {
  detail::check_prime(p);
  require(r1 >= 0 && r2 >= 0, ErrorKind::InvalidInput, "r1, r2 must be >= 0");
  detail::check_conductor(c1);
  detail::check_conductor(c1p);
  const long long s = r1 + r2;
  long long twice;
  BranchPattern pat;
  switch (which) {
    case 1: twice = (p * (s - c1 - 1) - c1p - 1) * (p - 1); pat = BranchPattern::UU; break;
    case 2: twice = (p * (s - c1 - 1) - 2) * (p - 1); pat = BranchPattern::UP; break;
    case 3: twice = (p * (s - 2) - c1p - 1) * (p - 1); pat = BranchPattern::PU; break;
    case 4: twice = (p * (s - 2) - 2) * (p - 1); pat = BranchPattern::PP; break;
    default: fail(ErrorKind::InvalidInput, "smooth-disc case must be 1..4");
  }
  const int g = detail::genus_from_euler(twice - 2, "smooth-disc genus");
  const int full = rh_type_pp(0, {r1, r2}, {BoundaryBranchData{pat, c1, c1p}}, p);
  require(g == full, ErrorKind::Internal,
          "smooth-disc closed form " + std::to_string(g) + " disagrees with the type-(p,p) formula " + std::to_string(full));
  return g;
}

/// y smooth iff unibranched throughout and p(r1 + r2 - 1) = 1 + c'_1 + c_1 p.
inline bool smoothness_test(int r1, int r2, int c1, int c1p, int p, BranchPattern pattern) {
  return pattern == BranchPattern::UU && static_cast<long long>(p) * (r1 + r2 - 1) == 1LL + c1p + static_cast<long long>(c1) * p;
}

}  // namespace germrh
