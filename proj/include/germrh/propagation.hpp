#pragma once

// Closed-form level-two invariants of a type-(p,p) cover over a boundary:
// upper conductors, upper differents, special different, fibre-product test,
// and iteration over a three-level tower.

#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "germrh/error.hpp"
#include "germrh/torsor.hpp"

namespace germrh {

/// Invariants without an equation behind them; validates gcd(m,p) and the level.
inline TorsorData abstract_torsor(GroupTag tag, int m, int p, int r) {
  require(p >= 2 && is_prime(p), ErrorKind::InvalidInput, "p must be prime");
  require(r >= 1, ErrorKind::InvalidInput, "v(lambda) must be positive");
  if (tag.kind == GroupKind::Hn)
    require(tag.n > 0 && tag.n < r, ErrorKind::InvalidInput, "H_n level must satisfy 0 < n < " + std::to_string(r));
  const bool a1 = tag.kind == GroupKind::MuP && m == 0;
  require(a1 || std::gcd(m, p) == 1, ErrorKind::InvalidInput,
          "conductor variable " + std::to_string(m) + " must be prime to p for " + tag.to_string());
  TorsorData td;
  td.tag = tag;
  td.m = m;
  td.c = -m;
  td.delta = different_degree(tag, p, r);
  return td;
}

struct PPInput {
  TorsorData g1, g2;
  int p = 0;
  int r = 0;  // v(lambda); v(p) = r(p-1)
};

struct PPResult {
  int m1p = 0, m2p = 0;
  int c1p = 0, c2p = 0;
  int ds = 0;
  // upper tags and differents; unset when the ring makes the table non-integral
  bool has_differents = false;
  std::string differents_error;
  GroupTag g1p, g2p;
  int d1p = 0, d2p = 0;
  int delta_total = 0;
  char form = 'A';  // A: (m2, m1 p - m2(p-1)), B: (m2 p - m1(p-1), m1), in table orientation
  bool swapped = false;
};

namespace detail {

// position in the table's pair order: etale first, then H_n, then mu_p
inline int table_rank(const GroupTag& t) {
  switch (t.kind) {
    case GroupKind::Etale: return 0;
    case GroupKind::Hn: return 1;
    case GroupKind::MuP: return 2;
  }
  return 3;
}

inline bool needs_swap(const TorsorData& a, const TorsorData& b) { return table_rank(a.tag) > table_rank(b.tag); }

inline char choose_form(const TorsorData& a, const TorsorData& b) {
  const GroupKind ka = a.tag.kind, kb = b.tag.kind;
  if (ka == kb) {
    if (ka == GroupKind::Hn && a.tag.n != b.tag.n) return a.tag.n < b.tag.n ? 'A' : 'B';
    if (ka == GroupKind::Hn) return a.m < b.m ? 'A' : 'B';
    if (ka == GroupKind::MuP && a.m == 0 && b.m == 0)
      fail(ErrorKind::OracleRequired, "(mu_p, mu_p) with m1 = m2 = 0 has no closed form");
    return a.m <= b.m ? 'A' : 'B';
  }
  return 'B';
}

inline int exact_div(int a, int b, const std::string& what) {
  require(a % b == 0, ErrorKind::IncompatibleRing,
          "ring parameters incompatible with the different table: " + what + " = " + std::to_string(a) + " not divisible by " + std::to_string(b));
  return a / b;
}

/// Level of the upper torsor given by v(p) - delta' = n'(p-1).
inline GroupTag decode_level(int delta_p, int p, int r) {
  const int e = r * (p - 1);
  require(delta_p >= 0 && delta_p <= e, ErrorKind::Internal, "upper different out of range");
  if (delta_p == 0) return GroupTag::etale();
  if (delta_p == e) return GroupTag::mu();
  const int n = exact_div(e - delta_p, p - 1, "v(p) - delta'");
  require(n > 0 && n < r, ErrorKind::Internal, "decoded level out of range");
  return GroupTag::hn(n);
}

// table orientation assumed
inline std::pair<int, int> oriented_differents(const GroupTag& a, const GroupTag& b, int p, int r) {
  const int e = r * (p - 1);
  auto lvl = [&](int num, const std::string& what) { return e - exact_div(num, p, what) * (p - 1); };
  const GroupKind ka = a.kind, kb = b.kind;
  if (ka == GroupKind::Etale && kb == GroupKind::Etale) return {0, 0};
  if (ka == GroupKind::Etale && kb == GroupKind::MuP) return {e, 0};
  if (ka == GroupKind::Etale && kb == GroupKind::Hn) return {e - b.n * (p - 1), 0};
  if (ka == GroupKind::Hn && kb == GroupKind::MuP)
    return {lvl(e - a.n * (p - 1), "v(p) - n(p-1)"), lvl(e + a.n, "v(p) + n")};
  if (ka == GroupKind::MuP && kb == GroupKind::MuP) {
    const int d = lvl(e, "v(p)");
    return {d, d};
  }
  if (ka == GroupKind::Hn && kb == GroupKind::Hn) {
    const int n1 = a.n, n2 = b.n;
    if (n1 <= n2) return {lvl(e + n2, "v(p) + n2"), lvl(e + n1 * p - n2 * (p - 1), "v(p) + n1 p - n2(p-1)")};
    return {lvl(e + n2 * p - n1 * (p - 1), "v(p) + n2 p - n1(p-1)"), lvl(e + n1, "v(p) + n1")};
  }
  fail(ErrorKind::Internal, "pair not in table orientation");
}

}  // namespace detail

/// d_s = (c - 1)p(p-1) + (c' - 1)(p-1).
inline int special_different(int c, int cp, int p) { return (c - 1) * p * (p - 1) + (cp - 1) * (p - 1); }

/// Both special differents of a propagated pair; they must agree.
inline int special_different(int c1, int c1p, int c2, int c2p, int p) {
  const int d1 = special_different(c1, c1p, p), d2 = special_different(c2, c2p, p);
  require(d1 == d2, ErrorKind::Internal,
          "special differents disagree: " + std::to_string(d1) + " vs " + std::to_string(d2));
  return d1;
}

/// c'_2 - c'_1 = (c_1 - c_2) p.
inline bool conductor_relation_check(int c1, int c2, int c1p, int c2p, int p) { return c2p - c1p == (c1 - c2) * p; }

inline void check_pp_input(const PPInput& in) {
  abstract_torsor(in.g1.tag, in.g1.m, in.p, in.r);
  abstract_torsor(in.g2.tag, in.g2.m, in.p, in.r);
}

/// (delta'_1, delta'_2).
inline std::pair<int, int> upper_differents(const PPInput& in) {
  check_pp_input(in);
  if (detail::needs_swap(in.g1, in.g2)) {
    auto [a, b] = detail::oriented_differents(in.g2.tag, in.g1.tag, in.p, in.r);
    return {b, a};
  }
  return detail::oriented_differents(in.g1.tag, in.g2.tag, in.p, in.r);
}

inline PPResult propagate(const PPInput& in) {
  check_pp_input(in);
  const int p = in.p;
  PPResult res;
  res.swapped = detail::needs_swap(in.g1, in.g2);
  const TorsorData& a = res.swapped ? in.g2 : in.g1;
  const TorsorData& b = res.swapped ? in.g1 : in.g2;
  res.form = detail::choose_form(a, b);
  int ma, mb;
  if (res.form == 'A') {
    ma = b.m;
    mb = a.m * p - b.m * (p - 1);
  } else {
    ma = b.m * p - a.m * (p - 1);
    mb = a.m;
  }
  res.m1p = res.swapped ? mb : ma;
  res.m2p = res.swapped ? ma : mb;
  res.c1p = -res.m1p;
  res.c2p = -res.m2p;
  res.ds = special_different(in.g1.c, res.c1p, in.g2.c, res.c2p, p);
  require(conductor_relation_check(in.g1.c, in.g2.c, res.c1p, res.c2p, p), ErrorKind::Internal,
          "conductor relation violated");
  try {
    std::tie(res.d1p, res.d2p) = upper_differents(in);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::IncompatibleRing) throw;
    res.differents_error = err.what();
    return res;
  }
  res.has_differents = true;
  res.g1p = detail::decode_level(res.d1p, p, in.r);
  res.g2p = detail::decode_level(res.d2p, p, in.r);
  res.delta_total = in.g1.delta + res.d1p;
  require(res.delta_total == in.g2.delta + res.d2p, ErrorKind::Internal, "different additivity violated");
  return res;
}

/// Fibre product of n pairwise disjoint degree-p torsors is a torsor iff at least n-1 are etale.
inline bool is_fiber_product_torsor(const std::vector<GroupTag>& tags) {
  require(tags.size() >= 2, ErrorKind::InvalidInput, "need at least two group tags");
  std::size_t et = 0;
  for (const auto& t : tags) et += t.is_etale() ? 1 : 0;
  return et + 1 >= tags.size();
}

inline std::string fiber_product_reason(const std::vector<GroupTag>& tags) {
  std::size_t et = 0;
  for (const auto& t : tags) et += t.is_etale() ? 1 : 0;
  return std::to_string(et) + " etale factor" + (et == 1 ? "" : "s") + ", need >= " + std::to_string(tags.size() - 1);
}

// ---------------------------------------------------------------------------
// towers
// ---------------------------------------------------------------------------

/// Three degree-p covers X_a, X_b, X_c of X; the two composites (a,b) and (b,c)
/// are compared over the shared middle cover X_b.
struct TowerPlan {
  int left = 0, pivot = 1, right = 2;
};

struct TowerResult {
  PPResult left_pair;   // (X_left, X_pivot)
  PPResult right_pair;  // (X_pivot, X_right)
  PPResult top;         // the two composites as torsors over X_pivot
  // conductors in the diagram: c'_1..c'_4 at the middle level, c''_1, c''_2 on top
  int c1p = 0, c2p = 0, c3p = 0, c4p = 0;
  int c1pp = 0, c2pp = 0;
};

inline TowerResult tower_propagate(const std::vector<TorsorData>& levels, int p, int r, TowerPlan plan = {}) {
  require(levels.size() == 3, ErrorKind::InvalidInput, "a tower needs exactly three base covers (use propagate for two)");
  for (int i : {plan.left, plan.pivot, plan.right})
    require(i >= 0 && i < 3, ErrorKind::InvalidInput, "tower plan index out of range");
  require(plan.left != plan.pivot && plan.pivot != plan.right && plan.left != plan.right, ErrorKind::InvalidInput,
          "tower plan indices must be distinct");
  TowerResult t;
  t.left_pair = propagate({levels[plan.left], levels[plan.pivot], p, r});
  t.right_pair = propagate({levels[plan.pivot], levels[plan.right], p, r});
  require(t.left_pair.has_differents && t.right_pair.has_differents, ErrorKind::IncompatibleRing,
          "upper group schemes needed for the top level: " + t.left_pair.differents_error + t.right_pair.differents_error);
  t.c1p = t.left_pair.c1p;
  t.c2p = t.left_pair.c2p;
  t.c3p = t.right_pair.c1p;
  t.c4p = t.right_pair.c2p;
  TorsorData over_pivot_left = abstract_torsor(t.left_pair.g2p, t.left_pair.m2p, p, r);
  TorsorData over_pivot_right = abstract_torsor(t.right_pair.g1p, t.right_pair.m1p, p, r);
  t.top = propagate({over_pivot_left, over_pivot_right, p, r});
  t.c1pp = t.top.c1p;
  t.c2pp = t.top.c2p;
  return t;
}

/// Closed form for the all-etale tower with c1 <= c2 <= c3 and c'_2 <= c'_3.
inline int tower_closed_form_c1pp(int c1, int c2, int c3, int p) { return c3 * p * p - c2 * p * (p - 1) - c1 * (p - 1); }

}  // namespace germrh
