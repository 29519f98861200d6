#pragma once

// Degree-p torsors over the boundary Spf R[[T]]{T^-1}: classification into
// mu_p / H_n / etale, conductor variable m, conductor c = -m, different delta,
// and the simplified normal form reached by a parameter change T' = T*s.

#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "germrh/dvr.hpp"
#include "germrh/error.hpp"
#include "germrh/laurent.hpp"

namespace germrh {

enum class EqKind { Kummer, Hn, Etale };

/// Kummer: Z^p = u.  Hn: (1 + pi^n Z)^p = 1 + pi^(np) u.  Etale: (1 + lambda Z)^p = 1 + lambda^p u.
struct TorsorEquation {
  EqKind kind = EqKind::Kummer;
  int n = 0;
  RLaurent u;

  static TorsorEquation kummer(RLaurent u) { return {EqKind::Kummer, 0, std::move(u)}; }
  static TorsorEquation hn(int n, RLaurent u) { return {EqKind::Hn, n, std::move(u)}; }
  static TorsorEquation etale(RLaurent u) { return {EqKind::Etale, 0, std::move(u)}; }
  const Ring& ring() const { return u.ring(); }
};

inline std::string to_string(EqKind k) {
  switch (k) {
    case EqKind::Kummer: return "kummer";
    case EqKind::Hn: return "hn";
    case EqKind::Etale: return "etale";
  }
  return "?";
}

enum class GroupKind { MuP, Hn, Etale };

struct GroupTag {
  GroupKind kind = GroupKind::MuP;
  int n = 0;  // level for Hn

  static GroupTag mu() { return {GroupKind::MuP, 0}; }
  static GroupTag hn(int n) { return {GroupKind::Hn, n}; }
  static GroupTag etale() { return {GroupKind::Etale, 0}; }
  bool operator==(const GroupTag& o) const { return kind == o.kind && (kind != GroupKind::Hn || n == o.n); }
  bool operator!=(const GroupTag& o) const { return !(*this == o); }
  bool is_etale() const { return kind == GroupKind::Etale; }
  /// n with delta = v(p) - n(p-1): 0 for mu_p, v(lambda) for etale.
  int level(int r) const { return kind == GroupKind::MuP ? 0 : kind == GroupKind::Etale ? r : n; }
  std::string to_string() const {
    switch (kind) {
      case GroupKind::MuP: return "mu_p";
      case GroupKind::Hn: return "H_" + std::to_string(n);
      case GroupKind::Etale: return "etale";
    }
    return "?";
  }
};

/// delta = v(p) - n(p-1) with n = 0 for mu_p and n = v(lambda) for etale.
inline int different_degree(const GroupTag& tag, int p, int r) { return r * (p - 1) - tag.level(r) * (p - 1); }

struct TorsorData {
  GroupTag tag;
  int m = 0;
  int c = 0;
  int delta = 0;
  int h = 0;  // exponent of the (a1) form Z^p = T^h, else 0
  std::optional<TorsorEquation> normalized;
  std::optional<RLaurent> parameter_change;  // s with T' = T*s
};

inline int different_degree(const TorsorData& td, int p, int r) { return different_degree(td.tag, p, r); }

struct Stage {
  std::string step;
  std::string detail;
};
using StageLog = std::vector<Stage>;

inline int mod_p(long long a, int p) { return static_cast<int>(((a % p) + p) % p); }

// ---------------------------------------------------------------------------
// p-th power stripping of a Kummer unit
// ---------------------------------------------------------------------------

enum class StripOutcome { ResidueNotPower, CoprimeLevel, EtaleLevel, Trivial };

/// u is carried as u / D^p with D a Laurent polynomial, so that every reading
/// is made on exact data: v(u/D^p - 1) = v(u - D^p) because D is a unit.
struct StripResult {
  StripOutcome outcome = StripOutcome::Trivial;
  RLaurent D;
  int level = 0;  // valuation a of u/D^p - 1 at the stop
  int m = 0;
  int h = 0;
  StageLog log;
};

namespace detail {

/// Lift of a residue series used to build D.  In horizon mode a truncated
/// series is lifted as the exact polynomial of its known terms: D is ours to
/// choose, and an uncertain top would spread through D^p.
inline RLaurent lift_checked(const KLaurent& a, int cap, int window, bool horizon) {
  require(horizon || a.exact(), ErrorKind::WindowExhausted, "residue series truncated inside the window; widen window");
  if (a.exact()) return RLaurent::lift(a, cap, window);
  const Ring& R = a.ring();
  std::map<int, RElem> t;
  for (const auto& [k, c] : a.terms()) t.emplace(k, RElem::lift(R, c, cap));
  return RLaurent::from_terms(R, t, cap, window);
}

/// Last exponent up to which every coefficient is known to precision >= need
/// (INT_MAX when the tail is known too).
inline int reading_horizon(const RLaurent& x, int need) {
  for (int k = x.lo(); k <= x.hi(); ++k)
    if (x.prec_at(k) < need) return k - 1;
  return x.tail() >= need ? INT_MAX : x.hi();
}

/// min_k v(x_k) over exponents <= H, capped at need.
inline int min_valuation_upto(const RLaurent& x, int H, int need) {
  int a = need;
  for (int k = x.lo(); k <= x.hi() && k <= H; ++k) a = std::min(a, x.val_at(k));
  if (x.head() <= a)
    fail(ErrorKind::WindowExhausted, "minimal valuation " + std::to_string(a) + " may be attained below the window; widen window");
  return a;
}

/// Residue of x / pi^a on exponents <= H (truncated there unless H = INT_MAX).
inline KLaurent leading_stratum(const RLaurent& x, int a, int H) {
  std::map<int, KElem> t;
  for (int k = x.lo(); k <= x.hi() && k <= H; ++k)
    if (x.val_at(k) == a) t[k] = x.coeff(k).shift_down(a).residue();
  KLaurent M = KLaurent::from_terms(x.ring(), t, x.window());
  if (H != INT_MAX) M = M.truncated(H);
  return M;
}

}  // namespace detail

/// Reduce a Kummer unit modulo p-th powers until its key valuation/exponent
/// pair is stable.  See StripOutcome for the stopping states.
///
/// With horizon = true the positive tail of u is only a window truncation
/// (e.g. after a series reversion); readings then use the exponents below the
/// first coefficient known to less than p*v(lambda)+1, and callers must
/// confirm the answer by widening the window.
inline StripResult strip_pth_powers_rational(const RLaurent& u, bool horizon = false, int max_steps = -1) {
  const Ring& R = u.ring();
  const int p = R->p, r = R->r;
  const int cap = u.cap(), W = u.window();
  const int pr = p * r;
  const int need = pr + 1;
  require(cap >= need, ErrorKind::PrecisionExhausted,
          "precision " + std::to_string(cap) + " below p*v(lambda)+1 = " + std::to_string(need));
  StripResult res;
  res.D = RLaurent::one(R, cap, W);
  if (max_steps < 0) max_steps = 10 * (2 * W + 1);
  KLaurent ub = u.residue_series();
  std::optional<int> mc = ub.min_coprime_exponent();
  if (mc) {
    const int l = u.residue_order();
    res.outcome = StripOutcome::ResidueNotPower;
    if (mod_p(l, p) != 0) {
      res.m = 0;
      res.h = mod_p(l, p);
      res.log.push_back({"residue-not-pth-power", "lowest exponent " + std::to_string(l) + " coprime to p (a1), h=" + std::to_string(res.h)});
    } else {
      res.m = *mc - l;
      res.log.push_back({"residue-not-pth-power",
                         "lowest exponent " + std::to_string(l) + ", minimal coprime exponent " + std::to_string(*mc) + " (a2)"});
    }
    return res;
  }
  require(horizon || ub.exact(), ErrorKind::WindowExhausted, "residue has no coprime exponent on the known range; widen window");
  KLaurent g = ub.pth_root();
  res.D = detail::lift_checked(g, cap, W, horizon);
  res.log.push_back({"strip-residue-pth-power", "D = " + res.D.to_string()});
  for (int step = 0; step < max_steps; ++step) {
    RLaurent diff = u - res.D.pow(p);
    const int H = detail::reading_horizon(diff, need);
    if (!horizon && H != INT_MAX)
      fail(diff.tail() < need && H == diff.hi() ? ErrorKind::WindowExhausted : ErrorKind::PrecisionExhausted,
           "difference u - D^p not known to pi^" + std::to_string(need) + " beyond T^" + std::to_string(H) +
               "; increase precision/window");
    const int a = detail::min_valuation_upto(diff, H, need);
    if (a > pr) {
      require(H == INT_MAX, ErrorKind::WindowExhausted,
              "u/D^p = 1 mod pi^" + std::to_string(need) + " only below T^" + std::to_string(H + 1) +
                  "; triviality not certified, widen window");
      res.outcome = StripOutcome::Trivial;
      res.level = a;
      res.log.push_back({"trivial", "u/D^p = 1 mod pi^" + std::to_string(a) +
                                        (H == INT_MAX ? std::string() : " below T^" + std::to_string(H + 1))});
      return res;
    }
    KLaurent M = detail::leading_stratum(diff, a, H);
    KLaurent Db = res.D.residue_series();
    require(Db.lowest().has_value(), ErrorKind::Internal, "D lost its residue");
    const int ordD = *Db.lowest();
    if (a == pr) {
      // H = M / Dbar^p, reduced modulo b^p - b
      KLaurent Hb = M * Db.pow(p).inverse();
      ASReduction as = as_reduce(Hb);
      if (as.m) {
        res.outcome = StripOutcome::EtaleLevel;
        res.level = a;
        res.m = *as.m;
        res.log.push_back({"etale-level", "AS class with conductor variable " + std::to_string(res.m)});
        return res;
      }
      require(as.zero_class, ErrorKind::InvalidInput, "unramified etale class has no conductor");
      require(horizon || as.witness.exact(), ErrorKind::WindowExhausted,
              "Artin-Schreier witness is not a Laurent polynomial; cannot certify triviality");
      RLaurent b = detail::lift_checked(as.witness, cap, W, horizon);
      res.D = res.D * (RLaurent::one(R, cap, W) + b.scaled(RElem::lambda(R)));
      res.log.push_back({"strip-etale-level", "multiply D by 1 + lambda*(" + b.to_string() + ")"});
      continue;
    }
    if (a % p != 0)
      fail(ErrorKind::NonReduced, "leading valuation " + std::to_string(a) + " below p*v(lambda) and prime to p: special fibre not reduced");
    if (auto c = M.min_coprime_exponent()) {
      res.outcome = StripOutcome::CoprimeLevel;
      res.level = a;
      res.m = *c - p * ordD;
      res.log.push_back({"coprime-level", "level n=" + std::to_string(a / p) + ", minimal coprime exponent " + std::to_string(res.m)});
      return res;
    }
    require(horizon || M.exact(), ErrorKind::WindowExhausted, "leading stratum truncated; widen window");
    const int n = a / p;
    RLaurent root = detail::lift_checked(M.pth_root(), cap, W, horizon);
    res.D = res.D + root.scaled(RElem::pi_power(R, n));
    res.log.push_back({"strip-level", "level n=" + std::to_string(n) + ": D += pi^" + std::to_string(n) + "*(" + root.to_string() + ")"});
  }
  fail(ErrorKind::PrecisionExhausted, "p-th power stripping exceeded its iteration budget; increase precision/window");
}

/// u' = u * w^p with u' stripped; w = D^-1.
struct StripWitness {
  RLaurent u;
  RLaurent w;
  StripResult info;
};

inline StripWitness strip_pth_powers(const RLaurent& u) {
  StripWitness out;
  out.info = strip_pth_powers_rational(u);
  out.w = out.info.D.invert_unit();
  out.u = u * out.w.pow(u.ring()->p);
  return out;
}

// ---------------------------------------------------------------------------
// classification
// ---------------------------------------------------------------------------

struct KummerClass {
  GroupTag tag;
  int m = 0;
  int h = 0;
  StripResult strip;
};

/// Classify Z^p = F for a unit F; non-mu classes are rerouted to H_n / etale.
inline KummerClass classify_kummer(const RLaurent& F, bool horizon = false) {
  KummerClass kc;
  kc.strip = strip_pth_powers_rational(F, horizon);
  const int p = F.ring()->p;
  switch (kc.strip.outcome) {
    case StripOutcome::ResidueNotPower:
      kc.tag = GroupTag::mu();
      kc.m = kc.strip.m;
      kc.h = kc.strip.h;
      break;
    case StripOutcome::CoprimeLevel:
      kc.tag = GroupTag::hn(kc.strip.level / p);
      kc.m = kc.strip.m;
      break;
    case StripOutcome::EtaleLevel:
      kc.tag = GroupTag::etale();
      kc.m = kc.strip.m;
      break;
    case StripOutcome::Trivial:
      fail(ErrorKind::Trivial, "torsor is trivial (a p-th power)");
  }
  return kc;
}

inline void check_equation(const TorsorEquation& eq) {
  const Ring& R = eq.ring();
  require(R != nullptr, ErrorKind::InvalidInput, "equation without ring");
  if (eq.kind == EqKind::Hn)
    require(eq.n > 0 && eq.n < R->r, ErrorKind::InvalidInput,
            "H_n level must satisfy 0 < n < v(lambda) = " + std::to_string(R->r) + ", got " + std::to_string(eq.n));
  (void)eq.u.residue_order();  // u must be a unit
}

namespace detail {

/// ((1 + pi^k b)^p - 1) / pi^(kp) computed without division:
/// b^p + sum_{j<p} (C(p,j)/p) eps pi^(e - k(p-j)) b^j.
inline RLaurent pth_power_increment(const RLaurent& b, int k) {
  const Ring& R = b.ring();
  const int p = R->p, e = R->e;
  RElem eps(R, R->eps, R->max_prec);
  RLaurent out = b.pow(p);
  RLaurent bj = RLaurent::one(R, b.cap(), b.window());
  for (int j = 1; j < p; ++j) {
    bj = bj * b;
    const int shift = e - k * (p - j);
    require(shift >= 0, ErrorKind::Internal, "level above v(lambda)");
    RElem c = RElem::from_int(R, binomial_int(p, j) / p) * eps * RElem::pi_power(R, shift);
    out = out + bj.scaled(c);
  }
  return out;
}

inline std::map<int, KElem> terms_below(const KLaurent& a, int bound) {
  std::map<int, KElem> out;
  for (const auto& [k, c] : a.terms())
    if (k < bound) out[k] = c;
  return out;
}

}  // namespace detail

/// Invariants only (no normal form).
inline TorsorData classify_invariants(const TorsorEquation& eq) {
  check_equation(eq);
  const Ring& R = eq.ring();
  const int p = R->p, r = R->r;
  TorsorData td;
  switch (eq.kind) {
    case EqKind::Kummer: {
      KummerClass kc = classify_kummer(eq.u);
      td.tag = kc.tag;
      td.m = kc.m;
      td.h = kc.h;
      break;
    }
    case EqKind::Hn: {
      KLaurent ub = eq.u.residue_series();
      auto mc = ub.min_coprime_exponent();
      if (!mc) {
        require(ub.exact(), ErrorKind::WindowExhausted, "no coprime exponent on the known residue range; widen window");
        fail(ErrorKind::LevelOverstated, "residue of u is a p-th power: level n=" + std::to_string(eq.n) + " overstated");
      }
      td.tag = GroupTag::hn(eq.n);
      td.m = *mc;
      break;
    }
    case EqKind::Etale: {
      ASReduction as = as_reduce(eq.u.residue_series());
      if (as.zero_class) fail(ErrorKind::Trivial, "Artin-Schreier class is zero: torsor is trivial");
      require(as.m.has_value(), ErrorKind::InvalidInput, "unramified etale class has no conductor");
      td.tag = GroupTag::etale();
      td.m = *as.m;
      break;
    }
  }
  td.c = -td.m;
  td.delta = different_degree(td.tag, p, r);
  return td;
}

/// The same torsor written in the shape of its group: a Kummer unit whose
/// residue is a p-th power becomes u / D^p = 1 + pi^(np) H, i.e. an H_n or
/// etale equation in H, over the same parameter T.
inline TorsorEquation effective_equation(const TorsorEquation& eq, const TorsorData& td) {
  if (eq.kind != EqKind::Kummer || td.tag.kind == GroupKind::MuP) return eq;
  const int p = eq.ring()->p;
  StripResult sr = strip_pth_powers_rational(eq.u);
  RLaurent H = (eq.u - sr.D.pow(p)).shift_down(sr.level) * sr.D.invert_unit().pow(p);
  return td.tag.is_etale() ? TorsorEquation::etale(H) : TorsorEquation::hn(td.tag.n, H);
}

/// Simplified form and the parameter change T' = T*s reaching it.
struct Simplified {
  TorsorEquation eq;
  RLaurent s;
};

inline Simplified simplify_with(const TorsorEquation& eq, const TorsorData& td) {
  const Ring& R = eq.ring();
  const int p = R->p;
  const int cap = eq.u.cap(), W = eq.u.window();
  const RLaurent one = RLaurent::one(R, cap, W);
  auto T = [&](int k) { return RLaurent::monomial(R, k, RElem::one(R), cap, W); };
  switch (eq.kind) {
    case EqKind::Kummer: {
      if (td.tag.kind == GroupKind::MuP) {
        const int l = eq.u.residue_order();
        if (td.m == 0) {
          // Z^p = T^h v, s = v^(1/h)
          RLaurent v = eq.u.shifted(-l);
          return {TorsorEquation::kummer(T(td.h)), v.series_root(td.h)};
        }
        KLaurent ub = eq.u.residue_series();
        const int mc = td.m + l;
        KLaurent block = KLaurent::from_terms(R, detail::terms_below(ub, mc), W);
        RLaurent g = RLaurent::lift(block.pth_root(), cap, W);
        RLaurent u1 = eq.u * g.invert_unit().pow(p);
        RLaurent v = (u1 - one).shifted(-td.m);
        return {TorsorEquation::kummer(one + T(td.m)), v.series_root(td.m)};
      }
      return simplify_with(effective_equation(eq, td), td);
    }
    case EqKind::Hn: {
      KLaurent ub = eq.u.residue_series();
      KLaurent block = KLaurent::from_terms(R, detail::terms_below(ub, td.m), W);
      RLaurent u1 = eq.u;
      if (!block.is_zero()) {
        RLaurent h = RLaurent::lift(block.pth_root(), cap, W);
        RLaurent D = detail::pth_power_increment(h, eq.n);
        u1 = (eq.u - D) * (one + D.scaled(RElem::pi_power(R, eq.n * p))).invert_unit();
      }
      RLaurent v = u1.shifted(-td.m);
      return {TorsorEquation::hn(eq.n, T(td.m)), v.series_root(td.m)};
    }
    case EqKind::Etale: {
      ASReduction as = as_reduce(eq.u.residue_series());
      RLaurent b = RLaurent::lift(as.witness, cap, W);
      RLaurent D = detail::pth_power_increment(b, R->r);
      RLaurent u1 = (eq.u - D) * (one + D.scaled(RElem::pi_power(R, R->r * p))).invert_unit();
      RLaurent v = u1.shifted(-td.m);
      return {TorsorEquation::etale(T(td.m)), v.series_root(td.m)};
    }
  }
  fail(ErrorKind::Internal, "unknown equation kind");
}

inline Simplified simplify(const TorsorEquation& eq) { return simplify_with(eq, classify_invariants(eq)); }

/// Full classification including the simplified form.
inline TorsorData classify(const TorsorEquation& eq, bool with_normal_form = true) {
  TorsorData td = classify_invariants(eq);
  if (with_normal_form) {
    Simplified s = simplify_with(eq, td);
    td.normalized = s.eq;
    td.parameter_change = s.s;
  }
  return td;
}

}  // namespace germrh
