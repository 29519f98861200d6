#pragma once

// Brute-force upper conductors: express the base parameter in terms of the
// parameter of one degree-p cover, pull the other torsor equation back along
// it, and classify the result.  Pairs involving an etale torsor are handled
// on special fibres; all other pairs over R.

#include <algorithm>
#include <climits>
#include <cstdlib>
#include <optional>
#include <string>

#include "germrh/error.hpp"
#include "germrh/laurent.hpp"
#include "germrh/propagation.hpp"
#include "germrh/torsor.hpp"

namespace germrh {

struct OracleOptions {
  int precision = 0;  // pi-adic cap N; 0 picks p*v(lambda) + 2
  int window = 0;     // exponent window W of the cover's parameter; 0 picks a default
  bool stability = true;
  bool trace = false;
};

/// Old parameter as a series in the new one; exactly one of t / T is set.
struct ParameterExpansion {
  bool residue_level = false;
  std::optional<KLaurent> t;
  std::optional<RLaurent> T;
  bool truncated = false;  // positive tail cut by the window (base needed a reversion)
};

struct PulledBackEquation {
  std::string variable = "Z";
  std::optional<RLaurent> rhs;           // Kummer unit over R in Z
  std::optional<KLaurent> rhs_residue;   // residue-level defining series in z
  EqKind residue_kind = EqKind::Kummer;  // how rhs_residue is read
  StageLog stage_log;
};

struct OracleResult {
  int m1p = 0;
  GroupTag upper_tag;
  int n_prime = 0;  // level of upper_tag: 0 mu_p, v(lambda) etale
  int precision = 0, window = 0;
  bool stable = false;
  StageLog log;
};

inline int default_oracle_precision(const Ring& R) { return R->p * R->r + 2; }

namespace detail {

inline int max_abs_exponent(const RLaurent& u) {
  if (u.empty()) return 0;
  return std::max(std::abs(u.lo()), std::abs(u.hi()));
}

inline int default_oracle_window(const Ring& R, int m1, int m2, int span2) {
  const int p = R->p;
  return std::max(p * (std::abs(m1) + std::abs(m2) + p + 2), p * (span2 + std::abs(m1) + 2));
}

inline TorsorEquation at_precision(const TorsorEquation& eq, int cap, int window) {
  TorsorEquation out = eq;
  require(cap <= eq.u.cap(), ErrorKind::PrecisionExhausted,
          "input series known only to pi^" + std::to_string(eq.u.cap()) + ", oracle needs " + std::to_string(cap));
  out.u = eq.u.with_cap(cap).with_window(std::max(window, eq.u.window()));
  return out;
}

inline bool is_identity(const RLaurent& s) {
  RLaurent d = s - RLaurent::one(s.ring(), s.cap(), s.window());
  return d.zero_to_precision() && d.head() >= d.cap() && d.tail() >= d.cap();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// parameter expansions for simplified equations
// ---------------------------------------------------------------------------

/// t (resp. T) in terms of the parameter z (resp. Z) of the cover defined by
/// the simplified equation with invariants td.
inline ParameterExpansion parameter_expansion(const TorsorData& td, const Ring& R, int cap, int window,
                                              bool residue_level) {
  const int p = R->p;
  ParameterExpansion out;
  out.residue_level = residue_level;
  if (residue_level) {
    KLaurent zp = KLaurent::monomial(R, p, 1, window);
    if (td.tag.is_etale()) {
      // z^p - z... with z1 = z^m: t = z^p (1 - z^(-m(p-1)))^(1/m)
      require(td.m < 0, ErrorKind::InvalidInput, "etale conductor variable must be negative");
      KLaurent x = -KLaurent::monomial(R, -td.m * (p - 1), 1, window);
      out.t = zp * x.binom_power(1, td.m);
    } else {
      out.t = zp;
    }
    return out;
  }
  RLaurent Zp = RLaurent::monomial(R, p, RElem::one(R), cap, window);
  if (td.tag.kind == GroupKind::MuP && td.m == 0) {
    out.T = Zp;
    return out;
  }
  require(!td.tag.is_etale(), ErrorKind::Internal, "etale bases are expanded on the special fibre");
  // T^m = Z^(mp) (1 + B); mu_p: B = sum C(p,k) Z^(-m(p-k)); H_n: C(p,k) pi^(-n(p-k)) Z^(-m(p-k))
  std::map<int, RElem> B;
  RElem eps(R, R->eps, R->max_prec);
  for (int k = 1; k < p; ++k) {
    RElem c = td.tag.kind == GroupKind::MuP
                  ? RElem::from_int(R, detail::binomial_int(p, k))
                  : RElem::from_int(R, detail::binomial_int(p, k) / p) * eps * RElem::pi_power(R, R->e - td.tag.n * (p - k));
    B[-td.m * (p - k)] = c;
  }
  out.T = Zp * RLaurent::from_terms(R, B, cap, window).binom_power(1, td.m);
  return out;
}

/// Substituting the expansion into its own defining equation gives an identity.
inline bool expansion_round_trip(const TorsorData& td, const ParameterExpansion& ex) {
  const auto& R = ex.residue_level ? ex.t->ring() : ex.T->ring();
  const int p = R->p;
  if (ex.residue_level) {
    const int W = ex.t->window();
    if (!td.tag.is_etale()) return ex.t->agrees(KLaurent::monomial(R, p, 1, W));
    KLaurent lhs = ex.t->pow(td.m);  // t^m = z^(pm) - z^m
    KLaurent rhs = KLaurent::monomial(R, p * td.m, 1, W) - KLaurent::monomial(R, td.m, 1, W);
    return lhs.agrees(rhs);
  }
  const int cap = ex.T->cap(), W = ex.T->window();
  auto Z = [&](int k) { return RLaurent::monomial(R, k, RElem::one(R), cap, W); };
  RLaurent diff;
  if (td.tag.kind == GroupKind::MuP && td.m == 0) {
    diff = *ex.T - Z(p);
  } else if (td.tag.kind == GroupKind::MuP) {
    diff = ex.T->pow(td.m) - ((RLaurent::one(R, cap, W) + Z(td.m)).pow(p) - RLaurent::one(R, cap, W));
  } else {
    diff = ex.T->pow(td.m) - detail::pth_power_increment(Z(td.m), td.tag.n);
  }
  return diff.zero_to_precision();
}

/// psi with psi(T') * s(psi(T')) = T', i.e. T = psi(T') for T' = T s(T).
inline RLaurent revert_parameter_change(const RLaurent& s) {
  const Ring& R = s.ring();
  const int cap = s.cap(), W = s.window();
  const RLaurent Tp = RLaurent::monomial(R, 1, RElem::one(R), cap, W);
  RLaurent psi = Tp.scaled(s.coeff(0).inverse());
  for (int it = 0;; ++it) {
    require(it <= 2 * (cap + W) + 8, ErrorKind::WindowExhausted, "series reversion did not converge on the window");
    RLaurent next = Tp * s.substitute(psi).invert_unit();
    if ((next - psi).zero_to_precision()) return next;
    psi = next;
  }
}

inline KLaurent revert_parameter_change(const KLaurent& s) {
  const Ring& R = s.ring();
  const int W = s.window();
  const KLaurent tp = KLaurent::monomial(R, 1, 1, W);
  KLaurent t = tp.scaled(s.field().inv(s.coeff(0)));
  for (int it = 0;; ++it) {
    require(it <= 2 * W + 8, ErrorKind::WindowExhausted, "series reversion did not converge on the window");
    KLaurent next = tp * s.substitute(t).inverse();
    if (next.agrees(t) && next.known_hi() == t.known_hi()) return next;
    t = next;
  }
}

// ---------------------------------------------------------------------------
// pull-back
// ---------------------------------------------------------------------------

/// Base cover data: invariants, simplified equation, and the old parameter in
/// terms of the cover's parameter (composed with the reversion if needed).
struct BaseCover {
  TorsorData td;
  ParameterExpansion expansion;
};

inline BaseCover base_cover(const TorsorEquation& eq1, int cap, int window, bool residue_level, StageLog* log) {
  BaseCover b;
  b.td = classify(eq1);
  const Ring& R = eq1.ring();
  b.expansion = parameter_expansion(b.td, R, cap, window, residue_level);
  require(expansion_round_trip(b.td, b.expansion), ErrorKind::Internal, "parameter expansion failed its round trip");
  if (log)
    log->push_back({"base", b.td.tag.to_string() + " m=" + std::to_string(b.td.m) + ", simplified " +
                                to_string(b.td.normalized->kind) + " u=" + b.td.normalized->u.to_string()});
  const RLaurent& s = *b.td.parameter_change;
  if (!detail::is_identity(s)) {
    // T' = T s(T): the expansion gives T'; the old parameter is psi(T')
    if (residue_level) {
      KLaurent psi = revert_parameter_change(s.residue_series());
      b.expansion.t = psi.substitute(*b.expansion.t);
    } else {
      // T' ~ Z^p, so terms of psi past T'^(window/p) land outside the Z-window
      const int wpsi = window / R->p + 2;
      RLaurent psi = revert_parameter_change(s.with_window(wpsi)).with_window(window);
      b.expansion.T = psi.substitute(*b.expansion.T);
      b.expansion.truncated = !psi.exact();
    }
    if (log) log->push_back({"reversion", "parameter change s = " + s.to_string()});
  }
  if (log)
    log->push_back({"expansion", residue_level ? "t = " + b.expansion.t->to_string() : "T = " + b.expansion.T->to_string()});
  return b;
}

/// eq2 written over the cover with parameter expansion ex.
inline PulledBackEquation pullback(const TorsorEquation& eq2, const ParameterExpansion& ex) {
  PulledBackEquation pb;
  const Ring& R = eq2.ring();
  if (ex.residue_level) {
    pb.residue_kind = eq2.kind;
    pb.rhs_residue = eq2.u.residue_series().substitute(*ex.t);
    pb.variable = "z";
    pb.stage_log.push_back({"pullback", "u2(t(z)) = " + pb.rhs_residue->to_string()});
    return pb;
  }
  RLaurent U = eq2.u.substitute(*ex.T);
  const int cap = U.cap(), W = U.window();
  switch (eq2.kind) {
    case EqKind::Kummer: pb.rhs = U; break;
    case EqKind::Hn: pb.rhs = RLaurent::one(R, cap, W) + U.scaled(RElem::pi_power(R, eq2.n * R->p)); break;
    case EqKind::Etale: pb.rhs = RLaurent::one(R, cap, W) + U.scaled(RElem::pi_power(R, R->r * R->p)); break;
  }
  pb.stage_log.push_back({"pullback", "F(Z) = " + pb.rhs->to_string()});
  return pb;
}

// ---------------------------------------------------------------------------
// conductor of the pulled-back torsor
// ---------------------------------------------------------------------------

namespace detail {

inline std::pair<GroupTag, int> read_residue(const PulledBackEquation& pb, const GroupTag& tag2, StageLog& log) {
  const KLaurent& F = *pb.rhs_residue;
  const int p = F.ring()->p;
  switch (tag2.kind) {
    case GroupKind::Etale: {
      ASReduction as = as_reduce(F);
      if (as.zero_class) fail(ErrorKind::Trivial, "pulled-back Artin-Schreier class is zero: covers not generically disjoint");
      require(as.m.has_value(), ErrorKind::InvalidInput, "pulled-back class is unramified");
      log.push_back({"as-reduce", "representative " + as.rep.to_string() + ", witness " + as.witness.to_string()});
      return {tag2, *as.m};
    }
    case GroupKind::MuP: {
      auto mc = F.min_coprime_exponent();
      if (!mc) {
        require(F.exact(), ErrorKind::WindowExhausted, "no coprime exponent on the known range; widen window");
        fail(ErrorKind::Trivial, "pulled-back residue is a p-th power: covers not generically disjoint");
      }
      const int l = *F.lowest();
      log.push_back({"mu-reading", "lowest exponent " + std::to_string(l) + ", minimal coprime exponent " + std::to_string(*mc)});
      return {tag2, mod_p(l, p) != 0 ? 0 : *mc - l};
    }
    case GroupKind::Hn: {
      auto mc = F.min_coprime_exponent();
      if (!mc) {
        require(F.exact(), ErrorKind::WindowExhausted, "no coprime exponent on the known range; widen window");
        fail(ErrorKind::Trivial, "pulled-back residue is a p-th power: covers not generically disjoint");
      }
      log.push_back({"alpha-reading", "minimal coprime exponent " + std::to_string(*mc)});
      return {tag2, *mc};
    }
  }
  fail(ErrorKind::Internal, "unknown tag");
}

inline OracleResult oracle_once(const TorsorEquation& eq1_in, const TorsorEquation& eq2_in, int cap, int window) {
  OracleResult res;
  res.precision = cap;
  res.window = window;
  const Ring& R = eq1_in.ring();
  require(cap <= R->max_prec, ErrorKind::PrecisionExhausted,
          "oracle precision " + std::to_string(cap) + " exceeds the ring's " + std::to_string(R->max_prec) + "; raise M");
  TorsorEquation eq1 = at_precision(eq1_in, cap, window);
  TorsorEquation eq2 = at_precision(eq2_in, cap, window);
  TorsorData td1 = classify_invariants(eq1);
  TorsorData td2 = classify_invariants(eq2);
  const bool residue_level = td1.tag.is_etale() || td2.tag.is_etale();
  res.log.push_back({"mode", residue_level ? "special fibre (etale factor present)" : "over R"});
  BaseCover base = base_cover(eq1, cap, window, residue_level, &res.log);
  if (residue_level) {
    TorsorEquation e2 = effective_equation(eq2, td2);
    PulledBackEquation pb = pullback(e2, base.expansion);
    res.log.insert(res.log.end(), pb.stage_log.begin(), pb.stage_log.end());
    auto [tag, m] = read_residue(pb, td2.tag, res.log);
    res.upper_tag = tag;
    res.m1p = m;
  } else {
    PulledBackEquation pb = pullback(eq2, base.expansion);
    res.log.insert(res.log.end(), pb.stage_log.begin(), pb.stage_log.end());
    KummerClass kc = classify_kummer(*pb.rhs, base.expansion.truncated);
    res.log.insert(res.log.end(), kc.strip.log.begin(), kc.strip.log.end());
    res.upper_tag = kc.tag;
    res.m1p = kc.m;
  }
  res.n_prime = res.upper_tag.level(R->r);
  return res;
}

}  // namespace detail

/// Conductor variable m'_1 of Y -> X_1 and its group, where X_i is defined by eq_i.
inline OracleResult oracle_conductor(const TorsorEquation& eq1, const TorsorEquation& eq2, const OracleOptions& opt = {}) {
  check_equation(eq1);
  check_equation(eq2);
  const Ring& R = eq1.ring();
  require(R->p == eq2.ring()->p && R->r == eq2.ring()->r && R->s == eq2.ring()->s, ErrorKind::InvalidInput,
          "equations over different rings");
  const int cap = opt.precision > 0 ? opt.precision : default_oracle_precision(R);
  int window = opt.window;
  if (window <= 0) {
    const TorsorData a = classify_invariants(eq1), b = classify_invariants(eq2);
    window = detail::default_oracle_window(R, a.m, b.m, detail::max_abs_exponent(eq2.u));
  }
  OracleResult res = detail::oracle_once(eq1, eq2, cap, window);
  if (opt.stability) {
    OracleResult wide = detail::oracle_once(eq1, eq2, 2 * cap, 2 * window);
    if (wide.m1p != res.m1p || wide.upper_tag != res.upper_tag)
      fail(ErrorKind::Unstable, "not determined at precision " + std::to_string(cap) + ": m'=" + std::to_string(res.m1p) + " " +
                                    res.upper_tag.to_string() + " vs m'=" + std::to_string(wide.m1p) + " " +
                                    wide.upper_tag.to_string() + " at " + std::to_string(2 * cap) + "/" + std::to_string(2 * window));
    res.stable = true;
    res.log.push_back({"stability", "unchanged at precision " + std::to_string(2 * cap) + ", window " + std::to_string(2 * window)});
  }
  return res;
}

// ---------------------------------------------------------------------------
// reducedness of the fibre product on the special fibre
// ---------------------------------------------------------------------------

namespace detail {

inline bool reducedness_once(const TorsorEquation& eq1_in, const TorsorEquation& eq2_in, int window) {
  const Ring& R = eq1_in.ring();
  const int cap = default_oracle_precision(R);
  TorsorEquation eq1 = at_precision(eq1_in, cap, window);
  TorsorEquation eq2 = at_precision(eq2_in, cap, window);
  TorsorData td2 = classify_invariants(eq2);
  // an Artin-Schreier special fibre is separable: base change keeps it reduced
  if (td2.tag.is_etale()) return true;
  BaseCover base = base_cover(eq1, cap, window, true, nullptr);
  KLaurent F = effective_equation(eq2, td2).u.residue_series().substitute(*base.expansion.t);
  if (F.min_coprime_exponent()) return true;
  // a non-etale base has t in k((z^p)) by construction, so the unknown tail of
  // F is a p-th power too
  if (!base.td.tag.is_etale() && base.expansion.t->is_pth_power()) return false;
  require(F.exact(), ErrorKind::WindowExhausted, "p-th power test undecided on the known range; widen window");
  return false;
}

}  // namespace detail

/// Special fibre of X_1 x_X X_2 over the boundary is reduced.
inline bool boundary_reducedness(const TorsorEquation& eq1, const TorsorEquation& eq2, const OracleOptions& opt = {}) {
  check_equation(eq1);
  check_equation(eq2);
  int window = opt.window;
  if (window <= 0) {
    const TorsorData a = classify_invariants(eq1), b = classify_invariants(eq2);
    window = detail::default_oracle_window(eq1.ring(), a.m, b.m, detail::max_abs_exponent(eq2.u));
  }
  const bool v = detail::reducedness_once(eq1, eq2, window);
  if (opt.stability)
    require(detail::reducedness_once(eq1, eq2, 2 * window) == v, ErrorKind::Unstable, "reducedness changes with the window");
  return v;
}

}  // namespace germrh
