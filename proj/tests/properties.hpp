#pragma once

// Randomized property suites shared by the unit tests and the acceptance
// binary.  Generators are plain std::mt19937_64 draws with fixed seeds.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "germrh/grid.hpp"
#include "germrh/laurent.hpp"
#include "germrh/torsor.hpp"

namespace germrh::testing {

struct SuiteResult {
  std::string name;
  int instances = 0;
  int failures = 0;
  std::string first_failure;
  bool ok() const { return instances > 0 && failures == 0; }
};

/// Runs body(rng, i) n times; body returns an empty string on success.
inline SuiteResult run_suite(const std::string& name, int n, std::uint64_t seed,
                             const std::function<std::string(std::mt19937_64&, int)>& body) {
  SuiteResult res;
  res.name = name;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    std::string err;
    try {
      err = body(rng, i);
    } catch (const Error& e) {
      err = std::string("threw: ") + e.what();
    }
    ++res.instances;
    if (!err.empty()) {
      if (res.failures++ == 0) res.first_failure = "instance " + std::to_string(i) + ": " + err;
    }
  }
  return res;
}

inline int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct RingChoice {
  int p, r, s, M;
};

/// Rings used by the element and series suites.
inline const std::vector<RingChoice>& small_rings() {
  static const std::vector<RingChoice> rings{{3, 1, 1, 6}, {3, 2, 1, 6}, {3, 3, 2, 5}, {5, 2, 1, 4}, {5, 1, 2, 4}, {2, 3, 1, 10}};
  return rings;
}

inline Ring ring_for(const RingChoice& c) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int, int>, Ring> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::tuple(c.p, c.r, c.s, c.M);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Ring R = make_ring(c.p, c.r, c.s, c.M);
  cache.emplace(key, R);
  return R;
}

inline Ring random_small_ring(std::mt19937_64& rng) {
  const auto& rs = small_rings();
  return ring_for(rs[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(rs.size()) - 1))]);
}

/// Uniform element: random digits in every pi-adic place.
inline RElem random_elem(const Ring& R, std::mt19937_64& rng, int prec = -1) {
  const int pr = prec < 0 ? R->max_prec : prec;
  std::vector<int> dg(static_cast<std::size_t>(pr));
  for (auto& d : dg) d = uniform(rng, 0, R->k.size() - 1);
  return RElem::from_digits(R, dg, pr);
}

inline RElem random_unit(const Ring& R, std::mt19937_64& rng, int prec = -1) {
  RElem x = random_elem(R, rng, prec);
  const KElem a = static_cast<KElem>(uniform(rng, 1, R->k.size() - 1));
  return x - RElem::lift(R, x.residue(), x.prec()) + RElem::lift(R, a, x.prec());
}

/// pi^v * unit, v in [0, vmax].
inline RElem random_valued(const Ring& R, std::mt19937_64& rng, int vmax) {
  return RElem::pi_power(R, uniform(rng, 0, vmax)) * random_unit(R, rng);
}

inline int random_coprime(std::mt19937_64& rng, int p, int lo, int hi) {
  for (;;) {
    int m = uniform(rng, lo, hi);
    if (m != 0 && ((m % p) + p) % p != 0) return m;
  }
}

// ---------------------------------------------------------------------------
// suites
// ---------------------------------------------------------------------------

/// v(xy) = v(x) + v(y); v(x + y) >= min with equality when the two differ.
inline SuiteResult valuation_additivity(int n = 1000, std::uint64_t seed = 101) {
  return run_suite("valuation additivity", n, seed, [](std::mt19937_64& rng, int) -> std::string {
    const Ring R = random_small_ring(rng);
    const int e = R->e;
    RElem x = random_valued(R, rng, 2 * e), y = random_valued(R, rng, 2 * e);
    auto vx = x.val(), vy = y.val();
    if (!vx || !vy) return "generator produced an uncertified valuation";
    auto vxy = (x * y).val();
    if (*vx + *vy < R->max_prec) {
      if (!vxy || *vxy != *vx + *vy)
        return "v(xy) = " + (vxy ? std::to_string(*vxy) : std::string("?")) + ", expected " + std::to_string(*vx + *vy);
    }
    auto vs = (x + y).val();
    const int lo = std::min(*vx, *vy);
    if (vs && *vs < lo) return "v(x+y) below min";
    if (*vx != *vy && (!vs || *vs != lo)) return "v(x+y) != min for distinct valuations";
    return "";
  });
}

/// unit_root and series_root: y^m reproduces the input to its precision.
inline SuiteResult hensel_roots(int n = 1000, std::uint64_t seed = 202) {
  return run_suite("Hensel roots", n, seed, [](std::mt19937_64& rng, int i) -> std::string {
    const Ring R = random_small_ring(rng);
    const int p = R->p;
    const int m = random_coprime(rng, p, -9, 9);
    if (i % 2 == 0) {
      // element: x = y0^m * (1 + pi z) always has a residue m-th root
      RElem y0 = random_unit(R, rng);
      RElem x = y0.pow(m) * (RElem::one(R) + RElem::uniformizer(R) * random_elem(R, rng));
      RElem y = x.unit_root(m);
      if (!y.pow(m).agrees(x)) return "unit_root(" + std::to_string(m) + ")^m != x";
      if (y.residue() != y0.residue() && R->k.pow(y.residue(), m) != x.residue()) return "residue of root is not a root";
      return "";
    }
    // series: u = c^m T^(m j) (1 + B) with B small
    const int cap = std::min(R->max_prec, 3 * R->e), W = 24;
    const KElem c = static_cast<KElem>(uniform(rng, 1, R->k.size() - 1));
    const int j = uniform(rng, -2, 2);
    std::map<int, RElem> t{{0, RElem::one(R, cap)}};
    for (int k = 1; k <= 3; ++k)
      if (uniform(rng, 0, 1)) t[k] = random_elem(R, rng, cap);
    for (int k = -3; k < 0; ++k)
      if (uniform(rng, 0, 1)) t[k] = RElem::uniformizer(R, cap) * random_elem(R, rng, cap);
    RLaurent u = RLaurent::from_terms(R, t, cap, W) *
                 RLaurent::monomial(R, m * j, RElem::lift(R, R->k.pow(c, m), cap), cap, W);
    RLaurent s = u.series_root(m);
    if (!(s.pow(m) - u).zero_to_precision()) return "series_root(" + std::to_string(m) + ")^m != u";
    return "";
  });
}

/// (1+B)^(a/b) (1+B)^(-a/b) = 1 and ((1+B)^(1/b))^b = 1+B.
inline SuiteResult binomial_inverse(int n = 1000, std::uint64_t seed = 303) {
  return run_suite("binomial-power inverse", n, seed, [](std::mt19937_64& rng, int) -> std::string {
    const Ring R = random_small_ring(rng);
    const int p = R->p;
    // negative exponents -k carry valuation >= k so that powers of B leave
    // the window only once they are below the precision cap
    const int cap = std::min(R->max_prec, 3 * R->e), W = 40;
    std::map<int, RElem> t;
    for (int k = 1; k <= 4; ++k)
      if (uniform(rng, 0, 1)) t[k] = random_elem(R, rng, cap);
    for (int k = -2; k <= 0; ++k)
      if (uniform(rng, 0, 2) == 0) t[k] = RElem::pi_power(R, std::max(1, -k), cap) * random_elem(R, rng, cap);
    RLaurent B = RLaurent::from_terms(R, t, cap, W);
    const RLaurent one = RLaurent::one(R, cap, W);
    const long long b = random_coprime(rng, p, 1, 9);
    const long long a = uniform(rng, -6, 6);
    RLaurent x = B.binom_power(a, b), y = B.binom_power(-a, b);
    if (!(x * y - one).zero_to_precision()) return "(1+B)^(a/b) (1+B)^(-a/b) != 1";
    RLaurent r = B.binom_power(1, b);
    if (!(r.pow(b) - (one + B)).zero_to_precision()) return "((1+B)^(1/b))^b != 1+B";
    return "";
  });
}

/// Artin-Schreier reduction: input = rep + w^p - w, rep reduced.
inline SuiteResult as_witness(int n = 1000, std::uint64_t seed = 404) {
  return run_suite("AS-reduction witness", n, seed, [](std::mt19937_64& rng, int) -> std::string {
    const Ring R = random_small_ring(rng);
    const int p = R->p, W = 60;
    std::map<int, KElem> t;
    const int terms = uniform(rng, 1, 6);
    for (int i = 0; i < terms; ++i) t[uniform(rng, -12, 6)] = static_cast<KElem>(uniform(rng, 1, R->k.size() - 1));
    KLaurent u = KLaurent::from_terms(R, t, W);
    ASReduction as = as_reduce(u);
    KLaurent back = as.rep + as.witness.pow(p) - as.witness;
    if (!back.agrees(u)) return "rep + w^p - w != input for " + u.to_string();
    const ResidueField& k = R->k;
    for (const auto& [e, c] : as.rep.terms()) {
      if (e > 0 || (e < 0 && e % p == 0)) return "representative has exponent " + std::to_string(e);
      if (e == 0) {
        // a constant survives only if it is not b^p - b for any b in k
        for (KElem b = 0; b < k.size(); ++b)
          if (k.sub(k.pow(b, p), b) == c) return "constant " + std::to_string(c) + " is an AS coboundary";
      }
    }
    if (as.zero_class != as.rep.terms().empty()) return "zero_class flag disagrees with representative";
    const auto lowest = as.rep.lowest();
    if (as.m.has_value() != (lowest && *lowest < 0)) return "m set without a pole, or missing";
    if (as.m && *as.m != *lowest) return "m is not the lowest exponent of the representative";
    return "";
  });
}

/// Kummer p-power stripping: u' = u w^p with w a unit, and u' stops on a
/// readable term.
inline SuiteResult strip_witness(int n = 1000, std::uint64_t seed = 505) {
  return run_suite("p-power-strip witness", n, seed, [](std::mt19937_64& rng, int) -> std::string {
    const int p = uniform(rng, 0, 1) ? 3 : 5;
    const Ring R = ring_for({p, p, 1, p == 3 ? 8 : 6});
    const int cap = default_oracle_precision(R), W = 40;
    auto mono = [&](int k, const RElem& c) { return RLaurent::monomial(R, k, c, cap, W); };
    const RLaurent one = RLaurent::one(R, cap, W);
    // v: a readable unit, mu_p (a2) or a level-n form
    RLaurent v;
    const int kind = uniform(rng, 0, 2);
    const int m = random_coprime(rng, p, kind == 0 ? 1 : -6, 6);
    if (kind == 0) {
      v = one + mono(m, random_unit(R, rng, cap));
    } else {
      // level n: 1 + pi^(np) T^m, etale level n = r only with a pole
      const int lvl = m > 0 ? uniform(rng, 1, R->r - 1) : uniform(rng, 1, R->r);
      v = one + mono(m, RElem::pi_power(R, lvl * p, cap) * random_unit(R, rng, cap));
    }
    // g: a unit Laurent polynomial with residue 1 + (positive part)
    std::map<int, RElem> gt{{0, RElem::one(R, cap)}};
    for (int k = 1; k <= 2; ++k)
      if (uniform(rng, 0, 1)) gt[k] = random_elem(R, rng, cap);
    if (uniform(rng, 0, 1)) gt[-uniform(rng, 1, 3)] = RElem::pi_power(R, uniform(rng, 1, 3), cap) * random_unit(R, rng, cap);
    RLaurent g = RLaurent::from_terms(R, gt, cap, W);
    RLaurent u = v * g.pow(p);
    StripWitness sw = strip_pth_powers(u);
    if (sw.w.residue_order() != 0 && sw.w.empty()) return "witness is empty";
    const RLaurent back = sw.u * sw.w.invert_unit().pow(p);
    if (!(back - u).zero_to_precision()) return "u' w^-p != u";
    if (sw.info.outcome == StripOutcome::Trivial) return "nontrivial input reported trivial";
    return "";
  });
}

/// (tag, m, c, delta) unchanged under T -> T s for random units s.
inline SuiteResult parameter_change_invariance(int n = 1000, std::uint64_t seed = 606) {
  return run_suite("parameter-change invariance", n, seed, [](std::mt19937_64& rng, int) -> std::string {
    const int p = uniform(rng, 0, 2) ? 3 : 5;
    const int n_level = uniform(rng, 1, p - 1);
    const Ring R = ring_for({p, p + (uniform(rng, 0, 1) ? n_level : 0), 1, p == 3 ? 8 : 6});
    const int cap = default_oracle_precision(R);
    const int which = uniform(rng, 0, 3);
    GroupTag tag;
    int m = 0;
    switch (which) {
      case 0: tag = GroupTag::etale(); m = random_coprime(rng, p, -8, -1); break;
      case 1: tag = GroupTag::mu(); m = uniform(rng, 0, 2) == 0 ? 0 : random_coprime(rng, p, 1, 5); break;
      case 2: tag = GroupTag::hn(uniform(rng, 1, R->r - 1)); m = random_coprime(rng, p, -4, 4); break;
      default: tag = GroupTag::hn(uniform(rng, 1, R->r - 1)); m = random_coprime(rng, p, 1, 4); break;
    }
    const int W = 3 * p * (std::abs(m) + 6);
    const KElem lead = static_cast<KElem>(uniform(rng, 1, R->k.size() - 1));
    TorsorEquation eq = grid_equation(R, tag, m, lead, rng, true, W);
    // s = c0 (1 + a1 T + a2 T^2) + pi-adically small terms on both sides
    std::map<int, RElem> st{{0, random_unit(R, rng, cap)}};
    for (int k = 1; k <= 2; ++k)
      if (uniform(rng, 0, 1)) st[k] = random_elem(R, rng, cap);
    if (uniform(rng, 0, 1)) st[-1] = RElem::pi_power(R, uniform(rng, R->r, cap - 1), cap) * random_unit(R, rng, cap);
    const RLaurent s = RLaurent::from_terms(R, st, cap, W);
    const RLaurent Ts = RLaurent::monomial(R, 1, RElem::one(R, cap), cap, W) * s;
    TorsorEquation moved = eq;
    moved.u = eq.u.with_cap(cap).substitute(Ts);
    const TorsorData a = classify_invariants(eq), b = classify_invariants(moved);
    if (a.tag != tag || a.m != m) return "generator invariants off: " + a.tag.to_string() + " m=" + std::to_string(a.m);
    if (a.tag != b.tag || a.m != b.m || a.c != b.c || a.delta != b.delta)
      return "invariants moved: " + a.tag.to_string() + " m=" + std::to_string(a.m) + " vs " + b.tag.to_string() +
             " m=" + std::to_string(b.m) + " for u = " + eq.u.to_string();
    return "";
  });
}

inline std::vector<SuiteResult> all_property_suites(int n = 1000) {
  return {valuation_additivity(n), hensel_roots(n),  parameter_change_invariance(n),
          binomial_inverse(n),     as_witness(n),    strip_witness(n)};
}

}  // namespace germrh::testing
