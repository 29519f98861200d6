#pragma once

// Oracle-versus-closed-form verification grid: concrete perturbed equations for
// every case of the conductor table, run in parallel.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "germrh/oracle.hpp"
#include "germrh/propagation.hpp"

namespace germrh {

struct GridRing {
  int p = 3, r = 3, s = 1, M = 8;
  auto key() const { return std::tuple(p, r, s, M); }
};

/// Default M per prime (p^(M+1) must fit the digit type).
inline int default_M(int p) { return p == 3 ? 8 : p == 5 ? 6 : p == 2 ? 12 : 4; }

struct GridCell {
  int case_id = 0;  // 1 (Et,Et) 2 (Et,mu) 3 (Et,H) 4 (H,mu) 5 (mu,mu) 6 (H,H)
  GridRing ring;
  GroupTag t1, t2;
  int m1 = 0, m2 = 0;
  bool independent_leads = false;  // equal conductors: lead of eq2 outside F_p
  std::uint64_t seed = 0;
  std::string label() const {
    return "case " + std::to_string(case_id) + " p=" + std::to_string(ring.p) + " r=" + std::to_string(ring.r) +
           " s=" + std::to_string(ring.s) + " (" + t1.to_string() + " m=" + std::to_string(m1) + ", " + t2.to_string() +
           " m=" + std::to_string(m2) + ")";
  }
};

struct GridCellResult {
  GridCell cell;
  std::string eq1, eq2;  // the perturbed equations, printable
  // closed form
  bool formula_ok = false;
  PPResult formula;
  std::string formula_error;
  // identities on the propagated pair
  bool identities_ok = false;
  std::string identities_error;
  // oracle, both roles
  bool oracle_ok = false;
  ErrorKind oracle_error_kind = ErrorKind::Internal;
  std::string oracle_error;
  OracleResult o1, o2;
  bool tags_checked = false;
  bool match = false;
  // boundary reducedness versus the fibre-product criterion
  std::optional<bool> reduced;
  bool reduced_expected = false;
  std::string reduced_error;
  double seconds = 0;
};

using FormulaFn = std::function<PPResult(const PPInput&)>;

namespace detail {

inline std::vector<int> etale_m_grid(int p) {
  std::vector<int> out;
  for (int m : {-1, -2, -4, -5, -7, -8})
    if (m % p != 0) out.push_back(m);
  return out;
}
inline std::vector<int> mu_m_grid(int p) {
  std::vector<int> out;
  for (int m : {0, 1, 2, 4, 5})
    if (m == 0 || m % p != 0) out.push_back(m);
  return out;
}
inline std::vector<int> hn_m_grid(int p) {
  std::vector<int> out;
  for (int m : {-4, -2, -1, 1, 2, 4})
    if (m % p != 0) out.push_back(m);
  return out;
}

inline std::uint64_t mix_seed(std::uint64_t h, long long v) {
  h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

inline std::uint64_t cell_seed(const GridCell& c, std::uint64_t base) {
  std::uint64_t h = base;
  for (long long v : {static_cast<long long>(c.case_id), static_cast<long long>(c.ring.p), static_cast<long long>(c.ring.r),
                      static_cast<long long>(c.ring.s), static_cast<long long>(c.t1.n), static_cast<long long>(c.t2.n),
                      static_cast<long long>(c.m1), static_cast<long long>(c.m2)})
    h = mix_seed(h, v);
  return h;
}

/// Least b with b^m outside F_p (exists for s = 3 and the grid's m).
inline KElem lead_outside_prime_field(const Ring& R, int m) {
  for (KElem b = 1; b < R->k.size(); ++b)
    if (R->k.pow(b, m) >= R->p) return R->k.pow(b, m);
  fail(ErrorKind::ResidueFieldTooSmall, "no m-th power outside F_p; increase s");
}

}  // namespace detail

/// Cells of the conductor table for prime p.  Levels n of H_n come from the
/// ring r = p + n where the different table is integral.
inline std::vector<GridCell> table_grid(int p, std::uint64_t seed = 20240601) {
  const int M = default_M(p);
  std::vector<GridCell> cells;
  auto add = [&](int id, int r, GroupTag t1, int m1, GroupTag t2, int m2) {
    GridCell c;
    c.case_id = id;
    c.t1 = t1;
    c.t2 = t2;
    c.m1 = m1;
    c.m2 = m2;
    c.independent_leads = m1 == m2 && t1 == t2;
    c.ring = {p, r, c.independent_leads ? 3 : 1, M};
    c.seed = detail::cell_seed(c, seed);
    cells.push_back(c);
  };
  const auto et = detail::etale_m_grid(p), mu = detail::mu_m_grid(p), hn = detail::hn_m_grid(p);
  for (int a : et)
    for (int b : et) add(1, p, GroupTag::etale(), a, GroupTag::etale(), b);
  for (int a : et)
    for (int b : mu) add(2, p, GroupTag::etale(), a, GroupTag::mu(), b);
  for (int n = 1; n < p; ++n)
    for (int a : et)
      for (int b : hn) add(3, p, GroupTag::etale(), a, GroupTag::hn(n), b);
  for (int n = 1; n < p; ++n)
    for (int a : hn)
      for (int b : mu) add(4, p + n, GroupTag::hn(n), a, GroupTag::mu(), b);
  for (int a : mu)
    for (int b : mu)
      if (a != 0 || b != 0) add(5, p, GroupTag::mu(), a, GroupTag::mu(), b);
  for (int j = 1; j < p; ++j)
    for (int n1 = 1; n1 <= j; ++n1)
      for (int n2 = 1; n2 <= j; ++n2) {
        if (std::max(n1, n2) != j) continue;
        for (int a : hn)
          for (int b : hn) add(6, p + j, GroupTag::hn(n1), a, GroupTag::hn(n2), b);
      }
  return cells;
}

/// Small grid: a handful of cells per case.
inline std::vector<GridCell> smoke_grid(int p, std::uint64_t seed = 20240601) {
  std::vector<GridCell> all = table_grid(p, seed), out;
  std::map<int, int> taken;
  for (const auto& c : all)
    if (taken[c.case_id]++ < 3) out.push_back(c);
  return out;
}

/// A concrete equation with invariants (tag, m), leading coefficient lead and
/// random higher-order terms that keep the invariants.
inline TorsorEquation grid_equation(const Ring& R, const GroupTag& tag, int m, KElem lead, std::mt19937_64& rng,
                                    bool perturb, int window) {
  const int p = R->p, cap = R->max_prec;
  std::map<int, RElem> t;
  auto unit = [&]() {
    std::uniform_int_distribution<int> d(1, R->k.size() - 1);
    return RElem::lift(R, d(rng), cap);
  };
  auto add = [&](int k, const RElem& c) {
    auto it = t.find(k);
    if (it == t.end())
      t.emplace(k, c);
    else
      it->second = it->second + c;
  };
  std::uniform_int_distribution<int> count(0, 3), above(1, 3);
  const RElem L = RElem::lift(R, lead, cap);
  switch (tag.kind) {
    case GroupKind::Etale: {
      add(m, L);
      if (perturb) {
        for (int i = count(rng); i > 0; --i) add(m + above(rng), unit());
        // invisible on the special fibre
        std::uniform_int_distribution<int> v(1, p * R->r - 1), ex(m - 3, m + 3);
        for (int i = count(rng); i > 0; --i) add(ex(rng), unit() * RElem::pi_power(R, v(rng)));
      }
      return TorsorEquation::etale(RLaurent::from_terms(R, t, cap, window));
    }
    case GroupKind::MuP: {
      if (m == 0) {
        add(1, L);
        if (perturb)
          for (int i = count(rng); i > 0; --i) add(1 + above(rng), unit());
        return TorsorEquation::kummer(RLaurent::from_terms(R, t, cap, window));
      }
      add(0, RElem::one(R));
      add(m, L);
      if (perturb) {
        for (int i = count(rng); i > 0; --i) add(m + above(rng), unit());
        // p-th powers strictly between the constant and t^m
        std::vector<int> mids;
        for (int k = p; k < m; k += p) mids.push_back(k);
        if (!mids.empty() && count(rng) > 1) add(mids[rng() % mids.size()], unit());
      }
      return TorsorEquation::kummer(RLaurent::from_terms(R, t, cap, window));
    }
    case GroupKind::Hn: {
      add(m, L);
      if (perturb)
        for (int i = count(rng); i > 0; --i) add(m + above(rng), unit());
      return TorsorEquation::hn(tag.n, RLaurent::from_terms(R, t, cap, window));
    }
  }
  fail(ErrorKind::Internal, "unknown tag");
}

class RingCache {
 public:
  Ring get(const GridRing& g) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = rings_.find(g.key());
    if (it != rings_.end()) return it->second;
    Ring R = make_ring(g.p, g.r, g.s, g.M);
    rings_.emplace(g.key(), R);
    return R;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int, int>, Ring> rings_;
};

inline void check_identities(const PPInput& in, const PPResult& f) {
  const int p = in.p;
  require(special_different(in.g1.c, f.c1p, p) == special_different(in.g2.c, f.c2p, p), ErrorKind::Internal,
          "special differents of the two orderings differ");
  require(conductor_relation_check(in.g1.c, in.g2.c, f.c1p, f.c2p, p), ErrorKind::Internal, "c'_2 - c'_1 != (c_1 - c_2) p");
  require(f.has_differents, ErrorKind::IncompatibleRing, "different table not integral: " + f.differents_error);
  require(in.g1.delta + f.d1p == in.g2.delta + f.d2p, ErrorKind::Internal, "delta_1 + delta'_1 != delta_2 + delta'_2");
}

inline GridCellResult run_cell(const GridCell& cell, RingCache& rings, const FormulaFn& formula, const OracleOptions& opt,
                               bool with_reducedness = true) {
  auto t0 = std::chrono::steady_clock::now();
  GridCellResult out;
  out.cell = cell;
  const Ring R = rings.get(cell.ring);
  const int p = R->p, r = R->r;
  std::mt19937_64 rng(cell.seed);
  const int W = std::max(detail::default_oracle_window(R, cell.m1, cell.m2, std::abs(cell.m2) + 4),
                         detail::default_oracle_window(R, cell.m2, cell.m1, std::abs(cell.m1) + 4));
  const KElem lead2 = cell.independent_leads ? detail::lead_outside_prime_field(R, cell.m2) : 1;
  TorsorEquation eq1 = grid_equation(R, cell.t1, cell.m1, 1, rng, true, W);
  TorsorEquation eq2 = grid_equation(R, cell.t2, cell.m2, lead2, rng, true, W);
  out.eq1 = to_string(eq1.kind) + (eq1.kind == EqKind::Hn ? std::to_string(eq1.n) : "") + ": " + eq1.u.to_string();
  out.eq2 = to_string(eq2.kind) + (eq2.kind == EqKind::Hn ? std::to_string(eq2.n) : "") + ": " + eq2.u.to_string();
  PPInput in{abstract_torsor(cell.t1, cell.m1, p, r), abstract_torsor(cell.t2, cell.m2, p, r), p, r};
  try {
    out.formula = formula(in);
    out.formula_ok = true;
    try {
      check_identities(in, out.formula);
      out.identities_ok = true;
    } catch (const Error& e) {
      out.identities_error = e.what();
    }
  } catch (const Error& e) {
    out.formula_error = e.what();
  }
  try {
    OracleOptions o = opt;
    o.window = opt.window > 0 ? opt.window : W;
    out.o1 = oracle_conductor(eq1, eq2, o);
    out.o2 = oracle_conductor(eq2, eq1, o);
    out.oracle_ok = true;
    // the invariants of the concrete equations must be the cell's
    const TorsorData a = classify_invariants(eq1), b = classify_invariants(eq2);
    require(a.tag == cell.t1 && a.m == cell.m1 && b.tag == cell.t2 && b.m == cell.m2, ErrorKind::Internal,
            "perturbation changed the invariants");
  } catch (const Error& e) {
    out.oracle_ok = false;
    out.oracle_error_kind = e.kind();
    out.oracle_error = e.what();
  }
  if (out.formula_ok && out.oracle_ok) {
    out.match = out.formula.m1p == out.o1.m1p && out.formula.m2p == out.o2.m1p;
    // over the special fibre the upper group is read off the table itself
    out.tags_checked = !cell.t1.is_etale() && !cell.t2.is_etale() && out.formula.has_differents;
    if (out.tags_checked)
      out.match = out.match && out.formula.g1p == out.o1.upper_tag && out.formula.g2p == out.o2.upper_tag;
  }
  if (with_reducedness) {
    out.reduced_expected = is_fiber_product_torsor({cell.t1, cell.t2});
    try {
      OracleOptions o = opt;
      o.window = opt.window > 0 ? opt.window : W;
      out.reduced = boundary_reducedness(eq1, eq2, o);
    } catch (const Error& e) {
      out.reduced_error = e.what();
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// GERMRH_THREADS if set and positive, else the hardware concurrency.
inline int grid_threads() {
  if (const char* env = std::getenv("GERMRH_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::vector<GridCellResult> run_grid(const std::vector<GridCell>& cells, const OracleOptions& opt = {},
                                            const FormulaFn& formula = propagate, int threads = 0,
                                            bool with_reducedness = true) {
  if (threads <= 0) threads = grid_threads();
  threads = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  std::vector<GridCellResult> results(cells.size());
  RingCache rings;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      results[i] = run_cell(cells[i], rings, formula, opt, with_reducedness);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return results;
}

// ---------------------------------------------------------------------------
// fixed example: u1 = T, u2 = T + T^3 over p = r = 3
// ---------------------------------------------------------------------------

struct FixtureResult {
  OracleResult o1, o2;
  PPResult formula;
};

inline FixtureResult mu_mu_fixture(const OracleOptions& opt = {}) {
  Ring R = make_ring(3, 3, 1, 8);
  const int cap = R->max_prec, W = 30;
  auto T = [&](int k) { return RLaurent::monomial(R, k, RElem::one(R), cap, W); };
  TorsorEquation e1 = TorsorEquation::kummer(T(1));
  TorsorEquation e2 = TorsorEquation::kummer(T(1) + T(3));
  FixtureResult f;
  f.o1 = oracle_conductor(e1, e2, opt);
  f.o2 = oracle_conductor(e2, e1, opt);
  const TorsorData a = classify_invariants(e1), b = classify_invariants(e2);
  try {
    f.formula = propagate({abstract_torsor(a.tag, a.m, 3, 3), abstract_torsor(b.tag, b.m, 3, 3), 3, 3});
  } catch (const Error&) {
    // both conductors 0: no closed form, the oracle alone decides
  }
  return f;
}

}  // namespace germrh
