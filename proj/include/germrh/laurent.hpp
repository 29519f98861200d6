#pragma once

// Truncated Laurent series over k = F_{p^s} (KLaurent) and over R (RLaurent).
//
// KLaurent: dense coefficients on [lo, hi].  An exact series is zero above hi;
// a truncated one is unknown above hi.
//
// RLaurent: dense coefficients on [lo, hi], each known modulo pi^prec_k.  Below
// lo every coefficient is 0 mod pi^head, above hi every coefficient is 0 mod
// pi^tail.  Exponents outside [-window, window] are folded into head/tail, so
// truncation only ever lowers certified precision; it never fabricates digits.

#include <algorithm>
#include <climits>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "germrh/dvr.hpp"
#include "germrh/error.hpp"
#include "germrh/residue_field.hpp"

namespace germrh {

// ---------------------------------------------------------------------------
// KLaurent
// ---------------------------------------------------------------------------

class KLaurent {
 public:
  KLaurent() = default;
  KLaurent(Ring R, int window) : R_(std::move(R)), window_(window) {}

  static KLaurent monomial(const Ring& R, int k, KElem c, int window) {
    KLaurent x(R, window);
    x.lo_ = k;
    x.c_ = {c};
    x.finish();
    return x;
  }
  static KLaurent from_terms(const Ring& R, const std::map<int, KElem>& terms, int window) {
    KLaurent x(R, window);
    if (terms.empty()) return x;
    x.lo_ = terms.begin()->first;
    x.c_.assign(static_cast<std::size_t>(terms.rbegin()->first - x.lo_ + 1), 0);
    for (const auto& [k, c] : terms) x.c_[static_cast<std::size_t>(k - x.lo_)] = c;
    x.finish();
    return x;
  }

  const Ring& ring() const { return R_; }
  const ResidueField& field() const { return R_->k; }
  int window() const { return window_; }
  bool exact() const { return exact_; }
  int lo() const { return lo_; }
  int hi() const { return lo_ + static_cast<int>(c_.size()) - 1; }
  /// Largest exponent whose coefficient is known.
  int known_hi() const { return exact_ ? INT_MAX : hi(); }

  KElem coeff(int k) const {
    if (k < lo_) return 0;
    if (k > hi()) {
      require(exact_, ErrorKind::WindowExhausted, "coefficient of t^" + std::to_string(k) + " beyond truncation; widen window");
      return 0;
    }
    return c_[static_cast<std::size_t>(k - lo_)];
  }

  /// Exactly zero (only possible for exact series).
  bool is_zero() const { return exact_ && c_.empty(); }
  /// Lowest exponent with a nonzero coefficient in the known range.
  std::optional<int> lowest() const {
    if (c_.empty()) return std::nullopt;
    return lo_;  // leading zeros are trimmed
  }
  /// Lowest exponent coprime to p carrying a nonzero coefficient.
  std::optional<int> min_coprime_exponent() const {
    const int p = R_->p;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      int k = lo_ + static_cast<int>(i);
      if (c_[i] && ((k % p) + p) % p != 0) return k;
    }
    return std::nullopt;
  }
  /// Support contained in pZ on the known range.
  bool is_pth_power() const { return !min_coprime_exponent().has_value(); }

  std::map<int, KElem> terms() const {
    std::map<int, KElem> out;
    for (std::size_t i = 0; i < c_.size(); ++i)
      if (c_[i]) out[lo_ + static_cast<int>(i)] = c_[i];
    return out;
  }

  KLaurent operator-() const {
    KLaurent x = *this;
    for (auto& c : x.c_) c = field().neg(c);
    return x;
  }
  KLaurent operator+(const KLaurent& o) const {
    const ResidueField& k = field();
    KLaurent x(R_, std::min(window_, o.window_));
    x.exact_ = exact_ && o.exact_;
    int lo = std::min(empty_lo(), o.empty_lo());
    int hi;
    if (x.exact_)
      hi = std::max(this->hi(), o.hi());
    else
      hi = std::min(exact_ ? INT_MAX : this->hi(), o.exact_ ? INT_MAX : o.hi());
    x.lo_ = lo;
    if (hi >= lo) {
      x.c_.assign(static_cast<std::size_t>(hi - lo + 1), 0);
      for (int e = lo; e <= hi; ++e) x.c_[static_cast<std::size_t>(e - lo)] = k.add(coeff_or_zero(e), o.coeff_or_zero(e));
    }
    x.finish();
    return x;
  }
  KLaurent operator-(const KLaurent& o) const { return *this + (-o); }

  KLaurent operator*(const KLaurent& o) const {
    const ResidueField& k = field();
    KLaurent x(R_, std::min(window_, o.window_));
    if (is_zero() || o.is_zero()) return x;
    x.exact_ = exact_ && o.exact_;
    const int la = empty_lo(), lb = o.empty_lo();
    int lo = la + lb;
    long long hi;
    if (x.exact_) {
      hi = static_cast<long long>(this->hi()) + o.hi();
    } else {
      hi = LLONG_MAX;
      if (!exact_) hi = std::min(hi, static_cast<long long>(this->hi()) + lb);
      if (!o.exact_) hi = std::min(hi, static_cast<long long>(o.hi()) + la);
    }
    if (hi > x.window_) {
      hi = x.window_;
      x.exact_ = false;
    }
    x.lo_ = lo;
    if (hi >= lo) {
      x.c_.assign(static_cast<std::size_t>(hi - lo + 1), 0);
      for (std::size_t i = 0; i < c_.size(); ++i) {
        if (!c_[i]) continue;
        for (std::size_t j = 0; j < o.c_.size(); ++j) {
          long long e = static_cast<long long>(i) + static_cast<long long>(j) + lo;
          if (e > hi) break;
          if (!o.c_[j]) continue;
          auto& dst = x.c_[static_cast<std::size_t>(e - lo)];
          dst = k.add(dst, k.mul(c_[i], o.c_[j]));
        }
      }
    } else {
      x.lo_ = static_cast<int>(hi) + 1;
    }
    x.finish();
    return x;
  }
  KLaurent scaled(KElem a) const {
    KLaurent x = *this;
    for (auto& c : x.c_) c = field().mul(c, a);
    x.finish();
    return x;
  }
  KLaurent shifted(int d) const {
    KLaurent x = *this;
    x.lo_ += d;
    x.finish();
    return x;
  }

  /// Multiplicative inverse of a nonzero series.
  KLaurent inverse() const {
    require(!c_.empty(), ErrorKind::InvalidInput, "inverse of a series not known to be nonzero");
    const ResidueField& k = field();
    const int l = lo_;
    const KElem cinv = k.inv(c_[0]);
    KLaurent x(R_, window_);
    if (exact_ && c_.size() == 1) {
      x.lo_ = -l;
      x.c_ = {cinv};
      x.finish();
      return x;
    }
    long long J = exact_ ? static_cast<long long>(window_) + l : static_cast<long long>(hi()) - l;
    J = std::min<long long>(J, static_cast<long long>(window_) + l);
    x.exact_ = false;
    x.lo_ = -l;
    if (J < 0) {
      x.lo_ = -l + static_cast<int>(J) + 1;
      return x;
    }
    x.c_.assign(static_cast<std::size_t>(J + 1), 0);
    x.c_[0] = cinv;
    for (long long j = 1; j <= J; ++j) {
      KElem s = 0;
      for (long long i = 1; i <= j && i < static_cast<long long>(c_.size()); ++i)
        if (c_[static_cast<std::size_t>(i)]) s = k.add(s, k.mul(c_[static_cast<std::size_t>(i)], x.c_[static_cast<std::size_t>(j - i)]));
      x.c_[static_cast<std::size_t>(j)] = k.neg(k.mul(cinv, s));
    }
    x.finish();
    return x;
  }

  KLaurent pow(long long n) const {
    if (n < 0) return inverse().pow(-n);
    KLaurent result = monomial(R_, 0, 1, window_), base = *this;
    while (n) {
      if (n & 1) result = result * base;
      n >>= 1;
      if (n) base = base * base;
    }
    return result;
  }

  /// (1 + this)^(a/b) by the binomial series; needs lowest exponent > 0.
  KLaurent binom_power(long long a, long long b) const {
    KLaurent result = monomial(R_, 0, 1, window_);
    if (is_zero() || a == 0) return result;
    require(!c_.empty() ? lo_ > 0 : true, ErrorKind::InvalidInput, "binomial series needs a t-adically small argument");
    KLaurent term = result;
    for (int j = 1;; ++j) {
      term = term * *this;
      if (term.is_zero()) break;
      if (term.c_.empty() && term.lo_ > window_) {
        result = result + term;  // carries the truncation point
        break;
      }
      long long c = detail::binom_rational_mod(R_->p, R_->p, a, b, j);
      result = result + term.scaled(field().from_int(c));
      require(j <= 4 * window_ + 8, ErrorKind::Internal, "binomial series did not terminate");
    }
    return result;
  }

  /// m-th root with the least residue root of the leading coefficient.
  KLaurent root(long long m) const {
    require(m != 0 && m % R_->p != 0, ErrorKind::InvalidInput, "root index must be coprime to p");
    require(!c_.empty(), ErrorKind::InvalidInput, "root of a series not known to be nonzero");
    require(lo_ % m == 0, ErrorKind::InvalidInput, "lowest exponent not divisible by root index");
    auto r0 = field().root(c_[0], m);
    require(r0.has_value(), ErrorKind::ResidueFieldTooSmall,
            "no " + std::to_string(m) + "-th root of " + std::to_string(c_[0]) + " in the residue field");
    KLaurent x = scaled(field().inv(c_[0])).shifted(-lo_) - monomial(R_, 0, 1, window_);
    return x.binom_power(1, m).scaled(*r0).shifted(static_cast<int>(lo_ / m));
  }

  /// Unique p-th root of a series supported on pZ.
  KLaurent pth_root() const {
    const int p = R_->p;
    require(is_pth_power(), ErrorKind::InvalidInput, "series is not a p-th power");
    KLaurent x(R_, window_);
    x.exact_ = exact_;
    if (c_.empty()) {
      x.lo_ = floor_div(lo_, p) + (exact_ ? 0 : 0);
      if (!exact_) x.lo_ = floor_div(hi(), p) + 1;
      return x;
    }
    x.lo_ = floor_div(lo_, p);
    int hi = exact_ ? floor_div(this->hi(), p) : floor_div(this->hi(), p);
    x.c_.assign(static_cast<std::size_t>(hi - x.lo_ + 1), 0);
    for (int k = x.lo_; k <= hi; ++k) x.c_[static_cast<std::size_t>(k - x.lo_)] = field().pth_root(coeff_or_zero(k * p));
    x.finish();
    return x;
  }

  /// sum_k u_k phi^k.  phi must have positive lowest exponent unless u is exact.
  KLaurent substitute(const KLaurent& phi) const {
    KLaurent result(R_, phi.window_);
    if (is_zero()) return result;
    require(!phi.c_.empty(), ErrorKind::InvalidInput, "substitution into a zero series");
    const int lphi = phi.lo_;
    if (!exact_)
      require(lphi > 0, ErrorKind::InvalidInput, "truncated series can only be composed with a series of positive order");
    const int lo = empty_lo();
    const int hi = this->hi();
    if (hi >= lo && !c_.empty()) {
      if (hi >= 0) {
        KLaurent pk = phi.pow(std::max(lo, 0));
        for (int k = std::max(lo, 0); k <= hi; ++k) {
          if (KElem a = coeff_or_zero(k)) result = result + pk.scaled(a);
          if (k < hi) pk = pk * phi;
        }
      }
      if (lo < 0) {
        const KLaurent inv = phi.inverse();
        KLaurent nk = inv.pow(-std::min(hi, -1));
        for (int k = std::min(hi, -1); k >= lo; --k) {
          if (KElem a = coeff_or_zero(k)) result = result + nk.scaled(a);
          if (k > lo) nk = nk * inv;
        }
      }
    }
    if (!exact_) {
      // the unknown coefficients begin at phi^(hi+1), of order (hi+1)*lphi
      long long cut = static_cast<long long>(hi + 1) * lphi - 1;
      KLaurent trunc(R_, phi.window_);
      trunc.exact_ = false;
      trunc.lo_ = static_cast<int>(std::min<long long>(cut, phi.window_)) + 1;
      result = result + trunc;
    }
    return result;
  }

  /// Drop everything above exponent k (becoming truncated there).
  KLaurent truncated(int k) const {
    if (k >= known_hi()) return *this;
    KLaurent x = *this;
    x.exact_ = false;
    if (k < lo_) {
      x.c_.clear();
      x.lo_ = k + 1;
    } else {
      x.c_.resize(static_cast<std::size_t>(k - lo_ + 1));
    }
    x.finish();
    return x;
  }

  bool operator==(const KLaurent& o) const {
    return exact_ == o.exact_ && lo_ == o.lo_ && c_ == o.c_ && (exact_ || hi() == o.hi());
  }
  /// Agreement on the common known range.
  bool agrees(const KLaurent& o) const {
    long long top = std::min<long long>(known_hi(), o.known_hi());
    int from = std::min(empty_lo(), o.empty_lo());
    if (top == INT_MAX) top = std::max(hi(), o.hi());
    for (long long k = from; k <= top; ++k)
      if (coeff_or_zero(static_cast<int>(k)) != o.coeff_or_zero(static_cast<int>(k))) return false;
    return true;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (!c_[i]) continue;
      if (!s.empty()) s += " + ";
      s += std::to_string(c_[i]) + "*t^" + std::to_string(lo_ + static_cast<int>(i));
    }
    if (s.empty()) s = "0";
    if (!exact_) s += " + O(t^" + std::to_string(hi() + 1) + ")";
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, c] : terms()) j[std::to_string(k)] = nlohmann::json::array({c});
    return j;
  }

  static int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

 private:
  friend class RLaurent;
  KElem coeff_or_zero(int k) const {
    if (k < lo_ || k > hi()) return 0;
    return c_[static_cast<std::size_t>(k - lo_)];
  }
  // lowest exponent that could be nonzero
  int empty_lo() const { return lo_; }

  void finish() {
    std::size_t first = 0;
    while (first < c_.size() && c_[first] == 0) ++first;
    if (first == c_.size()) {
      if (exact_) {
        c_.clear();
        lo_ = 0;
        return;
      }
      lo_ += static_cast<int>(first);
      c_.clear();
    } else if (first) {
      c_.erase(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(first));
      lo_ += static_cast<int>(first);
    }
    if (exact_)
      while (!c_.empty() && c_.back() == 0) c_.pop_back();
    if (!c_.empty() && lo_ < -window_)
      fail(ErrorKind::WindowExhausted, "residue series reaches t^" + std::to_string(lo_) + " below the window; widen window");
    if (hi() > window_) {
      int keep = window_ - lo_ + 1;
      if (keep <= 0) {
        c_.clear();
        lo_ = window_ + 1;
      } else {
        c_.resize(static_cast<std::size_t>(keep));
      }
      exact_ = false;
    }
  }

  Ring R_;
  int window_ = 0;
  int lo_ = 0;
  std::vector<KElem> c_;
  bool exact_ = true;
};

/// Result of Artin-Schreier reduction: input = rep + witness^p - witness.
struct ASReduction {
  KLaurent rep;
  KLaurent witness;
  std::optional<int> m;  // lowest (negative, coprime) exponent of rep
  bool zero_class = false;
};

/// Reduce modulo {b^p - b}: poles at p-divisible exponents are replaced by
/// p-th roots, working from the most negative exponent upward; the part of
/// positive order is removed via f = g - g^p with g = f + f^p + ...
inline ASReduction as_reduce(const KLaurent& u) {
  const Ring& R = u.ring();
  const ResidueField& k = R->k;
  const int p = R->p;
  const int W = u.window();
  std::map<int, KElem> neg;
  KElem constant = 0;
  std::map<int, KElem> pos;
  for (const auto& [e, c] : u.terms()) {
    if (e < 0)
      neg[e] = c;
    else if (e == 0)
      constant = c;
    else
      pos[e] = c;
  }
  std::map<int, KElem> wit;
  // poles: c t^{pj} = (b^p - b) + b with b = c^{1/p} t^j
  for (;;) {
    auto it = std::find_if(neg.begin(), neg.end(), [p](const auto& kv) { return kv.first % p == 0; });
    if (it == neg.end()) break;
    const int j = it->first / p;
    const KElem b = k.pth_root(it->second);
    neg.erase(it);
    KElem& slot = neg[j];
    slot = k.add(slot, b);
    if (slot == 0) neg.erase(j);
    KElem& w = wit[j];
    w = k.add(w, b);
    if (w == 0) wit.erase(j);
  }
  ASReduction out;
  std::map<int, KElem> rep = neg;
  KLaurent witness = KLaurent::from_terms(R, wit, W);
  // constant term
  if (constant) {
    if (k.trace(constant) == 0) {
      auto x = k.artin_schreier_root(constant);
      require(x.has_value(), ErrorKind::Internal, "trace-zero constant without Artin-Schreier root");
      witness = witness + KLaurent::monomial(R, 0, *x, W);
    } else {
      rep[0] = constant;
    }
  }
  // positive part: f = -(g^p - g), g = f + f^p + f^{p^2} + ...
  if (!pos.empty() || !u.exact()) {
    KLaurent f = KLaurent::from_terms(R, pos, W);
    if (!u.exact()) f = f + KLaurent::from_terms(R, {}, W).truncated(u.hi());
    KLaurent g = f;
    KLaurent fp = f;
    for (int guard = 0; guard < 64; ++guard) {
      fp = fp.pow(p);
      if (fp.is_zero()) break;
      g = g + fp;
      if (fp.terms().empty() && !fp.exact() && fp.lo() > W) break;
    }
    witness = witness - g;
  }
  out.rep = KLaurent::from_terms(R, rep, W);
  out.witness = witness;
  if (!rep.empty() && rep.begin()->first < 0) out.m = rep.begin()->first;
  out.zero_class = rep.empty();
  return out;
}

// ---------------------------------------------------------------------------
// RLaurent
// ---------------------------------------------------------------------------

class RLaurent {
 public:
  RLaurent() = default;
  /// Exact zero.
  RLaurent(Ring R, int cap, int window) : R_(std::move(R)), cap_(cap), window_(window) {
    require(R_ != nullptr, ErrorKind::InvalidInput, "null ring");
    require(cap_ >= 1 && cap_ <= R_->max_prec, ErrorKind::InvalidInput,
            "precision " + std::to_string(cap_) + " outside [1, e*M]; raise M");
    require(window_ >= 1, ErrorKind::InvalidInput, "window must be positive");
    head_ = tail_ = cap_;
  }

  static RLaurent monomial(const Ring& R, int k, const RElem& c, int cap, int window) {
    RLaurent x(R, cap, window);
    x.lo_ = k;
    x.push_back(c);
    x.finish();
    return x;
  }
  static RLaurent constant(const Ring& R, const RElem& c, int cap, int window) { return monomial(R, 0, c, cap, window); }
  static RLaurent one(const Ring& R, int cap, int window) { return constant(R, RElem::one(R), cap, window); }
  static RLaurent from_terms(const Ring& R, const std::map<int, RElem>& terms, int cap, int window) {
    RLaurent x(R, cap, window);
    if (terms.empty()) return x;
    x.lo_ = terms.begin()->first;
    for (int k = x.lo_; k <= terms.rbegin()->first; ++k) {
      auto it = terms.find(k);
      x.push_back(it == terms.end() ? RElem::zero(R, cap) : it->second);
    }
    x.finish();
    return x;
  }
  /// Coefficientwise fixed section k -> R.
  static RLaurent lift(const KLaurent& a, int cap, int window) {
    const Ring& R = a.ring();
    RLaurent x(R, cap, window);
    x.lo_ = a.lo();
    for (int k = a.lo(); k <= a.hi(); ++k) x.push_back(RElem::lift(R, a.coeff(k), cap));
    if (!a.exact()) x.tail_ = 0;
    x.finish();
    return x;
  }

  const Ring& ring() const { return R_; }
  int cap() const { return cap_; }
  int window() const { return window_; }
  int lo() const { return lo_; }
  int hi() const { return lo_ + n() - 1; }
  int head() const { return head_; }
  int tail() const { return tail_; }
  bool empty() const { return n() == 0; }
  bool exact() const { return head_ >= cap_ && tail_ >= cap_; }

  int prec_at(int k) const {
    if (k < lo_) return head_;
    if (k > hi()) return tail_;
    return pr_[static_cast<std::size_t>(k - lo_)];
  }
  /// min(valuation, precision) of the coefficient of T^k.
  int val_at(int k) const {
    if (k < lo_) return head_;
    if (k > hi()) return tail_;
    return va_[static_cast<std::size_t>(k - lo_)];
  }
  RElem coeff(int k) const {
    if (k < lo_ || k > hi()) return RElem::zero(R_, prec_at(k));
    const int w = R_->width();
    auto b = d_.begin() + static_cast<std::ptrdiff_t>(k - lo_) * w;
    return RElem(R_, std::vector<std::uint32_t>(b, b + w), pr_[static_cast<std::size_t>(k - lo_)]);
  }
  std::map<int, RElem> terms() const {
    std::map<int, RElem> out;
    for (int k = lo_; k <= hi(); ++k)
      if (val_at(k) < prec_at(k)) out.emplace(k, coeff(k));
    return out;
  }
  /// Smallest val_at over tracked coefficients, head and tail.
  int min_val_all() const {
    int m = std::min(head_, tail_);
    for (int v : va_) m = std::min(m, v);
    return m;
  }
  /// All tracked digits vanish (the series is 0 to its known precision).
  bool zero_to_precision() const {
    for (std::size_t i = 0; i < va_.size(); ++i)
      if (va_[i] < pr_[i]) return false;
    return true;
  }

  RLaurent with_window(int window) const {
    RLaurent x = *this;
    x.window_ = window;
    x.finish();
    return x;
  }
  /// Lower the precision cap.
  RLaurent with_cap(int cap) const {
    RLaurent x = *this;
    x.cap_ = std::min(cap_, cap);
    x.head_ = std::min(x.head_, x.cap_);
    x.tail_ = std::min(x.tail_, x.cap_);
    for (auto& pr : x.pr_) pr = std::min(pr, x.cap_);
    x.finish();
    return x;
  }

  RLaurent operator-() const {
    RLaurent x = *this;
    const std::uint64_t q = R_->q;
    for (auto& c : x.d_) c = static_cast<std::uint32_t>((q - c) % q);
    x.finish();
    return x;
  }

  RLaurent operator+(const RLaurent& o) const {
    check(o);
    RLaurent x(R_, std::min(cap_, o.cap_), std::min(window_, o.window_));
    x.head_ = std::min({head_, o.head_, x.cap_});
    x.tail_ = std::min({tail_, o.tail_, x.cap_});
    // an empty series still splits head from tail at lo_, so its boundary counts
    const int lo = std::min(lo_, o.lo_);
    const int hi = std::max(this->hi(), o.hi());
    if (hi < lo) {
      x.lo_ = lo;
      x.finish();
      return x;
    }
    const int w = R_->width();
    const std::uint64_t q = R_->q;
    x.lo_ = lo;
    x.d_.assign(static_cast<std::size_t>(hi - lo + 1) * w, 0);
    x.pr_.assign(static_cast<std::size_t>(hi - lo + 1), 0);
    x.va_.assign(static_cast<std::size_t>(hi - lo + 1), 0);
    for (int k = lo; k <= hi; ++k) {
      std::size_t idx = static_cast<std::size_t>(k - lo);
      x.pr_[idx] = std::min({prec_at(k), o.prec_at(k), x.cap_});
      std::uint32_t* dst = x.d_.data() + idx * w;
      if (k >= lo_ && k <= this->hi()) {
        const std::uint32_t* src = d_.data() + static_cast<std::size_t>(k - lo_) * w;
        for (int t = 0; t < w; ++t) dst[t] = src[t];
      }
      if (k >= o.lo_ && k <= o.hi()) {
        const std::uint32_t* src = o.d_.data() + static_cast<std::size_t>(k - o.lo_) * w;
        for (int t = 0; t < w; ++t) dst[t] = static_cast<std::uint32_t>((dst[t] + std::uint64_t(src[t])) % q);
      }
    }
    x.finish();
    return x;
  }
  RLaurent operator-(const RLaurent& o) const { return *this + (-o); }
  RLaurent& operator+=(const RLaurent& o) { return *this = *this + o; }
  RLaurent& operator-=(const RLaurent& o) { return *this = *this - o; }
  RLaurent& operator*=(const RLaurent& o) { return *this = *this * o; }

  RLaurent operator*(const RLaurent& o) const { return mul(*this, o); }

  RLaurent scaled(const RElem& c) const { return *this * constant(R_, c, cap_, window_); }
  /// Multiply by T^d.
  RLaurent shifted(int d) const {
    RLaurent x = *this;
    x.lo_ += d;
    x.finish();
    return x;
  }
  /// Exact division of every coefficient by pi^a; precision drops by a.
  RLaurent shift_down(int a) const {
    if (a == 0) return *this;
    require(head_ >= a && tail_ >= a, ErrorKind::WindowExhausted,
            "series not certified divisible by pi^" + std::to_string(a) + " outside the window; widen window");
    RLaurent x(R_, cap_, window_);
    x.lo_ = lo_;
    x.head_ = head_ - a;
    x.tail_ = tail_ - a;
    for (int k = lo_; k <= hi(); ++k) {
      require(val_at(k) >= a, ErrorKind::PrecisionExhausted,
              "coefficient of T^" + std::to_string(k) + " not certified divisible by pi^" + std::to_string(a));
      x.push_back(coeff(k).shift_down(a));
    }
    x.finish();
    return x;
  }

  RLaurent pow(long long n) const {
    if (n < 0) return invert_unit().pow(-n);
    RLaurent result = one(R_, cap_, window_), base = *this;
    while (n) {
      if (n & 1) result = result * base;
      n >>= 1;
      if (n) base = base * base;
    }
    return result;
  }

  /// Lowest exponent whose coefficient is a certified unit (the order of the residue).
  int residue_order() const {
    require(head_ >= 1, ErrorKind::WindowExhausted, "residue below the window is unknown; widen window");
    for (int k = lo_; k <= hi(); ++k) {
      int pr = prec_at(k);
      require(pr >= 1, ErrorKind::PrecisionExhausted, "residue of coefficient T^" + std::to_string(k) + " unknown");
      if (val_at(k) == 0) return k;
    }
    fail(ErrorKind::InvalidInput, "series is not a unit: residue vanishes on the known range");
  }

  /// Inverse of a unit of R[[T]]{T^-1} by Newton iteration y <- y + y(1 - a y).
  RLaurent invert_unit() const {
    const int l = residue_order();
    RLaurent y = monomial(R_, -l, coeff(l).inverse(), cap_, window_);
    if (exact() && n() == 1) return y;
    const RLaurent one_ = one(R_, cap_, window_);
    RLaurent e = one_ - *this * y;
    for (int it = 0; !e.zero_to_precision(); ++it) {
      require(it < 64, ErrorKind::PrecisionExhausted, "unit inversion did not converge on the window");
      y = y + y * e;
      e = one_ - *this * y;
    }
    return y + y * e;  // folds the residual error into the precision
  }

  /// m-th root s with s^m = this, lifting the least residue root.  gcd(m, p) = 1.
  RLaurent series_root(long long m) const {
    require(m != 0 && m % R_->p != 0, ErrorKind::InvalidInput, "root index must be coprime to p");
    if (m == 1) return *this;
    if (m < 0) return series_root(-m).invert_unit();
    const int l = residue_order();
    require(l % m == 0, ErrorKind::InvalidInput,
            "residue order " + std::to_string(l) + " not divisible by root index " + std::to_string(m));
    RElem c0 = coeff(l).unit_root(m);
    RLaurent y = monomial(R_, static_cast<int>(-l / m), c0.inverse(), cap_, window_);  // ~ this^(-1/m)
    const RElem minv = RElem::from_int(R_, m).inverse();
    const RLaurent one_ = one(R_, cap_, window_);
    RLaurent e = one_ - *this * y.pow(m);
    for (int it = 0; !e.zero_to_precision(); ++it) {
      require(it < 64, ErrorKind::PrecisionExhausted, "series root did not converge on the window");
      y = y + (y * e).scaled(minv);
      e = one_ - *this * y.pow(m);
    }
    RLaurent s = *this * y.pow(m - 1);
    return s + (s * e).scaled(minv);
  }

  /// (1 + this)^(a/b) = sum_j C(a/b, j) this^j, gcd(b, p) = 1.  The argument must
  /// be small: every term of positive valuation or positive exponent.
  RLaurent binom_power(long long a, long long b) const {
    RLaurent result = one(R_, cap_, window_);
    if (a == 0) return result;
    RLaurent term = result;
    const int budget = 2 * cap_ + 4 * window_ + 8;
    for (int j = 1;; ++j) {
      require(j <= budget, ErrorKind::PrecisionExhausted, "binomial series diverges within the precision/window budget");
      term = term * *this;
      if (term.zero_to_precision() && term.head_ >= cap_) {
        result = result + term;  // precision of the remainder
        break;
      }
      result = result + term.scaled(binomial_rational(R_, a, b, j, cap_));
    }
    return result;
  }

  /// sum_k a_k phi^k.  Uncertain head/tail coefficients of this series are
  /// charged against the powers of phi they would multiply.
  RLaurent substitute(const RLaurent& phi) const {
    check(phi);
    const int cap = std::min(cap_, phi.cap_);
    RLaurent result(R_, cap, phi.window_);
    RLaurent inv;
    bool have_inv = false;
    auto get_inv = [&]() -> const RLaurent& {
      if (!have_inv) {
        inv = phi.invert_unit();
        have_inv = true;
      }
      return inv;
    };
    if (!empty()) {
      auto add_term = [&](int k, const RLaurent& power) {
        if (val_at(k) >= prec_at(k) && prec_at(k) >= cap) return;
        result = result + power * constant(R_, coeff(k), cap, phi.window_);
      };
      if (hi() >= 0) {
        RLaurent pk = phi.pow(std::max(lo_, 0));
        for (int k = std::max(lo_, 0); k <= hi(); ++k) {
          add_term(k, pk);
          if (k < hi()) pk = pk * phi;
        }
      }
      if (lo_ < 0) {
        RLaurent nk = get_inv().pow(-std::min(hi(), -1));
        for (int k = std::min(hi(), -1); k >= lo_; --k) {
          add_term(k, nk);
          if (k > lo_) nk = nk * get_inv();
        }
      }
    }
    auto charge = [&](int bound, bool upward) {
      if (bound >= cap) return;
      RLaurent base = upward ? phi : get_inv();
      int k = upward ? std::max(hi() + 1, 0) : std::min(lo_ - 1, -1);
      RLaurent power = base.pow(upward ? k : -k);
      if ((upward && hi() + 1 < 0) || (!upward && lo_ - 1 > 0)) {
        // the uncertain region straddles 0: charge the powers in between too
        int from = upward ? hi() + 1 : lo_ - 1;
        for (int kk = from; upward ? kk < 0 : kk > 0; upward ? ++kk : --kk) {
          RLaurent pw = kk >= 0 ? phi.pow(kk) : get_inv().pow(-kk);
          result = result + pw.uncertainty(bound);
        }
      }
      if (auto rest = base.power_tail_bound(upward ? k : -k, bound, cap)) {
        result = result + *rest;
        return;
      }
      for (int it = 0;; ++it) {
        require(it <= 4 * phi.window_ + 2 * cap + 8, ErrorKind::WindowExhausted,
                "substitution tail does not vanish on the window; widen window");
        result = result + power.uncertainty(bound);
        int low = upward ? power.head_ : power.tail_;
        for (int v : power.va_) low = std::min(low, v);
        if (bound + low >= cap) break;
        power = power * base;
      }
    };
    charge(tail_, true);
    charge(head_, false);
    return result;
  }

  /// Coefficientwise residue.
  KLaurent residue_series() const {
    require(head_ >= 1, ErrorKind::WindowExhausted, "residue below the window is unknown; widen window");
    std::map<int, KElem> t;
    int known = INT_MAX;
    for (int k = lo_; k <= hi(); ++k) {
      if (prec_at(k) < 1) {
        known = k - 1;
        break;
      }
      KElem c = coeff(k).residue();
      if (c) t[k] = c;
    }
    if (known == INT_MAX && tail_ < 1) known = hi();
    KLaurent out = KLaurent::from_terms(R_, t, window_);
    if (known != INT_MAX) out = out.truncated(known);
    return out;
  }

  /// Precision profile of sum_{j >= j0} a_j this^j with every a_j known only to
  /// pi^bound.  Needs a single unit term c T^d, d != 0: the other terms move
  /// the exponent away from d*j at valuation rate at least rho, so the
  /// coefficient of T^N in this^j has valuation >= rho |d j - N|.
  std::optional<RLaurent> power_tail_bound(int j0, int bound, int cap) const {
    // d: the unit term nearest the direction the powers move in; terms
    // beyond it only need to be integral
    std::optional<int> klo, khi;
    for (int k = lo_; k <= hi(); ++k) {
      if (val_at(k) > 0) continue;
      if (!klo) klo = k;
      khi = k;
    }
    if (!klo) return std::nullopt;
    std::optional<int> d;
    if (*klo > 0) d = klo;
    if (*khi < 0) d = khi;
    if (!d) return std::nullopt;
    const bool up = *d > 0;
    if ((up ? head_ : tail_) < cap) return std::nullopt;
    long long rv = 0, rd = 0;  // rho = rv / rd
    for (int k = lo_; k <= hi(); ++k) {
      const int delta = up ? *d - k : k - *d;
      if (delta <= 0 || val_at(k) >= cap) continue;
      if (rd == 0 || static_cast<long long>(val_at(k)) * rd < rv * delta) {
        rv = val_at(k);
        rd = delta;
      }
    }
    if (rd == 0) {  // only the unit term matters
      rv = cap;
      rd = 1;
    }
    const long long top = static_cast<long long>(*d) * j0;
    auto prec = [&](long long N) {
      long long L = up ? top - N : N - top;
      if (L <= 0) return std::min(cap, bound);
      long long v = (rv * L + rd - 1) / rd;
      return static_cast<int>(std::min<long long>(cap, bound + std::min<long long>(v, cap)));
    };
    RLaurent x(R_, std::min(cap, cap_), window_);
    x.lo_ = -window_;
    for (int k = -window_; k <= window_; ++k) {
      x.push_back(RElem::zero(R_, x.cap_));
      x.pr_.back() = std::min(x.cap_, prec(k));
    }
    // the region containing T^(d j) itself is only known to bound
    x.head_ = std::min(x.cap_, up ? prec(-static_cast<long long>(window_) - 1) : bound);
    x.tail_ = std::min(x.cap_, up ? bound : prec(static_cast<long long>(window_) + 1));
    x.finish();
    return x;
  }

  /// Zero series carrying the precision profile bound + val(this).
  RLaurent uncertainty(int bound) const {
    RLaurent x(R_, cap_, window_);
    x.lo_ = lo_;
    x.head_ = std::min(cap_, sat_add(bound, head_));
    x.tail_ = std::min(cap_, sat_add(bound, tail_));
    const int w = R_->width();
    x.d_.assign(d_.size(), 0);
    x.pr_.resize(va_.size());
    x.va_.resize(va_.size());
    for (std::size_t i = 0; i < va_.size(); ++i) x.pr_[i] = x.va_[i] = std::min(cap_, sat_add(bound, va_[i]));
    (void)w;
    x.finish();
    return x;
  }

  /// Same coefficients modulo the smaller precision at every exponent.
  bool agrees(const RLaurent& o) const {
    int lo = std::min(lo_, o.lo_), hi = std::max(this->hi(), o.hi());
    for (int k = lo; k <= hi; ++k) {
      int pr = std::min(prec_at(k), o.prec_at(k));
      if (!coeff(k).with_prec(pr).agrees(o.coeff(k).with_prec(pr))) return false;
    }
    return true;
  }

  std::string to_string() const {
    std::string s;
    for (const auto& [k, c] : terms()) {
      if (!s.empty()) s += " + ";
      s += "(";
      auto dg = c.digits();
      for (std::size_t i = 0; i < dg.size(); ++i) {
        if (!dg[i]) continue;
        if (s.back() != '(') s += "+";
        s += std::to_string(dg[i]) + (i ? "*pi^" + std::to_string(i) : "");
      }
      s += ")*T^" + std::to_string(k);
    }
    if (s.empty()) s = "0";
    return s;
  }

  /// {"exponent": [pi-adic digits]} for coefficients nonzero at their precision.
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, c] : terms()) j[std::to_string(k)] = c.digits();
    return j;
  }
  static RLaurent from_json(const Ring& R, const nlohmann::json& j, int cap, int window) {
    require(j.is_object(), ErrorKind::InvalidInput, "series must be a JSON object {exponent: [digits]}");
    std::map<int, RElem> t;
    for (auto it = j.begin(); it != j.end(); ++it) {
      int k = 0;
      try {
        std::size_t used = 0;
        k = std::stoi(it.key(), &used);
        require(used == it.key().size(), ErrorKind::InvalidInput, "bad exponent '" + it.key() + "'");
      } catch (const std::logic_error&) {
        fail(ErrorKind::InvalidInput, "bad exponent '" + it.key() + "'");
      }
      std::vector<int> dg;
      if (it->is_number_integer()) {
        t[k] = RElem::from_int(R, it->get<long long>(), cap);
        continue;
      }
      require(it->is_array(), ErrorKind::InvalidInput, "coefficient of exponent " + it.key() + " must be a digit list");
      for (const auto& d : *it) {
        require(d.is_number_integer(), ErrorKind::InvalidInput, "digits must be integers");
        dg.push_back(d.get<int>());
      }
      t[k] = RElem::from_digits(R, dg, cap);
    }
    return from_terms(R, t, cap, window);
  }

 private:
  static int sat_add(int a, int b) {
    long long s = static_cast<long long>(a) + b;
    return s > INT_MAX / 2 ? INT_MAX / 2 : static_cast<int>(s);
  }
  int n() const { return static_cast<int>(pr_.size()); }
  void check(const RLaurent& o) const {
    require(R_ && o.R_ && R_->p == o.R_->p && R_->r == o.R_->r && R_->s == o.R_->s && R_->M == o.R_->M,
            ErrorKind::InvalidInput, "series over different rings");
  }
  void push_back(const RElem& c) {
    d_.insert(d_.end(), c.raw().begin(), c.raw().end());
    pr_.push_back(std::min(c.prec(), cap_));
    va_.push_back(0);
  }

  /// Canonicalize digits, fold exponents outside the window into head/tail,
  /// and drop boundary coefficients that carry no extra information.
  void finish() {
    const int w = R_->width();
    head_ = std::min(head_, cap_);
    tail_ = std::min(tail_, cap_);
    for (int i = 0; i < n(); ++i) {
      pr_[i] = std::min(pr_[i], cap_);
      R_->normalize(d_.data() + static_cast<std::size_t>(i) * w, pr_[i]);
      va_[i] = R_->valuation(d_.data() + static_cast<std::size_t>(i) * w, pr_[i]);
    }
    if (n() == 0) {
      lo_ = std::clamp(lo_, -window_, window_ + 1);
      return;
    }
    int first = 0, last = n() - 1;
    while (last >= first && lo_ + last > window_) tail_ = std::min(tail_, va_[last--]);
    while (first <= last && lo_ + first < -window_) head_ = std::min(head_, va_[first++]);
    while (last >= first && va_[last] == pr_[last] && pr_[last] == tail_) --last;
    while (first <= last && va_[first] == pr_[first] && pr_[first] == head_) ++first;
    if (first > 0 || last < n() - 1) {
      if (last < first) {
        d_.clear();
        pr_.clear();
        va_.clear();
        lo_ = std::clamp(lo_ + first, -window_, window_ + 1);
        return;
      }
      d_ = std::vector<std::uint32_t>(d_.begin() + static_cast<std::ptrdiff_t>(first) * w,
                                      d_.begin() + static_cast<std::ptrdiff_t>(last + 1) * w);
      pr_ = std::vector<int>(pr_.begin() + first, pr_.begin() + last + 1);
      va_ = std::vector<int>(va_.begin() + first, va_.begin() + last + 1);
      lo_ += first;
    }
  }

  // Prefix/suffix minima of val_at including head/tail, for the error terms of products.
  struct Profile {
    int lo, hi, head, tail;
    std::vector<int> pre, suf;  // pre[t] = min(head, va[0..t-1]); suf[t] = min(tail, va[t..])
    int all;
    explicit Profile(const RLaurent& a) : lo(a.lo_), hi(a.hi()), head(a.head_), tail(a.tail_) {
      const int n = a.n();
      pre.assign(static_cast<std::size_t>(n + 1), head);
      for (int i = 0; i < n; ++i) pre[i + 1] = std::min(pre[i], a.va_[i]);
      suf.assign(static_cast<std::size_t>(n + 1), tail);
      for (int i = n - 1; i >= 0; --i) suf[i] = std::min(suf[i + 1], a.va_[i]);
      all = std::min(pre[n], tail);
    }
    // min val over exponents < x
    int lt(long long x) const {
      if (x <= lo) return head;
      long long t = x - lo;
      const int n = static_cast<int>(pre.size()) - 1;
      if (t > n) return std::min(pre[n], tail);
      return pre[static_cast<std::size_t>(t)];
    }
    // min val over exponents > x
    int gt(long long x) const {
      if (x >= hi) return tail;
      long long t = x - lo + 1;
      if (t <= 0) return std::min(suf[0], head);
      return suf[static_cast<std::size_t>(t)];
    }
  };

  static RLaurent mul(const RLaurent& a, const RLaurent& b) {
    a.check(b);
    const Ring& R = a.R_;
    const int cap = std::min(a.cap_, b.cap_);
    const int window = std::min(a.window_, b.window_);
    RLaurent c(R, cap, window);
    const Profile A(a), B(b);
    auto add_ = [](int x, int y) { return sat_add(x, y); };
    c.head_ = std::min({cap, add_(a.head_, B.all), add_(b.head_, A.all)});
    c.tail_ = std::min({cap, add_(a.tail_, B.all), add_(b.tail_, A.all)});
    const int na = a.n(), nb = b.n();
    // result range, clipped to the window; dropped pairs bound head/tail
    long long lc = static_cast<long long>(a.lo_) + b.lo_;
    long long hc = static_cast<long long>(a.hi()) + b.hi();
    if (a.tail_ < cap || b.tail_ < cap) hc = std::max<long long>(hc, window);
    if (a.head_ < cap || b.head_ < cap) lc = std::min<long long>(lc, -window);
    if (hc > window) {
      for (int i = 0; i < na; ++i) {
        long long jmin = static_cast<long long>(window) - (a.lo_ + i) + 1;  // exponent of b
        c.tail_ = std::min(c.tail_, add_(a.va_[i], B.gt(jmin - 1) /* includes b tail */));
      }
      hc = window;
    }
    if (lc < -window) {
      for (int i = 0; i < na; ++i) {
        long long jmax = -static_cast<long long>(window) - (a.lo_ + i) - 1;
        c.head_ = std::min(c.head_, add_(a.va_[i], B.lt(jmax + 1)));
      }
      lc = -window;
    }
    if (hc < lc) {
      c.lo_ = static_cast<int>(lc);
      c.finish();
      return c;
    }
    const int nc = static_cast<int>(hc - lc + 1);
    c.lo_ = static_cast<int>(lc);
    // certified precision of each result coefficient
    std::vector<int> P(static_cast<std::size_t>(nc), cap);
    for (int k = 0; k < nc; ++k) {
      long long ek = lc + k;
      int pk = cap;
      pk = std::min(pk, add_(a.head_, B.gt(ek - a.lo_)));
      pk = std::min(pk, add_(a.tail_, B.lt(ek - a.hi())));
      pk = std::min(pk, add_(b.head_, A.gt(ek - b.lo_)));
      pk = std::min(pk, add_(b.tail_, A.lt(ek - b.hi())));
      P[k] = pk;
    }
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < nb; ++j) {
        long long ek = static_cast<long long>(a.lo_) + i + b.lo_ + j - lc;
        if (ek < 0 || ek >= nc) continue;
        int u = std::min(add_(a.pr_[i], b.va_[j]), add_(b.pr_[j], a.va_[i]));
        if (u < P[static_cast<std::size_t>(ek)]) P[static_cast<std::size_t>(ek)] = u;
      }
    // digits, modulo p^L with L = ceil(cap / e)
    const int e = R->e, s = R->s, w = R->width();
    const int L = std::min(R->M + 1, (cap + e - 1) / e);
    const std::uint64_t qw = R->ppow[static_cast<std::size_t>(L)];
    const int ys = 2 * s - 1, bs = (2 * e - 1) * ys;
    struct Sparse {
      std::vector<std::pair<int, std::uint32_t>> nz;  // (slot offset, digit)
    };
    auto sparse = [&](const RLaurent& x) {
      std::vector<Sparse> out(static_cast<std::size_t>(x.n()));
      for (int i = 0; i < x.n(); ++i) {
        const std::uint32_t* d = x.d_.data() + static_cast<std::size_t>(i) * w;
        for (int pi = 0; pi < e; ++pi)
          for (int yj = 0; yj < s; ++yj) {
            std::uint32_t v = static_cast<std::uint32_t>(d[pi * s + yj] % qw);
            if (v) out[i].nz.emplace_back(pi * ys + yj, v);
          }
      }
      return out;
    };
    const auto SA = sparse(a), SB = sparse(b);
    std::vector<std::uint64_t> acc(static_cast<std::size_t>(nc) * bs, 0);
    std::vector<std::uint64_t> count(static_cast<std::size_t>(nc), 0);
    const std::uint64_t limit = ~std::uint64_t(0) / ((qw - 1) * (qw - 1) + 1);
    for (int i = 0; i < na; ++i) {
      if (SA[i].nz.empty()) continue;
      for (int j = 0; j < nb; ++j) {
        if (SB[j].nz.empty()) continue;
        long long ek = static_cast<long long>(a.lo_) + i + b.lo_ + j - lc;
        if (ek < 0 || ek >= nc) continue;
        if (add_(a.va_[i], b.va_[j]) >= P[static_cast<std::size_t>(ek)]) continue;
        std::uint64_t* blk = acc.data() + static_cast<std::size_t>(ek) * bs;
        std::uint64_t add_count = static_cast<std::uint64_t>(std::min(SA[i].nz.size(), SB[j].nz.size()));
        if (count[ek] + add_count > limit) {
          for (int t = 0; t < bs; ++t) blk[t] %= qw;
          count[ek] = 0;
        }
        count[ek] += add_count;
        for (const auto& [oa, va] : SA[i].nz) {
          std::uint64_t x = va;
          std::uint64_t* base = blk + oa;
          for (const auto& [ob, vb] : SB[j].nz) base[ob] += x * vb;
        }
      }
    }
    c.d_.assign(static_cast<std::size_t>(nc) * w, 0);
    c.pr_ = P;
    c.va_.assign(static_cast<std::size_t>(nc), 0);
    for (int k = 0; k < nc; ++k) {
      if (count[k] == 0) continue;
      R->reduce(acc.data() + static_cast<std::size_t>(k) * bs, c.d_.data() + static_cast<std::size_t>(k) * w, qw);
    }
    c.finish();
    return c;
  }

  Ring R_;
  int cap_ = 0, window_ = 0;
  int lo_ = 0;
  int head_ = 0, tail_ = 0;
  std::vector<std::uint32_t> d_;
  std::vector<int> pr_, va_;
};

/// Gauss valuation min_k v(a_k), certified against precision and window.
/// Returns cap when the series vanishes to full precision.
inline int certified_min_valuation(const RLaurent& x) {
  int a = x.min_val_all();
  if (a >= x.cap()) return x.cap();
  for (int k = x.lo(); k <= x.hi(); ++k)
    if (x.val_at(k) == a && x.prec_at(k) == a)
      fail(ErrorKind::PrecisionExhausted,
           "valuation of coefficient T^" + std::to_string(k) + " not determined at precision " + std::to_string(a));
  if (x.head() == a || x.tail() == a)
    fail(ErrorKind::WindowExhausted, "minimal valuation " + std::to_string(a) + " may be attained outside the window; widen window");
  return a;
}

}  // namespace germrh
