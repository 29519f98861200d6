#pragma once

// Finite-precision arithmetic in R = W(F_{p^s})[pi] / E(pi), where
// E(x) = ((1 + x^r)^p - 1) / x^r is Eisenstein of degree e = r(p-1).
// With this choice zeta_p = 1 + pi^r and lambda = zeta_p - 1 = pi^r exactly.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "germrh/error.hpp"
#include "germrh/residue_field.hpp"

namespace germrh {

namespace detail {

inline long long binomial_int(int n, int k) {
  long long c = 1;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

inline long long egcd_inverse(long long a, long long m) {
  long long g = m, x = 0, x1 = 1, a1 = ((a % m) + m) % m;
  while (a1) {
    long long qq = g / a1;
    std::swap(g, a1);
    a1 -= qq * g;
    std::swap(x, x1);
    x1 -= qq * x;
  }
  require(g == 1, ErrorKind::Internal, "inverse of non-unit modulo p^k");
  return ((x % m) + m) % m;
}

}  // namespace detail

/// The concrete DVR.  Elements are stored modulo p^(M+1) (one guard digit so
/// that exact division by pi never runs out of room) and are certified up to
/// pi-adic precision e*M.
struct RingDescriptor {
  int p = 0, r = 0, s = 0, M = 0;
  int e = 0;
  int v_lambda = 0;
  int max_prec = 0;  // e*M
  std::uint64_t q = 0;  // p^(M+1)
  std::vector<std::uint64_t> ppow;  // p^k for k = 0..M+1
  std::vector<long long> eisenstein;  // coefficients of E, low degree first, length e+1
  ResidueField k;
  std::vector<std::uint64_t> ymod;  // y^s = sum ymod[j] y^j (mod q)
  std::vector<std::pair<int, std::uint64_t>> pie;  // pi^e = sum c_i pi^i (mod q)
  std::vector<std::uint32_t> eps;  // digits of p / pi^e (a unit)

  int width() const { return e * s; }

  /// Reduce a raw product buffer of shape (2e-1) x (2s-1) to e*s digits,
  /// working modulo mod (a power of p dividing q).
  void reduce(std::uint64_t* acc, std::uint32_t* out, std::uint64_t mod = 0) const {
    const std::uint64_t q = mod ? mod : this->q;
    const int ys = 2 * s - 1;
    const int ps = 2 * e - 1;
    for (int i = 0; i < ps * ys; ++i) acc[i] %= q;
    if (s > 1) {
      for (int i = 0; i < ps; ++i) {
        std::uint64_t* row = acc + static_cast<std::ptrdiff_t>(i) * ys;
        for (int d = ys - 1; d >= s; --d) {
          std::uint64_t c = row[d];
          if (!c) continue;
          row[d] = 0;
          for (int j = 0; j < s; ++j) row[d - s + j] = (row[d - s + j] + c * (ymod[j] % q)) % q;
        }
      }
    }
    for (int d = ps - 1; d >= e; --d) {
      std::uint64_t* row = acc + static_cast<std::ptrdiff_t>(d) * ys;
      for (int j = 0; j < s; ++j) {
        std::uint64_t c = row[j];
        if (!c) continue;
        row[j] = 0;
        for (const auto& [i, ci] : pie) {
          std::uint64_t& dst = acc[static_cast<std::ptrdiff_t>(d - e + i) * ys + j];
          dst = (dst + c * (ci % q)) % q;
        }
      }
    }
    for (int i = 0; i < e; ++i)
      for (int j = 0; j < s; ++j) out[i * s + j] = static_cast<std::uint32_t>(acc[i * ys + j]);
  }

  /// Reduce digits in place to the canonical representative modulo pi^prec.
  void normalize(std::uint32_t* d, int prec) const {
    for (int i = 0; i < e; ++i) {
      int lim = prec - i <= 0 ? 0 : (prec - i + e - 1) / e;
      if (lim > M + 1) lim = M + 1;
      const std::uint64_t m = ppow[lim];
      for (int j = 0; j < s; ++j) d[i * s + j] = static_cast<std::uint32_t>(d[i * s + j] % m);
    }
  }

  /// min(valuation, prec) of a digit vector.
  int valuation(const std::uint32_t* d, int prec) const {
    int best = prec;
    for (int i = 0; i < e && i < best; ++i) {
      int vp = M + 2;
      for (int j = 0; j < s; ++j) {
        std::uint32_t c = d[i * s + j];
        if (!c) continue;
        int v = 0;
        while (c % static_cast<std::uint32_t>(p) == 0) {
          c /= static_cast<std::uint32_t>(p);
          ++v;
        }
        vp = std::min(vp, v);
      }
      if (vp <= M + 1) best = std::min(best, e * vp + i);
    }
    return best;
  }

  /// Multiply digit vectors a*b into out (no precision handling).
  void mul_digits(const std::uint32_t* a, const std::uint32_t* b, std::uint32_t* out) const {
    const int ys = 2 * s - 1;
    std::vector<std::uint64_t> acc(static_cast<std::size_t>((2 * e - 1) * ys), 0);
    for (int i1 = 0; i1 < e; ++i1)
      for (int j1 = 0; j1 < s; ++j1) {
        std::uint64_t x = a[i1 * s + j1];
        if (!x) continue;
        for (int i2 = 0; i2 < e; ++i2)
          for (int j2 = 0; j2 < s; ++j2) {
            std::uint64_t y = b[i2 * s + j2];
            if (!y) continue;
            std::uint64_t& dst = acc[(i1 + i2) * ys + j1 + j2];
            dst = (dst + x * y) % q;
          }
      }
    reduce(acc.data(), out);
  }
};

using Ring = std::shared_ptr<const RingDescriptor>;

/// Element of R known modulo pi^prec.
class RElem {
 public:
  RElem() = default;
  RElem(Ring R, int prec) : R_(std::move(R)), prec_(prec) {
    require(R_ != nullptr, ErrorKind::InvalidInput, "null ring");
    prec_ = std::clamp(prec_, 0, R_->max_prec);
    d_.assign(static_cast<std::size_t>(R_->width()), 0);
  }
  RElem(Ring R, std::vector<std::uint32_t> digits, int prec) : R_(std::move(R)), d_(std::move(digits)), prec_(prec) {
    prec_ = std::clamp(prec_, 0, R_->max_prec);
    R_->normalize(d_.data(), prec_);
  }

  static RElem zero(const Ring& R, int prec = -1) { return RElem(R, prec < 0 ? R->max_prec : prec); }
  static RElem from_int(const Ring& R, long long n, int prec = -1) {
    RElem x(R, prec < 0 ? R->max_prec : prec);
    long long m = n % static_cast<long long>(R->q);
    if (m < 0) m += static_cast<long long>(R->q);
    x.d_[0] = static_cast<std::uint32_t>(m);
    R->normalize(x.d_.data(), x.prec_);
    return x;
  }
  static RElem one(const Ring& R, int prec = -1) { return from_int(R, 1, prec); }
  /// Fixed section k -> R: the polynomial in y with digits in [0, p).
  static RElem lift(const Ring& R, KElem a, int prec = -1) {
    RElem x(R, prec < 0 ? R->max_prec : prec);
    for (int j = 0; j < R->s; ++j) {
      x.d_[j] = static_cast<std::uint32_t>(a % R->p);
      a /= R->p;
    }
    R->normalize(x.d_.data(), x.prec_);
    return x;
  }
  static RElem uniformizer(const Ring& R, int prec = -1) {
    RElem x(R, prec < 0 ? R->max_prec : prec);
    if (R->e > 1) {
      x.d_[static_cast<std::size_t>(R->s)] = 1;
    } else {
      // e = 1: pi = -(C(p,1)) ... only reachable for p = 2, r = 1 where pi^1 = -2
      RElem t = RElem::from_int(R, -R->eisenstein[0], x.prec_);
      return t;
    }
    R->normalize(x.d_.data(), x.prec_);
    return x;
  }
  static RElem pi_power(const Ring& R, int k, int prec = -1) {
    require(k >= 0, ErrorKind::InvalidInput, "negative power of pi");
    return uniformizer(R, prec).pow(k);
  }
  /// zeta_p = 1 + pi^r.
  static RElem zeta(const Ring& R) { return one(R) + pi_power(R, R->r); }
  static RElem lambda(const Ring& R) { return pi_power(R, R->r); }
  /// pi-adic digit expansion sum d_i pi^i with d_i residue indices.
  static RElem from_digits(const Ring& R, const std::vector<int>& digits, int prec = -1) {
    int pr = prec < 0 ? R->max_prec : prec;
    RElem x = zero(R, pr);
    RElem pi = uniformizer(R, pr);
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
      require(*it >= 0 && *it < R->k.size(), ErrorKind::InvalidInput,
              "coefficient digit " + std::to_string(*it) + " outside [0, p^s)");
      x = x * pi + lift(R, *it, pr);
    }
    return x;
  }

  const Ring& ring() const { return R_; }
  int prec() const { return prec_; }
  const std::vector<std::uint32_t>& raw() const { return d_; }

  /// Valuation if certified (strictly below known precision).
  std::optional<int> val() const {
    int v = R_->valuation(d_.data(), prec_);
    if (v >= prec_) return std::nullopt;
    return v;
  }
  int val_capped() const { return R_->valuation(d_.data(), prec_); }
  bool is_zero() const { return val_capped() >= prec_; }
  bool is_unit() const { return prec_ > 0 && val_capped() == 0; }

  KElem residue() const {
    require(prec_ >= 1, ErrorKind::PrecisionExhausted, "residue of an element with no known digits");
    KElem a = 0;
    for (int j = R_->s - 1; j >= 0; --j) a = a * R_->p + static_cast<int>(d_[j] % R_->p);
    return a;
  }

  RElem with_prec(int prec) const {
    RElem x = *this;
    x.prec_ = std::clamp(std::min(prec, prec_), 0, R_->max_prec);
    R_->normalize(x.d_.data(), x.prec_);
    return x;
  }

  RElem operator-() const {
    RElem x = *this;
    for (auto& c : x.d_) c = static_cast<std::uint32_t>((R_->q - c) % R_->q);
    R_->normalize(x.d_.data(), x.prec_);
    return x;
  }
  RElem operator+(const RElem& o) const {
    check_ring(o);
    RElem x(R_, std::min(prec_, o.prec_));
    for (std::size_t i = 0; i < d_.size(); ++i) x.d_[i] = static_cast<std::uint32_t>((d_[i] + std::uint64_t(o.d_[i])) % R_->q);
    R_->normalize(x.d_.data(), x.prec_);
    return x;
  }
  RElem operator-(const RElem& o) const { return *this + (-o); }
  RElem operator*(const RElem& o) const {
    check_ring(o);
    int va = val_capped(), vb = o.val_capped();
    RElem x(R_, std::min(prec_ + vb, o.prec_ + va));
    R_->mul_digits(d_.data(), o.d_.data(), x.d_.data());
    R_->normalize(x.d_.data(), x.prec_);
    return x;
  }
  RElem& operator+=(const RElem& o) { return *this = *this + o; }
  RElem& operator-=(const RElem& o) { return *this = *this - o; }
  RElem& operator*=(const RElem& o) { return *this = *this * o; }

  RElem pow(long long n) const {
    if (n < 0) return inverse().pow(-n);
    RElem result = one(R_, R_->max_prec), base = *this;
    while (n) {
      if (n & 1) result = result * base;
      n >>= 1;
      if (n) base = base * base;
    }
    return result;
  }

  /// Inverse of a unit by Newton iteration.
  RElem inverse() const {
    require(is_unit(), ErrorKind::InvalidInput, "division by non-unit");
    RElem y = lift(R_, R_->k.inv(residue()), prec_);
    RElem two = from_int(R_, 2, prec_);
    for (int known = 1; known < prec_; known *= 2) y = y * (two - *this * y);
    return y.with_prec(prec_);
  }
  RElem div_unit(const RElem& y) const { return *this * y.inverse(); }

  /// Exact division by pi^k; the caller must know v(x) >= k.
  RElem shift_down(int k) const {
    require(k >= 0, ErrorKind::InvalidInput, "negative shift");
    if (k == 0) return *this;
    require(val_capped() >= k, ErrorKind::PrecisionExhausted,
            "division by pi^" + std::to_string(k) + " of an element not certified divisible");
    const int e = R_->e;
    const int t = (e - k % e) % e;
    const int c = (k + t) / e;
    // y = x * pi^t, computed with one extra block of precision available in storage.
    RElem y = *this;
    y.prec_ = prec_ + t;  // may exceed max_prec temporarily; storage holds e*(M+1)
    if (t > 0) {
      std::vector<std::uint32_t> pit(d_.size(), 0);
      pit[static_cast<std::size_t>(t * R_->s)] = 1;
      std::vector<std::uint32_t> out(d_.size());
      R_->mul_digits(d_.data(), pit.data(), out.data());
      y.d_ = std::move(out);
    }
    const std::uint64_t pc = R_->ppow[c];
    for (auto& dg : y.d_) {
      require(dg % pc == 0, ErrorKind::Internal, "pi-shift divisibility");
      dg = static_cast<std::uint32_t>(dg / pc);
    }
    RElem out(R_, prec_ - k);
    out.d_ = y.d_;
    for (int i = 0; i < c; ++i) {
      std::vector<std::uint32_t> tmp(d_.size());
      R_->mul_digits(out.d_.data(), R_->eps.data(), tmp.data());
      out.d_ = std::move(tmp);
    }
    R_->normalize(out.d_.data(), out.prec_);
    return out;
  }

  /// y with y^m = x, lifting the least residue root.  Requires gcd(m, p) = 1.
  RElem unit_root(long long m) const {
    require(m != 0 && m % R_->p != 0, ErrorKind::InvalidInput, "root index must be coprime to p");
    require(is_unit(), ErrorKind::InvalidInput, "root of a non-unit");
    if (m < 0) return inverse().unit_root(-m);
    auto r0 = R_->k.root(residue(), m);
    require(r0.has_value(), ErrorKind::ResidueFieldTooSmall,
            "no " + std::to_string(m) + "-th root of residue " + std::to_string(residue()));
    RElem y = lift(R_, *r0, prec_);
    RElem mm = from_int(R_, m, prec_);
    for (int known = 1; known < prec_; known *= 2) {
      RElem ym1 = y.pow(m - 1);
      y = y - (ym1 * y - *this) * (mm * ym1).inverse();
    }
    return y.with_prec(prec_);
  }

  /// pi-adic digits d_0..d_{prec-1} as residue indices.
  std::vector<int> digits() const {
    std::vector<int> out;
    RElem x = *this;
    for (int i = 0; i < prec_; ++i) {
      KElem dg = x.residue();
      out.push_back(dg);
      if (i + 1 < prec_) x = (x - lift(R_, dg, x.prec_)).shift_down(1);
    }
    while (!out.empty() && out.back() == 0) out.pop_back();
    return out;
  }

  bool operator==(const RElem& o) const { return R_ == o.R_ && prec_ == o.prec_ && d_ == o.d_; }
  bool operator!=(const RElem& o) const { return !(*this == o); }
  /// Agreement modulo the smaller precision.
  bool agrees(const RElem& o) const {
    int pr = std::min(prec_, o.prec_);
    return with_prec(pr) == o.with_prec(pr);
  }

 private:
  void check_ring(const RElem& o) const {
    require(R_ && o.R_ && (R_ == o.R_ || same_params(*R_, *o.R_)), ErrorKind::InvalidInput, "ring mismatch");
  }
  static bool same_params(const RingDescriptor& a, const RingDescriptor& b) {
    return a.p == b.p && a.r == b.r && a.s == b.s && a.M == b.M;
  }

  Ring R_;
  std::vector<std::uint32_t> d_;
  int prec_ = 0;
};

/// Build R for (p, r, s, M).
inline Ring make_ring(int p, int r, int s, int M) {
  require(is_prime(p), ErrorKind::InvalidInput, "p must be prime, got " + std::to_string(p));
  require(r >= 1, ErrorKind::InvalidInput, "r must be >= 1");
  require(s >= 1, ErrorKind::InvalidInput, "s must be >= 1");
  require(M >= 2, ErrorKind::InvalidInput, "M must be >= 2 to certify zeta_p != 1");
  auto R = std::make_shared<RingDescriptor>();
  R->p = p;
  R->r = r;
  R->s = s;
  R->M = M;
  R->e = r * (p - 1);
  R->v_lambda = r;
  R->max_prec = R->e * M;
  R->ppow.assign(static_cast<std::size_t>(M + 2), 1);
  for (int i = 1; i <= M + 1; ++i) {
    R->ppow[i] = R->ppow[i - 1] * static_cast<std::uint64_t>(p);
    require(R->ppow[i] < (std::uint64_t(1) << 31), ErrorKind::InvalidInput,
            "p^(M+1) must stay below 2^31; lower M");
  }
  R->q = R->ppow[M + 1];
  // E(x) = sum_{k=1}^{p} C(p,k) x^{r(k-1)}
  R->eisenstein.assign(static_cast<std::size_t>(R->e + 1), 0);
  for (int kk = 1; kk <= p; ++kk) R->eisenstein[static_cast<std::size_t>(r * (kk - 1))] = detail::binomial_int(p, kk);
  const long long q = static_cast<long long>(R->q);
  for (int i = 0; i < R->e; ++i) {
    long long c = R->eisenstein[i];
    if (c) R->pie.emplace_back(i, static_cast<std::uint64_t>(((-c) % q + q) % q));
  }
  R->k = ResidueField(p, s);
  R->ymod.assign(static_cast<std::size_t>(s), 0);
  for (int j = 0; j < s; ++j) R->ymod[j] = static_cast<std::uint64_t>((q - R->k.modulus()[j]) % q);
  // eps = p / pi^e = -(1 + sum_{k=2}^{p-1} (C(p,k)/p) pi^{r(k-1)})^{-1}
  R->eps.assign(static_cast<std::size_t>(R->width()), 0);
  Ring tmp = R;
  RElem w = RElem::one(tmp);
  RElem pir = RElem::pi_power(tmp, r);
  RElem pw = pir;
  for (int kk = 2; kk <= p - 1; ++kk) {
    w += RElem::from_int(tmp, detail::binomial_int(p, kk) / p) * pw;
    pw *= pir;
  }
  RElem eps = -(w.inverse());
  R->eps = eps.raw();
  return R;
}

namespace detail {

/// C(a/b, j) reduced modulo q = p^L, tracking the p-part separately.
inline long long binom_rational_mod(long long p, long long q, long long a, long long b, int j) {
  require(b != 0 && b % p != 0, ErrorKind::InvalidInput, "binomial exponent denominator must be coprime to p");
  long long unit = 1 % q;
  int ev = 0;
  long long binv = egcd_inverse(b, q);
  for (int t = 0; t < j; ++t) {
    long long n = a - static_cast<long long>(t) * b;
    if (n == 0) return 0;
    while (n % p == 0) {
      n /= p;
      ++ev;
    }
    long long d = t + 1;
    while (d % p == 0) {
      d /= p;
      --ev;
    }
    unit = static_cast<long long>((static_cast<__int128>(unit) * (((n % q) + q) % q)) % q);
    unit = static_cast<long long>((static_cast<__int128>(unit) * egcd_inverse(d, q)) % q);
    unit = static_cast<long long>((static_cast<__int128>(unit) * binv) % q);
  }
  require(ev >= 0, ErrorKind::Internal, "binomial coefficient not p-integral");
  for (int i = 0; i < ev && unit; ++i) unit = unit * p % q;
  return unit;
}

}  // namespace detail

/// C(a/b, j) as an element of R; requires gcd(b, p) = 1.
inline RElem binomial_rational(const Ring& R, long long a, long long b, int j, int prec = -1) {
  return RElem::from_int(R, detail::binom_rational_mod(R->p, static_cast<long long>(R->q), a, b, j), prec);
}

}  // namespace germrh
