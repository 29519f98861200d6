#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "germrh/error.hpp"

namespace germrh {

/// An element of F_{p^s}: index in [0, p^s) whose base-p digits are the
/// coefficients of a polynomial in y modulo the field's modulus.
using KElem = int;

inline bool is_prime(long long n) {
  if (n < 2) return false;
  for (long long d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// F_{p^s} with table-driven arithmetic.
class ResidueField {
 public:
  ResidueField() = default;

  ResidueField(int p, int s) : p_(p), s_(s) {
    require(is_prime(p), ErrorKind::InvalidInput, "p must be prime, got " + std::to_string(p));
    require(s >= 1, ErrorKind::InvalidInput, "s must be >= 1");
    q_ = 1;
    for (int i = 0; i < s; ++i) {
      q_ *= p;
      require(q_ <= 4096, ErrorKind::InvalidInput, "residue field larger than 4096 elements");
    }
    modulus_ = find_irreducible();
    build_tables();
  }

  int p() const { return p_; }
  int s() const { return s_; }
  int size() const { return q_; }
  /// Monic modulus coefficients, low degree first, length s+1.
  const std::vector<int>& modulus() const { return modulus_; }

  KElem add(KElem a, KElem b) const { return add_[a * q_ + b]; }
  KElem sub(KElem a, KElem b) const { return add_[a * q_ + neg_[b]]; }
  KElem neg(KElem a) const { return neg_[a]; }
  KElem mul(KElem a, KElem b) const { return mul_[a * q_ + b]; }
  KElem inv(KElem a) const {
    require(a != 0, ErrorKind::InvalidInput, "inverse of zero in residue field");
    return inv_[a];
  }
  KElem div(KElem a, KElem b) const { return mul(a, inv(b)); }
  KElem from_int(long long n) const {
    long long r = n % p_;
    if (r < 0) r += p_;
    return static_cast<KElem>(r);
  }
  KElem pow(KElem a, long long e) const {
    if (e < 0) {
      a = inv(a);
      e = -e;
    }
    KElem r = 1;
    while (e) {
      if (e & 1) r = mul(r, a);
      a = mul(a, a);
      e >>= 1;
    }
    return r;
  }
  KElem frobenius(KElem a) const { return frob_[a]; }
  /// Unique p-th root (Frobenius is a bijection on a finite field).
  KElem pth_root(KElem a) const { return frob_inv_[a]; }

  /// Least (by index) b with b^m = a, if any.  m may be negative.
  std::optional<KElem> root(KElem a, long long m) const {
    require(m != 0, ErrorKind::InvalidInput, "zeroth root");
    for (KElem b = 0; b < q_; ++b) {
      if (b == 0 && (m < 0 || a != 0)) continue;
      if (pow(b, m) == a) return b;
    }
    return std::nullopt;
  }

  /// Absolute trace to F_p; x^p - x = a is solvable iff trace(a) = 0.
  int trace(KElem a) const {
    KElem t = 0, x = a;
    for (int i = 0; i < s_; ++i) {
      t = add(t, x);
      x = frobenius(x);
    }
    return t;
  }

  /// Some x with x^p - x = a, if one exists in this field.
  std::optional<KElem> artin_schreier_root(KElem a) const {
    for (KElem x = 0; x < q_; ++x)
      if (sub(frobenius(x), x) == a) return x;
    return std::nullopt;
  }

  /// Digit j (coefficient of y^j) of the polynomial representing a.
  int digit(KElem a, int j) const {
    for (int i = 0; i < j; ++i) a /= p_;
    return a % p_;
  }

 private:
  std::vector<int> poly_mul_mod(const std::vector<int>& a, const std::vector<int>& b,
                                const std::vector<int>& f) const {
    std::vector<int> r(2 * s_ - 1, 0);
    for (int i = 0; i < s_; ++i)
      for (int j = 0; j < s_; ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % p_;
    for (int d = 2 * s_ - 2; d >= s_; --d) {
      int c = r[d];
      if (!c) continue;
      r[d] = 0;
      for (int j = 0; j < s_; ++j) r[d - s_ + j] = ((r[d - s_ + j] - c * f[j]) % p_ + p_) % p_;
    }
    r.resize(s_);
    return r;
  }

  std::vector<int> to_poly(int a) const {
    std::vector<int> v(s_);
    for (int j = 0; j < s_; ++j) {
      v[j] = a % p_;
      a /= p_;
    }
    return v;
  }
  int from_poly(const std::vector<int>& v) const {
    int a = 0;
    for (int j = s_ - 1; j >= 0; --j) a = a * p_ + v[j];
    return a;
  }

  // A monic polynomial of degree s is irreducible iff it has no monic factor of degree <= s/2.
  static bool divides(const std::vector<int>& g, std::vector<int> f, int p) {
    int dg = static_cast<int>(g.size()) - 1;
    for (int d = static_cast<int>(f.size()) - 1; d >= dg; --d) {
      int c = f[d];
      if (!c) continue;
      for (int j = 0; j <= dg; ++j) f[d - dg + j] = ((f[d - dg + j] - c * g[j]) % p + p) % p;
    }
    for (int j = 0; j < dg; ++j)
      if (f[j]) return false;
    return true;
  }

  std::vector<int> find_irreducible() const {
    if (s_ == 1) return {0, 1};
    for (int code = 0; code < q_; ++code) {
      std::vector<int> f = to_poly(code);
      f.push_back(1);
      bool irreducible = true;
      for (int dg = 1; dg <= s_ / 2 && irreducible; ++dg) {
        int count = 1;
        for (int i = 0; i < dg; ++i) count *= p_;
        for (int gc = 0; gc < count && irreducible; ++gc) {
          std::vector<int> g(dg + 1);
          int t = gc;
          for (int i = 0; i < dg; ++i) {
            g[i] = t % p_;
            t /= p_;
          }
          g[dg] = 1;
          if (divides(g, f, p_)) irreducible = false;
        }
      }
      if (irreducible) return f;
    }
    fail(ErrorKind::Internal, "no irreducible polynomial found");
  }

  void build_tables() {
    const auto n = static_cast<std::size_t>(q_);
    add_.assign(n * n, 0);
    mul_.assign(n * n, 0);
    neg_.assign(n, 0);
    inv_.assign(n, 0);
    frob_.assign(n, 0);
    frob_inv_.assign(n, 0);
    std::vector<std::vector<int>> polys(n);
    for (int a = 0; a < q_; ++a) polys[a] = to_poly(a);
    for (int a = 0; a < q_; ++a) {
      std::vector<int> na(s_);
      for (int j = 0; j < s_; ++j) na[j] = (p_ - polys[a][j]) % p_;
      neg_[a] = from_poly(na);
      for (int b = 0; b < q_; ++b) {
        std::vector<int> sum(s_);
        for (int j = 0; j < s_; ++j) sum[j] = (polys[a][j] + polys[b][j]) % p_;
        add_[a * q_ + b] = from_poly(sum);
        mul_[a * q_ + b] = from_poly(poly_mul_mod(polys[a], polys[b], modulus_));
      }
    }
    for (int a = 1; a < q_; ++a)
      for (int b = 1; b < q_; ++b)
        if (mul_[a * q_ + b] == 1) {
          inv_[a] = b;
          break;
        }
    for (int a = 0; a < q_; ++a) {
      KElem x = 1;
      for (int i = 0; i < p_; ++i) x = mul_[x * q_ + a];
      frob_[a] = x;
      frob_inv_[x] = a;
    }
  }

  int p_ = 2, s_ = 1, q_ = 2;
  std::vector<int> modulus_;
  std::vector<KElem> add_, mul_, neg_, inv_, frob_, frob_inv_;
};

}  // namespace germrh
