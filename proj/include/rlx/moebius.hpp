#pragma once

// PSL(2,R) arithmetic on the extended real line and the upper half plane,
// plus the norm-ratio cocycle that governs how automorphic measures move.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <ostream>

#include "rlx/errors.hpp"

namespace rlx {

using Complex = std::complex<double>;

inline constexpr double kPointTolerance = 1e-12;
inline constexpr double kDeterminantTolerance = 1e-9;
inline constexpr double kPoleThreshold = 1e-14;

/// A point of R ∪ {∞}. Finite values are always finite doubles.
class ExtendedReal {
 public:
  constexpr ExtendedReal() noexcept = default;

  // Implicit on purpose: `apply(g, 0.7)` reads better than a wrapper call.
  // A double infinity of either sign maps to the single point ∞.
  ExtendedReal(double v) : value_(v), infinite_(std::isinf(v)) {  // NOLINT
    if (std::isnan(v)) throw DomainError("ExtendedReal: NaN is not a point of R∪{∞}");
    if (infinite_) value_ = 0.0;
  }

  static constexpr ExtendedReal infinity() noexcept {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  [[nodiscard]] constexpr bool is_infinite() const noexcept { return infinite_; }
  [[nodiscard]] constexpr bool is_finite() const noexcept { return !infinite_; }

  /// The finite value; `+inf` for the point at infinity.
  [[nodiscard]] double value() const noexcept {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Chordal (spherical) distance on R∪{∞}, with range [0, 2].
inline double chordal(const ExtendedReal& x, const ExtendedReal& y) noexcept {
  if (x.is_infinite() && y.is_infinite()) return 0.0;
  if (x.is_infinite()) return 2.0 / std::sqrt(1.0 + y.value() * y.value());
  if (y.is_infinite()) return 2.0 / std::sqrt(1.0 + x.value() * x.value());
  const double u = x.value();
  const double v = y.value();
  return 2.0 * std::abs(u - v) / std::sqrt((1.0 + u * u) * (1.0 + v * v));
}

inline bool operator==(const ExtendedReal& x, const ExtendedReal& y) noexcept {
  return chordal(x, y) <= kPointTolerance;
}

inline std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) {
  if (x.is_infinite()) return os << "inf";
  return os << x.value();
}

/// Column vector w(x) = (x, 1)ᵗ, or e₁ = (1, 0)ᵗ at ∞.
struct HomogeneousVector {
  double x = 0.0;
  double y = 1.0;

  [[nodiscard]] double norm2() const noexcept { return x * x + y * y; }
};

inline HomogeneousVector homogeneous(const ExtendedReal& p) noexcept {
  if (p.is_infinite()) return {1.0, 0.0};
  return {p.value(), 1.0};
}

enum class MapType { identity, elliptic, parabolic, hyperbolic };

inline const char* to_string(MapType t) noexcept {
  switch (t) {
    case MapType::identity: return "identity";
    case MapType::elliptic: return "elliptic";
    case MapType::parabolic: return "parabolic";
    case MapType::hyperbolic: return "hyperbolic";
  }
  return "unknown";
}

namespace detail {

// Double-double arithmetic: products of long words have entries near 1e10,
// where ad - bc in plain doubles loses every digit of the determinant.
struct DD {
  double hi = 0.0;
  double lo = 0.0;
};

inline DD quick_two_sum(double a, double b) noexcept {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DD dd_add(const DD& x, const DD& y) noexcept {
  const double s = x.hi + y.hi;
  const double bb = s - x.hi;
  double e = (x.hi - (s - bb)) + (y.hi - bb);
  e += x.lo + y.lo;
  return quick_two_sum(s, e);
}

inline DD dd_mul(const DD& x, const DD& y) noexcept {
  const double p = x.hi * y.hi;
  double e = std::fma(x.hi, y.hi, -p);
  e += x.hi * y.lo + x.lo * y.hi;
  return quick_two_sum(p, e);
}

inline DD dd_neg(const DD& x) noexcept { return {-x.hi, -x.lo}; }

/// x·t + y·u for double t, u.
inline DD dd_dot(const DD& x, double t, const DD& y, double u) noexcept {
  return dd_add(dd_mul(x, {t, 0.0}), dd_mul(y, {u, 0.0}));
}

/// x / y rounded to double, with one correction step.
inline double dd_div(const DD& x, const DD& y) noexcept {
  const double q = x.hi / y.hi;
  const DD r = dd_add(x, dd_neg(dd_mul(y, {q, 0.0})));
  return q + r.hi / y.hi;
}

inline double dd_norm2(const DD& x, const DD& y) noexcept {
  const DD s = dd_add(dd_mul(x, x), dd_mul(y, y));
  return s.hi + s.lo;
}

/// 1/√x for x > 0, refined by one Newton step.
inline DD dd_rsqrt(const DD& x) noexcept {
  const double r = 1.0 / std::sqrt(x.hi);
  // r' = r + r(1 - x r²)/2
  const DD xr2 = dd_mul(x, dd_mul({r, 0.0}, {r, 0.0}));
  const DD corr = dd_mul({0.5 * r, 0.0}, dd_add({1.0, 0.0}, dd_neg(xr2)));
  return dd_add({r, 0.0}, corr);
}

}  // namespace detail

/// An element of PSL(2,R), stored as the unique SL(2,R) representative
/// whose first nonzero entry among (a, b, c) is positive. Entries carry a
/// double-double tail so that determinants of long products stay at 1.
class MoebiusMap {
 public:
  MoebiusMap() noexcept = default;

  /// Rescales to determinant one and canonicalizes the sign. Throws
  /// ValidationError if the determinant is not positive.
  MoebiusMap(double a, double b, double c, double d) : m_{a, b, c, d} { normalize(); }

  static MoebiusMap identity() noexcept { return {}; }

  [[nodiscard]] double a() const noexcept { return m_[0]; }
  [[nodiscard]] double b() const noexcept { return m_[1]; }
  [[nodiscard]] double c() const noexcept { return m_[2]; }
  [[nodiscard]] double d() const noexcept { return m_[3]; }
  [[nodiscard]] const std::array<double, 4>& entries() const noexcept { return m_; }

  [[nodiscard]] double determinant() const noexcept { return det_dd().hi; }
  [[nodiscard]] double trace() const noexcept { return detail::dd_add(e(0), e(3)).hi; }
  [[nodiscard]] double scale() const noexcept {
    return std::max({std::abs(m_[0]), std::abs(m_[1]), std::abs(m_[2]), std::abs(m_[3])});
  }

  [[nodiscard]] MoebiusMap inverse() const noexcept {
    MoebiusMap r;
    r.m_ = {m_[3], -m_[1], -m_[2], m_[0]};
    r.lo_ = {lo_[3], -lo_[1], -lo_[2], lo_[0]};
    r.canonicalize_sign();
    return r;
  }

  [[nodiscard]] ExtendedReal apply(const ExtendedReal& x) const noexcept {
    const double eps = kPoleThreshold * scale();
    if (x.is_infinite()) {
      if (std::abs(m_[2]) <= eps) return ExtendedReal::infinity();
      return m_[0] / m_[2];
    }
    const double t = x.value();
    const detail::DD den = detail::dd_dot(e(2), t, e(3), 1.0);
    if (std::abs(den.hi) <= eps) return ExtendedReal::infinity();
    return detail::dd_div(detail::dd_dot(e(0), t, e(1), 1.0), den);
  }

  /// Action on the upper half plane (or anywhere the denominator is nonzero).
  [[nodiscard]] Complex apply(const Complex& z) const noexcept {
    return (m_[0] * z + m_[1]) / (m_[2] * z + m_[3]);
  }

  [[nodiscard]] HomogeneousVector act(const HomogeneousVector& w) const noexcept {
    return {m_[0] * w.x + m_[1] * w.y, m_[2] * w.x + m_[3] * w.y};
  }

  /// ‖g w‖² with the products carried in double-double, so that cancellation
  /// in a·x + b does not cost digits.
  [[nodiscard]] double act_norm2(const HomogeneousVector& w) const noexcept {
    return detail::dd_norm2(detail::dd_dot(e(0), w.x, e(1), w.y), detail::dd_dot(e(2), w.x, e(3), w.y));
  }

  /// Exact-arithmetic products of determinant-one matrices have determinant
  /// one, so the product is not renormalized.
  friend MoebiusMap operator*(const MoebiusMap& g, const MoebiusMap& h) noexcept {
    using detail::dd_add;
    using detail::dd_mul;
    const detail::DD r[4] = {dd_add(dd_mul(g.e(0), h.e(0)), dd_mul(g.e(1), h.e(2))),
                             dd_add(dd_mul(g.e(0), h.e(1)), dd_mul(g.e(1), h.e(3))),
                             dd_add(dd_mul(g.e(2), h.e(0)), dd_mul(g.e(3), h.e(2))),
                             dd_add(dd_mul(g.e(2), h.e(1)), dd_mul(g.e(3), h.e(3)))};
    MoebiusMap out;
    for (int i = 0; i < 4; ++i) {
      out.m_[i] = r[i].hi;
      out.lo_[i] = r[i].lo;
    }
    out.canonicalize_sign();
    return out;
  }

 private:
  [[nodiscard]] detail::DD e(int i) const noexcept { return {m_[i], lo_[i]}; }

  [[nodiscard]] detail::DD det_dd() const noexcept {
    using detail::dd_add;
    using detail::dd_mul;
    return dd_add(dd_mul(e(0), e(3)), detail::dd_neg(dd_mul(e(1), e(2))));
  }

  void normalize() {
    for (double v : m_) {
      if (!std::isfinite(v)) throw ValidationError("MoebiusMap: entries must be finite");
    }
    const detail::DD det = det_dd();
    if (!(det.hi > 0.0) || !std::isfinite(det.hi)) {
      throw ValidationError("MoebiusMap: determinant must be positive and finite");
    }
    const detail::DD s = detail::dd_rsqrt(det);
    for (int i = 0; i < 4; ++i) {
      const detail::DD v = detail::dd_mul(e(i), s);
      m_[i] = v.hi;
      lo_[i] = v.lo;
    }
    canonicalize_sign();
  }

  void canonicalize_sign() noexcept {
    for (int i = 0; i < 3; ++i) {
      if (m_[i] != 0.0) {
        if (m_[i] < 0.0) {
          for (double& v : m_) v = -v;
          for (double& v : lo_) v = -v;
        }
        return;
      }
    }
  }

  std::array<double, 4> m_{1.0, 0.0, 0.0, 1.0};
  std::array<double, 4> lo_{0.0, 0.0, 0.0, 0.0};
};

inline MoebiusMap compose(const MoebiusMap& g, const MoebiusMap& h) { return g * h; }
inline MoebiusMap inverse(const MoebiusMap& g) noexcept { return g.inverse(); }
inline ExtendedReal apply(const MoebiusMap& g, const ExtendedReal& x) noexcept { return g.apply(x); }
inline Complex apply(const MoebiusMap& g, const Complex& z) noexcept { return g.apply(z); }

inline bool approx_equal(const MoebiusMap& g, const MoebiusMap& h, double tol = 1e-12) noexcept {
  for (int i = 0; i < 4; ++i) {
    if (std::abs(g.entries()[i] - h.entries()[i]) > tol) return false;
  }
  return true;
}

inline std::ostream& operator<<(std::ostream& os, const MoebiusMap& g) {
  return os << "[[" << g.a() << ", " << g.b() << "], [" << g.c() << ", " << g.d() << "]]";
}

/// f(g; x) = ‖w(x)‖² / ‖g w(x)‖².
inline double cocycle_f(const MoebiusMap& g, const ExtendedReal& x) noexcept {
  const HomogeneousVector w = homogeneous(x);
  return w.norm2() / g.act_norm2(w);
}

/// h(g; t) = ‖w(g·t)‖² / ‖g⁻¹ w(g·t)‖², the density of ν_g against g⁻¹ν.
/// Reciprocal to cocycle_f(g; t).
inline double density_h(const MoebiusMap& g, const ExtendedReal& t) noexcept {
  const HomogeneousVector w = homogeneous(g.apply(t));
  return w.norm2() / g.inverse().act_norm2(w);
}

inline MapType classify(const MoebiusMap& g, double tol = kDeterminantTolerance) noexcept {
  if (approx_equal(g, MoebiusMap::identity(), tol)) return MapType::identity;
  const double tr = std::abs(g.trace());
  if (std::abs(tr - 2.0) <= tol) return MapType::parabolic;
  return tr < 2.0 ? MapType::elliptic : MapType::hyperbolic;
}

/// The two fixed points of a non-identity map on R∪{∞} (equal for parabolic,
/// complex conjugate for elliptic; only the real cases are meaningful).
inline std::array<ExtendedReal, 2> fixed_points(const MoebiusMap& g) {
  // c x² + (d - a) x - b = 0
  const double a = g.a(), b = g.b(), c = g.c(), d = g.d();
  if (std::abs(c) <= kPoleThreshold * g.scale()) {
    if (std::abs(d - a) <= kPoleThreshold * g.scale()) {
      return {ExtendedReal::infinity(), ExtendedReal::infinity()};
    }
    return {ExtendedReal::infinity(), ExtendedReal(b / (d - a))};
  }
  const double disc = (d - a) * (d - a) + 4.0 * b * c;
  if (disc < 0.0) throw DomainError("fixed_points: elliptic map has no real fixed points");
  const double s = std::sqrt(disc);
  return {ExtendedReal((a - d - s) / (2.0 * c)), ExtendedReal((a - d + s) / (2.0 * c))};
}

}  // namespace rlx
