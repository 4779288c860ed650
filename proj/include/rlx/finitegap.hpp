#pragma once

// Finite-gap data on the spectral side: gaps [a_n, b_n], divisors (μ_n, σ_n),
// the function h(z) = 2i Π √((a_n-z)(b_n-z)) / (μ_n - z), its Krein function
// and residues, and torus coordinates of the divisor.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rlx/errors.hpp"
#include "rlx/moebius.hpp"

namespace rlx {

struct Gap {
  double a = 0.0;
  double b = 0.0;
};

/// Strictly increasing gaps a₁ < b₁ < a₂ < … < b_N.
class GapSet {
 public:
  GapSet() = default;
  explicit GapSet(std::vector<Gap> gaps) : gaps_(std::move(gaps)) {
    for (std::size_t n = 0; n < gaps_.size(); ++n) {
      if (!std::isfinite(gaps_[n].a) || !std::isfinite(gaps_[n].b) || !(gaps_[n].a < gaps_[n].b)) {
        throw ValidationError("gap " + std::to_string(n + 1) + ": need a_n < b_n");
      }
      if (n > 0 && !(gaps_[n - 1].b < gaps_[n].a)) {
        throw ValidationError("gaps " + std::to_string(n) + " and " + std::to_string(n + 1) + " overlap");
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return gaps_.size(); }
  [[nodiscard]] const Gap& operator[](std::size_t n) const { return gaps_.at(n); }
  [[nodiscard]] const std::vector<Gap>& gaps() const noexcept { return gaps_; }

  /// Index of the closed gap containing t, or -1 if t ∈ U.
  [[nodiscard]] int gap_of(double t) const noexcept {
    for (std::size_t n = 0; n < gaps_.size(); ++n) {
      if (t >= gaps_[n].a && t <= gaps_[n].b) return static_cast<int>(n);
    }
    return -1;
  }

 private:
  std::vector<Gap> gaps_;
};

struct DivisorPoint {
  double mu = 0.0;
  int sigma = 1;
};

/// One point μ_n ∈ [a_n, b_n] per gap with a sign σ_n; the sign is forced to
/// +1 at the endpoints, where it carries no information.
class Divisor {
 public:
  Divisor() = default;
  Divisor(const GapSet& gaps, std::vector<DivisorPoint> points) : points_(std::move(points)) {
    if (points_.size() != gaps.size()) throw ValidationError("divisor needs one point per gap");
    for (std::size_t n = 0; n < points_.size(); ++n) {
      auto& p = points_[n];
      if (!(p.mu >= gaps[n].a && p.mu <= gaps[n].b)) {
        throw ValidationError("divisor point " + std::to_string(n + 1) + " is outside its gap");
      }
      if (p.sigma != 1 && p.sigma != -1) throw ValidationError("divisor sign must be +1 or -1");
      if (p.mu == gaps[n].a || p.mu == gaps[n].b) p.sigma = 1;
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] const DivisorPoint& operator[](std::size_t n) const { return points_.at(n); }
  [[nodiscard]] const std::vector<DivisorPoint>& points() const noexcept { return points_; }
  [[nodiscard]] std::vector<double> mus() const {
    std::vector<double> m;
    for (const auto& p : points_) m.push_back(p.mu);
    return m;
  }

 private:
  std::vector<DivisorPoint> points_;
};

// ---------------------------------------------------------------------------

struct HSample {
  Complex value;
  bool near_pole = false;
};

/// h(z) with per-factor principal logarithms: s_n(z) = exp(½(Log(a_n-z) + Log(b_n-z))).
inline HSample sample_h(const GapSet& gaps, std::span<const double> mus, const Complex& z) {
  if (!(z.imag() > 0.0)) throw DomainError("eval_h: z must lie in the open upper half plane");
  if (mus.size() != gaps.size()) throw ValidationError("eval_h: need one μ per gap");
  HSample out{Complex(0.0, 2.0)};
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    const Gap& g = gaps[n];
    const Complex s = std::exp(0.5 * (std::log(g.a - z) + std::log(g.b - z)));
    out.value *= s / (mus[n] - z);
    if (mus[n] > g.a && mus[n] < g.b && std::abs(z - mus[n]) < 1e-12) out.near_pole = true;
  }
  return out;
}

inline Complex eval_h(const GapSet& gaps, std::span<const double> mus, const Complex& z) {
  return sample_h(gaps, mus, z).value;
}

/// ξ(t): ½ on U, 1 on (μ_n, b_n), 0 on (a_n, μ_n).
inline double krein_xi(const GapSet& gaps, const Divisor& divisor, double t) {
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    if (t == gaps[n].a || t == gaps[n].b || t == divisor[n].mu) {
      throw DomainError("krein_xi: t is an exceptional point");
    }
  }
  const int n = gaps.gap_of(t);
  if (n < 0) return 0.5;
  return t > divisor[static_cast<std::size_t>(n)].mu ? 1.0 : 0.0;
}

/// (1/π) arg h with arg taken in [0, π] (h is Herglotz; tiny negative
/// imaginary parts near the negative axis are rounding).
inline double krein_from_value(const Complex& h) noexcept {
  double arg = std::arg(h);
  if (arg < -std::numbers::pi / 2.0) arg += 2.0 * std::numbers::pi;
  return arg / std::numbers::pi;
}

struct Residue {
  double value = 0.0;
  bool inverse_sqrt = false;  // μ_n at a gap endpoint: (t-z)^{-1/2} blow-up, no point mass
  bool converged = true;
};

/// lim_{y→0⁺} (μ_n - z) h(z) at z = μ_n + iy, Richardson-extrapolated over
/// y = 10⁻², …, 10⁻⁷.
inline Residue residue(const GapSet& gaps, std::span<const double> mus, std::size_t n) {
  if (n >= gaps.size()) throw ValidationError("residue: gap index out of range");
  const double mu = mus[n];
  if (mu == gaps[n].a || mu == gaps[n].b) return {0.0, true, true};
  std::vector<double> ex;
  Complex e_prev;
  for (int k = 2; k <= 7; ++k) {
    const double y = std::pow(10.0, -k);
    const Complex e = -Complex(0.0, y) * eval_h(gaps, mus, Complex(mu, y));
    if (k > 2) ex.push_back(((10.0 * e - e_prev) / 9.0).real());
    e_prev = e;
  }
  Residue r{ex.back(), false, true};
  const std::size_t m = ex.size();
  if (std::abs(ex[m - 1] - ex[m - 2]) > 1e-6 * std::max(1.0, std::abs(ex.back()))) r.converged = false;
  return r;
}

enum class AtomSide { plus, minus, none };

inline const char* to_string(AtomSide s) noexcept {
  switch (s) {
    case AtomSide::plus: return "plus";
    case AtomSide::minus: return "minus";
    case AtomSide::none: return "none";
  }
  return "none";
}

/// Which of m₊, m₋ carries the point mass at μ_n.
inline AtomSide assign_atom(const GapSet& gaps, const Divisor& divisor, std::size_t n) {
  const auto& p = divisor[n];
  if (p.mu == gaps[n].a || p.mu == gaps[n].b) return AtomSide::none;
  return p.sigma > 0 ? AtomSide::plus : AtomSide::minus;
}

struct KreinRow {
  double t = 0.0;
  Complex h;
  double xi_pred = 0.0;
  double xi_meas = 0.0;
};

struct KreinReport {
  double max_deviation = 0.0;
  std::vector<KreinRow> rows;
};

inline constexpr double kKreinExclusion = 1e-3;

/// max over the grid of |(1/π) Im Log h(t + iε) - ξ(t)|. Grid points must stay
/// 1e-3 away from every a_n, b_n, μ_n.
inline KreinReport krein_check(const GapSet& gaps, const Divisor& divisor, std::span<const double> grid,
                               double eps) {
  if (!(eps >= 1e-8 && eps <= 1e-4)) throw ValidationError("krein_check: ε must lie in [1e-8, 1e-4]");
  const std::vector<double> mus = divisor.mus();
  KreinReport rep;
  for (double t : grid) {
    for (std::size_t n = 0; n < gaps.size(); ++n) {
      for (double e : {gaps[n].a, gaps[n].b, mus[n]}) {
        if (std::abs(t - e) < kKreinExclusion) {
          throw ValidationError("krein_check: grid point within 1e-3 of an exceptional point");
        }
      }
    }
    KreinRow row;
    row.t = t;
    row.h = eval_h(gaps, mus, Complex(t, eps));
    row.xi_pred = krein_xi(gaps, divisor, t);
    row.xi_meas = krein_from_value(row.h);
    rep.max_deviation = std::max(rep.max_deviation, std::abs(row.xi_meas - row.xi_pred));
    rep.rows.push_back(row);
  }
  return rep;
}

/// Grid of `count` equally spaced points on [lo, hi] with the 1e-3
/// neighbourhoods of exceptional points removed.
inline std::vector<double> krein_grid(const GapSet& gaps, const Divisor& divisor, double lo, double hi, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
    bool ok = true;
    for (std::size_t n = 0; n < gaps.size() && ok; ++n) {
      for (double e : {gaps[n].a, gaps[n].b, divisor[n].mu}) {
        if (std::abs(t - e) < kKreinExclusion) ok = false;
      }
    }
    if (ok) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Torus coordinates

/// θ_n on the doubled gap: 0 at a_n, (0, π) on the σ = +1 sheet with μ
/// increasing, π at b_n, (π, 2π) on the σ = -1 sheet with μ decreasing.
inline std::vector<double> torus_coords(const Divisor& divisor, const GapSet& gaps) {
  std::vector<double> th;
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    const double u = std::numbers::pi * (divisor[n].mu - gaps[n].a) / (gaps[n].b - gaps[n].a);
    th.push_back(divisor[n].sigma > 0 ? u : 2.0 * std::numbers::pi - u);
  }
  return th;
}

inline Divisor divisor_from_torus(std::span<const double> theta, const GapSet& gaps) {
  if (theta.size() != gaps.size()) throw ValidationError("divisor_from_torus: need one angle per gap");
  constexpr double pi = std::numbers::pi;
  std::vector<DivisorPoint> pts;
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    double t = std::fmod(theta[n], 2.0 * pi);
    if (t < 0.0) t += 2.0 * pi;
    const double len = gaps[n].b - gaps[n].a;
    if (t <= pi) {
      pts.push_back({std::min(gaps[n].b, gaps[n].a + len * t / pi), 1});
    } else {
      pts.push_back({std::min(gaps[n].b, gaps[n].a + len * (2.0 * pi - t) / pi), -1});
    }
  }
  return Divisor(gaps, std::move(pts));
}

}  // namespace rlx
