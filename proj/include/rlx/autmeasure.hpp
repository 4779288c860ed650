#pragma once

// Atomic measures on the fundamental circles, their automorphic extension
// ν(g·A) = ∫_A f(g;x) dν₀(x), the Poincaré series D(x) = Σ_g f(g;x), and the
// transformation laws ν ↦ ν_g and ν ↦ gν.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlx/errors.hpp"
#include "rlx/moebius.hpp"
#include "rlx/schottky.hpp"

namespace rlx {

inline constexpr double kMaxTailRatio = 0.9;
inline constexpr double kLimitSetClearance = 1e-6;

struct Atom {
  ExtendedReal point;
  double weight = 0.0;
};

using AtomicMeasure = std::vector<Atom>;

inline double total_mass(std::span<const Atom> atoms) noexcept {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.weight;
  return m;
}

/// Sorts by point (∞ last) and merges atoms closer than 1e-12 chordally.
inline AtomicMeasure merge_close_atoms(AtomicMeasure atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& x, const Atom& y) { return x.point.value() < y.point.value(); });
  AtomicMeasure out;
  for (const Atom& a : atoms) {
    if (!out.empty() && chordal(out.back().point, a.point) <= kPointTolerance) {
      out.back().weight += a.weight;
    } else {
      out.push_back(a);
    }
  }
  // ±large finite points are chordally adjacent across ∞.
  if (out.size() > 1 && chordal(out.front().point, out.back().point) <= kPointTolerance) {
    out.back().weight += out.front().weight;
    out.erase(out.begin());
  }
  return out;
}

/// Image measure gν: atom (x, w) ↦ (g·x, w).
inline AtomicMeasure pushforward(std::span<const Atom> nu, const MoebiusMap& g) {
  AtomicMeasure out;
  out.reserve(nu.size());
  for (const Atom& a : nu) out.push_back({g.apply(a.point), a.weight});
  return out;
}

/// ν ↦ ν_g, the measure of F∘g: atom (x, w) ↦ (g⁻¹·x, w·f(g⁻¹; x)).
inline AtomicMeasure transform(std::span<const Atom> nu, const MoebiusMap& g) {
  const MoebiusMap ginv = g.inverse();
  AtomicMeasure out;
  out.reserve(nu.size());
  for (const Atom& a : nu) out.push_back({ginv.apply(a.point), a.weight * cocycle_f(ginv, a.point)});
  return out;
}

// ---------------------------------------------------------------------------

/// ν₀ on F = S_1 ⊔ ... ⊔ S_N; circles[n-1] holds ν_n.
struct FundamentalMeasure {
  std::vector<AtomicMeasure> circles;

  [[nodiscard]] int circle_count() const noexcept { return static_cast<int>(circles.size()); }
  [[nodiscard]] const AtomicMeasure& on(int n) const { return circles.at(static_cast<std::size_t>(n - 1)); }
  [[nodiscard]] AtomicMeasure& on(int n) { return circles.at(static_cast<std::size_t>(n - 1)); }
  [[nodiscard]] double mass(int n) const { return total_mass(on(n)); }
  [[nodiscard]] double total() const {
    double m = 0.0;
    for (const auto& c : circles) m += total_mass(c);
    return m;
  }
  [[nodiscard]] std::size_t atom_count() const noexcept {
    std::size_t k = 0;
    for (const auto& c : circles) k += c.size();
    return k;
  }
};

inline FundamentalMeasure empty_measure(const SchottkyConfig& config) {
  return FundamentalMeasure{std::vector<AtomicMeasure>(static_cast<std::size_t>(config.circle_count()))};
}

/// Sorts atoms into their circles by location. Throws ValidationError for a
/// point outside the fundamental set.
inline FundamentalMeasure place_atoms(const SchottkyConfig& config, std::span<const Atom> atoms) {
  const FundamentalIntervals fi(config);
  FundamentalMeasure nu = empty_measure(config);
  for (const Atom& a : atoms) {
    const auto loc = fi.locate(a.point);
    if (!loc) throw ValidationError("atom is not in the fundamental set");
    nu.on(loc->n).push_back(a);
  }
  return nu;
}

inline FundamentalMeasure scaled(FundamentalMeasure nu, double s) {
  for (auto& c : nu.circles) {
    for (auto& a : c) a.weight *= s;
  }
  return nu;
}

/// Atomwise α·ν + β·μ; coinciding points are merged.
inline FundamentalMeasure combine(const FundamentalMeasure& nu, double alpha, const FundamentalMeasure& mu,
                                  double beta) {
  if (nu.circle_count() != mu.circle_count()) throw ValidationError("combine: circle counts differ");
  FundamentalMeasure out;
  for (int n = 1; n <= nu.circle_count(); ++n) {
    AtomicMeasure c;
    for (const Atom& a : nu.on(n)) {
      if (alpha * a.weight > 0.0) c.push_back({a.point, alpha * a.weight});
    }
    for (const Atom& a : mu.on(n)) {
      if (beta * a.weight <= 0.0) continue;
      auto it = std::find_if(c.begin(), c.end(), [&](const Atom& b) { return b.point == a.point; });
      if (it != c.end()) {
        it->weight += beta * a.weight;
      } else {
        c.push_back({a.point, beta * a.weight});
      }
    }
    out.circles.push_back(std::move(c));
  }
  return out;
}

inline void validate(const FundamentalMeasure& nu, const SchottkyConfig& config) {
  if (nu.circle_count() != config.circle_count()) {
    throw ValidationError("measure has " + std::to_string(nu.circle_count()) + " circles, config has " +
                          std::to_string(config.circle_count()));
  }
  const FundamentalIntervals fi(config);
  for (int n = 1; n <= nu.circle_count(); ++n) {
    const auto& c = nu.on(n);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!(c[i].weight > 0.0) || !std::isfinite(c[i].weight)) {
        throw ValidationError("atom weights must be positive and finite");
      }
      const auto loc = fi.locate(c[i].point);
      if (!loc || loc->n != n) {
        throw ValidationError("atom is not located in S_" + std::to_string(n));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (chordal(c[i].point, c[j].point) <= kPointTolerance) {
          throw ValidationError("duplicate atoms on S_" + std::to_string(n));
        }
      }
    }
  }
}

/// Midpoint rule in the circle coordinate of each S_n: `nodes` atoms per
/// circle with weight density(n, x)·dμ where μ is dx on finite pieces and
/// dx/(1+x²) on pieces through ∞. Zero-density nodes produce no atom.
inline FundamentalMeasure discretize(const SchottkyConfig& config,
                                     const std::function<double(int, const ExtendedReal&)>& density,
                                     int nodes) {
  if (nodes < 1) throw ValidationError("discretize: need at least one node per circle");
  const FundamentalIntervals fi(config);
  FundamentalMeasure nu = empty_measure(config);
  const double dtheta = 2.0 * std::numbers::pi / nodes;
  for (int n = 1; n <= config.circle_count(); ++n) {
    const double jac = fi.reference_density(n) * dtheta;
    for (int k = 0; k < nodes; ++k) {
      const ExtendedReal x = fi.point_at(n, (k + 0.5) * dtheta);
      const double rho = density(n, x);
      if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw ValidationError("discretize: density must be finite and nonnegative");
      }
      if (rho > 0.0) nu.on(n).push_back({x, rho * jac});
    }
  }
  return nu;
}

// ---------------------------------------------------------------------------
// Streaming orbit reductions

struct TailEstimate {
  double ratio = 0.0;
  double mass = 0.0;
};

/// q = S_L / S_{L-1} from the two deepest per-length sums and the declared
/// geometric tail S_L·q/(1-q). Zero for L = 0 or an empty tail.
inline TailEstimate estimate_tail(std::span<const double> per_length) noexcept {
  if (per_length.size() < 2) return {};
  const double last = per_length.back();
  const double prev = per_length[per_length.size() - 2];
  if (!(prev > 0.0) || !(last > 0.0)) return {};
  const double q = last / prev;
  return {q, q < 1.0 ? last * q / (1.0 - q) : std::numeric_limits<double>::infinity()};
}

inline void require_convergence(const TailEstimate& t, const char* what) {
  if (t.ratio >= kMaxTailRatio) {
    throw ConvergenceError(std::string(what) + ": measured tail ratio " + std::to_string(t.ratio) +
                           " is not below " + std::to_string(kMaxTailRatio));
  }
}

namespace detail {

struct BaseAtom {
  ExtendedReal point;
  HomogeneousVector w;
  double weight;
};

inline std::vector<BaseAtom> flatten(const FundamentalMeasure& nu) {
  std::vector<BaseAtom> out;
  for (const auto& c : nu.circles) {
    for (const Atom& a : c) out.push_back({a.point, homogeneous(a.point), a.weight});
  }
  return out;
}

}  // namespace detail

/// Folds every atom of the length-≤L extension of ν₀ into an accumulator.
/// `Acc` needs `add(const ExtendedReal& point, double weight, int length)` and
/// `merge(const Acc&)`. Branch partials are merged in word order.
template <class Acc>
Acc reduce_orbit(const SchottkyConfig& config, const FundamentalMeasure& nu0, int L, const Acc& proto) {
  const auto base = detail::flatten(nu0);
  auto parts = reduce_word_branches(config, L, proto, [&](Acc& acc, const MoebiusMap& m, int length) {
    for (const auto& b : base) {
      acc.add(m.apply(b.point), b.weight * (b.w.norm2() / m.act(b.w).norm2()), length);
    }
  });
  Acc out = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) out.merge(parts[i]);
  return out;
}

/// Per-word-length total weight.
struct LengthSums {
  std::vector<double> sums;

  explicit LengthSums(int L = 0) : sums(static_cast<std::size_t>(L) + 1, 0.0) {}
  void add(const ExtendedReal&, double w, int length) { sums[static_cast<std::size_t>(length)] += w; }
  void merge(const LengthSums& o) {
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += o.sums[i];
  }
  [[nodiscard]] double total() const noexcept {
    double t = 0.0;
    for (double s : sums) t += s;
    return t;
  }
};

// ---------------------------------------------------------------------------
// Poincaré series

struct PoincareResult {
  double value = 0.0;
  std::vector<double> per_length;
  TailEstimate tail;
};

/// Throws DomainError if x is within 1e-6 (chordally) of the limit-set sample
/// of length min(L, 8) (shorter if that sample would exceed 10⁵ points).
/// Points of the fundamental set are always accepted.
inline void require_off_limit_set(const SchottkyConfig& config, const ExtendedReal& x, int L) {
  if (config.generator_count() == 0 || locate(config, x)) return;
  int depth = std::clamp(L, 1, 8);
  while (depth > 1 && words_of_length(config.generator_count(), depth) > 1e5) --depth;
  for (const ExtendedReal& p : limit_set_sample(config, depth)) {
    if (chordal(p, x) <= kLimitSetClearance) {
      throw DomainError("poincare_D: point is within 1e-6 of the limit set");
    }
  }
}

/// D(x) truncated to words of length ≤ L, with the per-length breakdown.
inline PoincareResult poincare_D(const SchottkyConfig& config, const ExtendedReal& x, int L) {
  if (L < 0) throw ValidationError("poincare_D: word length must be nonnegative");
  require_off_limit_set(config, x, L);
  FundamentalMeasure delta;
  delta.circles = {AtomicMeasure{{x, 1.0}}};
  const LengthSums s = reduce_orbit(config, delta, L, LengthSums(L));
  PoincareResult r{s.total(), s.sums, estimate_tail(s.sums)};
  require_convergence(r.tail, "poincare_D");
  return r;
}

// ---------------------------------------------------------------------------
// Materialized extension

struct AutomorphicRecord {
  std::uint32_t word = 0;  // index into the word table
  std::uint32_t base = 0;  // index into the flattened source atoms
  ExtendedReal point;
  double weight = 0.0;
};

/// The truncated automorphic extension of a fundamental measure. Records are
/// ordered by (word in shortlex order, base atom index).
struct AutomorphicAtoms {
  std::shared_ptr<const WordTable> words;
  FundamentalMeasure source;
  std::vector<AutomorphicRecord> records;
  int L = 0;
  std::vector<double> per_length;
  double tail_ratio = 0.0;
  double tail_mass = 0.0;

  [[nodiscard]] double mass() const noexcept {
    double m = 0.0;
    for (const auto& r : records) m += r.weight;
    return m;
  }

  [[nodiscard]] GroupWord word(const AutomorphicRecord& r) const { return words->word(r.word); }

  /// The extension as a plain atomic measure, with near-coincident atoms merged.
  [[nodiscard]] AtomicMeasure atoms() const {
    AtomicMeasure out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.point, r.weight});
    return merge_close_atoms(std::move(out));
  }
};

/// ν(g·A) = ∫_A f(g;x) dν₀ for every reduced g with |g| ≤ L. Throws
/// ConvergenceError when the measured tail ratio is ≥ 0.9.
inline AutomorphicAtoms extend(const FundamentalMeasure& nu0, const SchottkyConfig& config, int L) {
  validate(nu0, config);
  AutomorphicAtoms out;
  out.words = std::make_shared<const WordTable>(enumerate(config, L));
  out.source = nu0;
  out.L = L;
  out.per_length.assign(static_cast<std::size_t>(L) + 1, 0.0);
  const auto base = detail::flatten(nu0);
  out.records.reserve(out.words->size() * base.size());
  for (std::size_t i = 0; i < out.words->size(); ++i) {
    const auto& e = (*out.words)[i];
    for (std::size_t b = 0; b < base.size(); ++b) {
      const double w = base[b].weight * (base[b].w.norm2() / e.map.act(base[b].w).norm2());
      out.records.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(b),
                             e.map.apply(base[b].point), w});
      out.per_length[e.length] += w;
    }
  }
  const TailEstimate t = estimate_tail(out.per_length);
  out.tail_ratio = t.ratio;
  out.tail_mass = t.mass;
  require_convergence(t, "extend");
  return out;
}

/// Keeps the atoms that lie in the fundamental set, grouped by circle.
inline FundamentalMeasure restrict(const AutomorphicAtoms& nu, const SchottkyConfig& config) {
  const FundamentalIntervals fi(config);
  FundamentalMeasure out = empty_measure(config);
  for (const auto& r : nu.records) {
    if (const auto loc = fi.locate(r.point)) out.on(loc->n).push_back({r.point, r.weight});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Automorphy residuals

/// Half-open arc [left, right) of R∪{∞}, running rightwards (through ∞ if
/// left > right).
struct Arc {
  ExtendedReal left;
  ExtendedReal right;
};

namespace detail {

inline double arc_angle(const ExtendedReal& x) noexcept {
  return x.is_infinite() ? std::numbers::pi / 2.0 : std::atan(x.value());
}

}  // namespace detail

inline bool in_arc(const ExtendedReal& x, const Arc& arc) noexcept {
  const double v = detail::arc_angle(x);
  const double s = detail::arc_angle(arc.left);
  const double e = detail::arc_angle(arc.right);
  if (s <= e) return v >= s && v < e;
  return v >= s || v < e;
}

struct IntervalResidual {
  Arc interval;
  double image_mass = 0.0;    // ν(g·A)
  double weighted_mass = 0.0; // ∫_A f(g;x) dν(x)
  double residual = 0.0;
  bool pass = false;
};

struct AutomorphyReport {
  double tolerance = 0.0;
  std::vector<IntervalResidual> intervals;

  [[nodiscard]] bool pass() const noexcept {
    return std::all_of(intervals.begin(), intervals.end(), [](const auto& r) { return r.pass; });
  }
  [[nodiscard]] double max_residual() const noexcept {
    double m = 0.0;
    for (const auto& r : intervals) m = std::max(m, r.residual);
    return m;
  }
};

/// For each test interval A inside a fundamental piece, compares ν(g·A) with
/// ∫_A f(g;x) dν(x). Tolerance is max(1e-6, 10·tail mass).
inline AutomorphyReport verify_automorphic(const AutomorphicAtoms& nu, const MoebiusMap& g,
                                           std::span<const Arc> test_intervals) {
  AutomorphyReport rep;
  rep.tolerance = std::max(1e-6, 10.0 * nu.tail_mass);
  for (const Arc& a : test_intervals) {
    const Arc image{g.apply(a.left), g.apply(a.right)};
    IntervalResidual r{a};
    for (const auto& rec : nu.records) {
      if (in_arc(rec.point, image)) r.image_mass += rec.weight;
      if (in_arc(rec.point, a)) r.weighted_mass += rec.weight * cocycle_f(g, rec.point);
    }
    r.residual = std::abs(r.image_mass - r.weighted_mass);
    r.pass = r.residual <= rep.tolerance;
    rep.intervals.push_back(r);
  }
  return rep;
}

}  // namespace rlx
