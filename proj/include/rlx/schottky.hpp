#pragma once

// The free Fuchsian group generated by g_j = I_j R (reflection in the
// imaginary axis followed by inversion in |z - c_j| = r_j), its fundamental
// intervals, reduced-word enumeration and limit-set samples.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "rlx/errors.hpp"
#include "rlx/moebius.hpp"

namespace rlx {

inline constexpr int kDefaultWordLength = 12;
inline constexpr std::size_t kDefaultElementCap = 5'000'000;

struct CircleDatum {
  double c = 0.0;
  double r = 0.0;
};

/// Letter code 2j is generator g_{j+1}, code 2j+1 is its inverse.
using LetterCode = std::uint16_t;

constexpr LetterCode inverse_letter(LetterCode l) noexcept { return l ^ 1U; }

/// A reduced word in the generators.
class GroupWord {
 public:
  GroupWord() = default;
  explicit GroupWord(std::vector<LetterCode> letters) : letters_(std::move(letters)) {
    for (std::size_t i = 1; i < letters_.size(); ++i) {
      if (letters_[i] == inverse_letter(letters_[i - 1])) {
        throw ValidationError("GroupWord: word is not reduced");
      }
    }
  }

  [[nodiscard]] std::size_t length() const noexcept { return letters_.size(); }
  [[nodiscard]] bool empty() const noexcept { return letters_.empty(); }
  [[nodiscard]] std::span<const LetterCode> letters() const noexcept { return letters_; }

  [[nodiscard]] GroupWord inverse() const {
    std::vector<LetterCode> r(letters_.rbegin(), letters_.rend());
    for (auto& l : r) l = inverse_letter(l);
    return GroupWord(std::move(r));
  }

  /// Free reduction of the concatenation.
  friend GroupWord operator*(const GroupWord& u, const GroupWord& v) {
    std::vector<LetterCode> r = u.letters_;
    for (LetterCode l : v.letters_) {
      if (!r.empty() && r.back() == inverse_letter(l)) {
        r.pop_back();
      } else {
        r.push_back(l);
      }
    }
    return GroupWord(std::move(r));
  }

  friend bool operator==(const GroupWord&, const GroupWord&) = default;
  friend auto operator<=>(const GroupWord&, const GroupWord&) = default;

  /// "e" for the identity; otherwise a, b, ... for generators and A, B, ...
  /// for their inverses (x12 / X12 beyond 26 generators).
  [[nodiscard]] std::string to_string() const {
    if (letters_.empty()) return "e";
    std::string s;
    for (LetterCode l : letters_) {
      const unsigned j = l / 2U;
      const bool inv = (l & 1U) != 0;
      if (j < 26) {
        s.push_back(static_cast<char>((inv ? 'A' : 'a') + j));
      } else {
        s += (inv ? "X" : "x") + std::to_string(j + 1) + ".";
      }
    }
    return s;
  }

 private:
  std::vector<LetterCode> letters_;
};

/// Validated circle data together with the derived generators.
class SchottkyConfig {
 public:
  SchottkyConfig() = default;

  explicit SchottkyConfig(std::vector<CircleDatum> circles, int max_word_length = kDefaultWordLength,
                          std::size_t element_cap = kDefaultElementCap)
      : circles_(std::move(circles)), max_word_length_(max_word_length), element_cap_(element_cap) {
    validate();
    for (const auto& [c, r] : circles_) {
      const MoebiusMap g(c / r, (c * c - r * r) / r, 1.0 / r, c / r);
      letters_.push_back(g);
      letters_.push_back(g.inverse());
    }
  }

  [[nodiscard]] const std::vector<CircleDatum>& circles() const noexcept { return circles_; }
  /// Number of fundamental circles S_n (one more than the generator count).
  [[nodiscard]] int circle_count() const noexcept { return static_cast<int>(circles_.size()) + 1; }
  [[nodiscard]] int generator_count() const noexcept { return static_cast<int>(circles_.size()); }
  [[nodiscard]] int max_word_length() const noexcept { return max_word_length_; }
  [[nodiscard]] std::size_t element_cap() const noexcept { return element_cap_; }

  [[nodiscard]] const MoebiusMap& generator(int j) const { return letters_.at(2 * static_cast<std::size_t>(j)); }
  [[nodiscard]] const MoebiusMap& letter(LetterCode l) const { return letters_.at(l); }
  [[nodiscard]] std::size_t letter_count() const noexcept { return letters_.size(); }

  [[nodiscard]] MoebiusMap evaluate(const GroupWord& w) const {
    MoebiusMap m;
    for (LetterCode l : w.letters()) m = m * letter(l);
    return m;
  }

 private:
  void validate() const {
    if (max_word_length_ < 0) throw ValidationError("max_word_length must be nonnegative");
    for (std::size_t j = 0; j < circles_.size(); ++j) {
      const auto& [c, r] = circles_[j];
      if (!std::isfinite(c) || !std::isfinite(r) || !(c > 0.0) || !(r > 0.0)) {
        throw ValidationError("circle " + std::to_string(j + 1) + ": center and radius must be positive");
      }
      if (!(c - r > 0.0)) {
        throw ValidationError("circle " + std::to_string(j + 1) +
                              ": must lie strictly in the right half line (c - r > 0)");
      }
      if (j > 0) {
        const auto& prev = circles_[j - 1];
        if (!(prev.c + prev.r < c - r)) {
          throw ValidationError("circles " + std::to_string(j) + " and " + std::to_string(j + 1) +
                                " violate strict disjointness (c_j + r_j < c_{j+1} - r_{j+1})");
        }
      }
    }
  }

  std::vector<CircleDatum> circles_;
  int max_word_length_ = kDefaultWordLength;
  std::size_t element_cap_ = kDefaultElementCap;
  std::vector<MoebiusMap> letters_;
};

/// The matrix (1/r) [[c, c² - r²], [1, c]] for every circle.
inline std::vector<MoebiusMap> generators(const SchottkyConfig& config) {
  std::vector<MoebiusMap> out;
  for (int j = 0; j < config.generator_count(); ++j) out.push_back(config.generator(j));
  return out;
}

// ---------------------------------------------------------------------------
// Fundamental intervals

/// One half-open piece [left, right) of some I_n. A wrapping piece runs from
/// `left` to the right through ∞ and ends at `right`.
struct IntervalPiece {
  int n = 1;
  int index = 0;
  ExtendedReal left;
  ExtendedReal right;
  bool wraps = false;
};

struct Location {
  int n = 1;
  double theta = 0.0;
};

/// I_1, ..., I_N with their circle coordinates θ ∈ [0, 2π).
///
/// Coordinates: I_1 = [-R, R) is linear in x. A two-piece I_n uses
/// θ ∈ [0, π) on the left piece and [π, 2π) on the right piece, joined at
/// the inner endpoints ±A. The wrapping I_N is parametrized by the unwrapped
/// angle v = atan(x) (π + atan(x) for x < -A), linear in θ. For the trivial
/// group the single circle is all of R∪{∞} with θ = 0 at ∞.
class FundamentalIntervals {
 public:
  enum class Kind { whole, single, twin, wrap };

  explicit FundamentalIntervals(const SchottkyConfig& config) {
    const auto& cs = config.circles();
    const int N = config.circle_count();
    for (int n = 1; n <= N; ++n) {
      Circle s;
      if (N == 1) {
        s.kind = Kind::whole;
      } else if (n == 1) {
        s.kind = Kind::single;
        s.outer = cs[0].c - cs[0].r;
      } else if (n == N) {
        s.kind = Kind::wrap;
        s.inner = cs[n - 2].c + cs[n - 2].r;
      } else {
        s.kind = Kind::twin;
        s.inner = cs[n - 2].c + cs[n - 2].r;
        s.outer = cs[n - 1].c - cs[n - 1].r;
      }
      circles_.push_back(s);
    }
  }

  [[nodiscard]] int circle_count() const noexcept { return static_cast<int>(circles_.size()); }
  [[nodiscard]] Kind kind(int n) const { return at(n).kind; }

  [[nodiscard]] std::vector<IntervalPiece> pieces(int n) const {
    const Circle& s = at(n);
    switch (s.kind) {
      case Kind::whole:
        return {{n, 0, ExtendedReal::infinity(), ExtendedReal::infinity(), true}};
      case Kind::single:
        return {{n, 0, -s.outer, s.outer, false}};
      case Kind::twin:
        return {{n, 0, -s.outer, -s.inner, false}, {n, 1, s.inner, s.outer, false}};
      case Kind::wrap:
        return {{n, 0, s.inner, -s.inner, true}};
    }
    return {};
  }

  [[nodiscard]] std::vector<IntervalPiece> all_pieces() const {
    std::vector<IntervalPiece> out;
    for (int n = 1; n <= circle_count(); ++n) {
      auto p = pieces(n);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  /// Circle index and coordinate of x, or nullopt outside the fundamental set.
  /// Points within 1e-12 (relative) of a closed left end snap onto it; points
  /// within the same distance of an open right end are outside.
  [[nodiscard]] std::optional<Location> locate(const ExtendedReal& x) const {
    for (int n = 1; n <= circle_count(); ++n) {
      if (auto th = theta_of(n, x)) return Location{n, *th};
    }
    return std::nullopt;
  }

  /// Inverse of the circle coordinate on S_n.
  [[nodiscard]] ExtendedReal point_at(int n, double theta) const {
    constexpr double pi = std::numbers::pi;
    const Circle& s = at(n);
    switch (s.kind) {
      case Kind::whole: {
        const double v = theta / 2.0 - pi / 2.0;
        if (theta == 0.0) return ExtendedReal::infinity();
        return from_angle(v);
      }
      case Kind::single:
        return -s.outer + 2.0 * s.outer * theta / (2.0 * pi);
      case Kind::twin: {
        const double len = s.outer - s.inner;
        if (theta < pi) return -s.outer + len * theta / pi;
        return s.inner + len * (theta - pi) / pi;
      }
      case Kind::wrap: {
        const double v0 = std::atan(s.inner);
        const double v = v0 + theta * (pi - 2.0 * v0) / (2.0 * pi);
        return from_angle(v);
      }
    }
    return {};
  }

  /// dμ/dθ for the reference measure μ used by discretization: Lebesgue dx on
  /// finite pieces, the angular measure dx/(1+x²) on pieces through ∞.
  [[nodiscard]] double reference_density(int n) const {
    constexpr double pi = std::numbers::pi;
    const Circle& s = at(n);
    switch (s.kind) {
      case Kind::whole: return 0.5;
      case Kind::single: return s.outer / pi;
      case Kind::twin: return (s.outer - s.inner) / pi;
      case Kind::wrap: return (pi - 2.0 * std::atan(s.inner)) / (2.0 * pi);
    }
    return 0.0;
  }

  [[nodiscard]] bool reference_is_angular(int n) const {
    const Kind k = at(n).kind;
    return k == Kind::whole || k == Kind::wrap;
  }

 private:
  struct Circle {
    Kind kind = Kind::whole;
    double inner = 0.0;  // A: inner boundary (previous circle's c + r)
    double outer = 0.0;  // R: outer boundary (this circle's c - r)
  };

  const Circle& at(int n) const {
    if (n < 1 || n > circle_count()) throw ValidationError("circle index out of range");
    return circles_[static_cast<std::size_t>(n - 1)];
  }

  static double tol(double e) noexcept { return kPointTolerance * std::max(1.0, std::abs(e)); }

  static ExtendedReal from_angle(double v) {
    constexpr double pi = std::numbers::pi;
    if (std::abs(v - pi / 2.0) <= 1e-15) return ExtendedReal::infinity();
    return v < pi / 2.0 ? std::tan(v) : std::tan(v - pi);
  }

  static bool in_half_open(double x, double l, double r) noexcept {
    return x >= l - tol(l) && x < r - tol(r);
  }

  static double clamp_theta(double th) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (th < 0.0) return 0.0;
    if (th >= two_pi) return std::nextafter(two_pi, 0.0);
    return th;
  }

  std::optional<double> theta_of(int n, const ExtendedReal& p) const {
    constexpr double pi = std::numbers::pi;
    const Circle& s = at(n);
    switch (s.kind) {
      case Kind::whole:
        if (p.is_infinite()) return 0.0;
        return clamp_theta(2.0 * (std::atan(p.value()) + pi / 2.0));
      case Kind::single:
        if (p.is_infinite() || !in_half_open(p.value(), -s.outer, s.outer)) return std::nullopt;
        return clamp_theta(2.0 * pi * (p.value() + s.outer) / (2.0 * s.outer));
      case Kind::twin: {
        if (p.is_infinite()) return std::nullopt;
        const double x = p.value();
        const double len = s.outer - s.inner;
        if (in_half_open(x, -s.outer, -s.inner)) return clamp_theta(pi * (x + s.outer) / len);
        if (in_half_open(x, s.inner, s.outer)) return clamp_theta(pi + pi * (x - s.inner) / len);
        return std::nullopt;
      }
      case Kind::wrap: {
        const double v0 = std::atan(s.inner);
        double v = 0.0;
        if (p.is_infinite()) {
          v = pi / 2.0;
        } else {
          const double x = p.value();
          if (x >= s.inner - tol(s.inner)) {
            v = std::atan(x);
          } else if (x < -s.inner - tol(s.inner)) {
            v = std::atan(x) + pi;
          } else {
            return std::nullopt;
          }
        }
        return clamp_theta(2.0 * pi * (v - v0) / (pi - 2.0 * v0));
      }
    }
    return std::nullopt;
  }

  std::vector<Circle> circles_;
};

inline FundamentalIntervals fundamental_intervals(const SchottkyConfig& config) {
  return FundamentalIntervals(config);
}

inline std::optional<Location> locate(const SchottkyConfig& config, const ExtendedReal& x) {
  return FundamentalIntervals(config).locate(x);
}

// ---------------------------------------------------------------------------
// Word enumeration

/// Number of reduced words of length exactly `length` on k generators.
inline double words_of_length(int k, int length) noexcept {
  if (length == 0) return 1.0;
  if (k == 0) return 0.0;
  return 2.0 * k * std::pow(2.0 * k - 1.0, length - 1);
}

/// Number of reduced words of length at most L.
inline double words_up_to(int k, int L) noexcept {
  double total = 0.0;
  for (int l = 0; l <= L; ++l) total += words_of_length(k, l);
  return total;
}

/// Materialized reduced words of length ≤ L in shortlex order, stored as a
/// parent-pointer tree.
class WordTable {
 public:
  static constexpr std::uint32_t kNoParent = 0xFFFFFFFFu;

  struct Entry {
    std::uint32_t parent = kNoParent;
    LetterCode letter = 0;
    std::uint16_t length = 0;
    MoebiusMap map;
  };

  WordTable() = default;
  explicit WordTable(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] const Entry& operator[](std::size_t i) const { return entries_[i]; }
  [[nodiscard]] auto begin() const noexcept { return entries_.begin(); }
  [[nodiscard]] auto end() const noexcept { return entries_.end(); }

  [[nodiscard]] GroupWord word(std::size_t i) const {
    std::vector<LetterCode> letters(entries_.at(i).length);
    for (std::size_t k = letters.size(); k-- > 0;) {
      letters[k] = entries_[i].letter;
      i = entries_[i].parent;
    }
    return GroupWord(std::move(letters));
  }

 private:
  std::vector<Entry> entries_;
};

/// Every reduced word of length ≤ L exactly once, in shortlex order (length
/// first, then letter codes g₁ < g₁⁻¹ < g₂ < ...), with canonical matrices.
/// Throws ResourceError if the count exceeds the config's element cap.
inline WordTable enumerate(const SchottkyConfig& config, int L) {
  if (L < 0) throw ValidationError("enumerate: word length must be nonnegative");
  const int k = config.generator_count();
  const double count = words_up_to(k, L);
  if (count > static_cast<double>(config.element_cap())) {
    throw ResourceError("enumerate: " + std::to_string(static_cast<long long>(count)) +
                        " words exceed element cap " + std::to_string(config.element_cap()));
  }
  std::vector<WordTable::Entry> e;
  e.reserve(static_cast<std::size_t>(count));
  e.push_back({});
  std::size_t level_begin = 0;
  for (int len = 1; len <= L && k > 0; ++len) {
    const std::size_t level_end = e.size();
    for (std::size_t i = level_begin; i < level_end; ++i) {
      for (LetterCode l = 0; l < config.letter_count(); ++l) {
        if (e[i].length > 0 && l == inverse_letter(e[i].letter)) continue;
        e.push_back({static_cast<std::uint32_t>(i), l, static_cast<std::uint16_t>(len),
                     e[i].map * config.letter(l)});
      }
    }
    level_begin = level_end;
  }
  return WordTable(std::move(e));
}

/// Worker count for branch-parallel sweeps: RLX_THREADS if set, otherwise
/// the hardware concurrency. Results never depend on it.
inline unsigned worker_count() {
  if (const char* env = std::getenv("RLX_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

namespace detail {

template <class Fn>
void dfs_words(const SchottkyConfig& config, const MoebiusMap& m, LetterCode last, int length, int L,
               std::vector<LetterCode>& stack, Fn& fn) {
  fn(m, length, std::span<const LetterCode>(stack));
  if (length == L) return;
  for (LetterCode l = 0; l < config.letter_count(); ++l) {
    if (l == inverse_letter(last)) continue;
    stack.push_back(l);
    dfs_words(config, m * config.letter(l), l, length + 1, L, stack, fn);
    stack.pop_back();
  }
}

}  // namespace detail

/// Depth-first visit of every reduced word of length ≤ L in lexicographic
/// order. `fn(map, length, letters)`; nothing is materialized.
template <class Fn>
void visit_words(const SchottkyConfig& config, int L, Fn&& fn) {
  std::vector<LetterCode> stack;
  fn(MoebiusMap::identity(), 0, std::span<const LetterCode>(stack));
  if (L == 0) return;
  for (LetterCode l = 0; l < config.letter_count(); ++l) {
    stack.push_back(l);
    detail::dfs_words(config, config.letter(l), l, 1, L, stack, fn);
    stack.pop_back();
  }
}

/// Branch-parallel reduction over the word tree. Branch 0 is the identity,
/// branch 1 + l is the subtree of words starting with letter l. Each branch
/// folds into its own copy of `proto` via `fn(acc, map, length)`; the caller
/// merges the returned accumulators in order, so the result is the same for
/// any worker count.
template <class Acc, class Fn>
std::vector<Acc> reduce_word_branches(const SchottkyConfig& config, int L, const Acc& proto, Fn fn) {
  const std::size_t branches = 1 + (L > 0 ? config.letter_count() : 0);
  std::vector<Acc> acc(branches, proto);
  fn(acc[0], MoebiusMap::identity(), 0);
  auto run_branch = [&](std::size_t b) {
    const auto l = static_cast<LetterCode>(b - 1);
    std::vector<LetterCode> stack{l};
    auto visit = [&](const MoebiusMap& m, int length, std::span<const LetterCode>) { fn(acc[b], m, length); };
    detail::dfs_words(config, config.letter(l), l, 1, L, stack, visit);
  };
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(branches - 1));
  if (workers <= 1) {
    for (std::size_t b = 1; b < branches; ++b) run_branch(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t b = 1 + w; b < branches; b += workers) run_branch(b);
      });
    }
  }
  return acc;
}

/// {g·0 : |g| = L} in lexicographic word order; empty for the trivial group.
inline std::vector<ExtendedReal> limit_set_sample(const SchottkyConfig& config, int L) {
  if (L < 1) throw ValidationError("limit_set_sample: word length must be at least 1");
  const int k = config.generator_count();
  if (k == 0) return {};
  const double count = words_of_length(k, L);
  if (count > static_cast<double>(config.element_cap())) {
    throw ResourceError("limit_set_sample: " + std::to_string(static_cast<long long>(count)) +
                        " points exceed element cap");
  }
  std::vector<ExtendedReal> out;
  out.reserve(static_cast<std::size_t>(count));
  visit_words(config, L, [&](const MoebiusMap& m, int length, std::span<const LetterCode>) {
    if (length == L) out.push_back(m.apply(ExtendedReal(0.0)));
  });
  return out;
}

struct QuotientBounds {
  double lower = 0.0;  // C₁
  double upper = 0.0;  // C₂
};

/// Extremes of |a/b|, |a/c|, |b/d|, |c/d| over non-identity words of length ≤ L.
inline QuotientBounds quotient_bounds(const SchottkyConfig& config, int L) {
  if (L < 1) throw ValidationError("quotient_bounds: word length must be at least 1");
  if (config.generator_count() == 0) throw ValidationError("quotient_bounds: needs at least one circle");
  QuotientBounds q{std::numeric_limits<double>::infinity(), 0.0};
  visit_words(config, L, [&](const MoebiusMap& m, int length, std::span<const LetterCode>) {
    if (length == 0) return;
    const double a = std::abs(m.a()), b = std::abs(m.b()), c = std::abs(m.c()), d = std::abs(m.d());
    for (double r : {a / b, a / c, b / d, c / d}) {
      q.lower = std::min(q.lower, r);
      q.upper = std::max(q.upper, r);
    }
  });
  return q;
}

}  // namespace rlx
