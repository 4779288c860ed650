#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "rlx/schottky.hpp"

namespace rlx::testing {

inline SchottkyConfig cfg2(int L = kDefaultWordLength) { return SchottkyConfig({{2.0, 1.0}}, L); }
inline SchottkyConfig cfg3(int L = kDefaultWordLength) { return SchottkyConfig({{1.2, 0.8}, {4.1, 1.4}}, L); }

/// Uniformly random reduced word of the given length.
inline GroupWord random_word(std::mt19937_64& rng, const SchottkyConfig& config, int length) {
  const auto letters = static_cast<int>(config.letter_count());
  std::uniform_int_distribution<int> pick(0, letters - 1);
  std::vector<LetterCode> w;
  while (static_cast<int>(w.size()) < length) {
    const auto l = static_cast<LetterCode>(pick(rng));
    if (!w.empty() && inverse_letter(w.back()) == l) continue;
    w.push_back(l);
  }
  return GroupWord(w);
}

/// Plain 2×2 product, independent of MoebiusMap.
struct Mat {
  double a, b, c, d;
};

inline Mat mul(const Mat& p, const Mat& q) {
  return {p.a * q.a + p.b * q.c, p.a * q.b + p.b * q.d, p.c * q.a + p.d * q.c, p.c * q.b + p.d * q.d};
}

/// The generator (1/r)[[c, c² - r²], [1, c]] written out directly.
inline Mat generator_matrix(double c, double r) { return {c / r, (c * c - r * r) / r, 1.0 / r, c / r}; }

/// d/dx arctan(g·x) / d/dx arctan(x): the angular-measure derivative, which
/// equals ‖w(x)‖²/‖g w(x)‖².
inline double angular_derivative(const Mat& g, double x) {
  const double det = g.a * g.d - g.b * g.c;
  const double den = g.c * x + g.d;
  const double gx = (g.a * x + g.b) / den;
  const double deriv = det / (den * den);
  return deriv * (1.0 + x * x) / (1.0 + gx * gx);
}

}  // namespace rlx::testing
