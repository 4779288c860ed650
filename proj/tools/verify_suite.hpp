#pragma once

// The acceptance suite shared by `rlx verify` and the acceptance binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rlx/rlx.hpp"

namespace rlx::verify {

using io::Json;

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=" or ">"
  double tolerance = 0.0;
  bool pass = false;
};

struct Criterion {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  std::string error;  // set when the criterion threw
  double seconds = 0.0;

  [[nodiscard]] bool pass() const noexcept {
    return error.empty() && !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }

  void at_most(std::string name, double value, double tol) {
    checks.push_back({std::move(name), value, "<=", tol, value <= tol});
  }
  void at_least(std::string name, double value, double tol) {
    checks.push_back({std::move(name), value, ">=", tol, value >= tol});
  }
  void above(std::string name, double value, double tol) {
    checks.push_back({std::move(name), value, ">", tol, value > tol});
  }
};

inline SchottkyConfig cfg2() { return SchottkyConfig({{2.0, 1.0}}, 12); }
inline SchottkyConfig cfg3() { return SchottkyConfig({{1.2, 0.8}, {4.1, 1.4}}, 12); }

inline constexpr int kL = 12;

namespace detail {

inline GroupWord random_word(std::mt19937_64& rng, const SchottkyConfig& config, int length) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(config.letter_count()) - 1);
  std::vector<LetterCode> w;
  while (static_cast<int>(w.size()) < length) {
    const auto l = static_cast<LetterCode>(pick(rng));
    if (!w.empty() && inverse_letter(w.back()) == l) continue;
    w.push_back(l);
  }
  return GroupWord(std::move(w));
}

/// Uniform point of a random fundamental interval, by circle coordinate.
inline ExtendedReal fundamental_point(std::mt19937_64& rng, const SchottkyConfig& config) {
  const FundamentalIntervals fi(config);
  std::uniform_int_distribution<int> circle(1, config.circle_count());
  std::uniform_real_distribution<double> theta(0.0, 2.0 * std::numbers::pi);
  const int n = circle(rng);
  return fi.point_at(n, theta(rng));
}

/// Chordal distance from x to the nearest circle endpoint ±(c - r), ±(c + r).
inline double boundary_clearance(const SchottkyConfig& config, const ExtendedReal& x) {
  double d = INFINITY;
  for (const auto& [c, r] : config.circles()) {
    for (double e : {c - r, c + r, -(c - r), -(c + r)}) d = std::min(d, chordal(x, e));
  }
  return d;
}

/// A fundamental point kept at chordal distance ≥ margin from circle endpoints.
inline ExtendedReal interior_point(std::mt19937_64& rng, const SchottkyConfig& config, double margin) {
  for (;;) {
    const ExtendedReal x = fundamental_point(rng, config);
    if (boundary_clearance(config, x) >= margin) return x;
  }
}

/// One to `max_atoms` atoms on every circle, weights in [0.1, 1].
inline FundamentalMeasure random_shapes(std::mt19937_64& rng, const SchottkyConfig& config, int max_atoms) {
  std::uniform_int_distribution<int> count(1, max_atoms);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  FundamentalMeasure nu = empty_measure(config);
  for (int n = 1; n <= config.circle_count(); ++n) {
    const int k = count(rng);
    while (static_cast<int>(nu.on(n).size()) < k) {
      const ExtendedReal x = interior_point(rng, config, 0.05);
      const auto loc = locate(config, x);
      if (loc->n != n) continue;
      nu.on(n).push_back({x, weight(rng)});
    }
  }
  return nu;
}

/// Random sub-arc of a random fundamental piece (of I_n if n > 0), in the
/// arctan angle.
inline Arc random_arc(std::mt19937_64& rng, const SchottkyConfig& config, int n = 0) {
  const auto pieces = n > 0 ? fundamental_intervals(config).pieces(n) : fundamental_intervals(config).all_pieces();
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  const IntervalPiece& p = pieces[pick(rng)];
  auto angle = [](const ExtendedReal& x) { return x.is_infinite() ? std::numbers::pi / 2.0 : std::atan(x.value()); };
  const double s = angle(p.left);
  double e = angle(p.right);
  if (e <= s) e += std::numbers::pi;
  std::uniform_real_distribution<double> u(s, e);
  double a = u(rng), b = u(rng);
  if (a > b) std::swap(a, b);
  auto point = [](double v) {
    if (v == std::numbers::pi / 2.0) return ExtendedReal::infinity();
    return ExtendedReal(std::tan(v > std::numbers::pi / 2.0 ? v - std::numbers::pi : v));
  };
  return {point(a), point(b)};
}

inline double max_atomwise(const FundamentalMeasure& x, const FundamentalMeasure& y) {
  if (x.circle_count() != y.circle_count()) return INFINITY;
  double d = 0.0;
  for (int n = 1; n <= x.circle_count(); ++n) {
    if (x.on(n).size() != y.on(n).size()) return INFINITY;
    for (std::size_t i = 0; i < x.on(n).size(); ++i) {
      if (!(x.on(n)[i].point == y.on(n)[i].point)) return INFINITY;
      d = std::max(d, std::abs(x.on(n)[i].weight - y.on(n)[i].weight));
    }
  }
  return d;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline void cocycle_identity(Criterion& c) {
  const auto cfg = cfg3();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(0, 6);
  double worst = 0.0;
  for (int k = 0; k < 10'000; ++k) {
    const MoebiusMap g = cfg.evaluate(detail::random_word(rng, cfg, len(rng)));
    const MoebiusMap h = cfg.evaluate(detail::random_word(rng, cfg, len(rng)));
    const ExtendedReal x = detail::fundamental_point(rng, cfg);
    const double lhs = cocycle_f(g * h, x);
    const double rhs = cocycle_f(g, h.apply(x)) * cocycle_f(h, x);
    worst = std::max(worst, std::abs(lhs - rhs) / lhs);
  }
  c.at_most("max relative error over 1e4 triples", worst, 1e-10);
  const MoebiusMap g = cfg.generator(0);
  c.at_most("relative error of f(G1^2; 0) against 4/85", std::abs(cocycle_f(g * g, 0.0) - 4.0 / 85.0) / (4.0 / 85.0),
            1e-10);
}

inline void boundary_exactness(Criterion& c) {
  double df = 0.0, dx = 0.0;
  for (const auto& cfg : {cfg2(), cfg3()}) {
    for (int j = 0; j < cfg.generator_count(); ++j) {
      const auto [cc, r] = cfg.circles()[static_cast<std::size_t>(j)];
      const MoebiusMap& g = cfg.generator(j);
      df = std::max(df, std::abs(cocycle_f(g, -(cc - r)) - 1.0));
      dx = std::max(dx, std::abs(g.apply(ExtendedReal(-(cc - r))).value() - (cc - r)));
    }
  }
  c.at_most("max |f(g; -(c-r)) - 1|", df, 1e-12);
  c.at_most("max |g(-(c-r)) - (c-r)|", dx, 1e-12);
}

inline void group_hygiene(Criterion& c) {
  const auto cfg = cfg3();
  const WordTable table = enumerate(cfg, 10);
  double det = 0.0, trace = INFINITY;
  for (std::size_t i = 1; i < table.size(); ++i) {
    det = std::max(det, std::abs(table[i].map.determinant() - 1.0));
    trace = std::min(trace, std::abs(table[i].map.trace()));
  }
  c.at_most("max |det - 1| over reduced words of length <= 10", det, 1e-9);
  c.above("min |trace| over non-identity words", trace, 2.0);
}

inline void series_convergence(Criterion& c) {
  const auto cfg = cfg3();
  const auto d14 = poincare_D(cfg, 0.0, 14);
  const auto d12 = poincare_D(cfg, 0.0, 12);
  double ratio = 0.0;
  for (std::size_t l = 4; l + 1 < d14.per_length.size(); ++l) {
    ratio = std::max(ratio, d14.per_length[l + 1] / d14.per_length[l]);
  }
  c.at_most("max S(l+1)/S(l) for l >= 4", ratio, 0.9);
  c.at_most("|D(0) at L=14 - D(0) at L=12| / D(0)", std::abs(d14.value - d12.value) / d14.value, 1e-6);
}

inline void automorphy(Criterion& c) {
  const auto cfg = cfg3();
  const auto nu = extend(place_atoms(cfg, std::vector<Atom>{{0.0, 1.0}}), cfg, kL);
  std::mt19937_64 rng(505);
  std::vector<Arc> arcs;
  for (int k = 0; k < 20; ++k) arcs.push_back(detail::random_arc(rng, cfg, 1));
  for (int j = 0; j < cfg.generator_count(); ++j) {
    const auto rep = verify_automorphic(nu, cfg.generator(j), arcs);
    c.at_most("max interval residual, generator " + std::to_string(j + 1), rep.max_residual(), rep.tolerance);
  }
}

inline void mass_identity(Criterion& c) {
  const auto cfg = cfg3();
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    std::vector<Atom> atoms;
    const int m = count(rng);
    for (int i = 0; i < m; ++i) atoms.push_back({detail::interior_point(rng, cfg, 0.05), weight(rng)});
    const auto nu0 = place_atoms(cfg, atoms);
    const double mass = extend(nu0, cfg, kL).mass();
    double predicted = 0.0;
    for (const Atom& a : atoms) predicted += poincare_D(cfg, a.point, kL).value * a.weight;
    worst = std::max(worst, std::abs(mass - predicted));
  }
  c.at_most("max |mass(extend) - sum D(x_i) w_i| over 10 measures", worst, 1e-8);
}

inline void homomorphism(Criterion& c) {
  const auto cfg = cfg3();
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<int> len(1, 2);
  std::vector<std::array<GroupWord, 3>> pairs;
  std::map<GroupWord, std::size_t> index{{GroupWord(), 0}};
  std::vector<Complex> probes{kI};
  auto probe = [&](const GroupWord& w) {
    if (!index.contains(w)) {
      index[w] = probes.size();
      probes.push_back(cfg.evaluate(w).apply(kI));
    }
  };
  for (int k = 0; k < 50; ++k) {
    const GroupWord g = detail::random_word(rng, cfg, len(rng));
    const GroupWord h = detail::random_word(rng, cfg, len(rng));
    pairs.push_back({g, h, g * h});
    for (const auto& w : pairs.back()) probe(w);
  }
  const auto ev = evaluate_orbit(cfg, place_atoms(cfg, std::vector<Atom>{{0.0, 1.0}}), kL, probes);
  auto gamma_of = [&](const GroupWord& w) { return (ev.values[index.at(w)] - ev.values[0]).real(); };
  double worst = 0.0;
  for (const auto& [g, h, gh] : pairs) worst = std::max(worst, std::abs(gamma_of(gh) - gamma_of(g) - gamma_of(h)));
  c.at_most("max |gamma(gh) - gamma(g) - gamma(h)| over 50 pairs", worst, 1e-6);
}

inline FundamentalMeasure three_atom_shapes(const SchottkyConfig& cfg) {
  return place_atoms(cfg, std::vector<Atom>{{0.1, 1.0}, {2.3, 1.0}, {ExtendedReal::infinity(), 1.0}});
}

inline void function_automorphy(Criterion& c) {
  const auto cfg = cfg3();
  const auto nu = balance(cfg, three_atom_shapes(cfg), kL).measure;
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> x(-1.0, 1.0), y(0.5, 2.0);
  std::vector<Complex> lambda;
  for (int k = 0; k < 20; ++k) lambda.emplace_back(x(rng), y(rng));
  std::vector<Complex> probes = lambda;
  for (int j = 0; j < cfg.generator_count(); ++j) {
    for (const auto& l : lambda) probes.push_back(cfg.generator(j).apply(l));
  }
  probes.push_back(kI);
  for (int j = 0; j < cfg.generator_count(); ++j) probes.push_back(cfg.generator(j).apply(kI));
  const auto ev = evaluate_orbit(cfg, nu, kL, probes);
  const std::size_t base_i = 20 * static_cast<std::size_t>(cfg.generator_count() + 1);
  for (int j = 0; j < cfg.generator_count(); ++j) {
    const std::size_t off = 20 * static_cast<std::size_t>(j + 1);
    Complex mean{};
    for (std::size_t k = 0; k < 20; ++k) mean += ev.values[off + k] - ev.values[k];
    mean /= 20.0;
    double var = 0.0;
    for (std::size_t k = 0; k < 20; ++k) var += std::norm(ev.values[off + k] - ev.values[k] - mean);
    const double gamma = (ev.values[base_i + 1 + static_cast<std::size_t>(j)] - ev.values[base_i]).real();
    const std::string g = "generator " + std::to_string(j + 1);
    c.at_most("stddev of F(g l) - F(l), " + g, std::sqrt(var / 19.0), 1e-6);
    c.at_most("|Re constant - gamma|, " + g, std::abs(mean.real() - gamma), 1e-6);
    c.at_most("|Im constant|, " + g, std::abs(mean.imag()), 1e-6);
  }
}

inline void weight_solver(Criterion& c) {
  std::mt19937_64 rng(909);
  double min_c = INFINITY, sum_dev = 0.0, residual = 0.0, gap = INFINITY, scale = 0.0;
  for (const auto& cfg : {cfg2(), cfg3()}) {
    for (int k = 0; k < 20; ++k) {
      const auto nu = detail::random_shapes(rng, cfg, 2);
      const auto pm = period_matrix(cfg, nu, kL);
      const auto sol = solve_weights(pm.A);
      const auto sol3 = solve_weights(period_matrix(cfg, scaled(nu, 3.0), kL).A);
      double sum = 0.0;
      for (std::size_t n = 0; n < sol.c.size(); ++n) {
        min_c = std::min(min_c, sol.c[n]);
        sum += sol.c[n];
        scale = std::max(scale, std::abs(sol.c[n] - sol3.c[n]));
      }
      sum_dev = std::max(sum_dev, std::abs(sum - 1.0));
      residual = std::max(residual, sol.residual / pm.A.norm());
      gap = std::min(gap, sol.uniqueness_gap / sol.sigma_max);
    }
  }
  c.above("min c_n", min_c, 0.0);
  c.at_most("max |sum c - 1|", sum_dev, 1e-12);
  c.at_most("max ||Ac|| / ||A||", residual, 1e-8);
  c.at_least("min uniqueness_gap / sigma_max", gap, 1e-10);
  c.at_most("max |c - c(3 nu)|", scale, 1e-12);
}

inline void extreme_points(Criterion& c) {
  const auto cfg = cfg3();
  auto shapes = three_atom_shapes(cfg);
  shapes.on(1) = {{0.1, 0.6}, {-0.25, 0.4}};
  const auto nu = balance(cfg, shapes, kL).measure;
  const auto sp = split_nonextreme(nu, cfg, kL);
  const auto mu_in = membership_X(cfg, sp.mu, kL);
  const auto rho_in = membership_X(cfg, sp.rho, kL);
  c.at_most("mu in X: mass residual", mu_in.mass_residual, kMassTolerance);
  c.at_most("mu in X: gamma residual", mu_in.gamma_residual, mu_in.gamma_tolerance);
  c.at_most("rho in X: mass residual", rho_in.mass_residual, kMassTolerance);
  c.at_most("rho in X: gamma residual", rho_in.gamma_residual, rho_in.gamma_tolerance);
  double distinct = 0.0;
  for (int n = 1; n <= 3; ++n) {
    std::map<double, double> w;
    for (const Atom& a : sp.mu.on(n)) w[std::atan(a.point.is_infinite() ? INFINITY : a.point.value())] += a.weight;
    for (const Atom& a : sp.rho.on(n)) w[std::atan(a.point.is_infinite() ? INFINITY : a.point.value())] -= a.weight;
    for (const auto& [p, d] : w) distinct = std::max(distinct, std::abs(d));
  }
  c.above("max atomwise |mu - rho|", distinct, 1e-3);
  const auto back = combine(sp.mu, sp.mu_weight, sp.rho, sp.rho_weight);
  c.at_most("max atomwise |recombined - original|", detail::max_atomwise(back, nu), 1e-8);

  int wrong = 0;
  auto expect = [&](const FundamentalMeasure& m, bool want) { wrong += is_extreme(m) != want ? 1 : 0; };
  expect(three_atom_shapes(cfg), true);
  expect(nu, false);
  auto two_on_last = three_atom_shapes(cfg);
  two_on_last.on(3).push_back({-5.0, 0.5});
  expect(two_on_last, false);
  expect(discretize(cfg, [](int, const ExtendedReal&) { return 1.0; }, 8), false);
  std::mt19937_64 rng(1010);
  for (int k = 0; k < 10; ++k) {
    const auto m = detail::random_shapes(rng, cfg, 3);
    bool one = true;
    for (int n = 1; n <= 3; ++n) one = one && m.on(n).size() == 1;
    expect(m, one);
  }
  c.at_most("is_extreme misclassifications", wrong, 0.0);
}

inline void representation_roundtrip(Criterion& c) {
  const auto cfg = cfg3();
  std::mt19937_64 rng(1111);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto nu = balance(cfg, detail::random_shapes(rng, cfg, 3), kL).measure;
    worst = std::max(worst, detail::max_atomwise(from_normalized(to_normalized(nu), cfg, kL), nu));
  }
  c.at_most("max atomwise |from_normalized(to_normalized(nu)) - nu|", worst, 1e-8);
}

inline void finite_gap(Criterion& c) {
  const GapSet one(std::vector<Gap>{{-1.0, 1.0}});
  const std::vector<GapSet> sets{one, GapSet(std::vector<Gap>{{-3.0, -2.0}, {0.5, 1.5}}),
                                 GapSet(std::vector<Gap>{{-4.0, -3.5}, {-1.0, 0.0}, {2.0, 3.0}})};
  std::mt19937_64 rng(1212);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double im = 0.0, re = 0.0, norm = 0.0;
  int rises = 0;
  for (const GapSet& gs : sets) {
    const double lo = gs[0].a - 2.0, hi = gs[gs.size() - 1].b + 2.0;
    for (int d = 0; d < 20; ++d) {
      std::vector<double> mus;
      for (const auto& g : gs.gaps()) mus.push_back(g.a + (g.b - g.a) * u(rng));
      for (int i = 0; i < 100; ++i) {
        for (int j = 1; j <= 100; ++j) {
          im = std::min(im, eval_h(gs, mus, Complex(lo + (hi - lo) * i / 99.0, 0.04 * j)).imag());
        }
      }
      std::vector<std::pair<double, double>> bands{{lo, gs[0].a}};
      for (std::size_t n = 0; n + 1 < gs.size(); ++n) bands.emplace_back(gs[n].b, gs[n + 1].a);
      bands.emplace_back(gs[gs.size() - 1].b, hi);
      for (const auto& [l, r] : bands) {
        for (int k = 1; k < 50; ++k) {
          const double t = l + (r - l) * k / 50.0;
          if (std::min(t - l, r - t) < kKreinExclusion) continue;
          re = std::max(re, std::abs(eval_h(gs, mus, Complex(t, 1e-6)).real()));
        }
      }
      double prev = INFINITY;
      for (double y : {1e1, 1e2, 1e3, 1e4}) {
        const double dist = std::abs(eval_h(gs, mus, Complex(0.0, y)) - Complex(0.0, 2.0));
        rises += dist < prev ? 0 : 1;
        prev = dist;
      }
      norm = std::max(norm, prev);
    }
  }
  c.at_least("min Im h on the 100x100 grids", im, -1e-12);
  c.at_most("max |Re h(t + 1e-6 i)| on U", re, 1e-3);
  c.at_most("max |h(1e4 i) - 2i|", norm, 1e-3);
  c.at_most("steps where |h(iy) - 2i| fails to decrease", rises, 0.0);
  const std::vector<double> mu0{0.0};
  c.at_most("|residue([-1, 1], mu = 0) - 2|", std::abs(residue(one, mu0, 0).value - 2.0), 1e-6);
  const Divisor d(one, {{0.0, 1}});
  c.at_most("krein_check deviation, 100-point grid", krein_check(one, d, krein_grid(one, d, -3.0, 3.0, 100), 1e-6).max_deviation,
            1e-3);
  const std::vector<double> mu1{1.0};
  c.at_most("|h(0.99 + i0+) - 28.21347| with mu = 1",
            std::abs(eval_h(one, mu1, Complex(0.99, 1e-12)) - Complex(28.21347, 0.0)), 1e-3);
}

inline void linear_functional(Criterion& c) {
  const auto cfg = cfg3();
  const auto e1 = balance(cfg, three_atom_shapes(cfg), kL).measure;
  const auto e2 = balance(cfg, place_atoms(cfg, std::vector<Atom>{{-0.3, 1.0}, {-2.6, 1.0}, {7.0, 1.0}}), kL).measure;
  const double f1 = summarize_orbit(cfg, e1, kL).deriv_at_i.real();
  const double f2 = summarize_orbit(cfg, e2, kL).deriv_at_i.real();
  const double lo = std::min(f1, f2), hi = std::max(f1, f2);
  std::mt19937_64 rng(1313);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  double outside = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double s = t(rng);
    const double f = summarize_orbit(cfg, combine(e1, s, e2, 1.0 - s), kL).deriv_at_i.real();
    outside = std::max({outside, lo - f, f - hi});
  }
  c.at_most("max distance of Re F'(i) outside the extreme-point interval", outside, 1e-8);
}

// ---------------------------------------------------------------------------

struct Definition {
  int id;
  const char* title;
  void (*run)(Criterion&);
};

inline const std::vector<Definition>& definitions() {
  static const std::vector<Definition> defs{
      {1, "cocycle identity", cocycle_identity},
      {2, "boundary exactness of the generators", boundary_exactness},
      {3, "group hygiene", group_hygiene},
      {4, "series convergence", series_convergence},
      {5, "automorphy of the extension", automorphy},
      {6, "mass identity", mass_identity},
      {7, "homomorphism", homomorphism},
      {8, "function-level automorphy", function_automorphy},
      {9, "weight solver", weight_solver},
      {10, "extreme points", extreme_points},
      {11, "representation roundtrip", representation_roundtrip},
      {12, "finite-gap h", finite_gap},
      {13, "linear-functional extremality", linear_functional},
  };
  return defs;
}

inline Criterion run_one(const Definition& def) {
  Criterion c{def.id, def.title};
  const auto start = std::chrono::steady_clock::now();
  try {
    def.run(c);
  } catch (const std::exception& e) {
    c.error = e.what();
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c;
}

inline Json to_json(const Criterion& c) {
  Json checks = Json::array();
  for (const Check& k : c.checks) {
    checks.push_back(
        {{"name", k.name}, {"value", k.value}, {"relation", k.relation}, {"tolerance", k.tolerance}, {"pass", k.pass}});
  }
  Json out{{"id", c.id}, {"title", c.title}, {"pass", c.pass()}, {"checks", checks}};
  if (!c.error.empty()) out["error"] = c.error;
  return out;
}

struct SuiteResult {
  std::vector<Criterion> criteria;  // 1..14
};

/// Runs criteria 1-13 twice and records whether the two serializations agree
/// as criterion 14. `on_done` sees each criterion of the first pass.
inline SuiteResult run_suite(const std::function<void(const Criterion&)>& on_done = {}) {
  SuiteResult out;
  Json first = Json::array(), second = Json::array();
  for (const auto& def : definitions()) {
    out.criteria.push_back(run_one(def));
    if (on_done) on_done(out.criteria.back());
    first.push_back(to_json(out.criteria.back()));
  }
  for (const auto& def : definitions()) second.push_back(to_json(run_one(def)));
  Criterion det{14, "determinism"};
  const std::string a = first.dump(), b = second.dump();
  std::size_t differ = 0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) differ += (i >= a.size() || i >= b.size() || a[i] != b[i]);
  det.at_most("differing bytes between two serialized runs", static_cast<double>(differ), 0.0);
  out.criteria.push_back(det);
  if (on_done) on_done(det);
  return out;
}

inline std::string summary_line(const Criterion& c) {
  std::string worst;
  for (const Check& k : c.checks) {
    if (!k.pass || worst.empty()) {
      worst = k.name + " = " + io::format_number(k.value) + " (" + k.relation + " " + io::format_number(k.tolerance) + ")";
      if (!k.pass) break;
    }
  }
  if (!c.error.empty()) worst = "error: " + c.error;
  char head[64];
  std::snprintf(head, sizeof head, "criterion %2d %-4s ", c.id, c.pass() ? "PASS" : "FAIL");
  return std::string(head) + c.title + ": " + worst;
}

}  // namespace rlx::verify
