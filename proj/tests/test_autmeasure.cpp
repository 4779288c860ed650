#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "rlx/autmeasure.hpp"
#include "rlx/herglotz.hpp"

using namespace rlx;
using rlx::testing::cfg2;
using rlx::testing::cfg3;
using rlx::testing::Mat;

namespace {

// Second word enumeration: recursion over letter sequences with plain 2×2
// products, summing (1+x²)/‖m w(x)‖² (all generators have determinant 1).
void sum_words(const std::vector<Mat>& letters, const Mat& m, int last, int depth, int L, double x,
               std::vector<double>& per_length) {
  const double u = m.a * x + m.b, v = m.c * x + m.d;
  per_length[static_cast<std::size_t>(depth)] += (1.0 + x * x) / (u * u + v * v);
  if (depth == L) return;
  for (int l = 0; l < static_cast<int>(letters.size()); ++l) {
    if (last >= 0 && (l ^ 1) == last) continue;
    sum_words(letters, rlx::testing::mul(m, letters[static_cast<std::size_t>(l)]), l, depth + 1, L, x, per_length);
  }
}

std::vector<double> oracle_D(const std::vector<std::pair<double, double>>& circles, double x, int L) {
  std::vector<Mat> letters;
  for (const auto& [c, r] : circles) {
    const Mat g = rlx::testing::generator_matrix(c, r);
    letters.push_back(g);
    letters.push_back({g.d, -g.b, -g.c, g.a});
  }
  std::vector<double> per(static_cast<std::size_t>(L) + 1, 0.0);
  sum_words(letters, {1.0, 0.0, 0.0, 1.0}, -1, 0, L, x, per);
  return per;
}

FundamentalMeasure delta0(const SchottkyConfig& cfg) { return place_atoms(cfg, std::vector<Atom>{{0.0, 1.0}}); }

}  // namespace

TEST(Discretize, ConstantDensityMidpoints) {
  const auto cfg = cfg3();
  const auto nu = discretize(cfg, [](int n, const ExtendedReal&) { return n == 1 ? 1.0 : 0.0; }, 4);
  ASSERT_EQ(nu.on(1).size(), 4u);
  EXPECT_TRUE(nu.on(2).empty());
  const double mids[] = {-0.3, -0.1, 0.1, 0.3};
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(nu.on(1)[static_cast<std::size_t>(k)].point.value(), mids[k], 1e-15);
    EXPECT_NEAR(nu.on(1)[static_cast<std::size_t>(k)].weight, 0.2, 1e-15);
  }
  const auto fine = discretize(cfg, [](int, const ExtendedReal&) { return 1.0; }, 8);
  const auto coarse = discretize(cfg, [](int, const ExtendedReal&) { return 1.0; }, 4);
  for (int n = 1; n <= 3; ++n) EXPECT_NEAR(fine.mass(n), coarse.mass(n), 1e-14);
  // the wrapping circle has angular mass π - 2 atan(5.5)
  EXPECT_NEAR(fine.mass(3), std::numbers::pi - 2.0 * std::atan(5.5), 1e-14);
}

TEST(Discretize, SecondOrderForLinearDensity) {
  const auto cfg = cfg3();
  auto density = [](int n, const ExtendedReal& x) { return n == 1 ? std::exp(x.value()) : 0.0; };
  const double exact = std::exp(0.4) - std::exp(-0.4);
  const double e1 = std::abs(discretize(cfg, density, 8).mass(1) - exact);
  const double e2 = std::abs(discretize(cfg, density, 16).mass(1) - exact);
  EXPECT_NEAR(e1 / e2, 4.0, 0.05);
  auto linear = [](int n, const ExtendedReal& x) { return n == 1 ? 1.0 + x.value() : 0.0; };
  EXPECT_NEAR(discretize(cfg, linear, 5).mass(1), 0.8, 1e-14);
  EXPECT_THROW(discretize(cfg, [](int, const ExtendedReal&) { return -1.0; }, 4), ValidationError);
}

TEST(Extend, ContainsGeneratorImage) {
  const auto cfg = cfg3();
  const auto nu = extend(delta0(cfg), cfg, 3);
  EXPECT_EQ(nu.records.size(), 53u);
  EXPECT_NEAR(nu.records[0].point.value(), 0.0, 0.0);
  EXPECT_EQ(nu.records[0].weight, 1.0);
  EXPECT_EQ(nu.word(nu.records[1]).to_string(), "a");
  EXPECT_NEAR(nu.records[1].point.value(), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(nu.records[1].weight, 4.0 / 13.0, 1e-15);
}

TEST(Extend, RestrictRecoversSource) {
  const auto cfg = cfg3();
  const auto nu0 = place_atoms(cfg, std::vector<Atom>{{0.1, 0.5}, {2.3, 0.25}, {-2.1, 0.125}, {9.0, 0.125}});
  const auto r = restrict(extend(nu0, cfg, 6), cfg);
  for (int n = 1; n <= 3; ++n) {
    ASSERT_EQ(r.on(n).size(), nu0.on(n).size());
    for (std::size_t i = 0; i < r.on(n).size(); ++i) {
      EXPECT_EQ(r.on(n)[i].point.value(), nu0.on(n)[i].point.value());
      EXPECT_EQ(r.on(n)[i].weight, nu0.on(n)[i].weight);
    }
  }
}

TEST(Extend, LinearAtomwise) {
  const auto cfg = cfg3();
  const auto a = place_atoms(cfg, std::vector<Atom>{{0.1, 1.0}});
  const auto b = place_atoms(cfg, std::vector<Atom>{{2.3, 1.0}});
  const auto ea = extend(a, cfg, 5), eb = extend(b, cfg, 5);
  const auto ec = extend(combine(a, 0.25, b, 0.75), cfg, 5);
  ASSERT_EQ(ec.records.size(), ea.records.size() + eb.records.size());
  // records are ordered by (word, base atom); base 0 sits on S_1, base 1 on S_2
  for (std::size_t i = 0; i < ea.records.size(); ++i) {
    EXPECT_EQ(ec.records[2 * i].weight, 0.25 * ea.records[i].weight);
    EXPECT_EQ(ec.records[2 * i + 1].weight, 0.75 * eb.records[i].weight);
    EXPECT_EQ(ec.records[2 * i + 1].point.value(), eb.records[i].point.value());
  }
}

TEST(Extend, RefusesSlowTail) {
  // circles nearly touching: the orbit series converges too slowly at L = 3
  const SchottkyConfig tight({{1.0, 0.999}, {2.0005, 0.0009}});
  EXPECT_THROW(extend(place_atoms(tight, std::vector<Atom>{{0.0, 1.0}}), tight, 3), ConvergenceError);
}

TEST(Extend, AtomsAvoidLimitSet) {
  // A depth-ℓ atom shares its depth-ℓ circle with limit points (b⁶·2.3 is
  // 2e-10 from the fixed point of b), so clearance is checked up to length 3.
  const auto cfg = cfg3();
  const auto nu = extend(place_atoms(cfg, std::vector<Atom>{{0.1, 0.5}, {2.3, 0.5}}), cfg, 3);
  std::vector<double> ang;
  for (const auto& p : limit_set_sample(cfg, 12)) ang.push_back(std::atan(p.value()));
  std::sort(ang.begin(), ang.end());
  double closest = 2.0;
  for (const auto& r : nu.records) {
    const double a = std::atan(r.point.value());
    const auto it = std::lower_bound(ang.begin(), ang.end(), a);
    for (double b : {it == ang.end() ? ang.front() : *it, it == ang.begin() ? ang.back() : *(it - 1)}) {
      closest = std::min(closest, 2.0 * std::abs(std::sin(a - b)));
    }
  }
  EXPECT_GE(closest, 1e-6);
}

TEST(Poincare, MatchesIndependentEnumeration) {
  const auto per = oracle_D({{2.0, 1.0}}, 0.0, 14);
  const auto D = poincare_D(cfg2(), 0.0, 14);
  ASSERT_EQ(D.per_length.size(), per.size());
  double total = 0.0;
  for (std::size_t l = 0; l < per.size(); ++l) {
    EXPECT_NEAR(D.per_length[l], per[l], 1e-13 * std::max(1.0, per[l]));
    total += per[l];
  }
  EXPECT_NEAR(D.value, total, 1e-13);
  EXPECT_LT(D.tail.ratio, 0.1);
  const auto per3 = oracle_D({{1.2, 0.8}, {4.1, 1.4}}, 0.1, 9);
  const auto D3 = poincare_D(cfg3(), 0.1, 9);
  for (std::size_t l = 0; l < per3.size(); ++l) EXPECT_NEAR(D3.per_length[l], per3[l], 1e-12);
}

TEST(Poincare, TrivialAndDomain) {
  EXPECT_EQ(poincare_D(SchottkyConfig(std::vector<CircleDatum>{}), 3.0, 5).value, 1.0);
  EXPECT_THROW(poincare_D(cfg2(), std::sqrt(3.0), 8), DomainError);
  EXPECT_GE(poincare_D(cfg3(), 1.5, 6).value, 1.0);
}

TEST(Poincare, GeometricDecayAtZero) {
  const auto D = poincare_D(cfg3(), 0.0, 12);
  for (std::size_t l = 4; l + 1 < D.per_length.size(); ++l) {
    EXPECT_LE(D.per_length[l + 1] / D.per_length[l], 0.9);
  }
}

TEST(Poincare, MassIdentity) {
  const auto cfg = cfg3();
  const std::vector<Atom> atoms{{0.1, 0.5}, {2.3, 0.25}, {ExtendedReal::infinity(), 0.25}};
  const auto nu = extend(place_atoms(cfg, atoms), cfg, 10);
  double expected = 0.0;
  for (const auto& a : atoms) expected += a.weight * poincare_D(cfg, a.point, 10).value;
  EXPECT_NEAR(nu.mass(), expected, 1e-10);
}

TEST(Poincare, ThreadCountInvariant) {
  setenv("RLX_THREADS", "1", 1);
  const auto a = poincare_D(cfg3(), 0.0, 11);
  setenv("RLX_THREADS", "3", 1);
  const auto b = poincare_D(cfg3(), 0.0, 11);
  unsetenv("RLX_THREADS");
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.per_length, b.per_length);
}

TEST(Transform, AnchorAndIdentity) {
  const MoebiusMap G1 = cfg3().generator(0);
  const AtomicMeasure d0{{0.0, 1.0}};
  const auto t = transform(d0, G1.inverse());
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NEAR(t[0].point.value(), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(t[0].weight, 4.0 / 13.0, 1e-15);
  const auto same = transform(d0, MoebiusMap::identity());
  EXPECT_EQ(same[0].weight, 1.0);
}

TEST(Transform, Composes) {
  const auto cfg = cfg3();
  const MoebiusMap g = cfg.generator(0), h = cfg.generator(1).inverse();
  const AtomicMeasure nu{{0.1, 0.3}, {2.5, 0.7}, {ExtendedReal::infinity(), 0.2}};
  const auto lhs = transform(transform(nu, g), h);
  const auto rhs = transform(nu, g * h);
  ASSERT_EQ(lhs.size(), rhs.size());
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    EXPECT_TRUE(lhs[i].point == rhs[i].point);
    EXPECT_NEAR(lhs[i].weight, rhs[i].weight, 1e-10);
  }
}

TEST(Transform, MatchesBoundaryAtomOfComposedFunction) {
  const auto cfg = cfg3();
  const MoebiusMap g = cfg.generator(1) * cfg.generator(0);
  const double x = 0.25, w = 0.8;
  const HerglotzData F = HerglotzData::from_measure(AtomicMeasure{{x, w}});
  const auto t = transform(AtomicMeasure{{x, w}}, g);
  const auto heights = default_heights();
  const auto rec = boundary_recover_atom([&](const Complex& z) { return eval(F, g.apply(z)); }, t[0].point, heights);
  EXPECT_TRUE(rec.converged);
  EXPECT_NEAR(rec.weight, t[0].weight, 1e-8);
}

TEST(Pushforward, ImageMeasure) {
  const auto cfg = cfg3();
  const MoebiusMap g = cfg.generator(0), h = cfg.generator(1);
  const AtomicMeasure nu{{0.1, 0.3}, {2.5, 0.7}};
  const auto p = pushforward(pushforward(nu, h), g);
  const auto q = pushforward(nu, g * h);
  EXPECT_NEAR(total_mass(p), 1.0, 1e-15);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_TRUE(p[i].point == q[i].point);
  EXPECT_NEAR(pushforward(AtomicMeasure{{0.0, 1.0}}, g)[0].point.value(), 2.0 / 3.0, 1e-15);
}

TEST(Automorphy, ExtensionOfDeltaPasses) {
  const auto cfg = cfg3();
  const auto nu = extend(delta0(cfg), cfg, 12);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  std::vector<Arc> arcs;
  for (int k = 0; k < 20; ++k) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    arcs.push_back({a, b});
  }
  for (int j = 0; j < 2; ++j) {
    const auto rep = verify_automorphic(nu, cfg.generator(j), arcs);
    EXPECT_TRUE(rep.pass()) << rep.max_residual();
  }
}

TEST(Automorphy, PerturbationIsDetected) {
  const auto cfg = cfg3();
  auto nu = extend(delta0(cfg), cfg, 10);
  nu.records[0].weight *= 1.01;
  const std::vector<Arc> arcs{{-0.1, 0.1}};
  EXPECT_FALSE(verify_automorphic(nu, cfg.generator(0), arcs).pass());
}

TEST(Automorphy, TrivialGroup) {
  const SchottkyConfig cfg(std::vector<CircleDatum>{});
  const auto nu = extend(place_atoms(cfg, std::vector<Atom>{{0.5, 1.0}}), cfg, 4);
  const std::vector<Arc> arcs{{0.0, 1.0}};
  const auto rep = verify_automorphic(nu, MoebiusMap::identity(), arcs);
  EXPECT_TRUE(rep.pass());
  EXPECT_EQ(rep.max_residual(), 0.0);
}

TEST(Measures, MergeAndValidate) {
  const auto merged = merge_close_atoms({{1.0, 0.5}, {1.0 + 1e-14, 0.25}, {ExtendedReal::infinity(), 0.25}, {1e15, 0.5}});
  EXPECT_EQ(merged.size(), 2u);
  EXPECT_NEAR(total_mass(merged), 1.5, 1e-15);
  const auto cfg = cfg3();
  FundamentalMeasure bad = empty_measure(cfg);
  bad.on(1).push_back({2.5, 1.0});
  EXPECT_THROW(validate(bad, cfg), ValidationError);
  EXPECT_THROW(place_atoms(cfg, std::vector<Atom>{{1.0, 1.0}}), ValidationError);
}
