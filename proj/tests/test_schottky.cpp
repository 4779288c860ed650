#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "rlx/schottky.hpp"

using namespace rlx;
using rlx::testing::cfg2;
using rlx::testing::cfg3;

namespace {

// Chordal distance is 2|sin(atan x - atan y)|, so nearest neighbours can be
// found among sorted angles on the circle R/πZ.
double angle(const ExtendedReal& x) { return x.is_infinite() ? std::numbers::pi / 2.0 : std::atan(x.value()); }

double hausdorff(const std::vector<ExtendedReal>& p, const std::vector<ExtendedReal>& q) {
  auto one_side = [](const auto& u, const auto& v) {
    std::vector<double> s;
    for (const auto& y : v) s.push_back(angle(y));
    std::sort(s.begin(), s.end());
    double worst = 0.0;
    for (const auto& x : u) {
      const double a = angle(x);
      const auto it = std::lower_bound(s.begin(), s.end(), a);
      double best = 2.0;
      for (double b : {it == s.end() ? s.front() : *it, it == s.begin() ? s.back() : *(it - 1)}) {
        best = std::min(best, 2.0 * std::abs(std::sin(a - b)));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_side(p, q), one_side(q, p));
}

}  // namespace

TEST(SchottkyConfig, RejectsBadCircles) {
  EXPECT_THROW(SchottkyConfig({{2.0, 1.0}, {2.5, 1.0}}), ValidationError);
  EXPECT_THROW(SchottkyConfig({{1.0, 1.0}}), ValidationError);
  EXPECT_THROW(SchottkyConfig({{1.0, -0.5}}), ValidationError);
  EXPECT_THROW(SchottkyConfig({{4.0, 1.0}, {1.0, 0.5}}), ValidationError);
  try {
    SchottkyConfig({{2.0, 1.0}, {2.5, 1.0}});
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("disjoint"), std::string::npos);
  }
  EXPECT_NO_THROW(SchottkyConfig(std::vector<CircleDatum>{}));
}

TEST(Generators, Formula) {
  const auto g = generators(cfg3());
  ASSERT_EQ(g.size(), 2u);
  EXPECT_TRUE(approx_equal(g[0], MoebiusMap(1.5, 1.0, 1.25, 1.5), 1e-14));
  for (const auto& [c, r] : {std::pair{1.2, 0.8}, {4.1, 1.4}, {2.0, 1.0}}) {
    const auto m = rlx::testing::generator_matrix(c, r);
    const MoebiusMap gen = generators(SchottkyConfig({{c, r}}))[0];
    EXPECT_NEAR(gen.a(), m.a, 1e-14);
    EXPECT_NEAR(gen.b(), m.b, 1e-14);
    EXPECT_NEAR(gen.c(), m.c, 1e-14);
    EXPECT_NEAR(gen.d(), m.d, 1e-14);
    EXPECT_NEAR(gen.determinant(), 1.0, 1e-14);
    // maps the mirror circle's right point -(c-r) to c-r and its left point -(c+r) to c+r
    EXPECT_NEAR(gen.apply(ExtendedReal(-(c - r))).value(), c - r, 1e-12);
    EXPECT_NEAR(gen.apply(ExtendedReal(-(c + r))).value(), c + r, 1e-12);
    EXPECT_NEAR(cocycle_f(gen, -(c - r)), 1.0, 1e-12);
  }
}

TEST(GroupWord, ReductionAndInverse) {
  EXPECT_THROW(GroupWord({0, 1}), ValidationError);
  const GroupWord u({0, 2});
  const GroupWord v({3, 0});
  EXPECT_EQ((u * v).length(), 2u);
  EXPECT_EQ((u * v).to_string(), "aa");
  EXPECT_TRUE((u * u.inverse()).empty());
  const auto cfg = cfg3();
  EXPECT_TRUE(approx_equal(cfg.evaluate(u * v), cfg.evaluate(u) * cfg.evaluate(v), 1e-10));
}

TEST(FundamentalIntervals, Cfg3Pieces) {
  const auto fi = fundamental_intervals(cfg3());
  const auto p1 = fi.pieces(1);
  ASSERT_EQ(p1.size(), 1u);
  EXPECT_NEAR(p1[0].left.value(), -0.4, 1e-15);
  EXPECT_NEAR(p1[0].right.value(), 0.4, 1e-15);
  const auto p2 = fi.pieces(2);
  ASSERT_EQ(p2.size(), 2u);
  EXPECT_NEAR(p2[0].left.value(), -2.7, 1e-15);
  EXPECT_NEAR(p2[0].right.value(), -2.0, 1e-15);
  EXPECT_NEAR(p2[1].left.value(), 2.0, 1e-15);
  EXPECT_NEAR(p2[1].right.value(), 2.7, 1e-15);
  const auto p3 = fi.pieces(3);
  ASSERT_EQ(p3.size(), 1u);
  EXPECT_TRUE(p3[0].wraps);
  EXPECT_NEAR(p3[0].left.value(), 5.5, 1e-15);
  EXPECT_NEAR(p3[0].right.value(), -5.5, 1e-15);
}

TEST(FundamentalIntervals, Cfg2AndTrivial) {
  const auto fi = fundamental_intervals(cfg2());
  EXPECT_NEAR(fi.pieces(1)[0].right.value(), 1.0, 1e-15);
  EXPECT_NEAR(fi.pieces(2)[0].left.value(), 3.0, 1e-15);
  const auto triv = fundamental_intervals(SchottkyConfig(std::vector<CircleDatum>{}));
  EXPECT_EQ(triv.circle_count(), 1);
  EXPECT_TRUE(triv.locate(ExtendedReal(123.0)).has_value());
  EXPECT_TRUE(triv.locate(ExtendedReal::infinity()).has_value());
}

TEST(Locate, Membership) {
  const auto cfg = cfg3();
  EXPECT_EQ(locate(cfg, 0.0)->n, 1);
  EXPECT_EQ(locate(cfg, 2.5)->n, 2);
  EXPECT_EQ(locate(cfg, -2.5)->n, 2);
  EXPECT_EQ(locate(cfg, ExtendedReal::infinity())->n, 3);
  EXPECT_EQ(locate(cfg, -100.0)->n, 3);
  EXPECT_FALSE(locate(cfg, 1.5).has_value());
  EXPECT_FALSE(locate(cfg, -4.0).has_value());
  EXPECT_EQ(locate(cfg, -0.4)->n, 1);
  EXPECT_FALSE(locate(cfg, 0.4).has_value());
  EXPECT_EQ(locate(cfg, 5.5)->n, 3);
  EXPECT_FALSE(locate(cfg, -5.5).has_value());
}

TEST(Locate, CoordinateRoundtrip) {
  const auto cfg = cfg3();
  const auto fi = fundamental_intervals(cfg);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 200; ++k) {
      const double th = u(rng);
      const ExtendedReal x = fi.point_at(n, th);
      const auto loc = fi.locate(x);
      ASSERT_TRUE(loc.has_value()) << "n=" << n << " theta=" << th;
      EXPECT_EQ(loc->n, n);
      EXPECT_NEAR(loc->theta, th, 1e-9);
    }
  }
}

TEST(FundamentalIntervals, PartitionOfComplement) {
  // Every point outside the open disks (c_j - r_j, c_j + r_j) and their
  // mirrors lies in exactly one piece; every point inside lies in none.
  const auto cfg = cfg3();
  const auto fi = fundamental_intervals(cfg);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int k = 0; k < 5000; ++k) {
    const double x = u(rng);
    bool in_disk = false;
    for (const auto& c : cfg.circles()) in_disk |= std::abs(std::abs(x) - c.c) < c.r;
    EXPECT_EQ(fi.locate(x).has_value(), !in_disk) << x;
  }
}

TEST(Enumerate, CountsAndOrder) {
  const auto cfg = cfg3(3);
  EXPECT_EQ(enumerate(cfg, 0).size(), 1u);
  const auto t = enumerate(cfg, 3);
  EXPECT_EQ(t.size(), 53u);
  std::set<std::vector<LetterCode>> seen;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto w = t.word(i);
    seen.insert({w.letters().begin(), w.letters().end()});
    EXPECT_TRUE(approx_equal(t[i].map, cfg.evaluate(w), 1e-12));
    if (i > 0) {
      const auto p = t.word(i - 1);
      EXPECT_TRUE(p.length() < w.length() || (p.length() == w.length() && p < w));
    }
  }
  EXPECT_EQ(seen.size(), 53u);
  EXPECT_DOUBLE_EQ(words_up_to(2, 12), 1.0 + 4.0 * (std::pow(3.0, 12) - 1.0) / 2.0);
}

TEST(Enumerate, CapIsEnforced) {
  const SchottkyConfig cfg({{1.2, 0.8}, {4.1, 1.4}}, 12, 1000);
  EXPECT_THROW(enumerate(cfg, 12), ResourceError);
  EXPECT_THROW(enumerate(cfg, -1), ValidationError);
}

TEST(Enumerate, HyperbolicUpToTen) {
  const auto t = enumerate(cfg3(), 10);
  for (std::size_t i = 1; i < t.size(); ++i) {
    ASSERT_NEAR(t[i].map.determinant(), 1.0, 1e-9);
    ASSERT_GT(std::abs(t[i].map.trace()), 2.0);
  }
}

TEST(Enumerate, FixedPointsAvoidFundamentalSet) {
  const auto cfg = cfg3();
  const auto t = enumerate(cfg, 6);
  const auto fi = fundamental_intervals(cfg);
  for (std::size_t i = 1; i < t.size(); ++i) {
    for (const auto& p : fixed_points(t[i].map)) {
      const auto loc = fi.locate(p);
      if (!loc) continue;
      // a fixed point may only touch a piece at its boundary
      const double th = loc->theta;
      EXPECT_TRUE(th < 1e-6 || th > 2.0 * std::numbers::pi - 1e-6) << t.word(i).to_string();
    }
  }
}

TEST(LimitSet, Samples) {
  EXPECT_TRUE(limit_set_sample(SchottkyConfig(std::vector<CircleDatum>{}), 4).empty());
  const auto s = limit_set_sample(cfg2(), 20);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].value(), std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(s[1].value(), -std::sqrt(3.0), 1e-9);
  const auto cfg = cfg3();
  const auto a = limit_set_sample(cfg, 6);
  const auto b = limit_set_sample(cfg, 8);
  EXPECT_LE(hausdorff(a, b), 0.05);
  const auto fi = fundamental_intervals(cfg);
  for (const auto& p : b) {
    const auto loc = fi.locate(p);
    EXPECT_FALSE(loc.has_value() && loc->theta > 1e-6 && loc->theta < 2.0 * std::numbers::pi - 1e-6);
  }
}

TEST(LimitSet, HausdorffStabilizesAtDepth) {
  const auto cfg = cfg3();
  EXPECT_LE(hausdorff(limit_set_sample(cfg, 10), limit_set_sample(cfg, 12)), 0.05);
}

TEST(QuotientBounds, SingleGenerator) {
  const auto q = quotient_bounds(SchottkyConfig({{1.2, 0.8}}), 1);
  EXPECT_NEAR(q.lower, 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(q.upper, 1.5, 1e-14);
}

TEST(QuotientBounds, Monotone) {
  const auto cfg = cfg3();
  auto prev = quotient_bounds(cfg, 1);
  for (int L = 2; L <= 8; ++L) {
    const auto q = quotient_bounds(cfg, L);
    EXPECT_LE(q.lower, prev.lower);
    EXPECT_GE(q.upper, prev.upper);
    EXPECT_GT(q.lower, 0.0);
    prev = q;
  }
}

TEST(Parallel, ThreadCountDoesNotChangeSums) {
  const auto cfg = cfg3();
  auto run = [&] {
    return reduce_word_branches(cfg, 8, 0.0, [](double& acc, const MoebiusMap& m, int) {
      acc += cocycle_f(m, 0.0);
    });
  };
  setenv("RLX_THREADS", "1", 1);
  const auto one = run();
  setenv("RLX_THREADS", "4", 1);
  const auto four = run();
  unsetenv("RLX_THREADS");
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t b = 0; b < one.size(); ++b) EXPECT_EQ(one[b], four[b]);
}

TEST(PartialSums, QuotientSeriesStabilizes) {
  const auto cfg = cfg3();
  auto total = [&](int L) {
    double s = 0.0;
    visit_words(cfg, L, [&](const MoebiusMap& m, int length, std::span<const LetterCode>) {
      if (length == 0) return;
      for (double e : m.entries()) s += 1.0 / (e * e);
    });
    return s;
  };
  const double s12 = total(12);
  EXPECT_LT(total(14) - s12, 0.1 * s12);
}
