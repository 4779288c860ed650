#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "rlx/rlx.hpp"

using namespace rlx;
using io::Json;

TEST(Numbers, ShortestRoundtrip) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(-2.0), "-2");
  EXPECT_EQ(io::format_number(ExtendedReal::infinity()), "inf");
  for (double v : {1.0 / 3.0, 4.0 / 85.0, 1e-300, 6.02214076e23, -0.0}) {
    EXPECT_EQ(std::strtod(io::format_number(v).c_str(), nullptr), v);
  }
}

TEST(Json, ExtendedRealAndMap) {
  EXPECT_TRUE(io::extended_from_json(Json("inf"), "x").is_infinite());
  EXPECT_EQ(io::extended_from_json(Json(0.5), "x").value(), 0.5);
  EXPECT_THROW(io::extended_from_json(Json("oo"), "x"), ValidationError);
  const MoebiusMap g(-4.0, -6.0, -2.0, -4.0);
  EXPECT_EQ(io::to_json(g), Json::parse("[2.0, 3.0, 1.0, 2.0]"));
  EXPECT_TRUE(approx_equal(io::map_from_json(io::to_json(g)), g, 0.0));
  EXPECT_THROW(io::map_from_json(Json::parse("[1, 2, 3]")), ValidationError);
}

TEST(Config, HashIsCanonical) {
  const Json a = Json::parse(R"({"circles": [{"c": 2, "r": 1}], "seed": 3})");
  const Json b = Json::parse(R"({"seed": 3, "circles": [{"r": 1, "c": 2}]})");
  const Json c = Json::parse(R"({"seed": 4, "circles": [{"r": 1, "c": 2}]})");
  EXPECT_EQ(io::config_hash(a), io::config_hash(b));
  EXPECT_NE(io::config_hash(a), io::config_hash(c));
  EXPECT_EQ(io::config_hash(a).size(), 16u);
  // FNV-1a reference value for the empty object "{}"
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : std::string("{}")) h = (h ^ ch) * 1099511628211ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  EXPECT_EQ(io::config_hash(Json::object()), buf);
}

TEST(Config, DefaultsAndSchottky) {
  const Json j = io::with_defaults(Json::parse(R"({"circles": [{"c": 1.2, "r": 0.8}, {"c": 4.1, "r": 1.4}]})"));
  EXPECT_EQ(j["max_word_length"], 12);
  EXPECT_EQ(j["seed"], 0);
  const auto cfg = io::schottky_from_json(j);
  EXPECT_EQ(cfg.circle_count(), 3);
  EXPECT_EQ(io::schottky_to_json(cfg)["circles"], j["circles"]);
  EXPECT_EQ(io::schottky_from_json(Json::object()).circle_count(), 1);
}

TEST(Config, StructuralErrors) {
  for (const char* bad : {R"([])", R"({"circle": []})", R"({"circles": [{"c": 1}]})",
                          R"({"circles": [{"c": 1, "r": -1}]})", R"({"max_word_length": 2.5})",
                          R"({"max_word_length": 40})", R"({"measure": {"atoms": [{"point": "x", "weight": 1}]}})",
                          R"({"measure": {"atoms": [{"point": 0, "weight": 0}]}})", R"({"divisor": [{"mu": 0, "sigma": 0}]})",
                          R"({"gaps": [[0]]})", R"({"hfun": {"grid": {"lo": 0, "hi": 1}}})", R"({"points": []})"}) {
    EXPECT_THROW(io::check_config(Json::parse(bad)), ValidationError) << bad;
  }
}

TEST(Config, OverlappingCirclesNameTheInvariant) {
  const Json j = Json::parse(R"({"circles": [{"c": 2, "r": 1}, {"c": 2.5, "r": 1}]})");
  io::check_config(j);
  try {
    io::schottky_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("disjoint"), std::string::npos);
  }
}

TEST(Measure, Roundtrip) {
  const auto cfg = rlx::testing::cfg3();
  const Json j = Json::parse(R"({"atoms": [{"point": 0.1, "weight": 0.5}, {"n": 3, "point": "inf", "weight": 2},
                                           {"point": 2.3, "weight": 1}]})");
  const auto nu = io::measure_from_json(j, cfg);
  EXPECT_EQ(nu.on(1).size(), 1u);
  EXPECT_EQ(nu.on(2).size(), 1u);
  EXPECT_TRUE(nu.on(3)[0].point.is_infinite());
  const auto back = io::measure_from_json(io::measure_to_json(nu), cfg);
  for (int n = 1; n <= 3; ++n) {
    EXPECT_TRUE(back.on(n)[0].point == nu.on(n)[0].point);
    EXPECT_EQ(back.on(n)[0].weight, nu.on(n)[0].weight);
  }
  EXPECT_THROW(io::measure_from_json(Json::parse(R"({"atoms": [{"n": 2, "point": 0.1, "weight": 1}]})"), cfg),
               ValidationError);
  EXPECT_THROW(io::measure_from_json(Json::parse(R"({"atoms": [{"point": 1.5, "weight": 1}]})"), cfg),
               ValidationError);
}

TEST(Herglotz, JsonFormat) {
  const auto F = HerglotzData::from_measure(AtomicMeasure{{0.0, 1.0}, {ExtendedReal::infinity(), 0.25}});
  const Json j = io::herglotz_to_json(F);
  EXPECT_EQ(j, Json::parse(R"({"a": 0.0, "atoms": [{"point": 0.0, "weight": 1.0}], "atom_at_inf": 0.25})"));
  const auto G = io::herglotz_from_json(j);
  EXPECT_EQ(eval(G, Complex(0.3, 0.4)), eval(F, Complex(0.3, 0.4)));
}

TEST(Solution, JsonFormat) {
  WeightSolution s;
  s.c = {1.0};
  const Json j = io::solution_to_json(s);
  EXPECT_TRUE(j["uniqueness_gap"].is_null());
  EXPECT_EQ(j["c"], Json::parse("[1.0]"));
}

TEST(FiniteGap, JsonAndCsv) {
  const Json j = Json::parse(R"({"gaps": [[-1, 1]], "divisor": [{"mu": 0.0, "sigma": 1}]})");
  io::check_config(j);
  const GapSet gs = io::gaps_from_json(j["gaps"]);
  const Divisor d = io::divisor_from_json(j["divisor"], gs);
  EXPECT_EQ(io::divisor_to_json(d), j["divisor"]);
  const auto rep = krein_check(gs, d, std::vector<double>{-2.0, 0.5}, 1e-6);
  const std::string csv = io::krein_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,re_h,im_h,xi_pred,xi_meas");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Csv, Tables) {
  const auto cfg = rlx::testing::cfg2();
  EXPECT_EQ(io::intervals_csv(cfg), "n,piece_index,left,right\n1,0,-1,1\n2,0,3,-3\n");
  const auto nu = extend(place_atoms(cfg, std::vector<Atom>{{0.0, 1.0}}), cfg, 1);
  const std::string csv = io::extension_csv(nu);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "word,point,weight");
  EXPECT_NE(csv.find("e,0,1\n"), std::string::npos);
  EXPECT_NE(csv.find("a,1.5,0.07692307692307693\n"), std::string::npos);
  EXPECT_NE(csv.find("A,-1.5,0.07692307692307693\n"), std::string::npos);
  io::Csv bad({"x", "y"});
  EXPECT_THROW(bad.row(1.0), ValidationError);
}
