#pragma once

// JSON and CSV formats: run configs, measures, maps, solutions and reports.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <set>
#include <cstdlib>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "rlx/autmeasure.hpp"
#include "rlx/errors.hpp"
#include "rlx/finitegap.hpp"
#include "rlx/herglotz.hpp"
#include "rlx/moebius.hpp"
#include "rlx/schottky.hpp"

namespace rlx::io {

using Json = nlohmann::json;

/// Shortest text that reads back to the same double; "inf" for ∞.
inline std::string format_number(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string format_number(const ExtendedReal& x) {
  return x.is_infinite() ? "inf" : format_number(x.value());
}

inline Json to_json(const ExtendedReal& x) { return x.is_infinite() ? Json("inf") : Json(x.value()); }

inline ExtendedReal extended_from_json(const Json& j, const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "inf") return ExtendedReal::infinity();
  if (j.is_number()) return ExtendedReal(j.get<double>());
  throw ValidationError(where + ": expected a number or \"inf\"");
}

inline Json to_json(const MoebiusMap& g) { return Json::array({g.a(), g.b(), g.c(), g.d()}); }

inline MoebiusMap map_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw ValidationError("map: expected [a, b, c, d]");
  for (const auto& e : j) {
    if (!e.is_number()) throw ValidationError("map: entries must be numbers");
  }
  return MoebiusMap(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

/// FNV-1a over the canonical (key-sorted, compact) dump.
inline std::string config_hash(const Json& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

// ---------------------------------------------------------------------------
// Run config

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{"circles", "max_word_length", "element_cap", "seed",      "measure",
                                          "points",  "limit_set_depth", "gaps",        "divisor",   "hfun",
                                          "balance"};
  return keys;
}

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  return j.get<double>();
}

inline long long integer(const Json& j, const std::string& where, long long lo, long long hi) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > hi) {
    throw ValidationError(where + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

inline void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* allowed : keys) ok = ok || k == allowed;
    if (!ok) throw ValidationError(where + ": unknown key \"" + k + "\"");
  }
}

}  // namespace detail

/// Structural checks matching schemas/config.schema.json. Mathematical
/// invariants (disjoint circles, atoms in the fundamental set, ...) are left to
/// the library constructors.
inline void check_config(const Json& j) {
  using namespace detail;
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!config_keys().contains(k)) throw ValidationError("config: unknown key \"" + k + "\"");
  }
  if (j.contains("circles")) {
    if (!j["circles"].is_array()) throw ValidationError("circles: expected an array");
    for (std::size_t i = 0; i < j["circles"].size(); ++i) {
      const std::string where = "circles[" + std::to_string(i) + "]";
      const Json& c = j["circles"][i];
      only_keys(c, {"c", "r"}, where);
      number(require(c, "c", where), where + ".c");
      if (!(number(require(c, "r", where), where + ".r") > 0.0)) throw ValidationError(where + ".r: must be positive");
    }
  }
  if (j.contains("max_word_length")) integer(j["max_word_length"], "max_word_length", 0, 24);
  if (j.contains("element_cap")) integer(j["element_cap"], "element_cap", 1, 1'000'000'000);
  if (j.contains("seed")) integer(j["seed"], "seed", 0, 9'007'199'254'740'991LL);
  if (j.contains("limit_set_depth")) integer(j["limit_set_depth"], "limit_set_depth", 1, 16);
  if (j.contains("balance") && !j["balance"].is_boolean()) throw ValidationError("balance: expected a boolean");
  if (j.contains("measure")) {
    only_keys(j["measure"], {"atoms"}, "measure");
    const Json& atoms = require(j["measure"], "atoms", "measure");
    if (!atoms.is_array()) throw ValidationError("measure.atoms: expected an array");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string where = "measure.atoms[" + std::to_string(i) + "]";
      only_keys(atoms[i], {"n", "point", "weight"}, where);
      if (atoms[i].contains("n")) integer(atoms[i]["n"], where + ".n", 1, 1'000'000);
      extended_from_json(require(atoms[i], "point", where), where + ".point");
      if (!(number(require(atoms[i], "weight", where), where + ".weight") > 0.0)) {
        throw ValidationError(where + ".weight: must be positive");
      }
    }
  }
  if (j.contains("points")) {
    if (!j["points"].is_array() || j["points"].empty()) throw ValidationError("points: expected a non-empty array");
    for (std::size_t i = 0; i < j["points"].size(); ++i) {
      extended_from_json(j["points"][i], "points[" + std::to_string(i) + "]");
    }
  }
  if (j.contains("gaps")) {
    if (!j["gaps"].is_array()) throw ValidationError("gaps: expected an array");
    for (std::size_t i = 0; i < j["gaps"].size(); ++i) {
      const Json& g = j["gaps"][i];
      const std::string where = "gaps[" + std::to_string(i) + "]";
      if (!g.is_array() || g.size() != 2) throw ValidationError(where + ": expected [a, b]");
      number(g[0], where);
      number(g[1], where);
    }
  }
  if (j.contains("divisor")) {
    if (!j["divisor"].is_array()) throw ValidationError("divisor: expected an array");
    for (std::size_t i = 0; i < j["divisor"].size(); ++i) {
      const std::string where = "divisor[" + std::to_string(i) + "]";
      only_keys(j["divisor"][i], {"mu", "sigma"}, where);
      number(require(j["divisor"][i], "mu", where), where + ".mu");
      if (j["divisor"][i].contains("sigma")) {
        const long long s = integer(j["divisor"][i]["sigma"], where + ".sigma", -1, 1);
        if (s == 0) throw ValidationError(where + ".sigma: must be +1 or -1");
      }
    }
  }
  if (j.contains("hfun")) {
    only_keys(j["hfun"], {"epsilon", "grid"}, "hfun");
    if (j["hfun"].contains("epsilon")) number(j["hfun"]["epsilon"], "hfun.epsilon");
    if (j["hfun"].contains("grid")) {
      const Json& g = j["hfun"]["grid"];
      only_keys(g, {"lo", "hi", "count"}, "hfun.grid");
      number(require(g, "lo", "hfun.grid"), "hfun.grid.lo");
      number(require(g, "hi", "hfun.grid"), "hfun.grid.hi");
      integer(require(g, "count", "hfun.grid"), "hfun.grid.count", 1, 1'000'000);
    }
  }
}

/// Fills defaults so that the hash covers the effective configuration.
inline Json with_defaults(Json j) {
  check_config(j);
  if (!j.contains("circles")) j["circles"] = Json::array();
  if (!j.contains("max_word_length")) j["max_word_length"] = kDefaultWordLength;
  if (!j.contains("element_cap")) j["element_cap"] = kDefaultElementCap;
  if (!j.contains("seed")) j["seed"] = 0;
  return j;
}

inline SchottkyConfig schottky_from_json(const Json& j) {
  std::vector<CircleDatum> circles;
  if (j.contains("circles")) {
    for (const auto& c : j["circles"]) circles.push_back({c.at("c").get<double>(), c.at("r").get<double>()});
  }
  const int L = j.value("max_word_length", kDefaultWordLength);
  const auto cap = j.value("element_cap", static_cast<std::size_t>(kDefaultElementCap));
  return SchottkyConfig(std::move(circles), L, cap);
}

inline Json schottky_to_json(const SchottkyConfig& config) {
  Json circles = Json::array();
  for (const auto& [c, r] : config.circles()) circles.push_back({{"c", c}, {"r", r}});
  return {{"circles", circles}, {"max_word_length", config.max_word_length()}, {"element_cap", config.element_cap()}};
}

/// Atoms go to the circle containing them; an explicit "n" must agree.
inline FundamentalMeasure measure_from_json(const Json& j, const SchottkyConfig& config) {
  if (!j.is_object() || !j.contains("atoms")) throw ValidationError("measure: expected {\"atoms\": [...]}");
  const FundamentalIntervals fi(config);
  FundamentalMeasure nu = empty_measure(config);
  for (std::size_t i = 0; i < j["atoms"].size(); ++i) {
    const Json& a = j["atoms"][i];
    const std::string where = "measure.atoms[" + std::to_string(i) + "]";
    const ExtendedReal p = extended_from_json(a.at("point"), where + ".point");
    const auto loc = fi.locate(p);
    if (!loc) throw ValidationError(where + ": point is not in the fundamental set");
    if (a.contains("n") && a["n"].get<int>() != loc->n) {
      throw ValidationError(where + ": point lies in S_" + std::to_string(loc->n) + ", not S_" +
                            std::to_string(a["n"].get<int>()));
    }
    nu.on(loc->n).push_back({p, a.at("weight").get<double>()});
  }
  validate(nu, config);
  return nu;
}

inline Json measure_to_json(const FundamentalMeasure& nu) {
  Json atoms = Json::array();
  for (int n = 1; n <= nu.circle_count(); ++n) {
    for (const Atom& a : nu.on(n)) atoms.push_back({{"n", n}, {"point", to_json(a.point)}, {"weight", a.weight}});
  }
  return {{"atoms", atoms}};
}

inline Json atoms_to_json(std::span<const Atom> atoms) {
  Json out = Json::array();
  for (const Atom& a : atoms) out.push_back({{"point", to_json(a.point)}, {"weight", a.weight}});
  return out;
}

inline Json herglotz_to_json(const HerglotzData& F) {
  return {{"a", F.a}, {"atoms", atoms_to_json(F.atoms)}, {"atom_at_inf", F.atom_at_inf}};
}

inline HerglotzData herglotz_from_json(const Json& j) {
  AtomicMeasure atoms;
  for (std::size_t i = 0; i < j.at("atoms").size(); ++i) {
    const Json& a = j["atoms"][i];
    atoms.push_back({extended_from_json(a.at("point"), "atoms[" + std::to_string(i) + "]"), a.at("weight").get<double>()});
  }
  if (j.contains("atom_at_inf") && j["atom_at_inf"].get<double>() > 0.0) {
    atoms.push_back({ExtendedReal::infinity(), j["atom_at_inf"].get<double>()});
  }
  return HerglotzData::from_measure(atoms, j.value("a", 0.0));
}

/// {"c": [...], "residual": r, "uniqueness_gap": s}; an infinite gap (N = 1,
/// empty matrix) is written as null.
inline Json solution_to_json(const WeightSolution& s) {
  Json gap = std::isfinite(s.uniqueness_gap) ? Json(s.uniqueness_gap) : Json(nullptr);
  return {{"c", s.c}, {"residual", s.residual}, {"uniqueness_gap", gap}, {"sigma_max", s.sigma_max}};
}

inline Json matrix_to_json(const Eigen::MatrixXd& A) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < A.cols(); ++k) row.push_back(A(i, k));
    rows.push_back(row);
  }
  return rows;
}

inline GapSet gaps_from_json(const Json& j) {
  std::vector<Gap> gaps;
  for (const auto& g : j) gaps.push_back({g.at(0).get<double>(), g.at(1).get<double>()});
  return GapSet(std::move(gaps));
}

inline Divisor divisor_from_json(const Json& j, const GapSet& gaps) {
  std::vector<DivisorPoint> pts;
  for (const auto& p : j) pts.push_back({p.at("mu").get<double>(), p.value("sigma", 1)});
  return Divisor(gaps, std::move(pts));
}

inline Json divisor_to_json(const Divisor& d) {
  Json out = Json::array();
  for (const auto& p : d.points()) out.push_back({{"mu", p.mu}, {"sigma", p.sigma}});
  return out;
}

// ---------------------------------------------------------------------------
// CSV

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  template <class... T>
  void row(const T&... cells) {
    std::vector<std::string> v{cell(cells)...};
    if (v.size() != columns_) throw ValidationError("csv: wrong number of cells");
    row_strings(v);
  }

  [[nodiscard]] const std::string& str() const noexcept { return text_; }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(const ExtendedReal& v) { return format_number(v); }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) { return std::to_string(v); }

  void row_strings(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) text_ += ',';
      text_ += v[i];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

inline std::string intervals_csv(const SchottkyConfig& config) {
  Csv csv({"n", "piece_index", "left", "right"});
  for (const auto& p : fundamental_intervals(config).all_pieces()) csv.row(p.n, p.index, p.left, p.right);
  return csv.str();
}

inline std::string limit_set_csv(std::span<const ExtendedReal> points) {
  Csv csv({"point"});
  for (const auto& p : points) csv.row(p);
  return csv.str();
}

inline std::string extension_csv(const AutomorphicAtoms& nu) {
  Csv csv({"word", "point", "weight"});
  for (const auto& r : nu.records) csv.row(nu.word(r).to_string(), r.point, r.weight);
  return csv.str();
}

inline Json extension_header(const AutomorphicAtoms& nu) {
  return {{"L", nu.L}, {"tail_ratio", nu.tail_ratio}, {"tail_mass", nu.tail_mass}};
}

inline std::string krein_csv(const KreinReport& rep) {
  Csv csv({"t", "re_h", "im_h", "xi_pred", "xi_meas"});
  for (const auto& r : rep.rows) csv.row(r.t, r.h.real(), r.h.imag(), r.xi_pred, r.xi_meas);
  return csv.str();
}

}  // namespace rlx::io
