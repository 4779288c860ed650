#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rlx/rlx.hpp"
#include "verify_suite.hpp"

namespace fs = std::filesystem;
using namespace rlx;
using io::Json;
using verify::Criterion;

namespace {

struct Options {
  std::string config;
  std::string out;
  bool quiet = false;
  bool timing = false;
};

/// Checks, results and provenance of one subcommand run.
class Report {
 public:
  explicit Report(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  Criterion checks;  // reused for its check helpers
  Json results = Json::object();
  std::vector<std::string> files;
  std::optional<double> tail_ratio;

  [[nodiscard]] bool pass() const {
    return std::all_of(checks.checks.begin(), checks.checks.end(), [](const auto& c) { return c.pass; });
  }

  [[nodiscard]] Json to_json(const Json& config, const std::string& hash, const Json* error,
                             std::optional<double> seconds) const {
    Json cs = Json::array();
    for (const auto& k : checks.checks) {
      cs.push_back({{"name", k.name}, {"value", k.value}, {"relation", k.relation}, {"tolerance", k.tolerance},
                    {"pass", k.pass}});
    }
    Json prov{{"config_hash", hash},
              {"L", config.value("max_word_length", kDefaultWordLength)},
              {"seed", config.value("seed", 0)},
              {"tail_ratio", tail_ratio ? Json(*tail_ratio) : Json(nullptr)}};
    if (seconds) prov["wall_time_s"] = *seconds;
    Json out{{"subcommand", subcommand_},
             {"status", error ? "error" : (pass() ? "pass" : "fail")},
             {"checks", cs},
             {"results", results},
             {"files", files},
             {"provenance", prov}};
    if (error) out["error"] = *error;
    return out;
  }

 private:
  std::string subcommand_;
};

struct Context {
  Json config;
  SchottkyConfig schottky;
  fs::path out;
  bool quiet = false;
  Report* report = nullptr;

  void write(const std::string& name, const std::string& text) const {
    std::ofstream f(out / name, std::ios::binary);
    f << text;
    if (!f) throw ValidationError("cannot write " + (out / name).string());
    report->files.push_back(name);
  }

  [[nodiscard]] FundamentalMeasure measure() const {
    if (!config.contains("measure")) throw ValidationError("config: this subcommand needs \"measure\"");
    return io::measure_from_json(config["measure"], schottky);
  }

  [[nodiscard]] int L() const { return schottky.max_word_length(); }
  [[nodiscard]] std::uint64_t seed() const { return config.value("seed", std::uint64_t{0}); }
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read config " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

void run_group(Context& cx) {
  Report& r = *cx.report;
  const auto& cfg = cx.schottky;
  Json gens = Json::array();
  double det = 0.0, fix = 0.0, dx = 0.0, trace = INFINITY;
  for (int j = 0; j < cfg.generator_count(); ++j) {
    const MoebiusMap& g = cfg.generator(j);
    const auto [c, rad] = cfg.circles()[static_cast<std::size_t>(j)];
    gens.push_back({{"map", io::to_json(g)}, {"type", to_string(classify(g))}});
    det = std::max(det, std::abs(g.determinant() - 1.0));
    trace = std::min(trace, std::abs(g.trace()));
    fix = std::max(fix, std::abs(cocycle_f(g, -(c - rad)) - 1.0));
    dx = std::max(dx, std::abs(g.apply(ExtendedReal(-(c - rad))).value() - (c - rad)));
  }
  r.results["generators"] = gens;
  r.results["circle_count"] = cfg.circle_count();
  const int depth = cx.config.value("limit_set_depth", std::min(cx.L(), 8));
  const auto limit = cfg.generator_count() > 0 ? limit_set_sample(cfg, depth) : std::vector<ExtendedReal>{};
  r.results["limit_set_depth"] = depth;
  r.results["limit_set_points"] = limit.size();
  cx.write("intervals.csv", io::intervals_csv(cfg));
  cx.write("limit_set.csv", io::limit_set_csv(limit));
  if (cfg.generator_count() > 0) {
    r.checks.at_most("max |det - 1| over generators", det, kDeterminantTolerance);
    r.checks.above("min |trace| over generators", trace, 2.0);
    r.checks.at_most("max |f(g; -(c-r)) - 1|", fix, 1e-12);
    r.checks.at_most("max |g(-(c-r)) - (c-r)|", dx, 1e-12);
  }
}

void run_extend(Context& cx) {
  Report& r = *cx.report;
  const auto nu0 = cx.measure();
  const auto nu = extend(nu0, cx.schottky, cx.L());
  r.tail_ratio = nu.tail_ratio;
  r.results["header"] = io::extension_header(nu);
  r.results["records"] = nu.records.size();
  r.results["mass"] = nu.mass();
  r.results["per_length"] = nu.per_length;
  cx.write("extension.csv", io::extension_csv(nu));
  r.checks.at_most("tail ratio", nu.tail_ratio, kMaxTailRatio);
  r.checks.at_most("max atomwise |restrict(extend(nu)) - nu|",
                   verify::detail::max_atomwise(restrict(nu, cx.schottky), nu0), 1e-12);
  if (cx.schottky.generator_count() > 0) {
    std::mt19937_64 rng(cx.seed());
    std::vector<Arc> arcs;
    for (int k = 0; k < 20; ++k) arcs.push_back(verify::detail::random_arc(rng, cx.schottky));
    for (int j = 0; j < cx.schottky.generator_count(); ++j) {
      const auto rep = verify_automorphic(nu, cx.schottky.generator(j), arcs);
      r.checks.at_most("automorphy residual on 20 arcs, generator " + std::to_string(j + 1), rep.max_residual(),
                       rep.tolerance);
    }
  }
}

void run_poincare(Context& cx) {
  Report& r = *cx.report;
  if (!cx.config.contains("points")) throw ValidationError("config: poincare needs \"points\"");
  io::Csv csv({"x", "D", "tail_ratio", "tail_mass"});
  Json rows = Json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < cx.config["points"].size(); ++i) {
    const ExtendedReal x = io::extended_from_json(cx.config["points"][i], "points[" + std::to_string(i) + "]");
    const auto d = poincare_D(cx.schottky, x, cx.L());
    csv.row(x, d.value, d.tail.ratio, d.tail.mass);
    rows.push_back({{"x", io::to_json(x)}, {"D", d.value}, {"tail_ratio", d.tail.ratio}, {"tail_mass", d.tail.mass},
                    {"per_length", d.per_length}});
    worst = std::max(worst, d.tail.ratio);
  }
  r.tail_ratio = worst;
  r.results["points"] = rows;
  cx.write("poincare.csv", csv.str());
  r.checks.at_most("max tail ratio", worst, kMaxTailRatio);
}

void run_periods(Context& cx) {
  Report& r = *cx.report;
  const auto pm = period_matrix(cx.schottky, cx.measure(), cx.L());
  r.tail_ratio = pm.tail_ratio;
  r.results["A"] = io::matrix_to_json(pm.A);
  r.results["column_mass"] = pm.column_mass;
  r.results["tail_mass"] = pm.tail_mass;
  r.checks.at_most("max column tail ratio", pm.tail_ratio, kMaxTailRatio);
}

void run_solve(Context& cx) {
  Report& r = *cx.report;
  const auto nu = cx.measure();
  const auto pm = period_matrix(cx.schottky, nu, cx.L());
  r.tail_ratio = pm.tail_ratio;
  const auto bal = balance(cx.schottky, nu, cx.L());
  const auto& sol = bal.solution;
  r.results["solution"] = io::solution_to_json(sol);
  r.results["A"] = io::matrix_to_json(pm.A);
  r.results["balanced_measure"] = io::measure_to_json(bal.measure);
  double sum = 0.0, min_c = INFINITY;
  for (double c : sol.c) {
    sum += c;
    min_c = std::min(min_c, c);
  }
  r.checks.above("min c_n", min_c, 0.0);
  r.checks.at_most("|sum c - 1|", std::abs(sum - 1.0), 1e-12);
  if (pm.A.size() > 0) {
    r.checks.at_most("||Ac|| / ||A||", sol.residual / pm.A.norm(), 1e-8);
    r.checks.at_least("uniqueness_gap / sigma_max", sol.uniqueness_gap / sol.sigma_max, kKernelThreshold);
  }
}

void run_hfun(Context& cx) {
  Report& r = *cx.report;
  if (!cx.config.contains("gaps") || !cx.config.contains("divisor")) {
    throw ValidationError("config: hfun needs \"gaps\" and \"divisor\"");
  }
  const GapSet gaps = io::gaps_from_json(cx.config["gaps"]);
  if (gaps.size() == 0) throw ValidationError("gaps: need at least one gap");
  const Divisor div = io::divisor_from_json(cx.config["divisor"], gaps);
  const std::vector<double> mus = div.mus();
  const Json h = cx.config.value("hfun", Json::object());
  const double eps = h.value("epsilon", 1e-6);
  const double lo = gaps[0].a - 2.0, hi = gaps[gaps.size() - 1].b + 2.0;
  const Json grid = h.value("grid", Json{{"lo", lo}, {"hi", hi}, {"count", 200}});
  const auto rep = krein_check(gaps, div, krein_grid(gaps, div, grid["lo"], grid["hi"], grid["count"]), eps);
  cx.write("hgrid.csv", io::krein_csv(rep));

  Json res = Json::array();
  for (std::size_t n = 0; n < gaps.size(); ++n) {
    const auto rs = residue(gaps, mus, n);
    res.push_back({{"n", n + 1},
                   {"mu", mus[n]},
                   {"value", rs.value},
                   {"inverse_sqrt", rs.inverse_sqrt},
                   {"converged", rs.converged},
                   {"atom", to_string(assign_atom(gaps, div, n))}});
  }
  double im = 0.0, re = 0.0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 1; j <= 100; ++j) im = std::min(im, eval_h(gaps, mus, Complex(lo + (hi - lo) * i / 99.0, 0.04 * j)).imag());
  }
  std::vector<std::pair<double, double>> bands{{lo, gaps[0].a}};
  for (std::size_t n = 0; n + 1 < gaps.size(); ++n) bands.emplace_back(gaps[n].b, gaps[n + 1].a);
  bands.emplace_back(gaps[gaps.size() - 1].b, hi);
  for (const auto& [l, rr] : bands) {
    for (int k = 1; k < 50; ++k) {
      const double t = l + (rr - l) * k / 50.0;
      if (std::min(t - l, rr - t) >= kKreinExclusion) re = std::max(re, std::abs(eval_h(gaps, mus, Complex(t, eps)).real()));
    }
  }
  const Complex far = eval_h(gaps, mus, Complex(0.0, 1e4));
  r.results["divisor"] = io::divisor_to_json(div);
  r.results["torus"] = torus_coords(div, gaps);
  r.results["residues"] = res;
  r.results["h_at_1e4i"] = {far.real(), far.imag()};
  r.results["epsilon"] = eps;
  r.results["krein_max_deviation"] = rep.max_deviation;
  r.checks.at_most("krein deviation", rep.max_deviation, 1e-3);
  r.checks.at_least("min Im h on the 100x100 grid", im, -1e-12);
  r.checks.at_most("max |Re h| on U", re, 1e-3);
  r.checks.at_most("|h(1e4 i) - 2i|", std::abs(far - Complex(0.0, 2.0)), 1e-3);
  int unconverged = 0;
  for (const auto& x : res) unconverged += x["converged"].get<bool>() ? 0 : 1;
  r.checks.at_most("residues flagged as unconverged", unconverged, 0.0);
}

void run_extreme(Context& cx) {
  Report& r = *cx.report;
  auto nu = cx.measure();
  if (cx.config.value("balance", false)) nu = balance(cx.schottky, nu, cx.L()).measure;
  const bool extreme = is_extreme(nu);
  const auto norm = to_normalized(nu);
  Json normalized = Json::array();
  for (int n = 1; n <= nu.circle_count(); ++n) {
    normalized.push_back({{"n", n}, {"mass", nu.mass(n)}, {"atoms", io::atoms_to_json(norm[static_cast<std::size_t>(n - 1)])}});
  }
  const auto mem = membership_X(cx.schottky, nu, cx.L());
  r.results["measure"] = io::measure_to_json(nu);
  r.results["is_extreme"] = extreme;
  r.results["normalized"] = normalized;
  r.results["membership"] = {{"member", mem.member},
                             {"mass_residual", mem.mass_residual},
                             {"gamma_residual", mem.gamma_residual},
                             {"gamma_tolerance", mem.gamma_tolerance}};
  r.checks.at_most("membership: mass residual", mem.mass_residual, kMassTolerance);
  r.checks.at_most("membership: gamma residual", mem.gamma_residual, mem.gamma_tolerance);
  if (!mem.member) return;
  r.checks.at_most("max atomwise |from_normalized(to_normalized(nu)) - nu|",
                   verify::detail::max_atomwise(from_normalized(norm, cx.schottky, cx.L()), nu), 1e-8);
  if (extreme) return;
  const auto sp = split_nonextreme(nu, cx.schottky, cx.L());
  r.results["split"] = {{"circle", sp.split_circle},
                        {"mu", io::measure_to_json(sp.mu)},
                        {"mu_weight", sp.mu_weight},
                        {"rho", io::measure_to_json(sp.rho)},
                        {"rho_weight", sp.rho_weight}};
  r.checks.at_most("max atomwise |recombined - nu|",
                   verify::detail::max_atomwise(combine(sp.mu, sp.mu_weight, sp.rho, sp.rho_weight), nu), 1e-8);
  for (const auto& [name, m] : {std::pair{"mu", &sp.mu}, std::pair{"rho", &sp.rho}}) {
    const auto x = membership_X(cx.schottky, *m, cx.L());
    r.checks.at_most(std::string(name) + " in X: mass residual", x.mass_residual, kMassTolerance);
    r.checks.at_most(std::string(name) + " in X: gamma residual", x.gamma_residual, x.gamma_tolerance);
  }
}

void run_verify(Context& cx) {
  Report& r = *cx.report;
  const auto suite = verify::run_suite([&](const Criterion& c) {
    if (!cx.quiet) std::fprintf(stderr, "%s\n", verify::summary_line(c).c_str());
  });
  Json criteria = Json::array();
  for (const auto& c : suite.criteria) {
    criteria.push_back(verify::to_json(c));
    for (const auto& k : c.checks) {
      r.checks.checks.push_back(k);
      r.checks.checks.back().name = std::to_string(c.id) + ". " + c.title + ": " + k.name;
    }
    if (!c.error.empty()) r.checks.at_most(std::to_string(c.id) + ". " + c.title + ": raised an error", 1.0, 0.0);
  }
  r.results["criteria"] = criteria;
}

// ---------------------------------------------------------------------------

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

int run(const std::string& sub, const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  Report report(sub);
  Json config = Json::object();
  std::string hash = io::config_hash(config);
  std::optional<Failure> failure;
  fs::path out(opt.out);
  try {
    fs::create_directories(out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rlx: cannot create output directory %s: %s\n", opt.out.c_str(), e.what());
    return 1;
  }
  try {
    Json raw;
    try {
      raw = Json::parse(read_file(opt.config));
    } catch (const Json::parse_error& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    config = io::with_defaults(raw);
    hash = io::config_hash(config);
    Context cx{config, io::schottky_from_json(config), out, opt.quiet, &report};
    if (sub == "group") run_group(cx);
    else if (sub == "extend") run_extend(cx);
    else if (sub == "poincare") run_poincare(cx);
    else if (sub == "periods") run_periods(cx);
    else if (sub == "solve") run_solve(cx);
    else if (sub == "hfun") run_hfun(cx);
    else if (sub == "extreme") run_extreme(cx);
    else if (sub == "verify") run_verify(cx);
  } catch (const ValidationError& e) {
    failure = Failure{1, "validation", e.what()};
  } catch (const DomainError& e) {
    failure = Failure{1, "domain", e.what()};
  } catch (const ConvergenceError& e) {
    failure = Failure{2, "convergence", e.what()};
  } catch (const DegenerateKernel& e) {
    failure = Failure{2, "degenerate_kernel", e.what()};
  } catch (const NonPositiveKernel& e) {
    failure = Failure{2, "non_positive_kernel", e.what()};
  } catch (const NotSplittable& e) {
    failure = Failure{2, "not_splittable", e.what()};
  } catch (const ResourceError& e) {
    failure = Failure{2, "resource", e.what()};
  } catch (const std::exception& e) {
    failure = Failure{2, "internal", e.what()};
  }

  std::optional<double> seconds;
  if (opt.timing) seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json err;
  if (failure) err = {{"kind", failure->kind}, {"message", failure->message}};
  const Json doc = report.to_json(config, hash, failure ? &err : nullptr, seconds);
  {
    std::ofstream f(out / "report.json", std::ios::binary);
    f << doc.dump(2) << '\n';
  }

  if (failure) {
    std::fprintf(stderr, "rlx %s: %s error: %s\n", sub.c_str(), failure->kind.c_str(), failure->message.c_str());
    return failure->code;
  }
  if (!opt.quiet) {
    for (const auto& k : report.checks.checks) {
      std::printf("%s  %s = %s (%s %s)\n", k.pass ? "pass" : "FAIL", k.name.c_str(), io::format_number(k.value).c_str(),
                  k.relation.c_str(), io::format_number(k.tolerance).c_str());
    }
    std::printf("report written to %s\n", (out / "report.json").string().c_str());
  }
  if (!report.pass()) {
    for (const auto& k : report.checks.checks) {
      if (!k.pass) std::fprintf(stderr, "rlx %s: check failed: %s\n", sub.c_str(), k.name.c_str());
    }
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rlx: automorphic measures on Schottky groups and finite-gap Herglotz functions"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> subs{
      {"group", "generators, fundamental intervals and a limit-set sample"},
      {"extend", "automorphic extension of a measure on the fundamental set"},
      {"poincare", "Poincare series D(x) at the configured points"},
      {"periods", "period matrix of the circle measures"},
      {"solve", "positive kernel vector of the period matrix"},
      {"hfun", "finite-gap h on a grid, Krein function and residues"},
      {"extreme", "extreme-point test, normalization and splitting"},
      {"verify", "the full acceptance suite"}};
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", opt.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    s->add_option("--out", opt.out, "output directory")->required();
    s->add_flag("--quiet", opt.quiet, "print nothing on success");
    s->add_flag("--timing", opt.timing, "record wall time in the report (makes reports non-reproducible)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  return run(app.get_subcommands().front()->get_name(), opt);
}
