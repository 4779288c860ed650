#pragma once

// Herglotz functions F(z) = a + ∫ (1+tz)/(t-z) dν(t), their boundary
// recovery, the period map Γ(ν) = (Re(F(g_j·i) - F(i)))_j, the positive
// kernel of the period matrix, and the convex structure of
// X = {ν automorphic : ν(R∪{∞}) = 1, Γ(ν) = 0}.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rlx/autmeasure.hpp"
#include "rlx/errors.hpp"
#include "rlx/moebius.hpp"
#include "rlx/schottky.hpp"

namespace rlx {

inline const Complex kI{0.0, 1.0};

/// (1+tλ)/(t-λ); λ itself for t = ∞.
inline Complex herglotz_kernel(const ExtendedReal& t, const Complex& lambda) noexcept {
  if (t.is_infinite()) return lambda;
  const double s = t.value();
  return (1.0 + s * lambda) / (s - lambda);
}

/// d/dλ of the kernel at λ = i: (1+t²)/(t-i)², or 1 at ∞.
inline Complex herglotz_kernel_deriv_at_i(const ExtendedReal& t) noexcept {
  if (t.is_infinite()) return 1.0;
  const double s = t.value();
  const Complex den = (s - kI) * (s - kI);
  return (1.0 + s * s) / den;
}

struct HerglotzData {
  double a = 0.0;
  AtomicMeasure atoms;  // finite points only
  double atom_at_inf = 0.0;

  /// Splits a measure that may carry an atom at ∞.
  static HerglotzData from_measure(std::span<const Atom> nu, double a = 0.0) {
    HerglotzData F;
    F.a = a;
    for (const Atom& at : nu) {
      if (!(at.weight >= 0.0)) throw ValidationError("HerglotzData: weights must be nonnegative");
      if (at.point.is_infinite()) {
        F.atom_at_inf += at.weight;
      } else {
        F.atoms.push_back(at);
      }
    }
    return F;
  }

  static HerglotzData from_automorphic(const AutomorphicAtoms& nu) { return from_measure(nu.atoms()); }

  [[nodiscard]] double mass() const noexcept { return total_mass(atoms) + atom_at_inf; }
};

inline Complex eval(const HerglotzData& F, const Complex& lambda) {
  if (!(lambda.imag() > 0.0)) throw DomainError("eval: λ must lie in the open upper half plane");
  Complex s = F.a + F.atom_at_inf * lambda;
  for (const Atom& at : F.atoms) s += at.weight * herglotz_kernel(at.point, lambda);
  return s;
}

inline Complex eval_deriv_at_i(const HerglotzData& F) noexcept {
  Complex s = F.atom_at_inf;
  for (const Atom& at : F.atoms) s += at.weight * herglotz_kernel_deriv_at_i(at.point);
  return s;
}

/// cF + offset: weights scale by c, a ↦ c·a + offset.
inline HerglotzData affine_action(const HerglotzData& F, double cscale, double offset) {
  if (!(cscale > 0.0)) throw ValidationError("affine_action: scale must be positive");
  HerglotzData G = F;
  G.a = cscale * F.a + offset;
  for (auto& at : G.atoms) at.weight *= cscale;
  G.atom_at_inf *= cscale;
  return G;
}

// ---------------------------------------------------------------------------
// Boundary recovery

struct AtomRecovery {
  double weight = 0.0;
  bool converged = true;
  std::vector<double> extrapolants;
};

/// Point mass at t from the pole asymptotics (1+t²)ν({t}) = lim -iy F(t+iy)
/// (ν({∞}) = lim -iy F(i/y)). The sequence -iy F is Richardson-extrapolated
/// assuming a first-order error in y; `converged` is false if the last two
/// extrapolants differ by more than 1e-6.
template <class Fn>
AtomRecovery boundary_recover_atom(Fn&& F, const ExtendedReal& t, std::span<const double> ys) {
  if (ys.size() < 2) throw ValidationError("boundary_recover_atom: need at least two heights");
  for (std::size_t k = 0; k < ys.size(); ++k) {
    if (!(ys[k] > 0.0) || (k > 0 && !(ys[k] < ys[k - 1]))) {
      throw ValidationError("boundary_recover_atom: heights must decrease to zero");
    }
  }
  std::vector<Complex> e;
  for (double y : ys) {
    const Complex z = t.is_infinite() ? Complex(0.0, 1.0 / y) : Complex(t.value(), y);
    e.push_back(-kI * y * static_cast<Complex>(F(z)));
  }
  AtomRecovery out;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    const double rho = ys[k] / ys[k + 1];
    out.extrapolants.push_back(((rho * e[k + 1] - e[k]) / (rho - 1.0)).real());
  }
  const std::size_t n = out.extrapolants.size();
  if (n >= 2 && std::abs(out.extrapolants[n - 1] - out.extrapolants[n - 2]) > 1e-6) out.converged = false;
  const double limit = out.extrapolants.back();
  out.weight = t.is_infinite() ? limit : limit / (1.0 + t.value() * t.value());
  return out;
}

inline AtomRecovery boundary_recover_atom(const HerglotzData& F, const ExtendedReal& t,
                                          std::span<const double> ys) {
  return boundary_recover_atom([&](const Complex& z) { return eval(F, z); }, t, ys);
}

inline std::vector<double> default_heights() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}; }

// ---------------------------------------------------------------------------
// Periods

/// Σ_ℓ s_ℓ plus the geometric tail s_L·q/(1-q), where q is the tail ratio of
/// the mass series of the same extension.
template <class T>
T tail_corrected(std::span<const T> per_length, double q) {
  T s{};
  for (const T& v : per_length) s += v;
  if (!per_length.empty() && q > 0.0 && q < 1.0) s += per_length.back() * (q / (1.0 - q));
  return s;
}

struct GammaEstimate {
  double value = 0.0;  // tail-corrected
  double raw = 0.0;    // plain sum over the truncated extension
  double tail = 0.0;   // |value - raw|
};

inline GammaEstimate gamma_estimate(const SchottkyConfig&, const AutomorphicAtoms& nu, const MoebiusMap& g) {
  const Complex lambda = g.apply(kI);
  std::vector<double> per(static_cast<std::size_t>(nu.L) + 1, 0.0);
  for (const auto& r : nu.records) {
    per[(*nu.words)[r.word].length] +=
        r.weight * (herglotz_kernel(r.point, lambda).real() - herglotz_kernel(r.point, kI).real());
  }
  GammaEstimate e;
  for (double v : per) e.raw += v;
  e.value = tail_corrected<double>(per, nu.tail_ratio);
  e.tail = std::abs(e.value - e.raw);
  return e;
}

/// γ(g, ν) = Re(F(g·i) - F(i)) with F built from ν and a = 0.
inline double gamma(const SchottkyConfig& config, const AutomorphicAtoms& nu, const MoebiusMap& g) {
  return gamma_estimate(config, nu, g).value;
}

/// Per-length sums of K(t, λ_j) over an orbit for fixed probe points λ_j,
/// of K'(t, i), and of the mass.
struct ProbeSums {
  std::vector<Complex> probes;
  std::size_t stride = 1;
  std::vector<Complex> values;  // probe-major, `stride` lengths per probe
  std::vector<Complex> deriv;
  LengthSums lengths;

  ProbeSums(std::vector<Complex> p, int L)
      : probes(std::move(p)),
        stride(static_cast<std::size_t>(L) + 1),
        values(probes.size() * stride),
        deriv(stride),
        lengths(L) {}

  void add(const ExtendedReal& t, double w, int length) {
    const auto l = static_cast<std::size_t>(length);
    for (std::size_t j = 0; j < probes.size(); ++j) values[j * stride + l] += w * herglotz_kernel(t, probes[j]);
    deriv[l] += w * herglotz_kernel_deriv_at_i(t);
    lengths.add(t, w, length);
  }
  void merge(const ProbeSums& o) {
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += o.values[k];
    for (std::size_t k = 0; k < deriv.size(); ++k) deriv[k] += o.deriv[k];
    lengths.merge(o.lengths);
  }
  [[nodiscard]] std::span<const Complex> of(std::size_t j) const {
    return std::span<const Complex>(values).subspan(j * stride, stride);
  }
};

struct OrbitEvaluation {
  std::vector<Complex> values;  // F(λ_j), tail-corrected
  std::vector<Complex> raw;     // F(λ_j) over the truncated extension
  Complex deriv_at_i{0.0, 0.0}; // F'(i) over the truncated extension
  double mass = 0.0;
  std::vector<double> per_length;
  TailEstimate tail;
};

/// F(λ_j) for the length-≤L extension of ν₀ (a = 0) without materializing it.
inline OrbitEvaluation evaluate_orbit(const SchottkyConfig& config, const FundamentalMeasure& nu0, int L,
                                      std::vector<Complex> probes) {
  for (const Complex& z : probes) {
    if (!(z.imag() > 0.0)) throw DomainError("evaluate_orbit: probe points must lie in the upper half plane");
  }
  const ProbeSums s = reduce_orbit(config, nu0, L, ProbeSums(std::move(probes), L));
  OrbitEvaluation out;
  out.per_length = s.lengths.sums;
  out.mass = s.lengths.total();
  out.tail = estimate_tail(out.per_length);
  require_convergence(out.tail, "evaluate_orbit");
  for (std::size_t j = 0; j < s.probes.size(); ++j) {
    Complex raw{};
    for (const Complex& v : s.of(j)) raw += v;
    out.raw.push_back(raw);
    out.values.push_back(tail_corrected(s.of(j), out.tail.ratio));
  }
  for (const Complex& v : s.deriv) out.deriv_at_i += v;
  return out;
}

/// Everything the period map needs from one truncated extension.
struct OrbitSummary {
  std::vector<double> periods;  // Γ(ν), one entry per generator, tail-corrected
  double mass = 0.0;            // ν(R∪{∞}) of the truncated extension
  Complex deriv_at_i{0.0, 0.0}; // F'(i)
  std::vector<double> per_length;
  TailEstimate tail;
};

inline OrbitSummary summarize_orbit(const SchottkyConfig& config, const FundamentalMeasure& nu0, int L) {
  std::vector<Complex> probes{kI};
  for (int j = 0; j < config.generator_count(); ++j) probes.push_back(config.generator(j).apply(kI));
  const OrbitEvaluation e = evaluate_orbit(config, nu0, L, std::move(probes));
  OrbitSummary out;
  for (std::size_t j = 1; j < e.values.size(); ++j) out.periods.push_back((e.values[j] - e.values[0]).real());
  out.mass = e.mass;
  out.deriv_at_i = e.deriv_at_i;
  out.per_length = e.per_length;
  out.tail = e.tail;
  return out;
}

struct PeriodMatrix {
  Eigen::MatrixXd A;                 // (N-1) × N
  std::vector<double> column_mass;   // extension mass of each ν_n
  double tail_mass = 0.0;            // largest declared tail over columns
  double tail_ratio = 0.0;           // largest measured tail ratio over columns
};

/// A_{jn} = γ(g_j, extension of ν_n placed alone on S_n).
inline PeriodMatrix period_matrix(const SchottkyConfig& config, const FundamentalMeasure& nu, int L) {
  validate(nu, config);
  const int N = config.circle_count();
  PeriodMatrix pm;
  pm.A = Eigen::MatrixXd::Zero(N - 1, N);
  for (int n = 1; n <= N; ++n) {
    if (!(nu.mass(n) > 0.0)) {
      throw ValidationError("period_matrix: ν_" + std::to_string(n) + " has zero mass");
    }
    FundamentalMeasure alone = empty_measure(config);
    alone.on(n) = nu.on(n);
    const OrbitSummary s = summarize_orbit(config, alone, L);
    for (int j = 0; j < N - 1; ++j) pm.A(j, n - 1) = s.periods[static_cast<std::size_t>(j)];
    pm.column_mass.push_back(s.mass);
    pm.tail_mass = std::max(pm.tail_mass, s.tail.mass);
    pm.tail_ratio = std::max(pm.tail_ratio, s.tail.ratio);
  }
  return pm;
}

struct WeightSolution {
  std::vector<double> c;
  double residual = 0.0;        // ‖A c‖₂
  double uniqueness_gap = std::numeric_limits<double>::infinity();  // σ_{N-1}(A)
  double sigma_max = 0.0;
};

inline constexpr double kKernelThreshold = 1e-10;

/// The unique positive kernel vector of an (N-1)×N period matrix, scaled to
/// Σc = 1. Throws DegenerateKernel if σ_{N-1} ≤ 1e-10·σ_max and
/// NonPositiveKernel if some entry is not strictly positive.
inline WeightSolution solve_weights(const Eigen::MatrixXd& A) {
  const Eigen::Index N = A.cols();
  if (N < 1 || A.rows() != N - 1) throw ValidationError("solve_weights: matrix must be (N-1)×N");
  WeightSolution sol;
  if (N == 1) {
    sol.c = {1.0};
    return sol;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  sol.sigma_max = sv(0);
  sol.uniqueness_gap = sv(N - 2);
  if (!(sol.sigma_max > 0.0) || !(sol.uniqueness_gap > kKernelThreshold * sol.sigma_max)) {
    throw DegenerateKernel("solve_weights: kernel is not one-dimensional (σ_min = " +
                           std::to_string(sol.uniqueness_gap) + ", σ_max = " + std::to_string(sol.sigma_max) +
                           ")");
  }
  Eigen::VectorXd v = svd.matrixV().col(N - 1);
  if (v.sum() < 0.0) v = -v;
  const double vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index n = 0; n < N; ++n) {
    if (!(v(n) > kKernelThreshold * vmax)) {
      throw NonPositiveKernel("solve_weights: kernel vector is not strictly positive (entry " +
                              std::to_string(n + 1) + " = " + std::to_string(v(n) / vmax) + ")");
    }
  }
  v /= v.sum();
  sol.c.assign(v.data(), v.data() + N);
  sol.residual = (A * v).norm();
  return sol;
}

// ---------------------------------------------------------------------------
// The convex set X

struct XMembership {
  bool member = false;
  double mass_residual = 0.0;
  double gamma_residual = 0.0;
  double gamma_tolerance = 0.0;
};

inline constexpr double kMassTolerance = 1e-8;

inline XMembership classify_membership(double mass, std::span<const double> periods, double tail_mass) {
  XMembership m;
  m.mass_residual = std::abs(mass - 1.0);
  for (double g : periods) m.gamma_residual = std::max(m.gamma_residual, std::abs(g));
  m.gamma_tolerance = std::max(1e-6, 10.0 * tail_mass);
  m.member = m.mass_residual <= kMassTolerance && m.gamma_residual <= m.gamma_tolerance;
  return m;
}

inline XMembership membership_X(const AutomorphicAtoms& nu, const SchottkyConfig& config) {
  std::vector<double> periods;
  for (int j = 0; j < config.generator_count(); ++j) periods.push_back(gamma(config, nu, config.generator(j)));
  return classify_membership(nu.mass(), periods, nu.tail_mass);
}

/// Streaming variant on the length-≤L extension of ν₀.
inline XMembership membership_X(const SchottkyConfig& config, const FundamentalMeasure& nu0, int L) {
  const OrbitSummary s = summarize_orbit(config, nu0, L);
  return classify_membership(s.mass, s.periods, s.tail.mass);
}

/// Unit-mass rescaling of the circle measures ν_n with Γ = 0.
struct BalancedMeasure {
  FundamentalMeasure measure;
  WeightSolution solution;
  std::vector<double> column_mass;
};

/// Solves Γ(c₁ν₁, …, c_Nν_N) = 0 and rescales so that the extension has mass 1.
inline BalancedMeasure balance(const SchottkyConfig& config, const FundamentalMeasure& shapes, int L) {
  const PeriodMatrix pm = period_matrix(config, shapes, L);
  BalancedMeasure out;
  out.solution = solve_weights(pm.A);
  out.column_mass = pm.column_mass;
  double mass = 0.0;
  for (std::size_t n = 0; n < out.solution.c.size(); ++n) mass += out.solution.c[n] * pm.column_mass[n];
  out.measure = shapes;
  for (int n = 1; n <= shapes.circle_count(); ++n) {
    const double s = out.solution.c[static_cast<std::size_t>(n - 1)] / mass;
    for (auto& a : out.measure.on(n)) a.weight *= s;
  }
  return out;
}

inline bool is_extreme(const FundamentalMeasure& nu0) {
  for (int n = 1; n <= nu0.circle_count(); ++n) {
    if (nu0.on(n).empty()) throw ValidationError("is_extreme: S_" + std::to_string(n) + " carries no mass");
  }
  return std::all_of(nu0.circles.begin(), nu0.circles.end(), [](const auto& c) { return c.size() == 1; });
}

/// Divides every circle measure by its mass.
inline std::vector<AtomicMeasure> to_normalized(const FundamentalMeasure& nu0) {
  std::vector<AtomicMeasure> out;
  for (int n = 1; n <= nu0.circle_count(); ++n) {
    const double m = nu0.mass(n);
    if (!(m > 0.0)) throw ValidationError("to_normalized: S_" + std::to_string(n) + " has zero mass");
    AtomicMeasure c = nu0.on(n);
    for (auto& a : c) a.weight /= m;
    out.push_back(std::move(c));
  }
  return out;
}

/// Recovers the unique masses for probability measures μ_n on S_n that put
/// the extension in X.
inline FundamentalMeasure from_normalized(std::span<const AtomicMeasure> mus, const SchottkyConfig& config, int L) {
  FundamentalMeasure shapes;
  for (const auto& m : mus) {
    if (std::abs(total_mass(m) - 1.0) > 1e-12) {
      throw ValidationError("from_normalized: inputs must be probability measures");
    }
    shapes.circles.push_back(m);
  }
  return balance(config, shapes, L).measure;
}

struct ExtremeSplit {
  FundamentalMeasure mu;   // normalized, in X
  FundamentalMeasure rho;  // normalized, in X
  double mu_weight = 0.0;  // ν = mu_weight·mu + rho_weight·rho
  double rho_weight = 0.0;
  int split_circle = 0;
};

/// Writes a non-extreme ν ∈ X as a non-trivial convex combination of two
/// other members of X, by splitting the first multi-atom circle measure into
/// its first atom and the rest.
inline ExtremeSplit split_nonextreme(const FundamentalMeasure& nu0, const SchottkyConfig& config, int L) {
  if (is_extreme(nu0)) throw NotSplittable("split_nonextreme: measure is already an extreme point");
  const XMembership mem = membership_X(config, nu0, L);
  if (!mem.member) {
    throw ValidationError("split_nonextreme: extension is not in X (mass residual " +
                          std::to_string(mem.mass_residual) + ", Γ residual " + std::to_string(mem.gamma_residual) +
                          ")");
  }
  int n = 1;
  while (nu0.on(n).size() < 2) ++n;

  auto part = [&](AtomicMeasure piece) {
    FundamentalMeasure shapes = nu0;
    shapes.on(n) = std::move(piece);
    const PeriodMatrix pm = period_matrix(config, shapes, L);
    const WeightSolution sol = solve_weights(pm.A);
    const double cn = sol.c[static_cast<std::size_t>(n - 1)];
    double mass = 0.0;
    for (int m = 1; m <= nu0.circle_count(); ++m) {
      const double s = sol.c[static_cast<std::size_t>(m - 1)] / cn;
      if (m != n) {
        for (auto& a : shapes.on(m)) a.weight *= s;
      }
      mass += s * pm.column_mass[static_cast<std::size_t>(m - 1)];
    }
    return std::pair{shapes, mass};
  };

  const AtomicMeasure& whole = nu0.on(n);
  auto [mu, mu_mass] = part(AtomicMeasure{whole.front()});
  auto [rho, rho_mass] = part(AtomicMeasure(whole.begin() + 1, whole.end()));
  return {scaled(std::move(mu), 1.0 / mu_mass), scaled(std::move(rho), 1.0 / rho_mass), mu_mass, rho_mass, n};
}

}  // namespace rlx
