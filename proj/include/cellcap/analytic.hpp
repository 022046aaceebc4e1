#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cellcap/core.hpp"
#include "cellcap/mobility.hpp"

// Closed-form side of the model: strategy probabilities, the finite-N
// capacity bound, the large-N limits, and the density / design-parameter
// optimizers.

namespace cellcap {

// The printed general-pi expressions for p4 and p8 do not equal the
// probability of the events they describe (the p4 subtrahend and the p8
// pair factor are off). Both versions ship: AsPrinted reproduces the
// published expressions verbatim, EventConsistent is the form the
// enumeration and Monte Carlo oracles can match.
enum class Variant { AsPrinted, EventConsistent };

inline const char* variant_name(Variant v) {
  return v == Variant::AsPrinted ? "as-printed" : "event-consistent";
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "as-printed") return Variant::AsPrinted;
  if (s == "event-consistent") return Variant::EventConsistent;
  throw model_error("unknown variant: " + s);
}

// Analogous split for the proportional-coverage limit: the published
// exponent in the p8 term is e^{-2d(1-eta)}, while the N->infinity limit of
// the finite-N formula gives e^{-d(1-eta)}.
enum class LimitMode { AsPrinted, Derived };

inline const char* limit_mode_name(LimitMode m) {
  return m == LimitMode::AsPrinted ? "as-printed" : "derived";
}

inline LimitMode limit_mode_from_name(const std::string& s) {
  if (s == "as-printed") return LimitMode::AsPrinted;
  if (s == "derived") return LimitMode::Derived;
  throw model_error("unknown limit mode: " + s);
}

namespace detail {

// (1 - x)^k, evaluated in log space so large exponents neither overflow
// nor lose the leading digits.
inline double pow_one_minus(double x, double k) {
  if (k == 0.0) return 1.0;
  if (x >= 1.0) return 0.0;  // base clamped at 0 (k > 0)
  return std::exp(k * std::log1p(-x));
}

inline double clamp_probability(double v, const char* name) {
  if (v < -1e-12 || v > 1.0 + 1e-12)
    throw convergence_error(std::string("internal consistency: ") + name +
                            " = " + std::to_string(v) + " outside [0,1]");
  return std::min(1.0, std::max(0.0, v));
}

// 1 - e^{-d} - d e^{-d}: probability-of-encounter factor shared by all the
// limit expressions.
inline double encounter_factor(double d) {
  // -expm1(-d) keeps the d^2/2 leading term alive for tiny d, where
  // 1 - exp(-d) - d*exp(-d) cancels to rounding noise.
  return -std::expm1(-d) - d * std::exp(-d);
}

}  // namespace detail

// (p1..p8) averaged over SR cells and (q1, q2) averaged over non-SR cells.
// p[0] is p1, q[0] is q1.
struct StrategyProbabilities {
  std::array<double, 8> p{};
  std::array<double, 2> q{};
  Variant variant = Variant::EventConsistent;
};

struct CapacityReport {
  double mu = 0.0;
  double sr_contribution = 0.0;
  double non_sr_contribution = 0.0;
  // inputs echoed
  int cells = 0;
  int sr_size = 0;
  double density = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  Variant variant = Variant::EventConsistent;
};

struct LimitParams {
  double d;
  double eta;
  double xi;
  double r1;
  LimitMode limit_mode = LimitMode::AsPrinted;

  void validate() const {
    if (!(d > 0.0)) throw model_error("density d must be positive");
    if (eta < 0.0 || eta > 1.0) throw model_error("coverage eta must be in [0,1]");
    if (xi < 2.0) throw model_error("rate ratio xi must be >= 2");
    if (!(r1 > 0.0)) throw model_error("rate r1 must be positive");
  }
};

// Uniform-pi closed forms (pi_c = 1/C). The two variants differ only in
// p4's bracket: as-printed subtracts (1-(A-1)/C)^{N-2} with an (A-1)/C
// pair factor, event-consistent is the exact probability of "one node in
// the cell, partner outside the SR, somebody in B", which carries
// (1-A/C) and subtracts (1-A/C)^{N-2}.
inline StrategyProbabilities strategy_probs_uniform(int C, int N, int A,
                                                    Variant variant) {
  if (C < 1) throw model_error("cell count must be >= 1");
  if (N < 2 || N % 2 != 0) throw model_error("node count must be even and >= 2");
  if (A < 0 || A > C) throw model_error("SR size must be in [0, C]");
  using detail::clamp_probability;
  using detail::pow_one_minus;

  StrategyProbabilities out;
  out.variant = variant;

  const double invC = 1.0 / C;
  const double invC2 = invC * invC;
  const double at_least_two =
      1.0 - pow_one_minus(invC, N) - N * invC * pow_one_minus(invC, N - 1);

  out.q[0] = clamp_probability(1.0 - pow_one_minus(invC2, N / 2.0), "q1");
  out.q[1] = clamp_probability(at_least_two - out.q[0], "q2");

  if (A == 0) return out;

  const double cover = static_cast<double>(A) / C;  // A/C
  const double b_mass = static_cast<double>(A - 1) / C;

  const double p5 = clamp_probability(1.0 - pow_one_minus(invC2, N / 2.0), "p5");
  double p8 = 0.0;
  if (N >= 4) {
    p8 = (static_cast<double>(N) * (N - 2) / (2.0 * C * C)) *
         (1.0 - cover) * (1.0 - cover) *
         pow_one_minus(invC2 + 2.0 * invC * (1.0 - cover), N / 2.0 - 2.0);
    p8 = clamp_probability(p8, "p8");
  }
  const double p7 = clamp_probability(at_least_two - p5 - p8, "p7");
  const double p3 = clamp_probability(
      N * invC * b_mass * pow_one_minus(invC, N - 2), "p3");

  double p4;
  if (variant == Variant::AsPrinted) {
    p4 = N * invC * b_mass *
         (pow_one_minus(invC, N - 2) - pow_one_minus(b_mass, N - 2));
  } else {
    p4 = N * invC * (1.0 - cover) *
         (pow_one_minus(invC, N - 2) - pow_one_minus(cover, N - 2));
  }
  p4 = clamp_probability(p4, "p4");

  out.p = {0.0, 0.0, p3, p4, p5, 0.0, p7, p8};
  return out;
}

// General-pi forms: per-cell event probabilities averaged over the SR (for
// p) and its complement (for q), with pi_B = (sum over SR) - pi_c.
inline StrategyProbabilities strategy_probs_general(
    const StationaryDistribution& pi, const GridTopology& topo, int N,
    Variant variant) {
  if (pi.dim() != topo.cell_count())
    throw model_error("stationary distribution does not match topology");
  if (N < 2 || N % 2 != 0) throw model_error("node count must be even and >= 2");
  using detail::clamp_probability;
  using detail::pow_one_minus;

  StrategyProbabilities out;
  out.variant = variant;

  const int C = topo.cell_count();
  const int A = topo.sr_size();
  double sr_mass = 0.0;
  for (int c : topo.sr_cells()) sr_mass += pi.pi[c];

  double p3 = 0, p4 = 0, p5 = 0, p7 = 0, p8 = 0;
  for (int c : topo.sr_cells()) {
    const double pc = pi.pi[c];
    const double pb = std::max(0.0, sr_mass - pc);
    const double outside = 1.0 - pc - pb;  // mass outside the SR

    const double p5c = 1.0 - pow_one_minus(pc * pc, N / 2.0);
    double p8c = 0.0;
    if (N >= 4) {
      const double pair_factor = (variant == Variant::AsPrinted) ? pb : outside;
      p8c = (static_cast<double>(N) * (N - 2) / 2.0) * pc * pc *
            pair_factor * pair_factor *
            pow_one_minus(pc * pc + 2.0 * pc * outside, N / 2.0 - 2.0);
    }
    const double two_plus =
        1.0 - pow_one_minus(pc, N) - N * pc * pow_one_minus(pc, N - 1);
    const double p7c = two_plus - p5c - p8c;
    const double p3c = N * pc * pb * pow_one_minus(pc, N - 2);
    const double subtrahend = (variant == Variant::AsPrinted)
                                  ? pow_one_minus(pb, N - 2)
                                  : pow_one_minus(pc + pb, N - 2);
    const double p4c =
        N * pc * outside * (pow_one_minus(pc, N - 2) - subtrahend);

    p5 += p5c;
    p8 += p8c;
    p7 += p7c;
    p3 += p3c;
    p4 += p4c;
  }
  if (A > 0) {
    out.p = {0.0,
             0.0,
             clamp_probability(p3 / A, "p3"),
             clamp_probability(p4 / A, "p4"),
             clamp_probability(p5 / A, "p5"),
             0.0,
             clamp_probability(p7 / A, "p7"),
             clamp_probability(p8 / A, "p8")};
  }

  if (A < C) {
    double q1 = 0, q2 = 0;
    for (int c = 0; c < C; ++c) {
      if (topo.in_sr(c)) continue;
      const double pc = pi.pi[c];
      const double q1c = 1.0 - pow_one_minus(pc * pc, N / 2.0);
      const double two_plus =
          1.0 - pow_one_minus(pc, N) - N * pc * pow_one_minus(pc, N - 1);
      q1 += q1c;
      q2 += two_plus - q1c;
    }
    out.q[0] = clamp_probability(q1 / (C - A), "q1");
    out.q[1] = clamp_probability(q2 / (C - A), "q2");
  }
  return out;
}

// mu = (1/2d) [ (A/C) sum alpha_m p_m + ((C-A)/C) sum beta_m q_m ]
inline CapacityReport capacity_bound(const StrategyProbabilities& probs,
                                     const RatePair& rates, int C, int A,
                                     double d) {
  if (!(d > 0.0)) throw model_error("density d must be positive");
  if (C < 1 || A < 0 || A > C) throw model_error("require 0 <= A <= C, C >= 1");

  double sum_p = 0.0;
  for (int m = 1; m <= 8; ++m)
    sum_p += strategy_coefficient(static_cast<Strategy>(m), rates, true) *
             probs.p[m - 1];
  double sum_q = 0.0;
  for (int m = 1; m <= 2; ++m)
    sum_q += strategy_coefficient(static_cast<Strategy>(m), rates, false) *
             probs.q[m - 1];

  CapacityReport rep;
  rep.sr_contribution = (static_cast<double>(A) / C) * sum_p / (2.0 * d);
  rep.non_sr_contribution =
      (static_cast<double>(C - A) / C) * sum_q / (2.0 * d);
  rep.mu = rep.sr_contribution + rep.non_sr_contribution;
  rep.cells = C;
  rep.sr_size = A;
  rep.density = d;
  rep.r1 = rates.r1;
  rep.r2 = rates.r2;
  rep.variant = probs.variant;
  return rep;
}

// Pure ad hoc limit capacity: R1 (1 - e^{-d} - d e^{-d}) / (2d).
inline double mu0(double d, double r1) {
  if (!(d > 0.0)) throw model_error("density d must be positive");
  if (!(r1 > 0.0)) throw model_error("rate r1 must be positive");
  return r1 / d * (0.5 * detail::encounter_factor(d));
}

// Fixed-A limit: the base station washes out and the value equals mu0.
inline double mu1_limit(double d, double r1) { return mu0(d, r1); }

// Proportional-coverage limit.
inline double mu2_limit(const LimitParams& params) {
  params.validate();
  const double d = params.d, eta = params.eta, xi = params.xi;
  const double q = detail::encounter_factor(d);
  const double exponent =
      (params.limit_mode == LimitMode::AsPrinted) ? 2.0 * d * (1.0 - eta)
                                                  : d * (1.0 - eta);
  const double term = (eta / xi + 0.5) * q +
                      (3.0 / (2.0 * xi)) * d * eta * eta * std::exp(-d) -
                      (eta / (4.0 * xi)) * d * d * (1.0 - eta) * (1.0 - eta) *
                          std::exp(-exponent);
  return params.r1 / d * term;
}

// Limit capacity gain from the base station: mu2 - mu0.
inline double delta_mu(const LimitParams& params) {
  return mu2_limit(params) - mu0(params.d, params.r1);
}

// Stationarity condition for the mu1 optimum, zero at the maximizer:
// e^{-d}(d^2 + d + 1) - 1.
inline double mu1_stationarity(double d) {
  return std::exp(-d) * (d * d + d + 1.0) - 1.0;
}

struct DensityOptimum {
  double d_opt;
  double mu_max;
};

// Golden-section maximization of a unimodal objective over [d_lo, d_hi].
inline DensityOptimum optimal_density(
    const std::function<double(double)>& objective, double d_lo, double d_hi,
    double tolerance) {
  if (!(d_lo > 0.0) || !(d_hi > d_lo))
    throw model_error("require 0 < d_lo < d_hi");
  if (!(tolerance > 0.0)) throw model_error("tolerance must be positive");

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = d_lo, b = d_hi;
  double fa = objective(a), fb = objective(b);
  double c = b - inv_phi * (b - a);
  double e = a + inv_phi * (b - a);
  double fc = objective(c), fe = objective(e);

  while (b - a > tolerance) {
    if (std::max(fc, fe) < std::min(fa, fb))
      throw convergence_error(
          "optimal_density: interior values below both endpoints; bracket is "
          "not unimodal");
    if (fc > fe) {
      b = e;
      fb = fe;
      e = c;
      fe = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      fa = fc;
      c = e;
      fc = fe;
      e = a + inv_phi * (b - a);
      fe = objective(e);
    }
  }
  const double d_opt = 0.5 * (a + b);
  return {d_opt, objective(d_opt)};
}

struct GridOptimum {
  double eta;
  double xi;
  double value;
};

// Exhaustive grid argmax of a utility over eta in {1/eta_steps, ..., 1} and
// xi in linspace(2, xi_max, xi_steps). Ties go to smaller eta, then xi.
inline GridOptimum utility_grid_search(
    const std::function<double(double, double)>& utility, int eta_steps,
    double xi_max, int xi_steps) {
  if (eta_steps < 2 || xi_steps < 2) throw model_error("grid steps must be >= 2");
  if (xi_max < 2.0) throw model_error("xi_max must be >= 2");

  GridOptimum best{0.0, 0.0, 0.0};
  bool first = true;
  for (int i = 1; i <= eta_steps; ++i) {
    const double eta = static_cast<double>(i) / eta_steps;
    for (int j = 0; j < xi_steps; ++j) {
      const double xi = 2.0 + (xi_max - 2.0) * j / (xi_steps - 1);
      const double v = utility(eta, xi);
      if (first || v > best.value) {
        best = {eta, xi, v};
        first = false;
      }
    }
  }
  return best;
}

struct ConvergenceRow {
  int n;
  int cells;
  int sr_size;
  double mu_finite;
  double mu_limit;
  double gap;
};

// Finite-N uniform bound against the derived-mode mu2 limit, one row per N.
inline std::vector<ConvergenceRow> finite_to_limit_check(
    double d, double eta, double xi, double r1,
    const std::vector<int>& n_sequence) {
  LimitParams lp{d, eta, xi, r1, LimitMode::Derived};
  lp.validate();
  const double limit = mu2_limit(lp);
  const RatePair rates = RatePair::from_ratio(r1, xi);

  std::vector<ConvergenceRow> rows;
  for (int n : n_sequence) {
    if (n < 2 || n % 2 != 0) throw model_error("N values must be even and >= 2");
    const int cells = static_cast<int>(std::llround(n / d));
    const int a = static_cast<int>(std::llround(eta * cells));
    if (cells < 1 || a > cells)
      throw model_error("rounding gave an infeasible (C, A) for N = " +
                        std::to_string(n));
    // The derived-mode limit is the N -> infinity value of the as-printed
    // finite forms; the event-consistent forms converge elsewhere for
    // eta > 0 (their p4 differs), so the gap would not vanish.
    const auto probs = strategy_probs_uniform(cells, n, a, Variant::AsPrinted);
    const double density = static_cast<double>(n) / cells;
    const auto rep = capacity_bound(probs, rates, cells, a, density);
    rows.push_back({n, cells, a, rep.mu, limit, std::abs(rep.mu - limit)});
  }
  return rows;
}

}  // namespace cellcap
