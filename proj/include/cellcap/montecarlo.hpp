#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "cellcap/analytic.hpp"
#include "cellcap/core.hpp"
#include "cellcap/mobility.hpp"

// Stochastic counterpart of the closed forms: placement sampling, per-cell
// strategy classification, empirical probability estimation, exhaustive
// enumeration for tiny instances, and a packet-level two-hop relay
// simulation whose delivered rate must stay under the capacity bound.

namespace cellcap {

struct Placement {
  std::vector<int> cell_of;

  int size() const { return static_cast<int>(cell_of.size()); }
};

// literal: reproduces the exact events behind the closed forms.
// operational: genuine strategy feasibility under the priority order.
enum class ClassifierMode { Literal, Operational };

inline ClassifierMode classifier_mode_from_name(const std::string& s) {
  if (s == "literal") return ClassifierMode::Literal;
  if (s == "operational") return ClassifierMode::Operational;
  throw model_error("unknown classifier mode: " + s);
}

struct EmpiricalEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long long samples = 0;
};

namespace detail {

// Inverse-CDF sampler over cells.
class CellSampler {
public:
  explicit CellSampler(const StationaryDistribution& pi) {
    cdf_.reserve(pi.pi.size());
    double acc = 0.0;
    for (double v : pi.pi) {
      acc += v;
      cdf_.push_back(acc);
    }
    cdf_.back() = 1.0;
  }

  template <class Rng>
  int draw(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return static_cast<int>(
        std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

private:
  std::vector<double> cdf_;
};

// Running mean / standard error over per-slot samples.
struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  long long n = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }

  EmpiricalEstimate estimate() const {
    EmpiricalEstimate e;
    e.samples = n;
    if (n == 0) return e;
    e.mean = sum / n;
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
      e.stderr_ = std::sqrt(var / n);
    }
    return e;
  }
};

// Per-slot cell aggregates that every classification rule reads.
struct CellStats {
  std::vector<int> count;        // nodes in cell
  std::vector<int> pairs_full;   // pairs with both members in cell
  std::vector<int> lone_to_sr;   // nodes whose partner sits in another SR cell
  std::vector<int> lone_to_out;  // nodes whose partner is outside the SR
  std::vector<int> qual_pairs;   // pairs: exactly one member here, partner not in SR
  int sr_nodes = 0;              // nodes located anywhere in the SR

  void compute(const Placement& placement, const FlowPairing& pairing,
               const GridTopology& topo) {
    const int c = topo.cell_count();
    count.assign(c, 0);
    pairs_full.assign(c, 0);
    lone_to_sr.assign(c, 0);
    lone_to_out.assign(c, 0);
    qual_pairs.assign(c, 0);
    sr_nodes = 0;
    for (int i = 0; i < pairing.n; ++i) {
      const int ci = placement.cell_of[i];
      ++count[ci];
      if (topo.in_sr(ci)) ++sr_nodes;
      const int cp = placement.cell_of[pairing.partner(i)];
      if (cp != ci) {
        if (topo.in_sr(cp))
          ++lone_to_sr[ci];
        else
          ++lone_to_out[ci];
      }
    }
    for (int k = 0; k < pairing.n / 2; ++k) {
      const int ca = placement.cell_of[2 * k];
      const int cb = placement.cell_of[2 * k + 1];
      if (ca == cb) {
        ++pairs_full[ca];
      } else {
        if (!topo.in_sr(cb)) ++qual_pairs[ca];
        if (!topo.in_sr(ca)) ++qual_pairs[cb];
      }
    }
  }

  Strategy classify(int cell, const GridTopology& topo,
                    ClassifierMode mode) const {
    const bool sr = topo.in_sr(cell);
    if (!sr) {
      if (pairs_full[cell] > 0) return Strategy::S1;
      if (count[cell] >= 2) return Strategy::S2;
      return Strategy::S0;
    }
    const bool someone_in_b = sr_nodes - count[cell] > 0;
    if (mode == ClassifierMode::Literal) {
      // First matching event wins: E5, E8, E7, E3, E4.
      if (pairs_full[cell] > 0) return Strategy::S5;
      if (qual_pairs[cell] == 2) return Strategy::S8;
      if (count[cell] >= 2) return Strategy::S7;
      if (count[cell] == 1) {
        if (lone_to_sr[cell] == 1) return Strategy::S3;
        if (lone_to_out[cell] == 1 && someone_in_b) return Strategy::S4;
      }
      return Strategy::S0;
    }
    // Operational: highest-priority feasible strategy. A full pair inside
    // an SR cell supports both the in-cell and the base-station delivery
    // by itself (the destination is in the SR), so a pair makes S5
    // feasible outright and S1/S6 are unreachable inside the SR.
    const bool f1 = pairs_full[cell] > 0;
    const bool f2 = count[cell] >= 2;
    const bool f3 = lone_to_sr[cell] > 0;
    const bool f4 = lone_to_out[cell] > 0 && someone_in_b;
    if (f1) return Strategy::S5;
    if (f2 && f3) return Strategy::S7;
    if (f2 && f4) return Strategy::S8;
    if (f2) return Strategy::S2;
    if (f3) return Strategy::S3;
    if (f4) return Strategy::S4;
    return Strategy::S0;
  }
};

}  // namespace detail

template <class Rng>
Placement sample_placement_iid(const StationaryDistribution& pi, int n,
                               Rng& rng) {
  if (n < 1) throw model_error("need at least one node");
  detail::CellSampler sampler(pi);
  Placement placement;
  placement.cell_of.resize(n);
  for (int i = 0; i < n; ++i) placement.cell_of[i] = sampler.draw(rng);
  return placement;
}

template <class Rng>
Placement step_markov(const Placement& placement, const TransitionMatrix& P,
                      Rng& rng) {
  Placement next;
  next.cell_of.resize(placement.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < placement.size(); ++i) {
    const int row = placement.cell_of[i];
    if (row < 0 || row >= P.dim())
      throw model_error("placement cell outside transition matrix dimension");
    double u = unit(rng);
    int chosen = P.dim() - 1;
    double acc = 0.0;
    for (int j = 0; j < P.dim(); ++j) {
      acc += P.at(row, j);
      if (u < acc) {
        chosen = j;
        break;
      }
    }
    next.cell_of[i] = chosen;
  }
  return next;
}

inline Strategy classify_cell(int cell, const Placement& placement,
                              const FlowPairing& pairing,
                              const GridTopology& topo, ClassifierMode mode) {
  if (cell < 0 || cell >= topo.cell_count())
    throw model_error("cell index out of range");
  detail::CellStats stats;
  stats.compute(placement, pairing, topo);
  return stats.classify(cell, topo, mode);
}

struct ProbabilityEstimates {
  std::array<EmpiricalEstimate, 8> p{};
  std::array<EmpiricalEstimate, 2> q{};
  EmpiricalEstimate mu;  // per-slot plug-in of the sampled frequencies
};

// Per-slot i.i.d. sampling from pi by default; passing a transition matrix
// switches to a single Markov trajectory with 10*C warm-up slots.
inline ProbabilityEstimates estimate_strategy_probs(
    const GridTopology& topo, const FlowPairing& pairing,
    const StationaryDistribution& pi, long long slots, ClassifierMode mode,
    const RatePair& rates, std::uint64_t seed,
    const TransitionMatrix* trajectory = nullptr) {
  if (slots < 1) throw model_error("need at least one slot");
  if (pi.dim() != topo.cell_count())
    throw model_error("stationary distribution does not match topology");

  const int C = topo.cell_count();
  const int A = topo.sr_size();
  const double d = static_cast<double>(pairing.n) / C;
  std::mt19937_64 rng(seed);
  detail::CellSampler sampler(pi);

  std::array<detail::Accumulator, 8> acc_p;
  std::array<detail::Accumulator, 2> acc_q;
  detail::Accumulator acc_mu;

  std::array<double, 8> alpha{};
  std::array<double, 2> beta{};
  for (int m = 1; m <= 8; ++m)
    alpha[m - 1] = strategy_coefficient(static_cast<Strategy>(m), rates, true);
  for (int m = 1; m <= 2; ++m)
    beta[m - 1] = strategy_coefficient(static_cast<Strategy>(m), rates, false);

  Placement placement;
  placement.cell_of.resize(pairing.n);
  if (trajectory) {
    placement = sample_placement_iid(pi, pairing.n, rng);
    for (int t = 0; t < 10 * C; ++t)
      placement = step_markov(placement, *trajectory, rng);
  }

  detail::CellStats stats;
  for (long long t = 0; t < slots; ++t) {
    if (trajectory) {
      placement = step_markov(placement, *trajectory, rng);
    } else {
      for (int i = 0; i < pairing.n; ++i)
        placement.cell_of[i] = sampler.draw(rng);
    }
    stats.compute(placement, pairing, topo);

    std::array<double, 8> slot_p{};
    std::array<double, 2> slot_q{};
    for (int c = 0; c < C; ++c) {
      const Strategy s = stats.classify(c, topo, mode);
      if (s == Strategy::S0) continue;
      if (topo.in_sr(c))
        slot_p[static_cast<int>(s) - 1] += 1.0;
      else
        slot_q[static_cast<int>(s) - 1] += 1.0;
    }
    double mu_slot = 0.0;
    for (int m = 0; m < 8; ++m) {
      const double x = (A > 0) ? slot_p[m] / A : 0.0;
      acc_p[m].add(x);
      mu_slot += (static_cast<double>(A) / C) * alpha[m] * x;
    }
    for (int m = 0; m < 2; ++m) {
      const double x = (C - A > 0) ? slot_q[m] / (C - A) : 0.0;
      acc_q[m].add(x);
      mu_slot += (static_cast<double>(C - A) / C) * beta[m] * x;
    }
    acc_mu.add(mu_slot / (2.0 * d));
  }

  ProbabilityEstimates out;
  for (int m = 0; m < 8; ++m) out.p[m] = acc_p[m].estimate();
  for (int m = 0; m < 2; ++m) out.q[m] = acc_q[m].estimate();
  out.mu = acc_mu.estimate();
  return out;
}

struct ExactProbabilities {
  std::array<double, 8> p{};
  std::array<double, 2> q{};
};

// Ground-truth oracle: iterates all C^N placements, weighting each by its
// i.i.d. probability under pi. Guarded at C^N <= 1e7.
inline ExactProbabilities enumerate_exact(const GridTopology& topo,
                                          const FlowPairing& pairing,
                                          const StationaryDistribution& pi,
                                          ClassifierMode mode) {
  const int C = topo.cell_count();
  const int A = topo.sr_size();
  const int N = pairing.n;
  if (pi.dim() != C)
    throw model_error("stationary distribution does not match topology");
  const double states = std::pow(static_cast<double>(C), N);
  if (states > 1e7)
    throw model_error("enumeration refused: C^N = " + std::to_string(states) +
                      " exceeds the 1e7 guard");

  ExactProbabilities out;
  Placement placement;
  placement.cell_of.assign(N, 0);
  detail::CellStats stats;

  while (true) {
    double weight = 1.0;
    for (int i = 0; i < N; ++i) weight *= pi.pi[placement.cell_of[i]];
    if (weight > 0.0) {
      stats.compute(placement, pairing, topo);
      for (int c = 0; c < C; ++c) {
        const Strategy s = stats.classify(c, topo, mode);
        if (s == Strategy::S0) continue;
        if (topo.in_sr(c))
          out.p[static_cast<int>(s) - 1] += weight;
        else
          out.q[static_cast<int>(s) - 1] += weight;
      }
    }
    int pos = N - 1;
    while (pos >= 0 && placement.cell_of[pos] == C - 1)
      placement.cell_of[pos--] = 0;
    if (pos < 0) break;
    ++placement.cell_of[pos];
  }

  for (auto& v : out.p) v = (A > 0) ? v / A : 0.0;
  for (auto& v : out.q) v = (C - A > 0) ? v / (C - A) : 0.0;
  return out;
}

struct ThroughputReport {
  double offered_rate = 0.0;  // packets/slot/node
  EmpiricalEstimate delivered_rate;
  double bound = 0.0;
  long long slots = 0;
  long long undelivered_backlog = 0;
};

// Packet-level two-hop relay simulation. Per cell and slot at most one ad
// hoc sender (R1 packets of one flow) and, inside the SR, at most one
// base-station sender (R2 packets of one flow). Packets take at most one
// hop per slot; relays never re-hand to other relays.
inline ThroughputReport run_relay_simulation(
    const GridTopology& topo, const FlowPairing& pairing,
    const RatePair& rates, const StationaryDistribution& pi, double lambda,
    int a_max, long long slots, std::uint64_t seed,
    const TransitionMatrix* trajectory = nullptr) {
  if (lambda < 0.0) throw model_error("arrival rate must be non-negative");
  if (a_max < 1) throw model_error("a_max must be >= 1");
  if (slots < 1) throw model_error("need at least one slot");
  if (pi.dim() != topo.cell_count())
    throw model_error("stationary distribution does not match topology");

  const int C = topo.cell_count();
  const int N = pairing.n;
  const int r1_cap = static_cast<int>(std::floor(rates.r1));
  const int r2_cap = static_cast<int>(std::floor(rates.r2));
  const double bernoulli_p = std::min(1.0, lambda / a_max);

  std::mt19937_64 rng(seed);
  detail::CellSampler sampler(pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<long long> src_q(N, 0);
  // relay_q[holder] -> (destination, packet count) buckets
  std::vector<std::vector<std::pair<int, long long>>> relay_q(N);
  auto relay_add = [&](int holder, int dest, long long k) {
    for (auto& bucket : relay_q[holder]) {
      if (bucket.first == dest) {
        bucket.second += k;
        return;
      }
    }
    relay_q[holder].push_back({dest, k});
  };

  Placement placement;
  placement.cell_of.resize(N);
  if (trajectory) placement = sample_placement_iid(pi, N, rng);

  std::vector<std::vector<int>> occupants(C);
  detail::Accumulator delivered_acc;
  long long total_arrivals = 0;

  for (long long t = 0; t < slots; ++t) {
    if (trajectory) {
      placement = step_markov(placement, *trajectory, rng);
    } else {
      for (int i = 0; i < N; ++i) placement.cell_of[i] = sampler.draw(rng);
    }
    if (bernoulli_p > 0.0) {
      for (int i = 0; i < N; ++i) {
        int k = 0;
        for (int a = 0; a < a_max; ++a)
          if (unit(rng) < bernoulli_p) ++k;
        src_q[i] += k;
        total_arrivals += k;
      }
    }

    for (auto& occ : occupants) occ.clear();
    int sr_nodes = 0;
    for (int i = 0; i < N; ++i) {
      occupants[placement.cell_of[i]].push_back(i);
      if (topo.in_sr(placement.cell_of[i])) ++sr_nodes;
    }

    long long delivered_slot = 0;

    for (int c = 0; c < C; ++c) {
      const auto& occ = occupants[c];
      if (occ.empty()) continue;

      // Ad hoc channel: direct delivery, then relay delivery, then handoff.
      if (r1_cap > 0 && occ.size() >= 2) {
        bool sent = false;
        for (int j : occ) {
          if (src_q[j] > 0 && placement.cell_of[pairing.partner(j)] == c) {
            const long long k = std::min<long long>(src_q[j], r1_cap);
            src_q[j] -= k;
            delivered_slot += k;
            sent = true;
            break;
          }
        }
        if (!sent) {
          for (int j : occ) {
            for (auto& bucket : relay_q[j]) {
              if (bucket.second > 0 && placement.cell_of[bucket.first] == c) {
                const long long k = std::min<long long>(bucket.second, r1_cap);
                bucket.second -= k;
                delivered_slot += k;
                sent = true;
                break;
              }
            }
            if (sent) break;
          }
        }
        if (!sent) {
          for (int j : occ) {
            if (src_q[j] == 0) continue;
            // hand to a uniformly chosen co-located node (partner was not
            // here, so any other occupant is a valid relay)
            std::vector<int> candidates;
            for (int k : occ)
              if (k != j) candidates.push_back(k);
            if (candidates.empty()) continue;
            const int relay = candidates[static_cast<size_t>(
                unit(rng) * candidates.size())];
            const long long k = std::min<long long>(src_q[j], r1_cap);
            src_q[j] -= k;
            relay_add(relay, pairing.partner(j), k);
            break;
          }
        }
      }

      // Base-station channel, SR cells only.
      if (r2_cap > 0 && topo.in_sr(c)) {
        const bool someone_in_b = sr_nodes - static_cast<int>(occ.size()) > 0;
        bool sent = false;
        for (int j : occ) {
          const int pc = placement.cell_of[pairing.partner(j)];
          if (src_q[j] > 0 && pc != c && topo.in_sr(pc)) {
            const long long k = std::min<long long>(src_q[j], r2_cap);
            src_q[j] -= k;
            delivered_slot += k;
            sent = true;
            break;
          }
        }
        if (!sent) {
          for (int j : occ) {
            for (auto& bucket : relay_q[j]) {
              const int dc = placement.cell_of[bucket.first];
              if (bucket.second > 0 && dc != c && topo.in_sr(dc)) {
                const long long k = std::min<long long>(bucket.second, r2_cap);
                bucket.second -= k;
                delivered_slot += k;
                sent = true;
                break;
              }
            }
            if (sent) break;
          }
        }
        if (!sent && someone_in_b) {
          for (int j : occ) {
            if (src_q[j] == 0) continue;
            if (topo.in_sr(placement.cell_of[pairing.partner(j)])) continue;
            std::vector<int> candidates;
            for (int i = 0; i < N; ++i) {
              const int ci = placement.cell_of[i];
              if (ci != c && topo.in_sr(ci)) candidates.push_back(i);
            }
            if (candidates.empty()) break;
            const int relay = candidates[static_cast<size_t>(
                unit(rng) * candidates.size())];
            const long long k = std::min<long long>(src_q[j], r2_cap);
            src_q[j] -= k;
            relay_add(relay, pairing.partner(j), k);
            break;
          }
        }
      }
    }

    delivered_acc.add(static_cast<double>(delivered_slot) / N);
  }

  ThroughputReport report;
  report.offered_rate = static_cast<double>(total_arrivals) / (slots * N);
  report.delivered_rate = delivered_acc.estimate();
  report.slots = slots;
  long long backlog = 0;
  for (int i = 0; i < N; ++i) {
    backlog += src_q[i];
    for (const auto& bucket : relay_q[i]) backlog += bucket.second;
  }
  report.undelivered_backlog = backlog;
  report.bound =
      capacity_bound(
          strategy_probs_general(pi, topo, N, Variant::EventConsistent), rates,
          C, topo.sr_size(), static_cast<double>(N) / C)
          .mu;
  return report;
}

}  // namespace cellcap
