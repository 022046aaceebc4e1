#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

// Static structure of the cell-partitioned hybrid network: the cell grid
// with its switchable region (SR), transmission rates, source-destination
// pairing, and the per-cell transmission strategies with their rate
// coefficients.

namespace cellcap {

class model_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class convergence_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// The nine per-cell per-slot transmission strategies. S1/S2 are intra-cell
// ad hoc sends (destination local / non-local), S3/S4 are base-station sends
// (destination inside / outside the SR), S5-S8 are the four combinations.
enum class Strategy : int { S0 = 0, S1, S2, S3, S4, S5, S6, S7, S8 };

inline const char* strategy_name(Strategy s) {
  static constexpr const char* names[] = {"S0", "S1", "S2", "S3", "S4",
                                          "S5", "S6", "S7", "S8"};
  return names[static_cast<int>(s)];
}

// Cell grid with an explicit switchable-region cell set. Cells are indexed
// 0-based row-major; the SR may be any subset (asymmetric regions included).
class GridTopology {
public:
  GridTopology(int width, int height, std::vector<int> sr_cells)
      : width_(width), height_(height) {
    if (width < 1 || height < 1)
      throw model_error("invalid topology: grid dimensions must be positive");
    const int c = width * height;
    sr_mask_.assign(c, 0);
    for (int idx : sr_cells) {
      if (idx < 0 || idx >= c)
        throw model_error("invalid topology: SR cell index " +
                          std::to_string(idx) + " out of range [0, " +
                          std::to_string(c) + ")");
      if (sr_mask_[idx])
        throw model_error("invalid topology: duplicate SR cell index " +
                          std::to_string(idx));
      sr_mask_[idx] = 1;
    }
    std::sort(sr_cells.begin(), sr_cells.end());
    sr_cells_ = std::move(sr_cells);
  }

  // SR given as a contiguous row-major block of the first `a` cells.
  static GridTopology with_block(int width, int height, int a) {
    if (a < 0 || a > width * height)
      throw model_error("invalid topology: SR block size out of range");
    std::vector<int> cells(a);
    for (int i = 0; i < a; ++i) cells[i] = i;
    return GridTopology(width, height, std::move(cells));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }
  int sr_size() const { return static_cast<int>(sr_cells_.size()); }
  bool in_sr(int cell) const { return sr_mask_[cell] != 0; }
  const std::vector<int>& sr_cells() const { return sr_cells_; }

  int cell_index(int row, int col) const { return row * width_ + col; }

private:
  int width_;
  int height_;
  std::vector<int> sr_cells_;
  std::vector<char> sr_mask_;
};

// Intra-cell ad hoc rate R1 and base-station channel rate R2, with the
// ratio xi = R1/R2. Only the xi >= 2 regime is accepted.
struct RatePair {
  double r1;
  double r2;
  double xi;

  RatePair(double r1_, double r2_) : r1(r1_), r2(r2_), xi(r1_ / r2_) {
    if (!(r1 > 0.0) || !(r2 > 0.0))
      throw model_error("rates must be positive");
    if (xi < 2.0)
      throw model_error("rate ratio R1/R2 must be >= 2");
  }

  static RatePair from_ratio(double r1, double xi) {
    return RatePair(r1, r1 / xi);
  }
};

// Source-destination pairing 1<->2, 3<->4, ... rendered 0-based as the
// fixed involution partner(2k) = 2k+1.
struct FlowPairing {
  int n;

  explicit FlowPairing(int n_) : n(n_) {
    if (n < 2 || n % 2 != 0)
      throw model_error("node count must be even and >= 2");
  }

  int partner(int node) const { return node ^ 1; }
};

struct ModelParams {
  GridTopology topology;
  RatePair rates;
  FlowPairing pairing;

  double density() const {
    return static_cast<double>(pairing.n) / topology.cell_count();
  }
};

// Rate coefficient of a strategy: alpha_m for SR cells, beta_m outside.
// alpha counts total sent plus one-hop deliveries over both channels, so
// e.g. S5 (pair in cell + destination in SR) is worth 2R1 + 2R2.
inline double strategy_coefficient(Strategy kind, const RatePair& rates,
                                   bool in_sr) {
  if (!in_sr) {
    switch (kind) {
      case Strategy::S0: return 0.0;
      case Strategy::S1: return 2.0 * rates.r1;
      case Strategy::S2: return rates.r1;
      default:
        throw model_error(std::string(strategy_name(kind)) +
                          " is not available outside the SR");
    }
  }
  switch (kind) {
    case Strategy::S0: return 0.0;
    case Strategy::S1: return 2.0 * rates.r1;
    case Strategy::S2: return rates.r1;
    case Strategy::S3: return 2.0 * rates.r2;
    case Strategy::S4: return rates.r2;
    case Strategy::S5: return 2.0 * rates.r1 + 2.0 * rates.r2;
    case Strategy::S6: return 2.0 * rates.r1 + rates.r2;
    case Strategy::S7: return rates.r1 + 2.0 * rates.r2;
    case Strategy::S8: return rates.r1 + rates.r2;
  }
  throw model_error("unknown strategy");
}

// Optimal preference order under R1 >= 2R2. Inside the SR:
// S5 > S6 > S7 > S8 > S1 > S2 > S3 > S4 > S0; outside: S1 > S2 > S0.
inline std::vector<Strategy> priority_order(bool in_sr) {
  using S = Strategy;
  if (in_sr)
    return {S::S5, S::S6, S::S7, S::S8, S::S1, S::S2, S::S3, S::S4, S::S0};
  return {S::S1, S::S2, S::S0};
}

}  // namespace cellcap
