#pragma once

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cellcap/core.hpp"

// Node mobility: per-slot Markov transition matrices over cells and their
// stationary distributions (pi P = pi).

namespace cellcap {

class TransitionMatrix {
public:
  // Takes row-major dense data; every row must sum to 1 within 1e-12.
  TransitionMatrix(int dim, std::vector<double> data)
      : dim_(dim), data_(std::move(data)) {
    if (dim < 1 || data_.size() != static_cast<size_t>(dim) * dim)
      throw model_error("transition matrix: bad dimensions");
    for (int i = 0; i < dim_; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < dim_; ++j) {
        const double v = at(i, j);
        if (v < 0.0 || v > 1.0)
          throw model_error("transition matrix: entry outside [0,1] at row " +
                            std::to_string(i));
        row_sum += v;
      }
      if (std::abs(row_sum - 1.0) > 1e-12)
        throw model_error("transition matrix: row " + std::to_string(i) +
                          " sums to " + std::to_string(row_sum));
    }
  }

  int dim() const { return dim_; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i) * dim_ + j]; }
  const std::vector<double>& data() const { return data_; }

  // Dense C x C rows of whitespace-separated decimals, one row per line.
  static TransitionMatrix from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw model_error("cannot open transition matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::vector<double> row;
      double v;
      while (ls >> v) row.push_back(v);
      if (!ls.eof() && ls.fail())
        throw model_error("transition matrix file: non-numeric token in " + path);
      if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty())
      throw model_error("transition matrix file is empty: " + path);
    const int dim = static_cast<int>(rows.size());
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(dim) * dim);
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != dim)
        throw model_error("transition matrix file: ragged rows in " + path);
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return TransitionMatrix(dim, std::move(flat));
  }

private:
  int dim_;
  std::vector<double> data_;
};

struct StationaryDistribution {
  std::vector<double> pi;

  int dim() const { return static_cast<int>(pi.size()); }

  static StationaryDistribution uniform(int cells) {
    return StationaryDistribution{std::vector<double>(cells, 1.0 / cells)};
  }
};

// Walk to the 8 surrounding cells on a torus-wrapped grid. Mass
// (1 - stay_probability) is split equally among the 8 direction offsets;
// wrap-around can map several offsets onto one cell, in which case that
// cell collects the multiplicity. The result is doubly stochastic.
inline TransitionMatrix neighbor_walk_matrix(const GridTopology& topo,
                                             double stay_probability = 0.0) {
  if (stay_probability < 0.0 || stay_probability >= 1.0)
    throw model_error("stay probability must be in [0, 1)");
  const int w = topo.width();
  const int h = topo.height();
  const int c = topo.cell_count();
  const double step = (1.0 - stay_probability) / 8.0;
  std::vector<double> data(static_cast<size_t>(c) * c, 0.0);
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const int i = topo.cell_index(row, col);
      data[static_cast<size_t>(i) * c + i] += stay_probability;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int nr = ((row + dr) % h + h) % h;
          const int nc = ((col + dc) % w + w) % w;
          data[static_cast<size_t>(i) * c + topo.cell_index(nr, nc)] += step;
        }
      }
    }
  }
  // Wrapped offsets can pile eight summands onto one entry; squeeze out
  // the resulting half-ulp excursions past 1 before validating.
  for (double& v : data) v = std::min(1.0, std::max(0.0, v));
  return TransitionMatrix(c, std::move(data));
}

inline double stationarity_residual(const StationaryDistribution& dist,
                                    const TransitionMatrix& P) {
  const int n = P.dim();
  if (dist.dim() != n)
    throw model_error("stationarity residual: dimension mismatch");
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += dist.pi[i] * P.at(i, j);
    worst = std::max(worst, std::abs(v - dist.pi[j]));
  }
  return worst;
}

// Fixed-point iteration pi <- pi P from the given start (uniform by
// default), stopping once the infinity-norm residual is below tolerance.
inline StationaryDistribution stationary_distribution(
    const TransitionMatrix& P, double tolerance = 1e-10,
    int max_iterations = 200000,
    const std::vector<double>* start = nullptr) {
  const int n = P.dim();
  std::vector<double> pi;
  if (start) {
    if (static_cast<int>(start->size()) != n)
      throw model_error("stationary distribution: bad start vector size");
    pi = *start;
    double s = std::accumulate(pi.begin(), pi.end(), 0.0);
    if (s <= 0.0) throw model_error("stationary distribution: start vector must have positive mass");
    for (double& v : pi) v /= s;
  } else {
    pi.assign(n, 1.0 / n);
  }
  std::vector<double> next(n);
  double residual = 0.0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double w = pi[i];
      if (w == 0.0) continue;
      for (int j = 0; j < n; ++j) next[j] += w * P.at(i, j);
    }
    residual = 0.0;
    for (int j = 0; j < n; ++j)
      residual = std::max(residual, std::abs(next[j] - pi[j]));
    pi.swap(next);
    if (residual <= tolerance) {
      // renormalize away accumulated rounding
      double s = std::accumulate(pi.begin(), pi.end(), 0.0);
      for (double& v : pi) v /= s;
      return StationaryDistribution{std::move(pi)};
    }
  }
  throw convergence_error(
      "stationary distribution did not converge; final residual " +
      std::to_string(residual) +
      " (non-ergodic or periodic chain?)");
}

}  // namespace cellcap
