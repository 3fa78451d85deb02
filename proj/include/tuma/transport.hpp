#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace tuma {

template <class Mass>
struct TransportSolution {
  Eigen::Matrix<Mass, Eigen::Dynamic, Eigen::Dynamic> flow;  // rows x cols
  double cost = 0.0;                                          // sum flow * cost
  int pivots = 0;
};

/// Balanced transportation problem solved exactly by the primal
/// transportation simplex (network simplex on the complete bipartite graph).
///
/// The basis is a spanning tree of rows+cols-1 cells, initialized by the
/// northwest-corner rule. Pricing is Dantzig's most-negative rule; after a
/// run of degenerate pivots it switches to Bland's smallest-index rule for
/// both the entering and the leaving cell, which cannot cycle.
///
/// Mass may be an integer type (exact flows) or floating point.
template <class Mass>
  requires std::integral<Mass> || std::floating_point<Mass>
class TransportationSimplex {
 public:
  TransportationSimplex(std::span<const Mass> supply, std::span<const Mass> demand,
                        const Eigen::MatrixXd& cost)
      : rows_(static_cast<int>(supply.size())),
        cols_(static_cast<int>(demand.size())),
        cost_(cost) {
    if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("transport: empty marginal");
    if (cost.rows() != rows_ || cost.cols() != cols_)
      throw std::invalid_argument("transport: cost matrix shape mismatch");
    Mass s_total{}, d_total{};
    for (Mass s : supply) {
      if (s < Mass{}) throw std::invalid_argument("transport: negative supply");
      s_total += s;
    }
    for (Mass d : demand) {
      if (d < Mass{}) throw std::invalid_argument("transport: negative demand");
      d_total += d;
    }
    if constexpr (std::integral<Mass>) {
      if (s_total != d_total) throw std::invalid_argument("transport: unbalanced marginals");
    } else {
      const double scale = std::max<double>(1.0, static_cast<double>(s_total));
      if (std::abs(static_cast<double>(s_total - d_total)) > 1e-9 * scale)
        throw std::invalid_argument("transport: unbalanced marginals");
      mass_eps_ = 1e-14 * scale;
    }
    double cmax = 0.0;
    for (Eigen::Index i = 0; i < cost.size(); ++i) cmax = std::max(cmax, std::abs(cost.data()[i]));
    cost_eps_ = 1e-13 * std::max(1.0, cmax);

    flow_.setZero(rows_, cols_);
    basic_.assign(static_cast<std::size_t>(rows_) * cols_, false);
    row_adj_.resize(rows_);
    col_adj_.resize(cols_);
    north_west(supply, demand);
  }

  TransportSolution<Mass> solve() {
    potentials();
    int degenerate_run = 0;
    for (;;) {
      const bool bland = degenerate_run > kBlandAfter;
      int ei = -1, ej = -1;
      if (!price(bland, ei, ej)) break;
      if (pivot(ei, ej, bland)) {
        ++degenerate_run;
      } else {
        degenerate_run = 0;
      }
      ++pivots_;
      potentials();
    }
    TransportSolution<Mass> out;
    out.flow = flow_;
    out.pivots = pivots_;
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        out.cost += static_cast<double>(flow_(i, j)) * cost_(i, j);
    return out;
  }

 private:
  static constexpr int kBlandAfter = 32;

  bool is_basic(int i, int j) const { return basic_[static_cast<std::size_t>(i) * cols_ + j]; }

  void add_basic(int i, int j) {
    basic_[static_cast<std::size_t>(i) * cols_ + j] = true;
    row_adj_[i].push_back(j);
    col_adj_[j].push_back(i);
  }

  void remove_basic(int i, int j) {
    basic_[static_cast<std::size_t>(i) * cols_ + j] = false;
    std::erase(row_adj_[i], j);
    std::erase(col_adj_[j], i);
  }

  bool exhausted(Mass v) const {
    if constexpr (std::integral<Mass>) {
      return v == 0;
    } else {
      return v <= mass_eps_;
    }
  }

  void north_west(std::span<const Mass> supply, std::span<const Mass> demand) {
    std::vector<Mass> s(supply.begin(), supply.end());
    std::vector<Mass> d(demand.begin(), demand.end());
    int i = 0, j = 0;
    for (;;) {
      const Mass q = std::min(s[i], d[j]);
      flow_(i, j) = q;
      add_basic(i, j);
      s[i] -= q;
      d[j] -= q;
      if (i == rows_ - 1 && j == cols_ - 1) break;
      if (j == cols_ - 1 || (i < rows_ - 1 && exhausted(s[i]))) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Duals u_i + v_j = c_ij on the basic tree, u_0 = 0.
  void potentials() {
    u_.assign(rows_, 0.0);
    v_.assign(cols_, 0.0);
    std::vector<char> row_seen(rows_, 0), col_seen(cols_, 0);
    std::vector<int> stack{0};  // row nodes >= 0, col nodes encoded as ~j
    row_seen[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node >= 0) {
        for (int j : row_adj_[node]) {
          if (col_seen[j]) continue;
          col_seen[j] = 1;
          v_[j] = cost_(node, j) - u_[node];
          stack.push_back(~j);
        }
      } else {
        const int j = ~node;
        for (int i : col_adj_[j]) {
          if (row_seen[i]) continue;
          row_seen[i] = 1;
          u_[i] = cost_(i, j) - v_[j];
          stack.push_back(i);
        }
      }
    }
  }

  bool price(bool bland, int& ei, int& ej) const {
    double best = -cost_eps_;
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) {
        if (is_basic(i, j)) continue;
        const double rc = cost_(i, j) - u_[i] - v_[j];
        if (rc < best) {
          ei = i;
          ej = j;
          if (bland) return true;
          best = rc;
        }
      }
    }
    return ei >= 0;
  }

  // Returns true when the pivot was degenerate (theta == 0).
  bool pivot(int ei, int ej, bool bland) {
    // Tree path from row ei to col ej.
    const int nodes = rows_ + cols_;
    std::vector<int> parent(nodes, -2);
    std::vector<int> queue{ei};
    parent[ei] = -1;
    const int target = rows_ + ej;
    for (std::size_t head = 0; head < queue.size() && parent[target] == -2; ++head) {
      const int node = queue[head];
      if (node < rows_) {
        for (int j : row_adj_[node]) {
          if (parent[rows_ + j] != -2) continue;
          parent[rows_ + j] = node;
          queue.push_back(rows_ + j);
        }
      } else {
        for (int i : col_adj_[node - rows_]) {
          if (parent[i] != -2) continue;
          parent[i] = node;
          queue.push_back(i);
        }
      }
    }

    // Walk back from the column; path edges alternate -, +, -, ... starting
    // at the column end, and both end edges are '-'.
    struct Cell {
      int i, j;
    };
    std::vector<Cell> minus, plus;
    bool sign_minus = true;
    for (int node = target; parent[node] != -1; node = parent[node]) {
      const int prev = parent[node];
      const Cell c = node >= rows_ ? Cell{prev, node - rows_} : Cell{node, prev - rows_};
      (sign_minus ? minus : plus).push_back(c);
      sign_minus = !sign_minus;
    }

    Mass theta = std::numeric_limits<Mass>::max();
    for (const auto& c : minus) theta = std::min(theta, flow_(c.i, c.j));
    // Leaving cell: smallest row-major index among the minimizers under
    // Bland, otherwise the first minimizer found.
    Cell leave{-1, -1};
    for (const auto& c : minus) {
      if (flow_(c.i, c.j) != theta) continue;
      if (leave.i < 0 || (bland && (c.i * cols_ + c.j) < (leave.i * cols_ + leave.j))) {
        leave = c;
        if (!bland) break;
      }
    }

    for (const auto& c : minus) flow_(c.i, c.j) -= theta;
    for (const auto& c : plus) flow_(c.i, c.j) += theta;
    if constexpr (std::floating_point<Mass>) {
      for (const auto& c : minus)
        if (flow_(c.i, c.j) < mass_eps_) flow_(c.i, c.j) = Mass{};
    }
    flow_(ei, ej) = theta;
    flow_(leave.i, leave.j) = Mass{};
    remove_basic(leave.i, leave.j);
    add_basic(ei, ej);
    return exhausted(theta);
  }

  int rows_;
  int cols_;
  const Eigen::MatrixXd& cost_;
  Eigen::Matrix<Mass, Eigen::Dynamic, Eigen::Dynamic> flow_;
  std::vector<bool> basic_;
  std::vector<std::vector<int>> row_adj_;
  std::vector<std::vector<int>> col_adj_;
  std::vector<double> u_, v_;
  double cost_eps_ = 0.0;
  Mass mass_eps_{};
  int pivots_ = 0;
};

template <class Mass>
TransportSolution<Mass> solve_transport(std::span<const Mass> supply, std::span<const Mass> demand,
                                        const Eigen::MatrixXd& cost) {
  return TransportationSimplex<Mass>(supply, demand, cost).solve();
}

}  // namespace tuma
