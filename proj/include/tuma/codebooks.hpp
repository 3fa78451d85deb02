#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <span>
#include <vector>

#include "tuma/rng.hpp"
#include "tuma/types.hpp"

namespace tuma {

// ---------------------------------------------------------------------------
// Quantization codebook
// ---------------------------------------------------------------------------

/// Regular grid of M = rows * cols congruent cells over the unit square.
/// Cell (r, c) has index r * cols + c and centroid ((c + .5)/cols, (r + .5)/rows).
class QuantCodebook {
 public:
  explicit QuantCodebook(int size) : size_(size) {
    if (size < 2) throw ConfigError("quantization codebook needs M >= 2");
    const int b = log2_exact(static_cast<std::uint64_t>(size));
    rows_ = 1 << ((b + 1) / 2);
    cols_ = 1 << (b / 2);
    centroids_.reserve(static_cast<std::size_t>(size));
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c)
        centroids_.push_back({(c + 0.5) / cols_, (r + 0.5) / rows_});
  }

  int size() const noexcept { return size_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  const std::vector<Point>& centroids() const noexcept { return centroids_; }
  const Point& centroid(int index) const { return centroids_.at(static_cast<std::size_t>(index)); }

  /// Nearest centroid by cell arithmetic. Points on a cell boundary go to
  /// the lower index.
  int quantize(const Point& p) const {
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0))
      throw DomainError("point outside the unit square");
    const int c = cell(p.x, cols_);
    const int r = cell(p.y, rows_);
    return r * cols_ + c;
  }

 private:
  static int cell(double coord, int dim) {
    const int idx = static_cast<int>(std::ceil(coord * dim)) - 1;
    return std::clamp(idx, 0, dim - 1);
  }

  int size_;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Point> centroids_;
};

inline QuantCodebook grid_codebook(int size) { return QuantCodebook(size); }

// ---------------------------------------------------------------------------
// Walsh-Hadamard transform
// ---------------------------------------------------------------------------

/// Unnormalized in-place Walsh-Hadamard transform in Sylvester (natural) order.
inline void fwht_inplace(std::span<double> v) {
  const std::size_t len = v.size();
  if (!is_power_of_two(len)) throw ConfigError("fwht length must be a power of 2");
  for (std::size_t h = 1; h < len; h <<= 1) {
    for (std::size_t i = 0; i < len; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

inline std::vector<double> fwht(std::vector<double> v) {
  fwht_inplace(v);
  return v;
}

// ---------------------------------------------------------------------------
// Communication codebook
// ---------------------------------------------------------------------------

/// Which Sylvester rows a truncated Hadamard codebook keeps when n < M.
enum class RowSelection {
  random,   // n distinct rows drawn from 1..M-1 with a fixed seed
  leading,  // rows 1..n
};

/// n x M real codebook with unit-norm columns. Either a truncated
/// Sylvester-Hadamard matrix (applied via the fast transform) or an arbitrary
/// dense matrix.
///
/// Truncation: for n < M, n rows other than row 0 (the all-ones row) are kept
/// and scaled by 1/sqrt(n). The leading rows 1..n alias badly: when
/// n <= M/2, columns i and i + 2^ceil(log2 n) coincide, so the default keeps
/// a pseudo-random subset instead. For n >= M all M rows are kept, scaled by
/// 1/sqrt(M), and the remaining n - M rows are zero.
class CommCodebook {
 public:
  static constexpr std::uint64_t kDefaultRowSeed = 0x7475'6d61'726f'7773ULL;

  /// Truncated Hadamard codebook. With `sign_rng`, each column is multiplied
  /// by an independent random sign.
  static CommCodebook hadamard(int n, int size, RowSelection selection = RowSelection::random,
                               std::uint64_t row_seed = kDefaultRowSeed, Rng* sign_rng = nullptr) {
    if (n < 1 || size < 2) throw ConfigError("hadamard codebook needs n >= 1, M >= 2");
    log2_exact(static_cast<std::uint64_t>(size));
    CommCodebook cb;
    cb.n_ = n;
    cb.size_ = size;
    cb.fast_ = true;
    if (n < size) {
      cb.rows_.resize(static_cast<std::size_t>(n));
      if (selection == RowSelection::leading) {
        for (int j = 0; j < n; ++j) cb.rows_[j] = j + 1;
      } else {
        // Partial Fisher-Yates over 1..M-1, then sorted for locality.
        std::vector<int> pool(static_cast<std::size_t>(size - 1));
        for (int i = 0; i < size - 1; ++i) pool[i] = i + 1;
        Rng rng(row_seed);
        for (int j = 0; j < n; ++j) {
          const auto pick = j + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 1 - j)));
          std::swap(pool[j], pool[pick]);
        }
        cb.rows_.assign(pool.begin(), pool.begin() + n);
        std::sort(cb.rows_.begin(), cb.rows_.end());
      }
    } else {
      cb.rows_.resize(static_cast<std::size_t>(size));
      for (int j = 0; j < size; ++j) cb.rows_[j] = j;
    }
    cb.scale_ = 1.0 / std::sqrt(static_cast<double>(cb.rows_.size()));
    if (sign_rng != nullptr) {
      cb.signs_.resize(size);
      for (int i = 0; i < size; ++i) cb.signs_[i] = (sign_rng->below(2) == 0) ? 1.0 : -1.0;
    }
    return cb;
  }

  /// Sylvester row indices kept (empty for a dense codebook).
  const std::vector<int>& hadamard_rows() const noexcept { return rows_; }

  /// Arbitrary codebook; every column must have norm <= 1.
  static CommCodebook dense(Eigen::MatrixXd matrix) {
    if (matrix.rows() < 1 || matrix.cols() < 1) throw ConfigError("empty codebook matrix");
    for (Eigen::Index i = 0; i < matrix.cols(); ++i)
      if (matrix.col(i).norm() > 1.0 + 1e-12) throw ConfigError("codebook column norm exceeds 1");
    CommCodebook cb;
    cb.n_ = static_cast<int>(matrix.rows());
    cb.size_ = static_cast<int>(matrix.cols());
    cb.fast_ = false;
    cb.squared_ = matrix.cwiseAbs2();
    cb.matrix_ = std::move(matrix);
    return cb;
  }

  int n() const noexcept { return n_; }
  int size() const noexcept { return size_; }
  bool has_fast_transform() const noexcept { return fast_; }

  /// C k
  Eigen::VectorXd apply(const Eigen::VectorXd& k) const {
    if (k.size() != size_) throw ConfigError("apply: length must equal M");
    if (!fast_) return matrix_ * k;
    std::vector<double> work(k.data(), k.data() + size_);
    if (!signs_.empty())
      for (int i = 0; i < size_; ++i) work[i] *= signs_[i];
    fwht_inplace(work);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (std::size_t j = 0; j < rows_.size(); ++j) out[j] = scale_ * work[rows_[j]];
    return out;
  }

  /// C^T z
  Eigen::VectorXd adjoint(const Eigen::VectorXd& z) const {
    if (z.size() != n_) throw ConfigError("adjoint: length must equal n");
    if (!fast_) return matrix_.transpose() * z;
    std::vector<double> work(static_cast<std::size_t>(size_), 0.0);
    for (std::size_t j = 0; j < rows_.size(); ++j) work[rows_[j]] = z[j];
    fwht_inplace(work);
    Eigen::VectorXd out(size_);
    for (int i = 0; i < size_; ++i) out[i] = scale_ * work[i] * (signs_.empty() ? 1.0 : signs_[i]);
    return out;
  }

  /// (C .* C) w, the entrywise-squared codebook applied to w.
  Eigen::VectorXd apply_squared(const Eigen::VectorXd& w) const {
    if (w.size() != size_) throw ConfigError("apply_squared: length must equal M");
    if (!fast_) return squared_ * w;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    out.head(used_rows()).setConstant(scale_ * scale_ * w.sum());
    return out;
  }

  /// (C .* C)^T u
  Eigen::VectorXd adjoint_squared(const Eigen::VectorXd& u) const {
    if (u.size() != n_) throw ConfigError("adjoint_squared: length must equal n");
    if (!fast_) return squared_.transpose() * u;
    return Eigen::VectorXd::Constant(size_, scale_ * scale_ * u.head(used_rows()).sum());
  }

  /// Materialized n x M matrix.
  Eigen::MatrixXd to_dense() const {
    if (!fast_) return matrix_;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, size_);
    // Sylvester entry (r, c) is (-1)^popcount(r & c).
    for (int j = 0; j < used_rows(); ++j) {
      const auto r = static_cast<unsigned>(rows_[j]);
      for (int i = 0; i < size_; ++i) {
        const double s = (std::popcount(r & static_cast<unsigned>(i)) & 1) ? -scale_ : scale_;
        out(j, i) = signs_.empty() ? s : s * signs_[i];
      }
    }
    return out;
  }

 private:
  CommCodebook() = default;

  int n_ = 0;
  int size_ = 0;
  bool fast_ = false;
  int used_rows() const noexcept { return static_cast<int>(rows_.size()); }

  std::vector<int> rows_;
  double scale_ = 1.0;
  std::vector<double> signs_;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd squared_;
};

inline CommCodebook hadamard_codebook(int n, int size, RowSelection selection = RowSelection::random) {
  return CommCodebook::hadamard(n, size, selection);
}

}  // namespace tuma
