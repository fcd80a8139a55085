#pragma once

// Piecewise-multilinear lookup table on a fixed uniform knot grid, fitted by
// regularized least squares.
//
// The table value is the tensor-product hat-function interpolation of the knot
// coefficients. Outside the knot range the boundary cell is extended linearly,
// and the query is flagged as an extrapolation. The fit minimizes
//
//   sum_i (table(x_i) - y_i)^2 + lambda * sum_axes |D2 c|^2
//
// where D2 takes second differences along one axis. The penalty vanishes on
// multilinear functions, so it only decides coefficients the data leaves free.

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace monoland {

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t knots = 32;

  double spacing() const { return (hi - lo) / static_cast<double>(knots - 1); }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const GridAxis&) const = default;
};

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <std::size_t N>
class GridTable {
 public:
  using Point = std::array<double, N>;
  static constexpr std::size_t kCorners = std::size_t{1} << N;

  GridTable() = default;

  explicit GridTable(const std::array<GridAxis, N>& axes) : axes_(axes) {
    std::size_t count = 1;
    for (std::size_t a = 0; a < N; ++a) {
      if (axes_[a].knots < 2) throw std::invalid_argument("grid axis needs at least two knots");
      if (!(axes_[a].hi > axes_[a].lo)) throw std::invalid_argument("grid axis range must be non-empty");
      strides_[a] = count;
      count *= axes_[a].knots;
    }
    coefficients_.assign(count, 0.0);
  }

  const std::array<GridAxis, N>& axes() const { return axes_; }
  std::span<const double> coefficients() const { return coefficients_; }
  std::span<double> coefficients() { return coefficients_; }
  std::size_t size() const { return coefficients_.size(); }

  bool in_hull(const Point& x) const {
    for (std::size_t a = 0; a < N; ++a)
      if (!axes_[a].contains(x[a])) return false;
    return true;
  }

  double operator()(const Point& x) const {
    Stencil st = stencil(x);
    double value = 0.0;
    for (std::size_t k = 0; k < kCorners; ++k) value += st.weight[k] * coefficients_[st.index[k]];
    return value;
  }

  struct FitReport {
    double residual_rms = 0.0;
    std::size_t sample_count = 0;
    std::size_t empty_cells = 0;
    std::size_t degenerate_cells = 0;  // cells with fewer than N + 1 samples
  };

  /// Fits coefficients to (x_i, y_i). When `strict` is set any degenerate
  /// cell aborts the fit; otherwise such cells take their values from the
  /// smoothness prior, i.e. from their neighbors.
  FitReport fit(std::span<const Point> xs, std::span<const double> ys, double smoothing = 1e-3,
                bool strict = false) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit inputs differ in length");
    const std::size_t n = coefficients_.size();
    const std::size_t cells = cell_count();

    // Per-cell accumulation of the local normal equations keeps the triplet
    // list independent of the sample count.
    std::vector<double> local(cells * kCorners * kCorners, 0.0);
    std::vector<std::size_t> cell_samples(cells, 0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

    for (std::size_t i = 0; i < xs.size(); ++i) {
      const Stencil st = stencil(xs[i]);
      const std::size_t cell = st.cell;
      ++cell_samples[cell];
      double* block = &local[cell * kCorners * kCorners];
      for (std::size_t r = 0; r < kCorners; ++r) {
        rhs[static_cast<Eigen::Index>(st.index[r])] += st.weight[r] * ys[i];
        for (std::size_t c = 0; c < kCorners; ++c) block[r * kCorners + c] += st.weight[r] * st.weight[c];
      }
    }

    FitReport report;
    report.sample_count = xs.size();
    for (std::size_t cell = 0; cell < cells; ++cell) {
      if (cell_samples[cell] == 0) ++report.empty_cells;
      if (cell_samples[cell] < N + 1) ++report.degenerate_cells;
    }
    if (strict && report.degenerate_cells > 0)
      throw DegenerateFit("grid fit has " + std::to_string(report.degenerate_cells) + " rank-deficient cells");

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(cells * kCorners * kCorners + n * N * 9);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      if (cell_samples[cell] == 0) continue;
      const auto corners = cell_corners(cell);
      const double* block = &local[cell * kCorners * kCorners];
      for (std::size_t r = 0; r < kCorners; ++r)
        for (std::size_t c = 0; c < kCorners; ++c)
          triplets.emplace_back(static_cast<int>(corners[r]), static_cast<int>(corners[c]), block[r * kCorners + c]);
    }

    const double lambda =
        smoothing * std::max(1.0, static_cast<double>(xs.size()) / static_cast<double>(n));
    add_second_difference_penalty(lambda, triplets);

    Eigen::SparseMatrix<double> normal(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    normal.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd solution = solve(normal, rhs);
    for (std::size_t i = 0; i < n; ++i) coefficients_[i] = solution[static_cast<Eigen::Index>(i)];

    double sq = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double e = (*this)(xs[i]) - ys[i];
      sq += e * e;
    }
    report.residual_rms = xs.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(xs.size()));
    return report;
  }

 private:
  struct Stencil {
    std::array<std::size_t, kCorners> index{};
    std::array<double, kCorners> weight{};
    std::size_t cell = 0;
  };

  std::size_t cell_count() const {
    std::size_t c = 1;
    for (const auto& a : axes_) c *= a.knots - 1;
    return c;
  }

  std::array<std::size_t, kCorners> cell_corners(std::size_t cell) const {
    std::array<std::size_t, N> lower{};
    for (std::size_t a = 0; a < N; ++a) {
      lower[a] = cell % (axes_[a].knots - 1);
      cell /= axes_[a].knots - 1;
    }
    std::array<std::size_t, kCorners> out{};
    for (std::size_t k = 0; k < kCorners; ++k) {
      std::size_t idx = 0;
      for (std::size_t a = 0; a < N; ++a) idx += (lower[a] + ((k >> a) & 1U)) * strides_[a];
      out[k] = idx;
    }
    return out;
  }

  Stencil stencil(const Point& x) const {
    std::array<std::size_t, N> lower{};
    std::array<double, N> frac{};
    std::size_t cell = 0;
    std::size_t cell_stride = 1;
    for (std::size_t a = 0; a < N; ++a) {
      const GridAxis& ax = axes_[a];
      const double t = (x[a] - ax.lo) / ax.spacing();
      double fl = std::floor(t);
      const double last = static_cast<double>(ax.knots - 2);
      if (!(fl >= 0.0)) fl = 0.0;  // also catches NaN
      if (fl > last) fl = last;
      lower[a] = static_cast<std::size_t>(fl);
      frac[a] = t - fl;
      cell += lower[a] * cell_stride;
      cell_stride *= ax.knots - 1;
    }
    Stencil st;
    st.cell = cell;
    for (std::size_t k = 0; k < kCorners; ++k) {
      std::size_t idx = 0;
      double w = 1.0;
      for (std::size_t a = 0; a < N; ++a) {
        const bool up = (k >> a) & 1U;
        idx += (lower[a] + (up ? 1 : 0)) * strides_[a];
        w *= up ? frac[a] : 1.0 - frac[a];
      }
      st.index[k] = idx;
      st.weight[k] = w;
    }
    return st;
  }

  static Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& normal, const Eigen::VectorXd& rhs) {
    // Conjugate gradients with an incomplete-Cholesky preconditioner; a direct
    // factorization of the 3-D stencil fills in badly.
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> solver;
    solver.setTolerance(1e-13);
    solver.setMaxIterations(20000);
    solver.compute(normal);
    if (solver.info() != Eigen::Success) throw DegenerateFit("grid normal equations are singular");
    Eigen::VectorXd x = solver.solve(rhs);
    if (solver.info() == Eigen::NumericalIssue) throw DegenerateFit("grid solve hit a numerical issue");
    if (!x.allFinite()) throw DegenerateFit("grid solve failed");
    return x;
  }

  void add_second_difference_penalty(double lambda, std::vector<Eigen::Triplet<double>>& triplets) const {
    // For each interior knot along each axis, the row (c[-1] - 2 c[0] + c[+1])
    // contributes its outer product to the normal matrix.
    static constexpr double kRow[3] = {1.0, -2.0, 1.0};
    const std::size_t n = coefficients_.size();
    for (std::size_t a = 0; a < N; ++a) {
      const std::size_t stride = strides_[a];
      for (std::size_t idx = 0; idx < n; ++idx) {
        const std::size_t pos = (idx / stride) % axes_[a].knots;
        if (pos == 0 || pos + 1 == axes_[a].knots) continue;
        const std::size_t nodes[3] = {idx - stride, idx, idx + stride};
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c)
            triplets.emplace_back(static_cast<int>(nodes[r]), static_cast<int>(nodes[c]), lambda * kRow[r] * kRow[c]);
      }
    }
  }

  std::array<GridAxis, N> axes_{};
  std::array<std::size_t, N> strides_{};
  std::vector<double> coefficients_;
};

}  // namespace monoland
