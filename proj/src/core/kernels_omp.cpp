#include <algorithm>
#include <cmath>
#include <limits>

#ifdef STSN_HAS_OPENMP
#include <omp.h>
#endif

#include "stsn/core/kernels.hpp"
#include "stsn/errors.hpp"

namespace stsn::kernels::parallel {

namespace {

// Below this many multiply-adds a kernel runs on the calling thread.
constexpr Eigen::Index kParallelWork = 1 << 16;
// Fixed row blocking keeps results independent of the thread count.
constexpr Eigen::Index kRowBlock = 16;

bool worth_splitting(Eigen::Index work) { return work >= kParallelWork; }

}  // namespace

int max_threads() {
#ifdef STSN_HAS_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  out.resize(a.rows(), b.cols());
  const Eigen::Index blocks = (a.rows() + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static) if (worth_splitting(a.rows() * a.cols() * b.cols()))
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index r0 = blk * kRowBlock;
    const Eigen::Index rows = std::min(kRowBlock, a.rows() - r0);
    out.middleRows(r0, rows).noalias() = a.middleRows(r0, rows) * b;
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  out.resize(a.cols(), b.cols());
  const Eigen::Index blocks = (a.cols() + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static) if (worth_splitting(a.rows() * a.cols() * b.cols()))
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index r0 = blk * kRowBlock;
    const Eigen::Index rows = std::min(kRowBlock, a.cols() - r0);
    out.middleRows(r0, rows).noalias() = a.middleCols(r0, rows).transpose() * b;
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  out.resize(a.rows(), b.rows());
  const Eigen::Index blocks = (a.rows() + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static) if (worth_splitting(a.rows() * a.cols() * b.rows()))
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index r0 = blk * kRowBlock;
    const Eigen::Index rows = std::min(kRowBlock, a.rows() - r0);
    out.middleRows(r0, rows).noalias() = a.middleRows(r0, rows) * b.transpose();
  }
}

void softmax_rows(const Matrix& scores, KeyMask mask, Matrix& out) {
  const Eigen::Index cols = scores.cols();
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != cols) {
    throw ShapeError("softmax_rows: mask length differs from key count");
  }
  out.resize(scores.rows(), cols);
#pragma omp parallel for schedule(static) if (worth_splitting(scores.size() * 8))
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto row = out.row(i);
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (mask.empty() || mask[static_cast<size_t>(j)]) top = std::max(top, scores(i, j));
    }
    if (!std::isfinite(top)) {
      row.setZero();
      continue;
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const bool live = mask.empty() || mask[static_cast<size_t>(j)];
      row(j) = live ? std::exp(scores(i, j) - top) : 0.0;
      total += row(j);
    }
    row /= total;
  }
}

void softmax_rows_backward(const Matrix& probs, const Matrix& grad_out, Matrix& grad_in) {
  grad_in.resize(probs.rows(), probs.cols());
#pragma omp parallel for schedule(static) if (worth_splitting(probs.size() * 4))
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double dot = probs.row(i).dot(grad_out.row(i));
    grad_in.row(i) = probs.row(i).cwiseProduct(grad_out.row(i).array().matrix() -
                                               RowVector::Constant(probs.cols(), dot));
  }
}

void layer_norm(const Matrix& x, const RowVector& gain, const RowVector& bias, double eps,
                Matrix& out, Matrix& normalized, Eigen::VectorXd& inv_std) {
  const Eigen::Index d = x.cols();
  if (gain.size() != d || bias.size() != d) throw ShapeError("layer_norm: parameter width");
  out.resize(x.rows(), d);
  normalized.resize(x.rows(), d);
  inv_std.resize(x.rows());
#pragma omp parallel for schedule(static) if (worth_splitting(x.size() * 8))
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(d);
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    normalized.row(i) = centered * inv_std(i);
    out.row(i) = normalized.row(i).cwiseProduct(gain) + bias;
  }
}

void layer_norm_backward(const Matrix& normalized, const Eigen::VectorXd& inv_std,
                         const RowVector& gain, const Matrix& grad_out, Matrix& grad_x,
                         RowVector& grad_gain, RowVector& grad_bias) {
  const Eigen::Index d = normalized.cols();
  grad_x.resize(normalized.rows(), d);
#pragma omp parallel for schedule(static) if (worth_splitting(normalized.size() * 8))
  for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
    const RowVector g = grad_out.row(i).cwiseProduct(gain);
    const double mean_g = g.mean();
    const double mean_gx = g.dot(normalized.row(i)) / static_cast<double>(d);
    grad_x.row(i) = inv_std(i) * (g.array() - mean_g - normalized.row(i).array() * mean_gx).matrix();
  }
  // Column sums stay on one thread so the reduction order is fixed.
  grad_gain = grad_out.cwiseProduct(normalized).colwise().sum();
  grad_bias = grad_out.colwise().sum();
}

void max_pool_groups(const Matrix& x, std::span<const int> group_of_row, int groups,
                     Matrix& out, IndexMatrix& argmax) {
  if (static_cast<Eigen::Index>(group_of_row.size()) != x.rows()) {
    throw ShapeError("max_pool_groups: one group id per row required");
  }
  for (int g : group_of_row) {
    if (g >= groups) throw ShapeError("max_pool_groups: group id out of range");
  }
  out.setConstant(groups, x.cols(), -std::numeric_limits<double>::infinity());
  argmax.setConstant(groups, x.cols(), -1);
  // Columns are independent; each thread scans all rows for its columns.
#pragma omp parallel for schedule(static) if (worth_splitting(x.size() * 4))
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const int g = group_of_row[static_cast<size_t>(r)];
      if (g < 0) continue;
      if (argmax(g, c) < 0 || x(r, c) > out(g, c)) {
        out(g, c) = x(r, c);
        argmax(g, c) = static_cast<int>(r);
      }
    }
  }
  for (int g = 0; g < groups; ++g) {
    if (x.cols() > 0 && argmax(g, 0) < 0) {
      throw AlignmentError("max_pool_groups: group " + std::to_string(g) + " has no rows");
    }
  }
}

}  // namespace stsn::kernels::parallel
