#include <cmath>
#include <limits>

#include "stsn/core/kernels.hpp"
#include "stsn/errors.hpp"

namespace stsn::kernels::serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  out.setZero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: row counts differ");
  out.setZero(a.cols(), b.cols());
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: column counts differ");
  out.setZero(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  }
}

void softmax_rows(const Matrix& scores, KeyMask mask, Matrix& out) {
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != scores.cols()) {
    throw ShapeError("softmax_rows: mask length differs from key count");
  }
  out.setZero(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (mask.empty() || mask[static_cast<size_t>(j)]) top = std::max(top, scores(i, j));
    }
    if (!std::isfinite(top)) continue;
    double total = 0.0;
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (mask.empty() || mask[static_cast<size_t>(j)]) {
        out(i, j) = std::exp(scores(i, j) - top);
        total += out(i, j);
      }
    }
    for (Eigen::Index j = 0; j < scores.cols(); ++j) out(i, j) /= total;
  }
}

void softmax_rows_backward(const Matrix& probs, const Matrix& grad_out, Matrix& grad_in) {
  grad_in.resize(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double dot = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) dot += probs(i, j) * grad_out(i, j);
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      grad_in(i, j) = probs(i, j) * (grad_out(i, j) - dot);
    }
  }
}

void layer_norm(const Matrix& x, const RowVector& gain, const RowVector& bias, double eps,
                Matrix& out, Matrix& normalized, Eigen::VectorXd& inv_std) {
  const Eigen::Index d = x.cols();
  if (gain.size() != d || bias.size() != d) throw ShapeError("layer_norm: parameter width");
  out.resize(x.rows(), d);
  normalized.resize(x.rows(), d);
  inv_std.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) mean += x(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= static_cast<double>(d);
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    for (Eigen::Index j = 0; j < d; ++j) {
      normalized(i, j) = (x(i, j) - mean) * inv_std(i);
      out(i, j) = normalized(i, j) * gain(j) + bias(j);
    }
  }
}

void layer_norm_backward(const Matrix& normalized, const Eigen::VectorXd& inv_std,
                         const RowVector& gain, const Matrix& grad_out, Matrix& grad_x,
                         RowVector& grad_gain, RowVector& grad_bias) {
  const Eigen::Index d = normalized.cols();
  grad_x.resize(normalized.rows(), d);
  grad_gain.setZero(d);
  grad_bias.setZero(d);
  for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
    double mean_g = 0.0;
    double mean_gx = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double g = grad_out(i, j) * gain(j);
      mean_g += g;
      mean_gx += g * normalized(i, j);
      grad_gain(j) += grad_out(i, j) * normalized(i, j);
      grad_bias(j) += grad_out(i, j);
    }
    mean_g /= static_cast<double>(d);
    mean_gx /= static_cast<double>(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double g = grad_out(i, j) * gain(j);
      grad_x(i, j) = inv_std(i) * (g - mean_g - normalized(i, j) * mean_gx);
    }
  }
}

void max_pool_groups(const Matrix& x, std::span<const int> group_of_row, int groups,
                     Matrix& out, IndexMatrix& argmax) {
  if (static_cast<Eigen::Index>(group_of_row.size()) != x.rows()) {
    throw ShapeError("max_pool_groups: one group id per row required");
  }
  out.setConstant(groups, x.cols(), -std::numeric_limits<double>::infinity());
  argmax.setConstant(groups, x.cols(), -1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int g = group_of_row[static_cast<size_t>(r)];
    if (g < 0) continue;
    if (g >= groups) throw ShapeError("max_pool_groups: group id out of range");
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
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

}  // namespace stsn::kernels::serial
