#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>

namespace stsn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-key validity: 1 for a real position, 0 for padding. An empty span
/// means every key is valid.
using KeyMask = std::span<const std::uint8_t>;

namespace kernels {

// Row-parallel numeric kernels. `serial` holds straightforward loop
// implementations used as the reference in tests; `parallel` holds the
// OpenMP versions used by the model. Both fill `out` (resizing it).

#define STSN_KERNEL_DECLS                                                                 \
  void matmul(const Matrix& a, const Matrix& b, Matrix& out);                             \
  /* out = a^T b */                                                                       \
  void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);                          \
  /* out = a b^T */                                                                       \
  void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);                          \
  /* Row softmax; masked keys get probability 0, fully masked rows are all 0. */          \
  void softmax_rows(const Matrix& scores, KeyMask mask, Matrix& out);                     \
  void softmax_rows_backward(const Matrix& probs, const Matrix& grad_out, Matrix& grad_in); \
  void layer_norm(const Matrix& x, const RowVector& gain, const RowVector& bias, double eps, \
                  Matrix& out, Matrix& normalized, Eigen::VectorXd& inv_std);              \
  void layer_norm_backward(const Matrix& normalized, const Eigen::VectorXd& inv_std,      \
                           const RowVector& gain, const Matrix& grad_out, Matrix& grad_x, \
                           RowVector& grad_gain, RowVector& grad_bias);                   \
  /* Column-wise max over the rows of each group; rows with group -1 are skipped. */      \
  /* argmax(g, c) is the source row of out(g, c). Every group must be non-empty. */       \
  void max_pool_groups(const Matrix& x, std::span<const int> group_of_row, int groups,    \
                       Matrix& out, IndexMatrix& argmax);

namespace serial {
STSN_KERNEL_DECLS
}  // namespace serial

namespace parallel {
STSN_KERNEL_DECLS
/// Number of OpenMP threads the parallel kernels may use (1 without OpenMP).
int max_threads();
}  // namespace parallel

#undef STSN_KERNEL_DECLS

}  // namespace kernels
}  // namespace stsn
