#pragma once

#include <functional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "stsn/core/kernels.hpp"
#include "stsn/core/parameters.hpp"

namespace stsn::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient after Tape::backward; empty if nothing flowed into this node.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode differentiation over matrix-valued nodes. Nodes are recorded
/// in creation order, so reverse iteration is a valid topological order.
/// A tape is used by one thread at a time.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  /// With track_gradients == false nothing requires a gradient and no
  /// backward closures are kept (inference).
  explicit Tape(bool track_gradients) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// A leaf that receives a gradient but is not a Parameter.
  Var leaf(Matrix value);
  /// The node for `p`; repeated calls on one tape return the same node.
  Var parameter(Parameter& p);

  /// Seeds d(root)/d(root) = 1 for a 1x1 root, propagates to every node and
  /// adds parameter gradients into Parameter::grad.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

  // Op construction -------------------------------------------------------
  Var record(Matrix value, std::span<const Var> parents, Backward backward);
  bool requires_grad(Var v) const { return node(v.id_).requires_grad; }
  bool requires_grad_id(int id) const { return node(id).requires_grad; }
  const Matrix& value(int id) const { return node(id).value; }
  const Matrix& grad(int id) const { return node(id).grad; }
  /// Adds `g` into the gradient of node `id` (no-op if it needs none).
  void accumulate(int id, const Matrix& g);
  template <typename Fn>
  void accumulate_with(int id, Fn&& fn) {
    auto& n = node(id);
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
    fn(n.grad);
  }

 private:
  friend class Var;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
  bool track_ = true;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// ---------------------------------------------------------------------------
// Operations. All operands must live on the same tape.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// a + row, broadcasting a 1 x c row over every row of a.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var relu(Var a);
Var hadamard(Var a, Var b);
/// Inverted dropout with a mask drawn from `rng`; identity when rate == 0.
Var dropout(Var a, double rate, std::mt19937_64& rng);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
/// out.row(k) = a.row(indices[k]); gradients scatter-add back.
Var gather_rows(Var a, std::vector<int> indices);
Var transpose(Var a);
Var softmax_rows(Var scores, KeyMask mask = {});
Var layer_norm(Var x, Var gain, Var bias, double eps);
/// Column-wise max over rows of each group (see kernels::max_pool_groups).
Var max_pool_groups(Var x, std::vector<int> group_of_row, int groups);
Var sum(Var a);

/// scale * sum_i min(-log softmax(logits_i)[targets_i], -log(floor)).
/// Returns a 1x1 node.
Var softmax_cross_entropy(Var logits, std::span<const int> targets, double scale,
                          double floor = 1e-12);
/// scale * sum_{i,k} BCE(sigmoid(logits_ik), targets_ik), each term capped at
/// -log(floor). Returns a 1x1 node.
Var sigmoid_cross_entropy(Var logits, const Matrix& targets, double scale,
                          double floor = 1e-12);

// Value helpers (no tape) ----------------------------------------------------
Matrix softmax_values(const Matrix& logits);
Matrix sigmoid_values(const Matrix& logits);

}  // namespace stsn::ad
