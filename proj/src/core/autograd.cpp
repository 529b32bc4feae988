#include "stsn/core/autograd.hpp"

#include <cmath>

#include "stsn/errors.hpp"

namespace stsn::ad {

namespace kp = kernels::parallel;

const Matrix& Var::value() const { return tape_->node(id_).value; }
const Matrix& Var::grad() const { return tape_->node(id_).grad; }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, {}});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, track_, nullptr, {}});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, {}, track_ && p.trainable, &p, {}});
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.tape_ != this) throw ShapeError("operands live on different tapes");
    needs = needs || node(p.id_).requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, nullptr, needs ? std::move(backward) : Backward{}});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(int id, const Matrix& g) {
  accumulate_with(id, [&](Matrix& dst) { dst += g; });
}

void Tape::backward(Var root) {
  if (root.tape_ != this) throw ShapeError("backward: root lives on another tape");
  auto& r = node(root.id_);
  if (r.value.size() != 1) throw ShapeError("backward: root must be 1x1");
  if (!r.requires_grad) return;
  r.grad = Matrix::Ones(1, 1);
  for (int id = root.id_; id >= 0; --id) {
    auto& n = node(id);
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

// ---------------------------------------------------------------------------

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + " differ");
  }
}

Var record1(Var a, Matrix value, Tape::Backward fn) {
  const Var parents[] = {a};
  return a.tape().record(std::move(value), parents, std::move(fn));
}

Var record2(Var a, Var b, Matrix value, Tape::Backward fn) {
  const Var parents[] = {a, b};
  return a.tape().record(std::move(value), parents, std::move(fn));
}

}  // namespace

Var matmul(Var a, Var b) {
  Matrix out;
  kp::matmul(a.value(), b.value(), out);
  const int ia = a.id();
  const int ib = b.id();
  return record2(a, b, std::move(out), [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad_id(ia)) {
      Matrix ga;
      kp::matmul_nt(g, t.value(ib), ga);
      t.accumulate(ia, ga);
    }
    if (t.requires_grad_id(ib)) {
      Matrix gb;
      kp::matmul_tn(t.value(ia), g, gb);
      t.accumulate(ib, gb);
    }
  });
}

Var add(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "add");
  const int ia = a.id();
  const int ib = b.id();
  return record2(a, b, a.value() + b.value(), [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row: bias width");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  const int ia = a.id();
  const int ir = row.id();
  return record2(a, row, std::move(out), [ia, ir](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate_with(ir, [&](Matrix& dst) { dst += t.grad(self).colwise().sum(); });
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return record1(a, a.value() * s, [ia, s](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& dst) { dst += t.grad(self) * s; });
  });
}

Var relu(Var a) {
  const int ia = a.id();
  return record1(a, a.value().cwiseMax(0.0), [ia](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& dst) {
      dst += (t.value(ia).array() > 0.0).select(t.grad(self), 0.0);
    });
  });
}

Var hadamard(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "hadamard");
  const int ia = a.id();
  const int ib = b.id();
  return record2(a, b, a.value().cwiseProduct(b.value()), [ia, ib](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& dst) { dst += t.grad(self).cwiseProduct(t.value(ib)); });
    t.accumulate_with(ib, [&](Matrix& dst) { dst += t.grad(self).cwiseProduct(t.value(ia)); });
  });
}

Var dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw ConfigError("dropout rate must be below 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = u(rng) < rate ? 0.0 : keep;
  return hadamard(a, a.tape().constant(std::move(mask)));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts[0].rows()) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(parts[0].rows(), cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    layout.emplace_back(p.id(), at);
    at += p.cols();
  }
  return parts[0].tape().record(std::move(out), parts, [layout](Tape& t, int self) {
    for (const auto& [id, offset] : layout) {
      t.accumulate_with(id, [&](Matrix& dst) {
        dst += t.grad(self).middleCols(offset, dst.cols());
      });
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != parts[0].cols()) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, parts[0].cols());
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    layout.emplace_back(p.id(), at);
    at += p.rows();
  }
  return parts[0].tape().record(std::move(out), parts, [layout](Tape& t, int self) {
    for (const auto& [id, offset] : layout) {
      t.accumulate_with(id, [&](Matrix& dst) {
        dst += t.grad(self).middleRows(offset, dst.rows());
      });
    }
  });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) throw ShapeError("slice_cols: range");
  const int ia = a.id();
  return record1(a, a.value().middleCols(begin, count), [ia, begin, count](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& dst) { dst.middleCols(begin, count) += t.grad(self); });
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) throw ShapeError("slice_rows: range");
  const int ia = a.id();
  return record1(a, a.value().middleRows(begin, count), [ia, begin, count](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& dst) { dst.middleRows(begin, count) += t.grad(self); });
  });
}

Var gather_rows(Var a, std::vector<int> indices) {
  Matrix out(static_cast<Eigen::Index>(indices.size()), a.cols());
  for (size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= a.rows()) throw ShapeError("gather_rows: index range");
    out.row(static_cast<Eigen::Index>(k)) = a.value().row(indices[k]);
  }
  const int ia = a.id();
  return record1(a, std::move(out), [ia, indices = std::move(indices)](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& dst) {
      const Matrix& g = t.grad(self);
      for (size_t k = 0; k < indices.size(); ++k) {
        dst.row(indices[k]) += g.row(static_cast<Eigen::Index>(k));
      }
    });
  });
}

Var transpose(Var a) {
  const int ia = a.id();
  return record1(a, a.value().transpose(), [ia](Tape& t, int self) {
    t.accumulate_with(ia, [&](Matrix& dst) { dst += t.grad(self).transpose(); });
  });
}

Var softmax_rows(Var scores, KeyMask mask) {
  Matrix out;
  kp::softmax_rows(scores.value(), mask, out);
  const int is = scores.id();
  return record1(scores, std::move(out), [is](Tape& t, int self) {
    Matrix g;
    kp::softmax_rows_backward(t.value(self), t.grad(self), g);
    t.accumulate(is, g);
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Matrix out;
  Matrix normalized;
  Eigen::VectorXd inv_std;
  kp::layer_norm(x.value(), gain.value(), bias.value(), eps, out, normalized, inv_std);
  const int ix = x.id();
  const int ig = gain.id();
  const int ib = bias.id();
  const Var parents[] = {x, gain, bias};
  return x.tape().record(
      std::move(out), parents,
      [ix, ig, ib, normalized = std::move(normalized), inv_std = std::move(inv_std)](Tape& t,
                                                                                    int self) {
        Matrix gx;
        RowVector gg;
        RowVector gb;
        kp::layer_norm_backward(normalized, inv_std, t.value(ig), t.grad(self), gx, gg, gb);
        t.accumulate(ix, gx);
        t.accumulate_with(ig, [&](Matrix& dst) { dst += gg; });
        t.accumulate_with(ib, [&](Matrix& dst) { dst += gb; });
      });
}

Var max_pool_groups(Var x, std::vector<int> group_of_row, int groups) {
  Matrix out;
  IndexMatrix argmax;
  kp::max_pool_groups(x.value(), group_of_row, groups, out, argmax);
  const int ix = x.id();
  return record1(x, std::move(out), [ix, argmax = std::move(argmax)](Tape& t, int self) {
    t.accumulate_with(ix, [&](Matrix& dst) {
      const Matrix& g = t.grad(self);
      for (Eigen::Index r = 0; r < argmax.rows(); ++r) {
        for (Eigen::Index c = 0; c < argmax.cols(); ++c) dst(argmax(r, c), c) += g(r, c);
      }
    });
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id();
  return record1(a, std::move(out), [ia](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    t.accumulate_with(ia, [&](Matrix& dst) { dst.array() += g; });
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> targets, double scale,
                          double floor) {
  const Matrix& z = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != z.rows()) {
    throw ShapeError("softmax_cross_entropy: one target per row required");
  }
  const double cap = -std::log(floor);
  Matrix probs = softmax_values(z);
  std::vector<int> live(targets.size(), 0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = targets[static_cast<size_t>(i)];
    if (y < 0 || y >= z.cols()) throw ShapeError("softmax_cross_entropy: target out of range");
    const double top = z.row(i).maxCoeff();
    const double lse = top + std::log((z.row(i).array() - top).exp().sum());
    const double nll = lse - z(i, y);
    live[static_cast<size_t>(i)] = nll < cap;
    total += std::min(nll, cap);
  }
  Matrix out(1, 1);
  out(0, 0) = scale * total;
  const int il = logits.id();
  std::vector<int> labels(targets.begin(), targets.end());
  return record1(logits, std::move(out),
                 [il, scale, probs = std::move(probs), labels = std::move(labels),
                  live = std::move(live)](Tape& t, int self) {
                   const double g = t.grad(self)(0, 0) * scale;
                   t.accumulate_with(il, [&](Matrix& dst) {
                     for (Eigen::Index i = 0; i < probs.rows(); ++i) {
                       if (!live[static_cast<size_t>(i)]) continue;
                       dst.row(i) += g * probs.row(i);
                       dst(i, labels[static_cast<size_t>(i)]) -= g;
                     }
                   });
                 });
}

Var sigmoid_cross_entropy(Var logits, const Matrix& targets, double scale, double floor) {
  const Matrix& z = logits.value();
  check_same_shape(z, targets, "sigmoid_cross_entropy");
  const double cap = -std::log(floor);
  Matrix probs = sigmoid_values(z);
  Matrix live(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double x = z.data()[i];
    const double y = targets.data()[i];
    // softplus(x) - y x, the stable form of -[y log s(x) + (1-y) log(1-s(x))]
    const double loss = std::max(x, 0.0) - y * x + std::log1p(std::exp(-std::abs(x)));
    live.data()[i] = loss < cap ? 1.0 : 0.0;
    total += std::min(loss, cap);
  }
  Matrix out(1, 1);
  out(0, 0) = scale * total;
  const int il = logits.id();
  return record1(logits, std::move(out),
                 [il, scale, grad = Matrix((probs - targets).cwiseProduct(live))](Tape& t,
                                                                                 int self) {
                   const double g = t.grad(self)(0, 0) * scale;
                   t.accumulate_with(il, [&](Matrix& dst) { dst += g * grad; });
                 });
}

Matrix softmax_values(const Matrix& logits) {
  Matrix out;
  kp::softmax_rows(logits, {}, out);
  return out;
}

Matrix sigmoid_values(const Matrix& logits) {
  return logits.unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

}  // namespace stsn::ad
