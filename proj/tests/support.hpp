#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stsn/core/kernels.hpp"
#include "stsn/data/corpus.hpp"
#include "stsn/model/config.hpp"
#include "stsn/model/model.hpp"

namespace stsn::test {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Random mentions over n tokens where every overlap cluster has exactly two
/// members: nested pairs, crossing pairs and identical spans with two types.
inline EntitySet random_legal_entities(int n, std::mt19937_64& rng) {
  static const std::vector<std::string> types = {"PER", "ORG", "LOC", "AE", "DRUG"};
  auto type = [&] { return types[static_cast<size_t>(uniform_int(rng, 0, 4))]; };
  EntitySet out;
  int pos = uniform_int(rng, 0, 2);
  while (pos < n) {
    const int room = n - pos;
    const int kind = uniform_int(rng, 0, 3);
    if (kind == 0 || room < 2) {
      const int w = uniform_int(rng, 1, std::min(4, room));
      out.insert({type(), pos, pos + w});
      pos += w;
    } else if (kind == 1) {  // nested
      const int outer = uniform_int(rng, 2, std::min(5, room));
      const int s = uniform_int(rng, 0, outer - 1);
      const int e = uniform_int(rng, s + 1, outer);
      out.insert({type(), pos, pos + outer});
      out.insert({type(), pos + s, pos + e});
      pos += outer;
    } else if (kind == 2 && room >= 3) {  // crossing
      const int a_end = uniform_int(rng, 2, std::min(4, room - 1));
      const int b_start = uniform_int(rng, 1, a_end - 1);
      const int b_end = uniform_int(rng, a_end + 1, std::min(a_end + 3, room));
      out.insert({type(), pos, pos + a_end});
      out.insert({type(), pos + b_start, pos + b_end});
      pos += b_end;
    } else {  // same span, two types
      const int w = uniform_int(rng, 1, std::min(3, room));
      auto t1 = type();
      auto t2 = type();
      while (t2 == t1) t2 = type();
      out.insert({t1, pos, pos + w});
      out.insert({t2, pos, pos + w});
      pos += w;
    }
    pos += uniform_int(rng, 0, 3);
  }
  return out;
}

/// A small model configuration for fast tests.
inline Config tiny_config(int dim, int layers, int heads, int label_dim, int width_dim) {
  Config c;
  c.set("encoder.dim", std::to_string(dim));
  c.set("encoder.heads", std::to_string(heads));
  c.set("encoder.max_positions", "40");
  c.set("stack.layers", std::to_string(layers));
  c.set("stack.heads", std::to_string(heads));
  c.set("decoder.label_dim", std::to_string(label_dim));
  c.set("decoder.width_dim", std::to_string(width_dim));
  return c;
}

/// The worked sentence with a Work-For relation.
inline SentenceExample work_for_sentence() {
  SentenceExample ex;
  ex.tokens = {"Jack", "taught", "at", "Harvard", "University"};
  const EntityMention per{"PER", 0, 1};
  const EntityMention org{"ORG", 3, 5};
  ex.entities = {per, org};
  ex.relations = {{per, org, "Work-For"}};
  return ex;
}

struct GroupError {
  std::string name;
  double relative_error = 0.0;
  double analytic_norm = 0.0;
};

/// Central finite differences of `loss` for every scalar of every trainable
/// parameter, compared with the gradients left in Parameter::grad.
/// Relative error per parameter: ||a - n|| / max(||a||, ||n||); both norms
/// below `floor` count as agreement.
inline std::vector<GroupError> finite_difference_check(ParameterStore& store,
                                                       const std::function<double()>& loss,
                                                       double step, double floor = 1e-9) {
  std::vector<GroupError> out;
  for (auto& p : store) {
    if (!p->trainable) continue;
    Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.data()[i];
      p->value.data()[i] = saved + step;
      const double up = loss();
      p->value.data()[i] = saved - step;
      const double down = loss();
      p->value.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * step);
    }
    const double a = p->grad.norm();
    const double n = numeric.norm();
    const double diff = (p->grad - numeric).norm();
    const double denom = std::max(a, n);
    out.push_back({p->name, denom < floor ? 0.0 : diff / denom, a});
  }
  return out;
}

}  // namespace stsn::test
