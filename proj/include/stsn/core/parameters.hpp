#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stsn/core/kernels.hpp"

namespace stsn {

/// A trainable tensor with its gradient and AdamW moment estimates.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;
  bool decay = true;  // biases, layer-norm and embedding-free vectors opt out
  bool trainable = true;  // frozen parameters get no gradient and no update

  Eigen::Index size() const { return value.size(); }
};

enum class Init {
  kZeros,
  kOnes,
  kXavierUniform,  // U(-a, a), a = sqrt(6 / (rows + cols))
  kNormal002,      // N(0, 0.02^2), used for embedding tables
  kNormalScaled,   // N(0, 1 / cols), for token and position embeddings
  kIdentity,
};

/// Owns parameters in registration order. Addresses are stable.
class ParameterStore {
 public:
  Parameter& add(std::string name, Eigen::Index rows, Eigen::Index cols, Init init,
                 std::mt19937_64& rng, bool decay = true);

  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  /// Total number of scalar parameters.
  std::size_t scalar_count() const;
  std::size_t size() const { return params_.size(); }

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

void initialize(Matrix& m, Init init, std::mt19937_64& rng);

}  // namespace stsn
