#pragma once

#include <random>
#include <string>
#include <vector>

#include "stsn/core/autograd.hpp"
#include "stsn/core/parameters.hpp"

namespace stsn {

/// Weights of one attention unit: multi-head attention followed by a
/// position-wise feed-forward network, each wrapped in residual + LayerNorm.
/// Head i projects with columns [i*d/h, (i+1)*d/h) of query/key/value.
struct AttentionUnitParams {
  Parameter* query = nullptr;  // d x d
  Parameter* key = nullptr;    // d x d
  Parameter* value = nullptr;  // d x d
  Parameter* output = nullptr; // d x d
  Parameter* ffn_in = nullptr;        // d x d
  Parameter* ffn_in_bias = nullptr;   // 1 x d
  Parameter* ffn_out = nullptr;       // d x d
  Parameter* ffn_out_bias = nullptr;  // 1 x d
  Parameter* norm1_gain = nullptr;
  Parameter* norm1_bias = nullptr;
  Parameter* norm2_gain = nullptr;
  Parameter* norm2_bias = nullptr;

  static AttentionUnitParams create(ParameterStore& store, const std::string& prefix, int dim,
                                    std::mt19937_64& rng);
  /// 6 d^2 + 6 d.
  static std::size_t scalar_count(int dim);
};

struct AttentionSettings {
  int heads = 1;
  double dropout = 0.0;  // applied only when `rng` is set
  double layer_norm_eps = 1e-5;
  std::mt19937_64* rng = nullptr;
};

struct MultiHeadOutput {
  ad::Var output;                       // n x d
  std::vector<ad::Var> probabilities;   // one n x n_keys matrix per head
};

/// Scaled dot-product attention per head, masked keys at -inf before the
/// softmax, heads concatenated and projected by the output matrix.
MultiHeadOutput multi_head_attention(ad::Var query, ad::Var key, ad::Var value,
                                     const AttentionUnitParams& params, KeyMask mask,
                                     const AttentionSettings& settings);

/// LayerNorm(q + MHA(q, kv, kv)) then LayerNorm(x + FFN(x)).
ad::Var attention_unit(ad::Var query, ad::Var key_value, const AttentionUnitParams& params,
                       KeyMask mask, const AttentionSettings& settings,
                       std::vector<ad::Var>* probabilities = nullptr);

/// max(0, x W1 + b1) W2 + b2.
ad::Var position_wise_ffn(ad::Var x, const AttentionUnitParams& params);

}  // namespace stsn
