#include "stsn/stack/attention.hpp"

#include <cmath>

#include "stsn/errors.hpp"

namespace stsn {

AttentionUnitParams AttentionUnitParams::create(ParameterStore& store, const std::string& prefix,
                                                int dim, std::mt19937_64& rng) {
  AttentionUnitParams p;
  p.query = &store.add(prefix + ".query", dim, dim, Init::kXavierUniform, rng);
  p.key = &store.add(prefix + ".key", dim, dim, Init::kXavierUniform, rng);
  p.value = &store.add(prefix + ".value", dim, dim, Init::kXavierUniform, rng);
  p.output = &store.add(prefix + ".output", dim, dim, Init::kXavierUniform, rng);
  p.ffn_in = &store.add(prefix + ".ffn_in", dim, dim, Init::kXavierUniform, rng);
  p.ffn_in_bias = &store.add(prefix + ".ffn_in_bias", 1, dim, Init::kZeros, rng, false);
  p.ffn_out = &store.add(prefix + ".ffn_out", dim, dim, Init::kXavierUniform, rng);
  p.ffn_out_bias = &store.add(prefix + ".ffn_out_bias", 1, dim, Init::kZeros, rng, false);
  p.norm1_gain = &store.add(prefix + ".norm1_gain", 1, dim, Init::kOnes, rng, false);
  p.norm1_bias = &store.add(prefix + ".norm1_bias", 1, dim, Init::kZeros, rng, false);
  p.norm2_gain = &store.add(prefix + ".norm2_gain", 1, dim, Init::kOnes, rng, false);
  p.norm2_bias = &store.add(prefix + ".norm2_bias", 1, dim, Init::kZeros, rng, false);
  return p;
}

std::size_t AttentionUnitParams::scalar_count(int dim) {
  const auto d = static_cast<std::size_t>(dim);
  return 6 * d * d + 6 * d;
}

MultiHeadOutput multi_head_attention(ad::Var query, ad::Var key, ad::Var value,
                                     const AttentionUnitParams& params, KeyMask mask,
                                     const AttentionSettings& settings) {
  auto& tape = query.tape();
  const auto d = query.cols();
  if (key.cols() != d || value.cols() != d || key.rows() != value.rows()) {
    throw ShapeError("multi_head_attention: query/key/value shapes disagree");
  }
  if (settings.heads < 1 || d % settings.heads != 0) {
    throw ShapeError("multi_head_attention: dimension " + std::to_string(d) +
                     " is not divisible by " + std::to_string(settings.heads) + " heads");
  }
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != key.rows()) {
    throw ShapeError("multi_head_attention: mask length differs from key count");
  }
  const Eigen::Index head_dim = d / settings.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const auto q = ad::matmul(query, tape.parameter(*params.query));
  const auto k = ad::matmul(key, tape.parameter(*params.key));
  const auto v = ad::matmul(value, tape.parameter(*params.value));

  MultiHeadOutput out;
  std::vector<ad::Var> heads;
  for (int h = 0; h < settings.heads; ++h) {
    const auto qh = ad::slice_cols(q, h * head_dim, head_dim);
    const auto kh = ad::slice_cols(k, h * head_dim, head_dim);
    const auto vh = ad::slice_cols(v, h * head_dim, head_dim);
    const auto scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt);
    const auto probs = ad::softmax_rows(scores, mask);
    out.probabilities.push_back(probs);
    auto weights = settings.rng ? ad::dropout(probs, settings.dropout, *settings.rng) : probs;
    heads.push_back(ad::matmul(weights, vh));
  }
  out.output = ad::matmul(ad::concat_cols(heads), tape.parameter(*params.output));
  return out;
}

ad::Var position_wise_ffn(ad::Var x, const AttentionUnitParams& params) {
  auto& tape = x.tape();
  const auto hidden = ad::relu(ad::add_row(ad::matmul(x, tape.parameter(*params.ffn_in)),
                                           tape.parameter(*params.ffn_in_bias)));
  return ad::add_row(ad::matmul(hidden, tape.parameter(*params.ffn_out)),
                     tape.parameter(*params.ffn_out_bias));
}

ad::Var attention_unit(ad::Var query, ad::Var key_value, const AttentionUnitParams& params,
                       KeyMask mask, const AttentionSettings& settings,
                       std::vector<ad::Var>* probabilities) {
  auto& tape = query.tape();
  if (query.cols() != key_value.cols()) throw ShapeError("attention_unit: width mismatch");
  auto attended = multi_head_attention(query, key_value, key_value, params, mask, settings);
  if (probabilities) *probabilities = attended.probabilities;
  const auto x = ad::layer_norm(ad::add(query, attended.output), tape.parameter(*params.norm1_gain),
                                tape.parameter(*params.norm1_bias), settings.layer_norm_eps);
  auto ffn = position_wise_ffn(x, params);
  if (settings.rng) ffn = ad::dropout(ffn, settings.dropout, *settings.rng);
  return ad::layer_norm(ad::add(x, ffn), tape.parameter(*params.norm2_gain),
                        tape.parameter(*params.norm2_bias), settings.layer_norm_eps);
}

}  // namespace stsn
