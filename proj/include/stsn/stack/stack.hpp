#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "stsn/core/autograd.hpp"
#include "stsn/model/config.hpp"
#include "stsn/stack/attention.hpp"

namespace stsn {

/// The label, entity and relation streams; each n x d.
struct StreamStates {
  ad::Var label;
  ad::Var entity;
  ad::Var relation;
};

struct AffineParams {
  Parameter* weight = nullptr;  // in x out
  Parameter* bias = nullptr;    // 1 x out
};

struct LayerParams {
  AffineParams fusion;  // 2d x d; absent when E&R-L-A is ablated
  AttentionUnitParams entity_relation_to_label;
  AttentionUnitParams label_to_entity;
  AttentionUnitParams label_to_relation;
};

struct StackParams {
  int dim = 0;
  std::array<AffineParams, 3> initial;  // label, entity, relation
  std::vector<LayerParams> layers;      // empty when the stack is ablated
  bool no_erla = false;

  static StackParams create(ParameterStore& store, int dim, const StackOptions& options,
                            std::mt19937_64& rng);
  /// Scalar parameter count predicted from the shapes alone.
  static std::size_t scalar_count(int dim, const StackOptions& options);
};

struct StackSettings {
  int heads = 8;
  double dropout = 0.0;
  double layer_norm_eps = 1e-5;
  std::mt19937_64* rng = nullptr;  // dropout only when set
  /// When set, receives the unit names in execution order.
  std::vector<std::string>* trace = nullptr;
  /// When set, receives every attention probability matrix.
  std::vector<ad::Var>* probabilities = nullptr;

  static StackSettings from_options(const StackOptions& options);
};

/// Three independent affine maps of the token representations.
StreamStates init_streams(ad::Var token_repr, const StackParams& params);

/// [H_E ; H_R] W_C + b_C with the concatenation along columns.
ad::Var fuse_streams(ad::Var entity, ad::Var relation, ad::Var weight, ad::Var bias);

/// One layer: E&R-L-A updates the label stream from the fused entity and
/// relation streams, then L-E-A and L-R-A update those streams from the new
/// label stream.
StreamStates run_layer(const StreamStates& states, const LayerParams& layer, bool no_erla,
                       KeyMask mask, const StackSettings& settings);

struct StackResult {
  StreamStates initial;
  StreamStates final;
};

StackResult run_stack(ad::Var token_repr, const StackParams& params, KeyMask mask,
                      const StackSettings& settings);

}  // namespace stsn
