#include "stsn/stack/stack.hpp"

#include "stsn/errors.hpp"

namespace stsn {

namespace {

constexpr const char* kStreamNames[3] = {"label", "entity", "relation"};

ad::Var affine(ad::Var x, const AffineParams& p) {
  auto& tape = x.tape();
  return ad::add_row(ad::matmul(x, tape.parameter(*p.weight)), tape.parameter(*p.bias));
}

AttentionSettings unit_settings(const StackSettings& s) {
  return {s.heads, s.dropout, s.layer_norm_eps, s.rng};
}

}  // namespace

StackParams StackParams::create(ParameterStore& store, int dim, const StackOptions& options,
                                std::mt19937_64& rng) {
  if (dim < 1 || dim % options.heads != 0) {
    throw ConfigError("stack dimension " + std::to_string(dim) + " must be divisible by " +
                      std::to_string(options.heads) + " heads");
  }
  StackParams p;
  p.dim = dim;
  p.no_erla = options.no_erla;
  for (int s = 0; s < 3; ++s) {
    const std::string prefix = std::string("stack.init.") + kStreamNames[s];
    p.initial[static_cast<size_t>(s)] = {
        &store.add(prefix + ".weight", dim, dim, Init::kXavierUniform, rng),
        &store.add(prefix + ".bias", 1, dim, Init::kZeros, rng, false)};
  }
  if (options.no_stack) return p;
  for (int l = 0; l < options.layers; ++l) {
    const std::string prefix = "stack.layer" + std::to_string(l);
    LayerParams layer;
    if (!options.no_erla) {
      layer.fusion = {&store.add(prefix + ".fusion.weight", 2 * dim, dim, Init::kXavierUniform, rng),
                      &store.add(prefix + ".fusion.bias", 1, dim, Init::kZeros, rng, false)};
    }
    layer.entity_relation_to_label = AttentionUnitParams::create(store, prefix + ".erla", dim, rng);
    layer.label_to_entity = AttentionUnitParams::create(store, prefix + ".lea", dim, rng);
    layer.label_to_relation = AttentionUnitParams::create(store, prefix + ".lra", dim, rng);
    p.layers.push_back(layer);
  }
  return p;
}

std::size_t StackParams::scalar_count(int dim, const StackOptions& options) {
  const auto d = static_cast<std::size_t>(dim);
  std::size_t total = 3 * (d * d + d);
  if (options.no_stack) return total;
  const std::size_t fusion = options.no_erla ? 0 : 2 * d * d + d;
  total += static_cast<std::size_t>(options.layers) *
           (fusion + 3 * AttentionUnitParams::scalar_count(dim));
  return total;
}

StackSettings StackSettings::from_options(const StackOptions& options) {
  StackSettings s;
  s.heads = options.heads;
  s.dropout = options.dropout;
  s.layer_norm_eps = options.layer_norm_eps;
  return s;
}

StreamStates init_streams(ad::Var token_repr, const StackParams& params) {
  if (token_repr.cols() != params.dim) {
    throw ShapeError("init_streams: token representations are " +
                     std::to_string(token_repr.cols()) + " wide, stack expects " +
                     std::to_string(params.dim));
  }
  return {affine(token_repr, params.initial[0]), affine(token_repr, params.initial[1]),
          affine(token_repr, params.initial[2])};
}

ad::Var fuse_streams(ad::Var entity, ad::Var relation, ad::Var weight, ad::Var bias) {
  if (entity.rows() != relation.rows() || entity.cols() != relation.cols()) {
    throw ShapeError("fuse_streams: entity and relation streams differ in shape");
  }
  if (weight.rows() != 2 * entity.cols() || bias.cols() != weight.cols()) {
    throw ShapeError("fuse_streams: fusion weight must be 2d x d");
  }
  const ad::Var parts[] = {entity, relation};
  return ad::add_row(ad::matmul(ad::concat_cols(parts), weight), bias);
}

StreamStates run_layer(const StreamStates& states, const LayerParams& layer, bool no_erla,
                       KeyMask mask, const StackSettings& settings) {
  auto& tape = states.label.tape();
  const auto attn = unit_settings(settings);
  std::vector<ad::Var> probs;
  auto collect = [&] {
    if (settings.probabilities) {
      settings.probabilities->insert(settings.probabilities->end(), probs.begin(), probs.end());
    }
  };

  StreamStates next;
  if (no_erla) {
    next.label = attention_unit(states.label, states.label, layer.entity_relation_to_label, mask,
                                attn, &probs);
  } else {
    const auto fused = fuse_streams(states.entity, states.relation,
                                    tape.parameter(*layer.fusion.weight),
                                    tape.parameter(*layer.fusion.bias));
    next.label = attention_unit(states.label, fused, layer.entity_relation_to_label, mask, attn,
                                &probs);
  }
  collect();
  if (settings.trace) settings.trace->push_back("E&R-L-A");

  next.entity = attention_unit(states.entity, next.label, layer.label_to_entity, mask, attn, &probs);
  collect();
  if (settings.trace) settings.trace->push_back("L-E-A");

  next.relation =
      attention_unit(states.relation, next.label, layer.label_to_relation, mask, attn, &probs);
  collect();
  if (settings.trace) settings.trace->push_back("L-R-A");
  return next;
}

StackResult run_stack(ad::Var token_repr, const StackParams& params, KeyMask mask,
                      const StackSettings& settings) {
  StackResult result;
  result.initial = init_streams(token_repr, params);
  result.final = result.initial;
  for (const auto& layer : params.layers) {
    result.final = run_layer(result.final, layer, params.no_erla, mask, settings);
  }
  return result;
}

}  // namespace stsn
