#include "stsn/model/model.hpp"

#include <exception>
#include <mutex>

#include "stsn/errors.hpp"

namespace stsn {

namespace {

ad::Var zero_scalar(ad::Tape& tape) { return tape.constant(Matrix::Zero(1, 1)); }

SpanCandidate as_span(const EntityMention& m) { return {m.start, m.end}; }

}  // namespace

StsnModel::StsnModel(const Config& config, Vocabularies vocabularies, const Corpus& corpus,
                     const std::string& backend_state)
    : config_(config),
      options_(ModelOptions::from_config(config)),
      vocabularies_(std::move(vocabularies)) {
  std::mt19937_64 rng(mix_seed(static_cast<std::uint64_t>(config.get_int("seed")), 1));
  backend_ = make_backend(options_.encoder, store_, rng, corpus, backend_state);
  const int d = backend_->dim();
  stack_ = StackParams::create(store_, d, options_.stack, rng);
  decoders_ = DecoderParams::create(store_, d, vocabularies_.labels.size(),
                                    vocabularies_.entity_types.size(),
                                    vocabularies_.relation_types.size(), options_.decoder, rng);
}

std::vector<int> StsnModel::gold_label_indices(const SentenceExample& example) const {
  const auto tags = encode_bio(example.size(), example.entities);
  std::vector<int> out;
  out.reserve(tags.size());
  for (const auto& tag : tags) out.push_back(vocabularies_.labels.index(tag));
  return out;
}

void StsnModel::check_vocabulary(const Corpus& corpus) const {
  for (size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& e : corpus[i].entities) {
      if (!vocabularies_.entity_types.contains(e.type)) {
        throw VocabularyMismatch("sentence " + std::to_string(i) + ": entity type '" + e.type +
                                 "' is unknown to the model");
      }
    }
    for (const auto& r : corpus[i].relations) {
      if (!vocabularies_.relation_types.contains(r.type)) {
        throw VocabularyMismatch("sentence " + std::to_string(i) + ": relation type '" + r.type +
                                 "' is unknown to the model");
      }
    }
  }
}

LossTerms StsnModel::forward_batch(ad::Tape& tape, const TrainingBatch& batch,
                                   const ForwardOptions& fo) const {
  LossTerms loss;
  for (const auto& item : batch.items) {
    loss.token_count += item.example->size();
    loss.span_count += static_cast<int>(item.positive_spans.size() + item.negative_spans.size());
    loss.pair_count += static_cast<int>(item.positive_pairs.size() + item.negative_pairs.size());
  }
  loss.tagging = zero_scalar(tape);
  loss.span = zero_scalar(tape);
  loss.relation = zero_scalar(tape);

  StackSettings settings = StackSettings::from_options(options_.stack);
  settings.rng = fo.dropout_rng;
  settings.trace = fo.unit_trace;
  const int d = dim();
  const int relation_types = vocabularies_.relation_types.size();

  for (size_t i = 0; i < batch.items.size(); ++i) {
    const auto& item = batch.items[i];
    const auto& ex = *item.example;
    const int n = ex.size();
    SentenceTrace trace;

    auto token_repr = embed_tokens(tape, ex.tokens, *backend_);
    if (batch.padded_length > n) {
      const ad::Var parts[] = {token_repr, tape.constant(Matrix::Zero(batch.padded_length - n, d))};
      token_repr = ad::concat_rows(parts);
    }
    KeyMask mask;
    if (i < batch.mask.size()) mask = batch.mask[i];
    trace.token_repr = token_repr;
    trace.streams = run_stack(token_repr, stack_, mask, settings);
    const auto h_l = ad::slice_rows(trace.streams.final.label, 0, n);
    const auto h_e = ad::slice_rows(trace.streams.final.entity, 0, n);
    const auto h_r = ad::slice_rows(trace.streams.final.relation, 0, n);

    auto logits = tag_logits(h_l, decoders_);
    if (fo.tag_logit_offset) {
      Matrix offset = Matrix::Zero(logits.rows(), logits.cols());
      fo.tag_logit_offset(static_cast<int>(i), offset);
      logits = ad::add(logits, tape.constant(std::move(offset)));
    }
    trace.tag_logits = logits;
    trace.gold_labels = gold_label_indices(ex);
    trace.predicted_labels = argmax_rows(logits.value());
    loss.tagging = ad::add(loss.tagging,
                           mean_cross_entropy(logits, trace.gold_labels, loss.token_count));

    ad::Var label_rows;
    const ad::Var* label_ptr = nullptr;
    if (decoders_.label_table != nullptr) {
      trace.label_rows = choose_label_indices(fo.label_mode, trace.gold_labels, trace.predicted_labels);
      label_rows = select_label_embeddings(tape, decoders_, trace.label_rows);
      label_ptr = &label_rows;
    }
    const auto h_e_aug = augment_stream(h_e, label_ptr);
    const auto h_r_aug = augment_stream(h_r, label_ptr);

    std::vector<SpanCandidate> spans;
    std::vector<int> span_targets;
    for (const auto& m : item.positive_spans) {
      spans.push_back(as_span(m));
      span_targets.push_back(vocabularies_.entity_types.index(m.type));
    }
    for (const auto& s : item.negative_spans) {
      spans.push_back(s);
      span_targets.push_back(0);
    }
    if (!spans.empty()) {
      trace.span_logits = span_logits(span_representations(h_e_aug, spans,
                                                           tape.parameter(*decoders_.width_table)),
                                      decoders_);
      loss.span = ad::add(loss.span, mean_cross_entropy(trace.span_logits, span_targets,
                                                        loss.span_count));
    }

    std::vector<std::pair<SpanCandidate, SpanCandidate>> pairs;
    for (const auto& p : item.positive_pairs) pairs.emplace_back(as_span(p.head), as_span(p.tail));
    for (const auto& [h, t] : item.negative_pairs) pairs.emplace_back(as_span(h), as_span(t));
    if (!pairs.empty() && relation_types > 0) {
      Matrix targets = Matrix::Zero(static_cast<Eigen::Index>(pairs.size()), relation_types);
      for (size_t p = 0; p < item.positive_pairs.size(); ++p) {
        for (const auto& type : item.positive_pairs[p].types) {
          targets(static_cast<Eigen::Index>(p), vocabularies_.relation_types.index(type)) = 1.0;
        }
      }
      const auto repr = relation_representations(h_r_aug, pairs,
                                                 tape.parameter(*decoders_.width_table),
                                                 tape.parameter(*decoders_.no_context));
      trace.relation_logits = relation_logits(repr, decoders_);
      loss.relation = ad::add(loss.relation,
                              mean_binary_cross_entropy(trace.relation_logits, targets,
                                                        loss.pair_count,
                                                        options_.decoder.relation_loss_average));
    }
    if (fo.traces) fo.traces->push_back(std::move(trace));
  }
  loss.joint = ad::add(ad::add(loss.tagging, loss.span), loss.relation);
  return loss;
}

PredictionRecord StsnModel::predict(const std::vector<std::string>& tokens, int id,
                                    PredictionTrace* trace) const {
  PredictionRecord record;
  record.id = id;
  if (tokens.empty()) return record;
  ad::Tape tape(false);
  const int n = static_cast<int>(tokens.size());
  const auto token_repr = embed_tokens(tape, tokens, *backend_);
  const auto streams = run_stack(token_repr, stack_, {}, StackSettings::from_options(options_.stack));

  const auto logits = tag_logits(streams.final.label, decoders_);
  const auto predicted = argmax_rows(logits.value());
  ad::Var label_rows;
  const ad::Var* label_ptr = nullptr;
  if (decoders_.label_table != nullptr) {
    label_rows = select_label_embeddings(tape, decoders_, predicted);
    label_ptr = &label_rows;
  }
  const auto h_e_aug = augment_stream(streams.final.entity, label_ptr);
  const auto h_r_aug = augment_stream(streams.final.relation, label_ptr);
  const auto width_table = tape.parameter(*decoders_.width_table);

  const auto spans = enumerate_spans(n, options_.decoder.max_width);
  const auto span_scores = span_logits(span_representations(h_e_aug, spans, width_table), decoders_);
  const auto span_classes = argmax_rows(span_scores.value());
  std::vector<EntityMention> entities;
  for (size_t s = 0; s < spans.size(); ++s) {
    if (span_classes[s] == 0) continue;
    entities.push_back({vocabularies_.entity_types.at(span_classes[s]), spans[s].start, spans[s].end});
  }
  record.entities.insert(entities.begin(), entities.end());

  Matrix relation_scores;
  if (vocabularies_.relation_types.size() > 0 && record.entities.size() > 1) {
    std::vector<std::pair<EntityMention, EntityMention>> mention_pairs;
    std::vector<std::pair<SpanCandidate, SpanCandidate>> pairs;
    for (const auto& a : record.entities) {
      for (const auto& b : record.entities) {
        if (a == b) continue;
        mention_pairs.emplace_back(a, b);
        pairs.emplace_back(as_span(a), as_span(b));
      }
    }
    const auto repr = relation_representations(h_r_aug, pairs, width_table,
                                               tape.parameter(*decoders_.no_context));
    relation_scores = ad::sigmoid_values(relation_logits(repr, decoders_).value());
    const auto active = activated_relations(relation_scores, options_.decoder.relation_threshold);
    for (size_t p = 0; p < pairs.size(); ++p) {
      for (int k : active[p]) {
        record.relations.insert({mention_pairs[p].first, mention_pairs[p].second,
                                 vocabularies_.relation_types.at(k)});
      }
    }
  }

  if (trace) {
    trace->predicted_labels = predicted;
    trace->label_rows = decoders_.label_table ? predicted : std::vector<int>{};
    trace->tags.clear();
    for (int l : predicted) trace->tags.push_back(vocabularies_.labels.at(l));
    trace->spans = spans;
    trace->span_probabilities = ad::softmax_values(span_scores.value());
    trace->relation_scores = relation_scores;
  }
  return record;
}

std::vector<PredictionRecord> StsnModel::predict_corpus(const Corpus& corpus) const {
  std::vector<PredictionRecord> out(corpus.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<long>(corpus.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<size_t>(i)] = predict(corpus[static_cast<size_t>(i)].tokens, static_cast<int>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace stsn
