#include <doctest.h>

#include <cmath>

#include "stsn/decoders/decoders.hpp"
#include "stsn/errors.hpp"
#include "stsn/model/model.hpp"
#include "support.hpp"

using namespace stsn;

namespace {

DecoderOptions small_options() {
  DecoderOptions o;
  o.label_dim = 2;
  o.width_dim = 3;
  o.max_width = 4;
  return o;
}

using Pair = std::pair<SpanCandidate, SpanCandidate>;

}  // namespace

TEST_CASE("representation widths") {
  const DecoderOptions defaults;
  CHECK(span_representation_dim(768, defaults) == 1986);
  CHECK(relation_representation_dim(768, defaults) == 4890);
  auto no_label = defaults;
  no_label.no_label_embedding = true;
  CHECK(span_representation_dim(768, defaults) - span_representation_dim(768, no_label) == 300);
  CHECK(relation_representation_dim(768, defaults) - relation_representation_dim(768, no_label) ==
        750);
}

TEST_CASE("tag decoding") {
  const auto uniform = decode_sequence_labels(Matrix::Zero(2, 3));
  CHECK((uniform.probabilities.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);
  CHECK(uniform.labels == std::vector<int>{0, 0});

  const Matrix logits = (Matrix(1, 3) << 2, 0, 0).finished();
  const auto d = decode_sequence_labels(logits);
  const double e2 = std::exp(2.0);
  CHECK(d.probabilities(0, 0) == doctest::Approx(e2 / (e2 + 2)).epsilon(1e-12));
  CHECK(d.labels == std::vector<int>{0});
  CHECK(argmax_rows((Matrix(2, 3) << 0, 5, 5, -1, -2, -0.5).finished()) == std::vector<int>{1, 2});
}

TEST_CASE("tagging and span losses on uniform logits") {
  ad::Tape tape;
  const int t4[] = {0, 1, 2, 3};
  CHECK(mean_cross_entropy(tape.constant(Matrix::Zero(4, 4)), t4, 4).value()(0, 0) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const int t5[] = {3, 3};
  CHECK(mean_cross_entropy(tape.constant(Matrix::Zero(2, 5)), t5, 2).value()(0, 0) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));
  // Scaling is by the batch-wide count, not the rows of this call.
  CHECK(mean_cross_entropy(tape.constant(Matrix::Zero(2, 5)), t5, 4).value()(0, 0) ==
        doctest::Approx(std::log(5.0) / 2).epsilon(1e-12));
  CHECK_THROWS_AS(mean_cross_entropy(tape.constant(Matrix::Zero(2, 5)), t5, 0), ShapeError);
}

TEST_CASE("binary cross-entropy averaging and exact targets") {
  ad::Tape tape;
  const Matrix zero_logits = Matrix::Zero(2, 3);
  const Matrix targets = (Matrix(2, 3) << 1, 0, 1, 0, 0, 1).finished();
  const double per_entry = std::log(2.0);
  CHECK(mean_binary_cross_entropy(tape.constant(zero_logits), targets, 2,
                                  RelationLossAverage::kPairType)
            .value()(0, 0) == doctest::Approx(per_entry).epsilon(1e-12));
  CHECK(mean_binary_cross_entropy(tape.constant(zero_logits), targets, 2, RelationLossAverage::kPair)
            .value()(0, 0) == doctest::Approx(3 * per_entry).epsilon(1e-12));
  const Matrix confident = (targets.array() * 2 - 1).matrix() * 60.0;
  CHECK(mean_binary_cross_entropy(tape.constant(confident), targets, 2,
                                  RelationLossAverage::kPairType)
            .value()(0, 0) < 1e-20);
}

TEST_CASE("relation activation threshold is inclusive") {
  const Matrix scores = (Matrix(1, 3) << 0.39, 0.40, 0.70).finished();
  CHECK(activated_relations(scores, 0.4) == std::vector<std::vector<int>>{{1, 2}});
  CHECK(activated_relations(Matrix::Zero(1, 2), 0.4) == std::vector<std::vector<int>>{{}});
}

TEST_CASE("label embedding lookup") {
  std::mt19937_64 rng(1);
  ParameterStore store;
  const auto p = DecoderParams::create(store, 4, 5, 3, 2, small_options(), rng);
  const std::vector<int> gold = {0, 3, 4}, predicted = {1, 1, 2};
  CHECK(&choose_label_indices(LabelMode::kTraining, gold, predicted) == &gold);
  CHECK(&choose_label_indices(LabelMode::kInference, gold, predicted) == &predicted);

  ad::Tape tape;
  const auto rows = select_label_embeddings(tape, p, gold);
  for (int i = 0; i < 3; ++i) {
    CHECK(rows.value().row(i) == p.label_table->value.row(gold[static_cast<size_t>(i)]));
  }
  CHECK_THROWS_AS(select_label_embeddings(tape, p, {5}), VocabularyError);
  CHECK_THROWS_AS(select_label_embeddings(tape, p, {-1}), VocabularyError);

  const auto stream = tape.constant(test::random_matrix(3, 4, rng));
  const auto augmented = augment_stream(stream, &rows);
  CHECK(augmented.cols() == 6);
  CHECK(augmented.value().leftCols(4) == stream.value());
  CHECK(augmented.value().rightCols(2) == rows.value());
  CHECK(augment_stream(stream, nullptr).value() == stream.value());
}

TEST_CASE("span representations") {
  std::mt19937_64 rng(2);
  ad::Tape tape;
  const Matrix h = test::random_matrix(5, 3, rng);
  const Matrix widths = test::random_matrix(4, 2, rng);
  const auto hv = tape.constant(h);
  const auto wv = tape.constant(widths);
  const SpanCandidate spans[] = {{2, 3}, {1, 4}};
  const auto reps = span_representations(hv, spans, wv);
  REQUIRE(reps.cols() == 8);
  CHECK(reps.value().row(0).segment(0, 3) == reps.value().row(0).segment(3, 3));
  CHECK(reps.value().row(0).segment(0, 3) == h.row(2));
  CHECK(reps.value().row(0).segment(6, 2) == widths.row(0));
  CHECK(reps.value().row(1).segment(0, 3) == h.row(1));
  CHECK(reps.value().row(1).segment(3, 3) == h.row(3));
  CHECK(reps.value().row(1).segment(6, 2) == widths.row(2));

  const SpanCandidate too_wide[] = {{0, 5}};
  CHECK_THROWS_AS(span_representations(hv, too_wide, wv), ValidationError);
  const SpanCandidate outside[] = {{4, 6}};
  CHECK_THROWS_AS(span_representations(hv, outside, wv), ValidationError);
}

TEST_CASE("relation context vectors") {
  CHECK(context_gap({0, 1}, {3, 5}) == std::pair{1, 3});
  CHECK(context_gap({3, 5}, {0, 1}) == std::pair{1, 3});
  CHECK(context_gap({0, 2}, {2, 3}) == std::pair{2, 2});

  ad::Tape tape;
  Matrix h(5, 2);
  h << 9, 9, 1, 0, 0, 2, 9, 9, 9, 9;
  const Matrix none = (Matrix(1, 2) << -7, -8).finished();
  const Pair pairs[] = {{{0, 1}, {3, 5}}, {{0, 2}, {2, 3}}, {{0, 1}, {2, 3}}, {{0, 3}, {1, 2}}};
  const auto ctx = relation_contexts(tape.constant(h), pairs, tape.constant(none));
  CHECK(ctx.value().row(0) == (Matrix(1, 2) << 1, 2).finished());
  CHECK(ctx.value().row(1) == none);
  CHECK(ctx.value().row(2) == h.row(1));
  CHECK(ctx.value().row(3) == none);

  const Pair only_empty[] = {{{0, 1}, {1, 2}}};
  CHECK(relation_contexts(tape.constant(h), only_empty, tape.constant(none)).value() == none);
}

TEST_CASE("relation representations concatenate both spans and the context") {
  std::mt19937_64 rng(3);
  ad::Tape tape;
  const auto h = tape.constant(test::random_matrix(6, 3, rng));
  const auto w = tape.constant(test::random_matrix(4, 2, rng));
  const auto none = tape.constant(test::random_matrix(1, 3, rng));
  const Pair pairs[] = {{{0, 2}, {4, 6}}, {{4, 6}, {0, 2}}};
  const auto reps = relation_representations(h, pairs, w, none);
  REQUIRE(reps.cols() == 2 * 8 + 3);
  const SpanCandidate a[] = {{0, 2}}, b[] = {{4, 6}};
  const auto ea = span_representations(h, a, w).value();
  const auto eb = span_representations(h, b, w).value();
  const auto ctx = relation_contexts(h, pairs, none).value();
  CHECK(reps.value().row(0).segment(0, 8) == ea.row(0));
  CHECK(reps.value().row(0).segment(8, 8) == eb.row(0));
  CHECK(reps.value().row(0).segment(16, 3) == ctx.row(0));
  CHECK(reps.value().row(1).segment(0, 8) == eb.row(0));
  CHECK(reps.value().row(1).segment(8, 8) == ea.row(0));
  CHECK_FALSE(reps.value().row(0) == reps.value().row(1));
  CHECK(reps.value().row(0).segment(16, 3) == reps.value().row(1).segment(16, 3));
}

TEST_CASE("decoder parameter counts") {
  for (bool no_label : {false, true}) {
    auto options = small_options();
    options.no_label_embedding = no_label;
    std::mt19937_64 rng(4);
    ParameterStore store;
    const auto p = DecoderParams::create(store, 6, 7, 3, 2, options, rng);
    CHECK(store.scalar_count() == DecoderParams::scalar_count(6, 7, 3, 2, options));
    CHECK((p.label_table == nullptr) == no_label);
    const std::size_t ld = no_label ? 0 : 2;
    const std::size_t es = 2 * (6 + ld) + 3;
    const std::size_t er = 2 * es + 6 + ld;
    CHECK(store.scalar_count() == 6 * 7 + 7 + 7 * ld + 4 * 3 + es * 3 + 3 + er * 2 + 2 + 6 + ld);
    CHECK(p.span_weight->value.rows() == static_cast<Eigen::Index>(es));
    CHECK(p.relation_weight->value.rows() == static_cast<Eigen::Index>(er));
  }
}

TEST_CASE("teacher forcing uses gold labels in training and predictions at inference") {
  auto corpus = std::vector<SentenceExample>{test::work_for_sentence()};
  const Config config = test::tiny_config(8, 1, 2, 4, 4);
  StsnModel model(config, build_vocabularies(corpus), corpus);
  const int labels = static_cast<int>(model.vocabularies().labels.size());
  const int forced = labels - 1;
  const int indices[] = {0};
  const auto batch = make_batch(corpus, indices, {5, 5, 10}, 1);
  const auto gold = model.gold_label_indices(corpus[0]);

  auto run = [&](LabelMode mode, bool perturb) {
    ad::Tape tape;
    std::vector<SentenceTrace> traces;
    ForwardOptions options;
    options.label_mode = mode;
    options.traces = &traces;
    if (perturb) {
      options.tag_logit_offset = [&](int, Matrix& offset) { offset.col(forced).array() += 1e3; };
    }
    const auto loss = model.forward_batch(tape, batch, options);
    return std::tuple{traces[0].label_rows, traces[0].predicted_labels,
                      loss.span.value()(0, 0), loss.relation.value()(0, 0),
                      loss.joint.value()(0, 0), loss.tagging.value()(0, 0)};
  };

  const auto [rows_a, pred_a, span_a, rel_a, joint_a, tag_a] = run(LabelMode::kTraining, false);
  const auto [rows_b, pred_b, span_b, rel_b, joint_b, tag_b] = run(LabelMode::kTraining, true);
  CHECK(rows_a == gold);
  CHECK(rows_b == gold);
  CHECK(pred_b == std::vector<int>(gold.size(), forced));
  CHECK(span_a == span_b);
  CHECK(rel_a == rel_b);
  CHECK(tag_a != tag_b);
  CHECK(joint_a == doctest::Approx(tag_a + span_a + rel_a).epsilon(1e-12));

  const auto inference = run(LabelMode::kInference, true);
  CHECK(std::get<0>(inference) == std::get<1>(inference));
  CHECK(std::get<0>(inference) == std::vector<int>(gold.size(), forced));
}
