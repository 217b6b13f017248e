#include <gtest/gtest.h>

#include "edge/reform.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

namespace edge {
namespace {

using namespace edge::testing;

ModelInput random_input(std::uint64_t seed, std::size_t vocab, std::size_t pad = 0) {
  Rng rng(seed);
  return {random_sequence(rng, 5, vocab, pad), random_sequence(rng, 3, vocab, pad), random_sequence(rng, 2, vocab, pad)};
}

TEST(Reform, ShapesFollowInputs) {
  auto model = tiny_model(4, 6, 1);
  ad::Tape<double> tape(false);
  auto bm = bind(model, tape);
  auto e = encode_materials(bm, random_input(2, 6));
  EXPECT_EQ(e.p.rows(), 5);
  EXPECT_EQ(e.p.cols(), 4);
  EXPECT_EQ(e.enriched.q_tilde.rows(), 3);
  EXPECT_EQ(e.enriched.a_attention.cols(), 5);
  EXPECT_EQ(e.question.q_dot.rows(), 3);
  EXPECT_EQ(e.question.gate_values.cols(), 1);
  EXPECT_EQ(e.passage.p_hat.rows(), 5);
  EXPECT_EQ(e.passage.gate_values.rows(), 5);
  EXPECT_EQ(e.h0.rows(), 1);
  EXPECT_EQ(e.h0.cols(), 4);
}

TEST(Reform, PaddingIsInvisible) {
  auto model = tiny_model(4, 9, 3);
  ad::Tape<double> t1(false), t2(false);
  auto a = encode_materials(bind(model, t1), random_input(4, 9));
  auto b = encode_materials(bind(model, t2), random_input(4, 9, 3));
  EXPECT_EQ(a.h0.value(), b.h0.value());
  EXPECT_EQ(a.passage.p_hat.value(), Mat(b.passage.p_hat.value().topRows(5)));
  EXPECT_EQ(b.passage.p_hat.value().bottomRows(3).norm(), 0.0);
  EXPECT_EQ(a.question.q_dot.value(), Mat(b.question.q_dot.value().topRows(3)));
}

TEST(Reform, FullyMaskedFieldThrows) {
  auto model = tiny_model(4, 6, 1);
  ad::Tape<double> tape(false);
  auto in = random_input(2, 6);
  in.answer.mask.assign(in.answer.mask.size(), false);
  EXPECT_THROW(encode_materials(bind(model, tape), in), std::invalid_argument);
}

// The answer-to-question attention reads the enriched question, so changing
// the question gate must leave the fused answer untouched while still moving
// the passage-question fusion downstream.
TEST(Reform, AnswerQuestionAttentionReadsEnrichedQuestion) {
  auto model = tiny_model(4, 8, 5);
  auto in = random_input(6, 8);
  ad::Tape<double> t1(false);
  auto before = encode_materials(bind(model, t1), in);
  model.params.value(model.ids.gate_q_w) *= 3.0;
  model.params.value(model.ids.gate_q_b)(0, 0) += 0.7;
  ad::Tape<double> t2(false);
  auto after = encode_materials(bind(model, t2), in);
  EXPECT_EQ(before.passage.a_hat.value(), after.passage.a_hat.value());
  EXPECT_EQ(before.passage.p_dot.value(), after.passage.p_dot.value());
  EXPECT_GT((before.passage.p_tilde.value() - after.passage.p_tilde.value()).norm(), 1e-6);
}

// With a zero weight and unit bias the passage gate is the identity on the
// contextual passage.
TEST(Reform, PassageGateMultipliesContextualPassage) {
  auto model = tiny_model(4, 8, 7);
  model.params.value(model.ids.gate_p_w).setZero();
  model.params.value(model.ids.gate_p_b)(0, 0) = 1.0;
  ad::Tape<double> tape(false);
  auto e = encode_materials(bind(model, tape), random_input(8, 8));
  EXPECT_EQ(e.passage.p_dot.value(), e.p.value());
}

TEST(Reform, GateValuesMatchOracle) {
  auto model = tiny_model(4, 8, 9);
  ad::Tape<double> tape(false);
  auto e = encode_materials(bind(model, tape), random_input(10, 8));
  const auto& P = model.params;
  auto v_a = oracle_self_align(e.enriched.a_tilde.value(), P.value(model.ids.self_align_w));
  auto dq = oracle_gate_values(e.enriched.q_tilde.value(), v_a, P.value(model.ids.gate_q_w),
                               P.value(model.ids.gate_q_b)(0, 0));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(e.question.gate_values.value()(i, 0), dq[i], 1e-12);
  auto v_hat = oracle_self_align(e.passage.a_hat.value(), P.value(model.ids.self_align_w));
  auto dp = oracle_gate_values(e.p.value(), v_hat, P.value(model.ids.gate_p_w), P.value(model.ids.gate_p_b)(0, 0));
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(e.passage.gate_values.value()(i, 0), dp[i], 1e-12);
}

TEST(Reform, ParameterGradientsMatchFiniteDifferences) {
  auto model = tiny_model(4, 6, 11);
  auto in = random_input(12, 6, 1);
  auto rep = check_param_gradients(model, [&](const BoundModel<double>& bm) {
    auto e = encode_materials(bm, in);
    return ad::add(weighted_sum(e.passage.p_hat, 1), weighted_sum(e.h0, 2));
  });
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
  EXPECT_GT(rep.checked, 0u);
}

}  // namespace
}  // namespace edge
