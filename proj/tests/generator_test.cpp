#include <gtest/gtest.h>

#include <cmath>

#include "edge/generator.hpp"
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

TEST(Decoder, StepDistributionsAndAttentionAreNormalized) {
  auto model = tiny_model(4, 7, 1);
  ad::Tape<double> tape(false);
  auto bm = bind(model, tape);
  auto mat = encode_materials(bm, random_input(2, 7, 2));
  auto s = init_decode(bm, mat.p_hat(), mat.p_mask, mat.h0);
  auto e = start_embedding(bm, 1, {});
  for (int t = 0; t < 4; ++t) {
    auto step = decode_step(bm, s, e, mat.p_hat(), mat.p_mask);
    auto probs = probabilities(step.logits.value());
    EXPECT_NEAR(probs.sum(), 1.0, 1e-12);
    EXPECT_NEAR(step.attention.value().sum(), 1.0, 1e-12);
    EXPECT_EQ(step.attention.value()(0, 5), 0.0);
    EXPECT_EQ(step.attention.value()(0, 6), 0.0);
    EXPECT_EQ(step.state.step, static_cast<std::size_t>(t + 1));
    s = step.state;
    e = ad::gather_rows(bm.embedding, {static_cast<TokenId>(3 + t)});
  }
}

TEST(Decoder, InitialContextIsMaskedMean) {
  auto model = tiny_model(4, 7, 3);
  ad::Tape<double> tape(false);
  auto bm = bind(model, tape);
  auto mat = encode_materials(bm, random_input(4, 7, 2));
  auto s = init_decode(bm, mat.p_hat(), mat.p_mask, mat.h0);
  Mat expect = mat.p_hat().value().topRows(5).colwise().sum() / 5.0;
  EXPECT_LT((s.context.value() - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(s.cell.value().norm(), 0.0);
  EXPECT_EQ(s.h.value(), mat.h0.value());
}

// Zero output weights give a uniform distribution, so the loss is
// (tokens + EOS) * ln |V|.
TEST(SequenceLoss, UniformModelCostsLogVocabPerToken) {
  auto model = tiny_model(4, 4, 5);
  model.params.value(model.ids.out_w).setZero();
  model.params.value(model.ids.out_b).setZero();
  ad::Tape<double> tape(false);
  auto bm = bind(model, tape);
  auto mat = encode_materials(bm, random_input(6, 4));
  auto loss = sequence_loss(bm, mat, make_sequence({3, 3, 3, kEosId}));
  EXPECT_NEAR(loss.value()(0, 0), 4.0 * std::log(4.0), 1e-12);
}

TEST(SequenceLoss, MatchesStepwiseDecoding) {
  auto model = tiny_model(4, 8, 7);
  ad::Tape<double> tape(false);
  auto bm = bind(model, tape);
  auto mat = encode_materials(bm, random_input(8, 8));
  const std::vector<TokenId> gold{4, 6, 5, kEosId};
  auto loss = sequence_loss(bm, mat, pad_to(make_sequence(gold), 6)).value()(0, 0);

  double manual = 0.0;
  auto s = init_decode(bm, mat.p_hat(), mat.p_mask, mat.h0);
  auto e = start_embedding(bm, 1, {});
  for (TokenId g : gold) {
    auto step = decode_step(bm, s, e, mat.p_hat(), mat.p_mask);
    manual -= std::log(probabilities(step.logits.value())(0, g));
    s = step.state;
    e = ad::gather_rows(bm.embedding, {g});
  }
  EXPECT_NEAR(loss, manual, 1e-10);
}

TEST(SequenceLoss, EmptyTargetThrows) {
  auto model = tiny_model(4, 6, 1);
  ad::Tape<double> tape(false);
  auto bm = bind(model, tape);
  auto mat = encode_materials(bm, random_input(2, 6));
  EXPECT_THROW(sequence_loss(bm, mat, pad_to(Sequence{}, 2)), std::invalid_argument);
}

TEST(SequenceLoss, ParameterGradientsMatchFiniteDifferences) {
  auto model = tiny_model(4, 6, 9);
  auto in = random_input(10, 6, 1);
  auto target = make_sequence({3, 5, kEosId});
  auto rep = check_param_gradients(model, [&](const BoundModel<double>& bm) {
    return sequence_loss(bm, encode_materials(bm, in), target);
  });
  EXPECT_LT(rep.max_rel, 1e-6) << rep.worst;
}

TEST(Dropout, RateAndMeanPreserved) {
  Rng rng(42);
  Matrix<double> x = Matrix<double>::Ones(200, 200);
  auto y = apply_dropout(x, 0.5, true, rng);
  const double zeros = static_cast<double>((y.array() == 0.0).count()) / static_cast<double>(y.size());
  EXPECT_NEAR(zeros, 0.5, 0.02);
  EXPECT_NEAR(y.mean(), 1.0, 0.02);
  EXPECT_EQ(apply_dropout(x, 0.5, false, rng), x);
  EXPECT_THROW(apply_dropout(x, 1.0, true, rng), std::invalid_argument);
  EXPECT_THROW(apply_dropout(x, -0.1, true, rng), std::invalid_argument);
}

TEST(Dropout, TrainingLossIsStochasticEvalIsNot) {
  auto model = tiny_model(4, 8, 11);
  auto in = random_input(12, 8);
  auto target = make_sequence({3, 4, kEosId});
  auto run = [&](ForwardContext ctx) {
    ad::Tape<double> tape(false);
    auto bm = bind(model, tape);
    return sequence_loss(bm, encode_materials(bm, in, ctx), target, ctx).value()(0, 0);
  };
  Rng r1(1), r2(2);
  EXPECT_NE(run({true, 0.3, &r1}), run({true, 0.3, &r2}));
  EXPECT_EQ(run({}), run({false, 0.3, &r1}));
}

TEST(Model, CreateValidatesConfig) {
  ModelConfig cfg;
  cfg.dim = 3;
  cfg.vocab_size = 5;
  Vocabulary v;
  v.add("a");
  v.add("b");
  auto emb = load_embeddings<double>(v, "random", 3, 1, false);
  EXPECT_THROW(Model<double>::create(cfg, emb, 1), ConfigError);
  cfg.dim = 4;
  EXPECT_THROW(Model<double>::create(cfg, emb, 1), ConfigError);
}

TEST(Model, SameSeedSameParameters) {
  auto a = tiny_model(4, 6, 3), b = tiny_model(4, 6, 3), c = tiny_model(4, 6, 4);
  ASSERT_EQ(a.params.size(), b.params.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    EXPECT_EQ(a.params.value(i), b.params.value(i));
    differs |= a.params.value(i) != c.params.value(i);
  }
  EXPECT_TRUE(differs);
  auto ids = Model<double>::resolve_ids(a.params);
  EXPECT_EQ(ids.out_w, a.ids.out_w);
  EXPECT_EQ(ids.decoder.w_h, a.ids.decoder.w_h);
}

}  // namespace
}  // namespace edge
