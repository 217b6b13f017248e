#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "edge/inference.hpp"
#include "support/oracles.hpp"
#include "support/toy.hpp"

namespace edge {
namespace {

using namespace edge::testing;

ModelInput random_input(std::uint64_t seed, std::size_t vocab, std::size_t pad = 0) {
  Rng rng(seed);
  return {random_sequence(rng, 5, vocab, pad), random_sequence(rng, 3, vocab, pad), random_sequence(rng, 2, vocab, pad)};
}

double rescore(const Model<double>& model, const ModelInput& in, const std::vector<TokenId>& ids) {
  ad::Tape<double> tape(false);
  auto bm = bind(model, tape);
  return -sequence_loss(bm, encode_materials(bm, in), make_sequence(ids)).value()(0, 0);
}

TEST(Jaccard, Examples) {
  EXPECT_DOUBLE_EQ(jaccard_distance({"a", "b", "c"}, {"b", "c", "d"}), 0.5);
  EXPECT_DOUBLE_EQ(jaccard_distance({"A", "b"}, {"a", "B", "b"}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard_distance({}, {}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard_distance({"x"}, {}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard_distance({"x", "<eos>"}, {"x", "<pad>"}), 0.0);
}

TEST(Jaccard, SymmetricAndBounded) {
  Rng rng(3);
  const Tokens pool{"a", "b", "c", "d", "e"};
  for (int i = 0; i < 200; ++i) {
    Tokens s, t;
    for (std::size_t k = rng.below(4); k > 0; --k) s.push_back(pool[rng.below(5)]);
    for (std::size_t k = rng.below(4); k > 0; --k) t.push_back(pool[rng.below(5)]);
    const double d = jaccard_distance(s, t);
    EXPECT_EQ(d, jaccard_distance(t, s));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_EQ(jaccard_distance(s, s), 0.0);
  }
}

TEST(SelectDiverse, PicksFirstSufficientlyDistant) {
  std::vector<Tokens> c{{"a", "b"}, {"a", "b", "c"}, {"c", "d"}, {"c", "d", "e"}, {"f"}};
  auto s = select_diverse(c);
  EXPECT_EQ(s.ranks, (std::array<std::size_t, 3>{0, 2, 4}));
  EXPECT_FALSE(s.fallback);
  EXPECT_DOUBLE_EQ(s.distances[0], 1.0);
}

TEST(SelectDiverse, ThresholdIsStrict) {
  // Distance exactly 0.5 is not enough.
  std::vector<Tokens> c{{"a", "b", "c"}, {"b", "c", "d"}, {"x"}, {"y"}};
  auto s = select_diverse(c);
  EXPECT_EQ(s.ranks, (std::array<std::size_t, 3>{0, 2, 3}));
}

TEST(SelectDiverse, FallsBackToRankOrder) {
  std::vector<Tokens> c{{"a"}, {"a"}, {"a", "A"}};
  auto s = select_diverse(c);
  EXPECT_TRUE(s.fallback);
  EXPECT_EQ(s.ranks, (std::array<std::size_t, 3>{0, 1, 2}));
  auto one = select_diverse({{"z"}});
  EXPECT_TRUE(one.fallback);
  EXPECT_EQ(one.ranks, (std::array<std::size_t, 3>{0, 0, 0}));
  EXPECT_THROW(select_diverse({}), std::invalid_argument);
}

TEST(Beam, SizeOneIsGreedy) {
  auto model = tiny_model(4, 9, 1);
  auto in = random_input(2, 9);
  auto g = greedy_decode(model, in, 6);
  auto b = beam_search(model, in, {1, 6, false});
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].token_ids, g.token_ids);
  EXPECT_NEAR(b[0].log_prob, g.log_prob, 1e-12);
}

TEST(Beam, ScoresAreSequenceLogProbabilities) {
  auto model = tiny_model(4, 7, 3);
  auto in = random_input(4, 7, 2);
  auto beam = beam_search(model, in, {6, 4, false});
  ASSERT_EQ(beam.size(), 6u);
  for (std::size_t i = 0; i < beam.size(); ++i) {
    const auto& h = beam[i];
    EXPECT_TRUE(h.finished);
    EXPECT_LE(h.length(), 4u);
    EXPECT_TRUE(h.token_ids.back() == kEosId || h.length() == 4);
    EXPECT_EQ(std::count(h.token_ids.begin(), h.token_ids.end(), kPadId), 0);
    EXPECT_NEAR(h.log_prob, rescore(model, in, h.token_ids), 1e-9);
    if (i > 0) {
      EXPECT_LE(h.log_prob, beam[i - 1].log_prob);
    }
  }
}

TEST(Beam, WideBeamMatchesExhaustiveSearch) {
  auto model = tiny_model(4, 5, 5);
  auto in = random_input(6, 5);
  std::vector<std::pair<double, std::vector<TokenId>>> all;
  std::function<void(std::vector<TokenId>)> walk = [&](std::vector<TokenId> prefix) {
    for (TokenId v = 1; v < 5; ++v) {
      auto s = prefix;
      s.push_back(v);
      if (v == kEosId || s.size() == 3)
        all.emplace_back(rescore(model, in, s), s);
      else
        walk(s);
    }
  };
  walk({});
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  auto beam = beam_search(model, in, {200, 3, false});
  ASSERT_EQ(beam.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_NEAR(beam[i].log_prob, all[i].first, 1e-9);
    EXPECT_EQ(beam[i].token_ids, all[i].second);
  }
}

TEST(Beam, RejectsZeroSizes) {
  auto model = tiny_model(4, 5, 5);
  auto in = random_input(6, 5);
  EXPECT_THROW(beam_search(model, in, {0, 3, false}), std::invalid_argument);
  EXPECT_THROW(beam_search(model, in, {3, 0, false}), std::invalid_argument);
}

TEST(Beam, LengthNormalizationRanksByMeanLogProb) {
  auto model = tiny_model(4, 7, 7);
  auto in = random_input(8, 7);
  auto beam = beam_search(model, in, {8, 5, true});
  for (std::size_t i = 1; i < beam.size(); ++i)
    EXPECT_LE(ranking_score(beam[i], true), ranking_score(beam[i - 1], true));
}

TEST(Generate, PaddingDoesNotChangeOutput) {
  auto model = tiny_model(4, 9, 9);
  Vocabulary v;
  for (std::size_t i = v.size(); i < 9; ++i) v.add("w" + std::to_string(i));
  auto a = generate_distractors(model, v, random_input(10, 9), {5, 4, false});
  auto b = generate_distractors(model, v, random_input(10, 9, 4), {5, 4, false});
  EXPECT_EQ(a.set.distractors, b.set.distractors);
  ASSERT_EQ(a.beam.size(), b.beam.size());
  for (std::size_t i = 0; i < a.beam.size(); ++i) EXPECT_EQ(a.beam[i].log_prob, b.beam[i].log_prob);
  for (const auto& d : a.set.distractors) EXPECT_EQ(std::count(d.begin(), d.end(), "<eos>"), 0);
}

}  // namespace
}  // namespace edge
