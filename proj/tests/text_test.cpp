#include <gtest/gtest.h>

#include <sstream>

#include "edge/text.hpp"
#include "support/toy.hpp"

namespace edge {
namespace {

const std::string kData = EDGE_TEST_DATA_DIR;

DistractorExample example(Tokens passage, Split split = Split::kTrain) {
  DistractorExample ex;
  ex.split = split;
  ex.passage = std::move(passage);
  ex.question = {"q"};
  ex.answer = {"a"};
  ex.gold_distractors = {{"d"}};
  return ex;
}

TEST(Vocabulary, SpecialsComeFirst) {
  Vocabulary v;
  EXPECT_EQ(v.size(), kNumSpecials);
  EXPECT_EQ(v.id("<pad>"), kPadId);
  EXPECT_EQ(v.id("<unk>"), kUnkId);
  EXPECT_EQ(v.id("<eos>"), kEosId);
  EXPECT_EQ(v.id("never"), kUnkId);
  EXPECT_THROW(v.token(3), std::out_of_range);
  EXPECT_EQ(v.add("x"), 3);
  EXPECT_EQ(v.add("x"), 3);
}

TEST(Vocabulary, FrequencyOrderTiesAndCaps) {
  std::vector<DistractorExample> ex{example({"b", "b", "c", "c", "z", "y"}), example({"b", "hidden"}, Split::kTest)};
  auto v = build_vocabulary(ex, 1, 100);
  // b:3, c:2, then count-1 tokens lexicographically: a d q y z.
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<unk>", "<eos>", "b", "c", "a", "d", "q", "y", "z"}));
  EXPECT_FALSE(v.contains("hidden"));
  EXPECT_EQ(build_vocabulary(ex, 2, 100).size(), 5u);
  EXPECT_EQ(build_vocabulary(ex, 1, 4).size(), 4u);
  EXPECT_THROW(build_vocabulary({}, 1, 10), std::invalid_argument);
}

TEST(Vocabulary, EncodeDecodeRoundTrip) {
  auto ex = testing::make_toy_corpus(20, 2);
  auto v = build_vocabulary(ex, 1, 1000);
  for (const auto& e : ex) EXPECT_EQ(decode_ids(v, encode_tokens(v, e.passage)), e.passage);
  EXPECT_EQ(encode_tokens(v, {"zzz"}), std::vector<TokenId>{kUnkId});
  EXPECT_EQ(decode_ids(v, {3, kEosId, 4}, true).size(), 1u);
}

TEST(Vocabulary, FileRoundTrip) {
  auto v = build_vocabulary(testing::make_toy_corpus(10, 3), 1, 1000);
  std::stringstream ss;
  save_vocabulary(v, ss);
  EXPECT_EQ(load_vocabulary(ss), v);
  std::istringstream bad("no header\nx\n");
  EXPECT_THROW(load_vocabulary(bad), std::runtime_error);
  std::istringstream dup(std::string(kVocabHeader) + "\nx\nx\n");
  EXPECT_THROW(load_vocabulary(dup), std::runtime_error);
}

TEST(Embeddings, FileRowsOverrideRandomInit) {
  Vocabulary v;
  v.add("cat");
  v.add("dog");
  v.add("emu");
  auto e = load_embeddings<double>(v, kData + "/emb4.txt", 4, 7);
  ASSERT_EQ(e.weights.rows(), 6);
  EXPECT_EQ(e.weights.row(kPadId).norm(), 0.0);
  EXPECT_EQ(e.weights(v.id("cat"), 1), 0.25);
  EXPECT_EQ(e.weights(v.id("dog"), 3), 4.0);
  EXPECT_NE(e.weights(kEosId, 0), 7.0);
  EXPECT_LE(e.weights.row(v.id("emu")).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_FALSE(e.trainable);

  auto r1 = load_embeddings<double>(v, "random", 4, 7), r2 = load_embeddings<double>(v, "random", 4, 7);
  EXPECT_EQ(r1.weights, r2.weights);
  EXPECT_EQ(r1.weights.row(v.id("emu")), e.weights.row(v.id("emu")));
}

TEST(Embeddings, WrongWidthIsConfigError) {
  Vocabulary v;
  v.add("cat");
  EXPECT_THROW(load_embeddings<double>(v, kData + "/emb_bad.txt", 4, 1), ConfigError);
  EXPECT_THROW(load_embeddings<double>(v, kData + "/does_not_exist.txt", 4, 1), ConfigError);
}

}  // namespace
}  // namespace edge
