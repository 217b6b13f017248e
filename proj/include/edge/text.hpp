#pragma once

// Vocabulary and word-embedding matrix.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "edge/corpus.hpp"
#include "edge/random.hpp"
#include "edge/tensor.hpp"

namespace edge {

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kEosToken = "<eos>";
inline constexpr std::size_t kNumSpecials = 3;
inline constexpr const char* kVocabHeader = "#edge-vocab v1";

class Vocabulary {
 public:
  Vocabulary() : id_to_token_{kPadToken, kUnkToken, kEosToken} {
    for (std::size_t i = 0; i < id_to_token_.size(); ++i)
      token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i));
  }

  // Appends `token` unless present; returns its id.
  TokenId add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const auto id = static_cast<TokenId>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
  }

  std::size_t size() const { return id_to_token_.size(); }

  bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

  TokenId id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.id_to_token_ == b.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

// Counts tokens over every text field of the training-split examples. Tokens
// with frequency >= min_freq are kept in descending frequency order (ties
// lexicographic) until the vocabulary holds max_size entries including the
// three specials.
inline Vocabulary build_vocabulary(const std::vector<DistractorExample>& examples, std::size_t min_freq,
                                   std::size_t max_size) {
  if (examples.empty()) throw std::invalid_argument("build_vocabulary: no examples");
  std::unordered_map<std::string, std::size_t> freq;
  auto count = [&](const Tokens& ts) {
    for (const auto& t : ts) ++freq[t];
  };
  for (const auto& ex : examples) {
    if (ex.split != Split::kTrain) continue;
    count(ex.passage);
    count(ex.question);
    count(ex.answer);
    for (const auto& d : ex.gold_distractors) count(d);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, n] : ranked) {
    if (v.size() >= max_size) break;
    if (n < min_freq) break;
    if (v.contains(tok)) continue;
    v.add(tok);
  }
  return v;
}

inline std::vector<TokenId> encode_tokens(const Vocabulary& vocab, const Tokens& tokens) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

// With stop_at_eos, decoding ends before the first EOS.
inline Tokens decode_ids(const Vocabulary& vocab, const std::vector<TokenId>& ids, bool stop_at_eos = false) {
  Tokens out;
  for (TokenId id : ids) {
    if (stop_at_eos && id == kEosId) break;
    out.push_back(vocab.token(id));
  }
  return out;
}

inline void save_vocabulary(const Vocabulary& vocab, std::ostream& out) {
  out << kVocabHeader << '\n';
  for (std::size_t i = kNumSpecials; i < vocab.size(); ++i) out << vocab.tokens()[i] << '\n';
}

inline Vocabulary load_vocabulary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kVocabHeader)
    throw std::runtime_error("vocabulary: missing or unsupported header");
  Vocabulary v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (v.contains(line)) throw std::runtime_error("vocabulary: duplicate token " + line);
    v.add(line);
  }
  return v;
}

template <typename T>
struct EmbeddingMatrix {
  Matrix<T> weights;
  bool trainable = false;
};

// Rows come from `source` when it names a file holding the token, otherwise
// uniform(-0.1, 0.1) draws in row order. The PAD row is zero.
template <typename T>
EmbeddingMatrix<T> load_embeddings(const Vocabulary& vocab, const std::string& source, std::size_t dim,
                                   std::uint64_t seed, bool trainable = false) {
  EmbeddingMatrix<T> emb;
  emb.trainable = trainable;
  const auto rows = static_cast<Eigen::Index>(vocab.size());
  const auto cols = static_cast<Eigen::Index>(dim);
  emb.weights.resize(rows, cols);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) emb.weights(i, j) = static_cast<T>(rng.uniform(-0.1, 0.1));

  if (source != "random" && !source.empty()) {
    std::ifstream in(source);
    if (!in) throw ConfigError("cannot open embedding file: " + source);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string tok;
      if (!(ls >> tok)) continue;
      std::vector<double> vals;
      double x;
      while (ls >> x) vals.push_back(x);
      if (vals.size() != dim)
        throw ConfigError("embedding file " + source + " line " + std::to_string(lineno) + ": expected " +
                          std::to_string(dim) + " values, found " + std::to_string(vals.size()));
      if (!vocab.contains(tok)) continue;
      const TokenId id = vocab.id(tok);
      if (id < static_cast<TokenId>(kNumSpecials)) continue;
      for (std::size_t j = 0; j < dim; ++j) emb.weights(id, static_cast<Eigen::Index>(j)) = static_cast<T>(vals[j]);
    }
  }
  emb.weights.row(kPadId).setZero();
  return emb;
}

}  // namespace edge
