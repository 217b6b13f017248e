#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "edge/corpus.hpp"
#include "edge/text.hpp"

namespace edge {

// Token ids plus a validity mask of the same length; padded positions hold
// kPadId and a false mask entry.
struct Sequence {
  std::vector<TokenId> ids;
  Mask mask;

  std::size_t width() const { return ids.size(); }
  std::size_t length() const { return count_true(mask); }
};

inline Sequence make_sequence(std::vector<TokenId> ids) {
  Sequence s;
  s.mask = full_mask(ids.size());
  s.ids = std::move(ids);
  return s;
}

inline Sequence pad_to(Sequence s, std::size_t width) {
  if (s.ids.size() > width) throw std::invalid_argument("pad_to: sequence wider than target");
  s.ids.resize(width, kPadId);
  s.mask.resize(width, false);
  return s;
}

struct ModelInput {
  Sequence passage;
  Sequence question;
  Sequence answer;
};

inline ModelInput make_input(const DistractorExample& ex, const Vocabulary& vocab) {
  return {make_sequence(encode_tokens(vocab, ex.passage)), make_sequence(encode_tokens(vocab, ex.question)),
          make_sequence(encode_tokens(vocab, ex.answer))};
}

// Gold distractor ids followed by the terminal EOS the decoder is trained to emit.
inline Sequence make_target(const Tokens& distractor, const Vocabulary& vocab) {
  auto ids = encode_tokens(vocab, distractor);
  ids.push_back(kEosId);
  return make_sequence(std::move(ids));
}

struct Batch {
  std::vector<std::size_t> source_index;
  std::vector<ModelInput> inputs;
  std::vector<Sequence> targets;

  std::size_t size() const { return inputs.size(); }
};

// Consecutive groups of batch_size examples; every field is padded to the
// widest instance of that field within its batch. Targets use the first gold
// distractor of each example.
inline std::vector<Batch> batch_examples(const std::vector<DistractorExample>& examples, const Vocabulary& vocab,
                                         std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<Batch> out;
  for (std::size_t start = 0; start < examples.size(); start += batch_size) {
    const std::size_t end = std::min(examples.size(), start + batch_size);
    Batch b;
    std::size_t wp = 0, wq = 0, wa = 0, wt = 0;
    for (std::size_t i = start; i < end; ++i) {
      b.source_index.push_back(i);
      b.inputs.push_back(make_input(examples[i], vocab));
      b.targets.push_back(make_target(examples[i].gold_distractors.at(0), vocab));
      wp = std::max(wp, b.inputs.back().passage.width());
      wq = std::max(wq, b.inputs.back().question.width());
      wa = std::max(wa, b.inputs.back().answer.width());
      wt = std::max(wt, b.targets.back().width());
    }
    for (std::size_t r = 0; r < b.size(); ++r) {
      b.inputs[r].passage = pad_to(std::move(b.inputs[r].passage), wp);
      b.inputs[r].question = pad_to(std::move(b.inputs[r].question), wq);
      b.inputs[r].answer = pad_to(std::move(b.inputs[r].answer), wa);
      b.targets[r] = pad_to(std::move(b.targets[r]), wt);
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace edge
