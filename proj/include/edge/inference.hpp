#pragma once

// Beam search over the decoder and Jaccard-based selection of three diverse
// distractors from the ranked beam.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "edge/generator.hpp"

namespace edge {

struct BeamHypothesis {
  std::vector<TokenId> token_ids;  // ends with EOS when finished by EOS
  double log_prob = 0.0;
  bool finished = false;

  std::size_t length() const { return token_ids.size(); }
};

struct BeamOptions {
  std::size_t beam_size = 50;
  std::size_t max_len = 15;  // emitted tokens, EOS included
  bool length_normalize = false;
};

inline double ranking_score(const BeamHypothesis& h, bool length_normalize) {
  if (!length_normalize || h.token_ids.empty()) return h.log_prob;
  return h.log_prob / static_cast<double>(h.token_ids.size());
}

// Decoder inputs that stay fixed while a sequence is generated.
template <typename T>
struct DecodingContext {
  Matrix<T> p_hat;
  Mask p_mask;
  Matrix<T> h0;
  Matrix<T> context0;
};

template <typename T>
DecodingContext<T> prepare_decoding(const Model<T>& model, const ModelInput& input) {
  ad::Tape<T> tape(false);
  auto m = bind(model, tape);
  auto mat = encode_materials(m, input);
  auto s = init_decode(m, mat.p_hat(), mat.p_mask, mat.h0);
  return {mat.p_hat().value(), mat.p_mask, mat.h0.value(), s.context.value()};
}

// Rows of decoder state carried between steps outside any tape.
template <typename T>
struct StateRows {
  Matrix<T> h, cell, context;
};

template <typename T>
struct StepOutput {
  StateRows<T> state;
  Matrix<T> log_probs;  // k x |V|
  Matrix<T> attention;  // k x L_p
};

template <typename T>
StepOutput<T> run_decode_step(const Model<T>& model, const DecodingContext<T>& dc, const StateRows<T>& rows,
                              const std::vector<TokenId>& prev_tokens) {
  ad::Tape<T> tape(false);
  auto m = bind(model, tape);
  DecoderState<T> s{tape.constant(rows.h), tape.constant(rows.cell), tape.constant(rows.context), 0};
  auto step = decode_step(m, s, embed(m, prev_tokens, {}), tape.constant(dc.p_hat), dc.p_mask);
  return {{step.state.h.value(), step.state.cell.value(), step.state.context.value()},
          ad::log_softmax_rows_value(step.logits.value()),
          step.attention.value()};
}

template <typename T>
StateRows<T> initial_rows(const DecodingContext<T>& dc) {
  return {dc.h0, Matrix<T>::Zero(dc.h0.rows(), dc.h0.cols()), dc.context0};
}

// Argmax decoding; PAD is never emitted.
template <typename T>
BeamHypothesis greedy_decode(const Model<T>& model, const ModelInput& input, std::size_t max_len) {
  auto dc = prepare_decoding(model, input);
  StateRows<T> rows = initial_rows(dc);
  BeamHypothesis h;
  TokenId prev = kEosId;
  for (std::size_t t = 0; t < max_len; ++t) {
    auto out = run_decode_step(model, dc, rows, {prev});
    TokenId best = -1;
    for (Eigen::Index v = 0; v < out.log_probs.cols(); ++v) {
      if (v == kPadId) continue;
      if (best < 0 || out.log_probs(0, v) > out.log_probs(0, best)) best = static_cast<TokenId>(v);
    }
    h.token_ids.push_back(best);
    h.log_prob += static_cast<double>(out.log_probs(0, best));
    rows = std::move(out.state);
    prev = best;
    if (best == kEosId) break;
  }
  h.finished = true;
  return h;
}

// Standard beam search. Each step expands every live hypothesis by every
// token except PAD and keeps the `beam_size` best expansions by accumulated
// log-probability; expansions ending in EOS leave the beam as finished.
// Hypotheses alive after max_len steps are finished as they stand. Returns at
// most `beam_size` hypotheses sorted by descending score.
template <typename T>
std::vector<BeamHypothesis> beam_search(const Model<T>& model, const ModelInput& input, const BeamOptions& opt) {
  if (opt.beam_size == 0) throw std::invalid_argument("beam size must be >= 1");
  if (opt.max_len == 0) throw std::invalid_argument("max_len must be >= 1");
  auto dc = prepare_decoding(model, input);

  struct Live {
    BeamHypothesis hyp;
    Eigen::Index row;
  };
  StateRows<T> rows = initial_rows(dc);
  std::vector<Live> live{{BeamHypothesis{}, 0}};
  std::vector<BeamHypothesis> finished;

  auto better = [&](const BeamHypothesis& a, const BeamHypothesis& b) {
    const double sa = ranking_score(a, opt.length_normalize), sb = ranking_score(b, opt.length_normalize);
    if (sa != sb) return sa > sb;
    return a.token_ids < b.token_ids;
  };

  for (std::size_t t = 0; t < opt.max_len && !live.empty(); ++t) {
    std::vector<TokenId> prev;
    for (const auto& l : live) prev.push_back(l.hyp.token_ids.empty() ? kEosId : l.hyp.token_ids.back());
    StateRows<T> gathered{Matrix<T>(live.size(), rows.h.cols()), Matrix<T>(live.size(), rows.cell.cols()),
                          Matrix<T>(live.size(), rows.context.cols())};
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      gathered.h.row(r) = rows.h.row(live[i].row);
      gathered.cell.row(r) = rows.cell.row(live[i].row);
      gathered.context.row(r) = rows.context.row(live[i].row);
    }
    auto out = run_decode_step(model, dc, gathered, prev);

    struct Cand {
      double score;
      std::size_t parent;
      TokenId token;
    };
    std::vector<Cand> cands;
    cands.reserve(live.size() * static_cast<std::size_t>(out.log_probs.cols()));
    for (std::size_t i = 0; i < live.size(); ++i)
      for (Eigen::Index v = 0; v < out.log_probs.cols(); ++v)
        if (v != kPadId)
          cands.push_back({live[i].hyp.log_prob + static_cast<double>(out.log_probs(static_cast<Eigen::Index>(i), v)),
                           i, static_cast<TokenId>(v)});
    auto cand_less = [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(opt.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), cand_less);

    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Cand& c = cands[k];
      BeamHypothesis h = live[c.parent].hyp;
      h.token_ids.push_back(c.token);
      h.log_prob = c.score;
      if (c.token == kEosId || t + 1 == opt.max_len) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back({std::move(h), static_cast<Eigen::Index>(c.parent)});
      }
    }
    rows = std::move(out.state);
    live = std::move(next);

    // Extensions only lower the accumulated log-probability, so once beam_size
    // finished hypotheses beat every live one nothing can change the result.
    if (!opt.length_normalize && finished.size() >= opt.beam_size && !live.empty()) {
      std::vector<double> scores;
      for (const auto& f : finished) scores.push_back(f.log_prob);
      std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(opt.beam_size - 1), scores.end(),
                       std::greater<>());
      const double kth = scores[opt.beam_size - 1];
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& l : live) best_live = std::max(best_live, l.hyp.log_prob);
      if (best_live < kth) break;
    }
  }

  std::sort(finished.begin(), finished.end(), better);
  if (finished.size() > opt.beam_size) finished.resize(opt.beam_size);
  return finished;
}

namespace detail {

inline std::set<std::string> jaccard_set(const Tokens& s) {
  std::set<std::string> out;
  for (const auto& t : s) {
    if (t == kPadToken || t == kEosToken) continue;
    std::string lower = t;
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    out.insert(std::move(lower));
  }
  return out;
}

}  // namespace detail

// 1 - |A n B| / |A u B| over lowercased token sets; 0 when both are empty.
inline double jaccard_distance(const Tokens& s1, const Tokens& s2) {
  const auto a = detail::jaccard_set(s1);
  const auto b = detail::jaccard_set(s2);
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

inline constexpr double kDiversityThreshold = 0.5;

struct DistractorSet {
  std::array<Tokens, 3> distractors;
  std::array<std::size_t, 3> ranks{};  // index into the candidate list
  // Pairwise distances: (1,2), (1,3), (2,3).
  std::array<double, 3> distances{};
  bool fallback = false;
};

// D1 is the top candidate; D2 the first candidate farther than 0.5 from D1;
// D3 the first farther than 0.5 from both. When a slot finds no candidate,
// it and every later slot take the highest-ranked unused candidates (or the
// top candidate once none remain) and the fallback flag is set.
inline DistractorSet select_diverse(const std::vector<Tokens>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_diverse: no candidates");
  DistractorSet out;
  std::vector<bool> used(candidates.size(), false);
  std::vector<std::size_t> chosen{0};
  used[0] = true;

  for (std::size_t slot = 1; slot < 3 && !out.fallback; ++slot) {
    bool found = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (used[i]) continue;
      bool ok = true;
      for (std::size_t c : chosen) ok = ok && jaccard_distance(candidates[i], candidates[c]) > kDiversityThreshold;
      if (ok) {
        chosen.push_back(i);
        used[i] = true;
        found = true;
        break;
      }
    }
    if (!found) out.fallback = true;
  }
  for (std::size_t i = 0; chosen.size() < 3 && i < candidates.size(); ++i) {
    if (used[i]) continue;
    chosen.push_back(i);
    used[i] = true;
  }
  while (chosen.size() < 3) chosen.push_back(0);

  for (std::size_t k = 0; k < 3; ++k) {
    out.ranks[k] = chosen[k];
    out.distractors[k] = candidates[chosen[k]];
  }
  out.distances = {jaccard_distance(out.distractors[0], out.distractors[1]),
                   jaccard_distance(out.distractors[0], out.distractors[2]),
                   jaccard_distance(out.distractors[1], out.distractors[2])};
  return out;
}

// Beam search followed by diverse selection; candidate tokens exclude EOS.
template <typename T>
struct Generated {
  DistractorSet set;
  std::vector<BeamHypothesis> beam;
};

template <typename T>
Generated<T> generate_distractors(const Model<T>& model, const Vocabulary& vocab, const ModelInput& input,
                                  const BeamOptions& opt) {
  Generated<T> g;
  g.beam = beam_search(model, input, opt);
  std::vector<Tokens> cands;
  for (const auto& h : g.beam) cands.push_back(decode_ids(vocab, h.token_ids, true));
  g.set = select_diverse(cands);
  return g;
}

}  // namespace edge
