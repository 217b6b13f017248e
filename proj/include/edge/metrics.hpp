#pragma once

// Sentence-level BLEU-1..4 and ROUGE-1/2/L, plus the per-position report used
// to score generated distractor triples against the gold distractors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edge/corpus.hpp"

namespace edge::metrics {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts ngrams(const Tokens& s, std::size_t n) {
  NgramCounts out;
  if (n == 0 || s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
  return out;
}

struct Precision {
  std::size_t matched = 0;
  std::size_t total = 0;

  double value() const { return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total); }
};

// Candidate n-gram counts clipped by their maximum count in any reference.
inline Precision modified_precision(const Tokens& candidate, const std::vector<Tokens>& references, std::size_t n) {
  Precision p;
  const auto cand = ngrams(candidate, n);
  std::map<std::vector<std::string>, std::size_t> max_ref;
  for (const auto& r : references)
    for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
  for (const auto& [g, c] : cand) {
    p.total += c;
    auto it = max_ref.find(g);
    if (it != max_ref.end()) p.matched += std::min(c, it->second);
  }
  return p;
}

// Length of the reference closest to c; ties go to the shorter reference.
inline std::size_t closest_ref_length(std::size_t c, const std::vector<Tokens>& references) {
  std::size_t best = references.front().size();
  for (const auto& r : references) {
    const auto diff = [&](std::size_t x) { return x > c ? x - c : c - x; };
    if (diff(r.size()) < diff(best) || (diff(r.size()) == diff(best) && r.size() < best)) best = r.size();
  }
  return best;
}

inline double brevity_penalty(std::size_t c, std::size_t r) {
  if (c == 0) return 0.0;
  return c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
}

inline constexpr double kBleuEpsilon = 1e-9;

// Uniform-weight geometric mean of modified precisions 1..max_n times the
// brevity penalty. A candidate with no matching unigram scores 0; other zero
// precisions are replaced by kBleuEpsilon. Orders longer than the candidate
// have no n-grams and are left out of the mean.
inline double bleu(const Tokens& candidate, const std::vector<Tokens>& references, std::size_t max_n) {
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("bleu: max_n must be in 1..4");
  if (references.empty()) throw std::invalid_argument("bleu: no references");
  if (candidate.empty()) {
    std::cerr << "warning: BLEU of an empty candidate is 0\n";
    return 0.0;
  }
  if (modified_precision(candidate, references, 1).matched == 0) return 0.0;
  const std::size_t orders = std::min(max_n, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const double p = modified_precision(candidate, references, n).value();
    log_sum += std::log(p > 0.0 ? p : kBleuEpsilon);
  }
  const double bp = brevity_penalty(candidate.size(), closest_ref_length(candidate.size(), references));
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

// Corpus-level BLEU: clipped counts and lengths summed over all pairs first.
inline double corpus_bleu(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                          std::size_t max_n) {
  if (candidates.size() != references.size()) throw std::invalid_argument("corpus_bleu: size mismatch");
  std::vector<Precision> totals(max_n);
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t n = 1; n <= max_n; ++n) {
      auto p = modified_precision(candidates[i], references[i], n);
      totals[n - 1].matched += p.matched;
      totals[n - 1].total += p.total;
    }
    c += candidates[i].size();
    r += closest_ref_length(candidates[i].size(), references[i]);
  }
  if (c == 0 || totals[0].matched == 0) return 0.0;
  double log_sum = 0.0;
  for (const auto& p : totals) log_sum += std::log(p.value() > 0.0 ? p.value() : kBleuEpsilon);
  return brevity_penalty(c, r) * std::exp(log_sum / static_cast<double>(max_n));
}

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Prf make_prf(double overlap, double cand_total, double ref_total) {
  Prf s;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

inline Prf rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n) {
  if (n < 1 || n > 2) throw std::invalid_argument("rouge_n: n must be 1 or 2");
  const auto cand = ngrams(candidate, n);
  const auto ref = ngrams(reference, n);
  std::size_t overlap = 0, ct = 0, rt = 0;
  for (const auto& [g, c] : cand) {
    ct += c;
    auto it = ref.find(g);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : ref) rt += c;
  return make_prf(static_cast<double>(overlap), static_cast<double>(ct), static_cast<double>(rt));
}

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline Prf rouge_l(const Tokens& candidate, const Tokens& reference) {
  const auto l = static_cast<double>(lcs_length(candidate, reference));
  if (l == 0) return {};
  return make_prf(l, static_cast<double>(candidate.size()), static_cast<double>(reference.size()));
}

inline constexpr std::array<const char*, 7> kMetricNames{"BLEU-1",  "BLEU-2",  "BLEU-3", "BLEU-4",
                                                         "ROUGE-1", "ROUGE-2", "ROUGE-L"};

// Scores of one candidate against a multi-reference set, each in [0, 1].
// ROUGE takes the best F1 over the references.
inline std::array<double, 7> score_candidate(const Tokens& candidate, const std::vector<Tokens>& references) {
  std::array<double, 7> s{};
  for (std::size_t n = 1; n <= 4; ++n) s[n - 1] = bleu(candidate, references, n);
  for (const auto& r : references) {
    s[4] = std::max(s[4], rouge_n(candidate, r, 1).f1);
    s[5] = std::max(s[5], rouge_n(candidate, r, 2).f1);
    s[6] = std::max(s[6], rouge_l(candidate, r).f1);
  }
  return s;
}

struct GeneratedRecord {
  std::string example_id;
  std::array<Tokens, 3> distractors;
};

struct EvalReport {
  // [position][metric], percentages.
  std::array<std::array<double, 7>, 3> scores{};
  std::size_t questions = 0;
  std::size_t pairs = 0;
};

class AlignmentError : public std::runtime_error {
 public:
  AlignmentError(const std::string& what, std::vector<std::string> missing_gold, std::vector<std::string> missing_gen)
      : std::runtime_error(what), missing_in_gold(std::move(missing_gold)), missing_in_generated(std::move(missing_gen)) {}
  std::vector<std::string> missing_in_gold;
  std::vector<std::string> missing_in_generated;
};

// Position i of every generated triple is scored against all gold distractors
// of its question; scores are macro-averaged over questions.
inline EvalReport evaluate(const std::vector<GeneratedRecord>& generated,
                           const std::map<std::string, std::vector<Tokens>>& gold) {
  std::map<std::string, const GeneratedRecord*> by_id;
  for (const auto& g : generated) by_id[g.example_id] = &g;
  std::vector<std::string> missing_gold, missing_gen;
  for (const auto& [id, rec] : by_id)
    if (!gold.count(id)) missing_gold.push_back(id);
  for (const auto& [id, refs] : gold)
    if (!by_id.count(id)) missing_gen.push_back(id);
  if (!missing_gold.empty() || !missing_gen.empty() || by_id.size() != generated.size()) {
    std::ostringstream os;
    os << "generated and gold ids do not align";
    if (by_id.size() != generated.size()) os << "; duplicate generated ids";
    if (!missing_gold.empty()) {
      os << "; not in gold:";
      for (const auto& id : missing_gold) os << ' ' << id;
    }
    if (!missing_gen.empty()) {
      os << "; not generated:";
      for (const auto& id : missing_gen) os << ' ' << id;
    }
    throw AlignmentError(os.str(), missing_gold, missing_gen);
  }

  EvalReport rep;
  rep.questions = generated.size();
  for (const auto& [id, rec] : by_id) {
    const auto& refs = gold.at(id);
    for (std::size_t pos = 0; pos < 3; ++pos) {
      const auto s = score_candidate(rec->distractors[pos], refs);
      for (std::size_t k = 0; k < 7; ++k) rep.scores[pos][k] += s[k];
      ++rep.pairs;
    }
  }
  if (rep.questions > 0)
    for (auto& row : rep.scores)
      for (auto& v : row) v = 100.0 * v / static_cast<double>(rep.questions);
  return rep;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  static const std::array<const char*, 3> kPositions{"1st", "2nd", "3rd"};
  nlohmann::json j;
  j["questions"] = r.questions;
  j["pairs"] = r.pairs;
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t k = 0; k < 7; ++k) j["positions"][kPositions[p]][kMetricNames[k]] = r.scores[p][k];
  return j;
}

inline std::string render_table(const EvalReport& r) {
  static const std::array<const char*, 3> kPositions{"1st Distractor", "2nd Distractor", "3rd Distractor"};
  std::ostringstream os;
  os << std::left << std::setw(16) << "";
  for (const char* m : kMetricNames) os << std::right << std::setw(9) << m;
  os << '\n';
  os << std::fixed << std::setprecision(2);
  for (std::size_t p = 0; p < 3; ++p) {
    os << std::left << std::setw(16) << kPositions[p];
    for (std::size_t k = 0; k < 7; ++k) os << std::right << std::setw(9) << r.scores[p][k];
    os << '\n';
  }
  return os.str();
}

}  // namespace edge::metrics
