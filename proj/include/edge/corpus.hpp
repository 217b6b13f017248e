#pragma once

// Loading, validation, truncation and padding of distractor-generation records.
//
// Input files hold one JSON object per line:
//   {"id": "...", "passage": "...", "question": "...", "answer": "...",
//    "distractors": ["...", "..."]}
// Text fields are whitespace-tokenized strings or arrays of tokens.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "edge/tensor.hpp"

namespace edge {

using Tokens = std::vector<std::string>;

enum class Split { kTrain, kValidation, kTest };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "validation" || s == "dev" || s == "valid") return Split::kValidation;
  if (s == "test") return Split::kTest;
  throw std::invalid_argument("unknown split: " + std::string(s));
}

struct LengthCaps {
  std::size_t passage = 500;
  std::size_t question = 17;
  std::size_t answer = 15;
  std::size_t distractor = 15;
};

struct DistractorExample {
  std::string example_id;
  Split split = Split::kTrain;
  Tokens passage;
  Tokens question;
  Tokens answer;
  std::vector<Tokens> gold_distractors;
};

inline constexpr std::size_t kMaxGoldDistractors = 3;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t record, std::string field, const std::string& what)
      : std::runtime_error("record " + std::to_string(record) + ", field \"" + field + "\": " + what),
        record_(record),
        field_(std::move(field)) {}

  std::size_t record() const { return record_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t record_;
  std::string field_;
};

class ValidationError : public ParseError {
 public:
  using ParseError::ParseError;
};

inline Tokens tokenize(std::string_view text, bool lowercase) {
  Tokens out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(lowercase ? static_cast<char>(std::tolower(static_cast<unsigned char>(ch))) : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Keeps the first `cap` tokens.
inline Tokens truncate_prefix(Tokens tokens, std::size_t cap) {
  if (tokens.size() > cap) tokens.resize(cap);
  return tokens;
}

namespace detail {

inline Tokens field_tokens(const nlohmann::json& v, std::size_t record, const std::string& field, bool lowercase) {
  if (v.is_string()) return tokenize(v.get<std::string>(), lowercase);
  if (v.is_array()) {
    std::string joined;
    for (const auto& t : v) {
      if (!t.is_string()) throw ParseError(record, field, "token arrays must hold strings");
      joined += t.get<std::string>();
      joined += ' ';
    }
    return tokenize(joined, lowercase);
  }
  throw ParseError(record, field, "expected a string or an array of tokens");
}

// Looks up `field`, then `alias` (the released dataset's name for it).
inline const nlohmann::json& require(const nlohmann::json& obj, std::size_t record, const std::string& field,
                                     const char* alias = nullptr) {
  auto it = obj.find(field);
  if (it == obj.end() && alias) it = obj.find(alias);
  if (it == obj.end()) throw ParseError(record, field, "missing field");
  return *it;
}

}  // namespace detail

inline DistractorExample parse_record(const nlohmann::json& obj, std::size_t record, Split split,
                                      const LengthCaps& caps, bool lowercase = true) {
  if (!obj.is_object()) throw ParseError(record, "<record>", "expected a JSON object");
  DistractorExample ex;
  ex.split = split;
  if (auto it = obj.find("split"); it != obj.end() && it->is_string()) ex.split = parse_split(it->get<std::string>());
  if (auto it = obj.find("id"); it != obj.end()) {
    ex.example_id = it->is_string() ? it->get<std::string>() : it->dump();
  } else {
    ex.example_id = std::to_string(record);
  }

  auto text = [&](const char* field, const char* alias, std::size_t cap) {
    const auto& v = detail::require(obj, record, field, alias);
    Tokens t = truncate_prefix(detail::field_tokens(v, record, field, lowercase), cap);
    if (t.empty()) throw ValidationError(record, field, "empty token list");
    return t;
  };
  ex.passage = text("passage", "article", caps.passage);
  ex.question = text("question", nullptr, caps.question);
  ex.answer = text("answer", "answer_text", caps.answer);

  if (!obj.contains("distractors") && obj.contains("distractor")) {
    ex.gold_distractors = {text("distractor", nullptr, caps.distractor)};
    return ex;
  }
  const auto& ds = detail::require(obj, record, "distractors");
  if (!ds.is_array()) throw ParseError(record, "distractors", "expected an array");
  if (ds.empty()) throw ValidationError(record, "distractors", "at least one gold distractor is required");
  for (const auto& d : ds) {
    if (ex.gold_distractors.size() == kMaxGoldDistractors) break;
    Tokens t = truncate_prefix(detail::field_tokens(d, record, "distractors", lowercase), caps.distractor);
    if (t.empty()) throw ValidationError(record, "distractors", "empty token list");
    ex.gold_distractors.push_back(std::move(t));
  }
  return ex;
}

inline std::vector<DistractorExample> load_corpus(std::istream& in, Split split, const LengthCaps& caps = {},
                                                  bool lowercase = true) {
  std::vector<DistractorExample> out;
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(record, "<record>", e.what());
    }
    out.push_back(parse_record(obj, record, split, caps, lowercase));
    ++record;
  }
  return out;
}

inline std::vector<DistractorExample> load_corpus(const std::string& path, Split split, const LengthCaps& caps = {},
                                                  bool lowercase = true) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return load_corpus(in, split, caps, lowercase);
}

inline nlohmann::json example_to_json(const DistractorExample& ex) {
  auto join = [](const Tokens& t) {
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? " " : "") + t[i];
    return s;
  };
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : ex.gold_distractors) ds.push_back(join(d));
  return {{"id", ex.example_id},
          {"passage", join(ex.passage)},
          {"question", join(ex.question)},
          {"answer", join(ex.answer)},
          {"distractors", ds}};
}

// One single-distractor example per gold distractor; this is the unit the
// training loss is summed over.
inline std::vector<DistractorExample> expand_training_pairs(const std::vector<DistractorExample>& examples) {
  std::vector<DistractorExample> out;
  for (const auto& ex : examples) {
    for (const auto& d : ex.gold_distractors) {
      DistractorExample pair = ex;
      pair.gold_distractors = {d};
      out.push_back(std::move(pair));
    }
  }
  return out;
}

struct CorpusStats {
  std::map<Split, std::size_t> counts{{Split::kTrain, 0}, {Split::kValidation, 0}, {Split::kTest, 0}};
  // field name -> (length -> count)
  std::map<std::string, std::map<std::size_t, std::size_t>> length_histograms{
      {"passage", {}}, {"question", {}}, {"answer", {}}, {"distractor", {}}};
  std::size_t gold_distractor_total = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

inline CorpusStats corpus_stats(const std::vector<DistractorExample>& examples) {
  CorpusStats s;
  for (const auto& ex : examples) {
    ++s.counts[ex.split];
    ++s.length_histograms["passage"][ex.passage.size()];
    ++s.length_histograms["question"][ex.question.size()];
    ++s.length_histograms["answer"][ex.answer.size()];
    // The distractor histogram takes the first gold distractor so every field's
    // mass equals the record count.
    ++s.length_histograms["distractor"][ex.gold_distractors.front().size()];
    s.gold_distractor_total += ex.gold_distractors.size();
  }
  return s;
}

inline nlohmann::json stats_to_json(const CorpusStats& s) {
  nlohmann::json j;
  for (const auto& [split, n] : s.counts) j["counts"][std::string(split_name(split))] = n;
  for (const auto& [field, hist] : s.length_histograms) {
    nlohmann::json h = nlohmann::json::object();
    for (const auto& [len, n] : hist) h[std::to_string(len)] = n;
    j["length_histograms"][field] = h;
  }
  j["gold_distractor_total"] = s.gold_distractor_total;
  return j;
}

}  // namespace edge
