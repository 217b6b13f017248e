#pragma once

// Command-line entry points: train, generate, evaluate, inspect, stats.
// Every command returns an exit code (0 ok, 1 runtime/data error, 2 config
// error) so tests can drive them in-process.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edge/edge.hpp"

namespace edge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kVersion = "edge 0.1.0";

struct RunConfig {
  std::string train_path;
  std::string validation_path;
  std::string test_path;
  std::string embeddings = "random";
  std::size_t dim = 300;
  std::size_t min_freq = 1;
  std::size_t max_vocab = 50000;
  LengthCaps caps;
  bool lowercase = true;
  bool squash_gates = false;
  bool fine_tune_embeddings = false;
  bool length_normalize = false;
  std::size_t max_decode_len = 15;
  std::string output_dir = "run";
  std::size_t workers = 1;
  TrainConfig train;
};

// Everything that shapes a model or its outputs; output_dir and workers are
// left out so runs in different directories produce identical artifacts.
inline json to_json(const RunConfig& c) {
  return {{"train_path", c.train_path},
          {"validation_path", c.validation_path},
          {"test_path", c.test_path},
          {"embeddings", c.embeddings},
          {"dim", c.dim},
          {"min_freq", c.min_freq},
          {"max_vocab", c.max_vocab},
          {"max_passage_len", c.caps.passage},
          {"max_question_len", c.caps.question},
          {"max_answer_len", c.caps.answer},
          {"max_distractor_len", c.caps.distractor},
          {"lowercase", c.lowercase},
          {"squash_gates", c.squash_gates},
          {"fine_tune_embeddings", c.fine_tune_embeddings},
          {"length_normalize", c.length_normalize},
          {"max_decode_len", c.max_decode_len},
          {"learning_rate", c.train.learning_rate},
          {"momentum", c.train.momentum},
          {"batch_size", c.train.batch_size},
          {"dropout", c.train.dropout},
          {"max_epochs", c.train.max_epochs},
          {"seed", c.train.seed},
          {"beam_size", c.train.beam_size},
          {"grad_clip", c.train.grad_clip},
          {"patience", c.train.patience}};
}

// Keys absent from `j` keep their defaults; unknown keys and ill-typed values
// are configuration errors.
inline RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      field = it->get<std::decay_t<decltype(field)>>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
  };
  static const std::set<std::string> known = [] {
    std::set<std::string> k;
    const json defaults = to_json(RunConfig{});
    for (const auto& [key, v] : defaults.items()) k.insert(key);
    k.insert("output_dir");
    k.insert("workers");
    return k;
  }();
  for (const auto& [key, v] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key \"" + key + "\"");

  get("train_path", c.train_path);
  get("validation_path", c.validation_path);
  get("test_path", c.test_path);
  get("embeddings", c.embeddings);
  get("dim", c.dim);
  get("min_freq", c.min_freq);
  get("max_vocab", c.max_vocab);
  get("max_passage_len", c.caps.passage);
  get("max_question_len", c.caps.question);
  get("max_answer_len", c.caps.answer);
  get("max_distractor_len", c.caps.distractor);
  get("lowercase", c.lowercase);
  get("squash_gates", c.squash_gates);
  get("fine_tune_embeddings", c.fine_tune_embeddings);
  get("length_normalize", c.length_normalize);
  get("max_decode_len", c.max_decode_len);
  get("output_dir", c.output_dir);
  get("workers", c.workers);
  get("learning_rate", c.train.learning_rate);
  get("momentum", c.train.momentum);
  get("batch_size", c.train.batch_size);
  get("dropout", c.train.dropout);
  get("max_epochs", c.train.max_epochs);
  get("seed", c.train.seed);
  get("beam_size", c.train.beam_size);
  get("grad_clip", c.train.grad_clip);
  get("patience", c.train.patience);
  return c;
}

inline void validate(const RunConfig& c) {
  c.train.validate();
  if (c.dim == 0 || c.dim % 2) throw ConfigError("dim must be a positive even number");
  if (c.max_vocab <= kNumSpecials) throw ConfigError("max_vocab must exceed the number of special tokens");
  if (c.caps.passage == 0 || c.caps.question == 0 || c.caps.answer == 0 || c.caps.distractor == 0)
    throw ConfigError("length caps must be >= 1");
  if (c.max_decode_len == 0) throw ConfigError("max_decode_len must be >= 1");
  if (c.workers == 0) throw ConfigError("workers must be >= 1");
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// manifest.json: command, input files with content hashes, config hash,
// produced files and tool version. No timestamps, so reruns compare equal.
inline void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& inputs,
                           const json& config, const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config_hash"] = hex64(detail::fnv1a(config.dump()));
  m["inputs"] = json::array();
  for (const auto& p : inputs) m["inputs"].push_back({{"path", p}, {"fnv1a", hex64(detail::fnv1a(read_file(p)))}});
  m["outputs"] = outputs;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

inline std::string join(const Tokens& t) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? " " : "") + t[i];
  return s;
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
  std::string checkpoint;
  std::vector<std::string> inputs;
  std::string generated;
  std::string gold;
  std::string example_id;
  std::optional<std::size_t> beam;
  std::optional<std::size_t> max_len;
};

inline RunConfig resolve_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) c.train.seed = *o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.workers) c.workers = *o.workers;
  if (o.beam) c.train.beam_size = *o.beam;
  if (o.max_len) c.max_decode_len = *o.max_len;
  validate(c);
  return c;
}

inline fs::path prepare_out(const RunConfig& c) {
  fs::path dir(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

// -- train ------------------------------------------------------------------

inline int cmd_train(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(o);
  if (c.train_path.empty() || c.validation_path.empty())
    throw ConfigError("train needs train_path and validation_path");
  auto train_set = load_corpus(c.train_path, Split::kTrain, c.caps, c.lowercase);
  auto valid_set = load_corpus(c.validation_path, Split::kValidation, c.caps, c.lowercase);
  for (auto& ex : train_set) ex.split = Split::kTrain;
  for (auto& ex : valid_set) ex.split = Split::kValidation;

  const auto vocab = build_vocabulary(train_set, c.min_freq, c.max_vocab);
  ModelConfig mc{c.dim, vocab.size(), c.squash_gates, c.fine_tune_embeddings};
  auto emb = load_embeddings<float>(vocab, c.embeddings, c.dim, c.train.seed + 1, c.fine_tune_embeddings);
  auto model = Model<float>::create(mc, emb, c.train.seed);

  const auto dir = prepare_out(c);
  std::ofstream log(dir / "train_log.jsonl", std::ios::trunc);
  const json run = to_json(c);
  auto result = train(c.train, train_set, valid_set, std::move(model), vocab, run, [&](const EpochLog& e) {
    log << to_json(e).dump() << '\n';
    log.flush();
    out << "epoch " << e.epoch << "  train_loss " << e.train_loss << "  val_ppl " << e.val_ppl << '\n';
  });
  save_checkpoint(result.best, (dir / "model.ckpt").string());
  std::ostringstream vs;
  save_vocabulary(vocab, vs);
  write_file(dir / "vocab.txt", vs.str());

  std::vector<std::string> inputs{c.train_path, c.validation_path};
  if (c.embeddings != "random") inputs.push_back(c.embeddings);
  write_manifest(dir, "train", inputs, run, {"model.ckpt", "train_log.jsonl", "vocab.txt"});
  out << "best epoch " << result.best.epoch << "  val_ppl " << result.best.validation_perplexity << '\n';
  return 0;
}

// -- generate ---------------------------------------------------------------

inline LengthCaps caps_from(const json& run) {
  LengthCaps caps;
  caps.passage = run.value("max_passage_len", caps.passage);
  caps.question = run.value("max_question_len", caps.question);
  caps.answer = run.value("max_answer_len", caps.answer);
  caps.distractor = run.value("max_distractor_len", caps.distractor);
  return caps;
}

inline std::vector<DistractorExample> load_inputs(const Options& o, const RunConfig& c, const json& run,
                                                  std::vector<std::string>* used = nullptr) {
  std::vector<std::string> paths = o.inputs;
  if (paths.empty() && !c.test_path.empty()) paths.push_back(c.test_path);
  if (paths.empty() && !run.value("test_path", std::string()).empty()) paths.push_back(run["test_path"]);
  if (paths.empty()) throw ConfigError("no input file given (--input or test_path)");
  std::vector<DistractorExample> all;
  for (const auto& p : paths) {
    auto part = load_corpus(p, Split::kTest, caps_from(run), run.value("lowercase", true));
    all.insert(all.end(), part.begin(), part.end());
  }
  if (used) used->insert(used->end(), paths.begin(), paths.end());
  return all;
}

struct GenerationRecord {
  std::string example_id;
  DistractorSet set;
  std::array<double, 3> scores{};
};

inline json to_json(const GenerationRecord& r) {
  return {{"example_id", r.example_id},
          {"d1", join(r.set.distractors[0])},
          {"d2", join(r.set.distractors[1])},
          {"d3", join(r.set.distractors[2])},
          {"beam_scores", r.scores},
          {"ranks", r.set.ranks},
          {"fallback", r.set.fallback}};
}

// Examples are split across `workers` threads by index; records are written
// in input order whatever the worker count.
inline std::vector<GenerationRecord> generate_all(const Model<float>& model, const Vocabulary& vocab,
                                                  const std::vector<DistractorExample>& examples,
                                                  const BeamOptions& opt, std::size_t workers) {
  std::vector<GenerationRecord> out(examples.size());
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < examples.size(); i += workers) {
        auto g = generate_distractors(model, vocab, make_input(examples[i], vocab), opt);
        out[i].example_id = examples[i].example_id;
        out[i].set = g.set;
        for (std::size_t k = 0; k < 3; ++k) out[i].scores[k] = ranking_score(g.beam[g.set.ranks[k]], opt.length_normalize);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline Checkpoint<float> open_checkpoint(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  return load_checkpoint<float>(o.checkpoint);
}

inline int cmd_generate(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(o);
  auto ck = open_checkpoint(o);
  std::vector<std::string> inputs{o.checkpoint};
  auto examples = load_inputs(o, c, ck.config, &inputs);
  BeamOptions opt{o.beam ? *o.beam : ck.config.value("beam_size", c.train.beam_size),
                  o.max_len ? *o.max_len : ck.config.value("max_decode_len", c.max_decode_len),
                  ck.config.value("length_normalize", c.length_normalize)};
  auto records = generate_all(ck.model, ck.vocab, examples, opt, c.workers);

  const auto dir = prepare_out(c);
  std::ostringstream os;
  std::size_t fallbacks = 0;
  for (const auto& r : records) {
    os << to_json(r).dump() << '\n';
    fallbacks += r.set.fallback;
  }
  write_file(dir / "generated.jsonl", os.str());
  json cfg{{"beam_size", opt.beam_size}, {"max_len", opt.max_len}, {"length_normalize", opt.length_normalize}};
  write_manifest(dir, "generate", inputs, cfg, {"generated.jsonl"});
  out << "generated " << records.size() << " records (" << fallbacks << " with fallback)\n";
  return 0;
}

// -- evaluate ---------------------------------------------------------------

inline std::vector<metrics::GeneratedRecord> load_generated(const std::string& path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open generated file: " + path);
  std::vector<metrics::GeneratedRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      metrics::GeneratedRecord r;
      r.example_id = j.at("example_id").get<std::string>();
      r.distractors = {tokenize(j.at("d1").get<std::string>(), lowercase),
                       tokenize(j.at("d2").get<std::string>(), lowercase),
                       tokenize(j.at("d3").get<std::string>(), lowercase)};
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error(path + " record " + std::to_string(n) + ": " + e.what());
    }
    ++n;
  }
  return out;
}

inline int cmd_evaluate(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(o);
  if (o.generated.empty() || o.gold.empty()) throw ConfigError("evaluate needs --generated and --gold");
  auto generated = load_generated(o.generated, c.lowercase);
  std::map<std::string, std::vector<Tokens>> gold;
  for (const auto& ex : load_corpus(o.gold, Split::kTest, c.caps, c.lowercase)) gold[ex.example_id] = ex.gold_distractors;
  auto report = metrics::evaluate(generated, gold);

  const auto dir = prepare_out(c);
  const auto table = metrics::render_table(report);
  write_file(dir / "eval_report.json", metrics::report_to_json(report).dump(2) + "\n");
  write_file(dir / "eval_table.txt", table);
  write_manifest(dir, "evaluate", {o.generated, o.gold}, to_json(c), {"eval_report.json", "eval_table.txt"});
  out << table;
  return 0;
}

// -- inspect ----------------------------------------------------------------

struct Span {
  std::size_t begin, end;  // [begin, end)
};

// Sentences end after ".", "!" or "?"; trailing tokens form a last sentence.
inline std::vector<Span> sentence_spans(const Tokens& tokens) {
  std::vector<Span> spans;
  std::size_t start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "." || tokens[i] == "!" || tokens[i] == "?") {
      spans.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < tokens.size()) spans.push_back({start, tokens.size()});
  return spans;
}

inline std::vector<double> sentence_means(const std::vector<double>& values, const std::vector<Span>& spans) {
  std::vector<double> out;
  for (const auto& s : spans) {
    double sum = 0;
    for (std::size_t i = s.begin; i < s.end; ++i) sum += values.at(i);
    out.push_back(sum / static_cast<double>(s.end - s.begin));
  }
  return out;
}

template <typename T>
std::vector<double> row_values(const Matrix<T>& m, Eigen::Index r) {
  std::vector<double> v;
  for (Eigen::Index k = 0; k < m.cols(); ++k) v.push_back(static_cast<double>(m(r, k)));
  return v;
}

// Gate values of the question and passage reforming steps plus the decoder
// attention while re-reading each selected distractor (EOS step included).
template <typename T>
json inspect_example(const Model<T>& model, const Vocabulary& vocab, const DistractorExample& ex,
                     const BeamOptions& opt) {
  const auto input = make_input(ex, vocab);
  ad::Tape<T> tape(false);
  auto bm = bind(model, tape);
  auto mat = encode_materials(bm, input);
  const auto spans = sentence_spans(ex.passage);

  json j;
  j["example_id"] = ex.example_id;
  j["passage_tokens"] = ex.passage;
  j["question_tokens"] = ex.question;
  j["sentences"] = json::array();
  for (const auto& s : spans) j["sentences"].push_back({s.begin, s.end});
  std::vector<double> pg, qg;
  for (Eigen::Index i = 0; i < mat.passage.gate_values.rows(); ++i)
    pg.push_back(static_cast<double>(mat.passage.gate_values.value()(i, 0)));
  for (Eigen::Index i = 0; i < mat.question.gate_values.rows(); ++i)
    qg.push_back(static_cast<double>(mat.question.gate_values.value()(i, 0)));
  j["passage_gate"] = {{"raw", pg}, {"sentence_mean", sentence_means(pg, spans)}};
  j["question_gate"] = {{"raw", qg}};

  auto g = generate_distractors(model, vocab, input, opt);
  auto dc = prepare_decoding(model, input);
  j["distractors"] = json::array();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& hyp = g.beam[g.set.ranks[k]];
    auto rows = initial_rows(dc);
    TokenId prev = kEosId;
    json steps = json::array(), means = json::array();
    for (TokenId tok : hyp.token_ids) {
      auto step = run_decode_step(model, dc, rows, {prev});
      auto att = row_values(step.attention, 0);
      steps.push_back(att);
      means.push_back(sentence_means(att, spans));
      rows = std::move(step.state);
      prev = tok;
    }
    j["distractors"].push_back({{"tokens", decode_ids(vocab, hyp.token_ids)},
                                {"score", hyp.log_prob},
                                {"attention", {{"raw", steps}, {"sentence_mean", means}}}});
  }
  return j;
}

inline int cmd_inspect(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(o);
  if (o.example_id.empty()) throw ConfigError("inspect needs --id");
  auto ck = open_checkpoint(o);
  std::vector<std::string> inputs{o.checkpoint};
  auto examples = load_inputs(o, c, ck.config, &inputs);
  auto it = std::find_if(examples.begin(), examples.end(),
                         [&](const DistractorExample& e) { return e.example_id == o.example_id; });
  if (it == examples.end()) throw std::runtime_error("unknown example id: " + o.example_id);
  BeamOptions opt{o.beam ? *o.beam : ck.config.value("beam_size", c.train.beam_size),
                  o.max_len ? *o.max_len : ck.config.value("max_decode_len", c.max_decode_len),
                  ck.config.value("length_normalize", c.length_normalize)};
  auto j = inspect_example(ck.model, ck.vocab, *it, opt);

  const auto dir = prepare_out(c);
  std::string name = "inspect_" + o.example_id + ".json";
  std::replace_if(name.begin(), name.end(), [](char ch) { return ch == '/' || ch == '\\'; }, '_');
  write_file(dir / name, j.dump(2) + "\n");
  write_manifest(dir, "inspect", inputs, {{"id", o.example_id}, {"beam_size", opt.beam_size}}, {name});
  out << "wrote " << (dir / name).string() << '\n';
  return 0;
}

// -- stats ------------------------------------------------------------------

inline int cmd_stats(const Options& o, std::ostream& out) {
  RunConfig c = resolve_config(o);
  std::vector<std::pair<std::string, Split>> files;
  for (const auto& p : o.inputs) files.emplace_back(p, Split::kTrain);
  if (files.empty()) {
    if (!c.train_path.empty()) files.emplace_back(c.train_path, Split::kTrain);
    if (!c.validation_path.empty()) files.emplace_back(c.validation_path, Split::kValidation);
    if (!c.test_path.empty()) files.emplace_back(c.test_path, Split::kTest);
  }
  if (files.empty()) throw ConfigError("stats needs --input or data paths in the config");
  std::vector<DistractorExample> all;
  std::vector<std::string> inputs;
  for (const auto& [p, split] : files) {
    auto part = load_corpus(p, split, c.caps, c.lowercase);
    all.insert(all.end(), part.begin(), part.end());
    inputs.push_back(p);
  }
  auto report = stats_to_json(corpus_stats(all));
  const auto dir = prepare_out(c);
  write_file(dir / "stats.json", report.dump(2) + "\n");
  write_manifest(dir, "stats", inputs, to_json(c), {"stats.json"});
  out << report["counts"].dump() << '\n';
  return 0;
}

// -- dispatch ---------------------------------------------------------------

// args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Question- and answer-guided distractor generation", "edge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--seed", o.seed, "overrides the configured seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* train_cmd = app.add_subcommand("train", "train a model and write the best checkpoint");
  common(train_cmd);
  auto* gen = app.add_subcommand("generate", "beam-search three diverse distractors per question");
  common(gen);
  gen->add_option("--checkpoint", o.checkpoint)->required();
  gen->add_option("--input", o.inputs, "JSONL questions (defaults to test_path)");
  gen->add_option("--beam", o.beam)->check(CLI::PositiveNumber);
  gen->add_option("--max-len", o.max_len)->check(CLI::PositiveNumber);
  auto* eval = app.add_subcommand("evaluate", "score generated distractors against gold");
  common(eval);
  eval->add_option("--generated", o.generated)->required();
  eval->add_option("--gold", o.gold)->required();
  auto* insp = app.add_subcommand("inspect", "dump gate values and decoder attention for one example");
  common(insp);
  insp->add_option("--checkpoint", o.checkpoint)->required();
  insp->add_option("--input", o.inputs);
  insp->add_option("--id", o.example_id)->required();
  insp->add_option("--beam", o.beam)->check(CLI::PositiveNumber);
  insp->add_option("--max-len", o.max_len)->check(CLI::PositiveNumber);
  auto* stats = app.add_subcommand("stats", "corpus counts and length histograms");
  common(stats);
  stats->add_option("--input", o.inputs);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return cmd_train(o, out);
    if (*gen) return cmd_generate(o, out);
    if (*eval) return cmd_evaluate(o, out);
    if (*insp) return cmd_inspect(o, out);
    if (*stats) return cmd_stats(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const metrics::AlignmentError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

inline int run(int argc, char** argv) { return run(std::vector<std::string>(argv + 1, argv + argc)); }

}  // namespace edge::cli
