#pragma once

// Mini-batch training with Nesterov momentum, validation-perplexity model
// selection and the binary checkpoint container.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edge/batch.hpp"
#include "edge/generator.hpp"

namespace edge {

struct TrainConfig {
  double learning_rate = 0.005;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  double dropout = 0.1;
  std::size_t max_epochs = 30;
  std::uint64_t seed = 1;
  std::size_t beam_size = 50;
  double grad_clip = 5.0;  // global L2 norm; <= 0 disables clipping
  std::size_t patience = 5;

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0, 1)");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must be in [0, 1)");
    if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum}, {"batch_size", c.batch_size},
          {"dropout", c.dropout},             {"max_epochs", c.max_epochs}, {"seed", c.seed},
          {"beam_size", c.beam_size},         {"grad_clip", c.grad_clip},   {"patience", c.patience}};
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"dim", c.dim},
          {"vocab_size", c.vocab_size},
          {"squash_gates", c.squash_gates},
          {"fine_tune_embeddings", c.fine_tune_embeddings}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.at("dim").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.squash_gates = j.at("squash_gates").get<bool>();
  c.fine_tune_embeddings = j.at("fine_tune_embeddings").get<bool>();
  return c;
}

// Reformulated Nesterov momentum:
//   v <- mu v - lr g
//   theta <- theta + mu v - lr g
// Parameters marked non-trainable are left untouched.
template <typename T>
void nag_step(ad::ParamSet<T>& params, const ad::Gradients<T>& grads, ad::Gradients<T>& velocities, double lr,
              double momentum) {
  if (grads.size() != params.size() || velocities.size() != params.size())
    throw ShapeError("nag_step: gradient/velocity count mismatch");
  const T mu = static_cast<T>(momentum);
  const T eta = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.trainable(i)) continue;
    Matrix<T>& v = velocities[i];
    v = mu * v - eta * grads[i];
    params.value(i) += mu * v - eta * grads[i];
  }
}

template <typename T>
double global_norm(const ad::ParamSet<T>& params, const ad::Gradients<T>& grads) {
  double s = 0;
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (params.trainable(i)) s += static_cast<double>(grads[i].squaredNorm());
  return std::sqrt(s);
}

template <typename T>
void clip_by_global_norm(const ad::ParamSet<T>& params, ad::Gradients<T>& grads, double max_norm) {
  if (max_norm <= 0) return;
  const double n = global_norm(params, grads);
  if (n <= max_norm) return;
  const T f = static_cast<T>(max_norm / n);
  for (auto& g : grads) g *= f;
}

struct NllTotals {
  double nll = 0.0;
  std::size_t tokens = 0;

  double per_token() const { return tokens ? nll / static_cast<double>(tokens) : 0.0; }
  double perplexity() const { return std::exp(per_token()); }
};

// Evaluation-mode loss of every (example, gold distractor) pair.
template <typename T>
NllTotals corpus_nll(const Model<T>& model, const Vocabulary& vocab, const std::vector<DistractorExample>& examples,
                     std::size_t batch_size) {
  NllTotals tot;
  for (const auto& batch : batch_examples(expand_training_pairs(examples), vocab, batch_size)) {
    for (std::size_t r = 0; r < batch.size(); ++r) {
      ad::Tape<T> tape(false);
      auto m = bind(model, tape);
      auto mat = encode_materials(m, batch.inputs[r]);
      tot.nll += static_cast<double>(sequence_loss(m, mat, batch.targets[r]).value()(0, 0));
      tot.tokens += batch.targets[r].length();
    }
  }
  return tot;
}

template <typename T>
double validation_perplexity(const Model<T>& model, const Vocabulary& vocab,
                             const std::vector<DistractorExample>& examples, std::size_t batch_size) {
  return corpus_nll(model, vocab, examples, batch_size).perplexity();
}

template <typename T>
struct Checkpoint {
  Model<T> model;
  Vocabulary vocab;
  nlohmann::json config;  // run configuration, stored verbatim
  std::int64_t epoch = 0;
  double validation_perplexity = std::numeric_limits<double>::infinity();
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // per token, training mode
  double train_loss_sum = 0.0;
  double val_ppl = 0.0;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"train_loss_sum", e.train_loss_sum},
          {"val_ppl", e.val_ppl},
          {"seconds", e.seconds}};
}

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(std::size_t step, std::size_t epoch)
      : std::runtime_error("loss became non-finite at step " + std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + ")"),
        step(step) {}
  std::size_t step;
};

template <typename T>
struct TrainResult {
  Checkpoint<T> best;
  std::vector<EpochLog> history;
  std::size_t steps = 0;
};

// Shuffled mini-batch NAG epochs; after each epoch the validation perplexity
// is computed and the lowest-perplexity model is kept. Stops after
// `patience` epochs without improvement or at max_epochs.
template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const std::vector<DistractorExample>& train_set,
                     const std::vector<DistractorExample>& validation_set, Model<T> model, const Vocabulary& vocab,
                     const nlohmann::json& run_config = {},
                     const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training split");
  if (validation_set.empty()) throw std::invalid_argument("train: empty validation split");

  Rng rng(cfg.seed);
  ForwardContext ctx{true, cfg.dropout, &rng};
  auto velocities = ad::zero_gradients(model.params);
  const auto pairs = expand_training_pairs(train_set);

  TrainResult<T> result;
  result.best = {model, vocab, run_config, 0, std::numeric_limits<double>::infinity()};
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<DistractorExample> order = pairs;
    rng.shuffle(order);
    NllTotals tot;
    for (const auto& batch : batch_examples(order, vocab, cfg.batch_size)) {
      auto grads = ad::zero_gradients(model.params);
      double batch_loss = 0.0;
      for (std::size_t r = 0; r < batch.size(); ++r) {
        ad::Tape<T> tape(true);
        auto m = bind(model, tape);
        auto mat = encode_materials(m, batch.inputs[r], ctx);
        auto loss = sequence_loss(m, mat, batch.targets[r], ctx);
        tape.backward(loss);
        tape.accumulate(grads);
        batch_loss += static_cast<double>(loss.value()(0, 0));
        tot.tokens += batch.targets[r].length();
      }
      ++result.steps;
      if (!std::isfinite(batch_loss)) throw TrainingDiverged(result.steps, epoch);
      tot.nll += batch_loss;
      clip_by_global_norm(model.params, grads, cfg.grad_clip);
      nag_step(model.params, grads, velocities, cfg.learning_rate, cfg.momentum);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = tot.per_token();
    log.train_loss_sum = tot.nll;
    log.val_ppl = validation_perplexity(model, vocab, validation_set, cfg.batch_size);
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.val_ppl < result.best.validation_perplexity) {
      result.best.model = model;
      result.best.epoch = static_cast<std::int64_t>(epoch);
      result.best.validation_perplexity = log.val_ppl;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint file layout (little-endian host order):
//   magic "EDGECKPT" | u32 version | u64 n + config JSON
//   u64 vocab count, then per token u32 n + bytes
//   u64 tensor count, then per tensor: u32 n + name, u8 trainable,
//       u64 rows, u64 cols, rows*cols float32 (row-major)
//   i64 epoch | f64 validation perplexity | u64 FNV-1a of everything before

inline constexpr char kCheckpointMagic[8] = {'E', 'D', 'G', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename P>
  void pod(const P& v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(P));
  }
  void str32(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void str64(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    buf_ += s;
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& b, std::size_t end) : buf_(b), end_(end) {}
  template <typename P>
  P pod() {
    need(sizeof(P));
    P v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(P));
    pos_ += sizeof(P);
    return v;
  }
  std::string str(std::uint64_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void raw(char* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > end_ - pos_) throw CheckpointError("checkpoint truncated or corrupt");
  }
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <typename T>
std::string serialize_checkpoint(const Checkpoint<T>& ck) {
  detail::Writer w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.pod(kCheckpointVersion);
  nlohmann::json header{{"model", to_json(ck.model.config)}, {"run", ck.config}};
  w.str64(header.dump());
  w.pod(static_cast<std::uint64_t>(ck.vocab.size()));
  for (const auto& tok : ck.vocab.tokens()) w.str32(tok);
  const auto& ps = ck.model.params;
  w.pod(static_cast<std::uint64_t>(ps.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    w.str32(ps.name(i));
    w.pod(static_cast<std::uint8_t>(ps.trainable(i) ? 1 : 0));
    const auto& m = ps.value(i);
    w.pod(static_cast<std::uint64_t>(m.rows()));
    w.pod(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.size(); ++k) w.pod(static_cast<float>(m.data()[k]));
  }
  w.pod(ck.epoch);
  w.pod(ck.validation_perplexity);
  const std::uint64_t sum = detail::fnv1a(w.bytes());
  w.pod(sum);
  return std::move(w.bytes());
}

template <typename T>
Checkpoint<T> deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    throw CheckpointError("checkpoint truncated or corrupt");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw CheckpointError("not a checkpoint file (bad magic)");
  detail::Reader r(bytes, body);
  r.str(sizeof kCheckpointMagic);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, bytes.data() + body, sizeof stored_sum);
  if (stored_sum != detail::fnv1a(bytes.substr(0, body))) throw CheckpointError("checkpoint checksum mismatch");

  Checkpoint<T> ck;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str(r.pod<std::uint64_t>()));
    ck.config = header.at("run");
    ck.model.config = model_config_from_json(header.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header: ") + e.what());
  }

  const auto nv = r.pod<std::uint64_t>();
  std::vector<std::string> toks;
  for (std::uint64_t i = 0; i < nv; ++i) toks.push_back(r.str(r.pod<std::uint32_t>()));
  if (toks.size() < kNumSpecials || toks[0] != kPadToken || toks[1] != kUnkToken || toks[2] != kEosToken)
    throw CheckpointError("checkpoint vocabulary lacks the special tokens");
  for (std::size_t i = kNumSpecials; i < toks.size(); ++i) ck.vocab.add(toks[i]);
  if (ck.vocab.size() != toks.size()) throw CheckpointError("checkpoint vocabulary has duplicate tokens");

  const auto nt = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < nt; ++i) {
    std::string name = r.str(r.pod<std::uint32_t>());
    const bool trainable = r.pod<std::uint8_t>() != 0;
    const auto rows = r.pod<std::uint64_t>();
    const auto cols = r.pod<std::uint64_t>();
    if (cols != 0 && rows > (body - r.pos()) / (cols * sizeof(float))) throw CheckpointError("checkpoint truncated or corrupt");
    Matrix<T> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<T>(r.pod<float>());
    ck.model.params.add(std::move(name), std::move(m), trainable);
  }
  ck.epoch = r.pod<std::int64_t>();
  ck.validation_perplexity = r.pod<double>();
  if (r.pos() != body) throw CheckpointError("checkpoint has trailing bytes");
  try {
    ck.model.ids = Model<T>::resolve_ids(ck.model.params);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(e.what());
  }
  const auto& emb = ck.model.params.value(ck.model.ids.embedding);
  if (static_cast<std::size_t>(emb.rows()) != ck.vocab.size() ||
      static_cast<std::size_t>(emb.cols()) != ck.model.config.dim)
    throw CheckpointError("checkpoint embedding shape does not match vocabulary and dimension");
  return ck;
}

template <typename T>
void save_checkpoint(const Checkpoint<T>& ck, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint<T>(ss.str());
}

}  // namespace edge
