#pragma once

// Learnable parameters of the distractor generator and their binding to a tape.

#include <cmath>
#include <cstdint>
#include <string>

#include "edge/autodiff.hpp"
#include "edge/kernels.hpp"
#include "edge/random.hpp"
#include "edge/text.hpp"

namespace edge {

struct ModelConfig {
  std::size_t dim = 300;
  std::size_t vocab_size = 0;
  bool squash_gates = false;
  bool fine_tune_embeddings = false;
};

template <typename T>
struct LstmParamIds {
  std::size_t w_x = 0, w_h = 0, b = 0;
};

template <typename T>
struct BiLstmParamIds {
  LstmParamIds<T> fw, bw;
};

template <typename T>
class Model {
 public:
  struct Ids {
    std::size_t embedding = 0;
    BiLstmParamIds<T> encoder, reencoder, question_init;
    std::size_t fusion_w = 0, fusion_b = 0;
    std::size_t self_align_w = 0;
    std::size_t gate_q_w = 0, gate_q_b = 0;
    std::size_t gate_p_w = 0, gate_p_b = 0;
    std::size_t init_w = 0, init_b = 0;
    LstmParamIds<T> decoder;
    std::size_t attn_query_w = 0;
    std::size_t out_hidden_w = 0;
    std::size_t out_w = 0, out_b = 0;
  };

  ModelConfig config;
  ad::ParamSet<T> params;
  Ids ids;

  // Recurrent weights ~ U(-0.08, 0.08); projections Glorot-uniform; biases 0.
  static Model create(const ModelConfig& cfg, const EmbeddingMatrix<T>& embedding, std::uint64_t seed) {
    if (cfg.dim == 0 || cfg.dim % 2 != 0)
      throw ConfigError("model dimension must be a positive even number, got " + std::to_string(cfg.dim));
    if (static_cast<std::size_t>(embedding.weights.rows()) != cfg.vocab_size ||
        static_cast<std::size_t>(embedding.weights.cols()) != cfg.dim)
      throw ConfigError("embedding matrix shape does not match vocabulary size x dim");
    Model m;
    m.config = cfg;
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(cfg.dim);
    const auto v = static_cast<Eigen::Index>(cfg.vocab_size);
    const Eigen::Index h = d / 2;

    auto uniform = [&](Eigen::Index r, Eigen::Index c, double a) {
      Matrix<T> w(r, c);
      for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) w(i, j) = static_cast<T>(rng.uniform(-a, a));
      return w;
    };
    auto glorot = [&](Eigen::Index r, Eigen::Index c) { return uniform(r, c, std::sqrt(6.0 / double(r + c))); };
    auto zeros = [](Eigen::Index r, Eigen::Index c) { return Matrix<T>(Matrix<T>::Zero(r, c)); };
    auto lstm = [&](const std::string& name, Eigen::Index in, Eigen::Index hid) {
      LstmParamIds<T> p;
      p.w_x = m.params.add(name + ".w_x", uniform(in, 4 * hid, 0.08));
      p.w_h = m.params.add(name + ".w_h", uniform(hid, 4 * hid, 0.08));
      p.b = m.params.add(name + ".b", zeros(1, 4 * hid));
      return p;
    };
    auto bilstm = [&](const std::string& name) {
      BiLstmParamIds<T> p;
      p.fw = lstm(name + ".fw", d, h);
      p.bw = lstm(name + ".bw", d, h);
      return p;
    };

    m.ids.embedding = m.params.add("embedding", embedding.weights, cfg.fine_tune_embeddings);
    m.ids.encoder = bilstm("encoder");
    m.ids.fusion_w = m.params.add("fusion.w", glorot(4 * d, d));
    m.ids.fusion_b = m.params.add("fusion.b", zeros(1, d));
    m.ids.self_align_w = m.params.add("self_align.w", glorot(d, 1));
    m.ids.gate_q_w = m.params.add("question_gate.w", glorot(d, d));
    m.ids.gate_q_b = m.params.add("question_gate.b", zeros(1, 1));
    m.ids.gate_p_w = m.params.add("passage_gate.w", glorot(d, d));
    m.ids.gate_p_b = m.params.add("passage_gate.b", zeros(1, 1));
    m.ids.reencoder = bilstm("reencoder");
    m.ids.question_init = bilstm("question_init");
    m.ids.init_w = m.params.add("init_proj.w", glorot(d, d));
    m.ids.init_b = m.params.add("init_proj.b", zeros(1, d));
    m.ids.decoder = lstm("decoder", 2 * d, d);
    m.ids.attn_query_w = m.params.add("decoder_query.w", glorot(d, d));
    m.ids.out_hidden_w = m.params.add("output_hidden.w", glorot(2 * d, d));
    m.ids.out_w = m.params.add("output.w", glorot(d, v));
    m.ids.out_b = m.params.add("output.b", zeros(1, v));
    return m;
  }

  // Rebuilds the id table from parameter names (checkpoint loading).
  static Ids resolve_ids(const ad::ParamSet<T>& params) {
    auto need = [&](const std::string& n) {
      auto i = params.find(n);
      if (!i) throw std::runtime_error("missing parameter tensor: " + n);
      return *i;
    };
    auto lstm = [&](const std::string& n) {
      return LstmParamIds<T>{need(n + ".w_x"), need(n + ".w_h"), need(n + ".b")};
    };
    auto bilstm = [&](const std::string& n) { return BiLstmParamIds<T>{lstm(n + ".fw"), lstm(n + ".bw")}; };
    Ids ids;
    ids.embedding = need("embedding");
    ids.encoder = bilstm("encoder");
    ids.fusion_w = need("fusion.w");
    ids.fusion_b = need("fusion.b");
    ids.self_align_w = need("self_align.w");
    ids.gate_q_w = need("question_gate.w");
    ids.gate_q_b = need("question_gate.b");
    ids.gate_p_w = need("passage_gate.w");
    ids.gate_p_b = need("passage_gate.b");
    ids.reencoder = bilstm("reencoder");
    ids.question_init = bilstm("question_init");
    ids.init_w = need("init_proj.w");
    ids.init_b = need("init_proj.b");
    ids.decoder = lstm("decoder");
    ids.attn_query_w = need("decoder_query.w");
    ids.out_hidden_w = need("output_hidden.w");
    ids.out_w = need("output.w");
    ids.out_b = need("output.b");
    return ids;
  }
};

// Parameters of one Model bound as leaves of one tape.
template <typename T>
struct BoundModel {
  using V = ad::Var<T>;
  const Model<T>* model = nullptr;
  ad::Tape<T>* tape = nullptr;
  V embedding;
  kernels::LstmWeights<T> enc_fw, enc_bw, reenc_fw, reenc_bw, qinit_fw, qinit_bw, decoder;
  V fusion_w, fusion_b, self_align_w, gate_q_w, gate_q_b, gate_p_w, gate_p_b, init_w, init_b;
  V attn_query_w, out_hidden_w, out_w, out_b;

  std::size_t dim() const { return model->config.dim; }
  bool squash_gates() const { return model->config.squash_gates; }
};

template <typename T>
BoundModel<T> bind(const Model<T>& m, ad::Tape<T>& tape) {
  BoundModel<T> b;
  b.model = &m;
  b.tape = &tape;
  auto p = [&](std::size_t i) { return tape.param(m.params, i); };
  auto lstm = [&](const LstmParamIds<T>& ids) { return kernels::LstmWeights<T>{p(ids.w_x), p(ids.w_h), p(ids.b)}; };
  b.embedding = p(m.ids.embedding);
  b.enc_fw = lstm(m.ids.encoder.fw);
  b.enc_bw = lstm(m.ids.encoder.bw);
  b.reenc_fw = lstm(m.ids.reencoder.fw);
  b.reenc_bw = lstm(m.ids.reencoder.bw);
  b.qinit_fw = lstm(m.ids.question_init.fw);
  b.qinit_bw = lstm(m.ids.question_init.bw);
  b.decoder = lstm(m.ids.decoder);
  b.fusion_w = p(m.ids.fusion_w);
  b.fusion_b = p(m.ids.fusion_b);
  b.self_align_w = p(m.ids.self_align_w);
  b.gate_q_w = p(m.ids.gate_q_w);
  b.gate_q_b = p(m.ids.gate_q_b);
  b.gate_p_w = p(m.ids.gate_p_w);
  b.gate_p_b = p(m.ids.gate_p_b);
  b.init_w = p(m.ids.init_w);
  b.init_b = p(m.ids.init_b);
  b.attn_query_w = p(m.ids.attn_query_w);
  b.out_hidden_w = p(m.ids.out_hidden_w);
  b.out_w = p(m.ids.out_w);
  b.out_b = p(m.ids.out_b);
  return b;
}

// Inverted dropout on a plain matrix: survivors are scaled by 1/(1-rate).
template <typename T>
Matrix<T> apply_dropout(const Matrix<T>& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Matrix<T> out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = rng.bernoulli(rate) ? T(0) : out.data()[i] * keep_scale;
  return out;
}

// Training-mode switches threaded through a forward pass.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  bool active() const { return training && dropout > 0.0 && rng != nullptr; }
};

template <typename T>
ad::Var<T> dropout(ad::Var<T> x, const ForwardContext& ctx) {
  if (!ctx.active()) return x;
  Matrix<T> ones = Matrix<T>::Ones(x.rows(), x.cols());
  return ad::cmul_const(x, apply_dropout(ones, ctx.dropout, true, *ctx.rng));
}

}  // namespace edge
