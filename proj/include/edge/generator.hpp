#pragma once

// Attention-based recurrent decoder and the teacher-forced training loss.

#include <vector>

#include "edge/reform.hpp"

namespace edge {

// Rows are independent hypotheses: h, cell and context are k x d.
template <typename T>
struct DecoderState {
  ad::Var<T> h;
  ad::Var<T> cell;
  ad::Var<T> context;
  std::size_t step = 0;
};

// context = masked mean of P_hat rows, h = h0, cell = 0.
template <typename T>
DecoderState<T> init_decode(const BoundModel<T>& m, ad::Var<T> p_hat, const Mask& p_mask, ad::Var<T> h0) {
  if (p_hat.rows() == 0) throw ShapeError("init_decode: empty passage");
  DecoderState<T> s;
  s.h = h0;
  s.cell = m.tape->constant(Matrix<T>::Zero(h0.rows(), h0.cols()));
  s.context = ad::mean_rows(p_hat, p_mask);
  return s;
}

template <typename T>
ad::Var<T> start_embedding(const BoundModel<T>& m, std::size_t rows, const ForwardContext& ctx) {
  return embed(m, std::vector<TokenId>(rows, kEosId), ctx);
}

template <typename T>
struct RecurrenceStep {
  DecoderState<T> state;
  ad::Var<T> attention;  // k x L_p
};

template <typename T>
RecurrenceStep<T> decoder_recurrence(const BoundModel<T>& m, const DecoderState<T>& prev, ad::Var<T> e_prev,
                                     ad::Var<T> p_hat, const Mask& p_mask) {
  ad::Var<T> x = ad::concat_cols<T>({e_prev, prev.context});
  auto s = kernels::lstm_step(x, kernels::LstmState<T>{prev.h, prev.cell}, m.decoder);
  auto [context, weights] = kernels::attend(ad::matmul(s.h, m.attn_query_w), p_hat, p_mask);
  RecurrenceStep<T> r;
  r.state = {s.h, s.c, context, prev.step + 1};
  r.attention = weights;
  return r;
}

// tanh([h; c] W_s) W_v + b_v, before the softmax.
template <typename T>
ad::Var<T> output_logits(const BoundModel<T>& m, ad::Var<T> h, ad::Var<T> context, const ForwardContext& ctx) {
  ad::Var<T> hidden = ad::tanh(ad::matmul(ad::concat_cols<T>({h, context}), m.out_hidden_w));
  return ad::add_bias(ad::matmul(dropout(hidden, ctx), m.out_w), m.out_b);
}

template <typename T>
struct DecodeStep {
  DecoderState<T> state;
  ad::Var<T> logits;     // k x |V|
  ad::Var<T> attention;  // k x L_p
};

template <typename T>
DecodeStep<T> decode_step(const BoundModel<T>& m, const DecoderState<T>& prev, ad::Var<T> e_prev, ad::Var<T> p_hat,
                          const Mask& p_mask, const ForwardContext& ctx = {}) {
  auto r = decoder_recurrence(m, prev, e_prev, p_hat, p_mask);
  return {r.state, output_logits(m, r.state.h, r.state.context, ctx), r.attention};
}

// Word distribution H_V for each row of a logits matrix.
template <typename T>
Matrix<T> probabilities(const Matrix<T>& logits) {
  return ad::softmax_rows_value(logits, {});
}

// Summed negative log-likelihood of the valid target tokens (the target
// already ends with EOS). Step t is fed the gold token t-1; step 0 is fed EOS.
template <typename T>
ad::Var<T> sequence_loss(const BoundModel<T>& m, const EncodedMaterials<T>& mat, const Sequence& target,
                         const ForwardContext& ctx = {}) {
  std::vector<TokenId> gold;
  for (std::size_t t = 0; t < target.width(); ++t)
    if (target.mask[t]) gold.push_back(target.ids[t]);
  if (gold.empty()) throw std::invalid_argument("sequence_loss: empty target");

  std::vector<TokenId> inputs{kEosId};
  inputs.insert(inputs.end(), gold.begin(), gold.end() - 1);
  ad::Var<T> embedded = embed(m, inputs, ctx);

  DecoderState<T> s = init_decode(m, mat.p_hat(), mat.p_mask, mat.h0);
  std::vector<ad::Var<T>> hs, cs;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    auto r = decoder_recurrence(m, s, ad::slice_rows(embedded, static_cast<Eigen::Index>(t), 1), mat.p_hat(),
                                mat.p_mask);
    s = r.state;
    hs.push_back(s.h);
    cs.push_back(s.context);
  }
  ad::Var<T> logits = output_logits(m, ad::concat_rows(hs), ad::concat_rows(cs), ctx);
  return ad::cross_entropy(logits, gold);
}

}  // namespace edge
