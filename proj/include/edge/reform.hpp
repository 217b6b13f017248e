#pragma once

// Encoding, enrichment, question/passage reforming and the decoder-state
// initializer, composed from the kernels.

#include <vector>

#include "edge/batch.hpp"
#include "edge/kernels.hpp"
#include "edge/model.hpp"

namespace edge {

template <typename T>
struct Enriched {
  ad::Var<T> q_tilde;
  ad::Var<T> a_tilde;
  ad::Var<T> q_attention;  // L_q x L_p
  ad::Var<T> a_attention;  // L_a x L_p
};

// Fuses passage context into the question and answer:
// Q~ = Fuse(Q, Attn(Q, P) P), A~ = Fuse(A, Attn(A, P) P).
template <typename T>
Enriched<T> enrich(ad::Var<T> q, ad::Var<T> a, ad::Var<T> p, const Mask& p_mask, const BoundModel<T>& m) {
  auto [q_bar, q_w] = kernels::attend(q, p, p_mask);
  auto [a_bar, a_w] = kernels::attend(a, p, p_mask);
  return {kernels::fuse(q, q_bar, m.fusion_w, m.fusion_b), kernels::fuse(a, a_bar, m.fusion_w, m.fusion_b), q_w, a_w};
}

template <typename T>
struct ReformedQuestion {
  ad::Var<T> q_dot;
  ad::Var<T> gate_values;  // L_q x 1
  ad::Var<T> answer_vector;
};

template <typename T>
ReformedQuestion<T> reform_question(ad::Var<T> q_tilde, ad::Var<T> a_tilde, const Mask& a_mask,
                                    const BoundModel<T>& m) {
  ad::Var<T> v_a = kernels::self_align(a_tilde, m.self_align_w, a_mask);
  auto g = kernels::gate(q_tilde, v_a, m.gate_q_w, m.gate_q_b, m.squash_gates());
  return {g.gated, g.values, v_a};
}

template <typename T>
struct ReformedPassage {
  ad::Var<T> a_hat;          // answer with question context fused in
  ad::Var<T> answer_vector;  // SelfAlign(a_hat)
  ad::Var<T> p_dot;          // gated contextual passage
  ad::Var<T> p_tilde;        // p_dot fused with the reformed question
  ad::Var<T> p_hat;          // re-encoded passage
  ad::Var<T> gate_values;    // L_p x 1
};

// The A-Q attention reads the enriched question q_tilde; the P-Q attention
// reads the reformed question q_dot; the gate multiplies the contextual
// passage p itself.
template <typename T>
ReformedPassage<T> reform_passage(ad::Var<T> p, ad::Var<T> q_tilde, ad::Var<T> q_dot, ad::Var<T> a_tilde,
                                  const Mask& p_mask, const Mask& q_mask, const Mask& a_mask,
                                  const BoundModel<T>& m) {
  ReformedPassage<T> r;
  auto [a_bar, a_w] = kernels::attend(a_tilde, q_tilde, q_mask);
  r.a_hat = kernels::fuse(a_tilde, a_bar, m.fusion_w, m.fusion_b);
  r.answer_vector = kernels::self_align(r.a_hat, m.self_align_w, a_mask);
  auto g = kernels::gate(p, r.answer_vector, m.gate_p_w, m.gate_p_b, m.squash_gates());
  r.p_dot = g.gated;
  r.gate_values = g.values;
  auto [p_bar, p_w] = kernels::attend(r.p_dot, q_dot, q_mask);
  r.p_tilde = kernels::fuse(r.p_dot, p_bar, m.fusion_w, m.fusion_b);
  r.p_hat = kernels::bi_encode(r.p_tilde, p_mask, m.reenc_fw, m.reenc_bw).outputs;
  return r;
}

// h0 = [final forward state; final backward state] W_p + b_p over the
// reformed question.
template <typename T>
ad::Var<T> init_decoder_state(ad::Var<T> q_dot, const Mask& q_mask, const BoundModel<T>& m) {
  auto enc = kernels::bi_encode(q_dot, q_mask, m.qinit_fw, m.qinit_bw);
  ad::Var<T> hq = ad::concat_cols<T>({enc.final_forward, enc.final_backward});
  return ad::add_bias(ad::matmul(hq, m.init_w), m.init_b);
}

template <typename T>
struct EncodedMaterials {
  ad::Var<T> p, q, a;
  Mask p_mask, q_mask, a_mask;
  Enriched<T> enriched;
  ReformedQuestion<T> question;
  ReformedPassage<T> passage;
  ad::Var<T> h0;

  ad::Var<T> p_hat() const { return passage.p_hat; }
};

template <typename T>
ad::Var<T> embed(const BoundModel<T>& m, const std::vector<TokenId>& ids, const ForwardContext& ctx) {
  return dropout(ad::gather_rows(m.embedding, ids), ctx);
}

// Runs every stage from token ids up to the decoder's initial state.
template <typename T>
EncodedMaterials<T> encode_materials(const BoundModel<T>& m, const ModelInput& in, const ForwardContext& ctx = {}) {
  if (in.passage.length() == 0 || in.question.length() == 0 || in.answer.length() == 0)
    throw std::invalid_argument("encode_materials: every field needs at least one unmasked token");
  EncodedMaterials<T> e;
  e.p_mask = in.passage.mask;
  e.q_mask = in.question.mask;
  e.a_mask = in.answer.mask;
  e.p = kernels::bi_encode(embed(m, in.passage.ids, ctx), e.p_mask, m.enc_fw, m.enc_bw).outputs;
  e.q = kernels::bi_encode(embed(m, in.question.ids, ctx), e.q_mask, m.enc_fw, m.enc_bw).outputs;
  e.a = kernels::bi_encode(embed(m, in.answer.ids, ctx), e.a_mask, m.enc_fw, m.enc_bw).outputs;
  e.enriched = enrich(e.q, e.a, e.p, e.p_mask, m);
  e.question = reform_question(e.enriched.q_tilde, e.enriched.a_tilde, e.a_mask, m);
  e.passage = reform_passage(e.p, e.enriched.q_tilde, e.question.q_dot, e.enriched.a_tilde, e.p_mask, e.q_mask,
                             e.a_mask, m);
  e.h0 = init_decoder_state(e.question.q_dot, e.q_mask, m);
  return e;
}

}  // namespace edge
