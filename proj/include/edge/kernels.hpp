#pragma once

// Attention, fusion, self-alignment, gating and the recurrent encoder. Every
// kernel is a composition of differentiable tape ops, so gradients follow
// from the op definitions in autodiff.hpp.

#include <cmath>
#include <utility>
#include <vector>

#include "edge/autodiff.hpp"

namespace edge::kernels {

using ad::Var;

// softmax(X Y^T / sqrt(d)) over the columns of Y left visible by y_mask.
template <typename T>
Var<T> attn(Var<T> x, Var<T> y, const Mask& y_mask = {}) {
  if (x.cols() != y.cols()) throw ShapeError("attn: width mismatch");
  if (!y_mask.empty() && static_cast<Eigen::Index>(y_mask.size()) != y.rows()) throw ShapeError("attn: mask length");
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(x.cols()));
  return ad::softmax_rows(ad::scale(ad::matmul_nt(x, y), inv_sqrt_d), y_mask);
}

// Attn(X, Y) Y, together with the weights.
template <typename T>
std::pair<Var<T>, Var<T>> attend(Var<T> x, Var<T> y, const Mask& y_mask = {}) {
  Var<T> w = attn(x, y, y_mask);
  return {ad::matmul(w, y), w};
}

// tanh([X; X_bar; X - X_bar; X o X_bar] W_f + b_f)
template <typename T>
Var<T> fuse(Var<T> x, Var<T> x_bar, Var<T> w_f, Var<T> b_f) {
  if (x.rows() != x_bar.rows() || x.cols() != x_bar.cols()) throw ShapeError("fuse: X and X_bar differ in shape");
  if (w_f.rows() != 4 * x.cols()) throw ShapeError("fuse: W_f must have 4d rows");
  Var<T> cat = ad::concat_cols<T>({x, x_bar, ad::sub(x, x_bar), ad::cmul(x, x_bar)});
  return ad::tanh(ad::add_bias(ad::matmul(cat, w_f), b_f));
}

// r = softmax over rows of X W_a (masked rows excluded); returns r^T X (1 x d)
// and r as a 1 x m row.
template <typename T>
std::pair<Var<T>, Var<T>> self_align_with_weights(Var<T> x, Var<T> w_a, const Mask& mask = {}) {
  if (w_a.rows() != x.cols() || w_a.cols() != 1) throw ShapeError("self_align: W_a must be d x 1");
  Var<T> r = ad::softmax_rows(ad::transpose(ad::matmul(x, w_a)), mask);
  return {ad::matmul(r, x), r};
}

template <typename T>
Var<T> self_align(Var<T> x, Var<T> w_a, const Mask& mask = {}) {
  return self_align_with_weights(x, w_a, mask).first;
}

template <typename T>
struct GateResult {
  Var<T> gated;   // m x d, row i scaled by delta_i
  Var<T> values;  // m x 1, delta
};

// delta_i = X_i W_g v^T + b_g, unsquashed unless `squash` applies a logistic.
template <typename T>
GateResult<T> gate(Var<T> x, Var<T> v, Var<T> w_g, Var<T> b_g, bool squash = false) {
  if (v.rows() != 1 || v.cols() != x.cols()) throw ShapeError("gate: v must be 1 x d");
  if (w_g.rows() != x.cols() || w_g.cols() != x.cols()) throw ShapeError("gate: W_g must be d x d");
  if (b_g.rows() != 1 || b_g.cols() != 1) throw ShapeError("gate: b_g must be a scalar");
  Var<T> delta = ad::add_bias(ad::matmul_nt(ad::matmul(x, w_g), v), b_g);
  if (squash) delta = ad::sigmoid(delta);
  return {ad::scale_rows(x, delta), delta};
}

// One LSTM direction. Gate columns are laid out [input, forget, cell, output].
template <typename T>
struct LstmWeights {
  Var<T> w_x;  // in x 4h
  Var<T> w_h;  // h x 4h
  Var<T> b;    // 1 x 4h

  Eigen::Index hidden() const { return w_h.rows(); }
};

template <typename T>
struct LstmState {
  Var<T> h;
  Var<T> c;
};

// Advances k independent rows one step; x_proj is the precomputed x W_x.
template <typename T>
LstmState<T> lstm_step_projected(Var<T> x_proj, const LstmState<T>& s, const LstmWeights<T>& w) {
  const Eigen::Index h = w.hidden();
  Var<T> z = ad::add_bias(ad::add(x_proj, ad::matmul(s.h, w.w_h)), w.b);
  Var<T> i = ad::sigmoid(ad::slice_cols(z, 0, h));
  Var<T> f = ad::sigmoid(ad::slice_cols(z, h, h));
  Var<T> g = ad::tanh(ad::slice_cols(z, 2 * h, h));
  Var<T> o = ad::sigmoid(ad::slice_cols(z, 3 * h, h));
  Var<T> c = ad::add(ad::cmul(f, s.c), ad::cmul(i, g));
  Var<T> hn = ad::cmul(o, ad::tanh(c));
  return {hn, c};
}

template <typename T>
LstmState<T> lstm_step(Var<T> x, const LstmState<T>& s, const LstmWeights<T>& w) {
  if (x.cols() != w.w_x.rows()) throw ShapeError("lstm_step: input width");
  return lstm_step_projected(ad::matmul(x, w.w_x), s, w);
}

template <typename T>
struct BiEncoding {
  Var<T> outputs;         // L x 2h; zero rows at masked positions
  Var<T> final_forward;   // 1 x h, state after the last valid position
  Var<T> final_backward;  // 1 x h, state after the first valid position
};

// Forward and backward recurrent passes over the valid positions of x; masked
// positions neither update the state nor produce output.
template <typename T>
BiEncoding<T> bi_encode(Var<T> x, const Mask& mask, const LstmWeights<T>& fw, const LstmWeights<T>& bw) {
  auto& tape = *x.tape;
  const Eigen::Index len = x.rows();
  if (len < 1) throw ShapeError("bi_encode: empty sequence");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != len) throw ShapeError("bi_encode: mask length");
  const Eigen::Index h = fw.hidden();
  if (bw.hidden() != h) throw ShapeError("bi_encode: direction widths differ");
  auto valid = [&](Eigen::Index t) { return mask.empty() || mask[static_cast<std::size_t>(t)]; };

  Var<T> zero_row = tape.constant(Matrix<T>::Zero(1, h));
  Var<T> proj_f = ad::matmul(x, fw.w_x);
  Var<T> proj_b = ad::matmul(x, bw.w_x);

  std::vector<Var<T>> out_f(static_cast<std::size_t>(len), zero_row);
  std::vector<Var<T>> out_b(static_cast<std::size_t>(len), zero_row);
  LstmState<T> sf{zero_row, zero_row};
  for (Eigen::Index t = 0; t < len; ++t) {
    if (!valid(t)) continue;
    sf = lstm_step_projected(ad::slice_rows(proj_f, t, 1), sf, fw);
    out_f[static_cast<std::size_t>(t)] = sf.h;
  }
  LstmState<T> sb{zero_row, zero_row};
  for (Eigen::Index t = len; t-- > 0;) {
    if (!valid(t)) continue;
    sb = lstm_step_projected(ad::slice_rows(proj_b, t, 1), sb, bw);
    out_b[static_cast<std::size_t>(t)] = sb.h;
  }
  Var<T> fwd = ad::concat_rows(out_f);
  Var<T> bwd = ad::concat_rows(out_b);
  return {ad::concat_cols<T>({fwd, bwd}), sf.h, sb.h};
}

}  // namespace edge::kernels
