#include <gtest/gtest.h>

#include "edge/kernels.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

namespace edge {
namespace {

using ad::Tape;
using ad::Var;
using namespace edge::testing;

constexpr double kOracleTol = 1e-12;

TEST(Attn, TwoKeyExample) {
  Tape<double> tape(false);
  Mat x(1, 2), y(2, 2);
  x << 2, 0;
  y << 1, 0, 0, 1;
  auto w = kernels::attn(tape.constant(x), tape.constant(y)).value();
  EXPECT_NEAR(w(0, 0), 0.8044, 1e-4);
  EXPECT_NEAR(w(0, 1), 0.1956, 1e-4);
  EXPECT_NEAR(w(0, 0), std::exp(std::sqrt(2.0)) / (std::exp(std::sqrt(2.0)) + 1.0), kOracleTol);
}

TEST(Attn, MatchesOracleWithMask) {
  Tape<double> tape(false);
  Mat x = random_matrix(3, 4, 1), y = random_matrix(5, 4, 2);
  Mask m{true, true, false, true, false};
  auto w = kernels::attn(tape.constant(x), tape.constant(y), m).value();
  EXPECT_LT((w - oracle_attn(x, y, m)).cwiseAbs().maxCoeff(), kOracleTol);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-12);
}

TEST(Attn, SingleKeyIsOne) {
  Tape<double> tape(false);
  auto w = kernels::attn(tape.constant(random_matrix(4, 3, 3)), tape.constant(random_matrix(1, 3, 4))).value();
  EXPECT_TRUE(w.isApprox(Mat::Ones(4, 1)));
}

TEST(Attn, RejectsWidthMismatch) {
  Tape<double> tape(false);
  EXPECT_THROW(kernels::attn(tape.constant(random_matrix(2, 3, 1)), tape.constant(random_matrix(2, 4, 1))), ShapeError);
}

TEST(Fuse, MatchesOracle) {
  Tape<double> tape(false);
  Mat x = random_matrix(3, 4, 5), xb = random_matrix(3, 4, 6), w = random_matrix(16, 4, 7), b = random_matrix(1, 4, 8);
  auto out = kernels::fuse(tape.constant(x), tape.constant(xb), tape.constant(w), tape.constant(b)).value();
  EXPECT_LT((out - oracle_fuse(x, xb, w, b)).cwiseAbs().maxCoeff(), kOracleTol);
  EXPECT_LE(out.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Fuse, RejectsShapeMismatch) {
  Tape<double> tape(false);
  auto x = tape.constant(random_matrix(3, 4, 5));
  EXPECT_THROW(kernels::fuse(x, tape.constant(random_matrix(2, 4, 5)), tape.constant(random_matrix(16, 4, 1)),
                             tape.constant(random_matrix(1, 4, 1))),
               ShapeError);
  EXPECT_THROW(kernels::fuse(x, x, tape.constant(random_matrix(8, 4, 1)), tape.constant(random_matrix(1, 4, 1))),
               ShapeError);
}

TEST(SelfAlign, MatchesOracleAndIsConvexCombination) {
  Tape<double> tape(false);
  Mat x = random_matrix(5, 4, 9), wa = random_matrix(4, 1, 10);
  Mask m{true, false, true, true, false};
  auto [v, r] = kernels::self_align_with_weights(tape.constant(x), tape.constant(wa), m);
  EXPECT_LT((v.value() - oracle_self_align(x, wa, m)).cwiseAbs().maxCoeff(), kOracleTol);
  EXPECT_NEAR(r.value().sum(), 1.0, 1e-12);
  EXPECT_EQ(r.value()(0, 1), 0.0);
  for (Eigen::Index k = 0; k < 4; ++k) {
    double lo = 1e9, hi = -1e9;
    for (Eigen::Index i : {0, 2, 3}) lo = std::min(lo, x(i, k)), hi = std::max(hi, x(i, k));
    EXPECT_GE(v.value()(0, k), lo - 1e-12);
    EXPECT_LE(v.value()(0, k), hi + 1e-12);
  }
}

TEST(SelfAlign, SingleRowReturnsRow) {
  Tape<double> tape(false);
  Mat x = random_matrix(1, 4, 11);
  auto v = kernels::self_align(tape.constant(x), tape.constant(random_matrix(4, 1, 12))).value();
  EXPECT_TRUE(v.isApprox(x));
}

TEST(Gate, MatchesOracle) {
  Tape<double> tape(false);
  Mat x = random_matrix(3, 4, 13), v = random_matrix(1, 4, 14), wg = random_matrix(4, 4, 15);
  Mat bg(1, 1);
  bg << 0.3;
  auto g = kernels::gate(tape.constant(x), tape.constant(v), tape.constant(wg), tape.constant(bg));
  auto delta = oracle_gate_values(x, v, wg, 0.3);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(g.values.value()(i, 0), delta[i], kOracleTol);
  EXPECT_LT((g.gated.value() - oracle_gate(x, v, wg, 0.3)).cwiseAbs().maxCoeff(), kOracleTol);
}

TEST(Gate, ZeroWeightsPassBiasOnly) {
  Tape<double> tape(false);
  Mat x = random_matrix(3, 4, 13);
  Mat bg(1, 1);
  bg << 1.0;
  auto g = kernels::gate(tape.constant(x), tape.constant(random_matrix(1, 4, 1)), tape.constant(Mat::Zero(4, 4)),
                         tape.constant(bg));
  EXPECT_TRUE(g.gated.value().isApprox(x));
}

TEST(Gate, SquashedValuesAreLogistic) {
  Tape<double> tape(false);
  Mat x = random_matrix(3, 4, 13), v = random_matrix(1, 4, 14), wg = random_matrix(4, 4, 15);
  Mat bg = Mat::Zero(1, 1);
  auto g = kernels::gate(tape.constant(x), tape.constant(v), tape.constant(wg), tape.constant(bg), true);
  auto delta = oracle_gate_values(x, v, wg, 0.0);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(g.values.value()(i, 0), sigm(delta[i]), kOracleTol);
}

OracleLstm random_lstm(Eigen::Index in, Eigen::Index hid, unsigned seed) {
  return {random_matrix(in, 4 * hid, seed, 0.5), random_matrix(hid, 4 * hid, seed + 1, 0.5),
          random_matrix(1, 4 * hid, seed + 2, 0.5)};
}

kernels::LstmWeights<double> bind_lstm(Tape<double>& t, const OracleLstm& p) {
  return {t.constant(p.wx), t.constant(p.wh), t.constant(p.b)};
}

TEST(Lstm, StepMatchesOracle) {
  Tape<double> tape(false);
  auto p = random_lstm(3, 2, 20);
  Mat x = random_matrix(1, 3, 30), h = random_matrix(1, 2, 31), c = random_matrix(1, 2, 32);
  auto s = kernels::lstm_step(tape.constant(x), {tape.constant(h), tape.constant(c)}, bind_lstm(tape, p));
  auto [ho, co] = oracle_lstm_step(p, row_of(x, 0), row_of(h, 0), row_of(c, 0));
  for (Eigen::Index k = 0; k < 2; ++k) {
    EXPECT_NEAR(s.h.value()(0, k), ho[k], kOracleTol);
    EXPECT_NEAR(s.c.value()(0, k), co[k], kOracleTol);
  }
}

TEST(BiEncode, MatchesOracleAndSkipsPadding) {
  Tape<double> tape(false);
  auto fw = random_lstm(4, 2, 40), bw = random_lstm(4, 2, 50);
  Mat x = random_matrix(5, 4, 60);
  Mask m{true, true, true, false, false};
  auto enc = kernels::bi_encode(tape.constant(x), m, bind_lstm(tape, fw), bind_lstm(tape, bw));
  auto o = oracle_bi_encode(x, fw, bw, m);
  EXPECT_LT((enc.outputs.value() - o.out).cwiseAbs().maxCoeff(), kOracleTol);
  for (Eigen::Index k = 0; k < 2; ++k) {
    EXPECT_NEAR(enc.final_forward.value()(0, k), o.final_fw[k], kOracleTol);
    EXPECT_NEAR(enc.final_backward.value()(0, k), o.final_bw[k], kOracleTol);
  }
  EXPECT_EQ(enc.outputs.value().row(3).norm(), 0.0);

  // Padding is invisible: the unpadded prefix encodes identically.
  Tape<double> t2(false);
  auto short_enc = kernels::bi_encode(t2.constant(Mat(x.topRows(3))), {}, bind_lstm(t2, fw), bind_lstm(t2, bw));
  EXPECT_EQ(short_enc.outputs.value(), Mat(enc.outputs.value().topRows(3)));
}

TEST(KernelGradients, MatchFiniteDifferences) {
  std::vector<Mat> in{random_matrix(3, 4, 1), random_matrix(5, 4, 2), random_matrix(16, 4, 3),
                      random_matrix(1, 4, 4), random_matrix(4, 1, 5),  random_matrix(4, 4, 6),
                      random_matrix(1, 1, 7), random_matrix(4, 8, 8, 0.5), random_matrix(2, 8, 9, 0.5),
                      random_matrix(1, 8, 10, 0.5)};
  const Mask m{true, false, true, true, false};
  const std::vector<std::pair<const char*, InputFn>> cases = {
      {"attn", [&](auto&, const auto& v) { return weighted_sum(kernels::attn(v[0], v[1], m), 1); }},
      {"attend", [&](auto&, const auto& v) { return weighted_sum(kernels::attend(v[0], v[1], m).first, 2); }},
      {"fuse", [](auto&, const auto& v) {
         auto xb = ad::slice_rows(v[1], 0, 3);
         return weighted_sum(kernels::fuse(v[0], xb, v[2], v[3]), 3);
       }},
      {"self_align", [&](auto&, const auto& v) { return weighted_sum(kernels::self_align(v[1], v[4], m), 4); }},
      {"gate", [](auto&, const auto& v) { return weighted_sum(kernels::gate(v[0], v[3], v[5], v[6]).gated, 5); }},
      {"gate squash", [](auto&, const auto& v) {
         return weighted_sum(kernels::gate(v[0], v[3], v[5], v[6], true).gated, 6);
       }},
      {"bi_encode", [&](auto&, const auto& v) {
         kernels::LstmWeights<double> w{v[7], v[8], v[9]};
         auto e = kernels::bi_encode(v[1], m, w, w);
         return ad::add(weighted_sum(e.outputs, 7), weighted_sum(e.final_backward, 8));
       }},
  };
  for (const auto& [name, fn] : cases) {
    auto rep = check_input_gradients(in, fn);
    EXPECT_LT(rep.max_rel, 1e-6) << name << ": " << rep.worst;
  }
}

}  // namespace
}  // namespace edge
