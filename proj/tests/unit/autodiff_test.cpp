#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "cgan/autodiff/checkpoint.hpp"
#include "cgan/autodiff/gradcheck.hpp"
#include "cgan/autodiff/ops.hpp"
#include "cgan/autodiff/optim.hpp"
#include "support/fixtures.hpp"

namespace ad = cgan::ad;
using cgan::model::Rng;
using cgan::testing::random_tensor;

namespace {

ad::Var param(const ad::Shape& shape, Rng& rng, const std::string& name, double scale = 1.0) {
  return ad::Var::parameter(random_tensor(shape, rng, scale), name);
}

// Projects an output onto fixed random coefficients so every entry matters.
ad::Var project(const ad::Var& out, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(out, ad::Var::constant(random_tensor(out.shape(), rng))));
}

constexpr double kTol = 1e-4;

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cgan_autodiff_" + name);
}

}  // namespace

TEST(TensorOps, TanhAtOriginIsZero) {
  const auto y = ad::tanh(ad::Var::constant(ad::Tensor::row({0.0})));
  EXPECT_EQ(y.value()[0], 0.0);
}

TEST(TensorOps, SoftmaxOfEqualScoresIsUniform) {
  const auto y = ad::softmax(ad::Var::constant(ad::Tensor::row({0.0, 0.0, 0.0})));
  for (double v : y.value().data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(TensorOps, MatmulOfOnes) {
  const auto y = ad::matmul(ad::Var::constant(ad::Tensor::matrix(2, 3, 1.0)),
                            ad::Var::constant(ad::Tensor::matrix(3, 2, 1.0)));
  EXPECT_EQ(y.value(), ad::Tensor::matrix(2, 2, 3.0));
}

TEST(TensorOps, ShapeMismatchNamesOpAndShapes) {
  const auto a = ad::Var::constant(ad::Tensor::matrix(2, 3));
  const auto b = ad::Var::constant(ad::Tensor::matrix(2, 3));
  try {
    (void)ad::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ad::ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
  EXPECT_THROW((void)ad::add(a, ad::Var::constant(ad::Tensor::matrix(3, 2))), ad::ShapeError);
  EXPECT_THROW((void)ad::concat_cols(std::array<ad::Var, 2>{a, ad::Var::constant(ad::Tensor::matrix(1, 3))}),
               ad::ShapeError);
}

TEST(TensorOps, NonFiniteInputRejected) {
  const auto bad = ad::Var::constant(ad::Tensor::row({1.0, NAN}));
  EXPECT_THROW((void)ad::tanh(bad), ad::NonFiniteError);
  EXPECT_THROW((void)ad::softmax(ad::Var::constant(ad::Tensor::row({INFINITY}))), ad::NonFiniteError);
  EXPECT_THROW((void)ad::scale(ad::Var::constant(ad::Tensor::row({1.0})), NAN), ad::NonFiniteError);
}

TEST(TensorOps, SoftmaxRowsAreDistributions) {
  Rng rng(3);
  const auto y = ad::softmax(ad::Var::constant(random_tensor({5, 7}, rng, 20.0)));
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_GE(y.value().at(r, c), 0.0);
      total += y.value().at(r, c);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(TensorOps, MaskedEntriesGetZeroProbability) {
  const auto z = ad::Var::constant(ad::Tensor::row({1.0, 2.0, 3.0}));
  const std::array<std::uint8_t, 3> mask{0, 1, 0};
  const auto p = ad::softmax(ad::masked_fill(z, mask, ad::kMaskedScore));
  EXPECT_EQ(p.value()[1], 0.0);
  EXPECT_TRUE(p.value().all_finite());
}

TEST(TensorOps, GatherRowsRejectsOutOfRange) {
  const auto t = ad::Var::constant(ad::Tensor::matrix(3, 2));
  const std::array<int, 1> bad{3};
  EXPECT_THROW((void)ad::gather_rows(t, bad), ad::ShapeError);
}

TEST(Backward, TanhAtOrigin) {
  auto x = ad::Var::parameter(ad::Tensor::row({0.0}), "x");
  ad::Tape tape;
  ad::Var loss;
  {
    ad::TapeScope s(tape);
    loss = ad::sum(ad::tanh(x));
  }
  ad::backward(tape, loss);
  EXPECT_DOUBLE_EQ(x.grad()[0], 1.0);
}

TEST(Backward, MeanSquaredErrorUsesMeanNormalization) {
  auto w = ad::Var::parameter(ad::Tensor::row({3.0}), "w");
  ad::Tape tape;
  ad::Var loss;
  {
    ad::TapeScope s(tape);
    loss = ad::mse(w, ad::Var::constant(ad::Tensor::row({0.0})));
  }
  ad::backward(tape, loss);
  EXPECT_DOUBLE_EQ(loss.value().item(), 9.0);
  EXPECT_DOUBLE_EQ(w.grad()[0], 6.0);  // 2 * 3 / n with n = 1
}

TEST(Backward, CrossEntropyGradientIsSoftmaxMinusOneHot) {
  Rng rng(5);
  auto z = param({1, 5}, rng, "z");
  const std::array<int, 1> target{2};
  const std::array<double, 1> weight{1.0};
  ad::Tape tape;
  ad::Var loss;
  {
    ad::TapeScope s(tape);
    loss = ad::cross_entropy(z, target, weight);
  }
  ad::backward(tape, loss);
  const auto p = ad::softmax(ad::Var::constant(z.value())).value();
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(z.grad()[j], p[j] - (j == 2 ? 1.0 : 0.0), 1e-12);
  std::array<ad::Var, 1> ps{z};
  EXPECT_LT(ad::grad_check([&] { return ad::cross_entropy(z, target, weight); }, ps), kTol);
}

TEST(Backward, UnreachableParameterHoldsZeroGradient) {
  auto a = ad::Var::parameter(ad::Tensor::row({1.0, 2.0}), "a");
  auto b = ad::Var::parameter(ad::Tensor::row({1.0, 2.0}), "b");
  ad::Tape tape;
  ad::Var loss;
  {
    ad::TapeScope s(tape);
    (void)ad::tanh(b);
    loss = ad::sum(ad::tanh(a));
  }
  ad::backward(tape, loss);
  ASSERT_TRUE(b.has_grad());
  EXPECT_EQ(b.grad(), ad::Tensor::row({0.0, 0.0}));
}

TEST(Backward, RejectsNonScalarLoss) {
  auto a = ad::Var::parameter(ad::Tensor::row({1.0, 2.0}), "a");
  ad::Tape tape;
  ad::Var out;
  {
    ad::TapeScope s(tape);
    out = ad::tanh(a);
  }
  EXPECT_THROW(ad::backward(tape, out), std::invalid_argument);
}

TEST(Backward, NoGradScopeRecordsNothing) {
  auto a = ad::Var::parameter(ad::Tensor::row({1.0}), "a");
  ad::Tape tape;
  {
    ad::TapeScope s(tape);
    ad::NoGradScope ng;
    (void)ad::tanh(a);
  }
  EXPECT_TRUE(tape.empty());
}

TEST(Backward, DiamondGraphAccumulates) {
  Rng rng(9);
  auto x = param({2, 3}, rng, "x");
  auto loss_fn = [&] {
    const auto shared = ad::tanh(x);
    return ad::sum(ad::add(ad::mul(shared, shared), ad::sigmoid(shared)));
  };
  std::array<ad::Var, 1> ps{x};
  EXPECT_LT(ad::grad_check(loss_fn, ps), kTol);
}

TEST(GradCheck, LinearFunctionIsExact) {
  Rng rng(1);
  auto x = param({3, 2}, rng, "x");
  std::array<ad::Var, 1> ps{x};
  EXPECT_LT(ad::grad_check([&] { return ad::sum(x); }, ps), 1e-10);
}

TEST(GradCheck, RejectsNonPositiveStep) {
  auto x = ad::Var::parameter(ad::Tensor::row({1.0}), "x");
  std::array<ad::Var, 1> ps{x};
  EXPECT_THROW((void)ad::grad_check([&] { return ad::sum(x); }, ps, 0.0), std::invalid_argument);
}

TEST(GradCheck, RejectsNonFiniteLoss) {
  auto x = ad::Var::parameter(ad::Tensor::row({1e308}), "x");
  std::array<ad::Var, 1> ps{x};
  EXPECT_ANY_THROW((void)ad::grad_check([&] { return ad::sum(ad::scale(x, 10.0)); }, ps));
}

// Every op kind under a random projection at tiny sizes.
TEST(GradCheck, EveryOpKind) {
  Rng rng(2024);
  auto a = param({3, 4}, rng, "a");
  auto b = param({4, 2}, rng, "b");
  auto c = param({3, 4}, rng, "c");
  auto r = param({1, 4}, rng, "r");
  auto table = param({6, 4}, rng, "table");
  const std::array<int, 4> ids{5, 0, 5, 2};
  const std::array<std::uint8_t, 12> mask{0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0};
  const std::array<std::uint8_t, 3> keep{1, 0, 1};
  const std::array<int, 3> targets{1, 3, 0};
  const std::array<double, 3> weights{0.5, 0.25, 0.0};

  struct Case {
    const char* name;
    std::function<ad::Var()> fn;
    std::vector<ad::Var> params;
  };
  const std::vector<Case> cases = {
      {"matmul", [&] { return project(ad::matmul(a, b), 1); }, {a, b}},
      {"add", [&] { return project(ad::add(a, c), 2); }, {a, c}},
      {"sub", [&] { return project(ad::sub(a, c), 3); }, {a, c}},
      {"mul", [&] { return project(ad::mul(a, c), 4); }, {a, c}},
      {"add_row", [&] { return project(ad::add_row(a, r), 5); }, {a, r}},
      {"scale", [&] { return project(ad::scale(a, -1.7), 6); }, {a}},
      {"tanh", [&] { return project(ad::tanh(a), 7); }, {a}},
      {"sigmoid", [&] { return project(ad::sigmoid(a), 8); }, {a}},
      {"softmax", [&] { return project(ad::softmax(a), 9); }, {a}},
      {"concat_cols", [&] { return project(ad::concat_cols(std::array<ad::Var, 2>{a, c}), 10); }, {a, c}},
      {"concat_rows", [&] { return project(ad::concat_rows(std::array<ad::Var, 2>{a, r}), 11); }, {a, r}},
      {"slice_cols", [&] { return project(ad::slice_cols(a, 1, 3), 12); }, {a}},
      {"gather_rows", [&] { return project(ad::gather_rows(table, ids), 13); }, {table}},
      {"masked_fill", [&] { return project(ad::softmax(ad::masked_fill(a, mask, ad::kMaskedScore)), 14); }, {a}},
      {"select_rows", [&] { return project(ad::select_rows(keep, a, c), 15); }, {a, c}},
      {"transpose", [&] { return project(ad::transpose(a), 16); }, {a}},
      {"sum", [&] { return ad::sum(ad::mul(a, a)); }, {a}},
      {"cross_entropy", [&] { return ad::cross_entropy(a, targets, weights); }, {a}},
      {"mse", [&] { return ad::mse(a, c); }, {a, c}},
  };
  for (const auto& cs : cases) {
    auto ps = cs.params;
    EXPECT_LT(ad::grad_check(cs.fn, ps), kTol) << cs.name;
  }
}

TEST(TensorOps, ReplayIsBitIdentical) {
  auto run = [] {
    Rng rng(77);
    auto a = ad::Var::constant(random_tensor({4, 5}, rng));
    auto b = ad::Var::constant(random_tensor({5, 3}, rng));
    return ad::softmax(ad::tanh(ad::matmul(a, b))).value();
  };
  EXPECT_EQ(run(), run());
}

TEST(TensorOps, MatmulRowsIndependentOfBatch) {
  Rng rng(4);
  const auto a = random_tensor({6, 9}, rng);
  const auto b = ad::Var::constant(random_tensor({9, 5}, rng));
  const auto full = ad::matmul(ad::Var::constant(a), b).value();
  for (int r = 0; r < 6; ++r) {
    const std::array<int, 1> row{r};
    const auto one = ad::matmul(ad::gather_rows(ad::Var::constant(a), row), b).value();
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(one[j], full.at(static_cast<std::size_t>(r), j));
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto w = ad::Var::parameter(ad::Tensor::row({1.0, -2.0}), "w");
  ad::ParamList params;
  params.add(w);
  w.node()->grad_buffer();
  ad::AdamState st;
  ad::adam_step(params, st);
  EXPECT_EQ(w.value(), ad::Tensor::row({1.0, -2.0}));
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepMovesBySignTimesLearningRate) {
  auto w = ad::Var::parameter(ad::Tensor::row({0.5}), "w");
  ad::ParamList params;
  params.add(w);
  w.node()->grad_buffer()[0] = 0.3;
  ad::AdamState st;
  ad::adam_step(params, st);
  EXPECT_NEAR(w.value()[0], 0.5 - 1e-3 * 0.3 / (0.3 + 1e-8), 1e-12);
  EXPECT_DOUBLE_EQ(w.grad()[0], 0.3);  // gradient untouched
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  auto w = ad::Var::parameter(ad::Tensor::row({0.0}), "w");
  ad::ParamList params;
  params.add(w);
  w.node()->grad_buffer()[0] = -1.0;
  ad::AdamState st;
  double prev = 0.0;
  for (int i = 0; i < 2; ++i) {
    ad::adam_step(params, st);
    EXPECT_GT(w.value()[0], prev);
    prev = w.value()[0];
  }
}

TEST(Adam, MissingGradientNamesParameter) {
  auto w = ad::Var::parameter(ad::Tensor::row({0.0}), "decoder.w");
  ad::ParamList params;
  params.add(w);
  ad::AdamState st;
  try {
    ad::adam_step(params, st);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.w"), std::string::npos);
  }
}

TEST(Adam, ClipsByGlobalNorm) {
  auto w = ad::Var::parameter(ad::Tensor::row({0.0, 0.0}), "w");
  ad::ParamList params;
  params.add(w);
  w.node()->grad_buffer() = {300.0, 400.0};
  ad::AdamState st;
  st.clip_norm = 5.0;
  ad::adam_step(params, st);
  // Adam's first step is scale-free, so clipping shows only in the moments.
  EXPECT_NEAR(st.first_moment[0][0], 0.1 * 3.0, 1e-12);
  EXPECT_NEAR(st.first_moment[0][1], 0.1 * 4.0, 1e-12);
}

TEST(ParamList, RejectsDuplicatesAndConstants) {
  ad::ParamList params;
  params.add(ad::Var::parameter(ad::Tensor::row({1.0}), "w"));
  EXPECT_THROW(params.add(ad::Var::parameter(ad::Tensor::row({1.0}), "w")), std::invalid_argument);
  EXPECT_THROW(params.add(ad::Var::constant(ad::Tensor::row({1.0}))), std::invalid_argument);
}

TEST(Checkpoint, RoundTripsExactly) {
  Rng rng(8);
  ad::ParamList a, b;
  a.add(param({3, 2}, rng, "x"));
  a.add(param({1, 5}, rng, "y"));
  b.add(ad::Var::parameter(ad::Tensor::matrix(3, 2), "x"));
  b.add(ad::Var::parameter(ad::Tensor::matrix(1, 5), "y"));
  const auto path = temp_path("roundtrip.ckpt");
  ad::save_checkpoint(path, a);
  ad::load_checkpoint(path, b);
  EXPECT_EQ(a.params()[0].value(), b.params()[0].value());
  EXPECT_EQ(a.params()[1].value(), b.params()[1].value());
}

TEST(Checkpoint, RejectsCorruptAndMismatchedFiles) {
  Rng rng(8);
  ad::ParamList a;
  a.add(param({3, 2}, rng, "x"));
  const auto path = temp_path("bad.ckpt");
  ad::save_checkpoint(path, a);

  ad::ParamList wrong_shape;
  wrong_shape.add(ad::Var::parameter(ad::Tensor::matrix(2, 3), "x"));
  EXPECT_THROW(ad::load_checkpoint(path, wrong_shape), ad::CheckpointError);

  ad::ParamList missing;
  missing.add(ad::Var::parameter(ad::Tensor::matrix(3, 2), "x"));
  missing.add(ad::Var::parameter(ad::Tensor::matrix(1, 1), "z"));
  EXPECT_THROW(ad::load_checkpoint(path, missing), ad::CheckpointError);

  ad::ParamList fewer;
  EXPECT_THROW(ad::load_checkpoint(path, fewer), ad::CheckpointError);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  ad::ParamList again;
  again.add(ad::Var::parameter(ad::Tensor::matrix(3, 2), "x"));
  EXPECT_THROW(ad::load_checkpoint(path, again), ad::CheckpointError);

  {
    std::ofstream out(path, std::ios::binary);
    out << "JUNKJUNK";
  }
  EXPECT_THROW(ad::load_checkpoint(path, again), ad::CheckpointError);
  EXPECT_THROW(ad::load_checkpoint(temp_path("does_not_exist.ckpt"), again), ad::CheckpointError);
}

TEST(Checkpoint, HeaderLayout) {
  ad::ParamList a;
  a.add(ad::Var::parameter(ad::Tensor::row({1.5}), "w"));
  const auto path = temp_path("layout.ckpt");
  ad::save_checkpoint(path, a);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  // magic, version, name length, name, rank, two extents, one f64
  ASSERT_EQ(bytes.size(), 4u + 4 + 2 + 1 + 1 + 16 + 8);
  EXPECT_EQ(bytes.substr(0, 4), "CGAN");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[10], 'w');
  EXPECT_EQ(bytes[11], 2);
}
