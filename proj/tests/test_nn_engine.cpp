#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "rwenas/errors.hpp"
#include "rwenas/nn_engine.hpp"
#include "rwenas/random.hpp"
#include "rwenas/search_space.hpp"

using namespace rwenas;

namespace {

Tensor random_tensor(Shape4 s, std::uint64_t seed) {
  Tensor t(s);
  Rng rng(seed);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

Tensor filled(Shape4 s, float v) {
  Tensor t(s);
  std::fill(t.data().begin(), t.data().end(), v);
  return t;
}

// Straightforward reference: explicit zero-padded input lookups in double.
std::vector<double> ref_depthwise(const Tensor& x, const std::vector<float>& w, int k, int stride,
                                  int dil, int& oh, int& ow) {
  const Shape4 s = x.shape();
  oh = (s.height + stride - 1) / stride;
  ow = (s.width + stride - 1) / stride;
  const int pad = dil * (k - 1) / 2;
  std::vector<double> y(static_cast<std::size_t>(s.batch) * s.channels * oh * ow, 0.0);
  for (int n = 0; n < s.batch; ++n)
    for (int c = 0; c < s.channels; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
              const int r = i * stride - pad + a * dil;
              const int q = j * stride - pad + b * dil;
              if (r < 0 || q < 0 || r >= s.height || q >= s.width) continue;
              acc += static_cast<double>(w[(c * k + a) * k + b]) * std::max(0.0f, x.at(n, c, r, q));
            }
          y[((static_cast<std::size_t>(n) * s.channels + c) * oh + i) * ow + j] = acc;
        }
  return y;
}

std::vector<double> ref_pointwise(const std::vector<double>& x, int batch, int in_c, int out_c,
                                  int plane, const std::vector<float>& w) {
  std::vector<double> y(static_cast<std::size_t>(batch) * out_c * plane, 0.0);
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < out_c; ++o)
      for (int i = 0; i < in_c; ++i)
        for (int p = 0; p < plane; ++p)
          y[(static_cast<std::size_t>(n) * out_c + o) * plane + p] +=
              w[o * in_c + i] * x[(static_cast<std::size_t>(n) * in_c + i) * plane + p];
  return y;
}

void ref_norm(std::vector<double>& x, int batch, int c, int plane) {
  for (int ch = 0; ch < c; ++ch) {
    double mean = 0.0, var = 0.0;
    for (int n = 0; n < batch; ++n)
      for (int p = 0; p < plane; ++p) mean += x[(static_cast<std::size_t>(n) * c + ch) * plane + p];
    mean /= batch * plane;
    for (int n = 0; n < batch; ++n)
      for (int p = 0; p < plane; ++p) {
        const double d = x[(static_cast<std::size_t>(n) * c + ch) * plane + p] - mean;
        var += d * d;
      }
    var /= batch * plane;
    for (int n = 0; n < batch; ++n)
      for (int p = 0; p < plane; ++p) {
        double& v = x[(static_cast<std::size_t>(n) * c + ch) * plane + p];
        v = (v - mean) / std::sqrt(var + 1e-5);
      }
  }
}

}  // namespace

TEST_CASE("fan-in of a 3x3 convolution over 10 channels") {
  const ConvSpec spec{"c", 10, 10, 3, 1};
  CHECK(spec.fan_in() == 90);
  const auto w = sample_conv_weights(spec, 1);
  CHECK(w.size() == 900);
  const double bound = 1.0 / std::sqrt(90.0);
  CHECK(bound == doctest::Approx(0.10541).epsilon(1e-4));
  for (float v : w) CHECK(std::abs(v) <= bound);
}

TEST_CASE("init variance matches 1/(3 fan_in) for three layer shapes") {
  const ConvSpec shapes[] = {{"stem", 3, 10, 3, 1}, {"dw", 20, 20, 5, 20}, {"pw", 50, 40, 1, 1}};
  for (const ConvSpec& spec : shapes) {
    std::vector<double> all;
    for (std::uint64_t s = 0; all.size() < 100000; ++s) {
      for (float v : sample_conv_weights(spec, derive_seed(99, s))) all.push_back(v);
    }
    const double mean = std::accumulate(all.begin(), all.end(), 0.0) / all.size();
    double var = 0.0;
    for (double v : all) var += (v - mean) * (v - mean);
    var /= all.size();
    const double expected = 1.0 / (3.0 * spec.fan_in());
    CHECK(std::abs(var - expected) / expected < 0.05);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in()));
    CHECK(*std::max_element(all.begin(), all.end()) <= bound);
    CHECK(*std::min_element(all.begin(), all.end()) >= -bound);
  }
}

TEST_CASE("weight bank follows conv_layers and is seed deterministic") {
  const NetworkPlan plan = decode(random_genome(4), MacroConfig{});
  const WeightBank a = init_weights(plan, 17);
  const WeightBank b = init_weights(plan, 17);
  const WeightBank c = init_weights(plan, 18);
  CHECK(a.checksum() == b.checksum());
  CHECK(a.checksum() != c.checksum());
  const auto specs = conv_layers(plan);
  REQUIRE(a.size() == specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(a.spec(i).name == specs[i].name);
    CHECK(a.weights(i).size() == specs[i].weight_count());
    const auto expect = sample_conv_weights(specs[i], derive_seed(17, i));
    CHECK(std::equal(expect.begin(), expect.end(), a.weights(i).begin()));
  }
  CHECK(specs.front().name == "stem");
  CHECK(specs.front().fan_in() == 27);
}

TEST_CASE("identity with stride 1 returns its input exactly") {
  const Tensor x = random_tensor({2, 10, 6, 6}, 3);
  const OpPlan op{OpCode::kIdentity, 1, 1, 1};
  CHECK(apply_op(op, x, {}, 10) == x);
}

TEST_CASE("pooling on constant and known inputs") {
  const Tensor ones = filled({1, 4, 8, 8}, 1.0f);
  // max over a window that always contains at least one 1 (and padding 0)
  const Tensor mx = apply_op({OpCode::kMaxPool3x3, 3, 1, 1}, ones, {}, 4);
  for (float v : mx.data()) CHECK(v == 1.0f);

  const Tensor avg = apply_op({OpCode::kAvgPool3x3, 3, 1, 2}, ones, {}, 4);
  CHECK(avg.shape() == Shape4{1, 4, 4, 4});
  // window centered at (0,0) has 4 real cells, interior windows all 9
  CHECK(avg.at(0, 0, 0, 0) == doctest::Approx(4.0 / 9.0));
  CHECK(avg.at(0, 0, 0, 1) == doctest::Approx(6.0 / 9.0));
  CHECK(avg.at(0, 0, 1, 1) == doctest::Approx(1.0));

  const Tensor neg = filled({1, 1, 3, 3}, -2.0f);
  const Tensor mneg = apply_op({OpCode::kMaxPool3x3, 3, 1, 1}, neg, {}, 1);
  for (int i = 0; i < 9; ++i) {
    // border windows see a padded zero, the center window does not
    CHECK(mneg.data()[i] == (i == 4 ? -2.0f : 0.0f));
  }

  Tensor ramp({1, 1, 3, 3});
  for (int i = 0; i < 9; ++i) ramp.data()[i] = static_cast<float>(i + 1);
  const Tensor mr = apply_op({OpCode::kMaxPool3x3, 3, 1, 1}, ramp, {}, 1);
  CHECK(mr.at(0, 0, 0, 0) == 5.0f);
  CHECK(mr.at(0, 0, 1, 1) == 9.0f);
}

TEST_CASE("apply_op rejects channel and weight mismatches") {
  const Tensor x = random_tensor({1, 8, 4, 4}, 1);
  CHECK_THROWS_AS(apply_op({OpCode::kMaxPool3x3, 3, 1, 1}, x, {}, 10), ShapeMismatch);
  CHECK_THROWS_AS(apply_op({OpCode::kSepConv3x3, 3, 1, 1}, x, {}, 8), ShapeMismatch);
  std::vector<float> dw(8 * 9), pw(7 * 8);
  const std::vector<std::span<const float>> w{dw, pw};
  CHECK_THROWS_AS(apply_op({OpCode::kSepConv3x3, 3, 1, 1}, x, w, 8), ShapeMismatch);
  CHECK_THROWS_AS(Tensor(Shape4{0, 1, 1, 1}), ShapeMismatch);
}

TEST_CASE("convolution ops match a naive reference") {
  struct Case {
    OpCode op;
    int stride;
  };
  const Case cases[] = {{OpCode::kSepConv3x3, 1}, {OpCode::kSepConv5x5, 1},
                        {OpCode::kDilConv3x3, 1}, {OpCode::kDilConv5x5, 1},
                        {OpCode::kSepConv3x3, 2}, {OpCode::kDilConv5x5, 2}};
  const int c = 6;
  for (bool norm : {false, true}) {
    for (const Case& cs : cases) {
      const int k = op_kernel(cs.op);
      const int dil = op_dilation(cs.op);
      const Tensor x = random_tensor({3, c, 9, 9}, 7 + k);
      const auto dw = sample_conv_weights({"dw", c, c, k, c}, 1);
      const auto pw = sample_conv_weights({"pw", c, c, 1, 1}, 2);
      const std::vector<std::span<const float>> w{dw, pw};
      EngineOptions opts;
      opts.normalize = norm;
      const Tensor y = apply_op({cs.op, k, dil, cs.stride}, x, w, c, opts);

      int oh = 0, ow = 0;
      const auto mid = ref_depthwise(x, dw, k, cs.stride, dil, oh, ow);
      auto ref = ref_pointwise(mid, 3, c, c, oh * ow, pw);
      if (norm) ref_norm(ref, 3, c, oh * ow);
      REQUIRE(y.shape() == Shape4{3, c, oh, ow});
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("stride-2 identity is a factorized reduce with both offsets") {
  const int c = 4;
  const Tensor x = random_tensor({1, c, 5, 5}, 5);
  const auto wa = sample_conv_weights({"a", c, 2, 1, 1}, 1);
  const auto wb = sample_conv_weights({"b", c, 2, 1, 1}, 2);
  const std::vector<std::span<const float>> w{wa, wb};
  EngineOptions raw;
  raw.normalize = false;
  const Tensor y = apply_op({OpCode::kIdentity, 1, 1, 2}, x, w, c, raw);
  REQUIRE(y.shape() == Shape4{1, c, 3, 3});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int o = 0; o < 2; ++o) {
        double a = 0.0, b = 0.0;
        for (int ic = 0; ic < c; ++ic) {
          a += wa[o * c + ic] * std::max(0.0f, x.at(0, ic, 2 * i, 2 * j));
          if (2 * i + 1 < 5 && 2 * j + 1 < 5) {
            b += wb[o * c + ic] * std::max(0.0f, x.at(0, ic, 2 * i + 1, 2 * j + 1));
          }
        }
        CHECK(y.at(0, o, i, j) == doctest::Approx(a).epsilon(1e-5));
        CHECK(y.at(0, 2 + o, i, j) == doctest::Approx(b).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("zero batch gives zero features") {
  const NetworkPlan plan = decode(random_genome(8), MacroConfig{});
  const WeightBank w = init_weights(plan, 1);
  const Matrix f = forward_features(plan, w, Tensor({4, 3, 32, 32}), {});
  CHECK(f.rows == 4);
  CHECK(f.cols == plan.head.feature_dim);
  for (float v : f.values) CHECK(v == 0.0f);
}

TEST_CASE("forward is deterministic and rejects a wrong input shape") {
  const NetworkPlan plan = decode(random_genome(9), MacroConfig{});
  const WeightBank w = init_weights(plan, 2);
  const Tensor x = random_tensor({3, 3, 32, 32}, 4);
  CHECK(forward_features(plan, w, x) == forward_features(plan, w, x));
  CHECK_THROWS_AS(forward_features(plan, w, random_tensor({1, 3, 16, 16}, 1)), ShapeMismatch);
  const WeightBank other = init_weights(decode(random_genome(10), MacroConfig{}), 2);
  if (other.size() != w.size()) {
    CHECK_THROWS_AS(forward_features(plan, other, x), ShapeMismatch);
  }
}

TEST_CASE("without normalization each image is processed independently") {
  const NetworkPlan plan = decode(random_genome(12), MacroConfig{});
  const WeightBank w = init_weights(plan, 3);
  EngineOptions raw;
  raw.normalize = false;
  const Tensor x = random_tensor({4, 3, 32, 32}, 6);
  const Matrix f = forward_features(plan, w, x, raw);
  // reverse the batch
  Tensor rev(x.shape());
  const std::size_t per = 3 * 32 * 32;
  for (int n = 0; n < 4; ++n) {
    std::copy_n(x.data().begin() + n * per, per, rev.data().begin() + (3 - n) * per);
  }
  const Matrix fr = forward_features(plan, w, rev, raw);
  for (int n = 0; n < 4; ++n) {
    for (int c = 0; c < f.cols; ++c) CHECK(fr(3 - n, c) == f(n, c));
  }
}

TEST_CASE("observed shapes match the decoded plan over 100 genomes") {
  MacroConfig macro;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const NetworkPlan plan = decode(random_genome(s + 500), macro);
    const WeightBank w = init_weights(plan, s);
    std::map<std::string, Shape4> seen;
    forward_features(plan, w, random_tensor({1, 3, 32, 32}, s), {},
                     [&](std::string_view label, const Shape4& shape) { seen[std::string(label)] = shape; });
    CHECK(seen.at("stem") == Shape4{1, 10, 32, 32});
    for (const CellPlan& cell : plan.cells) {
      const Shape4 got = seen.at("cell" + std::to_string(cell.layer));
      CHECK(got == Shape4{1, cell.out_channels, cell.out_height, cell.out_width});
    }
    CHECK(seen.at("features") == Shape4{1, plan.head.feature_dim, 1, 1});
  }
}

TEST_CASE("linear_forward computes x W + b") {
  LinearClassifier clf{Matrix(2, 3), {0.5f, -1.0f, 0.0f}};
  clf.weight(0, 0) = 1.0f;
  clf.weight(0, 1) = 2.0f;
  clf.weight(1, 2) = 3.0f;
  Matrix x(2, 2);
  x(0, 0) = 1.0f;
  x(0, 1) = 1.0f;
  x(1, 1) = -2.0f;
  const Matrix y = linear_forward(x, clf);
  CHECK(y(0, 0) == 1.5f);
  CHECK(y(0, 1) == 1.0f);
  CHECK(y(0, 2) == 3.0f);
  CHECK(y(1, 0) == 0.5f);
  CHECK(y(1, 1) == -1.0f);
  CHECK(y(1, 2) == -6.0f);
  CHECK_THROWS_AS(linear_forward(Matrix(1, 3), clf), ShapeMismatch);
}
