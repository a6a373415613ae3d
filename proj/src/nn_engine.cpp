#include "rwenas/nn_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "rwenas/random.hpp"

namespace rwenas {

namespace {

bool is_conv(OpCode op) {
  return op != OpCode::kIdentity && op != OpCode::kAvgPool3x3 && op != OpCode::kMaxPool3x3;
}

void push_op_specs(std::vector<ConvSpec>& out, const std::string& prefix, const OpPlan& op,
                   int width) {
  if (is_conv(op.op)) {
    out.push_back({prefix + ".dw", width, width, op.kernel, width});
    out.push_back({prefix + ".pw", width, width, 1, 1});
  } else if (op.op == OpCode::kIdentity && op.stride == 2) {
    out.push_back({prefix + ".reduce_a", width, width / 2, 1, 1});
    out.push_back({prefix + ".reduce_b", width, width - width / 2, 1, 1});
  }
}

void push_preprocess_specs(std::vector<ConvSpec>& out, const std::string& prefix,
                           const PreprocessPlan& pre) {
  if (pre.kind == PreprocessKind::kFactorizedReduce) {
    out.push_back({prefix + ".reduce_a", pre.input.channels, pre.out_channels / 2, 1, 1});
    out.push_back(
        {prefix + ".reduce_b", pre.input.channels, pre.out_channels - pre.out_channels / 2, 1, 1});
  } else {
    out.push_back({prefix, pre.input.channels, pre.out_channels, 1, 1});
  }
}

// Output extent of a same-padded window op.
int out_extent(int in, int stride) { return (in - 1) / stride + 1; }

// out += kernel (*) in over one plane, zero padding `pad`, arbitrary stride and
// dilation. Loop bounds are clipped per tap so the inner loop has no branches.
void conv_plane_accumulate(const float* in, int h, int w, float* out, int oh, int ow,
                           const float* kernel, int k, int stride, int dilation, int pad) {
  for (int kh = 0; kh < k; ++kh) {
    const int row_shift = kh * dilation - pad;
    const int oy_lo = row_shift >= 0 ? 0 : (-row_shift + stride - 1) / stride;
    const int row_last = h - 1 - row_shift;
    if (row_last < 0) continue;
    const int oy_hi = std::min(oh - 1, row_last / stride);
    for (int kw = 0; kw < k; ++kw) {
      const float v = kernel[kh * k + kw];
      const int col_shift = kw * dilation - pad;
      const int ox_lo = col_shift >= 0 ? 0 : (-col_shift + stride - 1) / stride;
      const int col_last = w - 1 - col_shift;
      if (col_last < 0) continue;
      const int ox_hi = std::min(ow - 1, col_last / stride);
      for (int oy = oy_lo; oy <= oy_hi; ++oy) {
        const float* irow = in + static_cast<std::ptrdiff_t>(oy * stride + row_shift) * w;
        float* orow = out + static_cast<std::ptrdiff_t>(oy) * ow;
        if (stride == 1) {
          const float* src = irow + col_shift;
          for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += v * src[ox];
        } else {
          for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += v * irow[ox * stride + col_shift];
        }
      }
    }
  }
}

void relu_inplace(Tensor& x) {
  for (float& v : x.data()) v = v > 0.0f ? v : 0.0f;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  relu_inplace(y);
  return y;
}

// Per-channel normalization with batch statistics, unit scale and zero shift.
void batch_norm_inplace(Tensor& x) {
  const Shape4 s = x.shape();
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.batch) * static_cast<double>(plane);
  for (int c = 0; c < s.channels; ++c) {
    double sum = 0.0;
    for (int n = 0; n < s.batch; ++n) {
      const float* p = x.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (int n = 0; n < s.batch; ++n) {
      const float* p = x.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = p[i] - mean;
        sq += d * d;
      }
    }
    const float mean_f = static_cast<float>(mean);
    const float inv = static_cast<float>(1.0 / std::sqrt(sq / count + kNormEpsilon));
    for (int n = 0; n < s.batch; ++n) {
      float* p = x.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        // identical inputs reproduce the mean exactly, so constant channels map to 0
        p[i] = (p[i] - mean_f) * inv;
      }
    }
  }
}

void maybe_norm(Tensor& x, const EngineOptions& options) {
  if (options.normalize) batch_norm_inplace(x);
}

Tensor pointwise(const Tensor& x, std::span<const float> w, int out_channels) {
  const Shape4 s = x.shape();
  if (w.size() != static_cast<std::size_t>(out_channels) * s.channels) {
    throw ShapeMismatch("pointwise weight count " + std::to_string(w.size()) +
                        " does not match " + std::to_string(out_channels) + "x" +
                        std::to_string(s.channels));
  }
  Tensor y({s.batch, out_channels, s.height, s.width});
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.batch; ++n) {
    for (int oc = 0; oc < out_channels; ++oc) {
      float* out = y.plane(n, oc);
      for (int ic = 0; ic < s.channels; ++ic) {
        const float v = w[static_cast<std::size_t>(oc) * s.channels + ic];
        const float* in = x.plane(n, ic);
        for (std::size_t i = 0; i < plane; ++i) out[i] += v * in[i];
      }
    }
  }
  return y;
}

// Samples x at (2i + offset, 2j + offset), zero outside the input.
Tensor subsample2(const Tensor& x, int offset) {
  const Shape4 s = x.shape();
  const int oh = out_extent(s.height, 2);
  const int ow = out_extent(s.width, 2);
  Tensor y({s.batch, s.channels, oh, ow});
  for (int n = 0; n < s.batch; ++n) {
    for (int c = 0; c < s.channels; ++c) {
      const float* in = x.plane(n, c);
      float* out = y.plane(n, c);
      for (int i = 0; i < oh; ++i) {
        const int r = 2 * i + offset;
        if (r >= s.height) continue;
        for (int j = 0; j < ow; ++j) {
          const int col = 2 * j + offset;
          if (col < s.width) out[i * ow + j] = in[r * s.width + col];
        }
      }
    }
  }
  return y;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
  const Shape4 first = parts.front()->shape();
  int channels = 0;
  for (const Tensor* t : parts) {
    const Shape4 s = t->shape();
    if (s.batch != first.batch || s.height != first.height || s.width != first.width) {
      throw ShapeMismatch("concat of " + first.str() + " and " + s.str());
    }
    channels += s.channels;
  }
  Tensor y({first.batch, channels, first.height, first.width});
  const std::size_t plane = first.plane();
  for (int n = 0; n < first.batch; ++n) {
    int c0 = 0;
    for (const Tensor* t : parts) {
      const int ct = t->shape().channels;
      std::memcpy(y.plane(n, c0), t->plane(n, 0), sizeof(float) * plane * ct);
      c0 += ct;
    }
  }
  return y;
}

// ReLU -> two offset stride-2 1x1 convs -> concat -> norm.
Tensor factorized_reduce(const Tensor& x, std::span<const float> wa, std::span<const float> wb,
                         int out_channels, const EngineOptions& options) {
  const Tensor r = relu(x);
  const int ca = out_channels / 2;
  const Tensor a = pointwise(subsample2(r, 0), wa, ca);
  const Tensor b = pointwise(subsample2(r, 1), wb, out_channels - ca);
  Tensor y = concat_channels({&a, &b});
  maybe_norm(y, options);
  return y;
}

Tensor depthwise(const Tensor& x, std::span<const float> w, int k, int stride, int dilation) {
  const Shape4 s = x.shape();
  if (w.size() != static_cast<std::size_t>(s.channels) * k * k) {
    throw ShapeMismatch("depthwise weight count " + std::to_string(w.size()) + " for " +
                        std::to_string(s.channels) + " channels");
  }
  const int oh = out_extent(s.height, stride);
  const int ow = out_extent(s.width, stride);
  const int pad = dilation * (k - 1) / 2;
  Tensor y({s.batch, s.channels, oh, ow});
  for (int n = 0; n < s.batch; ++n) {
    for (int c = 0; c < s.channels; ++c) {
      conv_plane_accumulate(x.plane(n, c), s.height, s.width, y.plane(n, c), oh, ow,
                            w.data() + static_cast<std::size_t>(c) * k * k, k, stride, dilation,
                            pad);
    }
  }
  return y;
}

Tensor pool3x3(const Tensor& x, int stride, bool average) {
  const Shape4 s = x.shape();
  const int oh = out_extent(s.height, stride);
  const int ow = out_extent(s.width, stride);
  Tensor y({s.batch, s.channels, oh, ow});
  for (int n = 0; n < s.batch; ++n) {
    for (int c = 0; c < s.channels; ++c) {
      const float* in = x.plane(n, c);
      float* out = y.plane(n, c);
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          float acc = average ? 0.0f : -std::numeric_limits<float>::infinity();
          for (int di = -1; di <= 1; ++di) {
            const int r = i * stride + di;
            for (int dj = -1; dj <= 1; ++dj) {
              const int col = j * stride + dj;
              // zero padding takes part in both the max and the average
              const float v =
                  (r >= 0 && r < s.height && col >= 0 && col < s.width) ? in[r * s.width + col] : 0.0f;
              acc = average ? acc + v : std::max(acc, v);
            }
          }
          out[i * ow + j] = average ? acc / 9.0f : acc;
        }
      }
    }
  }
  return y;
}

void add_inplace(Tensor& acc, const Tensor& x) {
  if (acc.shape() != x.shape()) {
    throw ShapeMismatch("node sum of " + acc.shape().str() + " and " + x.shape().str());
  }
  auto a = acc.data();
  auto b = x.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

std::size_t op_weight_count(const OpPlan& op) {
  if (is_conv(op.op)) return 2;
  if (op.op == OpCode::kIdentity && op.stride == 2) return 2;
  return 0;
}

struct Cursor {
  const WeightBank& bank;
  std::size_t next = 0;

  std::span<const float> take() {
    if (next >= bank.size()) throw ShapeMismatch("weight bank exhausted");
    return bank.weights(next++);
  }
};

Tensor preprocess(const PreprocessPlan& pre, const Tensor& x, Cursor& cursor,
                  const EngineOptions& options) {
  if (x.shape().channels != pre.input.channels) {
    throw ShapeMismatch("preprocess expects " + std::to_string(pre.input.channels) +
                        " channels, got " + x.shape().str());
  }
  if (pre.kind == PreprocessKind::kFactorizedReduce) {
    const auto wa = cursor.take();
    const auto wb = cursor.take();
    return factorized_reduce(x, wa, wb, pre.out_channels, options);
  }
  Tensor y = pointwise(relu(x), cursor.take(), pre.out_channels);
  maybe_norm(y, options);
  return y;
}

}  // namespace

std::vector<ConvSpec> conv_layers(const NetworkPlan& plan) {
  std::vector<ConvSpec> out;
  out.push_back({"stem", plan.stem.input.channels, plan.stem.out_channels, plan.stem.kernel, 1});
  for (const CellPlan& cell : plan.cells) {
    const std::string cell_name = "cell" + std::to_string(cell.layer);
    push_preprocess_specs(out, cell_name + ".pre0", cell.pre0);
    push_preprocess_specs(out, cell_name + ".pre1", cell.pre1);
    for (int k = 0; k < kNodesPerCell; ++k) {
      const std::string node_name = cell_name + ".node" + std::to_string(k + kFirstNode);
      push_op_specs(out, node_name + ".a", cell.nodes[k].op_a, cell.node_width);
      push_op_specs(out, node_name + ".b", cell.nodes[k].op_b, cell.node_width);
    }
  }
  return out;
}

std::size_t WeightBank::total_weights() const {
  std::size_t n = 0;
  for (const auto& w : weights_) n += w.size();
  return n;
}

std::uint64_t WeightBank::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& w : weights_) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(w.data());
    for (std::size_t i = 0; i < w.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::vector<float> sample_conv_weights(const ConvSpec& spec, std::uint64_t seed) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in()));
  Rng rng(seed);
  std::vector<float> w(spec.weight_count());
  for (float& v : w) v = static_cast<float>(rng.uniform(-bound, bound));
  return w;
}

WeightBank init_weights(const NetworkPlan& plan, std::uint64_t seed) {
  WeightBank bank;
  bank.seed_ = seed;
  bank.specs_ = conv_layers(plan);
  bank.weights_.reserve(bank.specs_.size());
  for (std::size_t i = 0; i < bank.specs_.size(); ++i) {
    bank.weights_.push_back(sample_conv_weights(bank.specs_[i], derive_seed(seed, i)));
  }
  return bank;
}

Tensor apply_op(const OpPlan& op, const Tensor& x, std::span<const std::span<const float>> weights,
                int node_width, const EngineOptions& options) {
  if (x.shape().channels != node_width) {
    throw ShapeMismatch(std::string(op_name(op.op)) + " expects " + std::to_string(node_width) +
                        " channels, got " + x.shape().str());
  }
  if (op.stride != 1 && op.stride != 2) throw ShapeMismatch("stride must be 1 or 2");
  if (weights.size() != op_weight_count(op)) {
    throw ShapeMismatch(std::string(op_name(op.op)) + " takes " +
                        std::to_string(op_weight_count(op)) + " weight tensors, got " +
                        std::to_string(weights.size()));
  }
  switch (op.op) {
    case OpCode::kIdentity:
      if (op.stride == 1) return x;
      return factorized_reduce(x, weights[0], weights[1], node_width, options);
    case OpCode::kAvgPool3x3:
      return pool3x3(x, op.stride, true);
    case OpCode::kMaxPool3x3:
      return pool3x3(x, op.stride, false);
    default: {
      Tensor y = pointwise(depthwise(relu(x), weights[0], op.kernel, op.stride, op.dilation),
                           weights[1], node_width);
      maybe_norm(y, options);
      return y;
    }
  }
}

Matrix forward_features(const NetworkPlan& plan, const WeightBank& weights, const Tensor& batch,
                        const EngineOptions& options, const ForwardObserver& observer) {
  const Shape4 in = batch.shape();
  const Shape3& expect = plan.macro.input_shape;
  if (in.channels != expect.channels || in.height != expect.height || in.width != expect.width) {
    throw ShapeMismatch("batch " + in.str() + " does not match input shape (" +
                        std::to_string(expect.channels) + ", " + std::to_string(expect.height) +
                        ", " + std::to_string(expect.width) + ")");
  }
  auto notify = [&](std::string_view label, const Tensor& t) {
    if (observer) observer(label, t.shape());
  };

  Cursor cursor{weights};
  const auto stem_w = cursor.take();
  Tensor stem({in.batch, plan.stem.out_channels, in.height, in.width});
  const int k = plan.stem.kernel;
  for (int n = 0; n < in.batch; ++n) {
    for (int oc = 0; oc < plan.stem.out_channels; ++oc) {
      for (int ic = 0; ic < in.channels; ++ic) {
        conv_plane_accumulate(batch.plane(n, ic), in.height, in.width, stem.plane(n, oc),
                              in.height, in.width,
                              stem_w.data() + (static_cast<std::size_t>(oc) * in.channels + ic) * k * k,
                              k, 1, 1, k / 2);
      }
    }
  }
  maybe_norm(stem, options);
  notify("stem", stem);

  Tensor s0 = stem;
  Tensor s1 = std::move(stem);
  for (const CellPlan& cell : plan.cells) {
    std::vector<Tensor> nodes;
    nodes.reserve(kFirstNode + kNodesPerCell);
    nodes.push_back(preprocess(cell.pre0, s0, cursor, options));
    nodes.push_back(preprocess(cell.pre1, s1, cursor, options));
    for (const NodePlan& node : cell.nodes) {
      auto run = [&](const OpPlan& op, int input) {
        std::vector<std::span<const float>> w;
        for (std::size_t i = 0; i < op_weight_count(op); ++i) w.push_back(cursor.take());
        return apply_op(op, nodes[input], w, cell.node_width, options);
      };
      Tensor sum = run(node.op_a, node.input_a);
      add_inplace(sum, run(node.op_b, node.input_b));
      nodes.push_back(std::move(sum));
    }
    std::vector<const Tensor*> parts;
    for (int j : cell.concat_nodes) parts.push_back(&nodes[j]);
    Tensor out = concat_channels(parts);
    notify("cell" + std::to_string(cell.layer), out);
    s0 = std::move(s1);
    s1 = std::move(out);
  }
  if (cursor.next != weights.size()) throw ShapeMismatch("weight bank does not match plan");

  const Shape4 fs = s1.shape();
  Matrix features(fs.batch, fs.channels);
  const std::size_t plane = fs.plane();
  for (int n = 0; n < fs.batch; ++n) {
    for (int c = 0; c < fs.channels; ++c) {
      const float* p = s1.plane(n, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      features(n, c) = static_cast<float>(sum / static_cast<double>(plane));
    }
  }
  if (observer) observer("features", {fs.batch, fs.channels, 1, 1});
  return features;
}

Matrix linear_forward(const Matrix& features, const LinearClassifier& classifier) {
  if (features.cols != classifier.feature_dim() ||
      classifier.bias.size() != static_cast<std::size_t>(classifier.num_classes())) {
    throw ShapeMismatch("features have " + std::to_string(features.cols) +
                        " columns, classifier expects " + std::to_string(classifier.feature_dim()));
  }
  const int classes = classifier.num_classes();
  Matrix logits(features.rows, classes);
  for (int r = 0; r < features.rows; ++r) {
    float* out = logits.row(r).data();
    for (int c = 0; c < classes; ++c) out[c] = classifier.bias[c];
    const auto f = features.row(r);
    for (int d = 0; d < features.cols; ++d) {
      const float v = f[d];
      const float* w = classifier.weight.row(d).data();
      for (int c = 0; c < classes; ++c) out[c] += v * w[c];
    }
  }
  return logits;
}

}  // namespace rwenas
