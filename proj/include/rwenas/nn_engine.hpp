#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rwenas/search_space.hpp"
#include "rwenas/tensor.hpp"

namespace rwenas {

inline constexpr float kNormEpsilon = 1e-5f;

// One convolution weight tensor of the plan, shaped
// (out_channels, in_channels / groups, kernel, kernel).
struct ConvSpec {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int groups = 1;

  int fan_in() const { return (in_channels / groups) * kernel * kernel; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * (in_channels / groups) * kernel * kernel;
  }
};

// Every convolution of the plan in execution order: stem, then per cell the
// two preprocessors followed by the node operations (op_a before op_b).
std::vector<ConvSpec> conv_layers(const NetworkPlan& plan);

// Frozen random backbone weights. Only init_weights creates one; nothing
// mutates it afterwards.
class WeightBank {
 public:
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return weights_.size(); }
  const ConvSpec& spec(std::size_t i) const { return specs_[i]; }
  std::span<const float> weights(std::size_t i) const { return weights_[i]; }
  std::size_t total_weights() const;
  // FNV-1a over the raw bytes of every tensor.
  std::uint64_t checksum() const;

 private:
  friend WeightBank init_weights(const NetworkPlan&, std::uint64_t);
  std::uint64_t seed_ = 0;
  std::vector<ConvSpec> specs_;
  std::vector<std::vector<float>> weights_;
};

// Each weight i.i.d. uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
std::vector<float> sample_conv_weights(const ConvSpec& spec, std::uint64_t seed);

// Layer i is sample_conv_weights(conv_layers(plan)[i], derive_seed(seed, i)).
WeightBank init_weights(const NetworkPlan& plan, std::uint64_t seed);

struct EngineOptions {
  // Batch-statistics normalization after convolutions. Disabling it makes
  // every image's features independent of its batch mates.
  bool normalize = true;
};

// Applies one candidate operation. `weights` holds the op's tensors in
// conv_layers order: depthwise then pointwise for the convolutions, the two
// halves of the factorized reduce for a stride-2 identity, nothing otherwise.
Tensor apply_op(const OpPlan& op, const Tensor& x, std::span<const std::span<const float>> weights,
                int node_width, const EngineOptions& options = {});

// Called with a layer label and the shape it produced.
using ForwardObserver = std::function<void(std::string_view, const Shape4&)>;

// Stem -> cells -> global average pooling. Returns (batch x feature_dim).
Matrix forward_features(const NetworkPlan& plan, const WeightBank& weights, const Tensor& batch,
                        const EngineOptions& options = {}, const ForwardObserver& observer = {});

struct LinearClassifier {
  Matrix weight;  // feature_dim x num_classes
  std::vector<float> bias;

  int feature_dim() const { return weight.rows; }
  int num_classes() const { return weight.cols; }
};

Matrix linear_forward(const Matrix& features, const LinearClassifier& classifier);

}  // namespace rwenas
