#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwenas/search_space.hpp"

namespace rwenas {

// Multiply-add convention: one MAC is one FLOP.
//   conv        out_h * out_w * out_c * in_c * k_h * k_w
//   depthwise   out_h * out_w * c * k_h * k_w
//   pooling     out_h * out_w * c * k^2   (global pooling: c * h * w)
//   norm        2 * c * h * w
//   head        feature_dim * num_classes
// Identity, ReLU, node sums and concatenation are free.
struct LayerCost {
  std::string id;
  std::int64_t flops = 0;
  std::int64_t params = 0;
  Shape3 output;
};

struct ComplexityReport {
  std::int64_t flops = 0;
  std::int64_t params = 0;
  std::vector<LayerCost> per_layer;
};

// Re-traces spatial shapes from `input_shape` through the plan's topology, so a
// shape that cannot survive the reductions raises DegenerateResolution.
ComplexityReport count_flops(const NetworkPlan& plan, const Shape3& input_shape);
ComplexityReport count_flops(const NetworkPlan& plan);

// Weight elements of every convolution plus the affine head (weights + bias).
std::int64_t count_params(const NetworkPlan& plan);

}  // namespace rwenas
