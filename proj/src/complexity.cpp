#include "rwenas/complexity.hpp"

#include "rwenas/errors.hpp"

namespace rwenas {

namespace {

using i64 = std::int64_t;

int halve(int extent) { return (extent + 1) / 2; }

class Counter {
 public:
  void add(std::string id, i64 flops, i64 params, Shape3 output) {
    report_.flops += flops;
    report_.params += params;
    report_.per_layer.push_back({std::move(id), flops, params, output});
  }

  void conv(const std::string& id, int in_c, int out_c, int k, int oh, int ow) {
    add(id, i64{oh} * ow * out_c * in_c * k * k, i64{out_c} * in_c * k * k, {out_c, oh, ow});
  }

  void norm(const std::string& id, int c, int h, int w) { add(id, 2 * i64{c} * h * w, 0, {c, h, w}); }

  void factorized_reduce(const std::string& id, int in_c, int out_c, int oh, int ow) {
    conv(id + ".reduce_a", in_c, out_c / 2, 1, oh, ow);
    conv(id + ".reduce_b", in_c, out_c - out_c / 2, 1, oh, ow);
    norm(id + ".norm", out_c, oh, ow);
  }

  ComplexityReport take() { return std::move(report_); }

 private:
  ComplexityReport report_;
};

}  // namespace

ComplexityReport count_flops(const NetworkPlan& plan, const Shape3& input_shape) {
  Counter counter;
  const int h0 = input_shape.height;
  const int w0 = input_shape.width;
  const int stem_c = plan.stem.out_channels;
  counter.conv("stem.conv", input_shape.channels, stem_c, plan.stem.kernel, h0, w0);
  counter.norm("stem.norm", stem_c, h0, w0);

  Shape3 prev_prev{stem_c, h0, w0};
  Shape3 prev = prev_prev;
  for (const CellPlan& cell : plan.cells) {
    const std::string name = "cell" + std::to_string(cell.layer);
    const int width = cell.node_width;
    const bool reduction = cell.kind == CellKind::kReduction;
    const int in_h = prev.height;
    const int in_w = prev.width;

    if (cell.pre0.kind == PreprocessKind::kFactorizedReduce) {
      counter.factorized_reduce(name + ".pre0", prev_prev.channels, width, halve(prev_prev.height),
                                halve(prev_prev.width));
    } else {
      counter.conv(name + ".pre0.conv", prev_prev.channels, width, 1, prev_prev.height,
                   prev_prev.width);
      counter.norm(name + ".pre0.norm", width, prev_prev.height, prev_prev.width);
    }
    counter.conv(name + ".pre1.conv", prev.channels, width, 1, in_h, in_w);
    counter.norm(name + ".pre1.norm", width, in_h, in_w);

    if (reduction && (in_h < 2 || in_w < 2)) {
      throw DegenerateResolution("reduction at layer " + std::to_string(cell.layer) +
                                 " receives " + std::to_string(in_h) + "x" + std::to_string(in_w));
    }
    const int out_h = reduction ? halve(in_h) : in_h;
    const int out_w = reduction ? halve(in_w) : in_w;

    for (int k = 0; k < kNodesPerCell; ++k) {
      const NodePlan& node = cell.nodes[k];
      const std::string node_name = name + ".node" + std::to_string(k + kFirstNode);
      for (const auto& [op, suffix] : {std::pair{node.op_a, ".a"}, std::pair{node.op_b, ".b"}}) {
        const std::string id = node_name + suffix;
        switch (op.op) {
          case OpCode::kIdentity:
            if (op.stride == 2) counter.factorized_reduce(id, width, width, out_h, out_w);
            break;
          case OpCode::kAvgPool3x3:
          case OpCode::kMaxPool3x3:
            counter.add(id + ".pool", i64{out_h} * out_w * width * 9, 0, {width, out_h, out_w});
            break;
          default:
            counter.add(id + ".dw", i64{out_h} * out_w * width * op.kernel * op.kernel,
                        i64{width} * op.kernel * op.kernel, {width, out_h, out_w});
            counter.conv(id + ".pw", width, width, 1, out_h, out_w);
            counter.norm(id + ".norm", width, out_h, out_w);
            break;
        }
      }
    }
    prev_prev = prev;
    prev = {static_cast<int>(cell.concat_nodes.size()) * width, out_h, out_w};
  }

  counter.add("head.pool", i64{prev.channels} * prev.height * prev.width, 0, {prev.channels, 1, 1});
  const int classes = plan.head.num_classes;
  counter.add("head.linear", i64{prev.channels} * classes, i64{prev.channels} * classes + classes,
              {classes, 1, 1});
  return counter.take();
}

ComplexityReport count_flops(const NetworkPlan& plan) {
  return count_flops(plan, plan.macro.input_shape);
}

std::int64_t count_params(const NetworkPlan& plan) { return count_flops(plan).params; }

}  // namespace rwenas
