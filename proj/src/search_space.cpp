#include "rwenas/search_space.hpp"

#include <sstream>

#include "rwenas/errors.hpp"
#include "rwenas/random.hpp"

namespace rwenas {

const char* op_name(OpCode op) {
  switch (op) {
    case OpCode::kIdentity: return "identity";
    case OpCode::kSepConv3x3: return "sep_conv_3x3";
    case OpCode::kSepConv5x5: return "sep_conv_5x5";
    case OpCode::kDilConv3x3: return "dil_conv_3x3";
    case OpCode::kDilConv5x5: return "dil_conv_5x5";
    case OpCode::kAvgPool3x3: return "avg_pool_3x3";
    case OpCode::kMaxPool3x3: return "max_pool_3x3";
  }
  return "?";
}

int op_kernel(OpCode op) {
  switch (op) {
    case OpCode::kIdentity: return 1;
    case OpCode::kSepConv5x5:
    case OpCode::kDilConv5x5: return 5;
    default: return 3;
  }
}

int op_dilation(OpCode op) {
  return (op == OpCode::kDilConv3x3 || op == OpCode::kDilConv5x5) ? 2 : 1;
}

int gene_upper_bound(int position) {
  const int in_cell = position % kGenesPerCell;
  const int node = kFirstNode + in_cell / kGenesPerNode;
  const bool is_input = (in_cell % kGenesPerNode) % 2 == 0;
  return is_input ? node - 1 : kNumOps - 1;
}

GenomeVector flatten(const Genome& genome) {
  GenomeVector out{};
  std::size_t k = 0;
  for (const CellGenome* cell : {&genome.normal, &genome.reduction}) {
    for (const NodeGene& n : cell->nodes) {
      out[k++] = n.input_a;
      out[k++] = static_cast<int>(n.op_a);
      out[k++] = n.input_b;
      out[k++] = static_cast<int>(n.op_b);
    }
  }
  return out;
}

namespace {

template <typename Int>
Genome parse_impl(std::span<const Int> genes) {
  if (genes.size() != static_cast<std::size_t>(kGenomeLength)) {
    throw InvalidLength(kGenomeLength, genes.size());
  }
  for (int p = 0; p < kGenomeLength; ++p) {
    const long long v = static_cast<long long>(genes[p]);
    const int bound = gene_upper_bound(p);
    if (v < 0 || v > bound) throw OutOfBounds(p, v, bound);
  }
  Genome g;
  std::size_t k = 0;
  for (CellGenome* cell : {&g.normal, &g.reduction}) {
    for (NodeGene& n : cell->nodes) {
      n.input_a = static_cast<int>(genes[k++]);
      n.op_a = static_cast<OpCode>(genes[k++]);
      n.input_b = static_cast<int>(genes[k++]);
      n.op_b = static_cast<OpCode>(genes[k++]);
    }
  }
  return g;
}

}  // namespace

Genome parse(std::span<const int> genes) { return parse_impl(genes); }
Genome parse(std::span<const long long> genes) { return parse_impl(genes); }

Genome random_genome(std::uint64_t seed) {
  Rng rng(seed);
  GenomeVector v{};
  for (int p = 0; p < kGenomeLength; ++p) v[p] = rng.between(0, gene_upper_bound(p));
  return parse(v);
}

Genome parse_genome_text(const std::string& text) {
  std::istringstream in(text);
  std::vector<long long> genes;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw ConfigError("non-integer genome token '" + token + "'");
    genes.push_back(v);
  }
  return parse(std::span<const long long>(genes));
}

std::string genome_to_text(const Genome& genome) {
  std::string out;
  for (int v : flatten(genome)) {
    if (!out.empty()) out += ' ';
    out += std::to_string(v);
  }
  return out;
}

std::uint64_t genome_hash(const Genome& genome) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int v : flatten(genome)) {
    h ^= static_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

void validate(const MacroConfig& macro) {
  if (macro.num_layers < 1) throw ConfigError("num_layers must be positive");
  if (macro.init_channels < 1) throw ConfigError("init_channels must be positive");
  if (macro.num_classes < 1) throw ConfigError("num_classes must be positive");
  const Shape3& in = macro.input_shape;
  if (in.channels < 1 || in.height < 1 || in.width < 1) {
    throw ConfigError("input shape dimensions must be positive");
  }
  for (int r : macro.reduction_positions) {
    if (r < 1 || r > macro.num_layers) {
      throw ConfigError("reduction position " + std::to_string(r) + " outside [1, " +
                        std::to_string(macro.num_layers) + "]");
    }
  }
}

std::vector<int> unused_nodes(const CellGenome& cell) {
  std::array<bool, kFirstNode + kNodesPerCell> used{};
  for (const NodeGene& n : cell.nodes) {
    used[n.input_a] = true;
    used[n.input_b] = true;
  }
  std::vector<int> out;
  for (int j = kFirstNode; j < kFirstNode + kNodesPerCell; ++j) {
    if (!used[j]) out.push_back(j);
  }
  return out;
}

NetworkPlan decode(const Genome& genome, const MacroConfig& macro) {
  validate(macro);
  NetworkPlan plan;
  plan.macro = macro;
  plan.stem.input = macro.input_shape;
  plan.stem.out_channels = macro.init_channels;

  const Shape3 stem_out{macro.init_channels, macro.input_shape.height, macro.input_shape.width};
  Shape3 prev_prev = stem_out;
  Shape3 prev = stem_out;
  bool prev_reduction = false;
  int width = macro.init_channels;

  for (int layer = 1; layer <= macro.num_layers; ++layer) {
    const bool reduction = macro.reduction_positions.contains(layer);
    const CellGenome& genes = reduction ? genome.reduction : genome.normal;

    CellPlan cell;
    cell.layer = layer;
    cell.kind = reduction ? CellKind::kReduction : CellKind::kNormal;
    if (reduction) width *= 2;
    cell.node_width = width;
    cell.pre0 = {prev_reduction ? PreprocessKind::kFactorizedReduce : PreprocessKind::kReluConvNorm,
                 prev_prev, width};
    cell.pre1 = {PreprocessKind::kReluConvNorm, prev, width};
    cell.in_height = prev.height;
    cell.in_width = prev.width;
    if (reduction) {
      if (prev.height < 2 || prev.width < 2) {
        throw DegenerateResolution("reduction at layer " + std::to_string(layer) + " receives " +
                                   std::to_string(prev.height) + "x" + std::to_string(prev.width));
      }
      cell.out_height = (prev.height + 1) / 2;
      cell.out_width = (prev.width + 1) / 2;
    } else {
      cell.out_height = prev.height;
      cell.out_width = prev.width;
    }

    for (int k = 0; k < kNodesPerCell; ++k) {
      const NodeGene& g = genes.nodes[k];
      auto make_op = [&](OpCode op, int input) {
        return OpPlan{op, op_kernel(op), op_dilation(op), (reduction && input < kFirstNode) ? 2 : 1};
      };
      cell.nodes[k] = {g.input_a, make_op(g.op_a, g.input_a), g.input_b, make_op(g.op_b, g.input_b)};
    }
    cell.concat_nodes = unused_nodes(genes);
    cell.out_channels = static_cast<int>(cell.concat_nodes.size()) * width;

    prev_prev = prev;
    prev = cell.output();
    prev_reduction = reduction;
    plan.cells.push_back(std::move(cell));
  }

  plan.head = {prev.channels, macro.num_classes};
  return plan;
}

}  // namespace rwenas
