#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace rwenas {

inline constexpr int kNodesPerCell = 5;
inline constexpr int kFirstNode = 2;  // nodes 0 and 1 are the cell inputs
inline constexpr int kGenesPerNode = 4;
inline constexpr int kGenesPerCell = kNodesPerCell * kGenesPerNode;
inline constexpr int kGenomeLength = 2 * kGenesPerCell;
inline constexpr int kNumOps = 7;

enum class OpCode : std::uint8_t {
  kIdentity = 0,
  kSepConv3x3 = 1,
  kSepConv5x5 = 2,
  kDilConv3x3 = 3,
  kDilConv5x5 = 4,
  kAvgPool3x3 = 5,
  kMaxPool3x3 = 6,
};

const char* op_name(OpCode op);
int op_kernel(OpCode op);    // 1 for identity
int op_dilation(OpCode op);  // 2 for the dilated convolutions, else 1

struct NodeGene {
  int input_a = 0;
  OpCode op_a = OpCode::kIdentity;
  int input_b = 0;
  OpCode op_b = OpCode::kIdentity;

  friend bool operator==(const NodeGene&, const NodeGene&) = default;
};

struct CellGenome {
  std::array<NodeGene, kNodesPerCell> nodes{};

  friend bool operator==(const CellGenome&, const CellGenome&) = default;
};

struct Genome {
  CellGenome normal;
  CellGenome reduction;

  friend bool operator==(const Genome&, const Genome&) = default;
};

using GenomeVector = std::array<int, kGenomeLength>;

// Inclusive upper bound of the gene at `position` in the flattened vector.
// Input genes of node i range over [0, i-1]; op genes over [0, 6]. Bounds
// depend only on the position, so aligned recombination preserves validity.
int gene_upper_bound(int position);

GenomeVector flatten(const Genome& genome);

// Throws InvalidLength or OutOfBounds.
Genome parse(std::span<const int> genes);
Genome parse(std::span<const long long> genes);

// Each gene uniform over its positional bound.
Genome random_genome(std::uint64_t seed);

// Reads whitespace-separated decimal integers. Throws InvalidLength /
// OutOfBounds, or ConfigError on a non-numeric token.
Genome parse_genome_text(const std::string& text);
std::string genome_to_text(const Genome& genome);

// Order-sensitive 64-bit content hash.
std::uint64_t genome_hash(const Genome& genome);

struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct MacroConfig {
  int num_layers = 5;
  int init_channels = 10;
  std::set<int> reduction_positions{2, 4};  // 1-based layer indices
  int num_classes = 10;
  Shape3 input_shape{3, 32, 32};

  friend bool operator==(const MacroConfig&, const MacroConfig&) = default;
};

// Throws ConfigError when fields are out of range.
void validate(const MacroConfig& macro);

enum class CellKind { kNormal, kReduction };

struct OpPlan {
  OpCode op = OpCode::kIdentity;
  int kernel = 1;
  int dilation = 1;
  int stride = 1;

  friend bool operator==(const OpPlan&, const OpPlan&) = default;
};

struct NodePlan {
  int input_a = 0;
  OpPlan op_a;
  int input_b = 0;
  OpPlan op_b;

  friend bool operator==(const NodePlan&, const NodePlan&) = default;
};

// Channel-aligning preprocessing of a cell input: ReLU -> 1x1 conv -> norm,
// or the stride-2 factorized reduce when the input sits one reduction behind.
enum class PreprocessKind { kReluConvNorm, kFactorizedReduce };

struct PreprocessPlan {
  PreprocessKind kind = PreprocessKind::kReluConvNorm;
  Shape3 input;
  int out_channels = 0;

  friend bool operator==(const PreprocessPlan&, const PreprocessPlan&) = default;
};

struct CellPlan {
  int layer = 1;  // 1-based
  CellKind kind = CellKind::kNormal;
  int node_width = 0;
  PreprocessPlan pre0;  // node 0: output of the cell two back (or the stem)
  PreprocessPlan pre1;  // node 1: output of the previous cell (or the stem)
  int in_height = 0;    // resolution of the preprocessed inputs
  int in_width = 0;
  int out_height = 0;
  int out_width = 0;
  std::array<NodePlan, kNodesPerCell> nodes{};
  std::vector<int> concat_nodes;  // unused nodes, ascending
  int out_channels = 0;

  Shape3 output() const { return {out_channels, out_height, out_width}; }

  friend bool operator==(const CellPlan&, const CellPlan&) = default;
};

struct StemPlan {
  Shape3 input;
  int out_channels = 0;
  int kernel = 3;

  friend bool operator==(const StemPlan&, const StemPlan&) = default;
};

struct HeadPlan {
  int feature_dim = 0;
  int num_classes = 0;

  friend bool operator==(const HeadPlan&, const HeadPlan&) = default;
};

struct NetworkPlan {
  MacroConfig macro;
  StemPlan stem;
  std::vector<CellPlan> cells;
  HeadPlan head;

  friend bool operator==(const NetworkPlan&, const NetworkPlan&) = default;
};

// Nodes of `cell` (indices 2..6) that no later node of the same cell selects.
std::vector<int> unused_nodes(const CellGenome& cell);

// Throws DegenerateResolution when a reduction would shrink below 1x1, and
// ConfigError on an invalid macro config.
NetworkPlan decode(const Genome& genome, const MacroConfig& macro);

}  // namespace rwenas
