#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "rwenas/errors.hpp"
#include "rwenas/random.hpp"
#include "rwenas/search_space.hpp"

using namespace rwenas;

TEST_CASE("flatten of the all-zero genome is 40 zeros") {
  const GenomeVector v = flatten(Genome{});
  CHECK(v.size() == 40);
  for (int x : v) CHECK(x == 0);
}

TEST_CASE("flatten lays out node 2 of the normal cell first") {
  Genome g;
  g.normal.nodes[0] = {1, OpCode::kMaxPool3x3, 0, OpCode::kAvgPool3x3};
  const GenomeVector v = flatten(g);
  CHECK(v[0] == 1);
  CHECK(v[1] == 6);
  CHECK(v[2] == 0);
  CHECK(v[3] == 5);
}

TEST_CASE("parse inverts flatten over 1000 random genomes") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Genome g = random_genome(seed);
    const GenomeVector v = flatten(g);
    CHECK(parse(v) == g);
  }
}

TEST_CASE("parse rejects wrong lengths and out-of-range genes") {
  std::vector<int> v(39, 0);
  CHECK_THROWS_AS(parse(v), InvalidLength);
  v.assign(41, 0);
  CHECK_THROWS_AS(parse(v), InvalidLength);

  std::array<int, 40> z{};
  CHECK(parse(z) == Genome{});

  z[0] = 2;  // node 2 may only reference nodes 0 and 1
  try {
    parse(z);
    FAIL("expected OutOfBounds");
  } catch (const OutOfBounds& e) {
    CHECK(e.position == 0);
    CHECK(e.value == 2);
    CHECK(e.bound == 1);
  }

  z[0] = 0;
  z[21] = 7;  // op gene of reduction node 2
  CHECK_THROWS_AS(parse(z), OutOfBounds);
  z[21] = -1;
  CHECK_THROWS_AS(parse(z), OutOfBounds);
}

TEST_CASE("positional bounds") {
  // node i inputs in [0, i-1], ops in [0, 6], same for both cells
  for (int cell = 0; cell < 2; ++cell) {
    for (int node = 0; node < 5; ++node) {
      const int base = cell * 20 + node * 4;
      CHECK(gene_upper_bound(base) == node + 1);
      CHECK(gene_upper_bound(base + 1) == 6);
      CHECK(gene_upper_bound(base + 2) == node + 1);
      CHECK(gene_upper_bound(base + 3) == 6);
    }
  }
}

TEST_CASE("random_genome is deterministic and respects node-2 bounds") {
  CHECK(random_genome(42) == random_genome(42));
  CHECK_FALSE(random_genome(42) == random_genome(43));
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const Genome g = random_genome(s);
    for (const CellGenome* c : {&g.normal, &g.reduction}) {
      CHECK(c->nodes[0].input_a <= 1);
      CHECK(c->nodes[0].input_b <= 1);
    }
  }
}

TEST_CASE("random_genome op codes are uniform") {
  std::array<long, 7> counts{};
  long total = 0;
  for (std::uint64_t s = 0; total < 100000; ++s) {
    const GenomeVector v = flatten(random_genome(s + 7777));
    for (int p = 1; p < 40; p += 2) {
      ++counts[v[p]];
      ++total;
    }
  }
  for (long c : counts) {
    const double freq = static_cast<double>(c) / static_cast<double>(total);
    CHECK(std::abs(freq - 1.0 / 7) < 0.02 / 7);  // within 2% of 1/7
  }
}

TEST_CASE("aligned recombination of valid genomes stays valid") {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const GenomeVector a = flatten(random_genome(rng.next_u64()));
    const GenomeVector b = flatten(random_genome(rng.next_u64()));
    GenomeVector child{};
    for (int p = 0; p < 40; ++p) child[p] = rng.coin() ? a[p] : b[p];
    CHECK_NOTHROW(parse(child));
  }
}

TEST_CASE("genome text round trip and errors") {
  const Genome g = random_genome(11);
  CHECK(parse_genome_text(genome_to_text(g)) == g);
  CHECK(parse_genome_text("  " + genome_to_text(g) + "\n") == g);
  std::string short_text;
  for (int i = 0; i < 39; ++i) short_text += "0 ";
  CHECK_THROWS_AS(parse_genome_text(short_text), InvalidLength);
  CHECK_THROWS_AS(parse_genome_text(short_text + "x"), ConfigError);
}

TEST_CASE("decode of the all-zero genome") {
  const NetworkPlan plan = decode(Genome{}, MacroConfig{});
  REQUIRE(plan.cells.size() == 5);
  const int widths[] = {10, 20, 20, 40, 40};
  const int sides[] = {32, 16, 16, 8, 8};
  for (int i = 0; i < 5; ++i) {
    const CellPlan& cell = plan.cells[i];
    CHECK(cell.layer == i + 1);
    CHECK((cell.kind == CellKind::kReduction) == (i == 1 || i == 3));
    CHECK(cell.node_width == widths[i]);
    CHECK(cell.out_height == sides[i]);
    CHECK(cell.concat_nodes == std::vector<int>{2, 3, 4, 5, 6});
    CHECK(cell.out_channels == 5 * widths[i]);
    for (const NodePlan& n : cell.nodes) {
      CHECK(n.input_a == 0);
      CHECK(n.input_b == 0);
      CHECK(n.op_a.op == OpCode::kIdentity);
      CHECK(n.op_a.stride == (cell.kind == CellKind::kReduction ? 2 : 1));
    }
  }
  // preprocessing: cell 1 reads the stem twice; cells after a reduction reduce
  // their older input
  CHECK(plan.cells[0].pre0.input == Shape3{10, 32, 32});
  CHECK(plan.cells[0].pre1.input == Shape3{10, 32, 32});
  CHECK(plan.cells[2].pre0.kind == PreprocessKind::kFactorizedReduce);
  CHECK(plan.cells[2].pre0.input == Shape3{50, 32, 32});
  CHECK(plan.cells[1].pre0.kind == PreprocessKind::kReluConvNorm);
  CHECK(plan.head.feature_dim == 200);
  CHECK(plan.head.num_classes == 10);
}

TEST_CASE("two reductions take 32x32 to 8x8") {
  const NetworkPlan plan = decode(random_genome(3), MacroConfig{});
  CHECK(plan.cells.back().out_height == 8);
  CHECK(plan.cells.back().out_width == 8);
}

TEST_CASE("six reductions of 32x32 are degenerate") {
  MacroConfig m;
  m.num_layers = 6;
  m.reduction_positions = {1, 2, 3, 4, 5, 6};
  CHECK_THROWS_AS(decode(Genome{}, m), DegenerateResolution);
  m.reduction_positions = {1, 2, 3, 4, 5};
  CHECK_NOTHROW(decode(Genome{}, m));
}

TEST_CASE("decode validates the macro config") {
  MacroConfig m;
  m.reduction_positions = {0};
  CHECK_THROWS_AS(decode(Genome{}, m), ConfigError);
  m.reduction_positions = {6};
  CHECK_THROWS_AS(decode(Genome{}, m), ConfigError);
}

TEST_CASE("decoded plans are pure, acyclic and have the concat rule") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Genome g = random_genome(s);
    const NetworkPlan plan = decode(g, MacroConfig{});
    CHECK(plan == decode(g, MacroConfig{}));
    for (const CellPlan& cell : plan.cells) {
      const CellGenome& genes = cell.kind == CellKind::kReduction ? g.reduction : g.normal;
      std::vector<int> expected;
      for (int j = 2; j <= 6; ++j) {
        bool used = false;
        for (int k = j + 1; k <= 6; ++k) {
          const NodeGene& n = genes.nodes[k - 2];
          used = used || n.input_a == j || n.input_b == j;
        }
        if (!used) expected.push_back(j);
      }
      CHECK(cell.concat_nodes == expected);
      CHECK(cell.out_channels == static_cast<int>(expected.size()) * cell.node_width);
      for (int k = 0; k < 5; ++k) {
        CHECK(cell.nodes[k].input_a < k + 2);
        CHECK(cell.nodes[k].input_b < k + 2);
        const bool red = cell.kind == CellKind::kReduction;
        CHECK(cell.nodes[k].op_a.stride == ((red && cell.nodes[k].input_a < 2) ? 2 : 1));
        CHECK(cell.nodes[k].op_b.stride == ((red && cell.nodes[k].input_b < 2) ? 2 : 1));
      }
    }
  }
}

TEST_CASE("genome hash distinguishes genomes") {
  CHECK(genome_hash(random_genome(1)) == genome_hash(random_genome(1)));
  CHECK(genome_hash(random_genome(1)) != genome_hash(random_genome(2)));
}
