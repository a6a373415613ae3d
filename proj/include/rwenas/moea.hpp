#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "rwenas/errors.hpp"
#include "rwenas/random.hpp"
#include "rwenas/search_space.hpp"

namespace rwenas {

// Both minimized.
struct Objectives {
  double error = 0.0;
  std::int64_t flops = 0;

  friend bool operator==(const Objectives&, const Objectives&) = default;
};

inline constexpr double kInfiniteCrowding = std::numeric_limits<double>::infinity();

struct Individual {
  Genome genome;
  Objectives objectives;
  int rank = 0;
  double crowding = 0.0;
};

struct SearchConfig {
  int pop_size = 20;
  int generations = 30;
  double crossover_prob = 0.9;
  double mutation_prob_per_gene = 1.0 / kGenomeLength;
  double eta_m = 20.0;
  std::uint64_t seed = 0;
};

// Throws ConfigError.
void validate(const SearchConfig& config);

struct CacheStats {
  std::size_t evaluations = 0;  // distinct genomes evaluated so far
  std::size_t hits = 0;         // lookups served from the cache so far
};

struct GenerationSnapshot {
  int generation = 0;
  std::vector<Individual> population;
  std::vector<std::size_t> front;  // indices of rank-0 members
  CacheStats cache;
  double elapsed_seconds = 0.0;
};

struct SearchHistory {
  std::vector<GenerationSnapshot> generations;
};

class Interrupted : public Error {
 public:
  explicit Interrupted(SearchHistory partial)
      : Error("Interrupted", "search cancelled after " +
                                 std::to_string(partial.generations.size()) + " snapshot(s)"),
        history(std::move(partial)) {}
  SearchHistory history;
};

// Must be safe to call concurrently for distinct genomes.
using Evaluator = std::function<Objectives(const Genome&)>;

bool dominates(const Objectives& a, const Objectives& b);

std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const Objectives> points);

// Distances aligned with `front`. Boundary points get +infinity; zero-range
// objectives contribute nothing.
std::vector<double> crowding_distance(std::span<const Objectives> front);

// Assigns rank and crowding to every member.
void assign_rank_and_crowding(std::vector<Individual>& pop);

// Binary tournament: lower rank, then larger crowding, then a fair coin.
// Returns the winner's index.
std::size_t tournament_select(std::span<const Individual> pop, Rng& rng);

// Swaps the flattened segment [first, last) between the parents.
std::pair<Genome, Genome> swap_segment(const Genome& a, const Genome& b, int first, int last);

std::pair<Genome, Genome> two_point_crossover(const Genome& a, const Genome& b,
                                              double crossover_prob, Rng& rng);

// Bounded polynomial perturbation of x in [lo, hi] for a given uniform draw u.
double polynomial_perturb(double x, double lo, double hi, double u, double eta);

Genome polynomial_mutation(const Genome& genome, Rng& rng, double eta_m, double p_gene);

// Indices of the survivors: whole fronts in rank order, the last admitted front
// truncated by descending crowding distance (ties keep insertion order).
std::vector<std::size_t> environmental_selection(const std::vector<Individual>& pool,
                                                 std::size_t keep);

struct SearchHooks {
  int threads = 1;
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(const GenerationSnapshot&)> on_generation;
};

// NSGA-II. Each distinct genome is evaluated at most once per run; results do
// not depend on the thread count. Throws Interrupted when `cancel` is raised.
SearchHistory run_search(const SearchConfig& config, const Evaluator& evaluate,
                         const SearchHooks& hooks = {});

}  // namespace rwenas
