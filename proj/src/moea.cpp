#include "rwenas/moea.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "rwenas/parallel.hpp"

namespace rwenas {

void validate(const SearchConfig& config) {
  if (config.pop_size < 2 || config.pop_size % 2 != 0) {
    throw ConfigError("pop_size must be a positive even integer");
  }
  if (config.generations < 0) throw ConfigError("generations must be >= 0");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(config.crossover_prob) || !prob(config.mutation_prob_per_gene)) {
    throw ConfigError("probabilities must lie in [0, 1]");
  }
  if (!(config.eta_m >= 0.0)) throw ConfigError("eta_m must be non-negative");
}

bool dominates(const Objectives& a, const Objectives& b) {
  return a.error <= b.error && a.flops <= b.flops && (a.error < b.error || a.flops < b.flops);
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const Objectives> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated_by(n);  // S_p
  std::vector<std::size_t> domination_count(n, 0);        // n_p
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(points[p], points[q])) {
        dominated_by[p].push_back(q);
      } else if (dominates(points[q], points[p])) {
        ++domination_count[p];
      }
    }
    if (domination_count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      for (std::size_t q : dominated_by[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const Objectives> front) {
  const std::size_t n = front.size();
  std::vector<double> distance(n, 0.0);
  if (n <= 2) {
    std::fill(distance.begin(), distance.end(), kInfiniteCrowding);
    return distance;
  }
  auto accumulate = [&](auto value) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    distance[order.front()] = kInfiniteCrowding;
    distance[order.back()] = kInfiniteCrowding;
    const double range = value(order.back()) - value(order.front());
    if (range <= 0.0) return;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      distance[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
    }
  };
  accumulate([&](std::size_t i) { return front[i].error; });
  accumulate([&](std::size_t i) { return static_cast<double>(front[i].flops); });
  return distance;
}

void assign_rank_and_crowding(std::vector<Individual>& pop) {
  std::vector<Objectives> points;
  points.reserve(pop.size());
  for (const Individual& ind : pop) points.push_back(ind.objectives);
  const auto fronts = fast_nondominated_sort(points);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    std::vector<Objectives> members;
    for (std::size_t i : fronts[r]) members.push_back(points[i]);
    const auto dist = crowding_distance(members);
    for (std::size_t k = 0; k < fronts[r].size(); ++k) {
      pop[fronts[r][k]].rank = static_cast<int>(r);
      pop[fronts[r][k]].crowding = dist[k];
    }
  }
}

std::size_t tournament_select(std::span<const Individual> pop, Rng& rng) {
  const std::size_t n = pop.size();
  if (n == 1) return 0;
  const std::size_t a = rng.below(n);
  std::size_t b = rng.below(n - 1);
  if (b >= a) ++b;
  const Individual& x = pop[a];
  const Individual& y = pop[b];
  if (x.rank != y.rank) return x.rank < y.rank ? a : b;
  if (x.crowding != y.crowding) return x.crowding > y.crowding ? a : b;
  return rng.coin() ? a : b;
}

std::pair<Genome, Genome> swap_segment(const Genome& a, const Genome& b, int first, int last) {
  GenomeVector va = flatten(a);
  GenomeVector vb = flatten(b);
  for (int k = first; k < last; ++k) std::swap(va[k], vb[k]);
  return {parse(va), parse(vb)};
}

std::pair<Genome, Genome> two_point_crossover(const Genome& a, const Genome& b,
                                              double crossover_prob, Rng& rng) {
  if (!rng.bernoulli(crossover_prob)) return {a, b};
  std::uint64_t i = 0, j = 0;
  do {
    i = rng.below(kGenomeLength + 1);
    j = rng.below(kGenomeLength + 1);
  } while (i == j);
  if (i > j) std::swap(i, j);
  return swap_segment(a, b, static_cast<int>(i), static_cast<int>(j));
}

double polynomial_perturb(double x, double lo, double hi, double u, double eta) {
  const double span = hi - lo;
  if (span <= 0.0) return x;
  const double d1 = (x - lo) / span;
  const double d2 = (hi - x) / span;
  const double power = 1.0 / (eta + 1.0);
  double dq = 0.0;
  if (u < 0.5) {
    const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
    dq = std::pow(v, power) - 1.0;
  } else {
    const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
    dq = 1.0 - std::pow(v, power);
  }
  return std::clamp(x + dq * span, lo, hi);
}

Genome polynomial_mutation(const Genome& genome, Rng& rng, double eta_m, double p_gene) {
  GenomeVector v = flatten(genome);
  for (int p = 0; p < kGenomeLength; ++p) {
    if (!rng.bernoulli(p_gene)) continue;
    const int bound = gene_upper_bound(p);
    const double y = polynomial_perturb(v[p], 0.0, bound, rng.uniform01(), eta_m);
    v[p] = std::clamp(static_cast<int>(std::lround(y)), 0, bound);
  }
  return parse(v);
}

std::vector<std::size_t> environmental_selection(const std::vector<Individual>& pool,
                                                 std::size_t keep) {
  std::vector<Objectives> points;
  for (const Individual& ind : pool) points.push_back(ind.objectives);
  std::vector<std::size_t> survivors;
  for (const auto& front : fast_nondominated_sort(points)) {
    if (survivors.size() + front.size() <= keep) {
      survivors.insert(survivors.end(), front.begin(), front.end());
      if (survivors.size() == keep) break;
      continue;
    }
    std::vector<Objectives> members;
    for (std::size_t i : front) members.push_back(points[i]);
    const auto dist = crowding_distance(members);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
    for (std::size_t k = 0; survivors.size() < keep; ++k) survivors.push_back(front[order[k]]);
    break;
  }
  return survivors;
}

namespace {

class EvaluationCache {
 public:
  EvaluationCache(const Evaluator& evaluate, int threads) : evaluate_(evaluate), threads_(threads) {}

  // Fills objectives for every member; each distinct uncached genome is
  // evaluated once, in parallel, in an order-independent way.
  void fill(std::vector<Individual>& members) {
    std::vector<GenomeVector> pending;
    std::map<GenomeVector, std::size_t> pending_index;
    for (const Individual& ind : members) {
      const GenomeVector key = flatten(ind.genome);
      if (cache_.contains(key) || pending_index.contains(key)) {
        ++stats_.hits;
      } else {
        pending_index.emplace(key, pending.size());
        pending.push_back(key);
      }
    }
    std::vector<Objectives> results(pending.size());
    parallel_for(pending.size(), threads_,
                 [&](std::size_t i) { results[i] = evaluate_(parse(pending[i])); });
    for (std::size_t i = 0; i < pending.size(); ++i) cache_.emplace(pending[i], results[i]);
    stats_.evaluations += pending.size();
    for (Individual& ind : members) ind.objectives = cache_.at(flatten(ind.genome));
  }

  const CacheStats& stats() const { return stats_; }

 private:
  const Evaluator& evaluate_;
  int threads_;
  std::map<GenomeVector, Objectives> cache_;
  CacheStats stats_;
};

GenerationSnapshot snapshot(int generation, const std::vector<Individual>& pop,
                            const CacheStats& stats,
                            std::chrono::steady_clock::time_point started) {
  GenerationSnapshot snap;
  snap.generation = generation;
  snap.population = pop;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (pop[i].rank == 0) snap.front.push_back(i);
  }
  snap.cache = stats;
  snap.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return snap;
}

}  // namespace

SearchHistory run_search(const SearchConfig& config, const Evaluator& evaluate,
                         const SearchHooks& hooks) {
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  EvaluationCache cache(evaluate, hooks.threads);
  SearchHistory history;
  auto cancelled = [&] { return hooks.cancel != nullptr && hooks.cancel->load(); };
  auto record = [&](int generation, const std::vector<Individual>& pop) {
    history.generations.push_back(snapshot(generation, pop, cache.stats(), started));
    if (hooks.on_generation) hooks.on_generation(history.generations.back());
  };

  std::vector<Individual> pop(config.pop_size);
  for (Individual& ind : pop) ind.genome = random_genome(rng.next_u64());
  if (cancelled()) throw Interrupted(std::move(history));
  cache.fill(pop);
  assign_rank_and_crowding(pop);
  record(0, pop);

  for (int gen = 1; gen <= config.generations; ++gen) {
    if (cancelled()) throw Interrupted(std::move(history));
    std::vector<Individual> offspring;
    offspring.reserve(config.pop_size);
    while (offspring.size() < static_cast<std::size_t>(config.pop_size)) {
      const Genome& p1 = pop[tournament_select(pop, rng)].genome;
      const Genome& p2 = pop[tournament_select(pop, rng)].genome;
      auto [c1, c2] = two_point_crossover(p1, p2, config.crossover_prob, rng);
      offspring.push_back(
          {polynomial_mutation(c1, rng, config.eta_m, config.mutation_prob_per_gene), {}, 0, 0.0});
      offspring.push_back(
          {polynomial_mutation(c2, rng, config.eta_m, config.mutation_prob_per_gene), {}, 0, 0.0});
    }
    cache.fill(offspring);

    std::vector<Individual> pool = std::move(pop);
    pool.insert(pool.end(), offspring.begin(), offspring.end());
    pop.clear();
    for (std::size_t i : environmental_selection(pool, config.pop_size)) pop.push_back(pool[i]);
    assign_rank_and_crowding(pop);
    record(gen, pop);
  }
  return history;
}

}  // namespace rwenas
