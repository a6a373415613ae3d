#include "rwenas/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace rwenas {

namespace {

Json genome_json(const Genome& genome) {
  const GenomeVector v = flatten(genome);
  return Json(std::vector<int>(v.begin(), v.end()));
}

Json crowding_json(double c) { return std::isfinite(c) ? Json(c) : Json(nullptr); }

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

Json run_config_json(const RunConfig& config) {
  const MacroConfig& m = config.eval.macro;
  Json j;
  j["profile"] = config.profile;
  j["seed"] = config.seed;
  j["search"] = {{"pop_size", config.search.pop_size},
                 {"generations", config.search.generations},
                 {"crossover_prob", config.search.crossover_prob},
                 {"mutation_prob", config.search.mutation_prob_per_gene},
                 {"eta_m", config.search.eta_m}};
  j["eval"] = {{"classifiers", config.eval.classifiers},
               {"epochs", config.eval.training.epochs},
               {"batch_size", config.eval.training.batch_size},
               {"lr0", config.eval.training.lr0},
               {"momentum", config.eval.training.momentum},
               {"feature_batch", config.eval.feature_batch},
               {"normalize_features", config.eval.engine.normalize}};
  j["macro"] = {{"layers", m.num_layers},
                {"channels", m.init_channels},
                {"reductions", std::vector<int>(m.reduction_positions.begin(), m.reduction_positions.end())},
                {"num_classes", m.num_classes},
                {"input_shape", {m.input_shape.channels, m.input_shape.height, m.input_shape.width}}};
  Json split = {{"train_fraction", config.split.train_fraction}};
  if (config.split.subsample) {
    split["n_train"] = config.split.subsample->first;
    split["n_val"] = config.split.subsample->second;
  } else {
    split["n_train"] = nullptr;
    split["n_val"] = nullptr;
  }
  j["split"] = split;
  j["data"] = config.data_root;
  return j;
}

Json history_json(const SearchHistory& history, const RunConfig& config) {
  Json gens = Json::array();
  for (const GenerationSnapshot& snap : history.generations) {
    Json individuals = Json::array();
    for (const Individual& ind : snap.population) {
      individuals.push_back({{"genome", genome_json(ind.genome)},
                             {"error", ind.objectives.error},
                             {"flops", ind.objectives.flops},
                             {"rank", ind.rank},
                             {"crowding", crowding_json(ind.crowding)}});
    }
    gens.push_back({{"generation", snap.generation},
                    {"individuals", individuals},
                    {"front", snap.front},
                    {"cache", {{"evaluations", snap.cache.evaluations}, {"hits", snap.cache.hits}}}});
  }
  Json j;
  j["version"] = kVersion;
  j["config"] = run_config_json(config);
  j["generations"] = gens;
  return j;
}

Json timing_json(const SearchHistory& history) {
  Json gens = Json::array();
  for (const GenerationSnapshot& snap : history.generations) {
    gens.push_back({{"generation", snap.generation}, {"elapsed_seconds", snap.elapsed_seconds}});
  }
  return {{"version", kVersion}, {"generations", gens}};
}

std::string front_csv(const SearchHistory& history) {
  std::string out = "genome,error,flops\n";
  for (const FrontMember& m : extract_front(history)) {
    out += genome_to_text(m.genome) + "," + format_double(m.objectives.error) + "," +
           std::to_string(m.objectives.flops) + "\n";
  }
  return out;
}

std::string front_plot_csv(const SearchHistory& history) {
  std::string out = "generation,flops,error\n";
  for (const GenerationSnapshot& snap : history.generations) {
    for (std::size_t i : snap.front) {
      const Objectives& o = snap.population[i].objectives;
      out += std::to_string(snap.generation) + "," + std::to_string(o.flops) + "," +
             format_double(o.error) + "\n";
    }
  }
  return out;
}

Json complexity_json(const ComplexityReport& report, const Genome& genome, const RunConfig& config) {
  Json layers = Json::array();
  for (const LayerCost& l : report.per_layer) {
    layers.push_back({{"id", l.id},
                      {"flops", l.flops},
                      {"params", l.params},
                      {"output_shape", {l.output.channels, l.output.height, l.output.width}}});
  }
  Json j;
  j["version"] = kVersion;
  j["config"] = run_config_json(config);
  j["genome"] = genome_json(genome);
  j["flops"] = report.flops;
  j["params"] = report.params;
  j["per_layer"] = layers;
  return j;
}

Json eval_result_json(const EvalResult& result, const Genome& genome, const RunConfig& config) {
  Json j;
  j["version"] = kVersion;
  j["config"] = run_config_json(config);
  j["genome"] = genome_json(genome);
  j["error"] = result.error;
  j["flops"] = result.flops;
  j["wall_time"] = result.wall_time;
  return j;
}

Json correlation_json(const CorrelationReport& report) {
  Json pairs = Json::array();
  for (const ScorePair& p : report.pairs) {
    pairs.push_back({{"id", p.id}, {"predicted", p.predicted}, {"ground_truth", p.ground_truth}});
  }
  Json j;
  j["version"] = kVersion;
  j["rho"] = report.rho;
  j["n"] = report.n;
  j["truth_provenance"] = report.truth_provenance;
  j["pairs"] = pairs;
  return j;
}

std::string correlation_plot_csv(const CorrelationReport& report) {
  std::string out = "predicted,ground_truth\n";
  for (const ScorePair& p : report.pairs) {
    out += format_double(p.predicted) + "," + format_double(p.ground_truth) + "\n";
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rwenas
