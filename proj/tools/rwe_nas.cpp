// rwe-nas: random-weight evaluation + NSGA-II architecture search.
//
// Exit codes: 0 ok, 1 configuration / input error, 2 data error, 3 runtime
// error (including interruption). Standard output carries JSON payloads only;
// progress goes to standard error.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rwenas/analysis.hpp"
#include "rwenas/complexity.hpp"
#include "rwenas/data.hpp"
#include "rwenas/moea.hpp"
#include "rwenas/report.hpp"
#include "rwenas/run_config.hpp"
#include "rwenas/rwe.hpp"

namespace {

using namespace rwenas;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_cancel{false};

extern "C" void on_signal(int) { g_cancel.store(true); }

struct CommonOptions {
  std::string config_path;
  std::string profile;
  std::string data;
  std::string out;
  std::vector<std::string> settings;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> generations;
  std::optional<int> pop;
  std::optional<int> epochs;
  std::optional<int> classifiers;
  std::optional<int> layers;
  std::optional<int> channels;
  std::string reductions;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file");
  cmd->add_option("--profile", o.profile, "starting profile when no --config is given (default|tiny)");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--data", o.data, "CIFAR-10 binary directory (else $RWE_NAS_DATA)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "parallel evaluations");
  cmd->add_option("--generations", o.generations, "NSGA-II generations");
  cmd->add_option("--pop", o.pop, "population size (even)");
  cmd->add_option("--epochs", o.epochs, "linear head epochs");
  cmd->add_option("--classifiers", o.classifiers, "ensemble size L");
  cmd->add_option("--layers", o.layers, "cells in the evaluated network");
  cmd->add_option("--channels", o.channels, "initial channels");
  cmd->add_option("--reductions", o.reductions, "comma-separated reduction layers, e.g. 2,4");
  cmd->add_option("--set", o.settings, "extra key=value override (repeatable)");
}

RunConfig build_config(const CommonOptions& o) {
  RunConfig config;
  if (!o.config_path.empty()) {
    config = load_run_config(o.config_path);
    if (!o.profile.empty() && o.profile != config.profile) {
      throw ConfigError("--profile conflicts with the profile of " + o.config_path);
    }
  } else {
    config = profile_defaults(o.profile.empty() ? "default" : o.profile);
  }
  auto set = [&](const char* key, const auto& value) {
    if (value) apply_setting(config, key, std::to_string(*value));
  };
  set("seed", o.seed);
  set("threads", o.threads);
  set("generations", o.generations);
  set("pop_size", o.pop);
  set("epochs", o.epochs);
  set("classifiers", o.classifiers);
  set("layers", o.layers);
  set("channels", o.channels);
  if (!o.reductions.empty()) apply_setting(config, "reductions", o.reductions);
  if (!o.data.empty()) apply_setting(config, "data", o.data);
  if (!o.out.empty()) apply_setting(config, "out", o.out);
  for (const std::string& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  resolve(config);
  return config;
}

Genome read_genome_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read genome file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_genome_text(buf.str());
}

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_search(const CommonOptions& o) {
  const RunConfig config = build_config(o);
  const EvalData data = load_search_data(config);
  std::cerr << "search: " << data.train.size() << " train / " << data.validation.size()
            << " validation images, pop " << config.search.pop_size << ", "
            << config.search.generations << " generations, " << config.threads << " thread(s)\n";

  const std::filesystem::path out = config.out_dir;
  const Evaluator evaluator = [&](const Genome& g) {
    const EvalResult r = evaluate(g, data, config.eval);
    return Objectives{r.error, r.flops};
  };
  auto write_history = [&](const SearchHistory& h) {
    write_file(out / "history.json", history_json(h, config).dump(2) + "\n");
    write_file(out / "timing.json", timing_json(h).dump(2) + "\n");
  };

  SearchHistory partial;
  SearchHooks hooks;
  hooks.threads = config.threads;
  hooks.cancel = &g_cancel;
  hooks.on_generation = [&](const GenerationSnapshot& snap) {
    partial.generations.push_back(snap);
    write_history(partial);
    double best_error = 1.0;
    std::int64_t best_flops = INT64_MAX;
    for (const Individual& ind : snap.population) {
      best_error = std::min(best_error, ind.objectives.error);
      best_flops = std::min(best_flops, ind.objectives.flops);
    }
    std::fprintf(stderr, "gen %3d  front %2zu  min error %.4f  min flops %lld  evals %zu  %.1fs\n",
                 snap.generation, snap.front.size(), best_error,
                 static_cast<long long>(best_flops), snap.cache.evaluations, snap.elapsed_seconds);
  };

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    const SearchHistory history = run_search(config.search, evaluator, hooks);
    write_history(history);
    write_file(out / "front.csv", front_csv(history));
    write_file(out / "front_plot.csv", front_plot_csv(history));
    print_json({{"version", kVersion},
                {"history", (out / "history.json").string()},
                {"front", (out / "front.csv").string()},
                {"front_size", extract_front(history).size()}});
  } catch (const Interrupted& e) {
    write_history(e.history);
    write_file(out / "front.csv", front_csv(e.history));
    write_file(out / "front_plot.csv", front_plot_csv(e.history));
    throw;
  }
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& genome_path) {
  const RunConfig config = build_config(o);
  const Genome genome = read_genome_file(genome_path);
  const EvalData data = load_search_data(config);
  const EvalResult result = evaluate(genome, data, config.eval);
  print_json(eval_result_json(result, genome, config));
  return 0;
}

int cmd_flops(const CommonOptions& o, const std::string& genome_path) {
  const RunConfig config = build_config(o);
  const Genome genome = read_genome_file(genome_path);
  const NetworkPlan plan = decode(genome, config.eval.macro);
  const Json report = complexity_json(count_flops(plan), genome, config);
  if (!o.out.empty()) write_file(std::filesystem::path(config.out_dir) / "complexity.json", report.dump(2) + "\n");
  print_json(report);
  return 0;
}

int cmd_correlate(const CommonOptions& o, const std::string& predictions, const std::string& truth) {
  const CorrelationReport report =
      correlation_study(read_scores_csv(predictions), read_scores_csv(truth), truth);
  Json j = correlation_json(report);
  if (!o.config_path.empty() || !o.profile.empty() || !o.settings.empty()) {
    j["config"] = run_config_json(build_config(o));
  }
  if (!o.out.empty()) {
    const std::filesystem::path out = o.out;
    write_file(out / "correlation.json", j.dump(2) + "\n");
    write_file(out / "correlation_plot.csv", correlation_plot_csv(report));
  }
  print_json(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-weight evaluation and NSGA-II cell search"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions search_opts, eval_opts, flops_opts, corr_opts;
  std::string eval_genome, flops_genome, predictions, truth;

  auto* search = app.add_subcommand("search", "run the NSGA-II search");
  add_common(search, search_opts);

  auto* eval = app.add_subcommand("evaluate", "random-weight evaluation of one genome");
  add_common(eval, eval_opts);
  eval->add_option("genome", eval_genome, "file with 40 integers")->required();

  auto* flops = app.add_subcommand("flops", "FLOPs / parameter report of one genome");
  add_common(flops, flops_opts);
  flops->add_option("genome", flops_genome, "file with 40 integers")->required();

  auto* corr = app.add_subcommand("correlate", "Spearman study of predictions vs ground truth");
  add_common(corr, corr_opts);
  corr->add_option("--predictions", predictions, "CSV id,accuracy")->required();
  corr->add_option("--truth", truth, "CSV id,accuracy")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*search) return cmd_search(search_opts);
    if (*eval) return cmd_evaluate(eval_opts, eval_genome);
    if (*flops) return cmd_flops(flops_opts, flops_genome);
    if (*corr) return cmd_correlate(corr_opts, predictions, truth);
  } catch (const Interrupted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const MissingGroundTruth& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidLength& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const OutOfBounds& e) {
    std::cerr << "error: " << e.what() << " (position " << e.position << ")\n";
    return kExitConfig;
  } catch (const MissingFile& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const CorruptRecord& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const TooFewSamples& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
