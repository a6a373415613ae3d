#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rwenas/data.hpp"
#include "rwenas/moea.hpp"
#include "rwenas/rwe.hpp"

namespace rwenas {

inline constexpr const char* kVersion = "rwe-nas 0.1.0";

struct RunConfig {
  std::string profile = "default";
  std::uint64_t seed = 0;
  SearchConfig search;
  EvalConfig eval;
  SplitSpec split;
  std::string data_root;  // empty: resolve from $RWE_NAS_DATA
  std::string out_dir = ".";
  int threads = 1;
};

// Named starting points. "default" mirrors the full search setup (population
// 20, 30 generations, L = 5, 30 head epochs, 5 layers x 10 channels); "tiny"
// subsamples 4000 / 1000 images for desk-scale runs. Throws ConfigError.
RunConfig profile_defaults(const std::string& name);

// Applies one `key = value` setting. Throws ConfigError on unknown keys or
// malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// Flat `key = value` text, `#` starts a comment. A `profile` key, if present,
// is applied first regardless of its position.
std::map<std::string, std::string> parse_config_text(const std::string& text);

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_text(const std::string& text);

// Propagates the shared seed into the search, evaluation and split seeds and
// validates everything. Throws ConfigError.
void resolve(RunConfig& config);

// Loads the CIFAR-10 training archive from the resolved data root, splits it
// per config.split and normalizes both sides with statistics of the training
// side. Throws MissingFile, CorruptRecord or TooFewSamples.
EvalData load_search_data(const RunConfig& config);

}  // namespace rwenas
