#include "rwenas/run_config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "rwenas/errors.hpp"
#include "rwenas/random.hpp"

namespace rwenas {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

long long to_integer(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const long long v = to_integer(key, value);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError("'" + key + "' out of range");
  return static_cast<int>(v);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + value + "'");
}

std::set<int> to_positions(const std::string& key, const std::string& value) {
  std::set<int> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.insert(to_int(key, item));
  }
  return out;
}

std::pair<int, int> to_size(const std::string& key, const std::string& value) {
  const auto x = value.find('x');
  if (x == std::string::npos) throw ConfigError("'" + key + "' expects HxW, got '" + value + "'");
  return {to_int(key, trim(value.substr(0, x))), to_int(key, trim(value.substr(x + 1)))};
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_integer(k, v)); }},
      {"pop_size", [](RunConfig& c, auto& k, auto& v) { c.search.pop_size = to_int(k, v); }},
      {"generations", [](RunConfig& c, auto& k, auto& v) { c.search.generations = to_int(k, v); }},
      {"crossover_prob", [](RunConfig& c, auto& k, auto& v) { c.search.crossover_prob = to_double(k, v); }},
      {"mutation_prob", [](RunConfig& c, auto& k, auto& v) { c.search.mutation_prob_per_gene = to_double(k, v); }},
      {"eta_m", [](RunConfig& c, auto& k, auto& v) { c.search.eta_m = to_double(k, v); }},
      {"classifiers", [](RunConfig& c, auto& k, auto& v) { c.eval.classifiers = to_int(k, v); }},
      {"epochs", [](RunConfig& c, auto& k, auto& v) { c.eval.training.epochs = to_int(k, v); }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.eval.training.batch_size = to_int(k, v); }},
      {"lr0", [](RunConfig& c, auto& k, auto& v) { c.eval.training.lr0 = to_double(k, v); }},
      {"momentum", [](RunConfig& c, auto& k, auto& v) { c.eval.training.momentum = to_double(k, v); }},
      {"feature_batch", [](RunConfig& c, auto& k, auto& v) { c.eval.feature_batch = to_int(k, v); }},
      {"normalize_features", [](RunConfig& c, auto& k, auto& v) { c.eval.engine.normalize = to_bool(k, v); }},
      {"layers", [](RunConfig& c, auto& k, auto& v) { c.eval.macro.num_layers = to_int(k, v); }},
      {"channels", [](RunConfig& c, auto& k, auto& v) { c.eval.macro.init_channels = to_int(k, v); }},
      {"reductions", [](RunConfig& c, auto& k, auto& v) { c.eval.macro.reduction_positions = to_positions(k, v); }},
      {"num_classes", [](RunConfig& c, auto& k, auto& v) { c.eval.macro.num_classes = to_int(k, v); }},
      {"input_size",
       [](RunConfig& c, auto& k, auto& v) {
         const auto [h, w] = to_size(k, v);
         c.eval.macro.input_shape.height = h;
         c.eval.macro.input_shape.width = w;
       }},
      {"train_fraction", [](RunConfig& c, auto& k, auto& v) { c.split.train_fraction = to_double(k, v); }},
      {"n_train",
       [](RunConfig& c, auto& k, auto& v) {
         auto s = c.split.subsample.value_or(std::pair<std::size_t, std::size_t>{0, 0});
         s.first = static_cast<std::size_t>(to_integer(k, v));
         c.split.subsample = s;
       }},
      {"n_val",
       [](RunConfig& c, auto& k, auto& v) {
         auto s = c.split.subsample.value_or(std::pair<std::size_t, std::size_t>{0, 0});
         s.second = static_cast<std::size_t>(to_integer(k, v));
         c.split.subsample = s;
       }},
      {"subsample",
       [](RunConfig& c, auto& k, auto& v) {
         if (!to_bool(k, v)) c.split.subsample.reset();
       }},
      {"data", [](RunConfig& c, auto&, auto& v) { c.data_root = v; }},
      {"out", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
      {"threads", [](RunConfig& c, auto& k, auto& v) { c.threads = to_int(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig profile_defaults(const std::string& name) {
  RunConfig config;
  config.profile = name;
  if (name == "default") return config;
  if (name == "tiny") {
    config.split.subsample = std::pair<std::size_t, std::size_t>{4000, 1000};
    return config;
  }
  throw ConfigError("unknown profile '" + name + "'");
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "profile") {
    if (value != config.profile) throw ConfigError("profile must be selected first");
    return;
  }
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown key '" + key + "'");
  it->second(config, key, trim(value));
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig run_config_from_text(const std::string& text) {
  const auto entries = parse_config_text(text);
  const auto profile = entries.find("profile");
  RunConfig config = profile_defaults(profile == entries.end() ? "default" : profile->second);
  for (const auto& [key, value] : entries) apply_setting(config, key, value);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return run_config_from_text(buf.str());
}

void resolve(RunConfig& config) {
  config.search.seed = derive_seed(config.seed, 0x5eac);
  config.eval.seed = derive_seed(config.seed, 0xe7a1);
  config.split.seed = derive_seed(config.seed, 0x591d);
  if (config.split.subsample) {
    const auto [a, b] = *config.split.subsample;
    if (a == 0 || b == 0) throw ConfigError("n_train and n_val must both be positive");
  }
  if (config.threads < 1) throw ConfigError("threads must be >= 1");
  validate(config.search);
  validate(config.eval);
}

EvalData load_search_data(const RunConfig& config) {
  const auto root = resolve_data_root(config.data_root);
  if (!root) throw MissingFile("no data root (pass --data or set RWE_NAS_DATA)");
  const Shape3& in = config.eval.macro.input_shape;
  if (in.channels != 3 || in.height != kCifarSide || in.width != kCifarSide) {
    throw ConfigError("CIFAR-10 images are 3x32x32; input_size must be 32x32");
  }
  Cifar10 cifar = load_cifar10(*root);
  auto [train, validation] = split(cifar.train, config.eval.macro.num_classes, config.split);
  const ChannelStats stats = compute_channel_stats(train);
  return {normalize(train, stats), normalize(validation, stats)};
}

}  // namespace rwenas
