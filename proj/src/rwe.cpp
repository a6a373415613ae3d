#include "rwenas/rwe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "rwenas/complexity.hpp"
#include "rwenas/errors.hpp"
#include "rwenas/random.hpp"

namespace rwenas {

void validate(const EvalConfig& config) {
  validate(config.macro);
  if (config.classifiers < 1) throw ConfigError("classifiers (L) must be >= 1");
  if (config.training.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.training.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(config.training.lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (config.training.momentum < 0.0 || config.training.momentum >= 1.0) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (config.feature_batch < 1) throw ConfigError("feature_batch must be >= 1");
}

double cosine_lr(double lr0, int epoch, int total) {
  return lr0 * (1.0 + std::cos(std::numbers::pi * epoch / total)) / 2.0;
}

std::vector<std::vector<std::size_t>> split_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 1) throw ConfigError("fold count must be >= 1");
  if (n < static_cast<std::size_t>(folds)) {
    throw TooFewSamples(std::to_string(n) + " samples for " + std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t i = 0; i < n; ++i) out[i % folds].push_back(order[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

LinearClassifier init_classifier(int feature_dim, int num_classes, std::uint64_t seed) {
  LinearClassifier clf{Matrix(feature_dim, num_classes), std::vector<float>(num_classes, 0.0f)};
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  Rng rng(seed);
  for (float& w : clf.weight.values) w = static_cast<float>(rng.uniform(-bound, bound));
  for (float& b : clf.bias) b = static_cast<float>(rng.uniform(-bound, bound));
  return clf;
}

namespace {

void softmax_inplace(std::span<float> row) {
  const float m = *std::max_element(row.begin(), row.end());
  float sum = 0.0f;
  for (float& v : row) {
    v = std::exp(v - m);
    sum += v;
  }
  for (float& v : row) v /= sum;
}

}  // namespace

LinearClassifier train_classifier(const Matrix& features, std::span<const int> labels,
                                  std::span<const std::size_t> rows, int num_classes,
                                  const ClassifierTraining& config, std::uint64_t seed) {
  if (labels.size() != static_cast<std::size_t>(features.rows)) {
    throw ShapeMismatch(std::to_string(labels.size()) + " labels for " +
                        std::to_string(features.rows) + " feature rows");
  }
  if (rows.empty()) throw TooFewSamples("no training rows");
  const int dim = features.cols;
  for (std::size_t r : rows) {
    if (r >= static_cast<std::size_t>(features.rows)) throw ShapeMismatch("row index out of range");
    if (labels[r] < 0 || labels[r] >= num_classes) {
      throw ShapeMismatch("label " + std::to_string(labels[r]) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
  }

  LinearClassifier clf = init_classifier(dim, num_classes, derive_seed(seed, 1));
  Rng shuffle_rng(derive_seed(seed, 2));
  std::vector<std::size_t> order(rows.begin(), rows.end());

  Matrix grad_w(dim, num_classes), vel_w(dim, num_classes);
  std::vector<float> grad_b(num_classes), vel_b(num_classes, 0.0f);
  std::vector<float> probs(num_classes);
  const auto momentum = static_cast<float>(config.momentum);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto lr = static_cast<float>(cosine_lr(config.lr0, epoch, config.epochs));
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const float scale = 1.0f / static_cast<float>(end - start);
      std::fill(grad_w.values.begin(), grad_w.values.end(), 0.0f);
      std::fill(grad_b.begin(), grad_b.end(), 0.0f);
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t r = order[i];
        const auto x = features.row(static_cast<int>(r));
        std::copy(clf.bias.begin(), clf.bias.end(), probs.begin());
        for (int d = 0; d < dim; ++d) {
          const float v = x[d];
          const float* w = clf.weight.row(d).data();
          for (int c = 0; c < num_classes; ++c) probs[c] += v * w[c];
        }
        softmax_inplace(probs);
        probs[labels[r]] -= 1.0f;
        for (int c = 0; c < num_classes; ++c) {
          probs[c] *= scale;
          grad_b[c] += probs[c];
        }
        for (int d = 0; d < dim; ++d) {
          const float v = x[d];
          float* g = grad_w.row(d).data();
          for (int c = 0; c < num_classes; ++c) g[c] += v * probs[c];
        }
      }
      for (std::size_t k = 0; k < clf.weight.values.size(); ++k) {
        vel_w.values[k] = momentum * vel_w.values[k] + grad_w.values[k];
        clf.weight.values[k] -= lr * vel_w.values[k];
      }
      for (int c = 0; c < num_classes; ++c) {
        vel_b[c] = momentum * vel_b[c] + grad_b[c];
        clf.bias[c] -= lr * vel_b[c];
      }
    }
  }
  return clf;
}

int ensemble_vote(const std::vector<std::span<const float>>& logits) {
  if (logits.empty()) throw ShapeMismatch("empty ensemble");
  const std::size_t classes = logits.front().size();
  if (classes == 0) throw ShapeMismatch("no classes");
  std::vector<int> votes(classes, 0);
  std::vector<double> prob_sum(classes, 0.0);
  std::vector<float> p(classes);
  for (const auto& row : logits) {
    if (row.size() != classes) throw ShapeMismatch("ensemble members disagree on class count");
    votes[std::max_element(row.begin(), row.end()) - row.begin()] += 1;
    std::copy(row.begin(), row.end(), p.begin());
    softmax_inplace(p);
    for (std::size_t c = 0; c < classes; ++c) prob_sum[c] += p[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && prob_sum[c] > prob_sum[best])) {
      best = c;
    }
  }
  return static_cast<int>(best);
}

int ensemble_predict(const std::vector<LinearClassifier>& ensemble,
                     std::span<const float> feature_row) {
  if (ensemble.empty()) throw ShapeMismatch("empty ensemble");
  Matrix x(1, static_cast<int>(feature_row.size()));
  std::copy(feature_row.begin(), feature_row.end(), x.values.begin());
  std::vector<Matrix> outs;
  outs.reserve(ensemble.size());
  for (const LinearClassifier& clf : ensemble) outs.push_back(linear_forward(x, clf));
  std::vector<std::span<const float>> rows;
  for (const Matrix& m : outs) rows.push_back(m.row(0));
  return ensemble_vote(rows);
}

Matrix extract_features(const NetworkPlan& plan, const WeightBank& weights,
                        const LabeledImageSet& set, int feature_batch,
                        const EngineOptions& options) {
  const std::size_t n = set.size();
  if (n == 0) throw TooFewSamples("cannot extract features from an empty set");
  const std::size_t chunks = (n + feature_batch - 1) / feature_batch;
  Matrix out(static_cast<int>(n), plan.head.feature_dim);
  std::size_t first = 0;
  for (std::size_t k = 0; k < chunks; ++k) {
    const std::size_t count = n / chunks + (k < n % chunks ? 1 : 0);
    const Matrix f = forward_features(plan, weights, set.batch(first, count), options);
    std::copy(f.values.begin(), f.values.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(first * out.cols));
    first += count;
  }
  return out;
}

std::uint64_t evaluation_seed(const EvalConfig& config, const Genome& genome) {
  return derive_seed(config.seed, genome_hash(genome));
}

EvalResult evaluate(const Genome& genome, const EvalData& data, const EvalConfig& config,
                    EvalTrace* trace) {
  const auto started = std::chrono::steady_clock::now();
  validate(config);
  if (data.validation.size() == 0) throw EmptyValidation();
  const int classes = config.macro.num_classes;
  const std::uint64_t seed = evaluation_seed(config, genome);

  const NetworkPlan plan = decode(genome, config.macro);
  const WeightBank weights = init_weights(plan, derive_seed(seed, 1));
  const std::uint64_t checksum_before = weights.checksum();

  // Weights are frozen, so features are extracted once and shared by all folds.
  const Matrix train_features =
      extract_features(plan, weights, data.train, config.feature_batch, config.engine);
  const Matrix val_features =
      extract_features(plan, weights, data.validation, config.feature_batch, config.engine);

  const int L = config.classifiers;
  const auto folds = split_folds(data.train.size(), L, derive_seed(seed, 2));
  std::vector<LinearClassifier> ensemble;
  ensemble.reserve(L);
  if (trace) {
    trace->folds = folds;
    trace->training_rows.clear();
  }
  for (int i = 0; i < L; ++i) {
    std::vector<std::size_t> rows;
    if (L == 1) {
      rows = folds[0];
    } else {
      for (int j = 0; j < L; ++j) {
        if (j != i) rows.insert(rows.end(), folds[j].begin(), folds[j].end());
      }
      std::sort(rows.begin(), rows.end());
    }
    ensemble.push_back(train_classifier(train_features, data.train.labels, rows, classes,
                                        config.training, derive_seed(seed, 100 + i)));
    if (trace) trace->training_rows.push_back(std::move(rows));
  }

  std::vector<Matrix> logits;
  logits.reserve(L);
  for (const LinearClassifier& clf : ensemble) logits.push_back(linear_forward(val_features, clf));
  std::size_t wrong = 0;
  std::vector<std::span<const float>> rows(L);
  for (int r = 0; r < val_features.rows; ++r) {
    for (int i = 0; i < L; ++i) rows[i] = logits[i].row(r);
    if (ensemble_vote(rows) != data.validation.labels[r]) ++wrong;
  }

  const std::uint64_t checksum_after = weights.checksum();
  if (checksum_after != checksum_before) throw std::logic_error("backbone weights were modified");

  EvalResult result;
  result.error = static_cast<double>(wrong) / static_cast<double>(data.validation.size());
  result.flops = count_flops(plan).flops;
  result.weights_checksum = checksum_after;
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (trace) {
    trace->checksum_before = checksum_before;
    trace->checksum_after = checksum_after;
    trace->feature_dim = plan.head.feature_dim;
  }
  return result;
}

}  // namespace rwenas
