#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rwenas/data.hpp"
#include "rwenas/nn_engine.hpp"
#include "rwenas/search_space.hpp"

namespace rwenas {

struct ClassifierTraining {
  int epochs = 30;
  int batch_size = 512;
  double lr0 = 0.25;
  double momentum = 0.9;
};

struct EvalConfig {
  int classifiers = 5;  // L
  ClassifierTraining training;
  MacroConfig macro;
  std::uint64_t seed = 0;
  // Images per forward pass; normalization statistics are taken per pass.
  int feature_batch = 256;
  EngineOptions engine;
};

// Throws ConfigError.
void validate(const EvalConfig& config);

struct EvalData {
  LabeledImageSet train;
  LabeledImageSet validation;
};

struct EvalResult {
  double error = 0.0;
  std::int64_t flops = 0;
  double wall_time = 0.0;  // seconds
  std::uint64_t weights_checksum = 0;
};

// Optional instrumentation filled by evaluate().
struct EvalTrace {
  std::vector<std::vector<std::size_t>> folds;
  std::vector<std::vector<std::size_t>> training_rows;  // per classifier
  std::uint64_t checksum_before = 0;
  std::uint64_t checksum_after = 0;
  int feature_dim = 0;
};

// Lr at `epoch` of `total`: lr0 * (1 + cos(pi * epoch / total)) / 2.
double cosine_lr(double lr0, int epoch, int total);

// Shuffles [0, n) and deals it round-robin into L folds (each sorted). Throws
// TooFewSamples when n < L.
std::vector<std::vector<std::size_t>> split_folds(std::size_t n, int folds, std::uint64_t seed);

// Uniform fan-in initialization of an affine head.
LinearClassifier init_classifier(int feature_dim, int num_classes, std::uint64_t seed);

// Softmax cross-entropy on the affine head only, momentum SGD with a per-epoch
// cosine schedule. Trains on features.row(r) for r in `rows`.
LinearClassifier train_classifier(const Matrix& features, std::span<const int> labels,
                                  std::span<const std::size_t> rows, int num_classes,
                                  const ClassifierTraining& config, std::uint64_t seed);

// Plurality vote over per-classifier argmax. Ties go to the larger summed
// softmax probability, then to the lower class index. `logits` holds one row
// per classifier.
int ensemble_vote(const std::vector<std::span<const float>>& logits);

int ensemble_predict(const std::vector<LinearClassifier>& ensemble,
                     std::span<const float> feature_row);

// Features for every image of `set`, extracted in near-equal consecutive
// chunks of at most `feature_batch` images.
Matrix extract_features(const NetworkPlan& plan, const WeightBank& weights,
                        const LabeledImageSet& set, int feature_batch,
                        const EngineOptions& options = {});

// Seed of the evaluation stream for `genome`; independent of scheduling.
std::uint64_t evaluation_seed(const EvalConfig& config, const Genome& genome);

// Random-weight evaluation: decode, freeze random weights, train L heads on
// leave-one-fold-out feature subsets, majority-vote on the validation set.
EvalResult evaluate(const Genome& genome, const EvalData& data, const EvalConfig& config,
                    EvalTrace* trace = nullptr);

}  // namespace rwenas
