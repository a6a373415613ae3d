#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rwenas/search_space.hpp"
#include "rwenas/tensor.hpp"

namespace rwenas {

inline constexpr int kCifarSide = 32;
inline constexpr int kCifarPixels = 3 * kCifarSide * kCifarSide;
inline constexpr int kCifarRecordBytes = 1 + kCifarPixels;
inline constexpr int kCifarClasses = 10;

// Images in NCHW float storage. Freshly loaded sets hold raw byte values
// (0..255) exactly; normalize() maps them to (x/255 - mean)/std.
struct LabeledImageSet {
  Shape3 image_shape{3, kCifarSide, kCifarSide};
  std::vector<float> pixels;
  std::vector<int> labels;
  std::string provenance;
  bool normalized = false;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const {
    return static_cast<std::size_t>(image_shape.channels) * image_shape.height * image_shape.width;
  }
  // Copies images [first, first + count) into a tensor.
  Tensor batch(std::size_t first, std::size_t count) const;
  LabeledImageSet select(const std::vector<std::size_t>& indices) const;
};

struct Cifar10 {
  LabeledImageSet train;
  LabeledImageSet test;
};

// Reads data_batch_{1..5}.bin and test_batch.bin from `root`. Throws
// MissingFile or CorruptRecord.
Cifar10 load_cifar10(const std::filesystem::path& root);

// One file of 3073-byte records.
LabeledImageSet load_cifar10_file(const std::filesystem::path& file);

// Inverse of the loader for one record; requires an unnormalized set.
std::array<std::uint8_t, kCifarRecordBytes> serialize_record(const LabeledImageSet& set,
                                                             std::size_t index);

struct ChannelStats {
  std::array<float, 3> mean{};
  std::array<float, 3> std{};
};

// Per-channel mean and standard deviation of x/255 over an unnormalized set.
ChannelStats compute_channel_stats(const LabeledImageSet& set);

// Throws InvalidStats when a std component is not positive or the set is
// already normalized.
LabeledImageSet normalize(const LabeledImageSet& set, const ChannelStats& stats);
LabeledImageSet denormalize(const LabeledImageSet& set, const ChannelStats& stats);

struct SplitSpec {
  double train_fraction = 0.8;
  std::optional<std::pair<std::size_t, std::size_t>> subsample;  // (n_train, n_val)
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Stratified by label, then optionally stratified subsampling of each side.
// Index lists are ascending. Throws TooFewSamples or ConfigError.
SplitIndices split_indices(const std::vector<int>& labels, int num_classes, const SplitSpec& spec);

std::pair<LabeledImageSet, LabeledImageSet> split(const LabeledImageSet& set, int num_classes,
                                                  const SplitSpec& spec);

// `flag` if non-empty, else $RWE_NAS_DATA, else nullopt.
std::optional<std::filesystem::path> resolve_data_root(const std::string& flag);

}  // namespace rwenas
