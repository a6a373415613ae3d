#include "rwenas/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "rwenas/errors.hpp"
#include "rwenas/random.hpp"

namespace rwenas {

Tensor LabeledImageSet::batch(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > size()) {
    throw ShapeMismatch("batch [" + std::to_string(first) + ", " + std::to_string(first + count) +
                        ") outside set of " + std::to_string(size()));
  }
  const std::size_t n = image_size();
  std::vector<float> data(pixels.begin() + static_cast<std::ptrdiff_t>(first * n),
                          pixels.begin() + static_cast<std::ptrdiff_t>((first + count) * n));
  return Tensor({static_cast<int>(count), image_shape.channels, image_shape.height,
                 image_shape.width},
                std::move(data));
}

LabeledImageSet LabeledImageSet::select(const std::vector<std::size_t>& indices) const {
  LabeledImageSet out;
  out.image_shape = image_shape;
  out.provenance = provenance;
  out.normalized = normalized;
  const std::size_t n = image_size();
  out.pixels.reserve(indices.size() * n);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.pixels.insert(out.pixels.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i * n),
                      pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    out.labels.push_back(labels[i]);
  }
  return out;
}

LabeledImageSet load_cifar10_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MissingFile(file.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (bytes.size() % kCifarRecordBytes != 0) {
    const std::size_t whole = bytes.size() / kCifarRecordBytes;
    throw CorruptRecord(file.string(), whole * kCifarRecordBytes,
                        "truncated record (" + std::to_string(bytes.size() % kCifarRecordBytes) +
                            " of " + std::to_string(kCifarRecordBytes) + " bytes)");
  }
  LabeledImageSet set;
  set.provenance = file.string();
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  set.labels.resize(records);
  set.pixels.resize(records * kCifarPixels);
  for (std::size_t r = 0; r < records; ++r) {
    const auto* rec = reinterpret_cast<const std::uint8_t*>(bytes.data()) + r * kCifarRecordBytes;
    if (rec[0] >= kCifarClasses) {
      throw CorruptRecord(file.string(), r * kCifarRecordBytes,
                          "label byte " + std::to_string(rec[0]));
    }
    set.labels[r] = rec[0];
    float* dst = set.pixels.data() + r * kCifarPixels;
    for (int i = 0; i < kCifarPixels; ++i) dst[i] = static_cast<float>(rec[1 + i]);
  }
  return set;
}

namespace {

void append(LabeledImageSet& dst, LabeledImageSet&& src) {
  dst.pixels.insert(dst.pixels.end(), src.pixels.begin(), src.pixels.end());
  dst.labels.insert(dst.labels.end(), src.labels.begin(), src.labels.end());
}

}  // namespace

Cifar10 load_cifar10(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw MissingFile(root.string());
  Cifar10 out;
  for (int i = 1; i <= 5; ++i) {
    append(out.train, load_cifar10_file(root / ("data_batch_" + std::to_string(i) + ".bin")));
  }
  out.test = load_cifar10_file(root / "test_batch.bin");
  out.train.provenance = "cifar10:" + root.string() + ":train";
  out.test.provenance = "cifar10:" + root.string() + ":test";
  return out;
}

std::array<std::uint8_t, kCifarRecordBytes> serialize_record(const LabeledImageSet& set,
                                                             std::size_t index) {
  if (set.normalized) throw InvalidStats("cannot serialize a normalized set");
  std::array<std::uint8_t, kCifarRecordBytes> rec{};
  rec[0] = static_cast<std::uint8_t>(set.labels.at(index));
  const float* src = set.pixels.data() + index * kCifarPixels;
  for (int i = 0; i < kCifarPixels; ++i) rec[1 + i] = static_cast<std::uint8_t>(src[i]);
  return rec;
}

ChannelStats compute_channel_stats(const LabeledImageSet& set) {
  if (set.normalized) throw InvalidStats("statistics require an unnormalized set");
  if (set.size() == 0) throw InvalidStats("empty set");
  ChannelStats stats;
  const std::size_t plane = static_cast<std::size_t>(set.image_shape.height) * set.image_shape.width;
  const int channels = std::min(set.image_shape.channels, 3);
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t n = 0; n < set.size(); ++n) {
      const float* p = set.pixels.data() + (n * set.image_shape.channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = p[i] / 255.0;
        sum += v;
        sq += v * v;
      }
    }
    const double count = static_cast<double>(set.size() * plane);
    const double mean = sum / count;
    stats.mean[c] = static_cast<float>(mean);
    stats.std[c] = static_cast<float>(std::sqrt(std::max(0.0, sq / count - mean * mean)));
  }
  return stats;
}

namespace {

void check_stats(const ChannelStats& stats) {
  for (float s : stats.std) {
    if (!(s > 0.0f) || !std::isfinite(s)) throw InvalidStats("std components must be positive");
  }
}

template <typename Fn>
LabeledImageSet map_pixels(const LabeledImageSet& set, Fn&& fn) {
  LabeledImageSet out = set;
  const std::size_t plane = static_cast<std::size_t>(set.image_shape.height) * set.image_shape.width;
  for (std::size_t n = 0; n < set.size(); ++n) {
    for (int c = 0; c < set.image_shape.channels; ++c) {
      float* p = out.pixels.data() + (n * set.image_shape.channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] = fn(p[i], c % 3);
    }
  }
  return out;
}

}  // namespace

LabeledImageSet normalize(const LabeledImageSet& set, const ChannelStats& stats) {
  check_stats(stats);
  if (set.normalized) throw InvalidStats("set is already normalized");
  LabeledImageSet out = map_pixels(set, [&](float x, int c) {
    return (x / 255.0f - stats.mean[c]) / stats.std[c];
  });
  out.normalized = true;
  return out;
}

LabeledImageSet denormalize(const LabeledImageSet& set, const ChannelStats& stats) {
  check_stats(stats);
  if (!set.normalized) throw InvalidStats("set is not normalized");
  LabeledImageSet out = map_pixels(set, [&](float x, int c) {
    return (x * stats.std[c] + stats.mean[c]) * 255.0f;
  });
  out.normalized = false;
  return out;
}

namespace {

// Largest-remainder apportionment of `total` over classes proportional to
// `counts`. Each share deviates from the exact proportion by less than one.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& counts, std::size_t total) {
  const std::size_t sum = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> share(counts.size(), 0);
  if (sum == 0) return share;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (numerator remainder, class)
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const std::size_t num = counts[c] * total;
    share[c] = num / sum;
    assigned += share[c];
    remainders.emplace_back(num % sum, c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++share[remainders[i].second];
  return share;
}

std::vector<std::vector<std::size_t>> by_class(const std::vector<std::size_t>& pool,
                                               const std::vector<int>& labels, int num_classes) {
  std::vector<std::vector<std::size_t>> out(num_classes);
  for (std::size_t i : pool) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes) {
      throw ConfigError("label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    out[y].push_back(i);
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_take(
    const std::vector<std::size_t>& pool, const std::vector<int>& labels, int num_classes,
    std::size_t take, Rng& rng) {
  auto classes = by_class(pool, labels, num_classes);
  std::vector<std::size_t> counts;
  for (const auto& c : classes) counts.push_back(c.size());
  const auto share = apportion(counts, take);
  std::vector<std::size_t> taken, rest;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    rng.shuffle(std::span<std::size_t>(classes[c]));
    taken.insert(taken.end(), classes[c].begin(), classes[c].begin() + share[c]);
    rest.insert(rest.end(), classes[c].begin() + share[c], classes[c].end());
  }
  std::sort(taken.begin(), taken.end());
  std::sort(rest.begin(), rest.end());
  return {std::move(taken), std::move(rest)};
}

}  // namespace

SplitIndices split_indices(const std::vector<int>& labels, int num_classes, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  const std::size_t n = labels.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction));
  if (n_train == 0 || n_train == n) {
    throw TooFewSamples(std::to_string(n) + " samples cannot be split at " +
                        std::to_string(spec.train_fraction));
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  Rng rng(derive_seed(spec.seed, 0x5b1));
  auto [train, val] = stratified_take(all, labels, num_classes, n_train, rng);

  if (spec.subsample) {
    const auto [want_train, want_val] = *spec.subsample;
    if (want_train > train.size() || want_val > val.size()) {
      throw TooFewSamples("subsample (" + std::to_string(want_train) + ", " +
                          std::to_string(want_val) + ") exceeds split (" +
                          std::to_string(train.size()) + ", " + std::to_string(val.size()) + ")");
    }
    train = stratified_take(train, labels, num_classes, want_train, rng).first;
    val = stratified_take(val, labels, num_classes, want_val, rng).first;
  }
  return {std::move(train), std::move(val)};
}

std::pair<LabeledImageSet, LabeledImageSet> split(const LabeledImageSet& set, int num_classes,
                                                  const SplitSpec& spec) {
  const SplitIndices idx = split_indices(set.labels, num_classes, spec);
  return {set.select(idx.train), set.select(idx.validation)};
}

std::optional<std::filesystem::path> resolve_data_root(const std::string& flag) {
  if (!flag.empty()) return std::filesystem::path(flag);
  if (const char* env = std::getenv("RWE_NAS_DATA"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::nullopt;
}

}  // namespace rwenas
