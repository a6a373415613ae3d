#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rwenas/moea.hpp"

namespace rwenas {

// Pearson correlation of average ranks. Throws LengthMismatch, or
// DegenerateInput for fewer than two points, non-finite values or a constant
// vector.
double spearman(std::span<const double> xs, std::span<const double> ys);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct ScorePair {
  std::string id;
  double predicted = 0.0;
  double ground_truth = 0.0;
};

struct IdScore {
  std::string id;
  double score = 0.0;
};

struct CorrelationReport {
  double rho = 0.0;
  std::size_t n = 0;
  std::vector<ScorePair> pairs;
  std::string truth_provenance;
};

// Joins predictions with the truth table by id (prediction order kept).
// Throws MissingGroundTruth for the first prediction id without a truth entry,
// ConfigError on duplicate ids.
CorrelationReport correlation_study(const std::vector<IdScore>& predictions,
                                    const std::vector<IdScore>& truth,
                                    const std::string& truth_provenance);

// Two-column CSV with a header row whose first column is `id`. Throws
// MissingFile or ConfigError.
std::vector<IdScore> read_scores_csv(const std::filesystem::path& path);

struct FrontMember {
  Genome genome;
  Objectives objectives;
};

// Rank-0 members of the final snapshot, one per distinct objective vector,
// ascending by FLOPs (then error).
std::vector<FrontMember> extract_front(const SearchHistory& history);

}  // namespace rwenas
