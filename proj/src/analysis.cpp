#include "rwenas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace rwenas {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw LengthMismatch(xs.size(), ys.size());
  if (xs.size() < 2) throw DegenerateInput("need at least two points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw DegenerateInput("non-finite score");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlation_study(const std::vector<IdScore>& predictions,
                                    const std::vector<IdScore>& truth,
                                    const std::string& truth_provenance) {
  std::map<std::string, double> truth_by_id;
  for (const IdScore& t : truth) {
    if (!truth_by_id.emplace(t.id, t.score).second) {
      throw ConfigError("duplicate ground-truth id '" + t.id + "'");
    }
  }
  CorrelationReport report;
  report.truth_provenance = truth_provenance;
  std::set<std::string> seen;
  for (const IdScore& p : predictions) {
    if (!seen.insert(p.id).second) throw ConfigError("duplicate prediction id '" + p.id + "'");
    const auto it = truth_by_id.find(p.id);
    if (it == truth_by_id.end()) throw MissingGroundTruth(p.id);
    report.pairs.push_back({p.id, p.score, it->second});
  }
  std::vector<double> xs, ys;
  for (const ScorePair& s : report.pairs) {
    xs.push_back(s.predicted);
    ys.push_back(s.ground_truth);
  }
  report.n = report.pairs.size();
  report.rho = spearman(xs, ys);
  return report;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

}  // namespace

std::vector<IdScore> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line.substr(0, line.find(','))) != "id") {
    throw ConfigError(path.string() + ": expected header 'id,<score>'");
  }
  std::vector<IdScore> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": missing comma");
    }
    const std::string id = trim(line.substr(0, comma));
    const std::string value = trim(line.substr(comma + 1));
    std::size_t used = 0;
    double score = 0.0;
    try {
      score = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (id.empty() || used == 0 || used != value.size()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    out.push_back({id, score});
  }
  return out;
}

std::vector<FrontMember> extract_front(const SearchHistory& history) {
  if (history.generations.empty()) return {};
  const GenerationSnapshot& last = history.generations.back();
  std::vector<FrontMember> out;
  for (const Individual& ind : last.population) {
    if (ind.rank != 0) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const FrontMember& m) {
      return m.objectives == ind.objectives;
    });
    if (!duplicate) out.push_back({ind.genome, ind.objectives});
  }
  std::stable_sort(out.begin(), out.end(), [](const FrontMember& a, const FrontMember& b) {
    if (a.objectives.flops != b.objectives.flops) return a.objectives.flops < b.objectives.flops;
    return a.objectives.error < b.objectives.error;
  });
  return out;
}

}  // namespace rwenas
