#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "rwenas/analysis.hpp"
#include "rwenas/complexity.hpp"
#include "rwenas/moea.hpp"
#include "rwenas/run_config.hpp"

namespace rwenas {

using Json = nlohmann::ordered_json;

// The resolved configuration as embedded in artifacts. Execution-only
// settings (thread count, output directory) are left out so that artifacts
// compare byte-for-byte across them.
Json run_config_json(const RunConfig& config);

// {version, config, generations: [{generation, individuals: [{genome, error,
// flops, rank, crowding}], front, cache}]}. Infinite crowding is null.
Json history_json(const SearchHistory& history, const RunConfig& config);

// Wall-clock per generation; kept apart from the history so the latter is
// reproducible.
Json timing_json(const SearchHistory& history);

// `genome,error,flops`, final rank-0 front.
std::string front_csv(const SearchHistory& history);

// `generation,flops,error`, rank-0 members of every generation.
std::string front_plot_csv(const SearchHistory& history);

Json complexity_json(const ComplexityReport& report, const Genome& genome, const RunConfig& config);

Json eval_result_json(const EvalResult& result, const Genome& genome, const RunConfig& config);

Json correlation_json(const CorrelationReport& report);

// `predicted,ground_truth` scatter data.
std::string correlation_plot_csv(const CorrelationReport& report);

// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rwenas
