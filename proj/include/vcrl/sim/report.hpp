#pragma once

#include <vcrl/sim/metrics.hpp>

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace vcrl::sim {

/// "1,2,5" or "1-10" or a mix ("1-3,7"); result sorted and deduplicated.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/**
 * vehicles.csv, timeseries.csv, cdf.csv, summary.json and two SVG charts.
 * Chart failures are swallowed: the CSV and JSON files are the contract.
 */
void write_run_outputs(const std::filesystem::path& dir, const MetricsLog& log);

std::string aggregate_csv_header();
/// One row per run sorted by (seed, mode); `p95_ratio` is vehicle-centric over baseline for the same seed.
void write_aggregate_csv(std::ostream& out, std::vector<const MetricsLog*> runs);

} // namespace vcrl::sim
