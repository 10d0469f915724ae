#pragma once

// On-disk artifacts. JSON files carry full double precision and a schema
// version; CSV exports round to 4 decimals. Output is a pure function of the
// input, so re-running a stage reproduces its files byte for byte.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stablehh/identification.hpp"
#include "stablehh/market.hpp"
#include "stablehh/oracle.hpp"
#include "stablehh/stability.hpp"

namespace stablehh::io {

inline constexpr int kSchemaVersion = 1;

std::string markets_to_json(std::span<const MarriageMarket> markets);
/// InvalidInput on malformed JSON, a missing field or a schema mismatch.
std::vector<MarriageMarket> markets_from_json(std::string_view text);

std::string reports_to_json(std::span<const StabilityReport> reports);
std::vector<StabilityReport> reports_from_json(std::string_view text);

std::string bounds_to_json(std::span<const BoundsReport> bounds);
std::vector<BoundsReport> bounds_from_json(std::string_view text);

std::string truth_to_json(const oracle::HiddenTruth& truth);
oracle::HiddenTruth truth_from_json(std::string_view text);

/// One row per exit option: region, male, female, kind, index, income, loss.
void write_stability_csv(std::ostream& out, std::span<const StabilityReport> reports);
/// couple_id, target, lower, upper, naive_lower, naive_upper; two rows per
/// couple (private_share, sharing_rule).
void write_bounds_csv(std::ostream& out, std::span<const BoundsReport> bounds);
/// couple_id, wage_ratio, log_wage_ratio, lower, upper of the sharing rule.
void write_plot_data(std::ostream& out, std::span<const BoundsReport> bounds);

/// Whole-file helpers. read_file throws MissingFile; write_file throws Error
/// when the file cannot be written.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace stablehh::io
