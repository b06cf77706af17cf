#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerfx/backtest.hpp"
#include "peerfx/behavior.hpp"
#include "peerfx/estimators.hpp"
#include "peerfx/notifqueue.hpp"
#include "peerfx/synthnet.hpp"

namespace peerfx::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Splits CSV text into rows of fields. Expects `header` as the first line;
/// every row must have as many fields. '#' lines before the header are
/// returned in `comments`.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};
Table parse(std::string_view text, std::string_view header);

double parse_double(std::string_view field, std::size_t line);
std::int64_t parse_int(std::string_view field, std::size_t line);

std::string write_members(std::span<const MemberRecord> members);
std::vector<MemberRecord> read_members(std::string_view text);

std::string write_edges(const EdgeList& edges);
EdgeList read_edges(std::string_view text);

std::string write_schedules(std::span<const NotificationSchedule> schedules);
std::vector<NotificationSchedule> read_schedules(std::string_view text);

std::string write_assignments(std::span<const GroupAssignment> assignments);
std::vector<GroupAssignment> read_assignments(std::string_view text);

std::string write_panel(std::span<const PanelObservation> panel);
std::vector<PanelObservation> read_panel(std::string_view text);

std::string write_ground_truth(const GroundTruth& truth);
GroundTruth read_ground_truth(std::string_view text);

std::string write_experiments(std::span<const ExperimentRecord> records);
std::vector<ExperimentRecord> read_experiments(std::string_view text);

std::string write_adjusted(std::span<const AdjustedDelta> deltas);
std::string write_histogram(std::span<const HistogramBin> bins);

/// One row per coefficient, fit statistics repeated on each row.
std::string write_estimates(std::span<const EstimationResult> results);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace peerfx::csv
