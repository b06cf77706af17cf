#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "peerfx/synthnet.hpp"

namespace peerfx {

// Calendar: week w of the simulation is week w of the year. Month m spans
// exactly four weeks, 4(m-1)+1 .. 4m; weeks 49..52 belong to no month.
inline constexpr int kWeeksPerMonth = 4;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kWeeksPerYear = 52;

constexpr int first_week_of_month(int month) { return kWeeksPerMonth * (month - 1) + 1; }

enum class Occasion { birthday, anniversary };
enum class Group { treatment, control, excluded };

std::string_view to_string(Occasion occasion) noexcept;
std::string_view to_string(Group group) noexcept;
Occasion parse_occasion(std::string_view text);
Group parse_group(std::string_view text);

struct NotificationSchedule {
  MemberId member_id = 0;
  Occasion occasion = Occasion::birthday;
  int scheduled_week = 1;
  int scheduled_day = 0;  // 0..6

  friend bool operator==(const NotificationSchedule&, const NotificationSchedule&) = default;
};

struct GroupAssignment {
  MemberId member_id = 0;
  Occasion occasion = Occasion::birthday;
  Group group = Group::excluded;

  friend bool operator==(const GroupAssignment&, const GroupAssignment&) = default;
};

/// Treatment/control windows for the queue-order comparison, plus the
/// observational window used by the OLS and fixed-effects models.
struct WindowConfig {
  int treatment_week = 2;
  int control_week = 4;
  std::vector<int> observation_weeks{2, 3};
  int pre_period_week = 1;
  std::vector<int> observational_weeks{5, 6, 7, 8, 9, 10, 11, 12};

  void validate() const;
  /// Smallest and largest week touched by any window.
  int first_week() const;
  int last_week() const;
};

/// Load-balanced anniversary scheduling for one month: eligible members are
/// shuffled, then dealt round-robin over the month's 4 x 7 (week, day) slots.
std::vector<NotificationSchedule> schedule_anniversaries(std::span<const MemberRecord> members,
                                                         int month, std::uint64_t seed);

/// schedule_anniversaries for all twelve months, concatenated by month.
std::vector<NotificationSchedule> schedule_all_anniversaries(
    std::span<const MemberRecord> members, std::uint64_t seed);

/// Birthday notifications go out in the birth week; no randomness.
std::vector<NotificationSchedule> schedule_birthdays(std::span<const MemberRecord> members,
                                                     const WindowConfig& window);

std::vector<GroupAssignment> assign_groups(std::span<const NotificationSchedule> schedules,
                                           const WindowConfig& window);

}  // namespace peerfx
