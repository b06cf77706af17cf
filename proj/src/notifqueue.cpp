#include "peerfx/notifqueue.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "peerfx/error.hpp"
#include "peerfx/random.hpp"

namespace peerfx {

std::string_view to_string(Occasion occasion) noexcept {
  return occasion == Occasion::birthday ? "birthday" : "anniversary";
}

std::string_view to_string(Group group) noexcept {
  switch (group) {
    case Group::treatment: return "treatment";
    case Group::control: return "control";
    case Group::excluded: return "excluded";
  }
  return "excluded";
}

Occasion parse_occasion(std::string_view text) {
  if (text == "birthday") return Occasion::birthday;
  if (text == "anniversary") return Occasion::anniversary;
  fail(ErrorKind::DataError, "unknown occasion '" + std::string(text) + "'");
}

Group parse_group(std::string_view text) {
  if (text == "treatment") return Group::treatment;
  if (text == "control") return Group::control;
  if (text == "excluded") return Group::excluded;
  fail(ErrorKind::DataError, "unknown group '" + std::string(text) + "'");
}

void WindowConfig::validate() const {
  const auto in = [](const std::vector<int>& weeks, int w) {
    return std::find(weeks.begin(), weeks.end(), w) != weeks.end();
  };
  if (observation_weeks.empty()) fail(ErrorKind::ConfigError, "observation_weeks is empty");
  if (!std::is_sorted(observation_weeks.begin(), observation_weeks.end()) ||
      std::adjacent_find(observation_weeks.begin(), observation_weeks.end()) !=
          observation_weeks.end()) {
    fail(ErrorKind::ConfigError, "observation_weeks must be strictly increasing");
  }
  if (!in(observation_weeks, treatment_week)) {
    fail(ErrorKind::ConfigError, "treatment_week must be one of observation_weeks");
  }
  if (in(observation_weeks, control_week)) {
    fail(ErrorKind::ConfigError, "control_week must lie outside observation_weeks");
  }
  if (pre_period_week >= observation_weeks.front()) {
    fail(ErrorKind::ConfigError, "pre_period_week must precede observation_weeks");
  }
  if (!std::is_sorted(observational_weeks.begin(), observational_weeks.end()) ||
      std::adjacent_find(observational_weeks.begin(), observational_weeks.end()) !=
          observational_weeks.end()) {
    fail(ErrorKind::ConfigError, "observational_weeks must be strictly increasing");
  }
  for (int w : observational_weeks) {
    if (in(observation_weeks, w) || w == control_week || w == pre_period_week) {
      fail(ErrorKind::ConfigError,
           "observational_weeks must not overlap the notification windows (week " +
               std::to_string(w) + ")");
    }
  }
  if (first_week() < 1 || last_week() > kWeeksPerYear) {
    fail(ErrorKind::ConfigError, "window weeks must lie in 1..52");
  }
}

int WindowConfig::first_week() const {
  int lo = std::min({treatment_week, control_week, pre_period_week, observation_weeks.front()});
  if (!observational_weeks.empty()) lo = std::min(lo, observational_weeks.front());
  return lo;
}

int WindowConfig::last_week() const {
  int hi = std::max({treatment_week, control_week, pre_period_week, observation_weeks.back()});
  if (!observational_weeks.empty()) hi = std::max(hi, observational_weeks.back());
  return hi;
}

std::vector<NotificationSchedule> schedule_anniversaries(std::span<const MemberRecord> members,
                                                         int month, std::uint64_t seed) {
  require(month >= 1 && month <= 12, "schedule_anniversaries: month must be in 1..12");
  std::vector<MemberId> eligible;
  for (const auto& m : members) {
    if (m.anniversary_month == month) eligible.push_back(m.member_id);
  }
  std::sort(eligible.begin(), eligible.end());
  Engine engine = make_engine(seed, Stream::Anniversary, static_cast<std::uint64_t>(month));
  std::shuffle(eligible.begin(), eligible.end(), engine);

  std::vector<NotificationSchedule> out;
  out.reserve(eligible.size());
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    const int week_slot = static_cast<int>(k % kWeeksPerMonth);
    const int day = static_cast<int>((k / kWeeksPerMonth) % kDaysPerWeek);
    out.push_back({eligible[k], Occasion::anniversary, first_week_of_month(month) + week_slot, day});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.member_id < b.member_id; });
  return out;
}

std::vector<NotificationSchedule> schedule_all_anniversaries(
    std::span<const MemberRecord> members, std::uint64_t seed) {
  std::vector<NotificationSchedule> out;
  out.reserve(members.size());
  for (int month = 1; month <= 12; ++month) {
    auto part = schedule_anniversaries(members, month, seed);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<NotificationSchedule> schedule_birthdays(std::span<const MemberRecord> members,
                                                     const WindowConfig& /*window*/) {
  std::vector<NotificationSchedule> out;
  out.reserve(members.size());
  for (const auto& m : members) {
    if (m.birth_week < 1 || m.birth_week > kWeeksPerYear) {
      fail(ErrorKind::InvalidArgument, "member " + std::to_string(m.member_id) +
                                           ": birth_week " + std::to_string(m.birth_week) +
                                           " outside 1..52");
    }
    // Day of birth is not modelled; spread members over the week by id.
    out.push_back({m.member_id, Occasion::birthday, m.birth_week,
                   static_cast<int>(m.member_id % kDaysPerWeek)});
  }
  return out;
}

std::vector<GroupAssignment> assign_groups(std::span<const NotificationSchedule> schedules,
                                           const WindowConfig& window) {
  window.validate();
  std::set<std::pair<MemberId, Occasion>> seen;
  std::vector<GroupAssignment> out;
  out.reserve(schedules.size());
  for (const auto& s : schedules) {
    if (!seen.emplace(s.member_id, s.occasion).second) {
      fail(ErrorKind::DataError, "member " + std::to_string(s.member_id) +
                                     " scheduled twice for " + std::string(to_string(s.occasion)));
    }
    Group group = Group::excluded;
    if (s.scheduled_week == window.treatment_week) {
      group = Group::treatment;
    } else if (s.scheduled_week == window.control_week) {
      group = Group::control;
    }
    out.push_back({s.member_id, s.occasion, group});
  }
  return out;
}

}  // namespace peerfx
