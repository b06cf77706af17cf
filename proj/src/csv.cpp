#include "peerfx/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "peerfx/error.hpp"

namespace peerfx::csv {

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& what) {
  fail(ErrorKind::DataError, "row at line " + std::to_string(line) + ": " + what);
}

int parse_small(std::string_view field, std::size_t line) {
  const auto v = parse_int(field, line);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    bad_row(line, "integer out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

Table parse(std::string_view text, std::string_view header) {
  Table table;
  bool have_header = false;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() : end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!have_header) {
      if (!line.empty() && line.front() == '#') {
        table.comments.emplace_back(line);
        continue;
      }
      if (line != header) {
        fail(ErrorKind::DataError, "line " + std::to_string(line_number) + ": expected header '" +
                                       std::string(header) + "'");
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split(line);
    const auto expected = split(header).size();
    if (fields.size() != expected) {
      bad_row(line_number, "expected " + std::to_string(expected) + " fields, found " +
                               std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_number);
  }
  if (!have_header) fail(ErrorKind::InsufficientData, "empty file: missing header '" + std::string(header) + "'");
  return table;
}

double parse_double(std::string_view field, std::size_t line) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    bad_row(line, "'" + std::string(field) + "' is not a number");
  }
  return out;
}

std::int64_t parse_int(std::string_view field, std::size_t line) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    bad_row(line, "'" + std::string(field) + "' is not an integer");
  }
  return out;
}

namespace {
constexpr std::string_view kMembersHeader =
    "member_id,latent_activity,latent_sociability,birth_week,anniversary_month,country,industry,"
    "connections_decile,tenure_years";
constexpr std::string_view kEdgesHeader = "member_a,member_b";
constexpr std::string_view kSchedulesHeader = "member_id,occasion,scheduled_week,scheduled_day";
constexpr std::string_view kAssignmentsHeader = "member_id,occasion,group";
constexpr std::string_view kPanelHeader = "member_id,week,messages_received,pageviews";
constexpr std::string_view kTruthHeader = "member_id,alpha_i";
constexpr std::string_view kExperimentsHeader =
    "experiment_id,p_treatment,mean_pageviews_t,mean_pageviews_c,mean_messages_sent_t,"
    "mean_messages_sent_c,n_t,n_c,pageview_p_value";
}  // namespace

std::string write_members(std::span<const MemberRecord> members) {
  std::ostringstream out;
  out << kMembersHeader << '\n';
  for (const auto& m : members) {
    out << m.member_id << ',' << format_double(m.latent_activity) << ','
        << format_double(m.latent_sociability) << ',' << m.birth_week << ','
        << m.anniversary_month << ',' << m.country << ',' << m.industry << ','
        << m.connections_decile << ',' << m.tenure_years << '\n';
  }
  return out.str();
}

std::vector<MemberRecord> read_members(std::string_view text) {
  const auto table = parse(text, kMembersHeader);
  std::vector<MemberRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const auto line = table.line_numbers[i];
    MemberRecord m;
    m.member_id = parse_int(f[0], line);
    m.latent_activity = parse_double(f[1], line);
    m.latent_sociability = parse_double(f[2], line);
    m.birth_week = parse_small(f[3], line);
    m.anniversary_month = parse_small(f[4], line);
    m.country = parse_small(f[5], line);
    m.industry = parse_small(f[6], line);
    m.connections_decile = parse_small(f[7], line);
    m.tenure_years = parse_small(f[8], line);
    out.push_back(m);
  }
  return out;
}

std::string write_edges(const EdgeList& edges) {
  std::ostringstream out;
  out << kEdgesHeader << '\n';
  for (const auto& [a, b] : edges.edges) out << a << ',' << b << '\n';
  return out.str();
}

EdgeList read_edges(std::string_view text) {
  const auto table = parse(text, kEdgesHeader);
  EdgeList out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto line = table.line_numbers[i];
    const auto a = parse_int(table.rows[i][0], line);
    const auto b = parse_int(table.rows[i][1], line);
    if (!(a < b)) bad_row(line, "edges must satisfy member_a < member_b");
    out.edges.emplace_back(a, b);
  }
  return out;
}

std::string write_schedules(std::span<const NotificationSchedule> schedules) {
  std::ostringstream out;
  out << kSchedulesHeader << '\n';
  for (const auto& s : schedules) {
    out << s.member_id << ',' << to_string(s.occasion) << ',' << s.scheduled_week << ','
        << s.scheduled_day << '\n';
  }
  return out.str();
}

std::vector<NotificationSchedule> read_schedules(std::string_view text) {
  const auto table = parse(text, kSchedulesHeader);
  std::vector<NotificationSchedule> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const auto line = table.line_numbers[i];
    NotificationSchedule s;
    s.member_id = parse_int(f[0], line);
    try {
      s.occasion = parse_occasion(f[1]);
    } catch (const Error& e) {
      bad_row(line, e.what());
    }
    s.scheduled_week = parse_small(f[2], line);
    s.scheduled_day = parse_small(f[3], line);
    out.push_back(s);
  }
  return out;
}

std::string write_assignments(std::span<const GroupAssignment> assignments) {
  std::ostringstream out;
  out << kAssignmentsHeader << '\n';
  for (const auto& a : assignments) {
    out << a.member_id << ',' << to_string(a.occasion) << ',' << to_string(a.group) << '\n';
  }
  return out.str();
}

std::vector<GroupAssignment> read_assignments(std::string_view text) {
  const auto table = parse(text, kAssignmentsHeader);
  std::vector<GroupAssignment> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const auto line = table.line_numbers[i];
    GroupAssignment a;
    a.member_id = parse_int(f[0], line);
    try {
      a.occasion = parse_occasion(f[1]);
      a.group = parse_group(f[2]);
    } catch (const Error& e) {
      bad_row(line, e.what());
    }
    out.push_back(a);
  }
  return out;
}

std::string write_panel(std::span<const PanelObservation> panel) {
  std::ostringstream out;
  out << kPanelHeader << '\n';
  for (const auto& p : panel) {
    out << p.member_id << ',' << p.week << ',' << p.messages_received << ',' << p.pageviews << '\n';
  }
  return out.str();
}

std::vector<PanelObservation> read_panel(std::string_view text) {
  const auto table = parse(text, kPanelHeader);
  std::vector<PanelObservation> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const auto line = table.line_numbers[i];
    PanelObservation p;
    p.member_id = parse_int(f[0], line);
    p.week = parse_small(f[1], line);
    p.messages_received = parse_int(f[2], line);
    p.pageviews = parse_int(f[3], line);
    if (p.messages_received < 0 || p.pageviews < 0) bad_row(line, "counts must be non-negative");
    out.push_back(p);
  }
  return out;
}

std::string write_ground_truth(const GroundTruth& truth) {
  const auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += format_double(v[i]);
    }
    return s;
  };
  std::ostringstream out;
  out << "# true_beta = " << format_double(truth.true_beta) << '\n'
      << "# first_week = " << truth.first_week << '\n'
      << "# tau_t = " << list(truth.tau) << '\n'
      << "# shock_t = " << list(truth.shock) << '\n'
      << "# seed = " << truth.seed << '\n'
      << kTruthHeader << '\n';
  for (std::size_t i = 0; i < truth.alpha.size(); ++i) {
    out << i << ',' << format_double(truth.alpha[i]) << '\n';
  }
  return out.str();
}

GroundTruth read_ground_truth(std::string_view text) {
  const auto table = parse(text, kTruthHeader);
  GroundTruth truth;
  const auto list = [](std::string_view v) {
    std::vector<double> out;
    if (v.empty()) return out;
    std::size_t start = 0;
    while (true) {
      const auto comma = v.find(',', start);
      out.push_back(parse_double(v.substr(start, comma - start), 0));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  };
  for (const auto& c : table.comments) {
    const std::string_view line(c);
    const auto eq = line.find(" = ");
    if (line.size() < 2 || eq == std::string_view::npos) continue;
    const auto key = line.substr(2, eq - 2);
    const auto value = line.substr(eq + 3);
    if (key == "true_beta") truth.true_beta = parse_double(value, 0);
    else if (key == "first_week") truth.first_week = static_cast<int>(parse_int(value, 0));
    else if (key == "tau_t") truth.tau = list(value);
    else if (key == "shock_t") truth.shock = list(value);
    else if (key == "seed") {
      std::uint64_t seed = 0;
      std::from_chars(value.data(), value.data() + value.size(), seed);
      truth.seed = seed;
    }
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto line = table.line_numbers[i];
    if (parse_int(table.rows[i][0], line) != static_cast<std::int64_t>(i)) {
      bad_row(line, "ground truth rows must be ordered by member_id from 0");
    }
    truth.alpha.push_back(parse_double(table.rows[i][1], line));
  }
  return truth;
}

std::string write_experiments(std::span<const ExperimentRecord> records) {
  std::ostringstream out;
  out << kExperimentsHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment_id << ',' << format_double(r.p_treatment) << ','
        << format_double(r.mean_pageviews_t) << ',' << format_double(r.mean_pageviews_c) << ','
        << format_double(r.mean_messages_sent_t) << ',' << format_double(r.mean_messages_sent_c)
        << ',' << r.n_t << ',' << r.n_c << ',' << format_double(r.pageview_p_value) << '\n';
  }
  return out.str();
}

std::vector<ExperimentRecord> read_experiments(std::string_view text) {
  const auto table = parse(text, kExperimentsHeader);
  std::vector<ExperimentRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const auto line = table.line_numbers[i];
    ExperimentRecord r;
    r.experiment_id = f[0];
    if (r.experiment_id.empty()) bad_row(line, "empty experiment_id");
    r.p_treatment = parse_double(f[1], line);
    r.mean_pageviews_t = parse_double(f[2], line);
    r.mean_pageviews_c = parse_double(f[3], line);
    r.mean_messages_sent_t = parse_double(f[4], line);
    r.mean_messages_sent_c = parse_double(f[5], line);
    r.n_t = parse_int(f[6], line);
    r.n_c = parse_int(f[7], line);
    r.pageview_p_value = parse_double(f[8], line);
    if (!(r.p_treatment > 0.0 && r.p_treatment < 1.0)) bad_row(line, "p_treatment must lie in (0, 1)");
    if (r.mean_pageviews_t < 0 || r.mean_pageviews_c < 0 || r.mean_messages_sent_t < 0 ||
        r.mean_messages_sent_c < 0) {
      bad_row(line, "means must be non-negative");
    }
    if (!(r.pageview_p_value >= 0.0 && r.pageview_p_value <= 1.0)) {
      bad_row(line, "pageview_p_value must lie in [0, 1]");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string write_adjusted(std::span<const AdjustedDelta> deltas) {
  std::ostringstream out;
  out << "experiment_id,raw_delta,adjusted_delta,messages_delta,discount,error_fraction,signed_error\n";
  for (const auto& d : deltas) {
    out << d.experiment_id << ',' << format_double(d.raw_delta) << ','
        << format_double(d.adjusted_delta) << ',' << format_double(d.messages_delta) << ','
        << format_double(d.discount) << ',' << format_double(d.error_fraction) << ','
        << format_double(d.signed_error) << '\n';
  }
  return out.str();
}

std::string write_histogram(std::span<const HistogramBin> bins) {
  std::ostringstream out;
  out << "bin_low,bin_high,count\n";
  for (const auto& b : bins) {
    out << format_double(b.low) << ',' << format_double(b.high) << ',' << b.count << '\n';
  }
  return out.str();
}

std::string write_estimates(std::span<const EstimationResult> results) {
  std::ostringstream out;
  out << "model,term,estimate,std_error,t_stat,p_value,r_squared,adj_r_squared,f_statistic,"
         "n_observations\n";
  for (const auto& r : results) {
    for (const auto& c : r.coefficients) {
      out << to_string(r.model_tag) << ',' << c.name << ',' << format_double(c.estimate) << ','
          << format_double(c.std_error) << ',' << format_double(c.t_stat) << ','
          << format_double(c.p_value) << ',' << format_double(r.r_squared) << ','
          << format_double(r.adj_r_squared) << ',' << format_double(r.f_statistic) << ','
          << r.n_observations << '\n';
    }
  }
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace peerfx::csv
