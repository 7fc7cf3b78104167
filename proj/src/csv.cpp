#include "rankmctp/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace rankmctp {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

int level_index(std::vector<std::string>& levels, const std::string& name,
                bool frozen, const char* what) {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == name) return static_cast<int>(i);
  if (frozen)
    throw validation_error("UNKNOWN_LEVEL",
                           std::string(what) + " level '" + name +
                               "' not in the requested ordering");
  levels.push_back(name);
  return static_cast<int>(levels.size()) - 1;
}

}  // namespace

Dataset ingest_long_csv(std::istream& in, const IngestOptions& opts) {
  std::string line;
  if (!std::getline(in, line))
    throw validation_error("EMPTY_INPUT", "empty CSV input");
  const auto header = split_csv_line(line);
  int col_subject = -1, col_group = -1, col_time = -1, col_value = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto h = trim(header[i]);
    if (h == opts.columns.subject) col_subject = static_cast<int>(i);
    if (h == opts.columns.group) col_group = static_cast<int>(i);
    if (h == opts.columns.time) col_time = static_cast<int>(i);
    if (h == opts.columns.value) col_value = static_cast<int>(i);
  }
  if (col_subject < 0 || col_group < 0 || col_time < 0 || col_value < 0)
    throw validation_error("MISSING_COLUMN", "CSV header lacks a mapped column");

  std::vector<std::string> groups = opts.group_order;
  std::vector<std::string> times = opts.time_order;
  const bool groups_frozen = !groups.empty();
  const bool times_frozen = !times.empty();

  // (group, subject) -> per-time values
  struct SubjectRow {
    std::vector<double> vals;
    std::vector<bool> seen;
  };
  std::vector<std::map<std::string, SubjectRow>> per_group_subjects;
  std::vector<std::vector<std::string>> subject_order;  // insertion order per group

  struct RawRow {
    int g, t;
    std::string subj;
    double v;
  };
  std::vector<RawRow> rows;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const auto need = static_cast<std::size_t>(
        std::max(std::max(col_subject, col_group), std::max(col_time, col_value)));
    if (fields.size() <= need)
      throw validation_error("BAD_ROW", "line " + std::to_string(lineno) +
                                            ": too few fields");
    const std::string gname = trim(fields[col_group]);
    const std::string tname = trim(fields[col_time]);
    const std::string sname = trim(fields[col_subject]);
    const std::string vtext = trim(fields[col_value]);
    double v = 0;
    const char* begin = vtext.data();
    const char* end = begin + vtext.size();
    auto [p, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || p != end || !std::isfinite(v))
      throw validation_error("NON_NUMERIC_VALUE",
                             "line " + std::to_string(lineno) +
                                 ": value '" + vtext + "' is not numeric");
    const int g = level_index(groups, gname, groups_frozen, "group");
    const int t = level_index(times, tname, times_frozen, "time");
    rows.push_back({g, t, sname, v});
  }

  const int a = static_cast<int>(groups.size());
  const int d = static_cast<int>(times.size());
  if (a == 0 || d == 0)
    throw validation_error("EMPTY_INPUT", "CSV contains no data rows");

  per_group_subjects.resize(a);
  subject_order.resize(a);
  for (const auto& r : rows) {
    auto& subj_map = per_group_subjects[r.g];
    auto it = subj_map.find(r.subj);
    if (it == subj_map.end()) {
      it = subj_map.emplace(r.subj, SubjectRow{std::vector<double>(d, 0.0),
                                               std::vector<bool>(d, false)}).first;
      subject_order[r.g].push_back(r.subj);
    }
    if (it->second.seen[r.t])
      throw validation_error("DUPLICATE_CELL",
                             "subject '" + r.subj + "' has more than one value at time '" +
                                 times[r.t] + "'");
    it->second.seen[r.t] = true;
    it->second.vals[r.t] = r.v;
  }

  Design design;
  design.a = a;
  design.d = d;
  std::vector<Eigen::MatrixXd> values;
  for (int i = 0; i < a; ++i) {
    const int ni = static_cast<int>(subject_order[i].size());
    design.n.push_back(ni);
    Eigen::MatrixXd block(ni, d);
    for (int k = 0; k < ni; ++k) {
      const auto& row = per_group_subjects[i][subject_order[i][k]];
      for (int j = 0; j < d; ++j) {
        if (!row.seen[j])
          throw validation_error("MISSING_CELL",
                                 "subject '" + subject_order[i][k] +
                                     "' lacks a value at time '" + times[j] + "'");
        block(k, j) = row.vals[j];
      }
    }
    values.push_back(std::move(block));
  }
  return Dataset(std::move(design), std::move(values), std::move(groups),
                 std::move(times), std::move(subject_order));
}

Dataset ingest_long_csv_file(const std::string& path, const IngestOptions& opts) {
  std::ifstream in(path);
  if (!in) throw validation_error("NO_SUCH_FILE", "cannot open '" + path + "'");
  return ingest_long_csv(in, opts);
}

void write_long_csv(std::ostream& out, const Dataset& data, const ColumnMapping& columns) {
  out << columns.subject << ',' << columns.group << ',' << columns.time << ','
      << columns.value << '\n';
  const auto& dz = data.design();
  for (int i = 0; i < dz.a; ++i) {
    for (int k = 0; k < dz.n[i]; ++k) {
      const std::string subj = data.subject_names().empty()
                                   ? std::to_string(k + 1)
                                   : data.subject_names()[i][k];
      for (int j = 0; j < dz.d; ++j) {
        std::ostringstream v;
        v.precision(17);
        v << data.value(i, j, k);
        out << subj << ',' << data.group_names()[i] << ','
            << data.time_names()[j] << ',' << v.str() << '\n';
      }
    }
  }
}

}  // namespace rankmctp
