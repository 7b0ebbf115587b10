#include "enfp/records_io.hpp"

#include "enfp/error.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace enfp {

namespace {

using nlohmann::json;

const std::vector<std::string> csv_columns = {
  "trial_id",  "endpoint_index", "m",        "failure_type", "z",
  "p_value",   "direction",      "censored", "critical_z",   "nominal_alpha",
  "h_floor",   "stratum",        "outcome"
};

std::string trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void data_error(std::size_t line, const std::string& what)
{
  fail(ErrorKind::data, fmt::format("row {}: {}", line, what));
}

double parse_double(const std::string& s, std::size_t line, const char* col)
{
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    data_error(line, fmt::format("column {}: '{}' is not a number", col, s));
  return value;
}

int parse_int(const std::string& s, std::size_t line, const char* col)
{
  int value = 0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    data_error(line, fmt::format("column {}: '{}' is not an integer", col, s));
  return value;
}

bool parse_direction(const std::string& s, std::size_t line)
{
  if (s.empty() || s == "+" || s == "favorable" || s == "1")
    return true;
  if (s == "-" || s == "unfavorable" || s == "0")
    return false;
  data_error(line, fmt::format("column direction: '{}' is not + or -", s));
}

std::string csv_quote(const std::string& s)
{
  if (s.find_first_of(",\"\n\r") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string num(double x)
{
  return fmt::format("{}", x);
}

struct Row
{
  std::size_t line = 0;
  std::map<std::string, std::string> fields;

  const std::string& get(const std::string& key) const
  {
    static const std::string empty;
    auto it = fields.find(key);
    return it == fields.end() ? empty : it->second;
  }
};

struct PendingTrial
{
  std::size_t first_line = 0;
  std::vector<Row> rows;
};

// Trial-level columns must be identical on every row of a trial.
const std::string& trial_level(const PendingTrial& t, const std::string& col)
{
  const std::string& first = t.rows.front().get(col);
  for (const auto& r : t.rows)
    if (r.get(col) != first)
      data_error(r.line,
                 fmt::format("column {} disagrees with row {} of the same "
                             "trial ('{}' vs '{}')",
                             col, t.first_line, r.get(col), first));
  return first;
}

EfficacyMeasure measure_from_row(const Row& r)
{
  EfficacyMeasure e;
  e.endpoint_index = parse_int(r.get("endpoint_index"), r.line, "endpoint_index");
  e.direction_favorable = parse_direction(r.get("direction"), r.line);

  const std::string& cens = r.get("censored");
  const std::string& zs = r.get("z");
  const std::string& ps = r.get("p_value");
  const bool censored = !(cens.empty() || cens == "0" || cens == "false");

  if (censored) {
    if (!zs.empty())
      data_error(r.line, "censored endpoint must not carry a z value");
    const auto colon = cens.find(':');
    if (colon != std::string::npos) {
      if (!ps.empty())
        data_error(r.line, "explicit censor interval must not carry p_value");
      Interval iv{ parse_double(trim(cens.substr(0, colon)), r.line, "censored"),
                   parse_double(trim(cens.substr(colon + 1)), r.line, "censored") };
      if (!(iv.low < iv.high))
        data_error(r.line, "censor interval must satisfy low < high");
      e.censor_interval = iv;
    } else if (cens == "1" || cens == "true") {
      const double p0 = ps.empty() ? 0.05 : parse_double(ps, r.line, "p_value");
      if (!(p0 > 0.0 && p0 < 1.0))
        data_error(r.line, "censoring threshold p_value must lie in (0, 1)");
      e.censor_interval = censored_interval(p0);
      e.p_value = p0;
    } else {
      data_error(r.line,
                 fmt::format("column censored: '{}' is not 0, 1 or low:high",
                             cens));
    }
    return e;
  }

  if (!zs.empty() && !ps.empty())
    data_error(r.line, "populate z or p_value, not both");
  if (zs.empty() && ps.empty())
    data_error(r.line, "endpoint has neither z nor p_value");
  if (!zs.empty()) {
    e.z = parse_double(zs, r.line, "z");
  } else {
    const double p = parse_double(ps, r.line, "p_value");
    if (!(p > 0.0 && p <= 1.0))
      data_error(r.line, "p_value must lie in (0, 1]");
    e.p_value = p;
    e.z = p_to_z(p, e.direction_favorable);
  }
  return e;
}

TrialRecord trial_from_rows(PendingTrial& pending, const std::string& id)
{
  TrialRecord t;
  t.trial_id = id;
  const auto line = pending.first_line;

  std::sort(pending.rows.begin(),
            pending.rows.end(),
            [](const Row& a, const Row& b) {
              return parse_int(a.get("endpoint_index"), a.line, "endpoint_index") <
                     parse_int(b.get("endpoint_index"), b.line, "endpoint_index");
            });
  for (const auto& r : pending.rows)
    t.measures.push_back(measure_from_row(r));

  const std::string& ms = trial_level(pending, "m");
  t.m = ms.empty() ? static_cast<int>(t.measures.size())
                   : parse_int(ms, line, "m");
  const std::string& ft = trial_level(pending, "failure_type");
  if (ft.empty()) {
    t.failure_type = FailureType::B;
  } else {
    try {
      t.failure_type = parse_failure_type(ft);
    } catch (const Error& e) {
      data_error(line, e.what());
    }
  }

  const std::string& alpha = trial_level(pending, "nominal_alpha");
  const std::string& hfloor = trial_level(pending, "h_floor");
  if (!alpha.empty() && !hfloor.empty())
    data_error(line, "populate nominal_alpha or h_floor, not both");

  std::vector<double> crit;
  std::size_t with_crit = 0;
  for (const auto& r : pending.rows) {
    const std::string& c = r.get("critical_z");
    if (!c.empty()) {
      ++with_crit;
      crit.push_back(parse_double(c, r.line, "critical_z"));
    }
  }
  if (with_crit != 0 && with_crit != pending.rows.size())
    data_error(line, "critical_z must be given for every endpoint or none");

  if (!alpha.empty() || !hfloor.empty()) {
    RejectionPolicy p;
    if (!alpha.empty()) {
      p.mode = PolicyMode::alpha_level;
      p.nominal_alpha = parse_double(alpha, line, "nominal_alpha");
    } else {
      p.mode = PolicyMode::h_threshold;
      p.h_floor = parse_double(hfloor, line, "h_floor");
    }
    p.critical_z = std::move(crit);
    t.policy = std::move(p);
  } else if (with_crit != 0) {
    data_error(line, "critical_z given without nominal_alpha or h_floor");
  }

  const std::string& stratum = trial_level(pending, "stratum");
  if (!stratum.empty())
    t.stratum = stratum;
  const std::string& outcome = trial_level(pending, "outcome");
  if (!outcome.empty()) {
    try {
      t.outcome = parse_outcome(outcome);
    } catch (const Error& e) {
      data_error(line, e.what());
    }
  }

  try {
    t.validate();
  } catch (const Error& e) {
    data_error(line, e.what());
  }
  return t;
}

json measure_to_json(const EfficacyMeasure& e)
{
  json j;
  j["endpoint_index"] = e.endpoint_index;
  if (e.censor_interval) {
    j["censored"] = { { "low", e.censor_interval->low },
                      { "high", e.censor_interval->high } };
    if (e.p_value)
      j["p_value"] = *e.p_value;
  } else if (e.p_value) {
    j["p_value"] = *e.p_value;
  } else if (e.z) {
    j["z"] = *e.z;
  }
  j["direction"] = e.direction_favorable ? "+" : "-";
  return j;
}

EfficacyMeasure measure_from_json(const json& j)
{
  EfficacyMeasure e;
  e.endpoint_index = j.at("endpoint_index").get<int>();
  e.direction_favorable = j.value("direction", std::string("+")) != "-";
  if (j.contains("censored")) {
    const auto& c = j.at("censored");
    e.censor_interval = Interval{ c.at("low").get<double>(),
                                  c.at("high").get<double>() };
    if (j.contains("p_value"))
      e.p_value = j.at("p_value").get<double>();
  } else if (j.contains("p_value")) {
    e.p_value = j.at("p_value").get<double>();
    e.z = p_to_z(*e.p_value, e.direction_favorable);
  } else {
    e.z = j.at("z").get<double>();
  }
  return e;
}

} // namespace

std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<TrialRecord> read_records_csv(std::istream& in)
{
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0)
      line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty())
    fail(ErrorKind::data, "empty records file (no header row)");
  for (const char* required : { "trial_id", "endpoint_index" })
    if (std::find(header.begin(), header.end(), required) == header.end())
      data_error(line_no, fmt::format("missing required column '{}'", required));

  std::vector<std::string> order;
  std::map<std::string, PendingTrial> pending;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      data_error(line_no,
                 fmt::format("{} fields for {} columns", fields.size(),
                             header.size()));
    Row row;
    row.line = line_no;
    for (std::size_t k = 0; k < header.size(); ++k)
      row.fields[header[k]] = fields[k];
    const std::string id = row.get("trial_id");
    if (id.empty())
      data_error(line_no, "empty trial_id");
    auto [it, inserted] = pending.try_emplace(id);
    if (inserted) {
      it->second.first_line = line_no;
      order.push_back(id);
    }
    it->second.rows.push_back(std::move(row));
  }
  if (order.empty())
    fail(ErrorKind::data, "records file has a header but no rows");

  std::vector<TrialRecord> out;
  out.reserve(order.size());
  for (const auto& id : order)
    out.push_back(trial_from_rows(pending.at(id), id));
  return out;
}

void write_records_csv(std::ostream& out, std::span<const TrialRecord> records)
{
  for (std::size_t k = 0; k < csv_columns.size(); ++k)
    out << (k ? "," : "") << csv_columns[k];
  out << '\n';
  for (const auto& t : records) {
    for (std::size_t j = 0; j < t.measures.size(); ++j) {
      const auto& e = t.measures[j];
      std::string z, p, cens = "0";
      if (e.censor_interval) {
        if (e.p_value) {
          cens = "1";
          p = num(*e.p_value);
        } else {
          cens = num(e.censor_interval->low) + ":" +
                 num(e.censor_interval->high);
        }
      } else if (e.p_value) {
        p = num(*e.p_value);
      } else if (e.z) {
        z = num(*e.z);
      }
      std::string crit, alpha, hfloor;
      if (t.policy) {
        if (j < t.policy->critical_z.size())
          crit = num(t.policy->critical_z[j]);
        if (t.policy->nominal_alpha)
          alpha = num(*t.policy->nominal_alpha);
        if (t.policy->h_floor)
          hfloor = num(*t.policy->h_floor);
      }
      out << csv_quote(t.trial_id) << ',' << e.endpoint_index << ',' << t.m
          << ',' << to_string(t.failure_type) << ',' << z << ',' << p << ','
          << (e.direction_favorable ? "+" : "-") << ',' << cens << ',' << crit
          << ',' << alpha << ',' << hfloor << ','
          << csv_quote(t.stratum.value_or("")) << ','
          << (t.outcome ? to_string(*t.outcome) : "") << '\n';
    }
  }
}

nlohmann::json records_to_json(std::span<const TrialRecord> records)
{
  json trials = json::array();
  for (const auto& t : records) {
    json j;
    j["trial_id"] = t.trial_id;
    j["m"] = t.m;
    j["failure_type"] = std::string(to_string(t.failure_type));
    if (t.stratum)
      j["stratum"] = *t.stratum;
    if (t.outcome)
      j["outcome"] = std::string(to_string(*t.outcome));
    if (t.policy) {
      json p;
      p["mode"] = std::string(to_string(t.policy->mode));
      p["critical_z"] = t.policy->critical_z;
      if (t.policy->nominal_alpha)
        p["nominal_alpha"] = *t.policy->nominal_alpha;
      if (t.policy->h_floor)
        p["h_floor"] = *t.policy->h_floor;
      j["policy"] = std::move(p);
    }
    json measures = json::array();
    for (const auto& e : t.measures)
      measures.push_back(measure_to_json(e));
    j["measures"] = std::move(measures);
    trials.push_back(std::move(j));
  }
  return { { "format", records_json_format }, { "trials", std::move(trials) } };
}

std::vector<TrialRecord> records_from_json(const nlohmann::json& doc)
{
  std::vector<TrialRecord> out;
  try {
    if (doc.value("format", std::string()) != records_json_format)
      fail(ErrorKind::data,
           fmt::format("unsupported records format (expected '{}')",
                       records_json_format));
    std::size_t index = 0;
    for (const auto& j : doc.at("trials")) {
      ++index;
      TrialRecord t;
      t.trial_id = j.at("trial_id").get<std::string>();
      t.m = j.at("m").get<int>();
      t.failure_type = parse_failure_type(j.at("failure_type").get<std::string>());
      if (j.contains("stratum"))
        t.stratum = j.at("stratum").get<std::string>();
      if (j.contains("outcome"))
        t.outcome = parse_outcome(j.at("outcome").get<std::string>());
      if (j.contains("policy")) {
        const auto& pj = j.at("policy");
        RejectionPolicy p;
        p.mode = parse_policy_mode(pj.at("mode").get<std::string>());
        p.critical_z = pj.value("critical_z", std::vector<double>{});
        if (pj.contains("nominal_alpha"))
          p.nominal_alpha = pj.at("nominal_alpha").get<double>();
        if (pj.contains("h_floor"))
          p.h_floor = pj.at("h_floor").get<double>();
        t.policy = std::move(p);
      }
      for (const auto& mj : j.at("measures"))
        t.measures.push_back(measure_from_json(mj));
      try {
        t.validate();
      } catch (const Error& e) {
        fail(ErrorKind::data, fmt::format("trial #{}: {}", index, e.what()));
      }
      out.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, fmt::format("malformed records JSON: {}", e.what()));
  }
  if (out.empty())
    fail(ErrorKind::data, "records JSON contains no trials");
  return out;
}

std::vector<TrialRecord> read_records_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::data, fmt::format("cannot open records file '{}'", path));
  const bool is_json =
    path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (!is_json)
    return read_records_csv(in);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, fmt::format("'{}' is not valid JSON: {}", path, e.what()));
  }
  return records_from_json(doc);
}

void write_records_file(const std::string& path,
                        std::span<const TrialRecord> records)
{
  std::ofstream out(path);
  if (!out)
    fail(ErrorKind::data, fmt::format("cannot write '{}'", path));
  const bool is_json =
    path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (is_json)
    out << records_to_json(records).dump(2) << '\n';
  else
    write_records_csv(out, records);
}

} // namespace enfp
