#pragma once

// TrialRecord serialization.
//
// CSV: one row per endpoint with the columns
//   trial_id, endpoint_index, m, failure_type, z, p_value, direction,
//   censored, critical_z, nominal_alpha, h_floor, stratum, outcome
// For an observed endpoint exactly one of z / p_value is populated. A
// censored endpoint has censored = 1 and p_value holding the threshold p0
// of "p >= p0" (blank means 0.05); an interval that is not of that
// symmetric form is written as censored = "low:high". direction is "+"
// (favorable) or "-". Trial-level columns must agree across the rows of a
// trial.
//
// JSON: {"format": "enfp-trials/1", "trials": [ {...nested record...} ]}.

#include "enfp/trial.hpp"

#include "json.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace enfp {

inline constexpr const char* records_json_format = "enfp-trials/1";

// Parse errors are Error(data) naming the 1-based line of the offending row.
std::vector<TrialRecord> read_records_csv(std::istream& in);
void write_records_csv(std::ostream& out, std::span<const TrialRecord> records);

nlohmann::json records_to_json(std::span<const TrialRecord> records);
std::vector<TrialRecord> records_from_json(const nlohmann::json& doc);

// Dispatches on extension: ".json" is the nested form, anything else CSV.
std::vector<TrialRecord> read_records_file(const std::string& path);
void write_records_file(const std::string& path,
                        std::span<const TrialRecord> records);

// Minimal RFC 4180 field splitter shared by the CSV readers.
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace enfp
