#pragma once

// JSON and CSV encodings of states, reports and count records.
//
// JSON numbers are rounded to 12 significant digits and objects are emitted
// with sorted keys, so equal values always produce equal files.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "poscorr/config.hpp"
#include "poscorr/detect.hpp"
#include "poscorr/qstate.hpp"
#include "poscorr/tomo.hpp"

namespace poscorr {

using Json = nlohmann::json;

double round_significant(double value, int digits = 12);

/// Recursively rounds every floating-point number.
Json rounded(const Json& j);

/// Two-space indented dump of rounded(j) with a trailing newline.
std::string dump_json(const Json& j);

/// {"basis": "HH,HV,VH,VV", "real": [[...]], "imag": [[...]]}
Json to_json(const DensityMatrixd& rho);
DensityMatrixd density_from_json(const Json& j);

Json to_json(const TomographyReport& report);
TomographyReport report_from_json(const Json& j);

/// Shortest representation of the 12-digit rounded value.
std::string format_number(double value);

/// CSV with columns setting_s, setting_i, singles_s, singles_i, coincidences,
/// integration_s. Settings use the labels H, V, D, A, R, L.
void write_count_csv(std::ostream& out, const std::vector<CountRecord>& records);
std::vector<CountRecord> read_count_csv(std::istream& in);
std::vector<CountRecord> read_count_csv(const std::string& path);

/// Hex SHA-256 of the canonical config text.
std::string config_digest(const SourceConfig& config);

}  // namespace poscorr
