#include "poscorr/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace poscorr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_count(const std::string& field, std::size_t line, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw std::invalid_argument(fmt::format("line {}: bad {} value '{}'", line, column, field));
  }
  if (v < 0.0) throw std::invalid_argument(fmt::format("line {}: negative {}", line, column));
  return v;
}

char parse_label(const std::string& field, std::size_t line) {
  if (field.size() != 1) throw std::invalid_argument(fmt::format("line {}: bad analyzer label '{}'", line, field));
  return field[0];
}

Json matrix_json(const Eigen::Matrix4d& m) {
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::Matrix4d matrix_from_json(const Json& j, std::string_view what) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument(fmt::format("{} must be a 4x4 array", what));
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    const Json& row = j.at(r);
    if (!row.is_array() || row.size() != 4) throw std::invalid_argument(fmt::format("{} must be a 4x4 array", what));
    for (int c = 0; c < 4; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

constexpr std::string_view kBasis = "HH,HV,VH,VV";

}  // namespace

double round_significant(double value, int digits) {
  if (!std::isfinite(value) || value == 0.0) return value;
  const std::string s = fmt::format("{:.{}e}", value, digits - 1);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out == 0.0 ? 0.0 : out;
}

Json rounded(const Json& j) {
  if (j.is_number_float()) return round_significant(j.get<double>());
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(rounded(v));
    return out;
  }
  if (j.is_object()) {
    Json out = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = rounded(it.value());
    return out;
  }
  return j;
}

std::string dump_json(const Json& j) { return rounded(j).dump(2) + "\n"; }

std::string format_number(double value) { return fmt::format("{}", round_significant(value)); }

Json to_json(const DensityMatrixd& rho) {
  Json j;
  j["basis"] = kBasis;
  j["real"] = matrix_json(rho.matrix().real());
  j["imag"] = matrix_json(rho.matrix().imag());
  return j;
}

DensityMatrixd density_from_json(const Json& j) {
  if (j.value("basis", std::string(kBasis)) != kBasis) throw std::invalid_argument("unsupported basis order");
  const Eigen::Matrix4d re = matrix_from_json(j.at("real"), "real");
  const Eigen::Matrix4d im = matrix_from_json(j.at("imag"), "imag");
  Matrix4c<double> m;
  m.real() = re;
  m.imag() = im;
  // Rounded entries can leave the trace a few ulps off; renormalize.
  m = 0.5 * (m + m.adjoint()).eval();
  m /= m.trace().real();
  return DensityMatrixd::from_matrix(m);
}

Json to_json(const TomographyReport& r) {
  Json j;
  j["basis"] = kBasis;
  j["real"] = matrix_json(r.real);
  j["imag"] = matrix_json(r.imag);
  j["target"] = to_string(r.target);
  j["metrics"] = {{"fidelity", r.fidelity},
                  {"purity", r.purity},
                  {"concurrence", r.concurrence},
                  {"log_likelihood", r.log_likelihood},
                  {"iterations", r.iterations},
                  {"converged", r.converged}};
  j["visibility"] = {{"hv", r.visibility_hv}, {"da", r.visibility_da}};
  j["fidelity_estimates"] = {{"note", "from average visibility, not from the reconstruction"},
                             {"werner", r.fidelity_estimate_werner},
                             {"linear", r.fidelity_estimate_linear}};
  return j;
}

TomographyReport report_from_json(const Json& j) {
  TomographyReport r;
  if (j.value("basis", std::string(kBasis)) != kBasis) throw std::invalid_argument("unsupported basis order");
  r.real = matrix_from_json(j.at("real"), "real");
  r.imag = matrix_from_json(j.at("imag"), "imag");
  r.target = parse_bell(j.at("target").get<std::string>());
  const Json& m = j.at("metrics");
  r.fidelity = m.at("fidelity").get<double>();
  r.purity = m.at("purity").get<double>();
  r.concurrence = m.at("concurrence").get<double>();
  r.log_likelihood = m.at("log_likelihood").get<double>();
  r.iterations = m.at("iterations").get<int>();
  r.converged = m.at("converged").get<bool>();
  r.visibility_hv = j.at("visibility").at("hv").get<double>();
  r.visibility_da = j.at("visibility").at("da").get<double>();
  r.fidelity_estimate_werner = j.at("fidelity_estimates").at("werner").get<double>();
  r.fidelity_estimate_linear = j.at("fidelity_estimates").at("linear").get<double>();
  return r;
}

void write_count_csv(std::ostream& out, const std::vector<CountRecord>& records) {
  out << "setting_s,setting_i,singles_s,singles_i,coincidences,integration_s\n";
  for (const auto& r : records) {
    out << r.setting.signal.label() << ',' << r.setting.idler.label() << ',' << format_number(r.singles_s) << ','
        << format_number(r.singles_i) << ',' << format_number(r.coincidences) << ','
        << fmt::format("{}", r.integration_s) << '\n';  // shortest exact form, so reloaded counts refit identically
  }
}

std::vector<CountRecord> read_count_csv(std::istream& in) {
  static const std::vector<std::string> kHeader = {"setting_s",    "setting_i", "singles_s",
                                                   "singles_i",    "coincidences", "integration_s"};
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  std::vector<CountRecord> records;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      if (fields != kHeader) {
        throw std::invalid_argument(fmt::format("line {}: expected header '{}'", number,
                                                "setting_s,setting_i,singles_s,singles_i,coincidences,integration_s"));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw std::invalid_argument(fmt::format("line {}: expected {} fields, got {}", number, kHeader.size(), fields.size()));
    }
    CountRecord r;
    r.setting = AnalyzerSetting::from_labels(parse_label(fields[0], number), parse_label(fields[1], number));
    r.singles_s = parse_count(fields[2], number, "singles_s");
    r.singles_i = parse_count(fields[3], number, "singles_i");
    r.coincidences = parse_count(fields[4], number, "coincidences");
    r.integration_s = parse_count(fields[5], number, "integration_s");
    if (!(r.integration_s > 0.0)) throw std::invalid_argument(fmt::format("line {}: integration_s must be positive", number));
    records.push_back(r);
  }
  if (!have_header) throw std::invalid_argument("count file is empty");
  return records;
}

std::vector<CountRecord> read_count_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open count file '{}'", path));
  return read_count_csv(in);
}

std::string config_digest(const SourceConfig& config) {
  const std::string text = serialize_config(config);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int k = 0; k < length; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

}  // namespace poscorr
