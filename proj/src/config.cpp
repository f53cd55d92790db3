#include "poscorr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace poscorr {

namespace embedded {
const std::map<std::string, std::string_view>& presets();
}

namespace {

using DoubleRef = double& (*)(SourceConfig&);

struct NumericField {
  std::string_view key;
  DoubleRef ref;
};

// Order here is the serialization order within each section.
const std::vector<NumericField>& numeric_fields() {
  static const std::vector<NumericField> fields{
      {"lambda_p_nm", +[](SourceConfig& c) -> double& { return c.lambda_p_nm; }},
      {"pump_waist_um", +[](SourceConfig& c) -> double& { return c.pump_waist_um; }},
      {"collection_waist_um", +[](SourceConfig& c) -> double& { return c.collection_waist_um; }},
      {"delta_l_um", +[](SourceConfig& c) -> double& { return c.delta_l_um; }},
      {"wedge_offset_um", +[](SourceConfig& c) -> double& { return c.wedge_offset_um; }},
      {"defocus_mix", +[](SourceConfig& c) -> double& { return c.defocus_mix; }},
      {"shwp_loss_width_um", +[](SourceConfig& c) -> double& { return c.shwp_loss_width_um; }},
      {"phase_offset_rad", +[](SourceConfig& c) -> double& { return c.phase_offset_rad; }},
      {"lock_jitter_rad", +[](SourceConfig& c) -> double& { return c.lock_jitter_rad; }},
      {"eta_coupling_x1", +[](SourceConfig& c) -> double& { return c.eta_coupling_x1; }},
      {"eta_coupling_x2", +[](SourceConfig& c) -> double& { return c.eta_coupling_x2; }},
      {"eta_detector_s", +[](SourceConfig& c) -> double& { return c.eta_detector_s; }},
      {"eta_detector_i", +[](SourceConfig& c) -> double& { return c.eta_detector_i; }},
      {"pair_rate_per_mW", +[](SourceConfig& c) -> double& { return c.pair_rate_per_mW; }},
      {"pump_power_mW", +[](SourceConfig& c) -> double& { return c.pump_power_mW; }},
      {"spectrum.center_s_nm", +[](SourceConfig& c) -> double& { return c.spectrum.center_s_nm; }},
      {"spectrum.fwhm_s_nm", +[](SourceConfig& c) -> double& { return c.spectrum.fwhm_s_nm; }},
      {"combiner.length_mm", +[](SourceConfig& c) -> double& { return c.combiner.length_mm; }},
      {"combiner.cut_angle_deg", +[](SourceConfig& c) -> double& { return c.combiner.cut_angle_deg; }},
      {"detection.coincidence_window_ns",
       +[](SourceConfig& c) -> double& { return c.detection.coincidence_window_ns; }},
      {"detection.dark_rate_s", +[](SourceConfig& c) -> double& { return c.detection.dark_rate_s; }},
      {"detection.dark_rate_i", +[](SourceConfig& c) -> double& { return c.detection.dark_rate_i; }},
      {"detection.analyzer_transmission",
       +[](SourceConfig& c) -> double& { return c.detection.analyzer_transmission; }},
      {"detection.extinction", +[](SourceConfig& c) -> double& { return c.detection.extinction; }},
  };
  return fields;
}

const NumericField* find_numeric(std::string_view key) {
  for (const auto& f : numeric_fields())
    if (f.key == key) return &f;
  return nullptr;
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw ConfigError(key, fmt::format("expected a number, got '{}'", text));
  }
  return value;
}

int parse_int(const std::string& key, const std::string& text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(key, fmt::format("expected an integer, got '{}'", text));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(key, fmt::format("expected true or false, got '{}'", text));
}

SourceKind parse_source(const std::string& key, const std::string& text) {
  if (text == "interferometer") return SourceKind::interferometer;
  if (text == "compact") return SourceKind::compact;
  if (text == "psi") return SourceKind::psi;
  throw ConfigError(key, fmt::format("unknown source '{}'", text));
}

Imaging parse_imaging(const std::string& key, const std::string& text) {
  if (text == "4f") return Imaging::four_f;
  if (text == "2f") return Imaging::two_f;
  throw ConfigError(key, fmt::format("unknown imaging '{}'", text));
}

template <typename F>
auto rethrow_as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

void assign(SourceConfig& c, const std::string& key, const std::string& value) {
  if (const auto* f = find_numeric(key)) {
    f->ref(c) = parse_double(key, value);
  } else if (key == "source") {
    c.source = parse_source(key, value);
  } else if (key == "imaging") {
    c.imaging = parse_imaging(key, value);
  } else if (key == "target") {
    c.target = rethrow_as_config(key, [&] { return parse_bell(value); });
  } else if (key == "phase_lock") {
    c.phase_lock = parse_bool(key, value);
  } else if (key == "spectrum.shape") {
    c.spectrum.shape = rethrow_as_config(key, [&] { return parse_shape(value); });
  } else if (key == "spectrum.samples") {
    c.spectrum.samples = parse_int(key, value);
  } else if (key == "combiner.material") {
    c.combiner.material = rethrow_as_config(key, [&] { return parse_material(value); });
  } else {
    throw ConfigError(key, "unknown key");
  }
}

void require(bool ok, std::string_view field, std::string_view message) {
  if (!ok) throw ConfigError(std::string(field), std::string(message));
}

void require_fraction(double v, std::string_view field) {
  require(v >= 0.0 && v <= 1.0, field, fmt::format("must lie in [0, 1], got {}", v));
}

}  // namespace

std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::interferometer: return "interferometer";
    case SourceKind::compact: return "compact";
    case SourceKind::psi: return "psi";
  }
  return "?";
}

std::string_view to_string(Imaging i) { return i == Imaging::four_f ? "4f" : "2f"; }

void validate(const SourceConfig& c) {
  require(c.lambda_p_nm > 0.0, "lambda_p_nm", "must be positive");
  require(c.spectrum.fwhm_s_nm > 0.0, "spectrum.fwhm_s_nm", "must be positive");
  require(c.spectrum.samples >= 3 && c.spectrum.samples % 2 == 1, "spectrum.samples", "must be odd and >= 3");
  require(c.spectrum.center_s_nm - 3.0 * c.spectrum.fwhm_s_nm > c.lambda_p_nm, "spectrum.center_s_nm",
          "sampled signal band must lie above the pump wavelength");
  require(c.pump_waist_um > 0.0, "pump_waist_um", "must be positive");
  require(c.collection_waist_um > 0.0, "collection_waist_um", "must be positive");
  require_fraction(c.defocus_mix, "defocus_mix");
  require(c.shwp_loss_width_um >= 0.0, "shwp_loss_width_um", "must be non-negative");
  require(c.lock_jitter_rad >= 0.0, "lock_jitter_rad", "must be non-negative");
  require(c.combiner.length_mm >= 0.0, "combiner.length_mm", "must be non-negative");
  require(c.combiner.cut_angle_deg >= 0.0 && c.combiner.cut_angle_deg <= 90.0, "combiner.cut_angle_deg",
          "must lie in [0, 90]");
  require_fraction(c.eta_coupling_x1, "eta_coupling_x1");
  require_fraction(c.eta_coupling_x2, "eta_coupling_x2");
  require_fraction(c.eta_detector_s, "eta_detector_s");
  require_fraction(c.eta_detector_i, "eta_detector_i");
  require(c.pair_rate_per_mW >= 0.0, "pair_rate_per_mW", "must be non-negative");
  require(c.pump_power_mW >= 0.0, "pump_power_mW", "must be non-negative");
  require(c.detection.coincidence_window_ns >= 0.0, "detection.coincidence_window_ns", "must be non-negative");
  require(c.detection.dark_rate_s >= 0.0, "detection.dark_rate_s", "must be non-negative");
  require(c.detection.dark_rate_i >= 0.0, "detection.dark_rate_i", "must be non-negative");
  require_fraction(c.detection.analyzer_transmission, "detection.analyzer_transmission");
  require(c.detection.extinction >= 0.0 && c.detection.extinction <= 0.5, "detection.extinction",
          "must lie in [0, 0.5]");
  require(c.source != SourceKind::psi || c.imaging == Imaging::two_f, "imaging",
          "the split-pair source needs 2f imaging");
  require(c.source == SourceKind::psi || c.imaging == Imaging::four_f, "imaging",
          "position-sorting sources need 4f imaging");
}

SourceConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", fmt::format("parse error at line {}: {}", e.line(), e.message()));
  }
  SourceConfig c;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      assign(c, key, node.data());
      continue;
    }
    if (key != "spectrum" && key != "combiner" && key != "detection") {
      throw ConfigError(key, "unknown section");
    }
    for (const auto& [sub, leaf] : node) {
      const std::string path = key + "." + sub;
      if (!leaf.empty()) throw ConfigError(path, "nested sections are not supported");
      assign(c, path, leaf.data());
    }
  }
  validate(c);
  return c;
}

SourceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot open config file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

SourceConfig load_preset(std::string_view name) {
  const auto& table = embedded::presets();
  auto it = table.find(std::string(name));
  if (it == table.end()) throw ConfigError("", fmt::format("unknown preset '{}'", name));
  return parse_config(it->second);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, body] : embedded::presets()) names.push_back(name);
  return names;
}

std::string serialize_config(const SourceConfig& config) {
  SourceConfig c = config;
  std::string out;
  out += fmt::format("source = {}\n", to_string(c.source));
  out += fmt::format("imaging = {}\n", to_string(c.imaging));
  out += fmt::format("target = {}\n", to_string(c.target));
  out += fmt::format("phase_lock = {}\n", c.phase_lock ? "true" : "false");
  std::string section;
  auto emit_section = [&](std::string_view name) {
    out += fmt::format("\n[{}]\n", name);
    if (name == "spectrum") {
      out += fmt::format("shape = {}\n", to_string(c.spectrum.shape));
      out += fmt::format("samples = {}\n", c.spectrum.samples);
    } else if (name == "combiner") {
      out += fmt::format("material = {}\n", to_string(c.combiner.material));
    }
  };
  for (const auto& f : numeric_fields()) {
    const auto dot = f.key.find('.');
    const std::string_view sec = dot == std::string_view::npos ? "" : f.key.substr(0, dot);
    if (sec != section) {
      section = std::string(sec);
      emit_section(sec);
    }
    const auto leaf = dot == std::string_view::npos ? f.key : f.key.substr(dot + 1);
    out += fmt::format("{} = {}\n", leaf, f.ref(c));
  }
  return out;
}

std::vector<std::string> scannable_parameters() {
  std::vector<std::string> names;
  for (const auto& f : numeric_fields()) names.emplace_back(f.key);
  return names;
}

double get_parameter(const SourceConfig& config, std::string_view name) {
  const auto* f = find_numeric(name);
  if (!f) throw std::invalid_argument(fmt::format("unknown scan parameter '{}'", name));
  SourceConfig copy = config;
  return f->ref(copy);
}

void set_parameter(SourceConfig& config, std::string_view name, double value) {
  const auto* f = find_numeric(name);
  if (!f) throw std::invalid_argument(fmt::format("unknown scan parameter '{}'", name));
  f->ref(config) = value;
}

}  // namespace poscorr
