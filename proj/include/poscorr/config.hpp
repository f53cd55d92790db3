#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "poscorr/qstate.hpp"
#include "poscorr/spectra.hpp"

namespace poscorr {

enum class SourceKind { interferometer, compact, psi };
enum class Imaging { four_f, two_f };

std::string_view to_string(SourceKind k);
std::string_view to_string(Imaging i);

struct SpectrumParams {
  double center_s_nm = 792.0;
  double fwhm_s_nm = 2.0;
  SpectrumShape shape = SpectrumShape::gaussian;
  int samples = 41;

  bool operator==(const SpectrumParams&) const = default;
};

struct CombinerParams {
  Material material = Material::BBO;
  double length_mm = 4.0;
  double cut_angle_deg = 28.8;

  bool operator==(const CombinerParams&) const = default;
};

struct DetectionParams {
  double coincidence_window_ns = 0.0;  ///< 0 disables accidentals
  double dark_rate_s = 0.0;            ///< counts/s
  double dark_rate_i = 0.0;
  double analyzer_transmission = 1.0;  ///< per arm
  double extinction = 0.0;             ///< leakage of the blocked polarization

  bool operator==(const DetectionParams&) const = default;
};

/// Everything one source pipeline needs. Keys in the config file match the
/// member names; spectrum, combiner and detection live in their own sections.
struct SourceConfig {
  SourceKind source = SourceKind::interferometer;
  Imaging imaging = Imaging::four_f;
  Bell target = Bell::phi_plus;
  double lambda_p_nm = 405.0;
  SpectrumParams spectrum;
  double pump_waist_um = 150.0;
  double collection_waist_um = 75.0;
  double delta_l_um = 0.0;
  double wedge_offset_um = 0.0;
  double defocus_mix = 0.0;
  double shwp_loss_width_um = 0.0;
  CombinerParams combiner;
  double phase_offset_rad = 0.0;
  bool phase_lock = true;
  double lock_jitter_rad = 0.0;
  double eta_coupling_x1 = 1.0;
  double eta_coupling_x2 = 1.0;
  double eta_detector_s = 1.0;
  double eta_detector_i = 1.0;
  double pair_rate_per_mW = 1.0e6;
  double pump_power_mW = 1.0;
  DetectionParams detection;

  bool operator==(const SourceConfig&) const = default;
};

/// Validation or parse failure; `field()` names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Throws ConfigError naming the first invalid field.
void validate(const SourceConfig& config);

SourceConfig parse_config(std::string_view text);
SourceConfig load_config(const std::string& path);
/// Shipped presets: fig1-interferometer, fig2-compact, psi-2f.
SourceConfig load_preset(std::string_view name);
std::vector<std::string> preset_names();

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const SourceConfig& config);

/// Scalar fields addressable by scan, as "key" or "section.key".
std::vector<std::string> scannable_parameters();
double get_parameter(const SourceConfig& config, std::string_view name);
void set_parameter(SourceConfig& config, std::string_view name, double value);

}  // namespace poscorr
