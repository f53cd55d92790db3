#pragma once

// Dispersion and spectral phase models for the pair sources.
//
// Units follow the suffix on every name: wavelengths in nm, path differences
// and displacements in µm, crystal lengths in mm, angles in degrees unless the
// name says _rad.

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace poscorr {

/// One signal/idler wavelength pair of a sampled SPDC spectrum.
struct SpectralMode {
  double lambda_s_nm = 0.0;
  double lambda_i_nm = 0.0;
  double weight = 1.0;
};

enum class SpectrumShape { gaussian, sinc2 };

/// Deterministic, odd-count, uniform-in-λs sampling of the signal spectrum.
/// The middle sample sits exactly on center_s_nm.
struct SpdcSpectrum {
  double lambda_p_nm = 0.0;
  double center_s_nm = 0.0;
  double fwhm_s_nm = 0.0;
  SpectrumShape shape = SpectrumShape::gaussian;
  std::vector<SpectralMode> samples;

  const SpectralMode& center() const { return samples[samples.size() / 2]; }
};

enum class Material { BBO, KTP, YVO4 };
enum class Axis { ordinary, extraordinary };

std::string_view to_string(Material m);
std::string_view to_string(Axis a);
std::string_view to_string(SpectrumShape s);
Material parse_material(std::string_view name);
SpectrumShape parse_shape(std::string_view name);

/// n² = a + b / (λ² − c) + d·λ², λ in µm, valid on [min_nm, max_nm].
struct SellmeierCoefficients {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double min_nm = 0.0;
  double max_nm = 0.0;

  double index(double lambda_nm) const;
};

struct CrystalSpec {
  Material material = Material::BBO;
  double length_mm = 0.0;
  double cut_angle_deg = 0.0;
  SellmeierCoefficients ordinary;
  SellmeierCoefficients extraordinary;
};

/// Immutable table of Sellmeier records, one per material axis.
class MaterialDatabase {
 public:
  /// The table shipped in data/materials.db.
  static const MaterialDatabase& builtin();
  /// Parses the text format documented at the top of data/materials.db.
  static MaterialDatabase parse(std::string_view text);
  static MaterialDatabase load(const std::string& path);

  const SellmeierCoefficients& coefficients(Material m, Axis a) const;
  CrystalSpec crystal(Material m, double length_mm, double cut_angle_deg) const;
  int version() const { return version_; }

 private:
  std::array<std::array<SellmeierCoefficients, 2>, 3> table_{};
  std::array<std::array<bool, 2>, 3> present_{};
  int version_ = 0;
};

/// Energy conservation, 1/λi = 1/λp − 1/λs. Throws std::invalid_argument
/// when λs ≤ λp.
double idler_wavelength(double lambda_p_nm, double lambda_s_nm);

/// Pair mode satisfying energy conservation for the given pump.
SpectralMode make_mode(double lambda_p_nm, double lambda_s_nm, double weight = 1.0);

/// Throws std::domain_error outside the coefficient set's validity window.
double sellmeier_index(const CrystalSpec& crystal, Axis axis, double lambda_nm);

/// Index-ellipsoid extraordinary index at angle θ from the optic axis.
double extraordinary_index(double n_o, double n_e, double theta_deg);

/// Walk-off angle magnitude in degrees. The extraordinary beam is always
/// displaced away from the optic axis for a negative uniaxial crystal; the
/// returned value is non-negative for both signs of birefringence.
double walkoff_angle(double n_o, double n_e, double theta_deg);

/// Lateral walk-off of the extraordinary beam after the full crystal, in µm.
double walkoff_displacement(const CrystalSpec& crystal, double lambda_nm);

/// Mach-Zehnder phase 2πΔL(1/λs + 1/λi), unwrapped.
double mz_phase(double delta_l_um, const SpectralMode& mode);

/// Split-pair phase 2πΔL(1/λs − 1/λi), unwrapped.
double psi_phase(double delta_l_um, const SpectralMode& mode);

/// HH/VV phase acquired in the walk-off combiner, unwrapped:
/// 2πL[(n_o(λs) − n_eθ(λs))/λs + (n_o(λi) − n_eθ(λi))/λi].
double birefringent_pair_phase(const CrystalSpec& crystal, const SpectralMode& mode);

/// Fixed-grid sampling spanning ±3 FWHM about the center. Throws on an even or
/// too-small sample count and on fwhm ≤ 0.
SpdcSpectrum sample_spectrum(double lambda_p_nm, double center_s_nm, double fwhm_s_nm,
                             SpectrumShape shape, int n_samples);

/// Wraps to (−π, π].
double wrap_phase(double phase_rad);

}  // namespace poscorr
