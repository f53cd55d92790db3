#include "poscorr/spectra.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace poscorr {

namespace embedded {
std::string_view materials();
}

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double deg) { return deg * kPi / 180.0; }

std::size_t material_slot(Material m) { return static_cast<std::size_t>(m); }
std::size_t axis_slot(Axis a) { return a == Axis::ordinary ? 0 : 1; }

Axis parse_axis(std::string_view name) {
  if (name == "ordinary") return Axis::ordinary;
  if (name == "extraordinary") return Axis::extraordinary;
  throw std::invalid_argument(fmt::format("unknown crystal axis '{}'", name));
}

void check_angle(double theta_deg) {
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
    throw std::invalid_argument(fmt::format("angle {} deg outside [0, 90]", theta_deg));
  }
}

void check_indices(double n_o, double n_e) {
  if (!(n_o > 1.0 && n_e > 1.0)) {
    throw std::invalid_argument(fmt::format("indices must exceed 1 (n_o={}, n_e={})", n_o, n_e));
  }
}

}  // namespace

std::string_view to_string(Material m) {
  switch (m) {
    case Material::BBO: return "BBO";
    case Material::KTP: return "KTP";
    case Material::YVO4: return "YVO4";
  }
  return "?";
}

std::string_view to_string(Axis a) { return a == Axis::ordinary ? "ordinary" : "extraordinary"; }

std::string_view to_string(SpectrumShape s) { return s == SpectrumShape::gaussian ? "gaussian" : "sinc2"; }

Material parse_material(std::string_view name) {
  if (name == "BBO") return Material::BBO;
  if (name == "KTP") return Material::KTP;
  if (name == "YVO4") return Material::YVO4;
  throw std::invalid_argument(fmt::format("unknown material '{}'", name));
}

SpectrumShape parse_shape(std::string_view name) {
  if (name == "gaussian") return SpectrumShape::gaussian;
  if (name == "sinc2") return SpectrumShape::sinc2;
  throw std::invalid_argument(fmt::format("unknown spectrum shape '{}'", name));
}

double SellmeierCoefficients::index(double lambda_nm) const {
  if (!(lambda_nm >= min_nm && lambda_nm <= max_nm)) {
    throw std::domain_error(
        fmt::format("wavelength {} nm outside Sellmeier window [{}, {}] nm", lambda_nm, min_nm, max_nm));
  }
  const double l2 = (lambda_nm * 1e-3) * (lambda_nm * 1e-3);
  return std::sqrt(a + b / (l2 - c) + d * l2);
}

const MaterialDatabase& MaterialDatabase::builtin() {
  static const MaterialDatabase db = parse(embedded::materials());
  return db;
}

MaterialDatabase MaterialDatabase::parse(std::string_view text) {
  MaterialDatabase db;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string head;
    if (!(fields >> head)) continue;
    if (head == "version") {
      if (!(fields >> db.version_)) {
        throw std::runtime_error(fmt::format("materials line {}: bad version record", line_no));
      }
      continue;
    }
    std::string axis_name;
    SellmeierCoefficients k;
    if (!(fields >> axis_name >> k.a >> k.b >> k.c >> k.d >> k.min_nm >> k.max_nm)) {
      throw std::runtime_error(fmt::format("materials line {}: expected 8 fields", line_no));
    }
    if (std::string rest; fields >> rest) {
      throw std::runtime_error(fmt::format("materials line {}: trailing field '{}'", line_no, rest));
    }
    if (!(k.min_nm > 0.0 && k.max_nm > k.min_nm)) {
      throw std::runtime_error(fmt::format("materials line {}: invalid validity window", line_no));
    }
    const auto m = material_slot(parse_material(head));
    const auto a = axis_slot(parse_axis(axis_name));
    db.table_[m][a] = k;
    db.present_[m][a] = true;
  }
  if (db.version_ != 1) {
    throw std::runtime_error(fmt::format("unsupported materials format version {}", db.version_));
  }
  return db;
}

MaterialDatabase MaterialDatabase::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open materials file '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const SellmeierCoefficients& MaterialDatabase::coefficients(Material m, Axis a) const {
  if (!present_[material_slot(m)][axis_slot(a)]) {
    throw std::out_of_range(fmt::format("no {} record for {}", to_string(a), to_string(m)));
  }
  return table_[material_slot(m)][axis_slot(a)];
}

CrystalSpec MaterialDatabase::crystal(Material m, double length_mm, double cut_angle_deg) const {
  if (!(length_mm >= 0.0)) throw std::invalid_argument("crystal length must be non-negative");
  check_angle(cut_angle_deg);
  return CrystalSpec{m, length_mm, cut_angle_deg, coefficients(m, Axis::ordinary),
                     coefficients(m, Axis::extraordinary)};
}

double idler_wavelength(double lambda_p_nm, double lambda_s_nm) {
  if (!(lambda_p_nm > 0.0 && lambda_s_nm > lambda_p_nm)) {
    throw std::invalid_argument(
        fmt::format("no physical idler for pump {} nm and signal {} nm", lambda_p_nm, lambda_s_nm));
  }
  return 1.0 / (1.0 / lambda_p_nm - 1.0 / lambda_s_nm);
}

SpectralMode make_mode(double lambda_p_nm, double lambda_s_nm, double weight) {
  return SpectralMode{lambda_s_nm, idler_wavelength(lambda_p_nm, lambda_s_nm), weight};
}

double sellmeier_index(const CrystalSpec& crystal, Axis axis, double lambda_nm) {
  return axis == Axis::ordinary ? crystal.ordinary.index(lambda_nm) : crystal.extraordinary.index(lambda_nm);
}

double extraordinary_index(double n_o, double n_e, double theta_deg) {
  check_indices(n_o, n_e);
  check_angle(theta_deg);
  const double c = std::cos(deg2rad(theta_deg));
  const double s = std::sin(deg2rad(theta_deg));
  return 1.0 / std::sqrt(c * c / (n_o * n_o) + s * s / (n_e * n_e));
}

double walkoff_angle(double n_o, double n_e, double theta_deg) {
  const double n = extraordinary_index(n_o, n_e, theta_deg);
  if (theta_deg == 0.0 || theta_deg == 90.0) return 0.0;
  const double tan_rho =
      0.5 * n * n * (1.0 / (n_e * n_e) - 1.0 / (n_o * n_o)) * std::sin(2.0 * deg2rad(theta_deg));
  return std::atan(std::abs(tan_rho)) * 180.0 / kPi;
}

double walkoff_displacement(const CrystalSpec& crystal, double lambda_nm) {
  const double n_o = crystal.ordinary.index(lambda_nm);
  const double n_e = crystal.extraordinary.index(lambda_nm);
  const double rho = walkoff_angle(n_o, n_e, crystal.cut_angle_deg);
  return crystal.length_mm * 1e3 * std::tan(deg2rad(rho));
}

double mz_phase(double delta_l_um, const SpectralMode& mode) {
  return 2.0 * kPi * delta_l_um * 1e3 * (1.0 / mode.lambda_s_nm + 1.0 / mode.lambda_i_nm);
}

double psi_phase(double delta_l_um, const SpectralMode& mode) {
  return 2.0 * kPi * delta_l_um * 1e3 * (1.0 / mode.lambda_s_nm - 1.0 / mode.lambda_i_nm);
}

double birefringent_pair_phase(const CrystalSpec& crystal, const SpectralMode& mode) {
  auto retardance_per_nm = [&](double lambda_nm) {
    const double n_o = crystal.ordinary.index(lambda_nm);
    const double n_e = crystal.extraordinary.index(lambda_nm);
    return (n_o - extraordinary_index(n_o, n_e, crystal.cut_angle_deg)) / lambda_nm;
  };
  return 2.0 * kPi * crystal.length_mm * 1e6 *
         (retardance_per_nm(mode.lambda_s_nm) + retardance_per_nm(mode.lambda_i_nm));
}

SpdcSpectrum sample_spectrum(double lambda_p_nm, double center_s_nm, double fwhm_s_nm,
                             SpectrumShape shape, int n_samples) {
  if (n_samples < 3 || n_samples % 2 == 0) {
    throw std::invalid_argument(fmt::format("sample count must be odd and >= 3, got {}", n_samples));
  }
  if (!(fwhm_s_nm > 0.0)) throw std::invalid_argument("spectral FWHM must be positive");

  SpdcSpectrum spectrum{lambda_p_nm, center_s_nm, fwhm_s_nm, shape, {}};
  spectrum.samples.reserve(static_cast<std::size_t>(n_samples));

  const int half = n_samples / 2;
  const double step = 3.0 * fwhm_s_nm / half;
  // sinc²(x) falls to one half at x = 1.391557...
  constexpr double kSincHalfPoint = 1.3915573782515103;
  const double sigma = fwhm_s_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));

  double total = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double offset = k * step;
    double w = 0.0;
    if (shape == SpectrumShape::gaussian) {
      w = std::exp(-offset * offset / (2.0 * sigma * sigma));
    } else {
      const double x = 2.0 * kSincHalfPoint * offset / fwhm_s_nm;
      w = x == 0.0 ? 1.0 : std::pow(std::sin(x) / x, 2);
    }
    spectrum.samples.push_back(make_mode(lambda_p_nm, center_s_nm + offset, w));
    total += w;
  }
  for (auto& s : spectrum.samples) s.weight /= total;
  return spectrum;
}

double wrap_phase(double phase_rad) {
  double wrapped = std::remainder(phase_rad, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

}  // namespace poscorr
