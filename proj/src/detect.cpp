#include "poscorr/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace poscorr {

namespace {

double normalize_angle(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a < 0.0) a += 180.0;
  if (a >= 180.0) a -= 180.0;
  return a;
}

Eigen::Matrix2cd arm_projector(const ArmAnalyzer& arm, double extinction) {
  if (arm.open) return Eigen::Matrix2cd::Identity();
  const Eigen::Vector2cd p = arm.pass_state();
  const Eigen::Matrix2cd pass = p * p.adjoint();
  const Eigen::Matrix2cd block = Eigen::Matrix2cd::Identity() - pass;
  return (1.0 - extinction) * pass + extinction * block;
}

double transmission(const ArmAnalyzer& arm, double t) { return arm.open ? 1.0 : t; }

std::uint64_t draw_poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

}  // namespace

ArmAnalyzer ArmAnalyzer::linear(double angle_deg) { return ArmAnalyzer{normalize_angle(angle_deg), false, false}; }

ArmAnalyzer ArmAnalyzer::open_port() { return ArmAnalyzer{0.0, false, true}; }

ArmAnalyzer ArmAnalyzer::from_label(char label) {
  switch (label) {
    case 'H': return linear(0.0);
    case 'V': return linear(90.0);
    case 'D': return linear(45.0);
    case 'A': return linear(135.0);
    case 'R': return ArmAnalyzer{45.0, true, false};
    case 'L': return ArmAnalyzer{135.0, true, false};
  }
  throw std::invalid_argument(fmt::format("unknown analyzer label '{}'", label));
}

char ArmAnalyzer::label() const {
  if (open) return '-';
  if (circular) {
    if (angle_deg == 45.0) return 'R';
    if (angle_deg == 135.0) return 'L';
    return '?';
  }
  if (angle_deg == 0.0) return 'H';
  if (angle_deg == 90.0) return 'V';
  if (angle_deg == 45.0) return 'D';
  if (angle_deg == 135.0) return 'A';
  return '?';
}

Eigen::Vector2cd ArmAnalyzer::pass_state() const {
  const double t = angle_deg * std::numbers::pi / 180.0;
  Eigen::Vector2cd p;
  if (circular) {
    // Polarizer at θ behind a quarter-wave plate at 0°: effective pass state
    // diag(1, −i)·(cos θ, sin θ). R = (H − iV)/√2, L = (H + iV)/√2.
    p << std::cos(t), std::complex<double>(0.0, -std::sin(t));
  } else {
    p << std::cos(t), std::sin(t);
  }
  return p;
}

std::string_view to_string(AnalysisBasis b) {
  switch (b) {
    case AnalysisBasis::HV: return "HV";
    case AnalysisBasis::DA: return "DA";
    case AnalysisBasis::RL: return "RL";
  }
  return "?";
}

AnalyzerSetting AnalyzerSetting::linear(double signal_deg, double idler_deg, std::optional<AnalysisBasis> basis) {
  return AnalyzerSetting{ArmAnalyzer::linear(signal_deg), ArmAnalyzer::linear(idler_deg), basis};
}

AnalyzerSetting AnalyzerSetting::from_labels(char signal, char idler) {
  return AnalyzerSetting{ArmAnalyzer::from_label(signal), ArmAnalyzer::from_label(idler), std::nullopt};
}

AnalyzerSetting AnalyzerSetting::open() {
  return AnalyzerSetting{ArmAnalyzer::open_port(), ArmAnalyzer::open_port(), std::nullopt};
}

RateModel RateModel::from(const SourceOutput& out, const DetectionParams& detection) {
  RateModel r;
  r.pair_rate = out.expected_pair_rate;
  r.singles_s = out.expected_singles[0];
  r.singles_i = out.expected_singles[1];
  r.coincidence_window_s = detection.coincidence_window_ns * 1e-9;
  r.dark_rate_s = detection.dark_rate_s;
  r.dark_rate_i = detection.dark_rate_i;
  r.analyzer_transmission = detection.analyzer_transmission;
  r.extinction = detection.extinction;
  return r;
}

double coincidence_probability(const DensityMatrixd& rho, const AnalyzerSetting& setting, double extinction) {
  const Matrix4c<double> p = kron<double>(arm_projector(setting.signal, extinction),
                                          arm_projector(setting.idler, extinction));
  return std::clamp((rho.matrix() * p).trace().real(), 0.0, 1.0);
}

std::pair<double, double> single_pass_probabilities(const DensityMatrixd& rho, const AnalyzerSetting& setting,
                                                    double extinction) {
  const auto [rs, ri] = reduced_states(rho);
  const double ps = (rs * arm_projector(setting.signal, extinction)).trace().real();
  const double pi = (ri * arm_projector(setting.idler, extinction)).trace().real();
  return {std::clamp(ps, 0.0, 1.0), std::clamp(pi, 0.0, 1.0)};
}

Curve correlation_scan(const DensityMatrixd& rho, const ArmAnalyzer& signal, std::span<const double> idler_angles,
                       double extinction) {
  Curve curve;
  curve.reserve(idler_angles.size());
  for (double a : idler_angles) {
    const AnalyzerSetting s{signal, ArmAnalyzer::linear(a), std::nullopt};
    curve.push_back({a, coincidence_probability(rho, s, extinction)});
  }
  return curve;
}

Curve correlation_scan(const DensityMatrixd& rho, double signal_angle_deg, std::span<const double> idler_angles,
                       double extinction) {
  return correlation_scan(rho, ArmAnalyzer::linear(signal_angle_deg), idler_angles, extinction);
}

double visibility(const Curve& curve, VisibilityMethod method) {
  if (curve.empty()) throw std::invalid_argument("visibility of an empty curve");
  const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end(),
                                            [](const CurvePoint& a, const CurvePoint& b) { return a.value < b.value; });
  if (hi->value <= 0.0) throw std::domain_error("visibility undefined for an all-zero curve");

  if (method == VisibilityMethod::extrema || curve.size() < 8) {
    return (hi->value - lo->value) / (hi->value + lo->value);
  }
  Eigen::MatrixX3d design(curve.size(), 3);
  Eigen::VectorXd y(curve.size());
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const double t = 2.0 * curve[k].angle_deg * std::numbers::pi / 180.0;
    design.row(static_cast<Eigen::Index>(k)) << 1.0, std::cos(t), std::sin(t);
    y(static_cast<Eigen::Index>(k)) = curve[k].value;
  }
  const Eigen::Vector3d c = design.colPivHouseholderQr().solve(y);
  if (!(c(0) > 0.0)) throw std::domain_error("fitted fringe has non-positive mean");
  const double amplitude = std::hypot(c(1), c(2));
  return std::min(1.0, amplitude / c(0));
}

std::vector<double> analyzer_angles(double step_deg) {
  if (!(step_deg > 0.0)) throw std::invalid_argument("angle step must be positive");
  std::vector<double> angles;
  for (int k = 0; k * step_deg < 180.0 - 1e-9; ++k) angles.push_back(k * step_deg);
  return angles;
}

double average_visibility(const DensityMatrixd& rho, double step_deg, VisibilityMethod method) {
  const auto angles = analyzer_angles(step_deg);
  return 0.5 * (visibility(correlation_scan(rho, 0.0, angles), method) +
                visibility(correlation_scan(rho, 45.0, angles), method));
}

std::vector<CountRecord> expected_counts(const DensityMatrixd& rho, std::span<const AnalyzerSetting> settings,
                                         const RateModel& rates, double integration_s) {
  if (integration_s < 0.0) throw std::invalid_argument("integration time must be non-negative");
  std::vector<CountRecord> out;
  out.reserve(settings.size());
  for (const auto& s : settings) {
    const double ts = transmission(s.signal, rates.analyzer_transmission);
    const double ti = transmission(s.idler, rates.analyzer_transmission);
    const double p = coincidence_probability(rho, s, rates.extinction);
    const auto [ps, pi] = single_pass_probabilities(rho, s, rates.extinction);
    const double singles_s = rates.singles_s * ps * ts + rates.dark_rate_s;
    const double singles_i = rates.singles_i * pi * ti + rates.dark_rate_i;
    const double accidentals = singles_s * singles_i * rates.coincidence_window_s;
    out.push_back(CountRecord{s, singles_s * integration_s, singles_i * integration_s,
                              (rates.pair_rate * p * ts * ti + accidentals) * integration_s, integration_s});
  }
  return out;
}

std::vector<CountRecord> simulate_counts(const DensityMatrixd& rho, std::span<const AnalyzerSetting> settings,
                                         const RateModel& rates, double integration_s, std::uint64_t seed) {
  auto records = expected_counts(rho, settings, rates, integration_s);
  for (std::size_t k = 0; k < records.size(); ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    std::mt19937_64 rng(seq);
    auto& r = records[k];
    const double unpaired_s = std::max(0.0, r.singles_s - r.coincidences);
    const double unpaired_i = std::max(0.0, r.singles_i - r.coincidences);
    // Singles are the coincident photons plus an independent unpaired excess,
    // so C <= S holds for every drawn record.
    r.coincidences = static_cast<double>(draw_poisson(rng, r.coincidences));
    r.singles_s = r.coincidences + static_cast<double>(draw_poisson(rng, unpaired_s));
    r.singles_i = r.coincidences + static_cast<double>(draw_poisson(rng, unpaired_i));
  }
  return records;
}

KlyshkoRatios klyshko_ratios(std::span<const CountRecord> records) {
  double c = 0.0;
  double s = 0.0;
  double i = 0.0;
  for (const auto& r : records) {
    c += r.coincidences;
    s += r.singles_s;
    i += r.singles_i;
  }
  if (!(s > 0.0) || !(i > 0.0)) throw std::domain_error("Klyshko ratio needs non-zero singles");
  KlyshkoRatios k;
  k.signal = c / s;
  k.idler = c / i;
  // Coincidences are a thinned subset of the singles: binomial spread.
  k.signal_sigma = std::sqrt(std::max(0.0, k.signal * (1.0 - k.signal)) / s);
  k.idler_sigma = std::sqrt(std::max(0.0, k.idler * (1.0 - k.idler)) / i);
  return k;
}

KlyshkoRatios klyshko_ratios(double pair_rate, double singles_s, double singles_i) {
  if (!(singles_s > 0.0) || !(singles_i > 0.0)) throw std::domain_error("Klyshko ratio needs non-zero singles");
  return KlyshkoRatios{pair_rate / singles_s, pair_rate / singles_i, 0.0, 0.0};
}

}  // namespace poscorr
