#pragma once

// Polarization analysis and photon counting.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poscorr/config.hpp"
#include "poscorr/qstate.hpp"
#include "poscorr/sources.hpp"

namespace poscorr {

/// Analyzer in one arm: a linear polarizer at `angle_deg`, optionally preceded
/// by a quarter-wave plate at 0° so that 45° passes R and 135° passes L, or no
/// analyzer at all (`open`).
struct ArmAnalyzer {
  double angle_deg = 0.0;
  bool circular = false;
  bool open = false;

  static ArmAnalyzer linear(double angle_deg);
  static ArmAnalyzer open_port();
  /// One of H, V, D, A, R, L.
  static ArmAnalyzer from_label(char label);
  /// Inverse of from_label; '-' for an open port, '?' for other linear angles.
  char label() const;
  /// Jones vector of the transmitted polarization.
  Eigen::Vector2cd pass_state() const;
};

enum class AnalysisBasis { HV, DA, RL };

std::string_view to_string(AnalysisBasis b);

struct AnalyzerSetting {
  ArmAnalyzer signal;
  ArmAnalyzer idler;
  std::optional<AnalysisBasis> basis;

  static AnalyzerSetting linear(double signal_deg, double idler_deg,
                                std::optional<AnalysisBasis> basis = std::nullopt);
  static AnalyzerSetting from_labels(char signal, char idler);
  static AnalyzerSetting open();
};

/// Counts (or, for noiseless studies, expected counts) over one window.
struct CountRecord {
  AnalyzerSetting setting;
  double singles_s = 0.0;
  double singles_i = 0.0;
  double coincidences = 0.0;
  double integration_s = 0.0;
};

/// Detected-rate inputs for count simulation.
struct RateModel {
  double pair_rate = 0.0;
  double singles_s = 0.0;
  double singles_i = 0.0;
  double coincidence_window_s = 0.0;
  double dark_rate_s = 0.0;
  double dark_rate_i = 0.0;
  double analyzer_transmission = 1.0;
  double extinction = 0.0;

  static RateModel from(const SourceOutput& out, const DetectionParams& detection = {});
};

/// Tr(ρ · P_s ⊗ P_i). `extinction` leaks that fraction of the blocked
/// polarization through each analyzer.
double coincidence_probability(const DensityMatrixd& rho, const AnalyzerSetting& setting,
                               double extinction = 0.0);

/// Marginal pass probabilities (signal, idler).
std::pair<double, double> single_pass_probabilities(const DensityMatrixd& rho, const AnalyzerSetting& setting,
                                                    double extinction = 0.0);

struct CurvePoint {
  double angle_deg;
  double value;
};
using Curve = std::vector<CurvePoint>;

/// Fixed-signal correlation fringe. Circular signal analyzers are allowed.
Curve correlation_scan(const DensityMatrixd& rho, const ArmAnalyzer& signal, std::span<const double> idler_angles,
                       double extinction = 0.0);
Curve correlation_scan(const DensityMatrixd& rho, double signal_angle_deg, std::span<const double> idler_angles,
                       double extinction = 0.0);

enum class VisibilityMethod { fit, extrema };

/// (max − min)/(max + min). With eight or more points and the fit method, the
/// extremes come from a least-squares fit of a + b·cos2θ + c·sin2θ; otherwise
/// the raw extremes are used. Throws on an empty or all-zero curve.
double visibility(const Curve& curve, VisibilityMethod method = VisibilityMethod::fit);

/// Idler angles 0, step, ..., < 180.
std::vector<double> analyzer_angles(double step_deg);

/// Average of the HV (signal 0°) and DA (signal 45°) fringe visibilities.
double average_visibility(const DensityMatrixd& rho, double step_deg = 10.0,
                          VisibilityMethod method = VisibilityMethod::fit);

/// Poisson counts for each setting. Record k draws from its own generator
/// seeded from (seed, k), so results do not depend on evaluation order.
std::vector<CountRecord> simulate_counts(const DensityMatrixd& rho, std::span<const AnalyzerSetting> settings,
                                         const RateModel& rates, double integration_s, std::uint64_t seed);

/// Expected counts without noise, same layout as simulate_counts.
std::vector<CountRecord> expected_counts(const DensityMatrixd& rho, std::span<const AnalyzerSetting> settings,
                                         const RateModel& rates, double integration_s);

struct KlyshkoRatios {
  double signal = 0.0;  ///< C / S_signal, estimates the idler arm efficiency
  double idler = 0.0;   ///< C / S_idler, estimates the signal arm efficiency
  double signal_sigma = 0.0;
  double idler_sigma = 0.0;
};

/// Pooled over records. Throws when either pooled singles count is zero.
KlyshkoRatios klyshko_ratios(std::span<const CountRecord> records);
/// From expected rates. Throws when either singles rate is zero.
KlyshkoRatios klyshko_ratios(double pair_rate, double singles_s, double singles_i);

}  // namespace poscorr
