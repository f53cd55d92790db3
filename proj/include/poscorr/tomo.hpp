#pragma once

// Two-qubit polarization state tomography from projective coincidence counts.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "poscorr/detect.hpp"
#include "poscorr/qstate.hpp"

namespace poscorr {

/// Ordered two-qubit projector settings.
struct TomographySettings {
  std::vector<AnalyzerSetting> settings;

  std::size_t size() const { return settings.size(); }
  /// K×16 real design matrix mapping the Pauli-product coordinates of ρ to
  /// Born-rule probabilities.
  Eigen::MatrixXd design_matrix() const;
  Eigen::Index rank() const;
};

/// 16: the James–Kwiat–Munro–White set; 36: every pair from {H, V, D, A, R, L}.
TomographySettings standard_settings(int kind);

/// Settings taken from the records, in record order.
TomographySettings settings_of(std::span<const CountRecord> records);

/// Least-squares Born-rule inversion on coincidence rates (counts divided by
/// integration time). Hermitian with unit trace; may be non-PSD. Throws when
/// the settings are not informationally complete.
Matrix4c<double> linear_inversion(std::span<const CountRecord> records);

/// Eigenvalue clipping at zero followed by trace renormalization.
DensityMatrixd project_to_physical(const Matrix4c<double>& m);

struct MleOptions {
  int max_iterations = 10000;
  double tolerance_loglik = 1e-10;   ///< on the per-count log-likelihood
  double tolerance_gradient = 1e-8;  ///< on the per-count gradient norm
  /// Weight of I/4 mixed into the initial state so every predicted
  /// probability starts strictly positive.
  double init_mixing = 1e-3;
};

struct TomographyResult {
  DensityMatrixd rho_est;
  double fidelity_to_target = 0.0;
  double purity = 0.0;
  double concurrence = 0.0;
  double log_likelihood = 0.0;  ///< Σ c_k log(p_k / Σ_j p_j)
  int iterations = 0;
  bool converged = false;
  /// Per-count log-likelihood after each accepted step, starting with the
  /// initial point.
  std::vector<double> loglik_history;
};

/// Log-likelihood of ρ under the profiled Poisson model, Σ c_k log(q_k/Σq),
/// with q_k = t_k Tr(ρ Π_k).
double log_likelihood(const DensityMatrixd& rho, std::span<const CountRecord> records);

/// Maximum-likelihood reconstruction over ρ = T†T / Tr(T†T) with lower
/// triangular T. Deterministic for a given initial state; defaults to the
/// physically projected linear-inversion estimate.
TomographyResult mle_reconstruct(std::span<const CountRecord> records, const BiphotonPure<double>& target,
                                 const MleOptions& options = {},
                                 const DensityMatrixd* init = nullptr);

/// Parameter vector layout used by the reconstruction: 4 real diagonal
/// entries, then (re, im) of the six strictly lower entries row by row.
Eigen::Matrix<double, 16, 1> cholesky_parameters(const DensityMatrixd& rho);
Matrix4c<double> lower_triangular(const Eigen::Matrix<double, 16, 1>& t);

/// Per-count log-likelihood of T†T and its analytic gradient in the 16 T parameters.
double loglik_per_count(const Eigen::Matrix<double, 16, 1>& t, std::span<const CountRecord> records,
                        Eigen::Matrix<double, 16, 1>* gradient = nullptr);

struct TomographyReport {
  Eigen::Matrix4d real;
  Eigen::Matrix4d imag;
  double fidelity = 0.0;
  double purity = 0.0;
  double concurrence = 0.0;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  Bell target = Bell::phi_plus;
  double visibility_hv = 0.0;
  double visibility_da = 0.0;
  /// Visibility-based fidelity estimates from the average visibility V̄.
  double fidelity_estimate_werner = 0.0;  ///< (1 + 3V̄)/4
  double fidelity_estimate_linear = 0.0;  ///< (1 + V̄)/2

  bool operator==(const TomographyReport&) const = default;
};

TomographyReport tomography_report(const TomographyResult& result, Bell target);

/// Random two-qubit state drawn from the Hilbert–Schmidt (Ginibre) ensemble
/// of the given rank.
DensityMatrixd random_density_matrix(std::uint64_t seed, int rank = 4);

}  // namespace poscorr
