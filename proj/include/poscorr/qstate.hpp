#pragma once

// Two-qubit polarization states.
//
// Basis order is fixed everywhere as (HH, HV, VH, VV): index = 2·signal + idler
// with H = 0 and V = 1. Kronecker products, tomography projectors and the JSON
// encoding all rely on this ordering.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "poscorr/spectra.hpp"

namespace poscorr {

template <typename Real>
using Complex = std::complex<Real>;
template <typename Real>
using Ket4 = Eigen::Matrix<Complex<Real>, 4, 1>;
template <typename Real>
using Matrix4c = Eigen::Matrix<Complex<Real>, 4, 4>;
template <typename Real>
using Matrix2c = Eigen::Matrix<Complex<Real>, 2, 2>;

enum class Bin { x1, x2 };
enum class Bell { phi_plus, phi_minus, psi_plus, psi_minus };

std::string_view to_string(Bell b);
Bell parse_bell(std::string_view name);

template <typename Real>
struct BiphotonPure {
  Ket4<Real> amplitudes = Ket4<Real>::Zero();
  std::optional<Bin> bin;
  std::optional<SpectralMode> mode;

  Real norm_squared() const { return amplitudes.squaredNorm(); }
};

template <typename Real>
BiphotonPure<Real> normalized(BiphotonPure<Real> psi) {
  const Real n = psi.amplitudes.norm();
  if (!(n > Real(0))) throw std::invalid_argument("cannot normalize a zero state");
  psi.amplitudes /= n;
  return psi;
}

/// Validated two-qubit density matrix: Hermitian, unit trace, PSD.
template <typename Real>
class DensityMatrix {
 public:
  using Matrix = Matrix4c<Real>;

  static constexpr Real epsilon() { return std::numeric_limits<Real>::epsilon(); }

  /// 1e-12 in double; widened to a few ulps for narrower scalars.
  static constexpr Real hermitian_tolerance() { return std::max(Real(1e-12), Real(64) * epsilon()); }
  static constexpr Real trace_tolerance() { return std::max(Real(1e-12), Real(64) * epsilon()); }
  /// Eigenvalues in [−floor, 0) are clamped to zero, anything lower is rejected.
  static constexpr Real eigenvalue_floor() { return std::max(Real(1e-10), Real(1024) * epsilon()); }

  DensityMatrix() : m_(Matrix::Zero()) { m_.diagonal().setConstant(Real(0.25)); }

  /// Throws std::domain_error when `m` violates the invariants.
  template <typename Derived>
  static DensityMatrix from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Matrix h = m;
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > hermitian_tolerance()) {
      throw std::domain_error("density matrix is not Hermitian");
    }
    h = Real(0.5) * (h + h.adjoint()).eval();
    const Real tr = h.trace().real();
    if (std::abs(tr - Real(1)) > trace_tolerance()) {
      throw std::domain_error("density matrix trace differs from 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    const auto& values = eig.eigenvalues();
    if (values.minCoeff() < -eigenvalue_floor()) {
      throw std::domain_error("density matrix has a negative eigenvalue");
    }
    if (values.minCoeff() < Real(0)) {
      // Rounding-level negatives are routine after products and sums of states.
      const auto level = values.minCoeff() < -Real(1e-13) ? spdlog::level::warn : spdlog::level::debug;
      spdlog::log(level, "clamping eigenvalue {} of density matrix to zero", static_cast<double>(values.minCoeff()));
      const Eigen::Matrix<Real, 4, 1> clipped = values.cwiseMax(Real(0));
      h = eig.eigenvectors() * clipped.template cast<Complex<Real>>().asDiagonal() * eig.eigenvectors().adjoint();
      h /= h.trace().real();
    }
    return DensityMatrix(std::move(h));
  }

  const Matrix& matrix() const { return m_; }
  Complex<Real> operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

 private:
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

template <typename Real>
BiphotonPure<Real> bell_state(Bell kind) {
  const Real h = Real(1) / std::sqrt(Real(2));
  BiphotonPure<Real> psi;
  switch (kind) {
    case Bell::phi_plus: psi.amplitudes << h, 0, 0, h; break;
    case Bell::phi_minus: psi.amplitudes << h, 0, 0, -h; break;
    case Bell::psi_plus: psi.amplitudes << 0, h, h, 0; break;
    case Bell::psi_minus: psi.amplitudes << 0, h, -h, 0; break;
  }
  return psi;
}

/// Normalized a2|HH⟩ + a1·e^{iφ}|VV⟩: bin x2 keeps H, bin x1 was rotated to V.
template <typename Real>
BiphotonPure<Real> superposed_state(Real a1, Real a2, Real phase_rad) {
  if (a1 < Real(0) || a2 < Real(0)) throw std::invalid_argument("bin amplitudes must be non-negative");
  if (a1 == Real(0) && a2 == Real(0)) throw std::invalid_argument("both bin amplitudes are zero");
  BiphotonPure<Real> psi;
  psi.amplitudes(0) = a2;
  psi.amplitudes(3) = std::polar(a1, phase_rad);
  return normalized(std::move(psi));
}

template <typename Real>
Matrix4c<Real> outer(const Ket4<Real>& v) {
  return v * v.adjoint();
}

template <typename Real>
DensityMatrix<Real> projector(const BiphotonPure<Real>& psi) {
  return DensityMatrix<Real>::from_matrix(outer<Real>(normalized(psi).amplitudes));
}

template <typename Real>
struct WeightedState {
  Real weight;
  BiphotonPure<Real> state;
};

/// Σ w_k |ψ_k⟩⟨ψ_k| / Σ w_k over normalized members.
template <typename Real>
DensityMatrix<Real> mix(std::span<const WeightedState<Real>> ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("cannot mix an empty ensemble");
  Matrix4c<Real> acc = Matrix4c<Real>::Zero();
  Real total = 0;
  for (const auto& [w, psi] : ensemble) {
    if (w < Real(0)) throw std::invalid_argument("ensemble weights must be non-negative");
    if (w == Real(0)) continue;
    acc += w * outer<Real>(normalized(psi).amplitudes);
    total += w;
  }
  if (!(total > Real(0))) throw std::invalid_argument("ensemble weights sum to zero");
  return DensityMatrix<Real>::from_matrix(acc / total);
}

template <typename Real>
DensityMatrix<Real> mix(const std::vector<WeightedState<Real>>& ensemble) {
  return mix(std::span<const WeightedState<Real>>(ensemble));
}

/// Convex combination (1 − p)·a + p·b.
template <typename Real>
DensityMatrix<Real> blend(const DensityMatrix<Real>& a, const DensityMatrix<Real>& b, Real p) {
  if (p < Real(0) || p > Real(1)) throw std::invalid_argument("blend weight outside [0, 1]");
  return DensityMatrix<Real>::from_matrix((Real(1) - p) * a.matrix() + p * b.matrix());
}

template <typename Real>
Real fidelity(const DensityMatrix<Real>& rho, const BiphotonPure<Real>& target) {
  const Ket4<Real> psi = normalized(target).amplitudes;
  const Real f = (psi.adjoint() * rho.matrix() * psi)(0, 0).real();
  return std::clamp(f, Real(0), Real(1));
}

namespace detail {
template <typename Real>
Matrix4c<Real> psd_sqrt(const Matrix4c<Real>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c<Real>> eig(m);
  const Eigen::Matrix<Real, 4, 1> roots = eig.eigenvalues().cwiseMax(Real(0)).cwiseSqrt();
  return eig.eigenvectors() * roots.template cast<Complex<Real>>().asDiagonal() * eig.eigenvectors().adjoint();
}
}  // namespace detail

/// Uhlmann fidelity (Tr√(√ρ σ √ρ))².
template <typename Real>
Real state_fidelity(const DensityMatrix<Real>& rho, const DensityMatrix<Real>& sigma) {
  const Matrix4c<Real> s = detail::psd_sqrt<Real>(rho.matrix());
  const Matrix4c<Real> inner = s * sigma.matrix() * s;
  Eigen::SelfAdjointEigenSolver<Matrix4c<Real>> eig(Real(0.5) * (inner + inner.adjoint()));
  const Real t = eig.eigenvalues().cwiseMax(Real(0)).cwiseSqrt().sum();
  return std::clamp(t * t, Real(0), Real(1));
}

template <typename Real>
Real purity(const DensityMatrix<Real>& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

/// Wootters concurrence from the spin-flipped state.
template <typename Real>
Real concurrence(const DensityMatrix<Real>& rho) {
  Matrix4c<Real> yy = Matrix4c<Real>::Zero();
  yy(0, 3) = -1;
  yy(1, 2) = 1;
  yy(2, 1) = 1;
  yy(3, 0) = -1;
  const Matrix4c<Real> flipped = yy * rho.matrix().conjugate() * yy;
  const Matrix4c<Real> s = detail::psd_sqrt<Real>(rho.matrix());
  const Matrix4c<Real> r = s * flipped * s;
  Eigen::SelfAdjointEigenSolver<Matrix4c<Real>> eig(Real(0.5) * (r + r.adjoint()));
  Eigen::Matrix<Real, 4, 1> l = eig.eigenvalues().cwiseMax(Real(0)).cwiseSqrt();
  std::sort(l.data(), l.data() + 4, std::greater<Real>());
  return std::max(Real(0), l(0) - l(1) - l(2) - l(3));
}

/// Reduced single-photon states, (signal, idler).
template <typename Real>
std::pair<Matrix2c<Real>, Matrix2c<Real>> reduced_states(const DensityMatrix<Real>& rho) {
  Matrix2c<Real> s = Matrix2c<Real>::Zero();
  Matrix2c<Real> i = Matrix2c<Real>::Zero();
  const auto& m = rho.matrix();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int k = 0; k < 2; ++k) {
        s(a, b) += m(2 * a + k, 2 * b + k);
        i(a, b) += m(2 * k + a, 2 * k + b);
      }
    }
  }
  return {s, i};
}

using BiphotonPured = BiphotonPure<double>;
using DensityMatrixd = DensityMatrix<double>;

}  // namespace poscorr
