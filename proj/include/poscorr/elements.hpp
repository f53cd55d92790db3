#pragma once

// Jones-calculus optical elements and the position-bin bookkeeping used by the
// sources. Bin x1 is the half of the emission that gets rotated to V, bin x2
// keeps H.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "poscorr/qstate.hpp"

namespace poscorr {

template <typename Real>
using JonesMatrix = Matrix2c<Real>;

/// Half-wave plate with fast axis at θ. Determinant −1 with no compensating
/// global phase, so hwp(0) = diag(1, −1) and hwp(45) swaps H and V.
template <typename Real>
JonesMatrix<Real> hwp(Real theta_deg) {
  const Real t = Real(2) * theta_deg * std::numbers::pi_v<Real> / Real(180);
  JonesMatrix<Real> m;
  m << std::cos(t), std::sin(t), std::sin(t), -std::cos(t);
  return m;
}

/// Quarter-wave plate with fast axis at θ (fast axis picks up no phase, slow
/// axis picks up +i).
template <typename Real>
JonesMatrix<Real> qwp(Real theta_deg) {
  const Real t = theta_deg * std::numbers::pi_v<Real> / Real(180);
  JonesMatrix<Real> rot;
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  JonesMatrix<Real> retarder = JonesMatrix<Real>::Zero();
  retarder(0, 0) = 1;
  retarder(1, 1) = Complex<Real>(0, 1);
  return rot * retarder * rot.adjoint();
}

template <typename Real>
Matrix4c<Real> kron(const JonesMatrix<Real>& signal, const JonesMatrix<Real>& idler) {
  Matrix4c<Real> k;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) k.template block<2, 2>(2 * a, 2 * b) = signal(a, b) * idler;
  return k;
}

template <typename Real>
bool is_unitary(const JonesMatrix<Real>& m, Real tol = Real(1e-12)) {
  return (m.adjoint() * m - JonesMatrix<Real>::Identity()).cwiseAbs().maxCoeff() <= tol;
}

/// (U_s ⊗ U_i)|ψ⟩. Renormalized only when both matrices are unitary; a lossy
/// element leaves the norm reduced so callers can account for the loss.
template <typename Real>
BiphotonPure<Real> apply_local(const JonesMatrix<Real>& u_signal, const JonesMatrix<Real>& u_idler,
                               BiphotonPure<Real> psi) {
  psi.amplitudes = kron<Real>(u_signal, u_idler) * psi.amplitudes;
  if (is_unitary(u_signal) && is_unitary(u_idler)) {
    const Real n = psi.amplitudes.norm();
    if (n > Real(0)) psi.amplitudes /= n;
  }
  return psi;
}

/// Birth-position bins after the split line. Bin kets are unnormalized: their
/// squared norms are the bin probabilities. `crosstalk` is probability routed
/// to the incoherent contamination channel and `lost` is probability removed
/// outright (e.g. the segmented plate's interface strip).
template <typename Real>
struct BinnedPairState {
  Ket4<Real> x1 = Ket4<Real>::Zero();
  Ket4<Real> x2 = Ket4<Real>::Zero();
  Real crosstalk = 0;
  Real lost = 0;

  Real total_probability() const { return x1.squaredNorm() + x2.squaredNorm() + crosstalk + lost; }
};

template <typename Real>
struct BinAmplitudes {
  Real a1 = 0;
  Real a2 = 0;
  Real lost = 0;  ///< probability removed by an interface strip, a1² + a2² + lost = 1
};

/// Splits a Gaussian birth-position marginal (intensity waist `w_eff`) at a
/// line displaced by `offset` toward bin x2; a strip of `strip_width` centred
/// on the line is removed. Positive offset enlarges bin x1.
template <typename Real>
BinAmplitudes<Real> split_emission(Real w_eff_um, Real offset_um, Real strip_width_um = Real(0)) {
  if (!(w_eff_um > Real(0))) throw std::invalid_argument("effective waist must be positive");
  if (strip_width_um < Real(0)) throw std::invalid_argument("strip width must be non-negative");
  const Real root2 = std::sqrt(Real(2));
  const Real half = strip_width_um / Real(2);
  // P(x > −offset + half) and P(x < −offset − half) for x ~ N(0, w_eff/2).
  const Real p1 = Real(0.5) * std::erfc(root2 * (half - offset_um) / w_eff_um);
  const Real p2 = Real(0.5) * std::erfc(root2 * (half + offset_um) / w_eff_um);
  BinAmplitudes<Real> out{std::sqrt(p1), std::sqrt(p2), Real(0)};
  out.lost = half > Real(0) ? std::max(Real(0), Real(1) - p1 - p2) : Real(0);
  if (half == Real(0)) {
    // Compute the larger bin as the complement so a1² + a2² = 1 holds exactly.
    if (p1 >= p2) out.a1 = std::sqrt(Real(1) - p2);
    else out.a2 = std::sqrt(Real(1) - p1);
  }
  return out;
}

/// Wedge-mirror split: a1² = ½(1 + erf(√2·d/w_eff)), with the collection waist
/// as the effective width of the birth-position marginal.
template <typename Real>
BinAmplitudes<Real> wedge_split(Real pump_waist_um, Real collection_waist_um, Real transverse_offset_um) {
  if (!(pump_waist_um > Real(0))) throw std::invalid_argument("pump waist must be positive");
  return split_emission(collection_waist_um, transverse_offset_um);
}

/// Both bins start as |HH⟩ (type-0 emission).
template <typename Real>
BinnedPairState<Real> binned_pairs(const BinAmplitudes<Real>& bins, Real crosstalk = Real(0)) {
  if (crosstalk < Real(0) || crosstalk > Real(1)) throw std::invalid_argument("crosstalk outside [0, 1]");
  BinnedPairState<Real> s;
  const Real keep = std::sqrt(Real(1) - crosstalk);
  s.x1(0) = keep * bins.a1;
  s.x2(0) = keep * bins.a2;
  s.lost = (Real(1) - crosstalk) * bins.lost;
  s.crosstalk = crosstalk;
  return s;
}

/// Per-bin plates: x1 through `upper` on both photons, x2 through `lower`.
template <typename Real>
BinnedPairState<Real> apply_bin_plates(BinnedPairState<Real> s, const JonesMatrix<Real>& upper,
                                       const JonesMatrix<Real>& lower) {
  s.x1 = kron<Real>(upper, upper) * s.x1;
  s.x2 = kron<Real>(lower, lower) * s.x2;
  return s;
}

/// Segmented half-wave plate: hwp(45°) on bin x1, hwp(0°) on bin x2.
template <typename Real>
BinnedPairState<Real> shwp(const BinnedPairState<Real>& s) {
  return apply_bin_plates(s, hwp<Real>(45), hwp<Real>(0));
}

template <typename Real>
BiphotonPure<Real> shwp(BiphotonPure<Real> psi) {
  if (!psi.bin) throw std::invalid_argument("segmented plate needs a position-bin label");
  const auto plate = *psi.bin == Bin::x1 ? hwp<Real>(45) : hwp<Real>(0);
  psi.amplitudes = kron<Real>(plate, plate) * psi.amplitudes;
  return psi;
}

/// Output of the polarization combiner. Position labels are still attached:
/// from_x1 carries the V-polarized contribution with the interference phase
/// applied, from_x2 the H-polarized one.
template <typename Real>
struct CombinedPairState {
  Ket4<Real> from_x1 = Ket4<Real>::Zero();
  Ket4<Real> from_x2 = Ket4<Real>::Zero();
  Real rejected = 0;  ///< wrong-polarization amplitude sent to the unused port
  Real crosstalk = 0;
  Real lost = 0;

  Real transmitted() const { return from_x1.squaredNorm() + from_x2.squaredNorm(); }
  Real total_probability() const { return transmitted() + rejected + crosstalk + lost; }
  /// Coherent sum with position labels erased, normalized.
  BiphotonPure<Real> state() const {
    BiphotonPure<Real> psi;
    psi.amplitudes = from_x1 + from_x2;
    return normalized(std::move(psi));
  }
};

/// Polarizing combination of the two bins: only VV from x1 and HH from x2
/// reach the common output.
template <typename Real>
CombinedPairState<Real> pbs_combine(const BinnedPairState<Real>& s, Real phase_rad) {
  CombinedPairState<Real> out;
  out.from_x1(3) = s.x1(3) * std::polar(Real(1), phase_rad);
  out.from_x2(0) = s.x2(0);
  out.rejected = s.x1.squaredNorm() - std::norm(s.x1(3)) + s.x2.squaredNorm() - std::norm(s.x2(0));
  out.crosstalk = s.crosstalk;
  out.lost = s.lost;
  return out;
}

template <typename Real>
struct ProjectedPair {
  BiphotonPure<Real> state;
  Real efficiency = 0;  ///< coupled pair probability relative to the combiner output
};

/// Single-mode fiber projection. Each photon from bin b couples with
/// probability η_b (amplitude √η_b), so the pair amplitude of bin b scales by
/// η_b. Throws when nothing couples.
template <typename Real>
ProjectedPair<Real> single_mode_projection(const CombinedPairState<Real>& c, Real eta1, Real eta2) {
  if (eta1 < Real(0) || eta1 > Real(1) || eta2 < Real(0) || eta2 > Real(1)) {
    throw std::invalid_argument("coupling efficiency outside [0, 1]");
  }
  const Real input = c.transmitted();
  if (!(input > Real(0))) throw std::invalid_argument("no light reaches the single-mode projection");
  BiphotonPure<Real> psi;
  psi.amplitudes = eta1 * c.from_x1 + eta2 * c.from_x2;
  const Real coupled = psi.amplitudes.squaredNorm();
  if (!(coupled > Real(0))) throw std::invalid_argument("no pair couples into the single mode");
  return {normalized(std::move(psi)), coupled / input};
}

template <typename Real>
ProjectedPair<Real> single_mode_projection(const BinnedPairState<Real>& s, Real eta1, Real eta2) {
  CombinedPairState<Real> c;
  c.from_x1 = s.x1;
  c.from_x2 = s.x2;
  return single_mode_projection(c, eta1, eta2);
}

}  // namespace poscorr
