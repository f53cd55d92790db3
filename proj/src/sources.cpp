#include "poscorr/sources.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace poscorr {

namespace {

constexpr double kPi = std::numbers::pi;

// Factors of the detected-pair budget. Every member lies in [0, 1] except
// `generated`, and expected_pair_rate = generated * product().
struct RateChain {
  double generated = 0.0;
  double bin_kept = 1.0;
  double combiner_transmission = 1.0;
  double coupling_pair = 1.0;
  double coupling_single_s = 1.0;
  double coupling_single_i = 1.0;
  double detector_s = 1.0;
  double detector_i = 1.0;
  double pump_power_mW = 1.0;

  double product() const { return bin_kept * combiner_transmission * coupling_pair * detector_s * detector_i; }
};

void apply_rates(SourceOutput& out, const RateChain& chain) {
  out.expected_pair_rate = chain.generated * chain.product();
  const double common = chain.generated * chain.bin_kept * chain.combiner_transmission;
  out.expected_singles = {common * chain.coupling_single_s * chain.detector_s,
                          common * chain.coupling_single_i * chain.detector_i};
  auto& d = out.diagnostics;
  d["generated_pair_rate"] = chain.generated;
  d["bin_kept"] = chain.bin_kept;
  d["combiner_transmission"] = chain.combiner_transmission;
  d["coupling_pair_efficiency"] = chain.coupling_pair;
  d["coupling_single_efficiency_s"] = chain.coupling_single_s;
  d["coupling_single_efficiency_i"] = chain.coupling_single_i;
  d["eta_detector_s"] = chain.detector_s;
  d["eta_detector_i"] = chain.detector_i;
  d["loss_product"] = chain.product();
  d["detected_pair_rate_per_mW"] = chain.pump_power_mW > 0.0 ? out.expected_pair_rate / chain.pump_power_mW : 0.0;
}

// Gaussian lock jitter of σ rad on the relative phase multiplies the coherence
// between the two interfering components by exp(−σ²/2).
DensityMatrixd dephase(const DensityMatrixd& rho, int a, int b, double sigma) {
  if (sigma == 0.0) return rho;
  Matrix4c<double> m = rho.matrix();
  const double damping = std::exp(-0.5 * sigma * sigma);
  m(a, b) *= damping;
  m(b, a) *= damping;
  return DensityMatrixd::from_matrix(m);
}

SpdcSpectrum config_spectrum(const SourceConfig& c) {
  return sample_spectrum(c.lambda_p_nm, c.spectrum.center_s_nm, c.spectrum.fwhm_s_nm, c.spectrum.shape,
                         c.spectrum.samples);
}

double spectral_coherence(const std::vector<WeightedState<double>>& ensemble, int a, int b) {
  std::complex<double> acc = 0.0;
  double total = 0.0;
  for (const auto& [w, psi] : ensemble) {
    const auto& v = psi.amplitudes;
    const double norm = std::abs(v(a)) * std::abs(v(b));
    if (norm > 0.0) acc += w * v(a) * std::conj(v(b)) / norm;
    total += w;
  }
  return total > 0.0 ? std::abs(acc) / total : 0.0;
}

void record_state_metrics(SourceOutput& out, const SourceConfig& c) {
  auto& d = out.diagnostics;
  d["fidelity_target"] = fidelity(out.rho, bell_state<double>(c.target));
  d["purity"] = purity(out.rho);
  d["concurrence"] = concurrence(out.rho);
}

}  // namespace

DensityMatrixd hv_contamination() {
  Matrix4c<double> m = Matrix4c<double>::Zero();
  m(1, 1) = 0.5;
  m(2, 2) = 0.5;
  return DensityMatrixd::from_matrix(m);
}

DensityMatrixd hh_vv_contamination() {
  Matrix4c<double> m = Matrix4c<double>::Zero();
  m(0, 0) = 0.5;
  m(3, 3) = 0.5;
  return DensityMatrixd::from_matrix(m);
}

SourceOutput interferometer_source(const SourceConfig& c) {
  validate(c);
  if (c.source == SourceKind::psi) throw std::invalid_argument("interferometer source needs 4f imaging");
  const auto spectrum = config_spectrum(c);

  const auto bins = wedge_split(c.pump_waist_um, c.collection_waist_um, c.wedge_offset_um);
  const auto binned = binned_pairs(bins, c.defocus_mix);
  // Upper path rotated H -> V, lower path through a plate at 0° for matched dispersion.
  const auto plated = apply_bin_plates(binned, hwp<double>(45), hwp<double>(0));

  // Locking to a pump fringe removes 2πΔL/λp, the same for every pair mode.
  const double lock = c.phase_lock ? 2.0 * kPi * c.delta_l_um * 1e3 / c.lambda_p_nm : 0.0;

  std::vector<WeightedState<double>> ensemble;
  ensemble.reserve(spectrum.samples.size());
  double coupling = 0.0;
  double transmission = 0.0;
  double single_coupling = 0.0;
  for (const auto& mode : spectrum.samples) {
    const double phase = mz_phase(c.delta_l_um, mode) - lock + c.phase_offset_rad;
    const auto combined = pbs_combine(plated, phase);
    const auto projected = single_mode_projection(combined, c.eta_coupling_x1, c.eta_coupling_x2);
    ensemble.push_back({mode.weight * projected.efficiency, projected.state});
    coupling += mode.weight * projected.efficiency;
    const double coherent_in = combined.transmitted() + combined.rejected;
    transmission += mode.weight * combined.transmitted() / coherent_in;
    single_coupling += mode.weight *
                       (combined.from_x1.squaredNorm() * c.eta_coupling_x1 +
                        combined.from_x2.squaredNorm() * c.eta_coupling_x2) /
                       combined.transmitted();
  }

  auto coherent = dephase(mix(ensemble), 0, 3, c.lock_jitter_rad);
  SourceOutput out{blend(coherent, hv_contamination(), c.defocus_mix), 0.0, {0, 0}, {}};

  RateChain chain;
  chain.generated = c.pair_rate_per_mW * c.pump_power_mW;
  chain.pump_power_mW = c.pump_power_mW;
  chain.combiner_transmission = transmission;
  chain.coupling_pair = coupling;
  chain.coupling_single_s = single_coupling;
  chain.coupling_single_i = single_coupling;
  chain.detector_s = c.eta_detector_s;
  chain.detector_i = c.eta_detector_i;
  apply_rates(out, chain);

  auto& d = out.diagnostics;
  d["a1"] = bins.a1;
  d["a2"] = bins.a2;
  d["defocus_mix"] = c.defocus_mix;
  d["dephasing_visibility"] = spectral_coherence(ensemble, 0, 3);
  d["coherence"] = 2.0 * std::abs(out.rho(0, 3));
  d["lock_phase_rad"] = lock;
  record_state_metrics(out, c);
  return out;
}

SourceOutput compact_source(const SourceConfig& c) {
  validate(c);
  if (c.source == SourceKind::psi) throw std::invalid_argument("compact source needs position sorting");
  const auto spectrum = config_spectrum(c);
  const auto crystal = MaterialDatabase::builtin().crystal(c.combiner.material, c.combiner.length_mm,
                                                           c.combiner.cut_angle_deg);

  // Half-plane split of the emission at the plate interface; the interface
  // strip scatters light out of the mode.
  const auto bins = split_emission(c.collection_waist_um, c.wedge_offset_um, c.shwp_loss_width_um);
  const auto plated = shwp(binned_pairs(bins, c.defocus_mix));

  // Crystal tilt sets the HH/VV phase to phase_offset at the centre mode.
  const double lock = c.phase_lock ? birefringent_pair_phase(crystal, spectrum.center()) : 0.0;
  const double target_displacement = 0.5 * c.pump_waist_um;
  const double w = c.collection_waist_um;
  // Power overlap of a Gaussian collection mode with a copy shifted by δ.
  auto overlap = [&](double lambda_nm) {
    const double delta = walkoff_displacement(crystal, lambda_nm) - target_displacement;
    return std::exp(-delta * delta / (w * w));
  };

  std::vector<WeightedState<double>> ensemble;
  ensemble.reserve(spectrum.samples.size());
  double coupling = 0.0;
  double transmission = 0.0;
  double single_s = 0.0;
  double single_i = 0.0;
  double mean_overlap = 0.0;
  for (const auto& mode : spectrum.samples) {
    const double phase = birefringent_pair_phase(crystal, mode) - lock + c.phase_offset_rad;
    const auto combined = pbs_combine(plated, phase);
    const double o_s = overlap(mode.lambda_s_nm);
    const double o_i = overlap(mode.lambda_i_nm);
    // The walked-off bin couples each photon with η1·o; the pair amplitude is
    // the product of the per-photon amplitudes.
    const double eta1_pair = c.eta_coupling_x1 * std::sqrt(o_s * o_i);
    const auto projected = single_mode_projection(combined, eta1_pair, c.eta_coupling_x2);
    ensemble.push_back({mode.weight * projected.efficiency, projected.state});
    coupling += mode.weight * projected.efficiency;
    transmission += mode.weight * combined.transmitted() / (combined.transmitted() + combined.rejected);
    const double p1 = combined.from_x1.squaredNorm() / combined.transmitted();
    const double p2 = combined.from_x2.squaredNorm() / combined.transmitted();
    single_s += mode.weight * (p1 * c.eta_coupling_x1 * o_s + p2 * c.eta_coupling_x2);
    single_i += mode.weight * (p1 * c.eta_coupling_x1 * o_i + p2 * c.eta_coupling_x2);
    mean_overlap += mode.weight * std::sqrt(o_s * o_i);
  }

  auto coherent = dephase(mix(ensemble), 0, 3, c.lock_jitter_rad);
  SourceOutput out{blend(coherent, hv_contamination(), c.defocus_mix), 0.0, {0, 0}, {}};

  RateChain chain;
  chain.generated = c.pair_rate_per_mW * c.pump_power_mW;
  chain.pump_power_mW = c.pump_power_mW;
  chain.bin_kept = 1.0 - bins.lost;
  chain.combiner_transmission = transmission;
  chain.coupling_pair = coupling;
  chain.coupling_single_s = single_s;
  chain.coupling_single_i = single_i;
  chain.detector_s = c.eta_detector_s;
  chain.detector_i = c.eta_detector_i;
  apply_rates(out, chain);

  auto& d = out.diagnostics;
  const double kept = 1.0 - bins.lost;
  d["a1"] = kept > 0.0 ? bins.a1 / std::sqrt(kept) : 0.0;
  d["a2"] = kept > 0.0 ? bins.a2 / std::sqrt(kept) : 0.0;
  d["shwp_strip_loss"] = bins.lost;
  d["defocus_mix"] = c.defocus_mix;
  d["walkoff_displacement_s_um"] = walkoff_displacement(crystal, spectrum.center().lambda_s_nm);
  d["walkoff_displacement_i_um"] = walkoff_displacement(crystal, spectrum.center().lambda_i_nm);
  d["walkoff_target_um"] = target_displacement;
  d["walkoff_overlap"] = mean_overlap;
  d["dephasing_visibility"] = spectral_coherence(ensemble, 0, 3);
  d["coherence"] = 2.0 * std::abs(out.rho(0, 3));
  d["lock_phase_rad"] = lock;
  record_state_metrics(out, c);
  return out;
}

SourceOutput psi_source(const SourceConfig& c) {
  validate(c);
  if (c.imaging != Imaging::two_f) throw std::invalid_argument("split-pair source needs 2f imaging");
  const auto spectrum = config_spectrum(c);

  // One photon per arm; the rotated arm turns |HH⟩ into |HV⟩ or |VH⟩.
  const double lock = c.phase_lock ? psi_phase(c.delta_l_um, spectrum.center()) : 0.0;
  const double h = 1.0 / std::sqrt(2.0);
  std::vector<WeightedState<double>> ensemble;
  ensemble.reserve(spectrum.samples.size());
  for (const auto& mode : spectrum.samples) {
    BiphotonPured psi;
    psi.mode = mode;
    psi.amplitudes(1) = h;
    psi.amplitudes(2) = std::polar(h, psi_phase(c.delta_l_um, mode) - lock + c.phase_offset_rad);
    ensemble.push_back({mode.weight, psi});
  }

  auto coherent = dephase(mix(ensemble), 1, 2, c.lock_jitter_rad);
  SourceOutput out{blend(coherent, hh_vv_contamination(), c.defocus_mix), 0.0, {0, 0}, {}};

  RateChain chain;
  chain.generated = c.pair_rate_per_mW * c.pump_power_mW;
  chain.pump_power_mW = c.pump_power_mW;
  chain.coupling_pair = c.eta_coupling_x1 * c.eta_coupling_x2;
  chain.coupling_single_s = 0.5 * (c.eta_coupling_x1 + c.eta_coupling_x2);
  chain.coupling_single_i = chain.coupling_single_s;
  chain.detector_s = c.eta_detector_s;
  chain.detector_i = c.eta_detector_i;
  apply_rates(out, chain);

  auto& d = out.diagnostics;
  d["defocus_mix"] = c.defocus_mix;
  d["dephasing_visibility"] = spectral_coherence(ensemble, 1, 2);
  d["visibility"] = 2.0 * std::abs(out.rho(1, 2));
  d["lock_phase_rad"] = lock;
  record_state_metrics(out, c);
  return out;
}

SourceOutput run_source(const SourceConfig& config) { return run_source(config, config.source); }

SourceOutput run_source(const SourceConfig& config, SourceKind which) {
  switch (which) {
    case SourceKind::interferometer: return interferometer_source(config);
    case SourceKind::compact: return compact_source(config);
    case SourceKind::psi: return psi_source(config);
  }
  throw std::invalid_argument("unknown source kind");
}

ScanResult scan(std::string_view parameter, std::span<const double> values, const SourceConfig& base,
                SourceKind which) {
  // Reject unknown names even for an empty scan.
  (void)get_parameter(base, parameter);
  ScanResult results(values.size(), {0.0, SourceOutput{}});
  if (values.empty()) return results;

  auto evaluate = [&](std::size_t k) {
    SourceConfig c = base;
    set_parameter(c, parameter, values[k]);
    results[k] = {values[k], run_source(c, which)};
  };
  const std::size_t workers =
      std::min<std::size_t>(values.size(), std::max(1u, std::thread::hardware_concurrency()));
  if (workers == 1) {
    for (std::size_t k = 0; k < values.size(); ++k) evaluate(k);
    return results;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t t = 0; t < workers; ++t) {
    jobs.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t k = t; k < values.size(); k += workers) evaluate(k);
    }));
  }
  for (auto& j : jobs) j.get();
  return results;
}

}  // namespace poscorr
