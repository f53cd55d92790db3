#pragma once

// End-to-end source pipelines: position bins -> polarization plates ->
// coherent recombination -> single-mode projection -> spectral mixing.

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poscorr/config.hpp"
#include "poscorr/elements.hpp"
#include "poscorr/qstate.hpp"

namespace poscorr {

struct SourceOutput {
  DensityMatrixd rho;
  double expected_pair_rate = 0.0;                ///< detected pairs/s, no analyzers
  std::array<double, 2> expected_singles{0, 0};   ///< (signal, idler) photons/s, no dark counts
  std::map<std::string, double> diagnostics;
};

/// Mach-Zehnder source with 4f imaging onto the wedge mirror.
SourceOutput interferometer_source(const SourceConfig& config);

/// Collimated-pump source: segmented half-wave plate plus walk-off combiner.
SourceOutput compact_source(const SourceConfig& config);

/// 2f variant: signal and idler traverse separate arms, giving Ψ states.
SourceOutput psi_source(const SourceConfig& config);

/// Dispatches on config.source.
SourceOutput run_source(const SourceConfig& config);
SourceOutput run_source(const SourceConfig& config, SourceKind which);

using ScanResult = std::vector<std::pair<double, SourceOutput>>;

/// Evaluates `which` once per value of the named scalar field. Results keep
/// input order; points may run concurrently.
ScanResult scan(std::string_view parameter, std::span<const double> values, const SourceConfig& base,
                SourceKind which);

/// Incoherent admixtures used for defocus crosstalk: (|HV⟩⟨HV| + |VH⟩⟨VH|)/2
/// for the position-sorting sources, (|HH⟩⟨HH| + |VV⟩⟨VV|)/2 for the 2f source.
DensityMatrixd hv_contamination();
DensityMatrixd hh_vv_contamination();

}  // namespace poscorr
