#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>

#include "poscorr/detect.hpp"
#include "poscorr/sources.hpp"

using namespace poscorr;

namespace {

constexpr double kPi = std::numbers::pi;

SourceConfig ideal_interferometer() {
  SourceConfig c;
  c.source = SourceKind::interferometer;
  return c;
}

SourceConfig ideal_psi() {
  SourceConfig c;
  c.source = SourceKind::psi;
  c.imaging = Imaging::two_f;
  c.target = Bell::psi_plus;
  return c;
}

double fid(const SourceOutput& out, Bell b) { return fidelity(out.rho, bell_state<double>(b)); }

}  // namespace

TEST_SUITE("sources") {
  TEST_CASE("ideal interferometer emits phi+ and phi-") {
    auto c = ideal_interferometer();
    CHECK(fid(interferometer_source(c), Bell::phi_plus) >= 0.999);
    c.phase_offset_rad = kPi;
    CHECK(fid(interferometer_source(c), Bell::phi_minus) >= 0.999);
  }

  TEST_CASE("locked interferometer is insensitive to the path difference") {
    auto c = ideal_interferometer();
    c.defocus_mix = 0.01;
    c.wedge_offset_um = 3.0;
    const double f0 = fid(interferometer_source(c), Bell::phi_plus);
    for (double dl = 0.0; dl <= 1000.0; dl += 37.0) {
      c.delta_l_um = dl;
      CHECK(std::abs(fid(interferometer_source(c), Bell::phi_plus) - f0) < 1e-9);
    }
  }

  TEST_CASE("an unlocked interferometer follows the pump fringe") {
    auto c = ideal_interferometer();
    c.phase_lock = false;
    c.delta_l_um = 0.405 / 2;  // half a pump wavelength: phi-
    CHECK(fid(interferometer_source(c), Bell::phi_minus) >= 0.999);
    // Still no spectral dephasing, so coherence is intact.
    CHECK(concurrence(interferometer_source(c).rho) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("defocus admixture lowers visibility and fidelity") {
    auto c = ideal_interferometer();
    for (double mu : {0.0, 0.003, 0.02, 0.1}) {
      c.defocus_mix = mu;
      const auto out = interferometer_source(c);
      CHECK(fid(out, Bell::phi_plus) == doctest::Approx(1.0 - mu).epsilon(1e-9));
      CHECK(average_visibility(out.rho) == doctest::Approx(1.0 - 1.5 * mu).epsilon(1e-9));
    }
  }

  TEST_CASE("wedge offset gives a non-maximally entangled pure state") {
    auto c = ideal_interferometer();
    c.wedge_offset_um = 20.0;
    const auto out = interferometer_source(c);
    const double a1 = out.diagnostics.at("a1");
    const double a2 = out.diagnostics.at("a2");
    CHECK(a1 > a2);
    CHECK(purity(out.rho) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(concurrence(out.rho) == doctest::Approx(2 * a1 * a2).epsilon(1e-7));
    CHECK(fid(out, Bell::phi_plus) == doctest::Approx((a1 + a2) * (a1 + a2) / 2).epsilon(1e-9));
  }

  TEST_CASE("lock jitter damps coherence by exp(-sigma^2/2)") {
    auto c = ideal_interferometer();
    c.lock_jitter_rad = 0.3;
    const auto out = interferometer_source(c);
    CHECK(out.diagnostics.at("coherence") == doctest::Approx(std::exp(-0.045)).epsilon(1e-9));
  }

  TEST_CASE("interferometer rate chain") {
    auto c = ideal_interferometer();
    c.eta_coupling_x1 = c.eta_coupling_x2 = 0.4;
    c.eta_detector_s = 0.4;
    c.eta_detector_i = 0.5;
    c.pair_rate_per_mW = 1e6;
    c.pump_power_mW = 2.0;
    const auto out = interferometer_source(c);
    CHECK(out.expected_pair_rate == doctest::Approx(2e6 * 0.16 * 0.2));
    CHECK(out.expected_singles[0] == doctest::Approx(2e6 * 0.4 * 0.4));
    CHECK(out.expected_singles[1] == doctest::Approx(2e6 * 0.4 * 0.5));
    CHECK(out.diagnostics.at("detected_pair_rate_per_mW") == doctest::Approx(1e6 * 0.032));
  }

  TEST_CASE("compact source combines the walked-off halves") {
    SourceConfig c;
    c.source = SourceKind::compact;
    c.pump_waist_um = 508.4;
    const auto out = compact_source(c);
    CHECK(fid(out, Bell::phi_plus) > 0.999);
    CHECK(out.diagnostics.at("walkoff_overlap") > 0.9999);
    CHECK(out.diagnostics.at("walkoff_displacement_s_um") > out.diagnostics.at("walkoff_displacement_i_um"));
  }

  TEST_CASE("compact source without a combiner leaves HH") {
    SourceConfig c;
    c.source = SourceKind::compact;
    c.pump_waist_um = 508.4;
    c.combiner.length_mm = 0.0;
    const auto out = compact_source(c);
    CHECK(std::real(out.rho(0, 0)) > 0.9999);
    CHECK(concurrence(out.rho) < 0.02);
  }

  TEST_CASE("compact source mismatch between walk-off and pump waist reduces entanglement") {
    SourceConfig c;
    c.source = SourceKind::compact;
    c.pump_waist_um = 508.4;
    const double matched = concurrence(compact_source(c).rho);
    c.pump_waist_um = 400.0;
    const double mismatched = concurrence(compact_source(c).rho);
    CHECK(mismatched < matched);
  }

  TEST_CASE("interface strip costs brightness but not fidelity") {
    SourceConfig c;
    c.source = SourceKind::compact;
    c.pump_waist_um = 508.4;
    const auto clean = compact_source(c);
    c.shwp_loss_width_um = 55.0;
    const auto lossy = compact_source(c);
    CHECK(lossy.expected_pair_rate < 0.6 * clean.expected_pair_rate);
    CHECK(fid(lossy, Bell::phi_plus) == doctest::Approx(fid(clean, Bell::phi_plus)).epsilon(1e-9));
    CHECK(lossy.diagnostics.at("bin_kept") == doctest::Approx(1.0 - lossy.diagnostics.at("shwp_strip_loss")));
  }

  TEST_CASE("compact chromatic phase is compensated at the centre only") {
    SourceConfig c;
    c.source = SourceKind::compact;
    c.pump_waist_um = 508.4;
    const double narrow = compact_source(c).diagnostics.at("dephasing_visibility");
    c.spectrum.fwhm_s_nm = 20.0;
    c.spectrum.center_s_nm = 830.0;
    const double broad = compact_source(c).diagnostics.at("dephasing_visibility");
    CHECK(narrow > 0.9999);
    CHECK(broad < narrow);
  }

  TEST_CASE("psi source visibility follows the dephasing oracle") {
    // Brute-force spectral integrals frozen from tools/oracle_values.py.
    const std::pair<double, double> oracle[] = {
        {0.0, 1.0}, {10.0, 0.985628638731}, {20.0, 0.943741973663}, {50.0, 0.696359658254}, {100.0, 0.235149376918}};
    auto c = ideal_psi();
    for (const auto& [dl, v] : oracle) {
      c.delta_l_um = dl;
      const auto out = psi_source(c);
      CHECK(out.diagnostics.at("visibility") == doctest::Approx(v).epsilon(1e-6));
      CHECK(out.diagnostics.at("dephasing_visibility") == doctest::Approx(v).epsilon(1e-6));
    }
  }

  TEST_CASE("psi source emits psi+ at zero path difference") {
    auto c = ideal_psi();
    CHECK(fid(psi_source(c), Bell::psi_plus) == doctest::Approx(1.0).epsilon(1e-12));
    c.phase_offset_rad = kPi;
    CHECK(fid(psi_source(c), Bell::psi_minus) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("pipelines reject mismatched imaging") {
    auto c = ideal_psi();
    CHECK_THROWS(interferometer_source(c));
    CHECK_THROWS(compact_source(c));
    auto d = ideal_interferometer();
    CHECK_THROWS(psi_source(d));
  }

  TEST_CASE("scan keeps input order and matches single runs") {
    auto c = ideal_psi();
    const std::vector<double> values{100.0, 0.0, 50.0, 20.0};
    const auto results = scan("delta_l_um", values, c, SourceKind::psi);
    REQUIRE(results.size() == values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      CHECK(results[k].first == values[k]);
      c.delta_l_um = values[k];
      CHECK(results[k].second.rho.matrix() == psi_source(c).rho.matrix());
    }
    CHECK(scan("delta_l_um", std::vector<double>{}, c, SourceKind::psi).empty());
    CHECK_THROWS_AS(scan("no_such_field", values, c, SourceKind::psi), std::invalid_argument);
    CHECK_THROWS_AS(scan("no_such_field", std::vector<double>{}, c, SourceKind::psi), std::invalid_argument);
  }

  TEST_CASE("contamination states") {
    CHECK(hv_contamination().matrix().diagonal().real().isApprox(Eigen::Vector4d(0, 0.5, 0.5, 0)));
    CHECK(hh_vv_contamination().matrix().diagonal().real().isApprox(Eigen::Vector4d(0.5, 0, 0, 0.5)));
  }

  TEST_CASE("every pipeline output is a valid density matrix") {
    for (const auto& name : preset_names()) {
      auto c = load_preset(name);
      for (double dl : {0.0, 15.0, 300.0}) {
        c.delta_l_um = dl;
        const auto out = run_source(c);
        CHECK(out.rho.matrix().trace().real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((out.rho.matrix() - out.rho.matrix().adjoint()).norm() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix4c<double>> eig(out.rho.matrix());
        CHECK(eig.eigenvalues().minCoeff() > -1e-10);
      }
    }
  }
}
