#include <doctest.h>

#include <stdexcept>

#include <fstream>

#include "poscorr/config.hpp"
#include "support.hpp"

using namespace poscorr;

namespace {

std::string field_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped presets") {
    const auto names = preset_names();
    CHECK(names == std::vector<std::string>{"fig1-interferometer", "fig2-compact", "psi-2f"});
    const auto fig1 = load_preset("fig1-interferometer");
    CHECK(fig1.lambda_p_nm == 405.0);
    CHECK(fig1.pump_waist_um == 150.0);
    CHECK(fig1.collection_waist_um == 75.0);
    CHECK(fig1.source == SourceKind::interferometer);
    const auto fig2 = load_preset("fig2-compact");
    CHECK(fig2.combiner.material == Material::BBO);
    CHECK(fig2.combiner.length_mm == 4.0);
    CHECK(fig2.combiner.cut_angle_deg == 28.8);
    const auto psi = load_preset("psi-2f");
    CHECK(psi.imaging == Imaging::two_f);
    CHECK(psi.target == Bell::psi_plus);
    CHECK_THROWS_AS(load_preset("fig3"), ConfigError);
  }

  TEST_CASE("validation names the offending field") {
    CHECK(field_of("eta_coupling_x1 = 1.2\n") == "eta_coupling_x1");
    CHECK(field_of("[detection]\nanalyzer_transmission = -0.1\n") == "detection.analyzer_transmission");
    CHECK(field_of("[spectrum]\nsamples = 40\n") == "spectrum.samples");
    CHECK(field_of("[combiner]\ncut_angle_deg = 95\n") == "combiner.cut_angle_deg");
    CHECK(field_of("source = psi\n") == "imaging");
    CHECK(field_of("defocus_mix = 2\n") == "defocus_mix");
    CHECK(field_of("lambda_p_nm = 900\n") == "spectrum.center_s_nm");
  }

  TEST_CASE("unknown keys and sections are rejected by name") {
    CHECK(field_of("pump_waist = 150\n") == "pump_waist");
    CHECK(field_of("[spectrum]\nwidth = 2\n") == "spectrum.width");
    CHECK(field_of("[optics]\nx = 1\n") == "optics");
  }

  TEST_CASE("malformed values") {
    CHECK(field_of("lambda_p_nm = abc\n") == "lambda_p_nm");
    CHECK(field_of("lambda_p_nm = 405nm\n") == "lambda_p_nm");
    CHECK(field_of("phase_lock = yes\n") == "phase_lock");
    CHECK(field_of("target = bell\n") == "target");
    CHECK(field_of("[combiner]\nmaterial = quartz\n") == "combiner.material");
    CHECK(field_of("[spectrum]\nshape = lorentzian\n") == "spectrum.shape");
    CHECK_THROWS_AS(parse_config("[spectrum\n"), ConfigError);
  }

  TEST_CASE("comments are accepted") {
    const auto c = parse_config("; a comment\n# another\nlambda_p_nm = 404\n");
    CHECK(c.lambda_p_nm == 404.0);
  }

  TEST_CASE("serialize and parse round-trip") {
    for (const auto& name : preset_names()) {
      const auto c = load_preset(name);
      const auto text = serialize_config(c);
      CHECK(parse_config(text) == c);
      CHECK(serialize_config(parse_config(text)) == text);
    }
    SourceConfig odd;
    odd.pump_waist_um = 0.1 + 0.2;
    odd.phase_offset_rad = 1.0 / 3.0;
    odd.detection.extinction = 1e-7;
    odd.phase_lock = false;
    CHECK(parse_config(serialize_config(odd)) == odd);
  }

  TEST_CASE("config files load from disk") {
    testing::TempDir dir("config");
    const auto path = (dir.path() / "c.ini").string();
    {
      std::ofstream out(path);
      out << serialize_config(load_preset("fig2-compact"));
    }
    CHECK(load_config(path) == load_preset("fig2-compact"));
    CHECK_THROWS_AS(load_config((dir.path() / "missing.ini").string()), ConfigError);
  }

  TEST_CASE("scan parameters") {
    SourceConfig c;
    const auto names = scannable_parameters();
    CHECK(std::find(names.begin(), names.end(), "delta_l_um") != names.end());
    CHECK(std::find(names.begin(), names.end(), "spectrum.fwhm_s_nm") != names.end());
    set_parameter(c, "spectrum.fwhm_s_nm", 3.5);
    CHECK(c.spectrum.fwhm_s_nm == 3.5);
    CHECK(get_parameter(c, "spectrum.fwhm_s_nm") == 3.5);
    CHECK_THROWS_AS(set_parameter(c, "spectrum.samples", 3), std::invalid_argument);
    CHECK_THROWS_AS(get_parameter(c, "bogus"), std::invalid_argument);
  }
}
