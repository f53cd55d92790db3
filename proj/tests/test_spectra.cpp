#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <random>

#include "poscorr/spectra.hpp"

using namespace poscorr;

namespace {

constexpr double kPi = std::numbers::pi;

// Frozen from tools/oracle_values.py.
constexpr double kBboNo405 = 1.69188689598;
constexpr double kBboNe405 = 1.56712414591;
constexpr double kNTheta = 1.63237987303;
constexpr double kWalkoff810Deg = 3.63644621228;
constexpr double kDisplacement810 = 254.213268699;
constexpr double kIdler405_792 = 828.837209302;
constexpr double kPsiPhase20 = 7.08160788725;
constexpr double kPairPhase792_829 = 1815.75597059;
constexpr double kPairPhase792_idler = 1815.93654803;

CrystalSpec bbo(double length_mm = 4.0) { return MaterialDatabase::builtin().crystal(Material::BBO, length_mm, 28.8); }

}  // namespace

TEST_SUITE("spectra") {
  TEST_CASE("idler wavelength from energy conservation") {
    CHECK(idler_wavelength(405, 792) == doctest::Approx(kIdler405_792).epsilon(1e-10));
    // The rounded pair quoted for the source, 792/829 nm.
    CHECK(std::abs(idler_wavelength(405, 792) - 829.0) < 0.2);
    CHECK(idler_wavelength(405, 810) == doctest::Approx(810).epsilon(1e-14));
    CHECK(idler_wavelength(532, 1064) == doctest::Approx(1064).epsilon(1e-14));
    CHECK_THROWS_AS(idler_wavelength(405, 405), std::invalid_argument);
    CHECK_THROWS_AS(idler_wavelength(405, 300), std::invalid_argument);
    CHECK_THROWS_AS(idler_wavelength(0, 800), std::invalid_argument);
  }

  TEST_CASE("BBO Sellmeier indices match the oracle") {
    const auto c = bbo();
    CHECK(sellmeier_index(c, Axis::ordinary, 405) == doctest::Approx(kBboNo405).epsilon(1e-10));
    CHECK(sellmeier_index(c, Axis::extraordinary, 405) == doctest::Approx(kBboNe405).epsilon(1e-10));
    CHECK(std::abs(sellmeier_index(c, Axis::ordinary, 405) - 1.692) < 0.002);
    CHECK(std::abs(sellmeier_index(c, Axis::extraordinary, 405) - 1.568) < 0.002);
  }

  TEST_CASE("Sellmeier indices are smooth, above one and normally dispersive") {
    for (Material m : {Material::BBO, Material::KTP, Material::YVO4}) {
      const auto c = MaterialDatabase::builtin().crystal(m, 1.0, 0.0);
      for (Axis a : {Axis::ordinary, Axis::extraordinary}) {
        double prev = sellmeier_index(c, a, 350.0);
        for (double l = 350.0; l + 0.1 <= 900.0; l += 0.1) {
          const double n0 = sellmeier_index(c, a, l);
          const double n1 = sellmeier_index(c, a, l + 0.1);
          CHECK(n0 > 1.0);
          CHECK(std::abs(n1 - n0) < 1e-3);
          CHECK(n1 < n0);
          prev = n1;
        }
        CHECK(prev > 1.0);
      }
    }
  }

  TEST_CASE("Sellmeier evaluation outside the validity window throws") {
    const auto c = MaterialDatabase::builtin().crystal(Material::KTP, 1.0, 0.0);
    CHECK_THROWS_AS(sellmeier_index(c, Axis::ordinary, 2000.0), std::domain_error);
    CHECK_THROWS_AS(sellmeier_index(c, Axis::ordinary, 300.0), std::domain_error);
  }

  TEST_CASE("extraordinary index from the index ellipsoid") {
    CHECK(extraordinary_index(1.6614, 1.5462, 0) == doctest::Approx(1.6614).epsilon(1e-14));
    CHECK(extraordinary_index(1.6614, 1.5462, 90) == doctest::Approx(1.5462).epsilon(1e-14));
    CHECK(extraordinary_index(1.6614, 1.5462, 28.8) == doctest::Approx(kNTheta).epsilon(1e-10));
    CHECK(std::abs(extraordinary_index(1.6614, 1.5462, 28.8) - 1.632) < 0.002);
    CHECK_THROWS(extraordinary_index(1.6, 1.5, 91));
    CHECK_THROWS(extraordinary_index(0.9, 1.5, 10));
  }

  TEST_CASE("extraordinary index lies between n_o and n_e") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> n(1.2, 2.5);
    std::uniform_real_distribution<double> th(0.0, 90.0);
    for (int k = 0; k < 500; ++k) {
      const double no = n(rng);
      const double ne = n(rng);
      const double v = extraordinary_index(no, ne, th(rng));
      CHECK(v >= std::min(no, ne) - 1e-15);
      CHECK(v <= std::max(no, ne) + 1e-15);
    }
  }

  TEST_CASE("walk-off angle") {
    CHECK(walkoff_angle(1.66, 1.55, 0) == 0.0);
    CHECK(walkoff_angle(1.66, 1.55, 90) == doctest::Approx(0.0).epsilon(1e-12));
    const auto c = bbo();
    const double no = sellmeier_index(c, Axis::ordinary, 810);
    const double ne = sellmeier_index(c, Axis::extraordinary, 810);
    CHECK(walkoff_angle(no, ne, 28.8) == doctest::Approx(kWalkoff810Deg).epsilon(1e-9));
    CHECK(std::abs(walkoff_angle(no, ne, 28.8) - 3.6) < 0.3);
    // Positive birefringence gives the same magnitude convention.
    CHECK(walkoff_angle(1.55, 1.66, 28.8) > 0.0);
  }

  TEST_CASE("walk-off sign never flips across the pair band") {
    const auto c = bbo();
    for (double l = 770.0; l <= 850.0; l += 0.5) CHECK(walkoff_displacement(c, l) > 0.0);
  }

  TEST_CASE("walk-off displacement") {
    CHECK(walkoff_displacement(bbo(0.0), 810) == 0.0);
    CHECK(walkoff_displacement(bbo(), 810) == doctest::Approx(kDisplacement810).epsilon(1e-9));
    CHECK(walkoff_displacement(bbo(), 810) >= 150.0);
    CHECK(walkoff_displacement(bbo(), 810) <= 300.0);
    CHECK(walkoff_displacement(bbo(8.0), 810) == doctest::Approx(2.0 * walkoff_displacement(bbo(4.0), 810)).epsilon(1e-14));
  }

  TEST_CASE("Mach-Zehnder phase") {
    CHECK(mz_phase(0.0, make_mode(405, 792)) == 0.0);
    CHECK(mz_phase(0.405, make_mode(405, 792)) == doctest::Approx(2 * kPi).epsilon(1e-12));
  }

  TEST_CASE("Mach-Zehnder phase is flat across any sampled spectrum") {
    for (double dl : {0.3, 20.0, 1000.0, 12345.0}) {
      for (auto shape : {SpectrumShape::gaussian, SpectrumShape::sinc2}) {
        const auto s = sample_spectrum(405, 792, 2.0, shape, 41);
        double lo = 1e300;
        double hi = -1e300;
        double mean = 0.0;
        for (const auto& m : s.samples) {
          const double p = mz_phase(dl, m);
          lo = std::min(lo, p);
          hi = std::max(hi, p);
          mean += p / static_cast<double>(s.samples.size());
        }
        CHECK(hi - lo < 1e-12 * std::abs(mean));
        CHECK(mean == doctest::Approx(2 * kPi * dl * 1e3 / 405).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("split-pair phase") {
    CHECK(psi_phase(50.0, make_mode(405, 810)) == doctest::Approx(0.0).epsilon(1e-12));
    const SpectralMode m{792, 829, 1};
    CHECK(psi_phase(20.0, m) == doctest::Approx(kPsiPhase20).epsilon(1e-10));
    const SpectralMode swapped{829, 792, 1};
    CHECK(psi_phase(20.0, swapped) == doctest::Approx(-psi_phase(20.0, m)).epsilon(1e-14));
  }

  TEST_CASE("split-pair phase slope along the signal wavelength") {
    for (double dl : {5.0, 20.0, 100.0}) {
      for (double ls : {790.0, 800.0, 810.0, 820.0}) {
        const double h = 1e-3;
        const double numeric = (psi_phase(dl, make_mode(405, ls + h)) - psi_phase(dl, make_mode(405, ls - h))) / (2 * h);
        const double analytic = -4 * kPi * dl * 1e3 / (ls * ls);
        CHECK(std::abs(numeric - analytic) < 0.01 * std::abs(analytic));
      }
    }
  }

  TEST_CASE("birefringent pair phase") {
    CHECK(birefringent_pair_phase(bbo(0.0), SpectralMode{792, 829, 1}) == 0.0);
    CHECK(birefringent_pair_phase(bbo(), SpectralMode{792, 829, 1}) == doctest::Approx(kPairPhase792_829).epsilon(1e-10));
    CHECK(birefringent_pair_phase(bbo(), make_mode(405, 792)) == doctest::Approx(kPairPhase792_idler).epsilon(1e-10));
  }

  TEST_CASE("birefringent pair phase is smooth and monotone along the signal wavelength") {
    const auto c = bbo();
    const double ref = birefringent_pair_phase(c, make_mode(405, 792));
    // Frozen oracle points at ±5 nm.
    CHECK(birefringent_pair_phase(c, make_mode(405, 787)) - ref == doctest::Approx(0.0516883365576).epsilon(1e-6));
    CHECK(birefringent_pair_phase(c, make_mode(405, 797)) - ref == doctest::Approx(-0.0383502153586).epsilon(1e-6));
    for (double lp : {404.0, 405.0, 406.0}) {
      double prev = birefringent_pair_phase(c, make_mode(lp, 787.0));
      for (double ls = 787.1; ls <= 797.0; ls += 0.1) {
        const double p = birefringent_pair_phase(c, make_mode(lp, ls));
        CHECK(p < prev);
        CHECK(prev - p < 0.01);
        prev = p;
      }
    }
  }

  TEST_CASE("spectrum sampling") {
    const auto three = sample_spectrum(405, 792, 2.0, SpectrumShape::gaussian, 3);
    REQUIRE(three.samples.size() == 3);
    CHECK(three.samples[1].weight > three.samples[0].weight);
    CHECK(three.samples[1].weight > three.samples[2].weight);
    CHECK(three.center().lambda_s_nm == 792.0);

    for (int n : {3, 5, 41, 101}) {
      for (auto shape : {SpectrumShape::gaussian, SpectrumShape::sinc2}) {
        const auto s = sample_spectrum(405, 792, 2.0, shape, n);
        double total = 0.0;
        for (const auto& m : s.samples) {
          total += m.weight;
          CHECK(m.weight >= 0.0);
          const double lhs = 1.0 / m.lambda_s_nm + 1.0 / m.lambda_i_nm;
          CHECK(std::abs(lhs - 1.0 / 405.0) < 1e-9 / 405.0);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
    }

    const auto g = sample_spectrum(405, 792, 2.0, SpectrumShape::gaussian, 41);
    for (std::size_t k = 0; k < g.samples.size(); ++k) {
      CHECK(std::abs(g.samples[k].weight - g.samples[g.samples.size() - 1 - k].weight) < 1e-12);
      CHECK(g.samples[k].weight <= g.center().weight);
    }
  }

  TEST_CASE("spectrum sampling rejects bad arguments") {
    CHECK_THROWS_AS(sample_spectrum(405, 792, 2.0, SpectrumShape::gaussian, 4), std::invalid_argument);
    CHECK_THROWS_AS(sample_spectrum(405, 792, 2.0, SpectrumShape::gaussian, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_spectrum(405, 792, 0.0, SpectrumShape::gaussian, 5), std::invalid_argument);
    CHECK_THROWS_AS(sample_spectrum(405, 792, -1.0, SpectrumShape::sinc2, 5), std::invalid_argument);
  }

  TEST_CASE("gaussian half maximum sits at half the FWHM") {
    // 4 samples per FWHM put the ±FWHM/2 points on the grid.
    const auto s = sample_spectrum(405, 792, 2.0, SpectrumShape::gaussian, 25);
    for (const auto& m : s.samples) {
      if (std::abs(std::abs(m.lambda_s_nm - 792.0) - 1.0) < 1e-9) CHECK(m.weight / s.center().weight == doctest::Approx(0.5));
    }
  }

  TEST_CASE("phase wrapping") {
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    for (double x = -50.0; x < 50.0; x += 0.37) {
      const double w = wrap_phase(x);
      CHECK(w > -kPi);
      CHECK(w <= kPi);
      CHECK(std::abs(std::remainder(w - x, 2 * kPi)) < 1e-9);
    }
  }

  TEST_CASE("material database parsing") {
    const auto& db = MaterialDatabase::builtin();
    CHECK(db.version() == 1);
    const auto text = "version 1\nBBO ordinary 2.7359 0.01878 0.01822 -0.01354 220 3000\n";
    const auto custom = MaterialDatabase::parse(text);
    CHECK(custom.coefficients(Material::BBO, Axis::ordinary).a == 2.7359);
    CHECK_THROWS(custom.coefficients(Material::BBO, Axis::extraordinary));
    CHECK_THROWS(MaterialDatabase::parse("version 2\n"));
    CHECK_THROWS(MaterialDatabase::parse("version 1\nBBO ordinary 1 2 3\n"));
    CHECK_THROWS(MaterialDatabase::parse("version 1\nXYZ ordinary 1 2 3 4 300 900\n"));
    CHECK_THROWS(MaterialDatabase::parse("version 1\nBBO ordinary 1 2 3 4 900 300\n"));
    CHECK_THROWS(MaterialDatabase::load("/nonexistent/materials.db"));
  }

  TEST_CASE("crystal geometry is validated") {
    CHECK_THROWS(MaterialDatabase::builtin().crystal(Material::BBO, -1.0, 28.8));
    CHECK_THROWS(MaterialDatabase::builtin().crystal(Material::BBO, 4.0, 95.0));
  }
}
