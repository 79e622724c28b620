#include <catch2/catch_amalgamated.hpp>

#include "ionprobe/units.hpp"

using namespace ionprobe;

TEST_CASE("photon rate matches P*lambda/(h*c)") {
  // 2.5 uW at 375 nm and 8.5 uW at 375 nm, values frozen from a hand
  // evaluation of the formula.
  CHECK_THAT(photon_rate(2.5e-6, 375e-9),
             Catch::Matchers::WithinRel(4.7194805e12, 1e-6));
  CHECK_THAT(photon_rate(8.5e-6, 375e-9),
             Catch::Matchers::WithinRel(1.6046234e13, 1e-6));
  CHECK(photon_rate(0.0, 375e-9) == 0.0);

  // doubling the power doubles the flux, exactly
  CHECK(photon_rate(5.0e-6, 397e-9) == 2.0 * photon_rate(2.5e-6, 397e-9));
}

TEST_CASE("photon rate rejects bad arguments") {
  CHECK_THROWS_AS(photon_rate(-1e-6, 375e-9), std::domain_error);
  CHECK_THROWS_AS(photon_rate(1e-6, 0.0), std::domain_error);
  CHECK_THROWS_AS(photon_rate(1e-6, -375e-9), std::domain_error);
  CHECK_THROWS_AS(photon_rate(std::nan(""), 375e-9), std::domain_error);
}

TEST_CASE("calcium-40 species") {
  const IonSpecies ca = IonSpecies::calcium40();
  CHECK(ca.mass == 40.0 * codata2018.atomic_mass_unit);
  CHECK(ca.charge == codata2018.elementary_charge);
  CHECK_NOTHROW(ca.validate());

  IonSpecies bad = ca;
  bad.mass = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = ca;
  bad.charge = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("coulomb constant") {
  CHECK_THAT(codata2018.coulomb_constant(),
             Catch::Matchers::WithinRel(8.9875517923e9, 1e-10));
}

TEST_CASE("unit conversions are exact powers of ten") {
  CHECK(unit_convert(1.5, Unit::meter, Unit::micrometer) == 1.5e6);
  CHECK(unit_convert(1.5e6, Unit::micrometer, Unit::meter) == 1.5);
  CHECK(unit_convert(2.0, Unit::millimeter, Unit::micrometer) == 2000.0);
  CHECK(unit_convert(8.5, Unit::microwatt, Unit::watt) == 8.5e-6);
  CHECK(unit_convert(0.25, Unit::second, Unit::millisecond) == 250.0);
  CHECK(unit_convert(90.0, Unit::kilohertz, Unit::hertz) == 90e3);
  CHECK(unit_convert(4.5e-21, Unit::newton, Unit::zeptonewton) == 4.5);
  CHECK(unit_convert(0.03, Unit::volt_per_meter, Unit::millivolt_per_meter) == 30.0);

  // round trips through the largest exposed decade gap stay within 1 ulp
  const double x = 1.234567890123456;
  const double back =
      unit_convert(unit_convert(x, Unit::newton, Unit::zeptonewton), Unit::zeptonewton,
                   Unit::newton);
  CHECK_THAT(back, Catch::Matchers::WithinULP(x, 1));
}

TEST_CASE("unit conversion rejects dimension mixing") {
  CHECK_THROWS_AS(unit_convert(1.0, Unit::meter, Unit::second), unit_error);
  CHECK_THROWS_AS(unit_convert(1.0, Unit::watt, Unit::volt_per_meter), unit_error);
  CHECK_THROWS_AS(unit_convert(1.0, Unit::hertz, Unit::newton), unit_error);
}

TEST_CASE("unit names") {
  CHECK(std::string(unit_info(Unit::micrometer).name) == "um");
  CHECK(std::string(unit_info(Unit::zeptonewton).name) == "zN");
  CHECK(std::string(unit_info(Unit::millivolt_per_meter).name) == "mV/m");
  CHECK(unit_info(Unit::micrometer).decade == -6);
  CHECK(unit_info(Unit::kilohertz).decade == 3);
}
