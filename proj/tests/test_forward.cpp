#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ionprobe/forward.hpp"
#include "ionprobe/presets.hpp"

using namespace ionprobe;

TEST_CASE("noise sigma scales with exposure and string size") {
  CHECK(default_noise_sigma(0.12e-6, 1.0, 3) == 0.12e-6);
  CHECK_THAT(default_noise_sigma(0.12e-6, 0.25, 3),
             Catch::Matchers::WithinRel(0.24e-6, 1e-12));
  CHECK_THAT(default_noise_sigma(0.12e-6, 1.0, 12),
             Catch::Matchers::WithinRel(0.06e-6, 1e-12));
  CHECK_THROWS_AS(default_noise_sigma(0.12e-6, 0.0, 3), std::domain_error);
  CHECK_THROWS_AS(default_noise_sigma(-1e-9, 1.0, 3), std::domain_error);
  CHECK_THROWS_AS(default_noise_sigma(0.12e-6, 1.0, 0), std::domain_error);
}

TEST_CASE("same seed reproduces the trace bit for bit") {
  const ExperimentSetup setup = electrode_reference_setup(3);
  const IlluminationSchedule schedule = IlluminationSchedule::on_off(30.0, 60.0, 8.5e-6);
  const auto a = synthesize_timeseries(setup, electrode_charging_preset(), std::nullopt,
                                       schedule, 0.5, 0.12e-6, 42);
  const auto b = synthesize_timeseries(setup, electrode_charging_preset(), std::nullopt,
                                       schedule, 0.5, 0.12e-6, 42);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].t == b.samples[i].t);
    CHECK(a.samples[i].com_position == b.samples[i].com_position);
  }

  const auto c = synthesize_timeseries(setup, electrode_charging_preset(), std::nullopt,
                                       schedule, 0.5, 0.12e-6, 43);
  bool any_different = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    any_different = any_different || a.samples[i].com_position != c.samples[i].com_position;
  CHECK(any_different);
}

TEST_CASE("electrode pulls the string toward the beam, glass pushes it away") {
  // 360 s dark: three relaxation times of the slow electrode process.
  const IlluminationSchedule schedule = IlluminationSchedule::on_off(90.0, 360.0, 2.5e-6);

  ExperimentSetup el = electrode_reference_setup(3);
  el.calibration_power = 2.5e-6;
  const auto el_trace =
      synthesize_timeseries(el, electrode_charging_preset(), std::nullopt, schedule, 1.0, 0.0, 1);
  ExperimentSetup gl = glass_reference_setup(3);
  const auto gl_trace = synthesize_timeseries(gl, MultiProcessParams{}, glass_charging_preset(),
                                              schedule, 1.0, 0.0, 1);

  REQUIRE(el.beam_offset_x > 0.0);
  REQUIRE(gl.beam_offset_x > 0.0);
  for (std::size_t i = 1; i < el_trace.samples.size(); ++i) {
    CHECK(el_trace.samples[i].com_position > 0.0);
    CHECK(gl_trace.samples[i].com_position < 0.0);
  }

  // after the light turns off the electrode response relaxes, the glass
  // response persists
  auto at = [](const TimeSeries& ts, double t) {
    for (const auto& s : ts.samples)
      if (s.t == t) return s.com_position;
    FAIL("sample not found");
    return 0.0;
  };
  const double el_on_end = at(el_trace, 90.0);
  const double el_final = at(el_trace, 450.0);
  CHECK(std::abs(el_final) < 0.05 * std::abs(el_on_end));

  const double gl_on_end = at(gl_trace, 90.0);
  const double gl_final = at(gl_trace, 450.0);
  CHECK(gl_final == gl_on_end);
}

TEST_CASE("both sources superpose exactly") {
  ExperimentSetup both = glass_reference_setup(3);
  both.source_kind = SourceKind::both;
  both.beam_offset_x = 250e-6;
  ExperimentSetup el = both;
  el.source_kind = SourceKind::electrode;
  ExperimentSetup gl = both;
  gl.source_kind = SourceKind::glass;

  const IlluminationSchedule schedule = IlluminationSchedule::on_off(45.0, 90.0, 2.5e-6);
  const auto t_both = synthesize_timeseries(both, electrode_charging_preset(),
                                            glass_charging_preset(), schedule, 1.0, 0.0, 7);
  const auto t_el = synthesize_timeseries(el, electrode_charging_preset(), std::nullopt,
                                          schedule, 1.0, 0.0, 7);
  const auto t_gl = synthesize_timeseries(gl, MultiProcessParams{}, glass_charging_preset(),
                                          schedule, 1.0, 0.0, 7);

  REQUIRE(t_both.samples.size() == t_el.samples.size());
  for (std::size_t i = 0; i < t_both.samples.size(); ++i) {
    CHECK(t_both.samples[i].com_position ==
          t_el.samples[i].com_position + t_gl.samples[i].com_position);
  }
}

TEST_CASE("readout noise has the requested spread") {
  ExperimentSetup setup = electrode_reference_setup(3);
  MultiProcessParams quiet = electrode_charging_preset();
  for (auto& p : quiet.processes) p.production_rate = 0.0;  // no charging, pure noise

  const double sigma = 0.12e-6;
  IlluminationSchedule schedule = IlluminationSchedule::on_off(2000.0, 0.0, 8.5e-6);
  const auto trace = synthesize_timeseries(setup, quiet, std::nullopt, schedule, 1.0, sigma, 99);

  double mean = 0.0;
  for (const auto& s : trace.samples) mean += s.com_position;
  mean /= trace.samples.size();
  double var = 0.0;
  for (const auto& s : trace.samples) var += (s.com_position - mean) * (s.com_position - mean);
  var /= (trace.samples.size() - 1);

  CHECK(std::abs(mean) < 5.0 * sigma / std::sqrt(static_cast<double>(trace.samples.size())));
  CHECK(std::sqrt(var) > 0.9 * sigma);
  CHECK(std::sqrt(var) < 1.1 * sigma);
}

TEST_CASE("initial glass drift speed") {
  ExperimentSetup setup = glass_reference_setup(1);
  setup.include_image = false;
  const double rate = glass_charging_preset().production_rate;  // 566 charges/s at 2.5 uW
  const double v = initial_velocity_glass(setup, rate);
  CHECK_THAT(v, Catch::Matchers::WithinRel(2.2299e-7, 1e-3));  // ~0.22 um/s

  setup.include_image = true;
  const double v_screened = initial_velocity_glass(setup, rate);
  CHECK(v_screened < v);
  CHECK(v_screened > 0.5 * v);

  ExperimentSetup el = electrode_reference_setup(1);
  CHECK_THROWS_AS(initial_velocity_glass(el, rate), config_error);
}

TEST_CASE("initial electrode drift speed is in the observable range") {
  const ExperimentSetup setup = electrode_reference_setup(1);
  const double rate = initial_production_rate(electrode_charging_preset());
  const double v = initial_velocity_electrode(setup, rate);
  CHECK_THAT(v, Catch::Matchers::WithinRel(2.461e-6, 1e-3));  // ~2.5 um/s
  CHECK(v > 0.1e-6);
  CHECK(v < 10e-6);
}

TEST_CASE("short-time trace slope matches the initial drift speed") {
  // single ion: the string average collapses to the point kernel
  ExperimentSetup setup = glass_reference_setup(1);
  const double rate = glass_charging_preset().production_rate;
  const double dt = 0.05;
  IlluminationSchedule schedule = IlluminationSchedule::on_off(dt, 0.0, 2.5e-6);
  const auto trace = synthesize_timeseries(setup, MultiProcessParams{}, glass_charging_preset(),
                                           schedule, dt, 0.0, 3);
  REQUIRE(trace.samples.size() == 2);
  const double slope = trace.samples[1].com_position / dt;
  const double v = initial_velocity_glass(setup, rate);
  CHECK_THAT(std::abs(slope), Catch::Matchers::WithinRel(std::abs(v), 5e-3));
  // the displacement itself is away from the beam
  CHECK(slope < 0.0);

  // three ions: string averaging shifts the slope by less than half a percent
  ExperimentSetup setup3 = glass_reference_setup(3);
  const auto trace3 = synthesize_timeseries(setup3, MultiProcessParams{}, glass_charging_preset(),
                                            schedule, dt, 0.0, 3);
  const double slope3 = trace3.samples[1].com_position / dt;
  CHECK_THAT(std::abs(slope3), Catch::Matchers::WithinRel(std::abs(v), 1e-2));
  CHECK(std::abs(slope3 / slope - 1.0) < 5e-3);
}

TEST_CASE("velocity map matches the single-point speeds") {
  const ExperimentSetup setup = electrode_reference_setup(3);
  const double rate = 1.5e5;
  const std::vector<double> offsets = {-400e-6, -150e-6, 100e-6, 400e-6, 800e-6};
  const std::vector<double> powers = {8.5e-6, 4.25e-6, 8.5e-6, 17e-6, 8.5e-6};

  const VelocityMap map = synthesize_velocity_map(setup, rate, offsets, powers, 0.0, 5);
  REQUIRE(map.points.size() == offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    ExperimentSetup at_point = setup;
    at_point.beam_offset_x = offsets[i];
    const double expected =
        initial_velocity_electrode(at_point, rate * powers[i] / setup.calibration_power);
    CHECK_THAT(map.points[i].initial_velocity, Catch::Matchers::WithinRel(expected, 1e-12));
    CHECK(map.points[i].power == powers[i]);
    CHECK(map.points[i].beam_offset_x == offsets[i]);
  }

  // reproducible under a seed when noisy
  const VelocityMap noisy1 = synthesize_velocity_map(setup, rate, offsets, powers, 1e-8, 11);
  const VelocityMap noisy2 = synthesize_velocity_map(setup, rate, offsets, powers, 1e-8, 11);
  for (std::size_t i = 0; i < offsets.size(); ++i)
    CHECK(noisy1.points[i].initial_velocity == noisy2.points[i].initial_velocity);

  ExperimentSetup both = glass_reference_setup(3);
  both.source_kind = SourceKind::both;
  CHECK_THROWS_AS(synthesize_velocity_map(both, rate, offsets, powers, 0.0, 5), config_error);
}

TEST_CASE("charges per photon") {
  // 566 charges/s from 2.5 uW of 375 nm light is 1.2e-10 charges/photon
  CHECK_THAT(efficiency_from_rate(566.0, 2.5e-6, 375e-9),
             Catch::Matchers::WithinRel(1.1993e-10, 1e-4));

  // round trip
  const double eta = 0.4e-10;
  const double rate = eta * photon_rate(8.5e-6, 397e-9);
  CHECK_THAT(efficiency_from_rate(rate, 8.5e-6, 397e-9), Catch::Matchers::WithinRel(eta, 1e-12));

  // the dipole-normalized quote scales out the assumed dipole length
  const double eta_1um = dipole_efficiency_from_rate(1000.0, 8.5e-6, 375e-9, 1e-6);
  const double eta_2um = dipole_efficiency_from_rate(1000.0, 8.5e-6, 375e-9, 2e-6);
  CHECK_THAT(eta_2um, Catch::Matchers::WithinRel(2.0 * eta_1um, 1e-12));

  CHECK_THROWS_AS(efficiency_from_rate(100.0, 0.0, 375e-9), std::domain_error);
  CHECK_THROWS_AS(dipole_efficiency_from_rate(100.0, 1e-6, 375e-9, 0.0), std::domain_error);
}
