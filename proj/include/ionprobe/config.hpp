#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ionprobe/charging.hpp"
#include "ionprobe/crystal.hpp"
#include "ionprobe/errors.hpp"
#include "ionprobe/forward.hpp"
#include "ionprobe/units.hpp"

namespace ionprobe {

/// Flat `key = value` document with `#` comments. Keys are consumed as they
/// are read so leftovers (typos, misplaced sections) can be reported by name.
class KeyValueDoc {
 public:
  static KeyValueDoc parse_string(const std::string& text,
                                  const std::string& name = "<string>") {
    KeyValueDoc doc;
    doc.name_ = name;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
      ++line_no;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw config_error(doc.where(line_no) + "expected 'key = value'");
      Entry entry;
      entry.key = trim(trimmed.substr(0, eq));
      entry.value = trim(trimmed.substr(eq + 1));
      entry.line = line_no;
      if (entry.key.empty()) throw config_error(doc.where(line_no) + "empty key");
      if (entry.value.empty())
        throw config_error(doc.where(line_no) + "empty value for '" + entry.key + "'");
      for (const auto& prior : doc.entries_)
        if (prior.key == entry.key)
          throw config_error(doc.where(line_no) + "duplicate key '" + entry.key +
                             "' (first set at line " + std::to_string(prior.line) + ")");
      doc.entries_.push_back(entry);
    }
    return doc;
  }

  static KeyValueDoc parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
  }

  const std::string& name() const { return name_; }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  std::string get_string(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw config_error(name_ + ": missing required key '" + key + "'");
    e->consumed = true;
    return e->value;
  }

  std::string get_string_or(const std::string& key, const std::string& fallback) {
    return has(key) ? get_string(key) : fallback;
  }

  double get_number(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw config_error(name_ + ": missing required key '" + key + "'");
    e->consumed = true;
    return parse_double(*e);
  }

  double get_number_or(const std::string& key, double fallback) {
    return has(key) ? get_number(key) : fallback;
  }

  long get_integer_or(const std::string& key, long fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    e->consumed = true;
    const double v = parse_double(*e);
    if (v != std::floor(v) || std::abs(v) > 9e15)
      throw config_error(where(e->line) + "'" + key + "' must be an integer");
    return static_cast<long>(v);
  }

  std::uint64_t get_uint64(const std::string& key) {
    const Entry* e = find(key);
    if (!e) throw config_error(name_ + ": missing required key '" + key + "'");
    e->consumed = true;
    try {
      // stoull accepts a leading minus and wraps; require plain digits.
      if (e->value.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("not a digit string");
      return std::stoull(e->value);
    } catch (const std::exception&) {
      throw config_error(where(e->line) + "'" + key + "' must be a non-negative integer");
    }
  }

  bool get_bool_or(const std::string& key, bool fallback) {
    const Entry* e = find(key);
    if (!e) return fallback;
    e->consumed = true;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    throw config_error(where(e->line) + "'" + key + "' must be true or false");
  }

  /// Throws naming the first key that was never consumed.
  void require_fully_consumed() const {
    for (const auto& e : entries_)
      if (!e.consumed)
        throw config_error(where(e.line) + "unknown key '" + e.key + "'");
  }

 private:
  struct Entry {
    std::string key, value;
    int line = 0;
    mutable bool consumed = false;
  };

  static std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
  }

  std::string where(int line) const { return name_ + ":" + std::to_string(line) + ": "; }

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.key == key) return &e;
    return nullptr;
  }

  double parse_double(const Entry& e) const {
    try {
      std::size_t consumed = 0;
      const double v = std::stod(e.value, &consumed);
      if (consumed != e.value.size()) throw std::invalid_argument("trailing junk");
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
      return v;
    } catch (const std::exception&) {
      throw config_error(where(e.line) + "'" + e.key + "' must be a number, got '" + e.value +
                         "'");
    }
  }

  std::string name_;
  std::vector<Entry> entries_;
};

struct FieldMapRange {
  double dx_min = -1000e-6;  // m
  double dx_max = 1000e-6;   // m
  int points = 201;
  double charge_count = 1.0;
};

/// One experiment description: trap, beam geometry, optional charging
/// kinetics, illumination schedule, and the knobs of the auxiliary commands.
/// Which sections must be present depends on the command; the parser only
/// enforces internal consistency.
struct RunConfig {
  ExperimentSetup setup;
  std::optional<ChargingParams> electrode1, electrode2, glass_kinetics;
  IlluminationSchedule schedule;  // may have no segments
  double cadence = 1.0;           // s
  double noise_reference_sigma = 0.12e-6;  // m, for 3 ions at 1 s cadence
  std::optional<std::uint64_t> seed;
  FieldMapRange fieldmap;
  double sensitivity_position_noise = 0.12e-6;  // m, 3 ions, 1 s
  double sensitivity_integration_time = 1.0;    // s
};

namespace detail {

inline std::optional<ChargingParams> parse_kinetics(KeyValueDoc& doc,
                                                    const std::string& prefix) {
  const std::string k_p0 = prefix + ".p0_per_s";
  const std::string k_delta = prefix + ".delta";
  const std::string k_gamma = prefix + ".gamma_per_s";
  if (!doc.has(k_p0) && !doc.has(k_delta) && !doc.has(k_gamma)) return std::nullopt;
  ChargingParams params;
  params.production_rate = doc.get_number(k_p0);
  params.saturation_coeff = doc.get_number(k_delta);
  params.relaxation_rate = doc.get_number(k_gamma);
  params.validate();
  return params;
}

}  // namespace detail

inline RunConfig parse_run_config(KeyValueDoc& doc) {
  RunConfig config;

  TrapConfig trap;
  trap.axial_frequency = 2.0 * std::numbers::pi * doc.get_number("trap.axial_frequency_hz");
  trap.trap_height = doc.get_number("trap.trap_height_um") * 1e-6;
  trap.ion_count = static_cast<int>(doc.get_integer_or("trap.ion_count", 3));
  trap.ion = IonSpecies::calcium40();
  // Radial confinement does not enter the axial response; accepted for
  // completeness of the trap description.
  doc.get_number_or("trap.radial_frequency1_hz", 0.0);
  doc.get_number_or("trap.radial_frequency2_hz", 0.0);
  trap.validate();

  config.setup.trap = trap;
  const std::string source = doc.get_string("setup.source");
  if (source == "electrode") config.setup.source_kind = SourceKind::electrode;
  else if (source == "glass") config.setup.source_kind = SourceKind::glass;
  else if (source == "both") config.setup.source_kind = SourceKind::both;
  else
    throw config_error(doc.name() +
                       ": setup.source must be electrode, glass, or both, got '" + source + "'");

  config.setup.beam_offset_x = doc.get_number("setup.beam_offset_um") * 1e-6;
  if (doc.has("setup.glass_height_um"))
    config.setup.glass_height = doc.get_number("setup.glass_height_um") * 1e-6;
  config.setup.dipole_length = doc.get_number_or("setup.dipole_length_um", 1.0) * 1e-6;
  config.setup.include_image = doc.get_bool_or("setup.include_image", true);
  config.setup.wavelength = doc.get_number("setup.wavelength_nm") * 1e-9;
  config.setup.calibration_power = doc.get_number("setup.power_uw") * 1e-6;
  config.setup.validate();

  config.electrode1 = detail::parse_kinetics(doc, "kinetics.electrode1");
  config.electrode2 = detail::parse_kinetics(doc, "kinetics.electrode2");
  config.glass_kinetics = detail::parse_kinetics(doc, "kinetics.glass");
  if (config.electrode2 && !config.electrode1)
    throw config_error(doc.name() + ": kinetics.electrode2 given without kinetics.electrode1");

  config.cadence = doc.get_number_or("schedule.cadence_s", 1.0);
  if (!(config.cadence > 0.0))
    throw config_error(doc.name() + ": schedule.cadence_s must be > 0");

  config.schedule.calibration_power = config.setup.calibration_power;
  for (int n = 1;; ++n) {
    const std::string prefix = "schedule.segment" + std::to_string(n);
    if (!doc.has(prefix + ".state")) break;
    ScheduleSegment segment;
    const std::string state = doc.get_string(prefix + ".state");
    if (state == "on") segment.laser_on = true;
    else if (state == "off") segment.laser_on = false;
    else
      throw config_error(doc.name() + ": " + prefix + ".state must be on or off, got '" +
                         state + "'");
    segment.duration = doc.get_number(prefix + ".duration_s");
    const double default_power_uw =
        segment.laser_on ? config.setup.calibration_power * 1e6 : 0.0;
    segment.power = doc.get_number_or(prefix + ".power_uw", default_power_uw) * 1e-6;
    config.schedule.segments.push_back(segment);
  }
  if (!config.schedule.segments.empty()) config.schedule.validate();

  config.noise_reference_sigma = doc.get_number_or("noise.sigma_um", 0.12) * 1e-6;
  if (config.noise_reference_sigma < 0.0)
    throw config_error(doc.name() + ": noise.sigma_um must be >= 0");
  if (doc.has("seed")) config.seed = doc.get_uint64("seed");

  config.fieldmap.dx_min = doc.get_number_or("fieldmap.dx_min_um", -1000.0) * 1e-6;
  config.fieldmap.dx_max = doc.get_number_or("fieldmap.dx_max_um", 1000.0) * 1e-6;
  config.fieldmap.points = static_cast<int>(doc.get_integer_or("fieldmap.points", 201));
  config.fieldmap.charge_count = doc.get_number_or("fieldmap.charge_count", 1.0);
  if (config.fieldmap.points < 2)
    throw config_error(doc.name() + ": fieldmap.points must be >= 2");
  if (!(config.fieldmap.dx_max > config.fieldmap.dx_min))
    throw config_error(doc.name() + ": fieldmap.dx_max_um must exceed fieldmap.dx_min_um");
  if (!(config.fieldmap.charge_count >= 0.0))
    throw config_error(doc.name() + ": fieldmap.charge_count must be >= 0");

  config.sensitivity_position_noise =
      doc.get_number_or("sensitivity.position_noise_um", 0.12) * 1e-6;
  config.sensitivity_integration_time = doc.get_number_or("sensitivity.integration_time_s", 1.0);

  doc.require_fully_consumed();
  return config;
}

inline RunConfig load_run_config(const std::string& path) {
  KeyValueDoc doc = KeyValueDoc::parse_file(path);
  return parse_run_config(doc);
}

}  // namespace ionprobe
