#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ionprobe/errors.hpp"
#include "ionprobe/forward.hpp"

namespace ionprobe {

struct FieldMapPoint {
  double beam_offset_x = 0.0;  // m
  double field = 0.0;          // V/m
};

namespace detail {

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

inline double parse_number(const std::string& text, const std::string& path, int line_no) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw config_error(path + ":" + std::to_string(line_no) + ": not a number: '" + text + "'");
  }
  while (consumed < text.size() &&
         (text[consumed] == ' ' || text[consumed] == '\t'))
    ++consumed;
  if (consumed != text.size())
    throw config_error(path + ":" + std::to_string(line_no) + ": trailing junk in '" + text +
                       "'");
  if (!std::isfinite(value))
    throw config_error(path + ":" + std::to_string(line_no) + ": non-finite value");
  return value;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open for reading: " + path);
  return in;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  return out;
}

inline void check_header(const std::string& got, const std::string& expected,
                         const std::string& path) {
  if (got != expected)
    throw config_error(path + ":1: expected header '" + expected + "', got '" + got + "'");
}

}  // namespace detail

/// Columns: time in seconds, center-of-mass displacement in micrometers.
inline void write_timeseries_csv(const std::string& path, const TimeSeries& series) {
  std::ofstream out = detail::open_for_write(path);
  out << "t_s,x_um\n";
  for (const auto& s : series.samples)
    out << detail::format_g(s.t) << ',' << detail::format_g(s.com_position * 1e6) << '\n';
  if (!out) throw io_error("write failed: " + path);
}

inline TimeSeries read_timeseries_csv(const std::string& path) {
  std::ifstream in = detail::open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw config_error(path + ":1: empty file");
  detail::strip_cr(line);
  detail::check_header(line, "t_s,x_um", path);

  TimeSeries series;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected 2 fields, got " +
                         std::to_string(fields.size()));
    TimeSample sample;
    sample.t = detail::parse_number(fields[0], path, line_no);
    sample.com_position = detail::parse_number(fields[1], path, line_no) * 1e-6;
    if (!series.samples.empty() && sample.t <= series.samples.back().t)
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": time must be strictly increasing");
    series.samples.push_back(sample);
  }
  if (series.samples.empty()) throw config_error(path + ": no data rows");
  return series;
}

/// Columns: beam offset in micrometers, initial drift velocity in
/// micrometers per second, beam power in microwatts.
inline void write_velocity_map_csv(const std::string& path, const VelocityMap& map) {
  std::ofstream out = detail::open_for_write(path);
  out << "dx_um,v_um_per_s,power_uw\n";
  for (const auto& pt : map.points)
    out << detail::format_g(pt.beam_offset_x * 1e6) << ','
        << detail::format_g(pt.initial_velocity * 1e6) << ','
        << detail::format_g(pt.power * 1e6) << '\n';
  if (!out) throw io_error("write failed: " + path);
}

inline VelocityMap read_velocity_map_csv(const std::string& path) {
  std::ifstream in = detail::open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw config_error(path + ":1: empty file");
  detail::strip_cr(line);
  detail::check_header(line, "dx_um,v_um_per_s,power_uw", path);

  VelocityMap map;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != 3)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                         std::to_string(fields.size()));
    VelocityPoint pt;
    pt.beam_offset_x = detail::parse_number(fields[0], path, line_no) * 1e-6;
    pt.initial_velocity = detail::parse_number(fields[1], path, line_no) * 1e-6;
    pt.power = detail::parse_number(fields[2], path, line_no) * 1e-6;
    if (!(pt.power > 0.0))
      throw config_error(path + ":" + std::to_string(line_no) + ": power must be > 0");
    map.points.push_back(pt);
  }
  if (map.points.empty()) throw config_error(path + ": no data rows");
  return map;
}

/// Columns: beam offset in micrometers, axial field in volts per meter.
inline void write_field_map_csv(const std::string& path,
                                const std::vector<FieldMapPoint>& points) {
  std::ofstream out = detail::open_for_write(path);
  out << "dx_um,e_v_per_m\n";
  for (const auto& pt : points)
    out << detail::format_g(pt.beam_offset_x * 1e6) << ',' << detail::format_g(pt.field) << '\n';
  if (!out) throw io_error("write failed: " + path);
}

}  // namespace ionprobe
