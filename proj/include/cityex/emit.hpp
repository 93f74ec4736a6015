// emit.hpp - overlay and table writers for city statistics
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cityex/excellence.hpp"

namespace cityex {

enum class OverlayFormat { GpsVisualizer, GeoJson, Table, Html };

std::string_view to_string(OverlayFormat f);

struct OverlayDocument {
  OverlayFormat format;
  std::string body;
  std::size_t feature_count = 0;
};

/// Largest display radius, matching the visualizer's "Maximum radius" of 30.
inline constexpr double kMaxDisplayRadius = 30.0;

/// "obs: 147, exp: 71.50, ratio: 2.06*" (asterisk only when significant).
std::string describe(const CityStats& s);

/// Two-decimal ratio text, "NA" when the expected count is zero.
std::string format_ratio(const CityStats& s);

/// Linear scaling so the largest radius maps to kMaxDisplayRadius.
std::vector<double> display_radii(const std::vector<CityStats>& stats);

/// Tab-separated GPS Visualizer upload: name, desc, latitude, longitude,
/// color, n (n carries the circle radius). Failed geocodes are left out and
/// counted in a trailing "#" comment line.
OverlayDocument emit_gpsviz(const std::vector<CityStats>& stats);

OverlayDocument emit_geojson(const std::vector<CityStats>& stats);

/// CSV statistics table, one row per city including failed geocodes.
OverlayDocument emit_table(const std::vector<CityStats>& stats);

struct HtmlOptions {
  std::string title = "City excellence map";
  // Slippy-map tile template; empty renders on a blank background.
  std::string tile_url;
};

OverlayDocument emit_html(const std::vector<CityStats>& stats, const HtmlOptions& options = {});

inline constexpr std::string_view kTableHeader =
    "city,region,country,n,observed,expected,ratio,z,p_value,testable,significant,color,radius,lat,"
    "lon";

}  // namespace cityex
