#include <algorithm>

#include <fmt/format.h>

#include "cityex/emit.hpp"

namespace cityex {
namespace {

std::string json_string(std::string_view s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '<': out += "\\u003c"; break;  // keeps "</script>" out of inline HTML
      default:
        if (c < 0x20) out += fmt::format("\\u{:04x}", c);
        else out += static_cast<char>(c);
    }
  }
  return out + "\"";
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  // Avoid "-0.00" for values that round to zero.
  std::string s = fmt::format("{:.{}f}", v, digits);
  if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string p_value_text(double p) { return fmt::format("{:.6g}", p); }

bool mapped(const CityStats& s) { return !s.point.failed; }

}  // namespace

std::string_view to_string(OverlayFormat f) {
  switch (f) {
    case OverlayFormat::GpsVisualizer: return "gpsviz";
    case OverlayFormat::GeoJson: return "geojson";
    case OverlayFormat::Table: return "table";
    case OverlayFormat::Html: return "html";
  }
  return "?";
}

std::string format_ratio(const CityStats& s) { return s.ratio ? fixed(*s.ratio, 2) : "NA"; }

std::string describe(const CityStats& s) {
  return fmt::format("obs: {}, exp: {}, ratio: {}{}", s.observed, fixed(s.expected, 2), format_ratio(s),
                     s.significant ? "*" : "");
}

std::vector<double> display_radii(const std::vector<CityStats>& stats) {
  double max_radius = 0;
  for (const auto& s : stats) max_radius = std::max(max_radius, s.radius);
  std::vector<double> out;
  out.reserve(stats.size());
  for (const auto& s : stats) out.push_back(max_radius > 0 ? s.radius / max_radius * kMaxDisplayRadius : 0);
  return out;
}

OverlayDocument emit_gpsviz(const std::vector<CityStats>& stats) {
  OverlayDocument doc{OverlayFormat::GpsVisualizer, "name\tdesc\tlatitude\tlongitude\tcolor\tn\n", 0};
  std::size_t omitted = 0;
  for (const auto& s : stats) {
    if (!mapped(s)) {
      ++omitted;
      continue;
    }
    doc.body += fmt::format("{}\t{}\t{:.6f}\t{:.6f}\t{}\t{}\n", s.key.render(), describe(s), s.point.lat,
                            s.point.lon, color_name(s.color), fixed(s.radius, 2));
    ++doc.feature_count;
  }
  if (omitted > 0) doc.body += fmt::format("# {} cities without coordinates omitted\n", omitted);
  return doc;
}

namespace {

std::string feature_properties(const CityStats& s) {
  return fmt::format(
      "{{\"city\":{},\"region\":{},\"country\":{},\"n\":{},\"observed\":{},\"expected\":{},"
      "\"ratio\":{},\"z\":{},\"p_value\":{},\"testable\":{},\"significant\":{},\"color\":{},"
      "\"color_name\":{},\"radius\":{},\"desc\":{}}}",
      json_string(s.key.city), json_string(s.key.region), json_string(s.key.country), s.n, s.observed,
      fixed(s.expected, 2), s.ratio ? fixed(*s.ratio, 2) : "null", fixed(s.z, 4), p_value_text(s.p_value),
      s.testable, s.significant, json_string(color_hex(s.color)), json_string(color_name(s.color)),
      fixed(s.radius, 2), json_string(describe(s)));
}

}  // namespace

OverlayDocument emit_geojson(const std::vector<CityStats>& stats) {
  OverlayDocument doc{OverlayFormat::GeoJson, "{\"type\":\"FeatureCollection\",\"features\":[", 0};
  for (const auto& s : stats) {
    if (!mapped(s)) continue;
    doc.body += doc.feature_count == 0 ? "\n" : ",\n";
    doc.body += fmt::format(
        "{{\"type\":\"Feature\",\"geometry\":{{\"type\":\"Point\",\"coordinates\":[{:.6f},{:.6f}]}},"
        "\"properties\":{}}}",
        s.point.lon, s.point.lat, feature_properties(s));
    ++doc.feature_count;
  }
  doc.body += "\n]}\n";
  return doc;
}

OverlayDocument emit_table(const std::vector<CityStats>& stats) {
  OverlayDocument doc{OverlayFormat::Table, std::string(kTableHeader) + "\n", 0};
  for (const auto& s : stats) {
    doc.body += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6f},{:.6f}\n", csv_field(s.key.city),
                            csv_field(s.key.region), csv_field(s.key.country), s.n, s.observed,
                            fixed(s.expected, 2), format_ratio(s), fixed(s.z, 4), p_value_text(s.p_value),
                            s.testable, s.significant, color_name(s.color), fixed(s.radius, 2),
                            s.point.lat, s.point.lon);
    ++doc.feature_count;
  }
  return doc;
}

namespace {

constexpr std::string_view kHtmlHead = R"(<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>
body {{ margin: 0; font-family: sans-serif; background: #f4f4f4; }}
h1 {{ font-size: 1.1em; margin: 8px 12px; }}
#map {{ position: relative; width: 960px; height: 540px; margin: 0 12px; overflow: hidden;
        background: #dfe8ef; border: 1px solid #999; }}
#map svg {{ position: absolute; left: 0; top: 0; }}
#popup {{ position: absolute; display: none; background: #fff; border: 1px solid #333;
          padding: 4px 8px; font-size: 12px; pointer-events: none; white-space: nowrap; }}
#legend {{ margin: 8px 12px; font-size: 12px; }}
#legend span {{ display: inline-block; width: 10px; height: 10px; border-radius: 5px; margin: 0 4px 0 12px; }}
</style>
</head>
<body>
<h1>{title}</h1>
<div id="map"><div id="popup"></div></div>
<div id="legend"></div>
<script type="application/json" id="cityex-data">
)";

constexpr std::string_view kHtmlTail = R"(</script>
<script>
(function () {
  var cfg = JSON.parse(document.getElementById("cityex-data").textContent);
  var W = 960, H = 540, TILE = 256, NS = "http://www.w3.org/2000/svg";
  var map = document.getElementById("map"), popup = document.getElementById("popup");
  function mx(lon) { return (lon + 180) / 360; }
  function my(lat) {
    var s = Math.sin(Math.max(-85, Math.min(85, lat)) * Math.PI / 180);
    return 0.5 - Math.log((1 + s) / (1 - s)) / (4 * Math.PI);
  }
  var pts = cfg.cities;
  var x0 = 1, x1 = 0, y0 = 1, y1 = 0;
  pts.forEach(function (c) {
    x0 = Math.min(x0, mx(c.lon)); x1 = Math.max(x1, mx(c.lon));
    y0 = Math.min(y0, my(c.lat)); y1 = Math.max(y1, my(c.lat));
  });
  if (!pts.length) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  var zoom = 0;
  while (zoom < 12 && (x1 - x0) * TILE * Math.pow(2, zoom + 1) < W - 80 &&
         (y1 - y0) * TILE * Math.pow(2, zoom + 1) < H - 80) zoom++;
  var world = TILE * Math.pow(2, zoom);
  var ox = (x0 + x1) / 2 * world - W / 2, oy = (y0 + y1) / 2 * world - H / 2;
  var svg = document.createElementNS(NS, "svg");
  svg.setAttribute("width", W); svg.setAttribute("height", H);
  map.insertBefore(svg, popup);
  if (cfg.tiles) {
    var n = Math.pow(2, zoom);
    for (var tx = Math.floor(ox / TILE); tx * TILE < ox + W; tx++) {
      for (var ty = Math.max(0, Math.floor(oy / TILE)); ty * TILE < oy + H && ty < n; ty++) {
        var img = document.createElementNS(NS, "image");
        var wx = ((tx % n) + n) % n;
        img.setAttribute("href", cfg.tiles.replace("{z}", zoom).replace("{x}", wx).replace("{y}", ty));
        img.setAttribute("x", tx * TILE - ox); img.setAttribute("y", ty * TILE - oy);
        img.setAttribute("width", TILE); img.setAttribute("height", TILE);
        svg.appendChild(img);
      }
    }
  }
  pts.slice().sort(function (a, b) { return b.r - a.r; }).forEach(function (c) {
    var circle = document.createElementNS(NS, "circle");
    var cx = mx(c.lon) * world - ox, cy = my(c.lat) * world - oy;
    circle.setAttribute("cx", cx); circle.setAttribute("cy", cy);
    circle.setAttribute("r", c.r);
    circle.setAttribute("fill", c.color); circle.setAttribute("fill-opacity", "0.6");
    circle.setAttribute("stroke", "#333"); circle.setAttribute("stroke-width", "0.5");
    circle.style.cursor = "pointer";
    var tip = document.createElementNS(NS, "title");
    tip.textContent = c.name;
    circle.appendChild(tip);
    circle.addEventListener("click", function (ev) {
      ev.stopPropagation();
      popup.textContent = c.desc;
      popup.style.left = Math.min(cx + 8, W - 200) + "px"; popup.style.top = (cy + 8) + "px";
      popup.style.display = "block";
    });
    svg.appendChild(circle);
  });
  map.addEventListener("click", function () { popup.style.display = "none"; });
  var legend = document.getElementById("legend");
  cfg.legend.forEach(function (l) {
    var sw = document.createElement("span"); sw.style.background = l.color;
    legend.appendChild(sw); legend.appendChild(document.createTextNode(l.label));
  });
})();
</script>
</body>
</html>
)";

}  // namespace

OverlayDocument emit_html(const std::vector<CityStats>& stats, const HtmlOptions& options) {
  const auto radii = display_radii(stats);
  std::string data = "{\"tiles\":" + json_string(options.tile_url) + ",\n\"legend\":[";
  const std::pair<Color, std::string_view> legend[] = {
      {Color::DarkGreen, "above expectation, significant"},
      {Color::LightGreen, "above, not significant"},
      {Color::LimeGreen, "above, expected < 5"},
      {Color::Grey, "as expected"},
      {Color::Orange, "below, expected < 5"},
      {Color::OrangeRed, "below, not significant"},
      {Color::Red, "below expectation, significant"}};
  for (std::size_t i = 0; i < std::size(legend); ++i)
    data += fmt::format("{}{{\"color\":{},\"label\":{}}}", i ? "," : "",
                        json_string(color_hex(legend[i].first)), json_string(legend[i].second));
  data += "],\n\"cities\":[";

  OverlayDocument doc{OverlayFormat::Html, {}, 0};
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    if (!mapped(s)) continue;
    data += doc.feature_count == 0 ? "\n" : ",\n";
    data += fmt::format("{{\"name\":{},\"desc\":{},\"lat\":{:.6f},\"lon\":{:.6f},\"color\":{},\"r\":{:.6f},"
                        "\"properties\":{}}}",
                        json_string(s.key.render()), json_string(describe(s)), s.point.lat, s.point.lon,
                        json_string(color_hex(s.color)), radii[i], feature_properties(s));
    ++doc.feature_count;
  }
  data += "\n]}\n";

  doc.body = fmt::format(fmt::runtime(kHtmlHead), fmt::arg("title", html_escape(options.title)));
  doc.body += data;
  doc.body += kHtmlTail;
  return doc;
}

}  // namespace cityex
