#include "fsurv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace fsurv {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Short decimal label for a tick value (ticks are round numbers by design).
std::string tick_label(double v) {
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void absorb(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void finalize() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 1.0;
      hi += 1.0;
    }
  }
};

// Round tick step of the form {1,2,5}*10^k giving 4-8 ticks.
double tick_step(double span) {
  const double rough = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(rough)));
  for (double mult : {1.0, 2.0, 5.0, 10.0})
    if (rough <= mult * mag) return mult * mag;
  return 10.0 * mag;
}

void escape_into(std::string& out, const std::string& text) {
  for (char c : text) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
}

}  // namespace

std::string render_chart(const Chart& chart) {
  const double ml = 72.0, mr = 24.0, mt = 44.0, mb = 56.0;
  const double pw = chart.width - ml - mr;   // plot width
  const double ph = chart.height - mt - mb;  // plot height

  Range xr, yr;
  for (const Series& s : chart.series) {
    for (double v : s.x) xr.absorb(v);
    for (double v : s.y) yr.absorb(v);
  }
  for (double v : chart.dashed_verticals) xr.absorb(v);
  xr.finalize();
  yr.finalize();
  const double xpad = 0.02 * (xr.hi - xr.lo);
  const double ypad = 0.05 * (yr.hi - yr.lo);
  xr.lo -= xpad;
  xr.hi += xpad;
  yr.lo -= ypad;
  yr.hi += ypad;

  const auto sx = [&](double v) { return ml + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto sy = [&](double v) { return mt + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(chart.width) +
         "\" height=\"" + px(chart.height) + "\" viewBox=\"0 0 " + px(chart.width) + " " +
         px(chart.height) + "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  // Grid and axis ticks.
  const double xstep = tick_step(xr.hi - xr.lo);
  const double ystep = tick_step(yr.hi - yr.lo);
  for (double v = std::ceil(xr.lo / xstep) * xstep; v <= xr.hi + 1e-9 * xstep; v += xstep) {
    const std::string x = px(sx(v));
    svg += "<line x1=\"" + x + "\" y1=\"" + px(mt) + "\" x2=\"" + x + "\" y2=\"" + px(mt + ph) +
           "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + x + "\" y=\"" + px(mt + ph + 18.0) +
           "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333333\">" + tick_label(v) +
           "</text>\n";
  }
  for (double v = std::ceil(yr.lo / ystep) * ystep; v <= yr.hi + 1e-9 * ystep; v += ystep) {
    const std::string y = px(sy(v));
    svg += "<line x1=\"" + px(ml) + "\" y1=\"" + y + "\" x2=\"" + px(ml + pw) + "\" y2=\"" + y +
           "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + px(ml - 8.0) + "\" y=\"" + y +
           "\" font-size=\"12\" text-anchor=\"end\" dominant-baseline=\"middle\" "
           "fill=\"#333333\">" +
           tick_label(v) + "</text>\n";
  }
  svg += "<rect x=\"" + px(ml) + "\" y=\"" + px(mt) + "\" width=\"" + px(pw) + "\" height=\"" +
         px(ph) + "\" fill=\"none\" stroke=\"#555555\"/>\n";

  for (double v : chart.dashed_verticals) {
    const std::string x = px(sx(v));
    svg += "<line x1=\"" + x + "\" y1=\"" + px(mt) + "\" x2=\"" + x + "\" y2=\"" + px(mt + ph) +
           "\" stroke=\"#999999\" stroke-dasharray=\"5,4\"/>\n";
  }

  std::size_t palette_next = 0;
  std::vector<std::pair<std::string, std::string>> legend;  // label, color
  for (const Series& s : chart.series) {
    if (s.x.empty() || s.x.size() != s.y.size()) continue;
    const std::string color =
        s.color.empty() ? kPalette[palette_next++ % (sizeof(kPalette) / sizeof(*kPalette))]
                        : s.color;
    if (!s.label.empty()) legend.emplace_back(s.label, color);
    std::string points;
    auto add_point = [&](double x, double y) {
      if (!points.empty()) points += ' ';
      points += px(sx(x)) + "," + px(sy(y));
    };
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (s.step && k > 0) add_point(s.x[k], s.y[k - 1]);
      add_point(s.x[k], s.y[k]);
    }
    svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + px(s.width) +
           "\"";
    if (s.dashed) svg += " stroke-dasharray=\"6,4\"";
    svg += " points=\"" + points + "\"/>\n";
    if (s.markers) {
      for (std::size_t k = 0; k < s.x.size(); ++k)
        svg += "<circle cx=\"" + px(sx(s.x[k])) + "\" cy=\"" + px(sy(s.y[k])) +
               "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
  }

  if (!chart.title.empty()) {
    svg += "<text x=\"" + px(ml + pw / 2.0) + "\" y=\"24\" font-size=\"16\" "
           "text-anchor=\"middle\" fill=\"#111111\">";
    escape_into(svg, chart.title);
    svg += "</text>\n";
  }
  if (!chart.x_label.empty()) {
    svg += "<text x=\"" + px(ml + pw / 2.0) + "\" y=\"" + px(chart.height - 12.0) +
           "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#111111\">";
    escape_into(svg, chart.x_label);
    svg += "</text>\n";
  }
  if (!chart.y_label.empty()) {
    svg += "<text x=\"18\" y=\"" + px(mt + ph / 2.0) +
           "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#111111\" transform=\"rotate(-90 "
           "18 " +
           px(mt + ph / 2.0) + ")\">";
    escape_into(svg, chart.y_label);
    svg += "</text>\n";
  }

  double ly = mt + 14.0;
  for (const auto& [label, color] : legend) {
    const double lx = ml + pw - 150.0;
    svg += "<line x1=\"" + px(lx) + "\" y1=\"" + px(ly - 4.0) + "\" x2=\"" + px(lx + 22.0) +
           "\" y2=\"" + px(ly - 4.0) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + px(lx + 28.0) + "\" y=\"" + px(ly) +
           "\" font-size=\"12\" fill=\"#111111\">";
    escape_into(svg, label);
    svg += "</text>\n";
    ly += 16.0;
  }

  svg += "</svg>\n";
  return svg;
}

void write_chart(const std::string& path, const Chart& chart) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << render_chart(chart);
}

}  // namespace fsurv
