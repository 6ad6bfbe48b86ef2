#pragma once

#include <string>
#include <vector>

#include "fsurv/types.hpp"

namespace fsurv {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;      // empty entries stay out of the legend
  std::string color;      // "#rrggbb"; empty picks from the palette
  bool step = false;      // right-continuous staircase
  bool dashed = false;
  bool markers = false;
  double width = 1.5;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<double> dashed_verticals;  // e.g. event-free interval bounds
  double width = 860.0;
  double height = 520.0;
};

std::string render_chart(const Chart& chart);
void write_chart(const std::string& path, const Chart& chart);

}  // namespace fsurv
