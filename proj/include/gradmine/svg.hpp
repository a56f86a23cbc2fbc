#pragma once

#include <string>
#include <vector>

namespace gradmine::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Line chart with one polyline per series, shared axes and a legend.
std::string line_chart(const std::vector<Series>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

}  // namespace gradmine::svg
