#pragma once

#include <string>
#include <vector>

#include "plprep/num/linalg.hpp"

namespace plprep {

// Values z(i, j) at (x[i], y[j]) on a rectilinear grid.
struct ContourGrid {
  std::vector<double> x;
  std::vector<double> y;
  Matrix z;
};

struct Segment {
  double x0, y0, x1, y1;
};

// Marching squares; saddle cells are resolved by the cell-centre average.
// Points with z == level count as above the level.
std::vector<Segment> contour_segments(const ContourGrid& grid, double level);

// Static SVG with the grid points shaded by value and one polyline family per
// level, labelled in a legend.
std::string contour_svg(const ContourGrid& grid, const std::vector<double>& levels, const std::string& title,
                        const std::string& x_label, const std::string& y_label);

}  // namespace plprep
