#include "plprep/harness/contour.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "plprep/error.hpp"

namespace plprep {

namespace {

void check_grid(const ContourGrid& g) {
  if (g.x.size() < 2 || g.y.size() < 2) throw DomainError("contour: need at least a 2 x 2 grid");
  if (static_cast<std::size_t>(g.z.rows()) != g.x.size() || static_cast<std::size_t>(g.z.cols()) != g.y.size())
    throw DomainError("contour: value matrix does not match the axes");
}

double lerp_t(double a, double b, double level) {
  if (a == b) return 0.5;
  return std::clamp((level - a) / (b - a), 0.0, 1.0);
}

}  // namespace

std::vector<Segment> contour_segments(const ContourGrid& g, double level) {
  check_grid(g);
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < g.x.size(); ++i) {
    for (std::size_t j = 0; j + 1 < g.y.size(); ++j) {
      const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
      // Corners counter-clockwise from (x_i, y_j).
      const double v[4] = {g.z(I, J), g.z(I + 1, J), g.z(I + 1, J + 1), g.z(I, J + 1)};
      const double px[4] = {g.x[i], g.x[i + 1], g.x[i + 1], g.x[i]};
      const double py[4] = {g.y[j], g.y[j], g.y[j + 1], g.y[j + 1]};
      int code = 0;
      for (int c = 0; c < 4; ++c)
        if (v[c] >= level) code |= 1 << c;
      if (code == 0 || code == 15) continue;
      // Crossing point on edge e (corner e to corner e+1).
      auto edge = [&](int e) {
        const int a = e, b = (e + 1) % 4;
        const double t = lerp_t(v[a], v[b], level);
        return std::pair<double, double>{px[a] + t * (px[b] - px[a]), py[a] + t * (py[b] - py[a])};
      };
      std::vector<int> edges;
      for (int e = 0; e < 4; ++e) {
        const bool a = (code >> e) & 1, b = (code >> ((e + 1) % 4)) & 1;
        if (a != b) edges.push_back(e);
      }
      auto add = [&](int e0, int e1) {
        const auto p = edge(e0), q = edge(e1);
        out.push_back({p.first, p.second, q.first, q.second});
      };
      if (edges.size() == 2) {
        add(edges[0], edges[1]);
      } else {
        // Saddle: corners 0 and 2 on one side, 1 and 3 on the other.
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        const bool corner0_high = code & 1;
        if ((centre >= level) == corner0_high) {
          add(0, 1);
          add(2, 3);
        } else {
          add(3, 0);
          add(1, 2);
        }
      }
    }
  }
  return out;
}

std::string contour_svg(const ContourGrid& g, const std::vector<double>& levels, const std::string& title,
                        const std::string& x_label, const std::string& y_label) {
  check_grid(g);
  const double W = 480, H = 400, left = 60, right = 120, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  const double x0 = g.x.front(), x1 = g.x.back(), y0 = g.y.front(), y1 = g.y.back();
  auto sx = [&](double x) { return left + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * pw; };
  auto sy = [&](double y) { return top + ph - (y1 == y0 ? 0.5 : (y - y0) / (y1 - y0)) * ph; };
  auto f = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", v);
    return std::string(b);
  };
  const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  // Grid points shaded from white (0) to grey (1).
  for (std::size_t i = 0; i < g.x.size(); ++i)
    for (std::size_t j = 0; j < g.y.size(); ++j) {
      const double z = std::clamp(g.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0, 1.0);
      const int shade = static_cast<int>(std::lround(255 * (1.0 - 0.6 * z)));
      s << "<circle cx=\"" << f(sx(g.x[i])) << "\" cy=\"" << f(sy(g.y[j])) << "\" r=\"3\" fill=\"rgb(" << shade << ","
        << shade << "," << shade << ")\" stroke=\"#999\" stroke-width=\"0.5\"/>\n";
    }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const char* colour = palette[l % 8];
    s << "<g stroke=\"" << colour << "\" stroke-width=\"1.5\" fill=\"none\">\n";
    for (const auto& seg : contour_segments(g, levels[l]))
      s << "<line x1=\"" << f(sx(seg.x0)) << "\" y1=\"" << f(sy(seg.y0)) << "\" x2=\"" << f(sx(seg.x1)) << "\" y2=\""
        << f(sy(seg.y1)) << "\"/>\n";
    s << "</g>\n";
    const double ly = top + 14 * static_cast<double>(l) + 6;
    s << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << W - right + 36 << "\" y=\"" << ly + 4 << "\">" << f(levels[l]) << "</text>\n";
  }
  // Axis ticks at the ends and the middle.
  for (double t : {0.0, 0.5, 1.0}) {
    const double xv = x0 + t * (x1 - x0), yv = y0 + t * (y1 - y0);
    s << "<text x=\"" << f(sx(xv)) << "\" y=\"" << top + ph + 15 << "\" text-anchor=\"middle\">" << f(xv) << "</text>\n";
    s << "<text x=\"" << left - 5 << "\" y=\"" << f(sy(yv) + 4) << "\" text-anchor=\"end\">" << f(yv) << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  s << "<text x=\"15\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << top + ph / 2
    << ")\">" << y_label << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace plprep
