#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "conjpt/cli.hpp"

namespace conjpt::cli {

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_row(cells);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size())
    throw std::logic_error("CsvTable: row has " + std::to_string(cells.size()) + " cells, header has " +
                           std::to_string(header_.size()));
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  rows_.push_back(std::move(line));
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& r : rows_) out += r + '\n';
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
}

namespace {

struct Frame {
  double x0, y0, x1, y1;
  double size = 600.0;
  double margin = 50.0;

  double px(double x) const { return margin + (x - x0) / (x1 - x0) * size; }
  double py(double y) const { return margin + (y1 - y) / (y1 - y0) * size; }
};

std::string fixed(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

// Point on the edge between two nodes where the linear interpolant of det vanishes.
std::pair<double, double> crossing(double xa, double ya, double da, double xb, double yb, double db) {
  const double s = da / (da - db);
  return {xa + s * (xb - xa), ya + s * (yb - ya)};
}

}  // namespace

std::string det_contour_svg(const DetGrid& grid, const std::vector<Marker>& markers) {
  if (grid.box.lower.size() != 2) throw std::invalid_argument("det_contour_svg: grid must be two-dimensional");
  const int res = grid.resolution;
  const Frame f{grid.box.lower[0], grid.box.lower[1], grid.box.upper[0], grid.box.upper[1]};
  const double dx = (f.x1 - f.x0) / (res - 1), dy = (f.y1 - f.y0) / (res - 1);
  auto at = [&](int i, int j) { return grid.det[static_cast<std::size_t>(i + res * j)]; };

  std::ostringstream svg;
  const double total = f.size + 2 * f.margin;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total << "\" height=\"" << total
      << "\" viewBox=\"0 0 " << total << ' ' << total << "\">\n";
  svg << "<defs><clipPath id=\"frame\"><rect x=\"" << f.margin << "\" y=\"" << f.margin << "\" width=\"" << f.size
      << "\" height=\"" << f.size << "\"/></clipPath></defs>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g stroke=\"none\" clip-path=\"url(#frame)\">\n";

  // Sign map: one cell per node, centred on it.
  const double cw = f.size / (res - 1), ch = f.size / (res - 1);
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) {
      const double d = at(i, j);
      const char* colour = !std::isfinite(d) ? "#bbbbbb" : d > 0 ? "#dce9f5" : "#f5dcdc";
      const double x = f.px(f.x0 + i * dx) - cw / 2, y = f.py(f.y0 + j * dy) - ch / 2;
      svg << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\"" << fixed(cw + 0.5)
          << "\" height=\"" << fixed(ch + 0.5) << "\" fill=\"" << colour << "\"/>\n";
    }
  svg << "</g>\n";

  // Zero level set, marching squares with the saddle cases split arbitrarily.
  svg << "<g stroke=\"black\" stroke-width=\"1.5\">\n";
  for (int j = 0; j + 1 < res; ++j)
    for (int i = 0; i + 1 < res; ++i) {
      const double xs[4] = {f.x0 + i * dx, f.x0 + (i + 1) * dx, f.x0 + (i + 1) * dx, f.x0 + i * dx};
      const double ys[4] = {f.y0 + j * dy, f.y0 + j * dy, f.y0 + (j + 1) * dy, f.y0 + (j + 1) * dy};
      const double ds[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
      bool finite = true;
      for (double d : ds) finite = finite && std::isfinite(d);
      if (!finite) continue;
      std::vector<std::pair<double, double>> hits;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if ((ds[a] > 0) != (ds[b] > 0)) hits.push_back(crossing(xs[a], ys[a], ds[a], xs[b], ys[b], ds[b]));
      }
      for (std::size_t k = 0; k + 1 < hits.size(); k += 2)
        svg << "<line x1=\"" << fixed(f.px(hits[k].first)) << "\" y1=\"" << fixed(f.py(hits[k].second))
            << "\" x2=\"" << fixed(f.px(hits[k + 1].first)) << "\" y2=\"" << fixed(f.py(hits[k + 1].second))
            << "\"/>\n";
    }
  svg << "</g>\n";

  for (const auto& m : markers) {
    if (m.z.size() != 2) continue;
    svg << "<circle cx=\"" << fixed(f.px(m.z[0])) << "\" cy=\"" << fixed(f.py(m.z[1])) << "\" r=\"3\" fill=\""
        << (m.highlighted ? "#c0392b" : "#1f4e79") << "\"/>\n";
  }

  svg << "<rect x=\"" << f.margin << "\" y=\"" << f.margin << "\" width=\"" << f.size << "\" height=\"" << f.size
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<text x=\"" << f.margin << "\" y=\"" << total - 15 << "\">z1 in [" << format_number(f.x0) << ", "
      << format_number(f.x1) << "]</text>\n";
  svg << "<text x=\"" << f.margin << "\" y=\"30\">z2 in [" << format_number(f.y0) << ", " << format_number(f.y1)
      << "], black: det x_z(0, z) = 0</text>\n";
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace conjpt::cli
