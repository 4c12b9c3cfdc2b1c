#include "eigentop/cli.hpp"
#include "eigentop/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace eigentop::cli {

namespace {

std::string num(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void check_length(const NamedField& f, std::size_t n, const char* what)
{
  if (f.second.size() != n)
    throw Error(std::string(what) + " array '" + f.first + "' has " + std::to_string(f.second.size()) +
                " values, expected " + std::to_string(n));
  if (f.first.empty() || f.first.find_first_of(" \t\n") != std::string::npos)
    throw Error(std::string(what) + " array name must be a single nonempty word");
}

void write_scalars(std::ostream& out, const NamedField& f)
{
  out << "SCALARS " << f.first << " double 1\nLOOKUP_TABLE default\n";
  for (double v : f.second)
    out << num(v) << '\n';
}

struct Frame
{
  double x0, y1, scale;
  double width, height;
};

Frame frame_of(const Mesh& mesh)
{
  double x0 = mesh.vertices().front().x, x1 = x0, y0 = mesh.vertices().front().y, y1 = y0;
  for (const auto& p : mesh.vertices()) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double scale = 480.0 / std::max(x1 - x0, y1 - y0);
  return {x0, y1, scale, (x1 - x0) * scale, (y1 - y0) * scale};
}

template <class ColorOf>
std::string svg_polygons(const Mesh& mesh, ColorOf color_of)
{
  const Frame f = frame_of(mesh);
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << short_num(f.width) << "\" height=\""
     << short_num(f.height) << "\" viewBox=\"0 0 " << short_num(f.width) << ' ' << short_num(f.height) << "\">\n";
  const auto& vs = mesh.vertices();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const std::string color = color_of(t);
    os << "<polygon points=\"";
    for (int k = 0; k < 3; ++k) {
      const auto& p = vs[mesh.triangles()[t][k]];
      os << (k ? " " : "") << short_num((p.x - f.x0) * f.scale) << ',' << short_num((f.y1 - p.y) * f.scale);
    }
    // Stroke in the fill color hides hairline gaps between polygons.
    os << "\" fill=\"" << color << "\" stroke=\"" << color << "\" stroke-width=\"0.3\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string hex(std::array<double, 3> rgb)
{
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(rgb[0] * 255)),
                static_cast<int>(std::lround(rgb[1] * 255)), static_cast<int>(std::lround(rgb[2] * 255)));
  return buf;
}

// Anchors of a perceptually ordered dark-blue to yellow ramp.
std::array<double, 3> ramp(double s)
{
  static constexpr std::array<std::array<double, 3>, 5> anchors = {{{0.267, 0.005, 0.329},
                                                                     {0.231, 0.322, 0.545},
                                                                     {0.129, 0.569, 0.549},
                                                                     {0.369, 0.788, 0.384},
                                                                     {0.992, 0.906, 0.145}}};
  s = std::clamp(s, 0.0, 1.0) * (anchors.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(s), anchors.size() - 2);
  const double w = s - static_cast<double>(i);
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k)
    out[k] = (1 - w) * anchors[i][k] + w * anchors[i + 1][k];
  return out;
}

} // namespace

void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<NamedField>& cell_data,
               const std::vector<NamedField>& point_data, const std::string& title)
{
  for (const auto& f : cell_data)
    check_length(f, mesh.num_triangles(), "cell");
  for (const auto& f : point_data)
    check_length(f, mesh.num_vertices(), "point");
  const std::size_t nt = mesh.num_triangles();
  out << "# vtk DataFile Version 3.0\n" << title.substr(0, 255) << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices())
    out << num(p.x) << ' ' << num(p.y) << " 0\n";
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles())
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t)
    out << "5\n";
  if (!cell_data.empty()) {
    out << "CELL_DATA " << nt << '\n';
    for (const auto& f : cell_data)
      write_scalars(out, f);
  }
  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& f : point_data)
      write_scalars(out, f);
  }
}

void write_vtk_file(const std::filesystem::path& path, const Mesh& mesh, const std::vector<NamedField>& cell_data,
                    const std::vector<NamedField>& point_data)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open '" + path.string() + "' for writing");
  write_vtk(out, mesh, cell_data, point_data, path.filename().string());
  if (!out.flush())
    throw Error("failed writing '" + path.string() + "'");
}

std::string svg_indicator(const Mesh& mesh, std::span<const double> indicator)
{
  if (indicator.size() != mesh.num_triangles())
    throw Error("indicator needs one value per triangle");
  return svg_polygons(mesh, [&](std::size_t t) { return std::string(indicator[t] != 0 ? "#d62728" : "#dde3ea"); });
}

std::string svg_scalar(const Mesh& mesh, std::span<const double> field)
{
  if (field.size() != mesh.num_triangles())
    throw Error("scalar field needs one value per triangle");
  const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
  const double span = *hi - *lo;
  return svg_polygons(mesh, [&](std::size_t t) { return hex(ramp(span > 0 ? (field[t] - *lo) / span : 0.5)); });
}

std::string history_csv_header() { return "step,lambda1,lambda2,lambda3,ratio12,ratio23,G,nu,dt,wallclock"; }

std::string history_csv(const std::vector<levelset::HistoryRow>& rows)
{
  std::string out = history_csv_header() + '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.step);
    for (double v : {r.lambda1, r.lambda2, r.lambda3, r.ratio12(), r.ratio23(), r.G, r.nu, r.dt, r.wallclock})
      out += ',' + num(v);
    out += '\n';
  }
  return out;
}

std::vector<levelset::HistoryRow> parse_history_csv(std::string_view text)
{
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != history_csv_header())
    throw Error("history.csv: unexpected header");
  std::vector<levelset::HistoryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    std::vector<double> v;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      v.push_back(std::strtod(cell.c_str(), nullptr));
    if (v.size() != 10)
      throw Error("history.csv line " + std::to_string(line_no) + ": expected 10 columns");
    levelset::HistoryRow r;
    r.step = static_cast<int>(v[0]);
    r.lambda1 = v[1];
    r.lambda2 = v[2];
    r.lambda3 = v[3];
    r.G = v[6];
    r.nu = v[7];
    r.dt = v[8];
    r.wallclock = v[9];
    rows.push_back(r);
  }
  return rows;
}

} // namespace eigentop::cli
