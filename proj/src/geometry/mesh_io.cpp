#include "eigentop/error.hpp"
#include "eigentop/geometry.hpp"
#include "mesh_check.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace eigentop::geometry {

namespace {

class LineReader
{
public:
  explicit LineReader(std::string_view text) : m_text(text) {}

  // Next non-blank line; returns false at end of input.
  bool next(std::string_view& line)
  {
    while (m_pos < m_text.size()) {
      const std::size_t end = std::min(m_text.find('\n', m_pos), m_text.size());
      line = m_text.substr(m_pos, end - m_pos);
      m_pos = end + 1;
      ++m_line;
      if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
      if (line.find_first_not_of(" \t") != std::string_view::npos)
        return true;
    }
    return false;
  }

  std::string_view require(const char* what)
  {
    std::string_view line;
    if (!next(line))
      throw MeshParseError(m_line + 1, std::string("unexpected end of input, expected ") + what);
    return line;
  }

  std::size_t line() const { return m_line; }

private:
  std::string_view m_text;
  std::size_t m_pos = 0;
  std::size_t m_line = 0;
};

std::vector<std::string> split(std::string_view line)
{
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok)
    out.push_back(tok);
  return out;
}

double parse_double(const std::string& tok, std::size_t line)
{
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw MeshParseError(line, "invalid number '" + tok + "'");
  return v;
}

long parse_int(const std::string& tok, std::size_t line)
{
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw MeshParseError(line, "invalid integer '" + tok + "'");
  return v;
}

std::size_t parse_count(LineReader& in, const char* keyword)
{
  const auto toks = split(in.require(keyword));
  if (toks.size() != 2 || toks[0] != keyword)
    throw MeshParseError(in.line(), std::string("expected '") + keyword + " <count>'");
  const long n = parse_int(toks[1], in.line());
  if (n < 0)
    throw MeshParseError(in.line(), "negative count");
  return static_cast<std::size_t>(n);
}

} // namespace

Mesh read_mesh(std::string_view text)
{
  LineReader in(text);
  {
    const auto toks = split(in.require("header"));
    if (toks.size() != 2 || toks[0] != "mesh" || toks[1] != "2d")
      throw MeshParseError(in.line(), "expected header 'mesh 2d'");
  }

  const std::size_t nv = parse_count(in, "vertices");
  std::vector<Point> vertices;
  std::vector<std::size_t> vertex_lines;
  for (std::size_t i = 0; i < nv; ++i) {
    const auto toks = split(in.require("vertex"));
    if (toks.size() != 2)
      throw MeshParseError(in.line(), "vertex line needs 'x y'");
    vertices.push_back({parse_double(toks[0], in.line()), parse_double(toks[1], in.line())});
    vertex_lines.push_back(in.line());
  }

  const std::size_t nt = parse_count(in, "triangles");
  std::vector<Triangle> triangles;
  std::vector<std::size_t> triangle_lines;
  for (std::size_t i = 0; i < nt; ++i) {
    const auto toks = split(in.require("triangle"));
    if (toks.size() != 3)
      throw MeshParseError(in.line(), "triangle line needs 'i j k'");
    Triangle t{};
    for (int k = 0; k < 3; ++k) {
      const long v = parse_int(toks[k], in.line());
      if (v < 0 || v >= static_cast<long>(nv))
        throw MeshParseError(in.line(), "vertex index " + toks[k] + " out of range");
      t[k] = static_cast<int>(v);
    }
    triangles.push_back(t);
    triangle_lines.push_back(in.line());
  }

  const std::size_t nb = parse_count(in, "boundary_edges");
  const std::size_t boundary_header = in.line();
  std::vector<BoundaryEdge> boundary;
  std::vector<std::size_t> boundary_lines;
  for (std::size_t i = 0; i < nb; ++i) {
    const auto toks = split(in.require("boundary edge"));
    if (toks.size() != 3)
      throw MeshParseError(in.line(), "boundary edge line needs 'i j tag'");
    BoundaryEdge e;
    for (int k = 0; k < 2; ++k) {
      const long v = parse_int(toks[k], in.line());
      if (v < 0 || v >= static_cast<long>(nv))
        throw MeshParseError(in.line(), "vertex index " + toks[k] + " out of range");
      e.v[k] = static_cast<int>(v);
    }
    e.tag = toks[2];
    boundary.push_back(e);
    boundary_lines.push_back(in.line());
  }
  std::string_view extra;
  if (in.next(extra))
    throw MeshParseError(in.line(), "unexpected trailing content");

  if (const auto defect = detail::find_mesh_defect(vertices, triangles, boundary)) {
    using W = detail::MeshDefect::Where;
    std::size_t line = boundary_header;
    switch (defect->where) {
    case W::Vertex: line = vertex_lines.at(defect->index); break;
    case W::Triangle: line = triangle_lines.at(defect->index); break;
    case W::BoundaryEdge: line = boundary_lines.at(defect->index); break;
    case W::Global: line = boundary_header; break;
    }
    throw MeshParseError(line, defect->message);
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

std::string write_mesh(const Mesh& mesh)
{
  std::string out = "mesh 2d\n";
  char buf[96];
  out += "vertices " + std::to_string(mesh.num_vertices()) + "\n";
  for (Point p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    out += buf;
  }
  out += "triangles " + std::to_string(mesh.num_triangles()) + "\n";
  for (const Triangle& t : mesh.triangles()) {
    std::snprintf(buf, sizeof buf, "%d %d %d\n", t[0], t[1], t[2]);
    out += buf;
  }
  out += "boundary_edges " + std::to_string(mesh.boundary_edges().size()) + "\n";
  for (const auto& e : mesh.boundary_edges()) {
    std::snprintf(buf, sizeof buf, "%d %d ", e.v[0], e.v[1]);
    out += buf;
    out += e.tag + "\n";
  }
  return out;
}

} // namespace eigentop::geometry
