#include "eigentop/cli.hpp"
#include "eigentop/error.hpp"
#include "eigentop/geometry.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace eigentop::cli {

namespace {

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

double to_double(const std::string& key, std::string_view v)
{
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    bad(key, "expected a number, got '" + std::string(v) + "'");
  return x;
}

long long to_integer(const std::string& key, std::string_view v)
{
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    bad(key, "expected an integer, got '" + std::string(v) + "'");
  return x;
}

int to_int(const std::string& key, std::string_view v)
{
  const long long x = to_integer(key, v);
  if (x < -(1LL << 31) || x >= (1LL << 31))
    bad(key, "integer out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, std::string_view v)
{
  if (v == "true" || v == "1" || v == "yes" || v == "on")
    return true;
  if (v == "false" || v == "0" || v == "no" || v == "off")
    return false;
  bad(key, "expected true or false, got '" + std::string(v) + "'");
}

fem::BcKind to_kind(const std::string& key, std::string_view v)
{
  if (v == "dirichlet")
    return fem::BcKind::Dirichlet;
  if (v == "neumann")
    return fem::BcKind::Neumann;
  if (v == "robin")
    return fem::BcKind::Robin;
  bad(key, "expected dirichlet, neumann or robin, got '" + std::string(v) + "'");
}

std::string fmt(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

} // namespace

std::string to_string(BcMode mode)
{
  switch (mode) {
  case BcMode::Dirichlet: return "dirichlet";
  case BcMode::Neumann: return "neumann";
  case BcMode::Robin: return "robin";
  case BcMode::Mixed: return "mixed";
  }
  return "?";
}

std::string to_string(fem::BcKind kind)
{
  switch (kind) {
  case fem::BcKind::Dirichlet: return "dirichlet";
  case fem::BcKind::Neumann: return "neumann";
  case fem::BcKind::Robin: return "robin";
  }
  return "?";
}

double RunConfig::resolved_h() const
{
  return h > 0 ? h : geometry::DomainSpec::from_name(domain).diameter() / 60.0;
}

void RunConfig::validate() const
{
  phase.validate();
  if (mesh_file.empty()) {
    try {
      (void)geometry::DomainSpec::from_name(domain);
    } catch (const Error& e) {
      bad("domain", e.what());
    }
  }
  if (!(h >= 0) || !std::isfinite(h))
    bad("h", "must be nonnegative (0 selects diameter/60)");
  if (!(eta >= 0) || !std::isfinite(eta))
    bad("eta", "must be finite and nonnegative");
  if (output_dir.empty())
    bad("output_dir", "must not be empty");
}

RunConfig parse_config(std::string_view text)
{
  RunConfig cfg;
  auto& ph = cfg.phase;
  bool c_given = false;
  std::set<std::string> seen;

  using Setter = std::function<void(const std::string&, std::string_view)>;
  const std::map<std::string, Setter> setters = {
      {"problem",
       [&](const std::string& k, std::string_view v) {
         if (v == "conductivity" || v == "2")
           ph.problem = Problem::Conductivity;
         else if (v == "density" || v == "3")
           ph.problem = Problem::Density;
         else
           bad(k, "expected conductivity or density, got '" + std::string(v) + "'");
       }},
      {"objective",
       [&](const std::string& k, std::string_view v) {
         if (v == "min" || v == "minimize")
           ph.objective = Objective::Minimize;
         else if (v == "max" || v == "maximize")
           ph.objective = Objective::Maximize;
         else
           bad(k, "expected min or max, got '" + std::string(v) + "'");
       }},
      {"c", [&](const std::string& k, std::string_view v) { ph.c = to_double(k, v); c_given = true; }},
      {"m0", [&](const std::string& k, std::string_view v) { ph.m0 = to_double(k, v); }},
      {"epsilon", [&](const std::string& k, std::string_view v) { ph.epsilon = to_double(k, v); }},
      {"max_steps", [&](const std::string& k, std::string_view v) { ph.max_steps = to_int(k, v); }},
      {"stop_tol", [&](const std::string& k, std::string_view v) { ph.stop_tol = to_double(k, v); }},
      {"stop_window", [&](const std::string& k, std::string_view v) { ph.stop_window = to_int(k, v); }},
      {"multiplicity_threshold",
       [&](const std::string& k, std::string_view v) { ph.multiplicity_threshold = to_double(k, v); }},
      {"snapshot_every", [&](const std::string& k, std::string_view v) { ph.snapshot_every = to_int(k, v); }},
      {"volume_tol", [&](const std::string& k, std::string_view v) { ph.volume_tol = to_double(k, v); }},
      {"cfl", [&](const std::string& k, std::string_view v) { ph.cfl = to_double(k, v); }},
      {"divergence_window", [&](const std::string& k, std::string_view v) { ph.divergence_window = to_int(k, v); }},
      {"reinitialize", [&](const std::string& k, std::string_view v) { ph.reinitialize = to_bool(k, v); }},
      {"record_wallclock", [&](const std::string& k, std::string_view v) { ph.record_wallclock = to_bool(k, v); }},
      {"seed",
       [&](const std::string& k, std::string_view v) {
         const long long s = to_integer(k, v);
         if (s < 0)
           bad(k, "must be nonnegative");
         ph.seed = static_cast<std::uint64_t>(s);
       }},
      {"domain", [&](const std::string&, std::string_view v) { cfg.domain = std::string(v); }},
      {"h", [&](const std::string& k, std::string_view v) { cfg.h = to_double(k, v); }},
      {"mesh_file", [&](const std::string&, std::string_view v) { cfg.mesh_file = std::string(v); }},
      {"bc",
       [&](const std::string& k, std::string_view v) {
         if (v == "mixed")
           cfg.bc = BcMode::Mixed;
         else
           switch (to_kind(k, v)) {
           case fem::BcKind::Dirichlet: cfg.bc = BcMode::Dirichlet; break;
           case fem::BcKind::Neumann: cfg.bc = BcMode::Neumann; break;
           case fem::BcKind::Robin: cfg.bc = BcMode::Robin; break;
           }
       }},
      {"eta", [&](const std::string& k, std::string_view v) { cfg.eta = to_double(k, v); }},
      {"output_dir", [&](const std::string&, std::string_view v) { cfg.output_dir = std::string(v); }},
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": missing key");
    if (!seen.insert(key).second)
      bad(key, "given more than once");
    if (value.empty())
      bad(key, "missing value");
    if (key.rfind("bc.", 0) == 0 && key.size() > 3) {
      cfg.bc_by_tag[key.substr(3)] = to_kind(key, value);
      continue;
    }
    const auto it = setters.find(key);
    if (it == setters.end())
      bad(key, "unknown key");
    it->second(key, value);
  }
  if (!c_given)
    ph.c = levelset::PhaseConfig::default_c(ph.problem);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_echo(const RunConfig& c)
{
  const auto& p = c.phase;
  std::ostringstream os;
  os << "problem = " << to_string(p.problem) << '\n'
     << "objective = " << to_string(p.objective) << '\n'
     << "c = " << fmt(p.c) << '\n'
     << "m0 = " << fmt(p.m0) << '\n'
     << "epsilon = " << fmt(p.epsilon) << '\n'
     << "max_steps = " << p.max_steps << '\n'
     << "stop_tol = " << fmt(p.stop_tol) << '\n'
     << "stop_window = " << p.stop_window << '\n'
     << "multiplicity_threshold = " << fmt(p.multiplicity_threshold) << '\n'
     << "snapshot_every = " << p.snapshot_every << '\n'
     << "volume_tol = " << fmt(p.volume_tol) << '\n'
     << "cfl = " << fmt(p.cfl) << '\n'
     << "divergence_window = " << p.divergence_window << '\n'
     << "reinitialize = " << (p.reinitialize ? "true" : "false") << '\n'
     << "record_wallclock = " << (p.record_wallclock ? "true" : "false") << '\n'
     << "seed = " << p.seed << '\n'
     << "domain = " << c.domain << '\n'
     << "h = " << fmt(c.h) << "  # resolved " << fmt(c.resolved_h()) << '\n';
  if (!c.mesh_file.empty())
    os << "mesh_file = " << c.mesh_file << '\n';
  os << "bc = " << to_string(c.bc) << '\n';
  for (const auto& [tag, kind] : c.bc_by_tag)
    os << "bc." << tag << " = " << to_string(kind) << '\n';
  os << "eta = " << fmt(c.eta) << '\n' << "output_dir = " << c.output_dir.string() << '\n';
  return os.str();
}

Setup build_setup(const RunConfig& config)
{
  Mesh mesh;
  if (!config.mesh_file.empty()) {
    std::ifstream in(config.mesh_file);
    if (!in)
      throw ConfigError("mesh_file: cannot read '" + config.mesh_file + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    mesh = geometry::read_mesh(ss.str());
  } else {
    mesh = geometry::build_mesh(geometry::DomainSpec::from_name(config.domain), config.resolved_h());
  }
  if (config.bc == BcMode::Mixed) {
    double ymin = mesh.vertices().front().y, ymax = ymin;
    for (const auto& v : mesh.vertices()) {
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    mesh = geometry::tag_robin_side(mesh, geometry::bottom_side_predicate(ymin, 1e-9 * (ymax - ymin)));
  }
  fem::BoundaryCondition bc;
  for (const auto& tag : mesh.tags()) {
    fem::BcKind kind = fem::BcKind::Dirichlet;
    switch (config.bc) {
    case BcMode::Dirichlet: kind = fem::BcKind::Dirichlet; break;
    case BcMode::Neumann: kind = fem::BcKind::Neumann; break;
    case BcMode::Robin: kind = fem::BcKind::Robin; break;
    case BcMode::Mixed: kind = tag == "robin" ? fem::BcKind::Robin : fem::BcKind::Dirichlet; break;
    }
    bc.set(tag, kind, kind == fem::BcKind::Robin ? config.eta : 0.0);
  }
  for (const auto& [tag, kind] : config.bc_by_tag) {
    if (!bc.by_tag.count(tag))
      bad("bc." + tag, "the mesh has no boundary tag '" + tag + "'");
    bc.set(tag, kind, kind == fem::BcKind::Robin ? config.eta : 0.0);
  }
  bc.check(mesh);
  return {std::move(mesh), std::move(bc)};
}

} // namespace eigentop::cli
