#include "eigentop/levelset.hpp"
#include "eigentop/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace eigentop::levelset {

namespace {

double mismatch_of(const Mesh& mesh, std::span<const double> phi, double m0)
{
  const auto& tris = mesh.triangles();
  const auto& areas = mesh.element_areas();
  double inside = 0.0;
  for (std::size_t t = 0; t < tris.size(); ++t)
    if (phi[tris[t][0]] + phi[tris[t][1]] + phi[tris[t][2]] > 0)
      inside += areas[t];
  return inside - m0 * mesh.area();
}

std::vector<double> gradient_magnitude(const Mesh& mesh, std::span<const double> phi)
{
  const auto g = fem::element_gradient(mesh, phi);
  std::vector<double> m(g.values.size());
  for (std::size_t t = 0; t < m.size(); ++t)
    m[t] = std::hypot(g.values[t][0], g.values[t][1]);
  return m;
}

void require_modes(const eig::EigenSet& eigs, const Mesh& mesh, std::size_t count)
{
  if (eigs.size() < count || eigs.vectors.size() < count)
    throw Error("velocity needs " + std::to_string(count) + " eigenpair(s)");
  for (std::size_t i = 0; i < count; ++i)
    if (eigs.vectors[i].size() != mesh.num_vertices())
      throw Error("eigenvectors must be full nodal vectors");
}

// Velocity of mode i before the objective sign.
std::vector<double> mode_velocity(Problem problem, const eig::EigenSet& eigs, std::size_t i, const ElementField& coeff,
                                  const Mesh& mesh, double c)
{
  const auto& u = eigs.vectors[i];
  if (problem == Problem::Conductivity) {
    const double norm = weighted_norm_sq(mesh, u);
    const auto g = fem::element_gradient(mesh, u);
    std::vector<double> v(g.values.size());
    for (std::size_t t = 0; t < v.size(); ++t)
      v[t] = (c - 1) * (g.values[t][0] * g.values[t][0] + g.values[t][1] * g.values[t][1]) / norm;
    return v;
  }
  // Raising sigma lowers mu: d mu = -mu (c-1) u^2 / int sigma u^2 per unit area.
  const double norm = weighted_norm_sq(mesh, u, &coeff);
  const auto sq = fem::vertex_mean_square(mesh, u);
  std::vector<double> v(sq.values.size());
  for (std::size_t t = 0; t < v.size(); ++t)
    v[t] = -eigs.values[i] * (c - 1) * sq.values[t] / norm;
  return v;
}

double interface_average(const Mesh& mesh, std::span<const double> phi, std::span<const double> v0)
{
  const auto gm = gradient_magnitude(mesh, phi);
  const auto& tris = mesh.triangles();
  const auto& areas = mesh.element_areas();
  double num = 0.0, den = 0.0, all_num = 0.0, all_den = 0.0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double a = phi[tris[t][0]], b = phi[tris[t][1]], c = phi[tris[t][2]];
    const double w = areas[t] * gm[t];
    all_num += w * v0[t];
    all_den += w;
    if (std::min({a, b, c}) <= 0 && std::max({a, b, c}) > 0) {
      num += w * v0[t];
      den += w;
    }
  }
  if (den > 0)
    return num / den;
  return all_den > 0 ? all_num / all_den : 0.0;
}

std::string history_dump(const std::vector<HistoryRow>& rows, std::size_t last)
{
  std::ostringstream os;
  os.precision(10);
  const std::size_t from = rows.size() > last ? rows.size() - last : 0;
  for (std::size_t i = from; i < rows.size(); ++i)
    os << "\n  step " << rows[i].step << " lambda1 " << rows[i].lambda1 << " G " << rows[i].G << " nu " << rows[i].nu;
  return os.str();
}

} // namespace

void PhaseConfig::validate() const
{
  if (!(c > 0) || !std::isfinite(c))
    throw ConfigError("c: must be positive");
  if (c == 1.0)
    throw ConfigError("c: must differ from 1");
  if (!(m0 > 0 && m0 < 1))
    throw ConfigError("m0: must lie in (0,1)");
  if (!(epsilon > 0) || !std::isfinite(epsilon))
    throw ConfigError("epsilon: must be positive");
  if (max_steps < 0)
    throw ConfigError("max_steps: must be nonnegative");
  if (!(stop_tol >= 0))
    throw ConfigError("stop_tol: must be nonnegative");
  if (stop_window < 1)
    throw ConfigError("stop_window: must be at least 1");
  if (!(multiplicity_threshold > 0 && multiplicity_threshold <= 1))
    throw ConfigError("multiplicity_threshold: must lie in (0,1]");
  if (snapshot_every < 0)
    throw ConfigError("snapshot_every: must be nonnegative");
  if (!(volume_tol > 0 && volume_tol < 1))
    throw ConfigError("volume_tol: must lie in (0,1)");
  if (!(cfl > 0) || !std::isfinite(cfl))
    throw ConfigError("cfl: must be positive");
  if (divergence_window < 1)
    throw ConfigError("divergence_window: must be at least 1");
}

NodalField init_phi(const Mesh& mesh)
{
  NodalField phi = NodalField::zeros(mesh);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    phi.values[i] = mesh.vertices()[i].x;
  return phi;
}

ElementField phase_from_phi(const Mesh& mesh, const NodalField& phi, double c)
{
  phi.check();
  ElementField rho = ElementField::constant(mesh, 1.0);
  const auto& tris = mesh.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t)
    if (phi.values[tris[t][0]] + phi.values[tris[t][1]] + phi.values[tris[t][2]] > 0)
      rho.values[t] = c;
  return rho;
}

double volume_mismatch(const Mesh& mesh, const NodalField& phi, double m0)
{
  phi.check();
  return mismatch_of(mesh, phi.values, m0);
}

double time_step(const NodalField& phi)
{
  double sup = 0.0;
  for (double v : phi.values)
    sup = std::max(sup, std::abs(v));
  if (sup == 0.0)
    throw NumericalError("time step undefined for phi identically zero");
  return 1.0 / sup;
}

double weighted_norm_sq(const Mesh& mesh, std::span<const double> u, const ElementField* w)
{
  const auto& tris = mesh.triangles();
  const auto& areas = mesh.element_areas();
  double s = 0.0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double a = u[tris[t][0]], b = u[tris[t][1]], c = u[tris[t][2]];
    const double sum = a + b + c;
    const double local = areas[t] / 12.0 * (a * a + b * b + c * c + sum * sum);
    s += (w ? w->values[t] : 1.0) * local;
  }
  return s;
}

ElementField velocity_simple(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff, const Mesh& mesh,
                             Objective objective, double c)
{
  require_modes(eigs, mesh, 1);
  auto v = mode_velocity(problem, eigs, 0, coeff, mesh, c);
  if (objective == Objective::Maximize)
    for (double& x : v)
      x = -x;
  return ElementField{&mesh, std::move(v)};
}

ElementField velocity_multiplicity2(Problem problem, const eig::EigenSet& eigs, const ElementField& coeff,
                                    const Mesh& mesh, Objective objective, double c, double threshold)
{
  require_modes(eigs, mesh, 2);
  const double ratio = eigs.values[0] / eigs.values[1];
  if (ratio < threshold)
    throw Error("first eigenvalue is simple (lambda1/lambda2 = " + std::to_string(ratio) + ")");
  auto v = mode_velocity(problem, eigs, 0, coeff, mesh, c);
  const auto v2 = mode_velocity(problem, eigs, 1, coeff, mesh, c);
  const double sign = objective == Objective::Maximize ? -1.0 : 1.0;
  for (std::size_t t = 0; t < v.size(); ++t)
    v[t] = sign * (v[t] + v2[t]);
  return ElementField{&mesh, std::move(v)};
}

Stepper::Stepper(const Mesh& mesh, double epsilon)
    : m_mesh(&mesh), m_eps(epsilon), m_asm(mesh),
      m_K(m_asm.stiffness(ElementField::constant(mesh, 1.0))), m_M(m_asm.mass())
{
  if (!(epsilon > 0))
    throw Error("viscosity must be positive");
}

fem::SparseMatrix Stepper::system(double dt) const
{
  if (!(dt > 0) || !std::isfinite(dt))
    throw Error("step size must be positive");
  return m_M.combined(1.0 / dt, m_K, m_eps);
}

std::vector<double> Stepper::solve(const fem::SparseMatrix& a, std::span<const double> rhs) const
{
  std::vector<double> x(rhs.size(), 0.0);
  eig::conjugate_gradient(a, rhs, x, 1e-10);
  return x;
}

NodalField Stepper::step(const NodalField& phi_prev, const ElementField& v0, double nu, double dt) const
{
  phi_prev.check();
  const Mesh& mesh = *m_mesh;
  const auto a = system(dt);
  const auto gm = gradient_magnitude(mesh, phi_prev.values);
  std::vector<double> f(gm.size());
  for (std::size_t t = 0; t < f.size(); ++t)
    f[t] = (v0.values[t] + nu) * gm[t];
  const auto b = m_asm.load(f);
  auto rhs = m_M * phi_prev.values;
  for (std::size_t i = 0; i < rhs.size(); ++i)
    rhs[i] = rhs[i] / dt - b[i];
  // Starting from phi_prev makes a fixed point come back unchanged.
  std::vector<double> x = phi_prev.values;
  eig::conjugate_gradient(a, rhs, x, 1e-10);
  return NodalField{&mesh, std::move(x)};
}

Stepper::Split Stepper::split(const NodalField& phi_prev, const ElementField& v0, double dt) const
{
  phi_prev.check();
  const Mesh& mesh = *m_mesh;
  const auto a = system(dt);
  const auto gm = gradient_magnitude(mesh, phi_prev.values);
  std::vector<double> f(gm.size());
  for (std::size_t t = 0; t < f.size(); ++t)
    f[t] = v0.values[t] * gm[t];
  const auto b0 = m_asm.load(f);
  auto b1 = m_asm.load(gm);
  auto rhs = m_M * phi_prev.values;
  for (std::size_t i = 0; i < rhs.size(); ++i)
    rhs[i] = rhs[i] / dt - b0[i];
  Split s;
  s.base = phi_prev.values;
  eig::conjugate_gradient(a, rhs, s.base, 1e-10);
  for (double& v : b1)
    v = -v;
  s.slope = solve(a, b1);
  return s;
}

NodalField implicit_step(const Mesh& mesh, const NodalField& phi_prev, const ElementField& v0, double nu, double dt,
                         double epsilon)
{
  return Stepper(mesh, epsilon).step(phi_prev, v0, nu, dt);
}

MultiplierResult find_multiplier(const Stepper& stepper, const NodalField& phi_prev, const ElementField& v0,
                                 double dt, double m0, double volume_tol)
{
  const Mesh& mesh = stepper.mesh();
  v0.check();
  const auto parts = stepper.split(phi_prev, v0, dt);
  const double tol = volume_tol * mesh.area();
  std::vector<double> phi(parts.base.size());
  MultiplierResult r;
  auto eval = [&](double nu) {
    for (std::size_t i = 0; i < phi.size(); ++i)
      phi[i] = parts.base[i] + nu * parts.slope[i];
    ++r.evaluations;
    return mismatch_of(mesh, phi, m0);
  };
  auto accept = [&](double nu, double g) {
    r.nu = nu;
    r.G = g;
    eval(nu);
    r.phi = NodalField{&mesh, phi};
    return r;
  };

  const double nu0 = -interface_average(mesh, phi_prev.values, v0.values);
  const double g0 = eval(nu0);
  if (std::abs(g0) <= tol)
    return accept(nu0, g0);

  // G decreases as nu grows: a larger nu pushes phi down everywhere.
  double vmax = 0.0;
  for (double v : v0.values)
    vmax = std::max(vmax, std::abs(v));
  double step = std::max({0.25 * vmax, 0.25 * std::abs(nu0), 1e-8 / dt});
  double a = nu0, b = nu0, ga = g0, gb = g0;
  const double dir = g0 > 0 ? 1.0 : -1.0;
  int expansions = 0;
  for (;;) {
    const double next = nu0 + dir * step;
    const double g = eval(next);
    if (std::abs(g) <= tol)
      return accept(next, g);
    if ((g > 0) == (g0 > 0)) {
      (dir > 0 ? a : b) = next;
      (dir > 0 ? ga : gb) = g;
    } else {
      (dir > 0 ? b : a) = next;
      (dir > 0 ? gb : ga) = g;
      break;
    }
    step *= 2;
    if (++expansions > 200) {
      std::ostringstream os;
      os << "multiplier bracket failure: G(" << nu0 << ") = " << g0 << ", G(" << next << ") = " << g;
      throw NumericalError(os.str());
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b)
      break;
    const double g = eval(mid);
    if (std::abs(g) <= tol)
      return accept(mid, g);
    if (g > 0) {
      a = mid;
      ga = g;
    } else {
      b = mid;
      gb = g;
    }
  }
  std::ostringstream os;
  os << "multiplier bisection stalled: G(" << a << ") = " << ga << ", G(" << b << ") = " << gb << ", tolerance "
     << tol;
  throw NumericalError(os.str());
}

MultiplierResult find_multiplier(const Mesh& mesh, const NodalField& phi_prev, const ElementField& v0, double dt,
                                 double epsilon, double m0, double volume_tol)
{
  return find_multiplier(Stepper(mesh, epsilon), phi_prev, v0, dt, m0, volume_tol);
}

NodalField reinitialize(const Mesh& mesh, const NodalField& phi)
{
  phi.check();
  const auto& vs = mesh.vertices();
  const auto& p = phi.values;
  std::vector<geometry::Point> zeros;
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (p[i] == 0.0)
      zeros.push_back(vs[i]);
  for (const auto& tri : mesh.triangles())
    for (int e = 0; e < 3; ++e) {
      const int i = tri[e], j = tri[(e + 1) % 3];
      if (i < j && ((p[i] < 0 && p[j] > 0) || (p[i] > 0 && p[j] < 0))) {
        const double s = p[i] / (p[i] - p[j]);
        zeros.push_back(vs[i] + s * (vs[j] - vs[i]));
      }
    }
  // Edges shared by two triangles appear twice; harmless for a min-distance.
  NodalField out = phi;
  if (zeros.empty())
    return out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (p[i] == 0.0)
      continue;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& z : zeros)
      d = std::min(d, geometry::distance(vs[i], z));
    out.values[i] = p[i] > 0 ? d : -d;
  }
  return out;
}

ModeSolver::ModeSolver(const Mesh& mesh, Problem problem, fem::BoundaryCondition bc, std::uint64_t seed)
    : m_mesh(&mesh), m_problem(problem), m_bc(std::move(bc)), m_asm(mesh), m_deflate(m_bc.pure_neumann()),
      m_seed(seed)
{
  m_bc.check(mesh);
}

eig::EigenSet ModeSolver::solve(const ElementField& coeff, int k)
{
  const Mesh& mesh = *m_mesh;
  fem::SparseMatrix K, M;
  if (m_problem == Problem::Conductivity) {
    K = m_asm.stiffness(coeff);
    if (m_bc.has_robin())
      K = K.combined(1.0, m_asm.robin(m_bc, &coeff), 1.0);
    M = m_asm.mass();
  } else {
    K = m_asm.stiffness(ElementField::constant(mesh, 1.0));
    if (m_bc.has_robin())
      K = K.combined(1.0, m_asm.robin(m_bc), 1.0);
    M = m_asm.mass(coeff);
  }
  const auto red = fem::apply_dirichlet(K, M, mesh, m_bc);
  eig::SolverOptions opts;
  opts.seed = m_seed;
  if (m_warm.size() == static_cast<std::size_t>(k) && !m_warm.empty() &&
      m_warm.front().size() == static_cast<std::size_t>(red.K.rows()))
    opts.initial = m_warm;
  eig::EigenSet es = eig::solve_smallest(red.K, red.M, k, m_deflate, opts);
  m_warm = es.vectors;
  for (auto& v : es.vectors)
    v = red.dofs.expand(v);
  return es;
}

OptState optimize(const PhaseConfig& config, const Mesh& mesh, const StepCallback& on_step)
{
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ModeSolver modes(mesh, config.problem, config.bc, config.seed);
  const Stepper stepper(mesh, config.epsilon);
  const double area = mesh.area();
  const bool minimize = config.objective == Objective::Minimize;
  // Characteristic element size: side of the equilateral triangle with the mean area.
  const double h = std::sqrt(4.0 / std::sqrt(3.0) * area / static_cast<double>(mesh.num_triangles()));

  OptState st;
  st.phi = init_phi(mesh);
  int worsening = 0;
  for (int n = 0;; ++n) {
    st.step = n;
    st.coeff = phase_from_phi(mesh, st.phi, config.c);
    st.eigs = modes.solve(st.coeff, 3);
    st.volume_residual = volume_mismatch(mesh, st.phi, config.m0) / area;

    const bool multiple = !minimize && st.eigs.values[0] / st.eigs.values[1] >= config.multiplicity_threshold;
    HistoryRow row;
    row.step = n;
    row.lambda1 = st.eigs.values[0];
    row.lambda2 = st.eigs.values[1];
    row.lambda3 = st.eigs.values[2];
    row.G = st.volume_residual;
    row.nu = st.nu;
    row.dt = st.dt;
    row.multiplicity = multiple;
    if (config.record_wallclock)
      row.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!st.history.empty()) {
      const double prev = st.history.back().lambda1;
      worsening = (minimize ? row.lambda1 > prev : row.lambda1 < prev) ? worsening + 1 : 0;
    }
    st.history.push_back(row);
    if (on_step)
      on_step(st);

    if (worsening >= config.divergence_window)
      throw NumericalError("optimizer diverged: objective worsened for " + std::to_string(worsening) +
                           " consecutive steps" + history_dump(st.history, 10));
    const int w = config.stop_window;
    if (n >= w) {
      double lo = row.lambda1, hi = row.lambda1;
      for (std::size_t i = st.history.size() - 1 - w; i < st.history.size(); ++i) {
        lo = std::min(lo, st.history[i].lambda1);
        hi = std::max(hi, st.history[i].lambda1);
      }
      if (hi - lo < config.stop_tol * std::abs(row.lambda1)) {
        st.stop_reason = "converged";
        break;
      }
    }
    if (n >= config.max_steps) {
      st.stop_reason = "max_steps";
      break;
    }

    ElementField v0 = multiple ? velocity_multiplicity2(config.problem, st.eigs, st.coeff, mesh, config.objective,
                                                        config.c, config.multiplicity_threshold)
                               : velocity_simple(config.problem, st.eigs, st.coeff, mesh, config.objective, config.c);
    // Reinitializing the previous iterate keeps the accepted state on the volume constraint.
    if (config.reinitialize)
      st.phi = reinitialize(mesh, st.phi);
    double dt = time_step(st.phi);
    if (n == 0) {
      double mean = 0.0;
      for (std::size_t t = 0; t < v0.values.size(); ++t)
        mean += v0.values[t] * mesh.element_areas()[t];
      mean /= area;
      double spread = 0.0;
      for (double v : v0.values)
        spread = std::max(spread, std::abs(v - mean));
      st.gain = spread > 0 ? config.cfl * h * std::min(1.0, 10.0 * std::abs(config.c - 1)) / (dt * spread) : 1.0;
    }
    dt *= st.gain;
    auto mult = find_multiplier(stepper, st.phi, v0, dt, config.m0, config.volume_tol);
    st.phi = std::move(mult.phi);
    st.nu = mult.nu;
    st.dt = dt;
  }
  return st;
}

} // namespace eigentop::levelset
