#include "eigentop/oned.hpp"
#include "eigentop/eig.hpp"
#include "eigentop/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace eigentop::oned {

namespace {

constexpr double pi = std::numbers::pi;

struct State
{
  double u;
  double w; // rho u'
};

// Exact propagation of (u, rho u') across a piece of length s.
State propagate(double rho, double kt2, double lambda, double s, State in)
{
  const double k2 = lambda / rho - kt2;
  if (k2 > 0) {
    const double k = std::sqrt(k2);
    const double cs = std::cos(k * s), sn = std::sin(k * s);
    return {in.u * cs + in.w / (rho * k) * sn, -in.u * rho * k * sn + in.w * cs};
  }
  if (k2 < 0) {
    const double g = std::sqrt(-k2);
    const double ch = std::cosh(g * s), sh = std::sinh(g * s);
    return {in.u * ch + in.w / (rho * g) * sh, in.u * rho * g * sh + in.w * ch};
  }
  return {in.u + in.w * s / rho, in.w};
}

// Positive scale for the angle coordinate (u, w / scale) inside a piece.
double angle_scale(double rho, double kt2, double lambda)
{
  const double k2 = lambda / rho - kt2;
  return k2 == 0 ? 1.0 : rho * std::sqrt(std::abs(k2));
}

double nearest_branch(double base, double reference)
{
  return base + 2 * pi * std::round((reference - base) / (2 * pi));
}

State initial_state(Bc1d bc)
{
  return bc == Bc1d::Dirichlet ? State{0.0, 1.0} : State{1.0, 0.0};
}

// Continuous Pruefer-type angle at x = 1. The coordinates are rescaled per
// piece which moves the angle off the textbook value but keeps the quadrant,
// so comparisons against multiples of pi/2 are exact.
double end_angle(const PiecewiseProfile& p, Bc1d bc, double lambda, double kt2)
{
  State st = initial_state(bc);
  double theta = bc == Bc1d::Dirichlet ? 0.0 : pi / 2;
  for (std::size_t j = 0; j < p.pieces(); ++j) {
    const double rho = p.values[j];
    const double len = p.breakpoints[j + 1] - p.breakpoints[j];
    const double scale = angle_scale(rho, kt2, lambda);
    const double base = std::atan2(st.u, st.w / scale);
    theta = nearest_branch(base, theta);
    const double k2 = lambda / rho - kt2;
    st = propagate(rho, kt2, lambda, len, st);
    const double r = std::hypot(st.u, st.w);
    st.u /= r;
    st.w /= r;
    const double end = std::atan2(st.u, st.w / scale);
    if (k2 > 0)
      theta = nearest_branch(end, theta + std::sqrt(k2) * len);
    else
      theta += std::remainder(end - base, 2 * pi);
  }
  return theta;
}

int target_index(Bc1d bc, int k, double kt2)
{
  return k + (bc == Bc1d::Neumann && kt2 == 0.0 ? 1 : 0);
}

} // namespace

PiecewiseProfile PiecewiseProfile::alternating(std::vector<double> interior, double first, double other)
{
  PiecewiseProfile p;
  p.breakpoints.reserve(interior.size() + 2);
  p.breakpoints.push_back(0.0);
  p.breakpoints.insert(p.breakpoints.end(), interior.begin(), interior.end());
  p.breakpoints.push_back(1.0);
  for (std::size_t j = 0; j + 1 < p.breakpoints.size(); ++j)
    p.values.push_back(j % 2 == 0 ? first : other);
  return p;
}

PiecewiseProfile PiecewiseProfile::uniform(double rho)
{
  return {{0.0, 1.0}, {rho}};
}

double PiecewiseProfile::value_at(double x) const
{
  const auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end() - 1, x);
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double PiecewiseProfile::measure_of(double v) const
{
  double m = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j)
    if (values[j] == v)
      m += breakpoints[j + 1] - breakpoints[j];
  return m;
}

bool PiecewiseProfile::is_uniform() const
{
  return std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
}

void PiecewiseProfile::validate() const
{
  if (values.empty() || breakpoints.size() != values.size() + 1)
    throw Error("profile needs one value per subinterval");
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
    throw Error("profile must span [0,1]");
  for (std::size_t j = 0; j + 1 < breakpoints.size(); ++j)
    if (!(breakpoints[j] < breakpoints[j + 1]))
      throw Error("profile breakpoints must be strictly increasing");
  for (double v : values)
    if (!(v > 0) || !std::isfinite(v))
      throw Error("profile values must be positive");
}

void PiecewiseProfile::validate_two_phase(double c) const
{
  validate();
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] != 1.0 && values[j] != c)
      throw Error("two-phase profile takes only the values 1 and c");
    if (j > 0 && values[j] == values[j - 1])
      throw Error("adjacent subintervals must carry different values");
  }
  const double m = measure_of(c);
  if (!(m > 0 && m < 1))
    throw Error("measure of {rho=c} must lie in (0,1)");
}

std::string PiecewiseProfile::describe() const
{
  std::ostringstream os;
  os.precision(6);
  for (std::size_t j = 0; j < values.size(); ++j)
    os << (j ? " " : "") << '[' << breakpoints[j] << ',' << breakpoints[j + 1] << "]:" << values[j];
  return os.str();
}

int eigenvalue_count_below(const PiecewiseProfile& p, Bc1d bc, double lambda, double kt2)
{
  const double theta = end_angle(p, bc, lambda, kt2);
  const double shifted = bc == Bc1d::Dirichlet ? theta : theta - pi / 2;
  if (bc == Bc1d::Dirichlet)
    return std::max(0, static_cast<int>(std::ceil(shifted / pi)) - 1);
  return std::max(0, static_cast<int>(std::ceil(shifted / pi)));
}

double eigen_1d(const PiecewiseProfile& p, Bc1d bc, int k, double kt2)
{
  p.validate();
  if (k < 1)
    throw Error("eigenvalue index must be at least 1");
  if (!(kt2 >= 0))
    throw Error("transverse wavenumber must be nonnegative");
  const int target = target_index(bc, k, kt2);

  // Comparison with the uniform coefficients min(rho) and max(rho) brackets
  // the eigenvalue; the grid walk only guards against rounding in the count.
  const auto [lo_it, hi_it] = std::minmax_element(p.values.begin(), p.values.end());
  const int mode = bc == Bc1d::Dirichlet ? target : target - 1;
  const double base = (mode * pi) * (mode * pi) + kt2;
  const double grid = pi * pi / 20;
  double lo = *lo_it * base * (1 - 1e-12);
  double hi = *hi_it * base * (1 + 1e-12) + grid;
  for (int guard = 0; eigenvalue_count_below(p, bc, lo, kt2) >= target; ++guard) {
    if (guard > 1000 || lo <= 0)
      throw NumericalError("eigenvalue bracket failure (lower end)");
    lo = std::max(0.0, lo - grid);
  }
  for (int guard = 0; eigenvalue_count_below(p, bc, hi, kt2) < target; ++guard) {
    if (guard > 100000)
      throw NumericalError("eigenvalue bracket failure (upper end)");
    hi += grid;
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    (eigenvalue_count_below(p, bc, mid, kt2) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigenfunction1d::Eigenfunction1d(const PiecewiseProfile& profile, Bc1d bc, double lambda, double kt2)
    : m_profile(profile), m_lambda(lambda), m_kt2(kt2)
{
  m_profile.validate();
  State st = initial_state(bc);
  for (std::size_t j = 0; j < m_profile.pieces(); ++j) {
    m_start.push_back({st.u, st.w});
    st = propagate(m_profile.values[j], kt2, lambda, m_profile.breakpoints[j + 1] - m_profile.breakpoints[j], st);
  }
  // Composite Gauss-Legendre (4 points) for int u^2 and int u.
  constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  double uu = 0.0, u1 = 0.0;
  for (std::size_t j = 0; j < m_profile.pieces(); ++j) {
    const double a = m_profile.breakpoints[j], b = m_profile.breakpoints[j + 1];
    const int panels = 256;
    const double ph = (b - a) / panels;
    for (int q = 0; q < panels; ++q)
      for (int g = 0; g < 4; ++g) {
        const double x = a + ph * (q + 0.5 + 0.5 * gx[g]);
        const double u = state_in_piece(j, x)[0];
        uu += 0.5 * ph * gw[g] * u * u;
        u1 += 0.5 * ph * gw[g] * u;
      }
  }
  const double scale = (u1 < 0 ? -1.0 : 1.0) / std::sqrt(uu);
  for (auto& s : m_start) {
    s[0] *= scale;
    s[1] *= scale;
  }
}

std::size_t Eigenfunction1d::piece_of(double x) const
{
  const auto& b = m_profile.breakpoints;
  const auto it = std::upper_bound(b.begin() + 1, b.end() - 1, x);
  return static_cast<std::size_t>(it - b.begin()) - 1;
}

std::array<double, 2> Eigenfunction1d::state_in_piece(std::size_t j, double x) const
{
  const State s = propagate(m_profile.values[j], m_kt2, m_lambda, x - m_profile.breakpoints[j],
                            {m_start[j][0], m_start[j][1]});
  return {s.u, s.w};
}

double Eigenfunction1d::value(double x) const
{
  return state_in_piece(piece_of(x), x)[0];
}

double Eigenfunction1d::flux(double x) const
{
  return state_in_piece(piece_of(x), x)[1];
}

BruteForceResult brute_force_optimum(double c, double m0, Bc1d bc, Objective objective, int max_interfaces, int grid)
{
  if (!(c > 0) || c == 1.0)
    throw ConfigError("c must be positive and different from 1");
  if (!(m0 > 0 && m0 < 1))
    throw ConfigError("m0 must lie in (0,1)");
  if (max_interfaces < 1 || max_interfaces > 4)
    throw ConfigError("the number of interfaces must be between 1 and 4");
  if (grid <= max_interfaces)
    throw ConfigError("grid must have more cells than interfaces");

  // Profiles are encoded as (interfaces, starting phase, free grid indices).
  struct Candidate
  {
    std::vector<double> interior;
    bool c_first;
  };
  std::vector<Candidate> candidates;
  for (int nk = 1; nk <= max_interfaces; ++nk) {
    const int free = nk - 1;
    std::vector<int> idx(free);
    for (int i = 0; i < free; ++i)
      idx[i] = i + 1;
    for (;;) {
      for (bool c_first : {true, false}) {
        std::vector<double> pts(nk);
        double measure = 0.0, prev = 0.0;
        for (int i = 0; i < free; ++i) {
          pts[i] = static_cast<double>(idx[i]) / grid;
          if ((i % 2 == 0) == c_first)
            measure += pts[i] - prev;
          prev = pts[i];
        }
        // piece free (between prev and last) is c iff (free % 2 == 0) == c_first
        const bool last_inner_is_c = (free % 2 == 0) == c_first;
        const double rest = m0 - measure;
        const double last = last_inner_is_c ? prev + rest : 1.0 - rest;
        if (rest > 0 && last > prev && last < 1.0) {
          pts[free] = last;
          candidates.push_back({std::move(pts), c_first});
        }
      }
      // next strictly increasing index tuple in [1, grid-1]
      int i = free - 1;
      while (i >= 0 && idx[i] == grid - 1 - (free - 1 - i))
        --i;
      if (i < 0)
        break;
      ++idx[i];
      for (int j = i + 1; j < free; ++j)
        idx[j] = idx[j - 1] + 1;
    }
  }

  const bool minimize = objective == Objective::Minimize;
  auto better = [&](double la, const std::vector<double>& a, double lb, const std::vector<double>& b) {
    if (la != lb)
      return minimize ? la < lb : la > lb;
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };

  const long n = static_cast<long>(candidates.size());
  std::vector<double> lambdas(candidates.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (long i = 0; i < n; ++i) {
    const auto& cand = candidates[i];
    const auto prof = PiecewiseProfile::alternating(cand.interior, cand.c_first ? c : 1.0, cand.c_first ? 1.0 : c);
    lambdas[i] = eigen_1d(prof, bc, 1);
  }
  long best = 0;
  for (long i = 1; i < n; ++i)
    if (better(lambdas[i], candidates[i].interior, lambdas[best], candidates[best].interior))
      best = i;

  BruteForceResult r;
  const auto& bc_best = candidates[best];
  r.profile = PiecewiseProfile::alternating(bc_best.interior, bc_best.c_first ? c : 1.0, bc_best.c_first ? 1.0 : c);
  r.lambda = lambdas[best];
  r.candidates = n;
  return r;
}

Criterion1dReport criterion_check_1d(const PiecewiseProfile& p, Bc1d bc, double tolerance, int samples)
{
  Criterion1dReport rep;
  p.validate();
  double c = 1.0;
  for (double v : p.values)
    if (v != 1.0)
      c = v;
  if (p.is_uniform() || c == 1.0) {
    rep.trivial = true;
    return rep;
  }
  const Eigenfunction1d ef(p, bc, eigen_1d(p, bc, 1));
  std::vector<double> q(samples);
  std::vector<char> in_s(samples);
  for (int i = 0; i < samples; ++i) {
    const double x = (i + 0.5) / samples;
    q[i] = std::abs(ef.flux(x));
    in_s[i] = p.value_at(x) == c;
  }
  const auto count_s = static_cast<int>(std::count(in_s.begin(), in_s.end(), 1));
  std::vector<double> sorted = q;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() - sorted.front() <= 1e-12 * sorted.back() || count_s == 0 || count_s == samples) {
    rep.trivial = true;
    return rep;
  }
  rep.tau_sub = sorted[count_s - 1];
  rep.tau_super = sorted[samples - count_s];
  int bad_sub = 0, bad_super = 0;
  for (int i = 0; i < samples; ++i) {
    bad_sub += static_cast<bool>(in_s[i]) != (q[i] <= rep.tau_sub);
    bad_super += static_cast<bool>(in_s[i]) != (q[i] >= rep.tau_super);
  }
  rep.sub_violation = static_cast<double>(bad_sub) / samples;
  rep.super_violation = static_cast<double>(bad_super) / samples;
  rep.sub_holds = rep.sub_violation <= tolerance;
  rep.super_holds = rep.super_violation <= tolerance;
  return rep;
}

std::vector<double> fem_eigen_1d(const PiecewiseProfile& p, Bc1d bc, int n, int k, double kt2)
{
  p.validate();
  if (n < 4)
    throw Error("need at least four elements");
  const double h = 1.0 / n;
  const int first = bc == Bc1d::Dirichlet ? 1 : 0;
  const int last = bc == Bc1d::Dirichlet ? n - 1 : n;
  const int dim = last - first + 1;
  std::vector<double> kd(n + 1, 0.0), ko(n, 0.0), md(n + 1, 0.0), mo(n, 0.0);
  for (int e = 0; e < n; ++e) {
    const double rho = p.value_at((e + 0.5) * h);
    const double ks = rho / h, ms = h / 6.0;
    kd[e] += ks + 2 * kt2 * rho * ms;
    kd[e + 1] += ks + 2 * kt2 * rho * ms;
    ko[e] += -ks + kt2 * rho * ms;
    md[e] += 2 * ms;
    md[e + 1] += 2 * ms;
    mo[e] += ms;
  }
  auto build = [&](const std::vector<double>& d, const std::vector<double>& o) {
    std::vector<int> rp{0}, cols;
    std::vector<double> vals;
    for (int i = first; i <= last; ++i) {
      if (i > first) {
        cols.push_back(i - 1 - first);
        vals.push_back(o[i - 1]);
      }
      cols.push_back(i - first);
      vals.push_back(d[i]);
      if (i < last) {
        cols.push_back(i + 1 - first);
        vals.push_back(o[i]);
      }
      rp.push_back(static_cast<int>(cols.size()));
    }
    return eig::SparseMatrix(dim, std::move(rp), std::move(cols), std::move(vals));
  };
  const auto K = build(kd, ko);
  const auto M = build(md, mo);
  const bool deflate = bc == Bc1d::Neumann && kt2 == 0.0;
  return eig::solve_smallest(K, M, k, deflate).values;
}

} // namespace eigentop::oned
