#include "eigentop/eig.hpp"
#include "eigentop/error.hpp"
#include "eigentop/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace eigentop::eig {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Y = A X for a block of column vectors.
void block_multiply(const SparseMatrix& a, const MatrixXd& x, MatrixXd& y)
{
  const int n = a.rows();
  const auto cols = static_cast<int>(x.cols());
  y.resize(n, cols);
  const auto& rp = a.row_ptr();
  const auto& ci = a.cols();
  const auto& v = a.values();
#pragma omp parallel for schedule(static) if (n > 2048)
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int k = rp[i]; k < rp[i + 1]; ++k)
        s += v[k] * x(ci[k], c);
      y(i, c) = s;
    }
  }
}

double uniform_pm1(std::mt19937_64& rng)
{
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

class Preconditioner
{
public:
  Preconditioner(const SparseMatrix& K, const SparseMatrix& M)
  {
    const auto dk = K.diagonal();
    const auto dm = M.diagonal();
    double sk = 0.0, sm = 0.0;
    for (std::size_t i = 0; i < dk.size(); ++i) {
      sk += dk[i];
      sm += dm[i];
    }
    const double sigma = 1e-3 * sk / sm;
    Eigen::SparseMatrix<double> a = K.to_eigen() + sigma * M.to_eigen();
    m_ic.compute(a);
    m_ok = m_ic.info() == Eigen::Success;
    m_inv_diag.resize(dk.size());
    for (std::size_t i = 0; i < dk.size(); ++i)
      m_inv_diag[i] = 1.0 / (dk[i] + sigma * dm[i]);
  }

  MatrixXd apply(const MatrixXd& r) const
  {
    MatrixXd w(r.rows(), r.cols());
    for (Eigen::Index c = 0; c < r.cols(); ++c) {
      if (m_ok)
        w.col(c) = m_ic.solve(r.col(c));
      else
        w.col(c) = m_inv_diag.cwiseProduct(r.col(c));
    }
    return w;
  }

private:
  Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>> m_ic;
  VectorXd m_inv_diag;
  bool m_ok = false;
};

// Removes the constant component in the M inner product.
struct Deflator
{
  bool active = false;
  VectorXd mc; // M * 1
  double cmc = 1.0;

  void apply(MatrixXd& x) const
  {
    if (!active)
      return;
    const Eigen::RowVectorXd coef = (mc.transpose() * x) / cmc;
    x.rowwise() -= coef;
  }
};

// M-orthonormalizes the columns of S (SVQB), dropping numerically dependent
// directions. MS = M S is transformed alongside.
void svqb(MatrixXd& s, MatrixXd& ms)
{
  for (int pass = 0; pass < 2; ++pass) {
    MatrixXd g = s.transpose() * ms;
    g = 0.5 * (g + g.transpose()).eval();
    VectorXd d = g.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i)
      d(i) = d(i) > 0.0 ? 1.0 / std::sqrt(d(i)) : 0.0;
    const MatrixXd gs = d.asDiagonal() * g * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gs);
    const VectorXd& theta = es.eigenvalues();
    const double top = theta.maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      if (theta(i) > 1e-12 * top)
        keep.push_back(i);
    MatrixXd t(s.cols(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      t.col(static_cast<Eigen::Index>(j)) = d.asDiagonal() * es.eigenvectors().col(keep[j]) / std::sqrt(theta(keep[j]));
    s = (s * t).eval();
    ms = (ms * t).eval();
  }
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void fix_sign(std::vector<double>& u)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i)
    if (std::abs(u[i]) > std::abs(u[best]) * (1.0 + 1e-9))
      best = i;
  if (u[best] < 0.0)
    for (double& x : u)
      x = -x;
}

EigenSet finish(const SparseMatrix& K, const SparseMatrix& M, const MatrixXd& x, const VectorXd& lam, int k,
                bool deflated, int iterations)
{
  EigenSet es;
  es.deflated = deflated;
  es.iterations = iterations;
  for (int j = 0; j < k; ++j) {
    std::vector<double> u = to_std(x.col(j));
    fix_sign(u);
    es.values.push_back(lam(j));
    es.residuals.push_back(relative_residual(K, M, u, lam(j)));
    es.vectors.push_back(std::move(u));
  }
  return es;
}

EigenSet solve_dense(const SparseMatrix& K, const SparseMatrix& M, int k, bool deflate)
{
  const MatrixXd kd = MatrixXd(K.to_eigen());
  const MatrixXd md = MatrixXd(M.to_eigen());
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(kd, md);
  if (ges.info() != Eigen::Success)
    throw NumericalError("dense generalized eigensolver failed");
  const MatrixXd& vecs = ges.eigenvectors();
  const VectorXd& vals = ges.eigenvalues();
  Eigen::Index skip = -1;
  if (deflate) {
    const VectorXd mc = md * VectorXd::Ones(kd.rows());
    double best = -1.0;
    for (Eigen::Index j = 0; j < vals.size(); ++j) {
      const double overlap = std::abs(mc.dot(vecs.col(j)));
      if (overlap > best) {
        best = overlap;
        skip = j;
      }
    }
  }
  MatrixXd x(kd.rows(), k);
  VectorXd lam(k);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < vals.size() && c < k; ++j) {
    if (j == skip)
      continue;
    x.col(c) = vecs.col(j);
    lam(c) = vals(j);
    ++c;
  }
  return finish(K, M, x, lam, k, deflate, 0);
}

} // namespace

double rayleigh_quotient(const SparseMatrix& K, const SparseMatrix& M, std::span<const double> u)
{
  const auto ku = K * u;
  const auto mu = M * u;
  return parallel::dot(u, ku) / parallel::dot(u, mu);
}

double relative_residual(const SparseMatrix& K, const SparseMatrix& M, std::span<const double> u, double lambda)
{
  auto r = K * u;
  const auto mu = M * u;
  parallel::axpy(-lambda, mu, r);
  const double nu = parallel::norm2(u);
  const double nk = K.norm_inf();
  if (nu == 0.0 || nk == 0.0)
    return parallel::norm2(r);
  return parallel::norm2(r) / (nk * nu);
}

EigenSet solve_smallest(const SparseMatrix& K, const SparseMatrix& M, int k, bool deflate_constants,
                        const SolverOptions& options)
{
  const int n = K.rows();
  if (M.rows() != n)
    throw Error("K and M dimensions differ");
  const int available = n - 1 - (deflate_constants ? 1 : 0);
  if (k < 1 || k > available)
    throw Error("requested " + std::to_string(k) + " eigenpairs from a problem of dimension " + std::to_string(n));
  if (n <= options.dense_threshold)
    return solve_dense(K, M, k, deflate_constants);

  const int m = std::min(k + 2, available);
  Deflator defl;
  if (deflate_constants) {
    defl.active = true;
    const std::vector<double> ones(n, 1.0);
    const auto mc = M * ones;
    defl.mc = Eigen::Map<const VectorXd>(mc.data(), n);
    defl.cmc = defl.mc.sum();
  }

  std::mt19937_64 rng(options.seed);
  MatrixXd x(n, m);
  for (int c = 0; c < m; ++c)
    for (int i = 0; i < n; ++i)
      x(i, c) = uniform_pm1(rng);
  for (int c = 0; c < m && c < static_cast<int>(options.initial.size()); ++c)
    if (static_cast<int>(options.initial[c].size()) == n)
      x.col(c) = Eigen::Map<const VectorXd>(options.initial[c].data(), n);
  defl.apply(x);

  const Preconditioner prec(K, M);
  const double norm_k = std::max(K.norm_inf(), 1e-300);

  MatrixXd mx, kx;
  block_multiply(M, x, mx);
  svqb(x, mx);
  if (x.cols() < m)
    throw NumericalError("initial subspace is rank deficient");
  block_multiply(K, x, kx);
  VectorXd lam;
  {
    MatrixXd a = x.transpose() * kx;
    a = 0.5 * (a + a.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    const MatrixXd c = es.eigenvectors();
    lam = es.eigenvalues();
    x = (x * c).eval();
    kx = (kx * c).eval();
    mx = (mx * c).eval();
  }

  MatrixXd p; // previous search directions, one per column of x
  std::vector<double> res(m, 1.0);
  for (int it = 0; it <= options.max_iterations; ++it) {
    MatrixXd r = kx - mx * lam.asDiagonal();
    double worst = 0.0;
    for (int j = 0; j < m; ++j) {
      res[j] = r.col(j).norm() / (norm_k * x.col(j).norm());
      if (j < k)
        worst = std::max(worst, res[j]);
    }
    if (worst <= options.tol)
      return finish(K, M, x, lam, k, deflate_constants, it);
    if (it == options.max_iterations)
      break;

    std::vector<int> active;
    for (int j = 0; j < m; ++j)
      if (res[j] > options.tol)
        active.push_back(j);
    MatrixXd ra(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j)
      ra.col(static_cast<Eigen::Index>(j)) = r.col(active[j]);
    MatrixXd w = prec.apply(ra);
    defl.apply(w);

    const Eigen::Index np = p.cols() > 0 ? static_cast<Eigen::Index>(active.size()) : 0;
    MatrixXd s(n, m + w.cols() + np);
    s.leftCols(m) = x;
    s.middleCols(m, w.cols()) = w;
    for (Eigen::Index j = 0; j < np; ++j)
      s.col(m + w.cols() + j) = p.col(active[j]);

    MatrixXd ms;
    block_multiply(M, s, ms);
    svqb(s, ms);
    if (s.cols() < m)
      throw NumericalError("search subspace collapsed");
    MatrixXd ks;
    block_multiply(K, s, ks);
    MatrixXd a = s.transpose() * ks;
    a = 0.5 * (a + a.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    const MatrixXd c = es.eigenvectors().leftCols(m);

    const MatrixXd x_old = x;
    const MatrixXd mx_old = mx;
    x = s * c;
    kx = ks * c;
    mx = ms * c;
    lam = es.eigenvalues().head(m);
    p = x - x_old * (mx_old.transpose() * x);
  }

  std::ostringstream os;
  os << "LOBPCG did not converge in " << options.max_iterations << " iterations; residuals:";
  for (int j = 0; j < k; ++j)
    os << ' ' << res[j];
  throw NumericalError(os.str());
}

std::pair<double, double> multiplicity_ratio(const EigenSet& es)
{
  if (es.size() < 3)
    throw Error("multiplicity ratios need at least three eigenpairs");
  return {es.values[0] / es.values[1], es.values[1] / es.values[2]};
}

CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b, std::span<double> x, double rel_tol,
                            int max_iterations)
{
  const std::size_t n = b.size();
  if (max_iterations <= 0)
    max_iterations = static_cast<int>(std::max<std::size_t>(100, 10 * n));
  const double bnorm = parallel::norm2(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }
  const auto diag = A.diagonal();
  std::vector<double> r(n), z(n), q(n), ap(n);
  A.multiply(x, ap);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = b[i] - ap[i];
  for (std::size_t i = 0; i < n; ++i)
    z[i] = r[i] / diag[i];
  q = z;
  double rz = parallel::dot(r, z);
  double rnorm = parallel::norm2(r);
  int it = 0;
  while (rnorm > rel_tol * bnorm) {
    if (it >= max_iterations)
      throw NumericalError("conjugate gradients did not converge: relative residual " + std::to_string(rnorm / bnorm));
    A.multiply(q, ap);
    const double alpha = rz / parallel::dot(q, ap);
    parallel::axpy(alpha, q, x);
    parallel::axpy(-alpha, ap, r);
    for (std::size_t i = 0; i < n; ++i)
      z[i] = r[i] / diag[i];
    const double rz_new = parallel::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i)
      q[i] = z[i] + beta * q[i];
    rnorm = parallel::norm2(r);
    ++it;
  }
  return {it, rnorm / bnorm};
}

} // namespace eigentop::eig
