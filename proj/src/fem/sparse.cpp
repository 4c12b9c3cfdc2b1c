#include "eigentop/error.hpp"
#include "eigentop/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace eigentop::fem {

SparseMatrix::SparseMatrix(int n, std::vector<int> row_ptr, std::vector<int> cols, std::vector<double> values)
    : m_n(n), m_row_ptr(std::move(row_ptr)), m_cols(std::move(cols)), m_values(std::move(values))
{
  if (static_cast<int>(m_row_ptr.size()) != n + 1 || m_cols.size() != m_values.size() ||
      static_cast<std::size_t>(m_row_ptr.back()) != m_cols.size())
    throw Error("inconsistent CSR arrays");
}

double SparseMatrix::at(int i, int j) const
{
  const auto begin = m_cols.begin() + m_row_ptr[i];
  const auto end = m_cols.begin() + m_row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j)
    return 0.0;
  return m_values[it - m_cols.begin()];
}

std::vector<double> SparseMatrix::diagonal() const
{
  std::vector<double> d(m_n);
  for (int i = 0; i < m_n; ++i)
    d[i] = at(i, i);
  return d;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
#pragma omp parallel for schedule(static) if (m_n > 4096)
  for (int i = 0; i < m_n; ++i) {
    double s = 0.0;
    for (int k = m_row_ptr[i]; k < m_row_ptr[i + 1]; ++k)
      s += m_values[k] * x[m_cols[k]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::operator*(std::span<const double> x) const
{
  std::vector<double> y(m_n);
  multiply(x, y);
  return y;
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const
{
  return m_n == other.m_n && m_row_ptr == other.m_row_ptr && m_cols == other.m_cols;
}

SparseMatrix SparseMatrix::combined(double alpha, const SparseMatrix& other, double beta) const
{
  if (!same_pattern(other))
    throw Error("matrix patterns differ");
  std::vector<double> v(m_values.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = alpha * m_values[k] + beta * other.m_values[k];
  return SparseMatrix(m_n, m_row_ptr, m_cols, std::move(v));
}

SparseMatrix SparseMatrix::scaled(double alpha) const
{
  std::vector<double> v = m_values;
  for (double& x : v)
    x *= alpha;
  return SparseMatrix(m_n, m_row_ptr, m_cols, std::move(v));
}

double SparseMatrix::max_asymmetry() const
{
  double worst = 0.0;
  for (int i = 0; i < m_n; ++i)
    for (int k = m_row_ptr[i]; k < m_row_ptr[i + 1]; ++k)
      worst = std::max(worst, std::abs(m_values[k] - at(m_cols[k], i)));
  return worst;
}

double SparseMatrix::norm_inf() const
{
  double worst = 0.0;
  for (int i = 0; i < m_n; ++i) {
    double s = 0.0;
    for (int k = m_row_ptr[i]; k < m_row_ptr[i + 1]; ++k)
      s += std::abs(m_values[k]);
    worst = std::max(worst, s);
  }
  return worst;
}

Eigen::SparseMatrix<double> SparseMatrix::to_eigen() const
{
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(m_values.size());
  for (int i = 0; i < m_n; ++i)
    for (int k = m_row_ptr[i]; k < m_row_ptr[i + 1]; ++k)
      trips.emplace_back(i, m_cols[k], m_values[k]);
  Eigen::SparseMatrix<double> a(m_n, m_n);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

std::string SparseMatrix::to_coordinate_text() const
{
  std::string out;
  char buf[80];
  for (int i = 0; i < m_n; ++i) {
    for (int k = m_row_ptr[i]; k < m_row_ptr[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, m_cols[k], m_values[k]);
      out += buf;
    }
  }
  return out;
}

namespace reference {

void multiply(const SparseMatrix& a, std::span<const double> x, std::span<double> y)
{
  const auto& rp = a.row_ptr();
  const auto& cols = a.cols();
  const auto& vals = a.values();
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k)
      s += vals[k] * x[cols[k]];
    y[i] = s;
  }
}

} // namespace reference

} // namespace eigentop::fem
