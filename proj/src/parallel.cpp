#include "eigentop/parallel.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace eigentop::parallel {

int thread_count() { return omp_get_max_threads(); }

void set_thread_count(int n)
{
  if (n > 0)
    omp_set_num_threads(n);
}

void configure_from_environment()
{
  const char* env = std::getenv("EIGENTOP_THREADS");
  if (!env)
    return;
  try {
    set_thread_count(std::stoi(env));
  } catch (const std::exception&) {
  }
}

double dot(std::span<const double> x, std::span<const double> y)
{
  const std::size_t n = x.size();
  const std::size_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  if (nblocks <= 1)
    return reference::dot(x, y);

  std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      s += x[i] * y[i];
    partial[b] = s;
  }
  double total = 0.0;
  for (double p : partial)
    total += p;
  return total;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double a, std::span<const double> x, std::span<double> y)
{
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    y[i] += a * x[i];
}

void scale(double a, std::span<double> x)
{
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    x[i] *= a;
}

namespace reference {

double dot(std::span<const double> x, std::span<const double> y)
{
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += x[i] * y[i];
  return s;
}

} // namespace reference

} // namespace eigentop::parallel
