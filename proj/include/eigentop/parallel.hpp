#pragma once

#include <cstddef>
#include <span>

namespace eigentop::parallel {

// Reductions use a fixed block partition so results do not depend on the
// thread count.
inline constexpr std::size_t kReductionBlock = 2048;

int thread_count();
void set_thread_count(int n);

/// Reads EIGENTOP_THREADS; leaves the OpenMP default when unset or invalid.
void configure_from_environment();

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(double a, std::span<double> x);

namespace reference {
double dot(std::span<const double> x, std::span<const double> y);
} // namespace reference

} // namespace eigentop::parallel
