#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cpf {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod (7/15) quadrature of a scalar function on [a, b].
///
/// `breaks` lists interior points where the integrand may be discontinuous;
/// the interval is split there before adaptation. Throws NumericalError when
/// the summed error estimate stays above `tol` after `max_depth` bisections.
QuadratureResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                              std::span<const double> breaks = {}, double tol = 1e-12,
                              int max_depth = 40);

// Writes `size` values of the integrand at x.
using VectorIntegrand = std::function<void(double x, std::span<double> out)>;

struct VectorQuadratureResult {
  std::vector<double> value;
  double error = 0.0;  // summed over subintervals of the largest component error
};

// Vector-valued form of the above; all components share the subdivision.
VectorQuadratureResult integrate_1d(const VectorIntegrand& f, std::size_t size, double a, double b,
                                    std::span<const double> breaks = {}, double tol = 1e-12,
                                    int max_depth = 40);

}  // namespace cpf
