#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cpf/box.hpp"
#include "cpf/types.hpp"

namespace cpf {

struct WeightedBox {
  Box box;
  double weight = 1.0;
};

/// A bounded integration region described two ways.
///
/// The midpoint route integrates over `pieces` (axis-aligned boxes carrying a
/// constant weight) masked by `member`. The quasi-random route samples the
/// whole `bounding` box plus `aux_dims` auxiliary uniforms and weights each
/// point by `member(x) * qmc_weight(x, aux)`. Both describe the same measure;
/// disagreement between them flags a region construction or accuracy problem.
struct IntegrationRegion {
  std::vector<WeightedBox> pieces;
  std::function<bool(std::span<const double>)> member;
  Box bounding;
  std::size_t aux_dims = 0;
  std::function<double(std::span<const double>, std::span<const double>)> qmc_weight;

  // Optional two-dimensional graph structure: membership is
  // x[1] <= ceiling(x[0]). When set, the pieces are integrated by nested
  // adaptive Gauss-Kronrod quadrature instead of the masked midpoint rule.
  std::function<double(double)> ceiling;
  std::vector<double> ceiling_breaks;
  // Per-coordinate locations where the integrand may jump.
  std::vector<std::vector<double>> integrand_breaks;
};

// Writes a rows x cols matrix (column-major) for the point x.
using Integrand = std::function<void(std::span<const double> x, std::span<double> out)>;

struct IntegrationOptions {
  double tol = 1e-5;
  int base_level = 3;
  int max_refinements = 12;
  std::size_t qmc_points = std::size_t{1} << 16;
  std::size_t qmc_shifts = 32;
  std::uint64_t qmc_seed = 0x5eedULL;
  bool cross_check = true;
};

struct IntegralEstimate {
  Matrix value;
  double error = 0.0;  // max-entry difference across the last three refinement levels
  Matrix qmc_value;
  double qmc_error = 0.0;  // max-entry standard error across random shifts
  int levels = 0;  // midpoint refinements used; 0 for nested quadrature
};

/// Adaptive masked midpoint rule (or nested quadrature for graph regions) with a
/// randomized quasi-Monte Carlo cross-check.
///
/// Cells are subdivided where the membership indicator changes across the
/// cell or the integrand deviates from linear, down to a maximum depth of
/// base_level + k. k grows until three successive depths agree to `tol` in
/// every entry; NumericalError is thrown if that fails within max_refinements.
IntegralEstimate integrate_over_region(const Integrand& f, std::size_t rows, std::size_t cols,
                                       const IntegrationRegion& region,
                                       const IntegrationOptions& options = {});

// Radical-inverse (Halton) point `index` in `dim` dimensions.
void halton_point(std::uint64_t index, std::span<double> out);

}  // namespace cpf
