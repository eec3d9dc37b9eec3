#include "cpf/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "cpf/types.hpp"

namespace cpf {
namespace {

constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// One 15-point Kronrod estimate of every component; the error is the largest
// component-wise |Kronrod - Gauss|.
double gauss_kronrod(const VectorIntegrand& f, std::size_t size, double a, double b,
                     std::vector<double>& value, std::vector<double>& scratch) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::vector<double> gauss(size);
  value.assign(size, 0.0);
  scratch.resize(size);
  f(centre, scratch);
  for (std::size_t e = 0; e < size; ++e) {
    value[e] = kKronrodWeights[7] * scratch[e];
    gauss[e] = kGaussWeights[3] * scratch[e];
  }
  std::vector<double> right(size);
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    f(centre - dx, scratch);
    f(centre + dx, right);
    for (std::size_t e = 0; e < size; ++e) {
      const double pair = scratch[e] + right[e];
      value[e] += kKronrodWeights[i] * pair;
      if (i % 2 == 1) {
        gauss[e] += kGaussWeights[i / 2] * pair;
      }
    }
  }
  double error = 0.0;
  for (std::size_t e = 0; e < size; ++e) {
    error = std::max(error, std::fabs((value[e] - gauss[e]) * half));
    value[e] *= half;
  }
  return error;
}

struct Accumulator {
  std::vector<double> value;
  double error = 0.0;
  bool converged = true;
};

void adapt(const VectorIntegrand& f, std::size_t size, double a, double b, double tol, int depth,
           std::vector<double> whole, double whole_error, Accumulator& total,
           std::vector<double>& scratch) {
  if (whole_error <= tol || depth == 0 || b - a <= 1e-15 * (1.0 + std::fabs(a))) {
    if (whole_error > tol) {
      total.converged = false;
    }
    for (std::size_t e = 0; e < size; ++e) {
      total.value[e] += whole[e];
    }
    total.error += whole_error;
    return;
  }
  const double mid = 0.5 * (a + b);
  std::vector<double> left;
  std::vector<double> right;
  const double left_error = gauss_kronrod(f, size, a, mid, left, scratch);
  const double right_error = gauss_kronrod(f, size, mid, b, right, scratch);
  adapt(f, size, a, mid, 0.5 * tol, depth - 1, std::move(left), left_error, total, scratch);
  adapt(f, size, mid, b, 0.5 * tol, depth - 1, std::move(right), right_error, total, scratch);
}

}  // namespace

VectorQuadratureResult integrate_1d(const VectorIntegrand& f, std::size_t size, double a, double b,
                                    std::span<const double> breaks, double tol, int max_depth) {
  if (!(b >= a)) {
    throw InvalidArgument("integrate_1d: upper limit below lower limit");
  }
  std::vector<double> cuts{a};
  for (double x : breaks) {
    if (x > a && x < b) {
      cuts.push_back(x);
    }
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());

  Accumulator total;
  total.value.assign(size, 0.0);
  std::vector<double> scratch;
  const double span_len = std::max(b - a, 1e-300);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    if (hi <= lo) {
      continue;
    }
    const double piece_tol = tol * (hi - lo) / span_len;
    std::vector<double> whole;
    const double whole_error = gauss_kronrod(f, size, lo, hi, whole, scratch);
    adapt(f, size, lo, hi, piece_tol, max_depth, std::move(whole), whole_error, total, scratch);
  }
  if (!total.converged && total.error > tol) {
    throw NumericalError("integrate_1d: error estimate above tolerance after max refinement");
  }
  return {std::move(total.value), total.error};
}

QuadratureResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                              std::span<const double> breaks, double tol, int max_depth) {
  const auto r = integrate_1d([&f](double x, std::span<double> out) { out[0] = f(x); }, 1, a, b, breaks, tol,
                              max_depth);
  return {r.value[0], r.error};
}

}  // namespace cpf
