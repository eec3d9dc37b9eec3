#include "cpf/integrate.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>

#include "cpf/quadrature.hpp"
#include "cpf/rng.hpp"

namespace cpf {

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) {
    v *= std::max(0.0, upper[k] - lower[k]);
  }
  return v;
}

bool Box::empty() const {
  for (std::size_t k = 0; k < dim(); ++k) {
    if (upper[k] < lower[k]) {
      return true;
    }
  }
  return false;
}

bool Box::contains(std::span<const double> v) const {
  for (std::size_t k = 0; k < dim(); ++k) {
    if (v[k] < lower[k] || v[k] > upper[k]) {
      return false;
    }
  }
  return true;
}

Box Box::clipped_above(std::span<const double> bound) const {
  Box out = *this;
  for (std::size_t k = 0; k < dim(); ++k) {
    out.upper[k] = std::min(out.upper[k], bound[k]);
  }
  return out;
}

namespace {

constexpr std::array<std::uint32_t, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                   23, 29, 31, 37, 41, 43, 47, 53};

class MidpointPass {
 public:
  MidpointPass(const Integrand& f, std::size_t size, const IntegrationRegion& region,
               int base_level, int max_depth, double linear_tol)
      : f_(f),
        size_(size),
        member_(region.member),
        base_level_(base_level),
        max_depth_(max_depth),
        linear_tol_(linear_tol),
        dim_(region.bounding.dim()),
        total_(size, 0.0),
        centre_value_(size),
        corner_value_(size),
        corner_mean_(size),
        point_(dim_),
        lo_(static_cast<std::size_t>(max_depth + 2), std::vector<double>(dim_)),
        hi_(static_cast<std::size_t>(max_depth + 2), std::vector<double>(dim_)) {}

  std::vector<double> run(const std::vector<WeightedBox>& pieces) {
    std::fill(total_.begin(), total_.end(), 0.0);
    for (const auto& piece : pieces) {
      if (piece.weight == 0.0 || piece.box.empty() || piece.box.volume() <= 0.0) {
        continue;
      }
      weight_ = piece.weight;
      lo_[0] = piece.box.lower;
      hi_[0] = piece.box.upper;
      cell(0);
    }
    return total_;
  }

 private:
  bool inside(std::span<const double> x) const { return !member_ || member_(x); }

  void cell(int depth) {
    const auto& lo = lo_[static_cast<std::size_t>(depth)];
    const auto& hi = hi_[static_cast<std::size_t>(depth)];
    if (depth < base_level_) {
      split(depth);
      return;
    }
    double volume = 1.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      point_[k] = 0.5 * (lo[k] + hi[k]);
      volume *= hi[k] - lo[k];
    }
    const bool centre_in = inside(point_);
    const std::size_t corners = std::size_t{1} << dim_;
    std::size_t in_count = centre_in ? 1 : 0;
    for (std::size_t mask = 0; mask < corners; ++mask) {
      corner(mask, lo, hi);
      in_count += inside(point_) ? 1 : 0;
    }
    const bool mixed = in_count != 0 && in_count != corners + 1;
    if (in_count == 0) {
      return;
    }
    if (mixed) {
      if (depth < max_depth_) {
        split(depth);
        return;
      }
      const double fraction = inside_fraction(depth, lo, hi);
      if (fraction == 0.0) {
        return;
      }
      centre(lo, hi);
      f_(point_, centre_value_);
      accumulate(volume * fraction);
      return;
    }
    // Fully inside: check the integrand is close to linear over the cell.
    std::fill(corner_mean_.begin(), corner_mean_.end(), 0.0);
    for (std::size_t mask = 0; mask < corners; ++mask) {
      corner(mask, lo, hi);
      f_(point_, corner_value_);
      for (std::size_t e = 0; e < size_; ++e) {
        corner_mean_[e] += corner_value_[e];
      }
    }
    centre(lo, hi);
    f_(point_, centre_value_);
    double deviation = 0.0;
    for (std::size_t e = 0; e < size_; ++e) {
      deviation = std::max(deviation,
                           std::fabs(corner_mean_[e] / static_cast<double>(corners) -
                                     centre_value_[e]));
    }
    if (deviation > linear_tol_ && depth < max_depth_) {
      split(depth);
      return;
    }
    accumulate(volume);
  }

  // Fraction of one jittered point per child sub-cell that lies inside. The
  // jitter is a hash of the cell position, so repeated runs agree exactly but
  // classification errors along straight boundaries do not line up.
  double inside_fraction(int depth, const std::vector<double>& lo, const std::vector<double>& hi) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(depth);
    for (std::size_t k = 0; k < dim_; ++k) {
      h = mix(h ^ std::bit_cast<std::uint64_t>(lo[k]));
    }
    const std::size_t children = std::size_t{1} << dim_;
    std::size_t count = 0;
    for (std::size_t mask = 0; mask < children; ++mask) {
      for (std::size_t k = 0; k < dim_; ++k) {
        h = mix(h);
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        const double offset = ((mask >> k) & 1U ? 1.0 : 0.0) + u;
        point_[k] = lo[k] + 0.5 * offset * (hi[k] - lo[k]);
      }
      count += inside(point_) ? 1 : 0;
    }
    return static_cast<double>(count) / static_cast<double>(children);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  void corner(std::size_t mask, const std::vector<double>& lo, const std::vector<double>& hi) {
    for (std::size_t k = 0; k < dim_; ++k) {
      point_[k] = (mask >> k) & 1U ? hi[k] : lo[k];
    }
  }

  void centre(const std::vector<double>& lo, const std::vector<double>& hi) {
    for (std::size_t k = 0; k < dim_; ++k) {
      point_[k] = 0.5 * (lo[k] + hi[k]);
    }
  }

  void accumulate(double volume) {
    const double scale = volume * weight_;
    for (std::size_t e = 0; e < size_; ++e) {
      total_[e] += scale * centre_value_[e];
    }
  }

  void split(int depth) {
    const auto d = static_cast<std::size_t>(depth);
    const std::size_t children = std::size_t{1} << dim_;
    for (std::size_t mask = 0; mask < children; ++mask) {
      for (std::size_t k = 0; k < dim_; ++k) {
        const double mid = 0.5 * (lo_[d][k] + hi_[d][k]);
        if ((mask >> k) & 1U) {
          lo_[d + 1][k] = mid;
          hi_[d + 1][k] = hi_[d][k];
        } else {
          lo_[d + 1][k] = lo_[d][k];
          hi_[d + 1][k] = mid;
        }
      }
      cell(depth + 1);
    }
  }

  const Integrand& f_;
  std::size_t size_;
  const std::function<bool(std::span<const double>)>& member_;
  int base_level_;
  int max_depth_;
  double linear_tol_;
  std::size_t dim_;
  double weight_ = 1.0;
  std::vector<double> total_;
  std::vector<double> centre_value_;
  std::vector<double> corner_value_;
  std::vector<double> corner_mean_;
  std::vector<double> point_;
  std::vector<std::vector<double>> lo_;
  std::vector<std::vector<double>> hi_;
};

Matrix to_matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t e = 0; e < flat.size(); ++e) {
    m.data()[e] = flat[e];
  }
  return m;
}

void quasi_random_estimate(const Integrand& f, std::size_t rows, std::size_t cols,
                           const IntegrationRegion& region, const IntegrationOptions& options,
                           IntegralEstimate& out) {
  const std::size_t size = rows * cols;
  const std::size_t dim = region.bounding.dim();
  const std::size_t total_dim = dim + region.aux_dims;
  const std::size_t shifts = std::max<std::size_t>(options.qmc_shifts, 2);
  const std::size_t per_shift = std::max<std::size_t>(options.qmc_points / shifts, 1);
  const double volume = region.bounding.volume();

  std::vector<double> unit(total_dim), shifted(total_dim), x(dim), value(size);
  std::vector<std::vector<double>> estimates(shifts, std::vector<double>(size, 0.0));
  for (std::size_t s = 0; s < shifts; ++s) {
    RngStream rng(options.qmc_seed, s, Purpose::qmc);
    std::vector<double> shift(total_dim);
    for (auto& c : shift) {
      c = rng.uniform();
    }
    auto& acc = estimates[s];
    for (std::size_t i = 0; i < per_shift; ++i) {
      halton_point(i + 1, unit);
      for (std::size_t k = 0; k < total_dim; ++k) {
        const double u = unit[k] + shift[k];
        shifted[k] = u >= 1.0 ? u - 1.0 : u;
      }
      for (std::size_t k = 0; k < dim; ++k) {
        x[k] = region.bounding.lower[k] +
               shifted[k] * (region.bounding.upper[k] - region.bounding.lower[k]);
      }
      if (region.member && !region.member(x)) {
        continue;
      }
      const std::span<const double> aux(shifted.data() + dim, region.aux_dims);
      const double w = region.qmc_weight ? region.qmc_weight(x, aux) : 1.0;
      if (w == 0.0) {
        continue;
      }
      f(x, value);
      for (std::size_t e = 0; e < size; ++e) {
        acc[e] += w * value[e];
      }
    }
    for (auto& e : acc) {
      e *= volume / static_cast<double>(per_shift);
    }
  }

  std::vector<double> mean(size, 0.0);
  for (const auto& est : estimates) {
    for (std::size_t e = 0; e < size; ++e) {
      mean[e] += est[e] / static_cast<double>(shifts);
    }
  }
  double worst_se = 0.0;
  for (std::size_t e = 0; e < size; ++e) {
    double ss = 0.0;
    for (const auto& est : estimates) {
      ss += (est[e] - mean[e]) * (est[e] - mean[e]);
    }
    const double se = std::sqrt(ss / static_cast<double>(shifts - 1) / static_cast<double>(shifts));
    worst_se = std::max(worst_se, se);
  }
  out.qmc_value = to_matrix(mean, rows, cols);
  out.qmc_error = worst_se;
}

std::span<const double> breaks_of(const IntegrationRegion& region, std::size_t coord) {
  if (coord < region.integrand_breaks.size()) {
    return region.integrand_breaks[coord];
  }
  return {};
}

// Sum over pieces of weight * int int_{x2 <= ceiling(x1)} f.
std::vector<double> nested_quadrature(const Integrand& f, std::size_t size, const IntegrationRegion& region,
                                      double& error) {
  std::vector<double> total(size, 0.0);
  error = 0.0;
  const double outer_tol = 1e-11;
  const double inner_tol = 1e-13;
  const auto inner_breaks = breaks_of(region, 1);
  std::vector<double> outer_breaks(region.ceiling_breaks.begin(), region.ceiling_breaks.end());
  const auto x1_breaks = breaks_of(region, 0);
  outer_breaks.insert(outer_breaks.end(), x1_breaks.begin(), x1_breaks.end());
  for (const auto& piece : region.pieces) {
    if (piece.weight == 0.0 || piece.box.empty() || piece.box.volume() <= 0.0) {
      continue;
    }
    const double y_lo = piece.box.lower[1];
    const double y_hi = piece.box.upper[1];
    const auto outer = integrate_1d(
        [&](double x1, std::span<double> out) {
          const double top = std::min(y_hi, region.ceiling(x1));
          if (!(top > y_lo)) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
          }
          std::array<double, 2> point{x1, 0.0};
          const auto inner = integrate_1d(
              [&](double x2, std::span<double> v) {
                point[1] = x2;
                f(point, v);
              },
              size, y_lo, top, inner_breaks, inner_tol);
          std::copy(inner.value.begin(), inner.value.end(), out.begin());
        },
        size, piece.box.lower[0], piece.box.upper[0], outer_breaks, outer_tol);
    for (std::size_t e = 0; e < size; ++e) {
      total[e] += piece.weight * outer.value[e];
    }
    error += std::fabs(piece.weight) * outer.error;
  }
  return total;
}

}  // namespace

void halton_point(std::uint64_t index, std::span<double> out) {
  if (out.size() > kPrimes.size()) {
    throw InvalidArgument("halton_point: dimension above 16 is not supported");
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::uint32_t base = kPrimes[k];
    const double inv = 1.0 / base;
    double factor = inv;
    double result = 0.0;
    for (std::uint64_t i = index; i > 0; i /= base) {
      result += static_cast<double>(i % base) * factor;
      factor *= inv;
    }
    out[k] = result;
  }
}

IntegralEstimate integrate_over_region(const Integrand& f, std::size_t rows, std::size_t cols,
                                       const IntegrationRegion& region,
                                       const IntegrationOptions& options) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("integrate_over_region: empty integrand shape");
  }
  if (!(options.tol > 0.0) || options.base_level < 0 || options.max_refinements < 1) {
    throw InvalidArgument("integrate_over_region: invalid options");
  }
  const std::size_t dim = region.bounding.dim();
  if (dim == 0 || dim > 8) {
    throw InvalidArgument("integrate_over_region: dimension must be in [1, 8]");
  }
  for (const auto& piece : region.pieces) {
    if (piece.box.dim() != dim) {
      throw InvalidArgument("integrate_over_region: piece dimension mismatch");
    }
  }
  const std::size_t size = rows * cols;
  IntegralEstimate out;
  if (region.ceiling) {
    if (dim != 2) {
      throw InvalidArgument("integrate_over_region: graph regions must be two-dimensional");
    }
    double error = 0.0;
    out.value = to_matrix(nested_quadrature(f, size, region, error), rows, cols);
    out.error = error;
    if (options.cross_check) {
      quasi_random_estimate(f, rows, cols, region, options, out);
    }
    return out;
  }
  double weighted_volume = 0.0;
  for (const auto& piece : region.pieces) {
    if (!piece.box.empty()) {
      weighted_volume += std::fabs(piece.weight) * piece.box.volume();
    }
  }
  const double linear_tol = options.tol / std::max(weighted_volume, 1e-300);

  auto run = [&](int max_depth) {
    MidpointPass pass(f, size, region, options.base_level, max_depth, linear_tol);
    return pass.run(region.pieces);
  };
  std::vector<double> previous = run(options.base_level);
  // Centre classification of boundary cells can repeat a value exactly at two
  // consecutive depths, so convergence needs three depths in agreement.
  bool converged = false;
  double diff = 0.0;
  double prior_diff = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= options.max_refinements; ++k) {
    std::vector<double> current = run(options.base_level + k);
    const double last = diff;
    diff = 0.0;
    for (std::size_t e = 0; e < size; ++e) {
      diff = std::max(diff, std::fabs(current[e] - previous[e]));
    }
    prior_diff = k >= 2 ? last : prior_diff;
    previous = std::move(current);
    out.levels = k;
    if (k >= 2 && std::max(diff, prior_diff) < options.tol) {
      converged = true;
      break;
    }
  }
  diff = std::max(diff, prior_diff);
  if (!converged) {
    throw NumericalError("integrate_over_region: successive refinements still differ by " +
                         std::to_string(diff) + " after max refinement");
  }
  out.value = to_matrix(previous, rows, cols);
  out.error = diff;
  if (options.cross_check) {
    quasi_random_estimate(f, rows, cols, region, options, out);
  }
  return out;
}

}  // namespace cpf
