#include "cpf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "cpf/quadrature.hpp"

namespace cpf {
namespace {

constexpr double kAtomFloor = 1e-12;
constexpr int kPanelsPerSegment = 256;

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InvalidArgument(message);
  }
}

void require_unit(double t, const char* what) {
  require(t >= 0.0 && t <= 1.0, std::string(what) + ": argument must lie in [0, 1]");
}

const UnderCurve& under_curve_of(const ModelSpec& spec, const char* what) {
  const UnderCurve* uc = spec.domain.under_curve();
  require(uc != nullptr, std::string(what) + ": needs an under_curve domain");
  return *uc;
}

double rate_integral(const UnderCurve& uc, double a, double b) {
  if (b <= a) {
    return 0.0;
  }
  const auto breaks = uc.rate.breakpoints();
  return integrate_1d([&uc](double s) { return uc.rate(s); }, a, b, breaks,
                      1e-13 * (1.0 + uc.rate_max * (b - a)))
      .value;
}

// Appends [a, b] to a sorted interval list, merging with the last one if they touch.
void append_interval(std::vector<Interval>& out, double a, double b) {
  if (b <= a) {
    return;
  }
  if (!out.empty() && out.back().upper >= a) {
    out.back().upper = std::max(out.back().upper, b);
    return;
  }
  out.push_back({a, b});
}

double total_length(const std::vector<Interval>& xs) {
  double total = 0.0;
  for (const auto& x : xs) {
    total += x.upper - x.lower;
  }
  return total;
}

// Pieces [a, b] x [0, rate_max] for each interval, clipped to x1 <= cap.
void add_strips(std::vector<WeightedBox>& pieces, const UnderCurve& uc,
                const std::vector<Interval>& xs, double weight, double cap) {
  if (weight == 0.0) {
    return;
  }
  for (const auto& x : xs) {
    const double hi = std::min(x.upper, cap);
    if (hi > x.lower) {
      pieces.push_back({Box{{x.lower, 0.0}, {hi, uc.rate_max}}, weight});
    }
  }
}

std::vector<Interval> set_difference(const std::vector<Interval>& outer, const std::vector<Interval>& inner) {
  std::vector<Interval> out;
  for (const auto& o : outer) {
    double cursor = o.lower;
    for (const auto& i : inner) {
      if (i.upper <= cursor || i.lower >= o.upper) {
        continue;
      }
      append_interval(out, cursor, std::min(i.lower, o.upper));
      cursor = std::max(cursor, i.upper);
    }
    append_interval(out, cursor, o.upper);
  }
  return out;
}

// Weighted strips describing the set of locations whose randomized intensity
// rank is at most t, and the matching point weight for the quasi-random route.
struct IntensityRegion {
  IntensityLevel level;
  double t = 0.0;
  std::vector<Interval> strictly_below;
  std::vector<Interval> at_level;
  double tie_weight = 0.0;
};

IntensityRegion intensity_region(const UnderCurve& uc, double t) {
  IntensityRegion r;
  r.t = t;
  r.level = intensity_level(uc, t);
  if (t <= 0.0) {
    return r;
  }
  if (r.level.atom > kAtomFloor) {
    r.strictly_below = sublevel_set(uc, r.level.level, true);
    r.at_level = set_difference(sublevel_set(uc, r.level.level, false), r.strictly_below);
    r.tie_weight = intensity_rank_weight(r.level, t, r.level.level);
  } else {
    r.strictly_below = sublevel_set(uc, r.level.level, false);
  }
  return r;
}

double intensity_point_weight(const IntensityRegion& r, double rate_value, double aux) {
  if (r.t <= 0.0) {
    return 0.0;
  }
  if (r.level.atom > kAtomFloor) {
    if (rate_value < r.level.level) return 1.0;
    if (rate_value == r.level.level) return r.level.below + aux * r.level.atom <= r.t ? 1.0 : 0.0;
    return 0.0;
  }
  return rate_value <= r.level.level ? 1.0 : 0.0;
}

IntegrationRegion domain_region(const DomainRegion& domain) {
  IntegrationRegion region;
  region.bounding = domain.bounding_box();
  if (domain.kind() != DomainKind::box) {
    region.member = [&domain](std::span<const double> v) { return domain.contains_unchecked(v); };
  }
  if (const UnderCurve* uc = domain.under_curve()) {
    region.ceiling = [uc](double x1) { return uc->rate(x1); };
    region.ceiling_breaks = uc->rate.breakpoints();
  }
  return region;
}

IntegrationRegion base_region(const ModelSpec& spec) {
  IntegrationRegion region = domain_region(spec.domain);
  for (std::size_t k = 0; k < spec.domain.dim(); ++k) {
    auto breaks = spec.marks.mean().breakpoints(k);
    const auto cov_breaks = spec.marks.cov().breakpoints(k);
    breaks.insert(breaks.end(), cov_breaks.begin(), cov_breaks.end());
    region.integrand_breaks.push_back(std::move(breaks));
  }
  return region;
}

// Integrand (1/mu) sigma^2(v), d2 x d2.
Integrand scaled_cov_integrand(const ModelSpec& spec) {
  const double inv_mu = 1.0 / spec.domain.measure();
  const std::size_t n = spec.marks.dim() * spec.marks.dim();
  return [&spec, inv_mu, n](std::span<const double> v, std::span<double> out) {
    spec.marks.cov().evaluate(v, out);
    for (std::size_t e = 0; e < n; ++e) {
      out[e] *= inv_mu;
    }
  };
}

OracleValue from_estimate(const IntegralEstimate& est) {
  return {est.value, est.error, est.qmc_value, est.qmc_error};
}

IntegralEstimate integrate_mean_below(const ModelSpec& spec, std::span<const double> u,
                                      const IntegrationOptions& options) {
  const std::size_t d1 = spec.domain.dim();
  require(u.size() == d1, "centering: corner dimension mismatch");
  const std::size_t d2 = spec.marks.dim();
  const double inv_mu = 1.0 / spec.domain.measure();
  IntegrationRegion region = base_region(spec);
  region.pieces = {WeightedBox{region.bounding.clipped_above(u), 1.0}};
  std::vector<double> corner(u.begin(), u.end());
  region.qmc_weight = [corner](std::span<const double> v, std::span<const double>) {
    for (std::size_t k = 0; k < corner.size(); ++k) {
      if (v[k] > corner[k]) return 0.0;
    }
    return 1.0;
  };
  return integrate_over_region(
      [&spec, inv_mu, d2](std::span<const double> v, std::span<double> out) {
        spec.marks.mean().evaluate(v, out);
        for (std::size_t r = 0; r < d2; ++r) {
          out[r] *= inv_mu;
        }
      },
      d2, 1, region, options);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Target target) {
  switch (target) {
    case Target::theorem1:
      return "theorem1";
    case Target::theorem2:
      return "theorem2";
    case Target::theorem3:
      return "theorem3";
  }
  return "unknown";
}

std::string to_string(OracleMode mode) {
  return mode == OracleMode::paper_literal ? "paper_literal" : "quantile_normalized";
}

Target parse_target(const std::string& name) {
  if (name == "theorem1") return Target::theorem1;
  if (name == "theorem2") return Target::theorem2;
  if (name == "theorem3") return Target::theorem3;
  throw InvalidArgument("unknown target '" + name + "' (expected theorem1, theorem2 or theorem3)");
}

OracleMode parse_mode(const std::string& name) {
  if (name == "paper_literal") return OracleMode::paper_literal;
  if (name == "quantile_normalized") return OracleMode::quantile_normalized;
  throw InvalidArgument("unknown mode '" + name + "' (expected paper_literal or quantile_normalized)");
}

std::vector<GridPoint> theorem1_grid(std::span<const std::vector<double>> corners) {
  std::vector<GridPoint> out;
  for (const auto& u : corners) {
    out.push_back({0, u});
  }
  return out;
}

std::vector<GridPoint> theorem2_grid(std::span<const std::size_t> coords, std::span<const double> ts) {
  std::vector<GridPoint> out;
  for (std::size_t k : coords) {
    for (double t : ts) {
      out.push_back({k, {t}});
    }
  }
  return out;
}

std::vector<GridPoint> theorem3_grid(std::span<const double> ts) {
  std::vector<GridPoint> out;
  for (std::size_t s = 0; s < 2; ++s) {
    for (double t : ts) {
      out.push_back({s, {t}});
    }
  }
  return out;
}

std::vector<std::vector<double>> product_corners(std::span<const double> values, std::size_t dim) {
  require(dim > 0 && !values.empty(), "product_corners: need values and a positive dimension");
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> idx(dim, 0);
  for (;;) {
    std::vector<double> u(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      u[k] = values[idx[k]];
    }
    out.push_back(std::move(u));
    std::size_t k = dim;
    while (k > 0) {
      --k;
      if (++idx[k] < values.size()) {
        break;
      }
      idx[k] = 0;
      if (k == 0) {
        return out;
      }
    }
  }
}

// ---------------------------------------------------------------------------

double cumulative_rate(const UnderCurve& uc, double s) {
  return rate_integral(uc, 0.0, std::clamp(s, 0.0, uc.horizon));
}

double time_quantile(const UnderCurve& uc, double t) {
  require_unit(t, "time_quantile");
  if (t == 0.0) return 0.0;
  if (t == 1.0) return uc.horizon;
  const double target = t * cumulative_rate(uc, uc.horizon);
  double lo = 0.0;
  double hi = uc.horizon;
  while (hi - lo > 1e-12 * uc.horizon) {
    const double mid = 0.5 * (lo + hi);
    if (cumulative_rate(uc, mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<Interval> sublevel_set(const UnderCurve& uc, double level, bool strict) {
  auto inside = [level, strict](double value) { return strict ? value < level : value <= level; };
  std::vector<Interval> out;
  if (const auto* pw = std::get_if<PiecewiseConstantFn>(&uc.rate.family())) {
    double start = 0.0;
    for (std::size_t k = 0; k < pw->values.size(); ++k) {
      const double stop = k < pw->breaks.size() ? pw->breaks[k] : uc.horizon;
      const double a = std::clamp(start, 0.0, uc.horizon);
      const double b = std::clamp(stop, 0.0, uc.horizon);
      if (b > a && inside(pw->values[k])) {
        append_interval(out, a, b);
      }
      start = stop;
    }
    return out;
  }
  // Continuous families: scan panels, bisect each change of the predicate.
  const double h = uc.horizon / kPanelsPerSegment;
  double a = 0.0;
  bool in_a = inside(uc.rate(a));
  double run_start = in_a ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  for (int p = 1; p <= kPanelsPerSegment; ++p) {
    const double b = p == kPanelsPerSegment ? uc.horizon : h * p;
    const bool in_b = inside(uc.rate(b));
    if (in_b != in_a) {
      double lo = a;
      double hi = b;
      for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (inside(uc.rate(mid)) == in_a ? lo : hi) = mid;
      }
      const double crossing = 0.5 * (lo + hi);
      if (in_a) {
        append_interval(out, run_start, crossing);
      } else {
        run_start = crossing;
      }
    }
    a = b;
    in_a = in_b;
  }
  if (in_a) {
    append_interval(out, run_start, uc.horizon);
  }
  return out;
}

double intensity_cdf(const UnderCurve& uc, double level, bool strict) {
  const double total = cumulative_rate(uc, uc.horizon);
  double mass = 0.0;
  for (const auto& x : sublevel_set(uc, level, strict)) {
    mass += rate_integral(uc, x.lower, x.upper);
  }
  return std::clamp(mass / total, 0.0, 1.0);
}

IntensityLevel intensity_level(const UnderCurve& uc, double t) {
  require_unit(t, "intensity_threshold");
  const double floor_value = uc.rate.lower_bound(0.0, uc.horizon);
  if (t == 0.0) {
    return {floor_value, 0.0, 0.0};
  }
  double lo = floor_value - 1e-9 * (1.0 + std::fabs(floor_value));
  double hi = uc.rate_max;
  while (hi - lo > 1e-10 * (1.0 + std::fabs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (intensity_cdf(uc, mid) >= t) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  // A flat piece of the rate with its value in (lo, hi] is an atom; snap to it.
  const auto band = set_difference(sublevel_set(uc, hi, false), sublevel_set(uc, lo, false));
  if (total_length(band) > 1e-12 * uc.horizon && uc.rate.has_flat_pieces(0.0, uc.horizon)) {
    const auto widest = *std::max_element(band.begin(), band.end(), [](const Interval& x, const Interval& y) {
      return x.upper - x.lower < y.upper - y.lower;
    });
    const double atom_value = uc.rate(0.5 * (widest.lower + widest.upper));
    const double below = intensity_cdf(uc, atom_value, true);
    const double at_or_below = intensity_cdf(uc, atom_value, false);
    if (at_or_below - below > kAtomFloor) {
      return {atom_value, below, at_or_below - below};
    }
  }
  return {hi, intensity_cdf(uc, hi, false), 0.0};
}

double intensity_threshold(const UnderCurve& uc, double t) { return intensity_level(uc, t).level; }

double intensity_rank_weight(const IntensityLevel& level, double t, double rate_value) {
  if (t <= 0.0) return 0.0;
  if (rate_value < level.level) return 1.0;
  if (rate_value > level.level) return 0.0;
  if (level.atom <= kAtomFloor) return 1.0;
  return std::clamp((t - level.below) / level.atom, 0.0, 1.0);
}

bool rate_has_atoms(const UnderCurve& uc) { return uc.rate.has_flat_pieces(0.0, uc.horizon); }

double marginal_quantile(const DomainRegion& domain, std::size_t coord, double t,
                         const IntegrationOptions& options) {
  require_unit(t, "marginal_quantile");
  require(coord < domain.dim(), "marginal_quantile: coordinate out of range");
  const Box& box = domain.bounding_box();
  if (domain.kind() == DomainKind::box) {
    return box.lower[coord] + t * (box.upper[coord] - box.lower[coord]);
  }
  if (domain.kind() == DomainKind::under_curve && coord == 0) {
    return time_quantile(*domain.under_curve(), t);
  }
  if (t == 0.0) return box.lower[coord];
  if (t == 1.0) return box.upper[coord];
  IntegrationOptions local = options;
  local.cross_check = false;
  local.tol = options.tol * domain.measure();
  local.max_refinements = std::max(options.max_refinements, 12);
  auto cdf = [&](double s) {
    IntegrationRegion region = domain_region(domain);
    Box clipped = box;
    clipped.upper[coord] = s;
    region.pieces = {WeightedBox{clipped, 1.0}};
    const auto est = integrate_over_region(
        [](std::span<const double>, std::span<double> out) { out[0] = 1.0; }, 1, 1, region, local);
    return est.value(0, 0) / domain.measure();
  };
  double lo = box.lower[coord];
  double hi = box.upper[coord];
  while (hi - lo > 1e-7 * (box.upper[coord] - box.lower[coord])) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= t) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// ---------------------------------------------------------------------------

Vector centering(const ModelSpec& spec, std::span<const double> u, const IntegrationOptions& options) {
  if (spec.marks.mean().is_zero()) {
    require(u.size() == spec.domain.dim(), "centering: corner dimension mismatch");
    return Vector::Zero(static_cast<Eigen::Index>(spec.marks.dim()));
  }
  IntegrationOptions local = options;
  local.cross_check = false;
  return integrate_mean_below(spec, u, local).value.col(0);
}

OracleValue cov_theorem1(const ModelSpec& spec, std::span<const double> u1, std::span<const double> u2,
                         OracleMode mode, const IntegrationOptions& options) {
  const std::size_t d1 = spec.domain.dim();
  require(u1.size() == d1 && u2.size() == d1, "cov_theorem1: corner dimension mismatch");
  const std::size_t d2 = spec.marks.dim();
  const auto n = static_cast<Eigen::Index>(d2);
  const double inv_mu = 1.0 / spec.domain.measure();

  std::vector<double> low(d1);
  for (std::size_t k = 0; k < d1; ++k) {
    low[k] = std::min(u1[k], u2[k]);
  }
  IntegrationRegion region = base_region(spec);
  region.pieces = {WeightedBox{region.bounding.clipped_above(low), 1.0}};
  region.qmc_weight = [low](std::span<const double> v, std::span<const double>) {
    for (std::size_t k = 0; k < low.size(); ++k) {
      if (v[k] > low[k]) return 0.0;
    }
    return 1.0;
  };
  // Columns 0..d2-1: (sigma^2 + m m^T) / mu; column d2: m / mu.
  const auto joint = integrate_over_region(
      [&spec, inv_mu, d2](std::span<const double> v, std::span<double> out) {
        const std::size_t square = d2 * d2;
        spec.marks.cov().evaluate(v, out.first(square));
        spec.marks.mean().evaluate(v, out.subspan(square, d2));
        for (std::size_t c = 0; c < d2; ++c) {
          for (std::size_t r = 0; r < d2; ++r) {
            out[c * d2 + r] = inv_mu * (out[c * d2 + r] + out[square + r] * out[square + c]);
          }
        }
        for (std::size_t r = 0; r < d2; ++r) {
          out[square + r] *= inv_mu;
        }
      },
      d2, d2 + 1, region, options);

  OracleValue out;
  const Matrix second = joint.value.leftCols(n);
  const Matrix second_qmc = joint.qmc_value.leftCols(n);
  if (mode == OracleMode::paper_literal) {
    const Vector m = joint.value.col(n);
    const Vector mq = joint.qmc_value.col(n);
    out.value = second - m * m.transpose();
    out.error = joint.error * (1.0 + 2.0 * m.cwiseAbs().maxCoeff());
    out.cross_check = second_qmc - mq * mq.transpose();
    out.cross_check_error = joint.qmc_error * (1.0 + 2.0 * mq.cwiseAbs().maxCoeff());
    return out;
  }
  if (spec.marks.mean().is_zero()) {
    return {second, joint.error, second_qmc, joint.qmc_error};
  }
  const auto c1 = integrate_mean_below(spec, u1, options);
  const auto c2 = integrate_mean_below(spec, u2, options);
  const Vector m1 = c1.value.col(0);
  const Vector m2 = c2.value.col(0);
  const Vector q1 = c1.qmc_value.col(0);
  const Vector q2 = c2.qmc_value.col(0);
  out.value = second - m1 * m2.transpose();
  out.error = joint.error + c1.error * m2.cwiseAbs().maxCoeff() + c2.error * m1.cwiseAbs().maxCoeff();
  out.cross_check = second_qmc - q1 * q2.transpose();
  out.cross_check_error =
      joint.qmc_error + c1.qmc_error * q2.cwiseAbs().maxCoeff() + c2.qmc_error * q1.cwiseAbs().maxCoeff();
  return out;
}

namespace {

// Covariance of the per-coordinate processes for raw thresholds a (coordinate
// i) and b (coordinate j).
OracleValue cov_theorem2_thresholds(const ModelSpec& spec, std::size_t i, double a, std::size_t j, double b,
                                    const IntegrationOptions& options) {
  const std::size_t d2 = spec.marks.dim();
  IntegrationRegion region = base_region(spec);
  Box clipped = region.bounding;
  clipped.upper[i] = std::min(clipped.upper[i], a);
  clipped.upper[j] = std::min(clipped.upper[j], b);
  region.pieces = {WeightedBox{clipped, 1.0}};
  region.qmc_weight = [i, j, a, b](std::span<const double> v, std::span<const double>) {
    return v[i] <= a && v[j] <= b ? 1.0 : 0.0;
  };
  return from_estimate(integrate_over_region(scaled_cov_integrand(spec), d2, d2, region, options));
}

void check_theorem2(const ModelSpec& spec, std::size_t i, double t1, std::size_t j, double t2) {
  require(spec.marks.mean().is_zero(), "cov_theorem2: requires a zero mark mean");
  require(i < spec.domain.dim() && j < spec.domain.dim(), "cov_theorem2: coordinate out of range");
  require_unit(t1, "cov_theorem2");
  require_unit(t2, "cov_theorem2");
}

double theorem2_threshold(const ModelSpec& spec, std::size_t coord, double t, OracleMode mode,
                          const IntegrationOptions& options) {
  return mode == OracleMode::quantile_normalized ? marginal_quantile(spec.domain, coord, t, options) : t;
}

}  // namespace

OracleValue cov_theorem2(const ModelSpec& spec, std::size_t i, double t1, std::size_t j, double t2,
                         OracleMode mode, const IntegrationOptions& options) {
  check_theorem2(spec, i, t1, j, t2);
  return cov_theorem2_thresholds(spec, i, theorem2_threshold(spec, i, t1, mode, options), j,
                                 theorem2_threshold(spec, j, t2, mode, options), options);
}

OracleValue cov_theorem3(const ModelSpec& spec, int a, int b, double t1, double t2, OracleMode mode,
                         const IntegrationOptions& options) {
  require(spec.supports_time_intensity(),
          "cov_theorem3: needs an under_curve domain and a mark mean constant in x2");
  require((a == 1 || a == 2) && (b == 1 || b == 2), "cov_theorem3: block indices must be 1 or 2");
  const UnderCurve& uc = under_curve_of(spec, "cov_theorem3");
  if (a == 2 && b == 1) {
    OracleValue swapped = cov_theorem3(spec, 1, 2, t2, t1, mode, options);
    swapped.value.transposeInPlace();
    swapped.cross_check.transposeInPlace();
    return swapped;
  }
  const std::size_t d2 = spec.marks.dim();
  IntegrationRegion region = base_region(spec);

  if (mode == OracleMode::paper_literal) {
    require(t1 >= 0.0 && t1 <= uc.horizon && t2 >= 0.0 && t2 <= uc.horizon,
            "cov_theorem3: paper_literal arguments are times in [0, T]");
    const UnderCurve* ucp = &uc;
    if (a == 1 && b == 1) {
      const double cap = std::min(t1, t2);
      add_strips(region.pieces, uc, {{0.0, uc.horizon}}, 1.0, cap);
      region.qmc_weight = [cap](std::span<const double> x, std::span<const double>) {
        return x[0] <= cap ? 1.0 : 0.0;
      };
    } else if (a == 1 && b == 2) {
      const double level = uc.rate(t2);
      add_strips(region.pieces, uc, sublevel_set(uc, level, false), 1.0, t1);
      region.qmc_weight = [ucp, level, t1](std::span<const double> x, std::span<const double>) {
        return x[0] <= t1 && ucp->rate(x[0]) <= level ? 1.0 : 0.0;
      };
    } else {
      const double level = std::min(uc.rate(t1), uc.rate(t2));
      add_strips(region.pieces, uc, sublevel_set(uc, level, false), 1.0, uc.horizon);
      region.qmc_weight = [ucp, level](std::span<const double> x, std::span<const double>) {
        return ucp->rate(x[0]) <= level ? 1.0 : 0.0;
      };
    }
    return from_estimate(integrate_over_region(scaled_cov_integrand(spec), d2, d2, region, options));
  }

  require_unit(t1, "cov_theorem3");
  require_unit(t2, "cov_theorem3");
  const UnderCurve* ucp = &uc;
  if (a == 1 && b == 1) {
    const double cap = time_quantile(uc, std::min(t1, t2));
    add_strips(region.pieces, uc, {{0.0, uc.horizon}}, 1.0, cap);
    region.qmc_weight = [cap](std::span<const double> x, std::span<const double>) {
      return x[0] <= cap ? 1.0 : 0.0;
    };
  } else {
    const bool cross = a == 1;
    const double cap = cross ? time_quantile(uc, t1) : uc.horizon;
    const auto rank = std::make_shared<IntensityRegion>(intensity_region(uc, cross ? t2 : std::min(t1, t2)));
    add_strips(region.pieces, uc, rank->strictly_below, 1.0, cap);
    add_strips(region.pieces, uc, rank->at_level, rank->tie_weight, cap);
    region.aux_dims = 1;
    region.qmc_weight = [ucp, rank, cap](std::span<const double> x, std::span<const double> aux) {
      if (x[0] > cap) return 0.0;
      return intensity_point_weight(*rank, ucp->rate(x[0]), aux[0]);
    };
  }
  return from_estimate(integrate_over_region(scaled_cov_integrand(spec), d2, d2, region, options));
}

// ---------------------------------------------------------------------------

Matrix CovarianceBlock::gram() const {
  const auto n = static_cast<Eigen::Index>(size());
  const auto d = static_cast<Eigen::Index>(mark_dim);
  Matrix g(n * d, n * d);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      g.block(a * d, b * d, d, d) = at(static_cast<std::size_t>(a), static_cast<std::size_t>(b)).value;
    }
  }
  return g;
}

double CovarianceBlock::min_eigenvalue() const {
  const Matrix g = gram();
  const Matrix sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double CovarianceBlock::max_cross_check_ratio() const {
  double worst = 0.0;
  for (const auto& e : entries) {
    const double diff = (e.value - e.cross_check).cwiseAbs().maxCoeff();
    const double scale = e.error + e.cross_check_error;
    if (diff == 0.0) continue;
    worst = std::max(worst, scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity());
  }
  return worst;
}

CovarianceBlock oracle_block(const ModelSpec& spec, Target target, std::span<const GridPoint> points,
                             OracleMode mode, const IntegrationOptions& options) {
  CovarianceBlock block;
  block.target = target;
  block.mode = mode;
  block.mark_dim = spec.marks.dim();
  block.points.assign(points.begin(), points.end());
  block.options = options;
  const std::size_t n = points.size();
  require(n > 0, "oracle_block: empty grid");
  block.entries.resize(n * n);

  if (target == Target::theorem3 && mode == OracleMode::paper_literal) {
    const UnderCurve& uc = under_curve_of(spec, "oracle_block");
    if (rate_has_atoms(uc)) {
      block.warnings.push_back(
          "paper_literal regions assume a continuous distribution of the rate at a uniform "
          "point; this rate has flat pieces, so ties make the intensity blocks unreliable");
    }
  }
  for (const auto& p : points) {
    switch (target) {
      case Target::theorem1:
        require(p.coords.size() == spec.domain.dim(), "oracle_block: corner dimension mismatch");
        break;
      case Target::theorem2:
        require(p.coords.size() == 1 && p.series < spec.domain.dim(), "oracle_block: invalid theorem2 grid point");
        break;
      case Target::theorem3:
        require(p.coords.size() == 1 && p.series < 2, "oracle_block: invalid theorem3 grid point");
        break;
    }
  }

  std::vector<double> thresholds(n, 0.0);
  if (target == Target::theorem2) {
    for (std::size_t a = 0; a < n; ++a) {
      check_theorem2(spec, points[a].series, points[a].coords[0], points[a].series, points[a].coords[0]);
      thresholds[a] = theorem2_threshold(spec, points[a].series, points[a].coords[0], mode, options);
    }
  }

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const GridPoint& pa = points[a];
      const GridPoint& pb = points[b];
      OracleValue v;
      switch (target) {
        case Target::theorem1:
          v = cov_theorem1(spec, pa.coords, pb.coords, mode, options);
          break;
        case Target::theorem2:
          v = cov_theorem2_thresholds(spec, pa.series, thresholds[a], pb.series, thresholds[b], options);
          break;
        case Target::theorem3:
          v = cov_theorem3(spec, static_cast<int>(pa.series) + 1, static_cast<int>(pb.series) + 1,
                           pa.coords[0], pb.coords[0], mode, options);
          break;
      }
      block.at(a, b) = v;
      if (b != a) {
        OracleValue t = v;
        t.value.transposeInPlace();
        t.cross_check.transposeInPlace();
        block.at(b, a) = std::move(t);
      }
    }
  }
  return block;
}

}  // namespace cpf
