#include "cpf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "cpf/ordering.hpp"

namespace cpf {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InvalidArgument(message);
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Runs body(i) for i in [0, n) on up to `threads` threads. The first
// exception (lowest index) is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body body) {
  if (threads == 0) {
    threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&](std::size_t first) {
    for (std::size_t i = first; i < n; i += threads) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(worker, t);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

std::vector<std::size_t> used_indices(const ReplicationBatch& batch) {
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < batch.replications(); ++r) {
    if (!batch.degenerate[r]) {
      idx.push_back(r);
    }
  }
  return idx;
}

}  // namespace

std::size_t ReplicationBatch::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), char{1}));
}

Vector replicate_statistic(const ModelSpec& spec, Target target, std::span<const GridPoint> points,
                           std::span<const Vector> centerings, std::uint64_t seed, std::uint64_t rep,
                           FieldRoute route, bool* degenerate) {
  const std::size_t d2 = spec.marks.dim();
  const auto d = static_cast<Eigen::Index>(d2);
  const MarkedSample sample = sample_field(spec, seed, rep, route);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(points.size() * d2));
  bool empty = sample.count() == 0;

  switch (target) {
    case Target::theorem1: {
      std::vector<std::vector<double>> corners;
      for (const auto& p : points) {
        corners.push_back(p.coords);
      }
      const auto field = evaluate_q_field(sample, corners, centerings);
      for (std::size_t a = 0; a < points.size(); ++a) {
        out.segment(static_cast<Eigen::Index>(a) * d, d) = field.values[a];
      }
      empty = field.degenerate;
      break;
    }
    case Target::theorem2:
    case Target::theorem3: {
      std::vector<std::size_t> series;
      std::vector<double> grid;
      for (const auto& p : points) {
        series.push_back(p.series);
        grid.push_back(p.coords.at(0));
      }
      std::sort(series.begin(), series.end());
      series.erase(std::unique(series.begin(), series.end()), series.end());
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
      RngStream ties(seed, rep, Purpose::ties);
      PartialSumPath path;
      if (target == Target::theorem3) {
        series = {0, 1};
        path = theorem3_process(sample, spec, grid, ties);
      } else {
        std::vector<OrderingKey> keys;
        for (std::size_t s : series) {
          keys.push_back(OrderingKey::coordinate(s));
        }
        path = concomitant_partial_sums(sample, spec, keys, grid, Centering::none, ties);
      }
      for (std::size_t a = 0; a < points.size(); ++a) {
        const auto g = static_cast<std::size_t>(
            std::lower_bound(grid.begin(), grid.end(), points[a].coords[0]) - grid.begin());
        const auto s = static_cast<Eigen::Index>(
            std::lower_bound(series.begin(), series.end(), points[a].series) - series.begin());
        out.segment(static_cast<Eigen::Index>(a) * d, d) = path.values[g].row(s).transpose();
      }
      empty = path.degenerate;
      break;
    }
  }
  if (degenerate != nullptr) {
    *degenerate = empty;
  }
  return out;
}

ReplicationBatch run_replications(const ModelSpec& spec, Target target,
                                  std::span<const GridPoint> points, std::size_t replications,
                                  std::uint64_t seed, const ReplicationOptions& options) {
  require(replications >= 2, "run_replications: need at least 2 replications");
  require(!points.empty(), "run_replications: empty grid");
  if (target == Target::theorem2) {
    require(spec.marks.mean().is_zero(), "run_replications: the per-coordinate process needs a zero mark mean");
  }
  if (target == Target::theorem3) {
    require(spec.supports_time_intensity(),
            "run_replications: the dual-ordering process needs an under_curve domain and a mark mean "
            "constant in x2");
  }
  ReplicationBatch batch;
  batch.target = target;
  batch.points.assign(points.begin(), points.end());
  batch.mark_dim = spec.marks.dim();
  batch.seed = seed;
  batch.intensity = spec.intensity;
  batch.stats.resize(replications);
  batch.degenerate.assign(replications, 0);

  std::vector<Vector> centerings;
  if (target == Target::theorem1) {
    for (const auto& p : points) {
      centerings.push_back(centering(spec, p.coords, options.integration));
    }
  }
  parallel_for(replications, options.threads, [&](std::size_t r) {
    bool empty = false;
    batch.stats[r] =
        replicate_statistic(spec, target, points, centerings, seed, r, options.route, &empty);
    batch.degenerate[r] = empty ? 1 : 0;
  });
  return batch;
}

Matrix empirical_covariance(const ReplicationBatch& batch, std::size_t a, std::size_t b) {
  require(batch.replications() >= 2, "empirical_covariance: need at least 2 replications");
  require(a < batch.points.size() && b < batch.points.size(), "empirical_covariance: grid index out of range");
  const auto idx = used_indices(batch);
  if (idx.size() < 2) {
    throw InvalidArgument("empirical_covariance: fewer than 2 non-degenerate replications");
  }
  const auto d = static_cast<Eigen::Index>(batch.mark_dim);
  Vector mean_a = Vector::Zero(d);
  Vector mean_b = Vector::Zero(d);
  for (std::size_t r : idx) {
    mean_a += batch.stats[r].segment(static_cast<Eigen::Index>(a) * d, d);
    mean_b += batch.stats[r].segment(static_cast<Eigen::Index>(b) * d, d);
  }
  const auto n = static_cast<double>(idx.size());
  mean_a /= n;
  mean_b /= n;
  Matrix acc = Matrix::Zero(d, d);
  for (std::size_t r : idx) {
    const Vector xa = batch.stats[r].segment(static_cast<Eigen::Index>(a) * d, d) - mean_a;
    const Vector xb = batch.stats[r].segment(static_cast<Eigen::Index>(b) * d, d) - mean_b;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        acc(i, j) += xa(i) * xb(j);
      }
    }
  }
  return acc / (n - 1.0);
}

EmpiricalCovariance estimate_covariance(const ReplicationBatch& batch) {
  require(batch.replications() >= 2, "estimate_covariance: need at least 2 replications");
  const auto idx = used_indices(batch);
  if (idx.size() < 2) {
    throw InvalidArgument("estimate_covariance: fewer than 2 non-degenerate replications");
  }
  const Eigen::Index m = batch.stats.front().size();
  const auto n = static_cast<double>(idx.size());
  Vector mean = Vector::Zero(m);
  for (std::size_t r : idx) {
    mean += batch.stats[r];
  }
  mean /= n;
  Matrix sum = Matrix::Zero(m, m);
  Matrix sum_sq = Matrix::Zero(m, m);
  for (std::size_t r : idx) {
    const Vector x = batch.stats[r] - mean;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double p = x(i) * x(j);
        sum(i, j) += p;
        sum_sq(i, j) += p * p;
      }
    }
  }
  EmpiricalCovariance out;
  out.used = idx.size();
  out.covariance = sum / (n - 1.0);
  out.standard_error.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double mean_p = sum(i, j) / n;
      const double var_p = std::max(0.0, (sum_sq(i, j) - n * mean_p * mean_p) / (n - 1.0));
      out.standard_error(i, j) = std::sqrt(var_p / n);
    }
  }
  return out;
}

ComparisonReport compare_to_oracle(const ReplicationBatch& batch, const CovarianceBlock& oracle,
                                   const Tolerance& tolerance) {
  require(batch.target == oracle.target && batch.points == oracle.points && batch.mark_dim == oracle.mark_dim,
          "compare_to_oracle: batch and oracle grids do not match");
  const auto est = estimate_covariance(batch);
  ComparisonReport rep;
  rep.target = batch.target;
  rep.mode = oracle.mode;
  rep.points = batch.points;
  rep.mark_dim = batch.mark_dim;
  rep.replications = batch.replications();
  rep.degenerate = batch.degenerate_count();
  rep.intensity = batch.intensity;
  rep.seed = batch.seed;
  rep.tolerance = tolerance;
  rep.empirical = est.covariance;
  rep.oracle = oracle.gram();
  rep.standard_error = est.standard_error;
  rep.deviation = rep.empirical - rep.oracle;
  rep.pass = true;
  for (Eigen::Index i = 0; i < rep.deviation.rows(); ++i) {
    for (Eigen::Index j = 0; j < rep.deviation.cols(); ++j) {
      const double dev = std::abs(rep.deviation(i, j));
      const double ref = std::abs(rep.oracle(i, j));
      if (dev > rep.max_abs_deviation) {
        rep.max_abs_deviation = dev;
        rep.se_at_max = rep.standard_error(i, j);
        rep.worst_row = static_cast<std::size_t>(i);
        rep.worst_col = static_cast<std::size_t>(j);
      }
      if (ref > 0.0) {
        rep.max_rel_deviation = std::max(rep.max_rel_deviation, dev / ref);
      }
      if (!(dev <= tolerance.bound(rep.oracle(i, j), rep.standard_error(i, j)))) {
        rep.pass = false;
        ++rep.failing_entries;
      }
    }
  }
  return rep;
}

double ks_distance_normal(std::span<const double> values) {
  require(!values.empty(), "ks_distance_normal: empty sample");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical_value(double alpha, std::size_t n) {
  require(alpha > 0.0 && alpha < 1.0, "ks_critical_value: alpha must lie in (0, 1)");
  require(n > 0, "ks_critical_value: empty sample");
  static const std::map<double, double> table = {{0.001, 1.95}, {0.01, 1.63}, {0.05, 1.36}, {0.1, 1.22}};
  double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  for (const auto& [a, value] : table) {
    if (std::abs(a - alpha) < 1e-12) {
      c = value;
    }
  }
  return c / std::sqrt(static_cast<double>(n));
}

KsResult ks_normality(std::span<const double> values, double oracle_sd, double alpha) {
  if (!(oracle_sd > 0.0)) {
    throw InvalidArgument("ks_normality: oracle variance of the projection is zero");
  }
  std::vector<double> z(values.begin(), values.end());
  for (double& v : z) {
    v /= oracle_sd;
  }
  KsResult out;
  out.n = z.size();
  out.alpha = alpha;
  out.distance = ks_distance_normal(z);
  out.critical = ks_critical_value(alpha, z.size());
  out.reject = out.distance > out.critical;
  return out;
}

KsResult ks_normality(const ReplicationBatch& batch, const CovarianceBlock& oracle, std::size_t point,
                      std::span<const double> direction, double alpha) {
  require(point < batch.points.size() && batch.points == oracle.points, "ks_normality: grid mismatch");
  require(direction.size() == batch.mark_dim, "ks_normality: direction dimension mismatch");
  const auto d = static_cast<Eigen::Index>(batch.mark_dim);
  const Vector dir = Eigen::Map<const Vector>(direction.data(), d);
  const double var = dir.dot(oracle.at(point, point).value * dir);
  std::vector<double> proj;
  for (std::size_t r : used_indices(batch)) {
    proj.push_back(dir.dot(batch.stats[r].segment(static_cast<Eigen::Index>(point) * d, d)));
  }
  require(!proj.empty(), "ks_normality: no non-degenerate replications");
  KsResult out = ks_normality(proj, var > 0.0 ? std::sqrt(var) : 0.0, alpha);
  out.point = point;
  out.direction = dir;
  return out;
}

std::vector<SweepRow> convergence_sweep(const ModelSpec& spec, const CovarianceBlock& oracle,
                                        std::span<const double> intensities, std::size_t replications,
                                        std::uint64_t seed, const Tolerance& tolerance,
                                        const ReplicationOptions& options) {
  require(intensities.size() >= 2, "convergence_sweep: need at least 2 intensities");
  require(std::is_sorted(intensities.begin(), intensities.end()) &&
              std::adjacent_find(intensities.begin(), intensities.end()) == intensities.end(),
          "convergence_sweep: intensities must be strictly ascending");
  std::vector<SweepRow> rows;
  for (double nu : intensities) {
    const ModelSpec local = spec.with_intensity(nu);
    const auto batch = run_replications(local, oracle.target, oracle.points, replications, seed, options);
    const auto rep = compare_to_oracle(batch, oracle, tolerance);
    rows.push_back({nu, rep.max_abs_deviation, rep.se_at_max, rep.max_rel_deviation, rep.pass});
  }
  return rows;
}

bool sweep_non_increasing(std::span<const SweepRow> rows, double factor) {
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double slack = factor * std::max(rows[k].se_at_max, rows[k + 1].se_at_max);
    if (rows[k + 1].max_abs_deviation > rows[k].max_abs_deviation + slack) {
      return false;
    }
  }
  return true;
}

}  // namespace cpf
