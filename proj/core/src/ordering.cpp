#include "cpf/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpf {

std::string OrderingKey::label() const {
  switch (kind) {
    case Kind::coordinate:
      return "x" + std::to_string(coord + 1);
    case Kind::time:
      return "time";
    case Kind::intensity:
      return "intensity";
  }
  return "unknown";
}

std::vector<double> draw_tie_keys(std::size_t n, RngStream& rng) {
  std::vector<double> keys(n);
  for (auto& k : keys) {
    k = rng.uniform();
  }
  return keys;
}

std::vector<std::size_t> order_by_key(const MarkedSample& sample, const OrderingKey& key,
                                      const DomainRegion& domain,
                                      std::span<const double> tie_keys) {
  const std::size_t n = sample.count();
  if (tie_keys.size() != n) {
    throw InvalidArgument("order_by_key: need one tie key per point");
  }
  std::vector<double> primary(n);
  switch (key.kind) {
    case OrderingKey::Kind::coordinate:
      if (key.coord >= static_cast<std::size_t>(sample.points.cols()) && n > 0) {
        throw InvalidArgument("order_by_key: coordinate index out of range");
      }
      if (key.coord >= domain.dim()) {
        throw InvalidArgument("order_by_key: coordinate index out of range");
      }
      for (std::size_t i = 0; i < n; ++i) {
        primary[i] = sample.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(key.coord));
      }
      break;
    case OrderingKey::Kind::time:
    case OrderingKey::Kind::intensity: {
      const UnderCurve* uc = domain.under_curve();
      if (!uc) {
        throw InvalidArgument("order_by_key: time and intensity orderings need an under_curve domain");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double t = sample.points(static_cast<Eigen::Index>(i), 0);
        primary[i] = key.kind == OrderingKey::Kind::time ? t : uc->rate(t);
      }
      break;
    }
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (primary[a] != primary[b]) return primary[a] < primary[b];
    if (tie_keys[a] != tie_keys[b]) return tie_keys[a] < tie_keys[b];
    return a < b;
  });
  return perm;
}

std::vector<std::size_t> order_by_key(const MarkedSample& sample, const OrderingKey& key,
                                      const DomainRegion& domain, RngStream& rng) {
  const auto ties = draw_tie_keys(sample.count(), rng);
  return order_by_key(sample, key, domain, ties);
}

std::size_t prefix_length(std::size_t eta, double t) {
  if (!(t >= 0.0) || !(t <= 1.0)) {
    throw InvalidArgument("prefix_length: t must lie in [0, 1]");
  }
  // The small offset keeps exact products such as 3 * (2/3) from rounding down.
  const double scaled = std::floor(static_cast<double>(eta) * t + 1e-9);
  return std::min(eta, static_cast<std::size_t>(scaled));
}

PartialSumPath concomitant_partial_sums(const MarkedSample& sample, const ModelSpec& spec,
                                        std::span<const OrderingKey> orderings,
                                        std::span<const double> grid, Centering centering,
                                        RngStream& ties) {
  if (orderings.empty()) {
    throw InvalidArgument("concomitant_partial_sums: need at least one ordering");
  }
  for (double t : grid) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw InvalidArgument("concomitant_partial_sums: grid points must lie in [0, 1]");
    }
  }
  const std::size_t n = sample.count();
  const std::size_t d2 = spec.marks.dim();
  const auto series = static_cast<Eigen::Index>(orderings.size());
  PartialSumPath path;
  path.grid.assign(grid.begin(), grid.end());
  path.orderings.assign(orderings.begin(), orderings.end());
  path.mark_dim = d2;
  path.centering = centering;
  path.values.assign(grid.size(), Matrix::Zero(series, static_cast<Eigen::Index>(d2)));
  if (n == 0) {
    path.degenerate = true;
    return path;
  }

  // Residual rows (marks minus the per-term mean when centering).
  RowMatrix residual = sample.marks;
  if (centering == Centering::per_term_mean) {
    Vector mean(static_cast<Eigen::Index>(d2));
    for (Eigen::Index i = 0; i < sample.points.rows(); ++i) {
      spec.marks.mean().evaluate(
          std::span<const double>(sample.points.row(i).data(), static_cast<std::size_t>(sample.points.cols())),
          std::span<double>(mean.data(), d2));
      residual.row(i) -= mean.transpose();
    }
  }

  const auto tie_keys = draw_tie_keys(n, ties);
  std::vector<std::size_t> prefix(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    prefix[g] = prefix_length(n, grid[g]);
  }
  std::vector<std::size_t> by_prefix(grid.size());
  std::iota(by_prefix.begin(), by_prefix.end(), std::size_t{0});
  std::sort(by_prefix.begin(), by_prefix.end(),
            [&](std::size_t a, std::size_t b) { return prefix[a] < prefix[b]; });

  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index s = 0; s < series; ++s) {
    const auto perm = order_by_key(sample, orderings[static_cast<std::size_t>(s)], spec.domain, tie_keys);
    Eigen::RowVectorXd running = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(d2));
    std::size_t consumed = 0;
    for (std::size_t g : by_prefix) {
      while (consumed < prefix[g]) {
        running += residual.row(static_cast<Eigen::Index>(perm[consumed]));
        ++consumed;
      }
      path.values[g].row(s) = running * scale;
    }
  }
  return path;
}

FieldEvaluation evaluate_q_field(const MarkedSample& sample,
                                 std::span<const std::vector<double>> corners,
                                 std::span<const Vector> centering) {
  if (centering.size() != corners.size()) {
    throw InvalidArgument("evaluate_q_field: need one centering vector per corner");
  }
  const std::size_t n = sample.count();
  const auto d2 = sample.marks.cols();
  const auto d1 = sample.points.cols();
  FieldEvaluation out;
  out.corners.assign(corners.begin(), corners.end());
  out.centering.assign(centering.begin(), centering.end());
  out.degenerate = n == 0;
  for (std::size_t c = 0; c < corners.size(); ++c) {
    const auto& u = corners[c];
    Vector total = Vector::Zero(centering[c].size());
    if (n > 0 && static_cast<Eigen::Index>(u.size()) != d1) {
      throw InvalidArgument("evaluate_q_field: corner dimension mismatch");
    }
    if (n > 0 && centering[c].size() != d2) {
      throw InvalidArgument("evaluate_q_field: centering dimension mismatch");
    }
    for (Eigen::Index i = 0; i < sample.points.rows(); ++i) {
      bool below = true;
      for (Eigen::Index k = 0; k < d1 && below; ++k) {
        below = sample.points(i, k) <= u[static_cast<std::size_t>(k)];
      }
      if (below) {
        total += sample.marks.row(i).transpose();
      }
    }
    if (n == 0) {
      out.values.push_back(Vector::Zero(centering[c].size()));
      continue;
    }
    const double eta = static_cast<double>(n);
    out.values.push_back((total - eta * centering[c]) / std::sqrt(eta));
  }
  return out;
}

PartialSumPath theorem3_process(const MarkedSample& sample, const ModelSpec& spec,
                                std::span<const double> grid, RngStream& ties) {
  if (!spec.supports_time_intensity()) {
    throw InvalidArgument(
        "theorem3_process: needs an under_curve domain and a mark mean constant in x2");
  }
  const OrderingKey orderings[] = {OrderingKey::time(), OrderingKey::intensity()};
  return concomitant_partial_sums(sample, spec, orderings, grid, Centering::per_term_mean, ties);
}

}  // namespace cpf
