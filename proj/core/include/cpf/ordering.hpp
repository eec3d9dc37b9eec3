#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cpf/model.hpp"
#include "cpf/rng.hpp"
#include "cpf/sampler.hpp"

namespace cpf {

struct OrderingKey {
  enum class Kind { coordinate, time, intensity };

  Kind kind = Kind::coordinate;
  std::size_t coord = 0;  // 0-based, used by Kind::coordinate

  static OrderingKey coordinate(std::size_t k) { return {Kind::coordinate, k}; }
  static OrderingKey time() { return {Kind::time, 0}; }
  static OrderingKey intensity() { return {Kind::intensity, 0}; }

  std::string label() const;
};

enum class Centering { none, per_term_mean };

/// Normalized partial sums of concomitants, one series per ordering.
///
/// values[g] is a (series x d2) matrix: row s holds
/// sum_{j < floor(eta t_g)} (Y_{pi_s(j)} - c_j) / sqrt(eta), where c_j is 0
/// or m(X_{pi_s(j)}) depending on the centering mode.
struct PartialSumPath {
  std::vector<double> grid;
  std::vector<OrderingKey> orderings;
  std::size_t mark_dim = 0;
  Centering centering = Centering::none;
  std::vector<Matrix> values;
  bool degenerate = false;  // eta == 0; values are identically zero
};

// Per-corner normalized field values (Q(u) - eta c(u)) / sqrt(eta).
struct FieldEvaluation {
  std::vector<std::vector<double>> corners;
  std::vector<Vector> values;
  std::vector<Vector> centering;
  bool degenerate = false;
};

// One uniform tie-breaking key per point, drawn in point order.
std::vector<double> draw_tie_keys(std::size_t n, RngStream& rng);

/// Permutation (0-based) that sorts the points by the key, ties broken by
/// `tie_keys`, then by index. Intensity keys require an under-curve domain.
std::vector<std::size_t> order_by_key(const MarkedSample& sample, const OrderingKey& key,
                                      const DomainRegion& domain,
                                      std::span<const double> tie_keys);
// Same, drawing the tie keys from `rng`.
std::vector<std::size_t> order_by_key(const MarkedSample& sample, const OrderingKey& key,
                                      const DomainRegion& domain, RngStream& rng);

// Prefix length floor(eta * t), clamped to [0, eta].
std::size_t prefix_length(std::size_t eta, double t);

PartialSumPath concomitant_partial_sums(const MarkedSample& sample, const ModelSpec& spec,
                                        std::span<const OrderingKey> orderings,
                                        std::span<const double> grid, Centering centering,
                                        RngStream& ties);

// Direct O(eta * |corners|) accumulation.
FieldEvaluation evaluate_q_field(const MarkedSample& sample,
                                 std::span<const std::vector<double>> corners,
                                 std::span<const Vector> centering);

// Time ordering and intensity ordering, both centered by m(x1).
PartialSumPath theorem3_process(const MarkedSample& sample, const ModelSpec& spec,
                                std::span<const double> grid, RngStream& ties);

}  // namespace cpf
