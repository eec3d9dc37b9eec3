#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cpf {

// Closed axis-aligned box [lower, upper].
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  double volume() const;
  bool empty() const;
  bool contains(std::span<const double> v) const;
  // Intersection with {v : v <= bound} componentwise.
  Box clipped_above(std::span<const double> bound) const;
};

}  // namespace cpf
