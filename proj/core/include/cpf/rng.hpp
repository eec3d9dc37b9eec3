#pragma once

#include <array>
#include <cstdint>

namespace cpf {

// Purpose tags keep the streams used for different parts of one replication
// independent of each other.
enum class Purpose : std::uint16_t {
  count = 1,
  points = 2,
  marks = 3,
  ties = 4,
  times = 5,
  lift = 6,
  synthetic = 7,
  qmc = 8,
};

// Philox4x32-10 block function. Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (root seed, replication, purpose).
///
/// Output i of a stream is a pure function of its path and i, so replications
/// can be generated in any order or on any number of threads and still
/// reproduce bit-for-bit. All variate generators below are implemented here
/// rather than through <random> distributions, whose algorithms differ
/// between standard library implementations.
class RngStream {
 public:
  static constexpr std::uint64_t kMaxReplication = (std::uint64_t{1} << 48) - 1;

  RngStream(std::uint64_t seed, std::uint64_t replication, Purpose purpose);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t replication() const { return replication_; }
  Purpose purpose() const { return purpose_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  double normal();
  double exponential(double rate);
  std::uint64_t poisson(double mean);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t replication_;
  Purpose purpose_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace cpf
