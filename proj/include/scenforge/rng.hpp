#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace scenforge
{

/// Counter-based generator (Philox4x32-10). A generator is fully described by
/// (key, stream, counter), so independent named streams can be split off
/// without consuming draws from the parent.
class Rng
{
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  /// Child generator whose stream id is derived from this stream and `name`.
  Rng split(std::string_view name) const;
  Rng split(std::uint64_t index) const;

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::uint64_t seed() const { return key_; }
  std::uint64_t stream() const { return stream_; }

private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng & rng);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace scenforge
