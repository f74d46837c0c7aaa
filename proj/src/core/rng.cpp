#include "scenforge/rng.hpp"

#include <random>
#include <stdexcept>

namespace scenforge
{
namespace
{
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::array<std::uint32_t, 4> philox4x32(
  std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h)
{
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : key_(seed), stream_(stream) {}

Rng Rng::split(std::string_view name) const
{
  return Rng(key_, splitmix64(fnv1a64(name, stream_ ^ 0xcbf29ce484222325ULL)));
}

Rng Rng::split(std::uint64_t index) const
{
  return Rng(key_, splitmix64(stream_ * 0x100000001b3ULL + splitmix64(index)));
}

Rng::result_type Rng::operator()()
{
  if (buffered_ == 0) {
    const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)};
    const auto out = philox4x32(ctr, key);
    ++counter_;
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
  }
  return buffer_[2 - buffered_--];
}

double Rng::uniform()
{
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
  return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
  std::normal_distribution<double> dist;
  return dist(*this);
}

std::size_t Rng::index(std::size_t n)
{
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(*this);
}

}  // namespace scenforge

namespace scenforge
{

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng & rng)
{
  if (k > n) {
    throw std::invalid_argument("sample_indices: k > n");
  }
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + rng.index(n - i)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace scenforge
