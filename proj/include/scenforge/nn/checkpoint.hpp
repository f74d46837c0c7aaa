#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scenforge/nn/tape.hpp"

namespace scenforge::nn
{

constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray
{
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  friend bool operator==(const NamedArray &, const NamedArray &) = default;
};

/// On disk: "SFCK", u32 version, u32 metadata count, (key, value) strings,
/// u32 array count, then per array: name, u32 rank, u64 dims, f32 payload.
/// Strings are u32 length + UTF-8 bytes; everything little-endian.
struct Checkpoint
{
  std::uint32_t format_version{kCheckpointVersion};
  std::map<std::string, std::string> metadata;
  std::map<std::string, NamedArray> arrays;

  void put(const std::string & name, const Matrix & m);
  /// Throws MissingArtifactError when absent, ShapeError when not 2-D.
  Matrix get(const std::string & name) const;
  const std::string & meta(const std::string & key) const;
  /// Numeric metadata is stored as shortest round-trip decimal text.
  void set_meta(const std::string & key, double value);
  double meta_double(const std::string & key) const;
  long meta_int(const std::string & key) const;

  friend bool operator==(const Checkpoint &, const Checkpoint &) = default;
};

std::string serialize_checkpoint(const Checkpoint & ckpt);
Checkpoint deserialize_checkpoint(const std::string & bytes);
void save_checkpoint(const Checkpoint & ckpt, const std::filesystem::path & path);
Checkpoint load_checkpoint(const std::filesystem::path & path);

/// FNV-1a 64 of the serialized bytes, as 16 hex digits.
std::string checkpoint_hash(const Checkpoint & ckpt);

void store_parameters(Checkpoint & ckpt, const ParameterList & params);
/// Copies arrays into matching parameters; shapes must agree.
void restore_parameters(const Checkpoint & ckpt, const ParameterList & params);

}  // namespace scenforge::nn
