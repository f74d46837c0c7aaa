#include "scenforge/nn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "scenforge/errors.hpp"
#include "scenforge/rng.hpp"

namespace scenforge::nn
{
namespace
{
constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};

void put_u32(std::string & out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string & out, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_string(std::string & out, const std::string & s)
{
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader
{
public:
  explicit Reader(const std::string & bytes) : bytes_(bytes) {}

  void need(std::size_t n) const
  {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::uint32_t u32()
  {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64()
  {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::string str()
  {
    const auto n = u32();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n)
  {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

private:
  const std::string & bytes_;
  std::size_t pos_ = 0;
};
}  // namespace

void Checkpoint::put(const std::string & name, const Matrix & m)
{
  NamedArray a;
  a.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  a.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      a.data.push_back(static_cast<float>(m(i, j)));
    }
  }
  arrays[name] = std::move(a);
}

Matrix Checkpoint::get(const std::string & name) const
{
  const auto it = arrays.find(name);
  if (it == arrays.end()) {
    throw MissingArtifactError("checkpoint has no array '" + name + "'");
  }
  const auto & a = it->second;
  if (a.shape.size() != 2) {
    throw ShapeError("array '" + name + "' is not 2-D");
  }
  Matrix m(static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = static_cast<double>(a.data[k++]);
    }
  }
  return m;
}

const std::string & Checkpoint::meta(const std::string & key) const
{
  const auto it = metadata.find(key);
  if (it == metadata.end()) {
    throw MissingArtifactError("checkpoint metadata has no key '" + key + "'");
  }
  return it->second;
}

void Checkpoint::set_meta(const std::string & key, double value)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  metadata[key] = buf;
}

double Checkpoint::meta_double(const std::string & key) const
{
  const auto & text = meta(key);
  try {
    return std::stod(text);
  } catch (const std::exception &) {
    throw ParseError("metadata '" + key + "' is not a number: '" + text + "'");
  }
}

long Checkpoint::meta_int(const std::string & key) const
{
  const auto & text = meta(key);
  try {
    return std::stol(text);
  } catch (const std::exception &) {
    throw ParseError("metadata '" + key + "' is not an integer: '" + text + "'");
  }
}

std::string serialize_checkpoint(const Checkpoint & ckpt)
{
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, ckpt.format_version);
  put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto & [k, v] : ckpt.metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto & [name, a] : ckpt.arrays) {
    std::uint64_t count = 1;
    for (const auto d : a.shape) count *= d;
    if (count != a.data.size()) {
      throw ShapeError("array '" + name + "' payload does not match its shape");
    }
    put_string(out, name);
    put_u32(out, static_cast<std::uint32_t>(a.shape.size()));
    for (const auto d : a.shape) put_u64(out, d);
    for (const float f : a.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string & bytes)
{
  Reader r(bytes);
  if (r.raw(4) != std::string(kMagic, sizeof(kMagic))) {
    throw ParseError("not a checkpoint: bad magic");
  }
  Checkpoint ckpt;
  ckpt.format_version = r.u32();
  if (ckpt.format_version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(ckpt.format_version));
  }
  const auto n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.str();
    ckpt.metadata[k] = r.str();
  }
  const auto n_arrays = r.u32();
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    auto name = r.str();
    NamedArray a;
    const auto rank = r.u32();
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      a.shape.push_back(r.u64());
      count *= a.shape.back();
    }
    r.need(count * 4);
    a.data.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) a.data.push_back(std::bit_cast<float>(r.u32()));
    ckpt.arrays[name] = std::move(a);
  }
  if (!r.done()) {
    throw ParseError("trailing bytes after checkpoint payload");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint & ckpt, const std::filesystem::path & path)
{
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error("cannot write checkpoint '" + path.string() + "'");
  }
}

Checkpoint load_checkpoint(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MissingArtifactError("cannot open checkpoint '" + path.string() + "'");
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

std::string checkpoint_hash(const Checkpoint & ckpt)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_checkpoint(ckpt))));
  return buf;
}

void store_parameters(Checkpoint & ckpt, const ParameterList & params)
{
  for (const auto & p : params) {
    ckpt.put(p->name, p->value);
  }
}

void restore_parameters(const Checkpoint & ckpt, const ParameterList & params)
{
  for (const auto & p : params) {
    Matrix m = ckpt.get(p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw ShapeError("checkpoint array '" + p->name + "' has the wrong shape");
    }
    p->value = std::move(m);
    p->grad.setZero(p->value.rows(), p->value.cols());
  }
}

}  // namespace scenforge::nn
