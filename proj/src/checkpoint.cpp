#include "recoat/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "recoat/error.hpp"

namespace recoat {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw ParseError("truncated checkpoint: " + path);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is, const std::string& path) {
  std::uint32_t bits = get_u32(is, path);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write("RCAT", 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(os, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i)
      put_f32(os, static_cast<float>(t[i]));
  }
  if (!os) throw IoError("write failed: " + path);
}

NamedTensors read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "RCAT", 4) != 0)
    throw ParseError("bad checkpoint magic: " + path);
  const std::uint32_t version = get_u32(is, path);
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version) + ": " + path);
  const std::uint32_t count = get_u32(is, path);
  NamedTensors out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(is, path);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len))
      throw ParseError("truncated checkpoint: " + path);
    const std::uint32_t rank = get_u32(is, path);
    std::vector<int> shape(rank);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(get_u32(is, path));
      n *= static_cast<std::size_t>(shape[d]);
    }
    Tensor t(shape);
    for (std::size_t j = 0; j < n; ++j)
      t[j] = static_cast<double>(get_f32(is, path));
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void round_to_f32(Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<double>(static_cast<float>(t[i]));
}

void save_params(const std::string& path, const ParamStore& store) {
  NamedTensors tensors;
  tensors.reserve(store.size());
  for (const std::string& name : store.names())
    tensors.emplace_back(name, store.at(name));
  write_checkpoint(path, tensors);
}

void load_params(const std::string& path, ParamStore& store) {
  NamedTensors tensors = read_checkpoint(path);
  if (tensors.size() != store.size())
    throw ParseError("checkpoint parameter count mismatch: " + path);
  for (auto& [name, t] : tensors) {
    Tensor& dst = store.at(name);
    if (!dst.same_shape(t))
      throw ParseError("checkpoint shape mismatch for " + name + ": " + path);
    dst = std::move(t);
  }
}

}  // namespace recoat
