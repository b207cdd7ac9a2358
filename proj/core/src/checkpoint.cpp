#include "noisecond/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "noisecond/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace nc::train {
namespace {

constexpr char kMagic[8] = {'N', 'C', 'C', 'K', 'P', 'T', '0', '1'};

template <class T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::ifstream& f, const std::string& path) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw CorruptCheckpoint(path + " is truncated");
  return v;
}

CheckpointMeta read_header(std::ifstream& f, const std::string& path) {
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw CorruptCheckpoint(path + " has a bad header");
  CheckpointMeta meta;
  meta.format_version = take<std::uint32_t>(f, path);
  meta.config_hash = take<std::uint64_t>(f, path);
  meta.step = take<std::uint64_t>(f, path);
  meta.val_loss = take<double>(f, path);
  if (meta.format_version != 1)
    throw CorruptCheckpoint(path + " has unsupported format version " +
                            std::to_string(meta.format_version));
  return meta;
}

}  // namespace

void write_checkpoint(const std::string& path, const CheckpointMeta& meta,
                      const std::vector<Blob>& blobs) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(kMagic, 8);
  put(f, meta.format_version);
  put(f, meta.config_hash);
  put(f, meta.step);
  put(f, meta.val_loss);
  put(f, static_cast<std::uint32_t>(blobs.size()));
  for (const auto& b : blobs) {
    put(f, static_cast<std::uint32_t>(b.name.size()));
    f.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    put(f, static_cast<std::uint32_t>(b.shape.size()));
    std::uint64_t count = 1;
    for (auto d : b.shape) {
      put(f, d);
      count *= d;
    }
    if (count != b.data.size())
      throw ContractViolation("blob '" + b.name + "' shape/data mismatch");
    f.write(reinterpret_cast<const char*>(b.data.data()),
            static_cast<std::streamsize>(b.data.size() * sizeof(float)));
  }
  if (!f) throw IoError("short write to " + path);
}

std::pair<CheckpointMeta, std::vector<Blob>> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  CheckpointMeta meta = read_header(f, path);
  const auto count = take<std::uint32_t>(f, path);
  std::vector<Blob> blobs(count);
  for (auto& b : blobs) {
    const auto name_len = take<std::uint32_t>(f, path);
    b.name.resize(name_len);
    f.read(b.name.data(), name_len);
    if (!f) throw CorruptCheckpoint(path + " is truncated");
    const auto ndim = take<std::uint32_t>(f, path);
    b.shape.resize(ndim);
    std::uint64_t n = 1;
    for (auto& d : b.shape) {
      d = take<std::uint64_t>(f, path);
      n *= d;
    }
    if (n > (1ULL << 32))
      throw CorruptCheckpoint(path + " declares an implausible tensor size");
    b.data.resize(n);
    f.read(reinterpret_cast<char*>(b.data.data()),
           static_cast<std::streamsize>(n * sizeof(float)));
    if (!f) throw CorruptCheckpoint(path + " is truncated");
  }
  return {meta, std::move(blobs)};
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  return read_header(f, path);
}

}  // namespace nc::train
