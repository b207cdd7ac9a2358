#ifndef NOISECOND_CHECKPOINT_HPP
#define NOISECOND_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace nc::train {

struct CheckpointMeta {
  std::uint32_t format_version = 1;
  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  double val_loss = 0.0;
};

// One named parameter or buffer: raw 32-bit little-endian values.
struct Blob {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;
};

void write_checkpoint(const std::string& path, const CheckpointMeta& meta,
                      const std::vector<Blob>& blobs);

std::pair<CheckpointMeta, std::vector<Blob>> read_checkpoint(const std::string& path);

// Header only; used to report config hashes without loading tensors.
CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace nc::train

#endif
