#include "noisecond/model.hpp"

#include <sstream>

#include "noisecond/error.hpp"

namespace nc::model {

std::string format_blocks(const std::vector<ConvSpec>& blocks) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += ",";
    const auto& b = blocks[i];
    out += std::to_string(b.kh) + "x" + std::to_string(b.kw) + ":" +
           std::to_string(b.sh) + "x" + std::to_string(b.sw) + ":" +
           std::to_string(b.channels);
  }
  return out;
}

std::vector<ConvSpec> parse_blocks(const std::string& text) {
  std::vector<ConvSpec> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    ConvSpec b;
    if (std::sscanf(item.c_str(), "%zux%zu:%zux%zu:%zu", &b.kh, &b.kw, &b.sh,
                    &b.sw, &b.channels) != 5)
      throw UsageError("bad block spec '" + item + "' (want KHxKW:SHxSW:C)");
    out.push_back(b);
  }
  if (out.empty()) throw UsageError("empty block list");
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> spatial_trace(
    std::size_t h, std::size_t w, const std::vector<ConvSpec>& blocks) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& b : blocks) {
    h = ceil_div(h, b.sh);
    w = ceil_div(w, b.sw);
    out.emplace_back(h, w);
  }
  return out;
}

void ModelConfig::validate() const {
  if (arch != "main" && arch != "noise_aware")
    throw UsageError("model arch must be 'main' or 'noise_aware'");
  if (n == 0 || r == 0 || freq_bins == 0 || embed_dim == 0 || loc_hidden == 0)
    throw UsageError("model extents must be positive");
  if (freq_bins != frame_len / 2 + 1)
    throw UsageError("freq_bins must equal frame_len/2+1");
  if (enh_blocks.size() % 2 != 0)
    throw UsageError("enh_blocks must have even length");
  for (std::size_t i = 1; i < enh_blocks.size(); ++i)
    if (enh_blocks[i].channels < enh_blocks[i - 1].channels)
      throw UsageError("enh channel plan must be non-decreasing");
  for (std::size_t i = 1; i < emb_blocks.size(); ++i)
    if (emb_blocks[i].channels < emb_blocks[i - 1].channels)
      throw UsageError("emb channel plan must be non-decreasing");
  if (use_noise_embedding && arch == "main" &&
      emb_blocks.back().channels != embed_dim)
    throw UsageError("embed_dim must equal the last embedding block's channels "
                     "(global average pooling)");
  if (baseline_crop > n)
    throw UsageError("baseline_crop cannot exceed n");
}

cfg::KvMap ModelConfig::to_kv() const {
  cfg::KvMap kv;
  kv["arch"] = arch;
  kv["n"] = std::to_string(n);
  kv["r"] = std::to_string(r);
  kv["freq_bins"] = std::to_string(freq_bins);
  kv["frame_len"] = std::to_string(frame_len);
  kv["hop"] = std::to_string(hop);
  kv["embed_dim"] = std::to_string(embed_dim);
  kv["loc_hidden"] = std::to_string(loc_hidden);
  kv["use_noise_embedding"] = use_noise_embedding ? "true" : "false";
  kv["emb_blocks"] = format_blocks(emb_blocks);
  kv["enh_blocks"] = format_blocks(enh_blocks);
  kv["baseline_crop"] = std::to_string(baseline_crop);
  kv["baseline_layers"] = std::to_string(baseline_layers);
  kv["baseline_width"] = std::to_string(baseline_width);
  return kv;
}

ModelConfig ModelConfig::from_kv(const cfg::KvMap& kv) {
  ModelConfig c;
  c.arch = cfg::get_str(kv, "arch", c.arch);
  c.n = cfg::get_int(kv, "n", static_cast<long>(c.n));
  c.r = cfg::get_int(kv, "r", static_cast<long>(c.r));
  c.freq_bins = cfg::get_int(kv, "freq_bins", static_cast<long>(c.freq_bins));
  c.frame_len = cfg::get_int(kv, "frame_len", static_cast<long>(c.frame_len));
  c.hop = cfg::get_int(kv, "hop", static_cast<long>(c.hop));
  c.embed_dim = cfg::get_int(kv, "embed_dim", static_cast<long>(c.embed_dim));
  c.loc_hidden = cfg::get_int(kv, "loc_hidden", static_cast<long>(c.loc_hidden));
  c.use_noise_embedding =
      cfg::get_bool(kv, "use_noise_embedding", c.use_noise_embedding);
  if (kv.count("emb_blocks")) c.emb_blocks = parse_blocks(kv.at("emb_blocks"));
  if (kv.count("enh_blocks")) c.enh_blocks = parse_blocks(kv.at("enh_blocks"));
  c.baseline_crop = cfg::get_int(kv, "baseline_crop", static_cast<long>(c.baseline_crop));
  c.baseline_layers = cfg::get_int(kv, "baseline_layers", static_cast<long>(c.baseline_layers));
  c.baseline_width = cfg::get_int(kv, "baseline_width", static_cast<long>(c.baseline_width));
  c.validate();
  return c;
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.n = 48;
  c.r = 16;
  c.embed_dim = 64;
  c.loc_hidden = 16;
  c.emb_blocks = {{8, 4, 3, 2, 16}, {8, 4, 3, 2, 32}, {4, 4, 1, 1, 64}, {4, 4, 1, 2, 64}};
  c.enh_blocks = {{4, 4, 1, 1, 16}, {4, 4, 1, 1, 16}, {4, 4, 2, 2, 32},
                  {4, 4, 1, 1, 32}, {3, 3, 2, 2, 64}, {3, 3, 1, 1, 64},
                  {3, 3, 2, 2, 128}, {3, 3, 1, 1, 128}};
  c.baseline_width = 128;
  return c;
}

ModelConfig ModelConfig::miniature() {
  ModelConfig c;
  c.n = 12;
  c.r = 8;
  c.frame_len = 32;
  c.hop = 16;
  c.freq_bins = 17;
  c.embed_dim = 6;
  c.loc_hidden = 6;
  c.emb_blocks = {{4, 3, 2, 2, 3}, {3, 3, 1, 1, 3}, {3, 3, 1, 2, 4}, {3, 3, 1, 1, 6}};
  c.enh_blocks = {{3, 3, 1, 1, 3}, {3, 3, 1, 1, 3}, {3, 3, 2, 2, 4},
                  {3, 3, 1, 1, 4}, {3, 3, 2, 2, 6}, {3, 3, 1, 1, 6},
                  {3, 3, 2, 2, 8}, {3, 3, 1, 1, 8}};
  c.baseline_crop = 5;
  c.baseline_layers = 3;
  c.baseline_width = 24;
  return c;
}

}  // namespace nc::model
