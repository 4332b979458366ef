#include "metagree/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace metagree {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  void raw(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_ + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return size_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw ConfigError("checkpoint file truncated");
  }
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::size_t param_count_for(const std::vector<std::size_t>& layer_sizes) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    count += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  }
  return count;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::size_t>& layer_sizes,
                     const ParamVector& params) {
  if (layer_sizes.size() < 2) throw ShapeError("save_checkpoint: need at least 2 layers");
  if (params.size() != param_count_for(layer_sizes)) {
    throw ShapeError("save_checkpoint: params length does not match layer sizes");
  }
  std::string blob;
  blob.reserve(24 + 4 * layer_sizes.size() + 8 * params.size());
  blob.append(kCheckpointMagic, 4);
  put_u32(blob, kCheckpointVersion);
  put_u32(blob, static_cast<std::uint32_t>(layer_sizes.size()));
  for (std::size_t s : layer_sizes) put_u32(blob, static_cast<std::uint32_t>(s));
  put_u64(blob, params.size());
  for (double v : params) put_u64(blob, std::bit_cast<std::uint64_t>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw ConfigError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw ConfigError("not a checkpoint (bad magic): " + path.string());
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t n_layers = r.u32();
  if (n_layers < 2 || n_layers > 1024) {
    throw ConfigError("checkpoint has implausible layer count");
  }
  Checkpoint ck;
  ck.layer_sizes.resize(n_layers);
  for (std::uint32_t i = 0; i < n_layers; ++i) ck.layer_sizes[i] = r.u32();
  const std::uint64_t count = r.u64();
  if (count != param_count_for(ck.layer_sizes)) {
    throw ConfigError("checkpoint parameter count does not match its layer sizes");
  }
  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    values[i] = r.f64();
    if (!std::isfinite(values[i])) {
      throw ConfigError("checkpoint contains non-finite parameters");
    }
  }
  if (r.remaining() != 0) throw ConfigError("trailing bytes in checkpoint");
  ck.params = ParamVector(std::move(values));
  return ck;
}

}  // namespace metagree
