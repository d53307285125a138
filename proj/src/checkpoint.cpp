#include "g4d/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace g4d {

namespace {
constexpr char kMagic[4] = {'G', '4', 'D', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& layers,
                     const nlohmann::json& hyper) {
  nlohmann::json header;
  header["layers"] = nlohmann::json::array();
  for (const auto& [name, t] : layers)
    header["layers"].push_back({{"name", name}, {"shape", t->shape}});
  header["hyper"] = hyper;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, hs.size());
  out.write(hs.data(), hs.size());
  for (const auto& [name, t] : layers) {
    std::vector<unsigned char> buf(t->numel() * 4);
    for (size_t i = 0; i < t->numel(); ++i) {
      const float f = static_cast<float>(t->data[i]);
      uint32_t u;
      std::memcpy(&u, &f, 4);
      buf[4 * i] = static_cast<unsigned char>(u);
      buf[4 * i + 1] = static_cast<unsigned char>(u >> 8);
      buf[4 * i + 2] = static_cast<unsigned char>(u >> 16);
      buf[4 * i + 3] = static_cast<unsigned char>(u >> 24);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  const uint32_t version = get_u32(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unsupported version in " + path);
  const uint64_t hlen = get_u64(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) throw std::runtime_error("load_checkpoint: truncated header in " + path);
  nlohmann::json header = nlohmann::json::parse(hs);

  LoadedCheckpoint lc;
  lc.hyper = header.value("hyper", nlohmann::json::object());
  for (const auto& layer : header["layers"]) {
    const std::string name = layer["name"];
    Tensor t(layer["shape"].get<std::vector<int>>());
    std::vector<unsigned char> buf(t.numel() * 4);
    in.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (static_cast<size_t>(in.gcount()) != buf.size())
      throw std::runtime_error("load_checkpoint: truncated data in " + path);
    for (size_t i = 0; i < t.numel(); ++i) {
      const uint32_t u = buf[4 * i] | (buf[4 * i + 1] << 8) | (buf[4 * i + 2] << 16) |
                         (static_cast<uint32_t>(buf[4 * i + 3]) << 24);
      float f;
      std::memcpy(&f, &u, 4);
      t.data[i] = f;
    }
    lc.tensors.emplace(name, std::move(t));
  }
  return lc;
}

const Tensor& LoadedCheckpoint::get(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end())
    throw std::runtime_error("checkpoint: missing layer " + name);
  return it->second;
}

}  // namespace g4d
