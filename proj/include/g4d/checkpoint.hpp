#ifndef G4D_CHECKPOINT_HPP_
#define G4D_CHECKPOINT_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "g4d/tensor.hpp"

namespace g4d {

// Checkpoint format: magic "G4D1", u32 format version (LE), u64 header length
// (LE), JSON header {"layers":[{"name","shape"}], "hyper":{...}}, then
// contiguous little-endian float32 parameter blocks in header order.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& layers,
                     const nlohmann::json& hyper);

struct LoadedCheckpoint {
  nlohmann::json hyper;
  std::map<std::string, Tensor> tensors;

  const Tensor& get(const std::string& name) const;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace g4d

#endif
