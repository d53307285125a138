#ifndef G4D_TRAINER_HPP_
#define G4D_TRAINER_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "g4d/ram.hpp"

namespace g4d {

struct TrainExample {
  std::vector<PointCloud> frames;  // metric points, voxelized per epoch
  int label = 1;
  std::string id;
};

struct TrainConfig {
  int batch_size = 20;
  double learning_rate = 1e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int mc_episodes = 4;  // M in the Monte-Carlo gradient estimate
  int epochs = 0;
  uint64_t seed = 0;
  std::string baseline = "ema";  // "ema" | "none"
  double ema_decay = 0.9;

  int T = 8;
  double sigma = 0.15;
  int hidden = 256;
  int dims = 4;
  bool random_init_loc = false;
  bool per_step_loss = false;      // spread cross-entropy over every step
  bool finetune_encoder = false;   // default: encoder frozen
  int checkpoint_every = 0;        // 0 = only initial + best

  bool augment_enabled = true;
  AugmentConfig augment;
  VoxelGridConfig grid;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);

struct TrainLogRow {
  int epoch = 0;
  double mean_reward = 0, ce_loss = 0, train_top1 = 0, val_top1 = 0, seconds = 0;
};

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows);

// REINFORCE estimate: per trace, per step, the ascent direction on the
// location mean, (1/M) * (R - b) * (phi - mu) / sigma^2 componentwise. The
// baseline b is subtracted identically from every episode.
std::vector<std::vector<std::array<double, 4>>> reinforce_grad(
    const std::vector<EpisodeTrace>& traces, double baseline, double sigma, int dims);

struct RamGrads {
  RamParams g;
  explicit RamGrads(const RamParams& p);
  void zero();
};

// BPTT through one cached episode. ce_weights[t] scales the cross-entropy
// gradient at step t; dmu_loss[t] is the loss-convention gradient on the
// location mean. with_encoder additionally backprops into encoder weights.
void episode_backward(const RamParams& params, const RolloutCache& cache,
                      const EpisodeTrace& trace, const std::vector<double>& ce_weights,
                      const std::vector<std::array<double, 4>>& dmu_loss,
                      bool with_encoder, RamGrads& grads);

struct BatchStats {
  double mean_reward = 0, ce_loss = 0;
};

struct TrainerState {
  OptimState opt;
  double ema_baseline = 0;
  bool ema_initialized = false;
};

// One optimizer update over a mini-batch of already-voxelized tensors.
BatchStats hybrid_step(const std::vector<const VoxelTensor4D*>& tensors,
                       const std::vector<int>& labels, RamParams& params,
                       const TrainConfig& cfg, TrainerState& state,
                       uint64_t episode_stream);

struct FitResult {
  RamParams params;      // final
  RamParams best;        // best validation top-1
  std::vector<TrainLogRow> log;
};

// Builds the tensor an example feeds the model, honoring the dims variant.
VoxelTensor4D build_tensor(const std::vector<PointCloud>& frames,
                           const VoxelGridConfig& grid, int dims);

FitResult fit(const std::vector<TrainExample>& train,
              const std::vector<TrainExample>& val, const TrainConfig& cfg,
              const EncoderParams& encoder, const std::string& out_dir = "");

// RAM checkpoint I/O (shared "G4D1" format; includes the frozen encoder).
void save_ram_checkpoint(const std::string& path, const RamParams& params,
                         const nlohmann::json& extra_hyper = {});
RamParams load_ram_checkpoint(const std::string& path);

void save_encoder_checkpoint(const std::string& path, const EncoderParams& params,
                             const nlohmann::json& extra_hyper = {});
EncoderParams load_encoder_checkpoint(const std::string& path);

}  // namespace g4d

#endif
