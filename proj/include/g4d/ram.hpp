#ifndef G4D_RAM_HPP_
#define G4D_RAM_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "g4d/encoder.hpp"
#include "g4d/glimpse.hpp"
#include "g4d/nn.hpp"

namespace g4d {

struct RamConfig {
  int T = 8;                 // glimpse steps per episode
  double sigma = 0.15;       // location policy std, per axis, normalized units
  int dims = 4;              // 4 = spatio-temporal, 3 = volume, 2 = z-projected
  int num_classes = 2;
  int hidden = 256;
  double dropout_p = 0.5;    // train-mode only
  bool random_init_loc = false;  // uniform phi_0 in [-0.5, 0.5]^dims when training
  GlimpseConfig glimpse;     // glimpse.dims tracks dims
};

struct RamParams {
  RamConfig cfg;
  EncoderParams enc;  // frozen during RAM training
  LstmParams lstm;
  Tensor loc_w, loc_b;  // d_h -> dims, tanh
  Tensor act_w, act_b;  // d_h -> C, softmax

  RamParams() = default;
  RamParams(const RamConfig& c, const EncoderParams& encoder);
  void init(Rng& rng);
  // Trainable-during-RAM subset: lstm + both heads.
  std::vector<Tensor*> ram_side();
  std::vector<const Tensor*> ram_side() const;
  std::vector<std::string> ram_side_names() const;
};

struct StepTrace {
  std::array<double, 4> mu = {0, 0, 0, 0};   // location mean, normalized
  std::array<double, 4> phi = {0, 0, 0, 0};  // sampled location (pre-clamp)
  double logp = 0;                           // log N(phi; mu, sigma^2 I)
  std::array<int, 4> center = {0, 0, 0, 0};  // grid center actually glimpsed
  std::vector<double> probs;                 // class distribution
  int pred = 1;                              // 1-based, lowest-index tie-break
};

struct EpisodeTrace {
  std::vector<StepTrace> steps;
  double reward = 0;  // 1 iff final prediction equals the label
  int label = 1;
};

// Per-step activations retained for BPTT.
struct RolloutCache {
  struct Step {
    EncodeCache enc;
    std::vector<double> code, code_drop, code_mask;
    LstmCache lstm;
    std::vector<double> h, h_drop, h_mask;
    std::vector<double> mu;      // post-tanh, size dims
    std::vector<double> probs;   // softmax output
  };
  std::vector<Step> steps;
};

std::array<double, 4> location_head(const std::vector<double>& h, const Tensor& W,
                                    const Tensor& b, int dims);

// phi ~ N(mu, sigma^2 I_dims); returns pre-clamp sample and its log-density.
std::pair<std::array<double, 4>, double> sample_location(
    const std::array<double, 4>& mu, double sigma, int dims, Rng& rng);

double gaussian_log_density(const std::array<double, 4>& phi,
                            const std::array<double, 4>& mu, double sigma, int dims);

// Class distribution over C classes plus 1-based argmax prediction.
std::pair<std::vector<double>, int> action_head(const std::vector<double>& h,
                                                const Tensor& W, const Tensor& b);

// Rolls out T glimpse steps. Train mode samples locations and applies
// dropout; eval mode uses phi = mu deterministically. forced_locs (normalized
// glimpse centers for steps 0..T-1) bypasses the policy, which freezes the
// stochastic path for gradient checks.
EpisodeTrace rollout(const VoxelTensor4D& tensor, int label, const RamParams& params,
                     Rng& rng, Mode mode, RolloutCache* cache = nullptr,
                     const std::vector<std::array<double, 4>>* forced_locs = nullptr);

}  // namespace g4d

#endif
