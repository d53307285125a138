#ifndef G4D_SYNTH_HPP_
#define G4D_SYNTH_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "g4d/voxel.hpp"

namespace g4d {

// Controllable per-identity body shape and gait signature. Fields are drawn
// from the documented uniform ranges in sample_identities.
struct IdentityProfile {
  double height_m = 1.7;
  double torso_radius_m = 0.15;
  double head_radius_m = 0.10;
  double limb_length_m = 0.8;      // leg length; arms are 0.75x
  int gait_period_frames = 12;     // >= 4
  double step_amplitude_rad = 0.5;
  double shoulder_rot_rad = 0.15;  // rotational displacement at the shoulders
  double hip_sway_cm = 3.0;        // lateral sway in the hip region
  double walking_speed_mps = 1.0;  // drives bob magnitude; walk-in-place
};

struct IdentityRanges {
  double height[2] = {1.45, 1.95};
  double torso_radius[2] = {0.13, 0.17};
  double head_radius[2] = {0.08, 0.12};
  double limb_length[2] = {0.70, 0.95};
  int gait_period[2] = {8, 16};
  double step_amplitude[2] = {0.3, 0.7};
  double shoulder_rot[2] = {0.05, 0.30};
  double hip_sway_cm[2] = {1.0, 6.0};
  double walking_speed[2] = {0.8, 1.4};
};

struct SynthConfig {
  int num_ids = 2;
  int seqs_per_id = 2;
  int train_seqs_per_id = 1;  // remainder goes to the test split
  int frames = 32;
  std::string camera = "topdown";  // "frontal" | "topdown"
  CameraIntrinsics intr = {110.0, 110.0, 47.5, 47.5};
  int image_width = 96, image_height = 96;
  double noise_sigma_mm = 0.0;
  uint64_t seed = 0;
  IdentityRanges ranges;
  // per-sequence variation: gait parameters drift by up to +/- gait_drift
  // (fractional), and the stance point wanders within +/- stance_jitter_m
  double gait_drift = 0.15;
  double stance_jitter_m = 0.0;
  double stance[2] = {0.0, 0.0};  // world x/y offset of the subject
};

SynthConfig synth_config_from_json(const nlohmann::json& j);

std::vector<IdentityProfile> sample_identities(int count, uint64_t seed,
                                               const IdentityRanges& ranges = {});

// Renders frames for one walking (in place) figure. phase0 is an integer
// frame offset into the gait cycle, so (geometry at t) == (geometry at t + P)
// exactly; depth noise is drawn from rng. Throws if the subject leaves the
// frustum or covers < 5% of pixels in any frame.
std::vector<DepthFrame> render_sequence(const IdentityProfile& profile,
                                        const SynthConfig& cfg, int phase0,
                                        Rng& rng);

struct EmitResult {
  std::string manifest_path;
  int file_count = 0;
  int sequence_count = 0;
};

// Writes person_{id}/seq_{n}/frame_{t}.pgm plus manifest.json; deterministic
// per (cfg, seed), byte-identical across runs.
EmitResult emit_dataset(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace g4d

#endif
