#ifndef G4D_DATASET_HPP_
#define G4D_DATASET_HPP_

#include <string>
#include <vector>

#include "g4d/trainer.hpp"
#include "g4d/voxel.hpp"

namespace g4d {

struct DatasetSequence {
  std::string sequence_id;
  std::string person_id;
  std::string split;               // "train" | "test"
  std::vector<PointCloud> frames;  // gravity-aligned metric points (z up)
};

struct Dataset {
  std::vector<DatasetSequence> sequences;
  std::vector<std::string> classes;  // sorted person ids; label = index + 1
  int num_classes = 0;

  int label_of(const std::string& person_id) const;
  std::vector<TrainExample> split_examples(const std::string& split,
                                           int frame_stride = 1) const;
  // One single-frame example per (sequence, kept frame); the 3D/2D variants
  // train on these.
  std::vector<TrainExample> split_frame_examples(const std::string& split,
                                                 int frame_stride = 1) const;
};

// Reads manifest.json (array of {sequence_id, person_id, split, frame_glob,
// intrinsics, camera_pose}), loads every referenced PGM, backprojects it and
// remaps axes so z points up regardless of camera pose. Globs are relative to
// the manifest's directory; only '*' wildcards are supported.
Dataset load_dataset(const std::string& manifest_path);

}  // namespace g4d

#endif
