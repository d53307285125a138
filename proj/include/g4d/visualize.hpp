#ifndef G4D_VISUALIZE_HPP_
#define G4D_VISUALIZE_HPP_

#include <string>
#include <vector>

#include "g4d/ram.hpp"
#include "g4d/voxel.hpp"

namespace g4d {

struct VisualizeResult {
  std::string path_json;     // glimpse_paths.json
  std::string heatmap_pgm;   // visit_heatmap.pgm
  std::string tau_csv;       // tau_trace.csv
  int backward_time_jumps = 0;  // steps where glimpsed tau decreased
};

// Runs one eval-mode rollout per sequence and writes:
//  - glimpse_paths.json: per sequence, per step mu/phi in [-1,1], the grid
//    center, the prediction and whether it matches the label
//  - visit_heatmap.pgm: x-y visit counts smoothed with a sigma=2 Gaussian and
//    rescaled to [0, 65535]
//  - tau_trace.csv: sequence_id,step,tau rows, one per glimpse
VisualizeResult visualize(const std::vector<LabeledSequence>& seqs,
                          const RamParams& params, const std::string& out_dir);

}  // namespace g4d

#endif
