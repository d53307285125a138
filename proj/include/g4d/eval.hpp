#ifndef G4D_EVAL_HPP_
#define G4D_EVAL_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "g4d/voxel.hpp"

namespace g4d {

// Rows are test items, columns are the C classes; higher score = more likely.
// Labels are 1-based.
struct ScoreMatrix {
  std::vector<std::vector<double>> scores;
  std::vector<int> labels;
  int num_classes = 0;
};

struct EvalReport {
  double top1 = 0;                // %
  std::vector<double> cmc;        // cmc[k-1] = CMC(k) in %, k = 1..C
  double nauc = 0;                // mean of CMC over ranks, %
  std::vector<double> per_class_accuracy;  // %
};

// CMC(k) = % of rows whose true label ranks within the top k (ties broken by
// lowest class index); nAUC = mean of CMC(k) over k = 1..C.
EvalReport cmc(const ScoreMatrix& m);

enum class MultishotScheme { kVote, kMeanLogProb };

struct MultishotResult {
  int pred = 1;
  std::vector<double> scores;  // per-class aggregate usable as a ScoreMatrix row
};

// frame_probs: per-frame class distributions for one sequence.
MultishotResult multishot(const std::vector<std::vector<double>>& frame_probs,
                          MultishotScheme scheme);

// Gait energy image: per-sequence mean of per-frame binary silhouettes
// (occupancy projected along z onto the fixed x-y grid); 1-NN by Euclidean
// distance, scores = negated distances.
std::vector<double> gait_energy_image(const VoxelTensor4D& tensor);

EvalReport gei_baseline(const std::vector<LabeledSequence>& train,
                        const std::vector<LabeledSequence>& test,
                        ScoreMatrix* scores_out = nullptr);

nlohmann::json report_to_json(const EvalReport& r);
void write_cmc_csv(const std::string& path, const EvalReport& r);

}  // namespace g4d

#endif
