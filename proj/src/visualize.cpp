#include "g4d/visualize.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "g4d/pgm.hpp"

namespace g4d {

namespace fs = std::filesystem;

namespace {

// Deposits a unit of mass as a clipped sigma-cell Gaussian; the kernel is
// renormalized after clipping so the image integral stays equal to the
// number of visits.
void splat(std::vector<double>& img, int W, int H, int cx, int cy, double sigma) {
  const int rad = static_cast<int>(std::ceil(3 * sigma));
  double total = 0;
  for (int dy = -rad; dy <= rad; ++dy)
    for (int dx = -rad; dx <= rad; ++dx) {
      const int x = cx + dx, y = cy + dy;
      if (x < 0 || x >= W || y < 0 || y >= H) continue;
      total += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    }
  if (total <= 0) return;
  for (int dy = -rad; dy <= rad; ++dy)
    for (int dx = -rad; dx <= rad; ++dx) {
      const int x = cx + dx, y = cy + dy;
      if (x < 0 || x >= W || y < 0 || y >= H) continue;
      img[static_cast<size_t>(y) * W + x] +=
          std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / total;
    }
}

}  // namespace

VisualizeResult visualize(const std::vector<LabeledSequence>& seqs,
                          const RamParams& params, const std::string& out_dir) {
  if (seqs.empty()) throw std::invalid_argument("visualize: no sequences");
  fs::create_directories(out_dir);

  const int X = seqs[0].tensor.dims[0], Y = seqs[0].tensor.dims[1];
  std::vector<double> heat(static_cast<size_t>(X) * Y, 0.0);

  nlohmann::json paths = nlohmann::json::array();
  std::ofstream csv(fs::path(out_dir) / "tau_trace.csv");
  csv << "sequence_id,step,tau\n";

  VisualizeResult res;
  Rng rng(0);  // unused in eval mode
  for (const auto& seq : seqs) {
    EpisodeTrace tr = rollout(seq.tensor, seq.label, params, rng, Mode::kEval);
    nlohmann::json steps = nlohmann::json::array();
    int prev_tau = -1;
    for (size_t t = 0; t < tr.steps.size(); ++t) {
      const auto& s = tr.steps[t];
      const int d = params.cfg.dims;
      nlohmann::json js = {
          {"step", t},
          {"mu", std::vector<double>(s.mu.begin(), s.mu.begin() + d)},
          {"phi", std::vector<double>(s.phi.begin(), s.phi.begin() + d)},
          {"center", std::vector<int>(s.center.begin(), s.center.begin() + d)},
          {"pred", s.pred},
          {"correct", s.pred == seq.label}};
      steps.push_back(std::move(js));
      splat(heat, Y, X, s.center[1], s.center[0], 2.0);
      const int tau = d >= 4 ? s.center[3] : 0;
      csv << seq.sequence_id << ',' << t << ',' << tau << '\n';
      if (prev_tau >= 0 && tau < prev_tau) ++res.backward_time_jumps;
      prev_tau = tau;
    }
    paths.push_back({{"sequence_id", seq.sequence_id},
                     {"label", seq.label},
                     {"reward", tr.reward},
                     {"steps", std::move(steps)}});
  }

  res.path_json = (fs::path(out_dir) / "glimpse_paths.json").string();
  std::ofstream(res.path_json) << paths.dump(2) << '\n';
  res.tau_csv = (fs::path(out_dir) / "tau_trace.csv").string();

  const double peak = *std::max_element(heat.begin(), heat.end());
  std::vector<uint16_t> px(heat.size(), 0);
  if (peak > 0)
    for (size_t i = 0; i < heat.size(); ++i)
      px[i] = static_cast<uint16_t>(std::lround(heat[i] / peak * 65535.0));
  res.heatmap_pgm = (fs::path(out_dir) / "visit_heatmap.pgm").string();
  write_pgm16(res.heatmap_pgm, Y, X, px);  // width = Y cells, height = X cells
  return res;
}

}  // namespace g4d
