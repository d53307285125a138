#include "g4d/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace g4d {

EvalReport cmc(const ScoreMatrix& m) {
  if (m.scores.empty()) throw std::invalid_argument("cmc: empty score matrix");
  const int C = m.num_classes;
  if (C < 2) throw std::invalid_argument("cmc: need at least 2 classes");

  EvalReport r;
  r.cmc.assign(C, 0.0);
  std::vector<int> class_total(C, 0), class_correct(C, 0);

  for (size_t row = 0; row < m.scores.size(); ++row) {
    const auto& s = m.scores[row];
    if (static_cast<int>(s.size()) != C)
      throw std::invalid_argument("cmc: row width != num_classes");
    const int y = m.labels[row] - 1;
    // Rank with lowest-class-index tie-break: classes that sort strictly
    // ahead of the true one.
    int ahead = 0;
    for (int j = 0; j < C; ++j) {
      if (j == y) continue;
      if (s[j] > s[y] || (s[j] == s[y] && j < y)) ++ahead;
    }
    const int rank = ahead + 1;
    for (int k = rank; k <= C; ++k) r.cmc[k - 1] += 1.0;
    ++class_total[y];
    if (rank == 1) ++class_correct[y];
  }

  const double n = static_cast<double>(m.scores.size());
  double sum = 0.0;
  for (int k = 0; k < C; ++k) {
    r.cmc[k] = 100.0 * r.cmc[k] / n;
    sum += r.cmc[k];
  }
  r.top1 = r.cmc[0];
  r.nauc = sum / C;
  r.per_class_accuracy.assign(C, 0.0);
  for (int j = 0; j < C; ++j)
    if (class_total[j])
      r.per_class_accuracy[j] = 100.0 * class_correct[j] / class_total[j];
  return r;
}

MultishotResult multishot(const std::vector<std::vector<double>>& frame_probs,
                          MultishotScheme scheme) {
  if (frame_probs.empty()) throw std::invalid_argument("multishot: no frames");
  const int C = static_cast<int>(frame_probs[0].size());
  MultishotResult res;
  res.scores.assign(C, 0.0);
  if (scheme == MultishotScheme::kVote) {
    std::vector<int> votes(C, 0);
    for (const auto& p : frame_probs) {
      int best = 0;
      for (int j = 1; j < C; ++j)
        if (p[j] > p[best]) best = j;
      ++votes[best];
    }
    for (int j = 0; j < C; ++j) res.scores[j] = votes[j];
    int best = 0;
    for (int j = 1; j < C; ++j)
      if (votes[j] > votes[best]) best = j;
    res.pred = best + 1;
  } else {
    for (const auto& p : frame_probs)
      for (int j = 0; j < C; ++j)
        res.scores[j] += std::log(std::max(1e-300, p[j]));
    for (int j = 0; j < C; ++j) res.scores[j] /= frame_probs.size();
    int best = 0;
    for (int j = 1; j < C; ++j)
      if (res.scores[j] > res.scores[best]) best = j;
    res.pred = best + 1;
  }
  return res;
}

std::vector<double> gait_energy_image(const VoxelTensor4D& t) {
  const size_t plane = static_cast<size_t>(t.dims[0]) * t.dims[1];
  std::vector<double> gei(plane, 0.0);
  if (t.frames == 0) return gei;
  std::vector<char> sil(plane);
  for (int f = 0; f < t.frames; ++f) {
    std::fill(sil.begin(), sil.end(), 0);
    for (uint32_t c : t.cells[f]) {
      int x, y, z;
      t.unpack(c, x, y, z);
      sil[static_cast<size_t>(x) * t.dims[1] + y] = 1;
    }
    for (size_t j = 0; j < plane; ++j) gei[j] += sil[j];
  }
  for (double& v : gei) v /= t.frames;
  return gei;
}

EvalReport gei_baseline(const std::vector<LabeledSequence>& train,
                        const std::vector<LabeledSequence>& test,
                        ScoreMatrix* scores_out) {
  if (train.empty() || test.empty())
    throw std::invalid_argument("gei_baseline: empty split");
  int C = 0;
  for (const auto& s : train) C = std::max(C, s.label);
  for (const auto& s : test) C = std::max(C, s.label);

  std::vector<std::vector<double>> train_gei;
  train_gei.reserve(train.size());
  for (const auto& s : train) train_gei.push_back(gait_energy_image(s.tensor));

  ScoreMatrix m;
  m.num_classes = C;
  for (const auto& s : test) {
    const auto g = gait_energy_image(s.tensor);
    std::vector<double> row(C, -std::numeric_limits<double>::infinity());
    for (size_t j = 0; j < train.size(); ++j) {
      double d2 = 0.0;
      for (size_t k = 0; k < g.size(); ++k) {
        const double d = g[k] - train_gei[j][k];
        d2 += d * d;
      }
      const double score = -std::sqrt(d2);
      row[train[j].label - 1] = std::max(row[train[j].label - 1], score);
    }
    // Classes absent from training keep -inf and can never rank ahead.
    m.scores.push_back(std::move(row));
    m.labels.push_back(s.label);
  }
  if (scores_out) *scores_out = m;
  return cmc(m);
}

nlohmann::json report_to_json(const EvalReport& r) {
  return {{"top1", r.top1},
          {"cmc", r.cmc},
          {"nauc", r.nauc},
          {"per_class_accuracy", r.per_class_accuracy}};
}

void write_cmc_csv(const std::string& path, const EvalReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "rank,cmc_percent\n";
  for (size_t k = 0; k < r.cmc.size(); ++k) out << (k + 1) << ',' << r.cmc[k] << '\n';
}

}  // namespace g4d
