#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "g4d/ram.hpp"

using namespace g4d;

namespace {

RamParams tiny_ram(int dims, int num_classes, int T, Rng& rng) {
  EncoderConfig ec;
  ec.g_s = 4;
  ec.G = 2;
  ec.dims = dims;
  ec.ch1 = 2;
  ec.ch2 = 2;
  ec.code_dim = 5;
  EncoderParams enc(ec);
  enc.init(rng);
  RamConfig rc;
  rc.T = T;
  rc.dims = dims;
  rc.num_classes = num_classes;
  rc.hidden = 7;
  rc.dropout_p = 0.0;
  rc.glimpse.g_s = ec.g_s;
  rc.glimpse.G = ec.G;
  rc.glimpse.dims = dims;
  RamParams p(rc, enc);
  p.init(rng);
  return p;
}

VoxelTensor4D random_tensor(Rng& rng, int frames) {
  VoxelTensor4D t;
  t.frames = frames;
  t.dims = {16, 16, 16};
  t.cells.resize(frames);
  for (auto& f : t.cells) {
    for (int i = 0; i < 60; ++i)
      f.push_back(t.pack(rng.uniform_int(0, 15), rng.uniform_int(0, 15),
                         rng.uniform_int(0, 15)));
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
  }
  return t;
}

}  // namespace

TEST_CASE("location head: zero params give the grid center, range is open") {
  Tensor W({4, 3}), b({4});
  const auto mu = location_head({0.2, -0.5, 1.0}, W, b, 4);
  for (int a = 0; a < 4; ++a) CHECK(mu[a] == 0.0);

  Tensor W2({2, 2}), b2({2});
  W2.at(0, 0) = 0.7;
  W2.at(0, 1) = -0.2;
  W2.at(1, 0) = 5.0;
  b2[1] = -1.0;
  const auto m = location_head({1.0, 0.0}, W2, b2, 2);
  CHECK(m[0] == doctest::Approx(std::tanh(0.7)).epsilon(1e-12));
  CHECK(m[1] == doctest::Approx(std::tanh(4.0)).epsilon(1e-12));
  CHECK(std::abs(m[1]) < 1.0);
}

TEST_CASE("gaussian log density at the mean") {
  const std::array<double, 4> mu = {0.1, -0.2, 0.3, 0.0};
  // 4 * (-ln(sigma * sqrt(2*pi))) evaluated independently
  const double expected = 4.0 * (-std::log(0.15 * std::sqrt(2.0 * M_PI)));
  CHECK(expected == doctest::Approx(3.91266).epsilon(1e-4));
  CHECK(gaussian_log_density(mu, mu, 0.15, 4) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sample_location: tiny sigma degenerates to the mean; MC mean converges") {
  Rng rng(6);
  const std::array<double, 4> mu = {0.3, -0.4, 0.1, 0.7};
  const auto [phi, logp] = sample_location(mu, 1e-12, 4, rng);
  for (int a = 0; a < 4; ++a) CHECK(phi[a] == doctest::Approx(mu[a]).epsilon(1e-6));

  const double sigma = 0.15;
  const int n = 100000;
  std::array<double, 4> acc = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const auto s = sample_location(mu, sigma, 4, rng).first;
    for (int a = 0; a < 4; ++a) acc[a] += s[a];
  }
  for (int a = 0; a < 4; ++a)
    CHECK(std::abs(acc[a] / n - mu[a]) < 3.0 * sigma / std::sqrt(double(n)));
}

TEST_CASE("action head: uniform tie-break and hand softmax") {
  Tensor W({5, 3}), b({5});
  const auto [probs, pred] = action_head({0.1, 0.2, 0.3}, W, b);
  double sum = 0;
  for (double p : probs) {
    CHECK(p == doctest::Approx(0.2).epsilon(1e-12));
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pred == 1);

  Tensor W2({2, 1}), b2({2});
  W2.at(0, 0) = 1.0;
  const auto [p2, y2] = action_head({1.0}, W2, b2);
  CHECK(p2[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-12));
  CHECK(y2 == 1);
}

TEST_CASE("rollout: T steps, eval determinism, reward rule") {
  Rng rng(42);
  RamParams p = tiny_ram(4, 3, 1, rng);
  const VoxelTensor4D t = random_tensor(rng, 6);

  const EpisodeTrace one = rollout(t, 1, p, rng, Mode::kEval);
  CHECK(one.steps.size() == 1);

  RamParams p8 = tiny_ram(4, 3, 8, rng);
  Rng r1(0), r2(0);
  const EpisodeTrace a = rollout(t, 2, p8, r1, Mode::kEval);
  const EpisodeTrace b = rollout(t, 2, p8, r2, Mode::kEval);
  CHECK(a.steps.size() == 8);
  for (size_t s = 0; s < 8; ++s) {
    CHECK(a.steps[s].phi == b.steps[s].phi);
    CHECK(a.steps[s].pred == b.steps[s].pred);
    CHECK(a.steps[s].center == b.steps[s].center);
    // eval mode: phi == mu
    CHECK(a.steps[s].phi == a.steps[s].mu);
  }
  // reward depends only on the final step
  const int final_pred = a.steps.back().pred;
  const EpisodeTrace hit = rollout(t, final_pred, p8, r1, Mode::kEval);
  CHECK(hit.reward == 1.0);
  const int wrong = final_pred == 1 ? 2 : 1;
  const EpisodeTrace miss = rollout(t, wrong, p8, r1, Mode::kEval);
  CHECK(miss.reward == 0.0);
}

TEST_CASE("trace centers are reachable via denormalize(clamp(phi))") {
  Rng rng(9);
  RamParams p = tiny_ram(4, 2, 5, rng);
  const VoxelTensor4D t = random_tensor(rng, 4);
  const EpisodeTrace tr = rollout(t, 1, p, rng, Mode::kTrain);
  // step t glimpses at the location chosen at step t-1 (phi_0 = origin)
  std::array<double, 4> prev = {0, 0, 0, 0};
  for (const auto& s : tr.steps) {
    const auto expect =
        denormalize(GlimpseLocation::from(prev).clamped(), t.dims, t.frames);
    CHECK(s.center == expect);
    prev = s.phi;
  }
}

TEST_CASE("train-mode sampling differs across rng streams") {
  Rng rng(15);
  RamParams p = tiny_ram(3, 2, 4, rng);
  const VoxelTensor4D t = random_tensor(rng, 1);
  Rng ra(1), rb(2);
  const EpisodeTrace a = rollout(t, 1, p, ra, Mode::kTrain);
  const EpisodeTrace b = rollout(t, 1, p, rb, Mode::kTrain);
  bool any_diff = false;
  for (size_t s = 0; s < a.steps.size(); ++s)
    if (a.steps[s].phi != b.steps[s].phi) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("dims variants produce dims-component policies") {
  Rng rng(3);
  for (int dims : {2, 3, 4}) {
    RamParams p = tiny_ram(dims, 2, 2, rng);
    VoxelTensor4D t = random_tensor(rng, dims == 4 ? 4 : 1);
    if (dims == 2) t = project_z(t);
    const EpisodeTrace tr = rollout(t, 1, p, rng, Mode::kEval);
    for (const auto& s : tr.steps)
      for (int a = dims; a < 4; ++a) CHECK(s.mu[a] == 0.0);
  }
}
