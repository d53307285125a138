#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "g4d/pgm.hpp"
#include "g4d/voxel.hpp"

using namespace g4d;

namespace {
DepthFrame make_frame(int w, int h) {
  DepthFrame f;
  f.width = w;
  f.height = h;
  f.values.assign(static_cast<size_t>(w) * h, 0);
  return f;
}
}  // namespace

TEST_CASE("backproject basics") {
  CameraIntrinsics intr{100.0, 100.0, 32.0, 24.0};
  DepthFrame f = make_frame(64, 48);
  CHECK(backproject(f, intr).empty());

  f.values[24 * 64 + 32] = 1000;  // principal point, 1 m
  auto pts = backproject(f, intr);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].x == doctest::Approx(0.0));
  CHECK(pts[0].y == doctest::Approx(0.0));
  CHECK(pts[0].z == doctest::Approx(1.0));

  // pixel (cx + fx, cy), depth 2000 mm -> (2, 0, 2) m; use fx=10 to stay in frame
  CameraIntrinsics i2{10.0, 10.0, 32.0, 24.0};
  f.values.assign(f.values.size(), 0);
  f.values[24 * 64 + 42] = 2000;
  pts = backproject(f, i2);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].x == doctest::Approx(2.0));
  CHECK(pts[0].y == doctest::Approx(0.0));
  CHECK(pts[0].z == doctest::Approx(2.0));
}

TEST_CASE("backproject/project roundtrip") {
  CameraIntrinsics intr{70.0, 75.0, 47.5, 42.0};
  DepthFrame f = make_frame(96, 96);
  Rng rng(4);
  for (int i = 0; i < 200; ++i)
    f.values[rng.uniform_int(0, 96 * 96 - 1)] = static_cast<uint16_t>(rng.uniform_int(500, 5000));
  for (const auto& p : backproject(f, intr)) {
    double u, v, d;
    project(p, intr, u, v, d);
    const int ui = static_cast<int>(std::lround(u)), vi = static_cast<int>(std::lround(v));
    CHECK(std::abs(u - ui) < 1e-9);
    CHECK(std::abs(v - vi) < 1e-9);
    CHECK(f.values[static_cast<size_t>(vi) * 96 + ui] ==
          static_cast<uint16_t>(std::lround(d * 1000)));
  }
}

TEST_CASE("voxelize unit conversion and binariness") {
  VoxelGridConfig cfg;
  cfg.center_origin = false;
  cfg.origin = {0, 0, 0};
  std::vector<PointCloud> frames(1);
  CHECK(voxelize(frames, cfg).tensor.occupied_count() == 0);

  frames[0].push_back({0.50, 0.30, 1.20});
  frames[0].push_back({0.501, 0.302, 1.204});  // same cell
  const auto r = voxelize(frames, cfg);
  CHECK(r.dropped == 0);
  CHECK(r.tensor.occupied_count() == 1);
  CHECK(r.tensor.occupied(0, 50, 30, 120));
}

TEST_CASE("voxelize drops out-of-bounds and throws when all out") {
  VoxelGridConfig cfg;
  cfg.center_origin = false;
  cfg.origin = {0, 0, 0};
  std::vector<PointCloud> frames(1);
  frames[0].push_back({0.1, 0.1, 0.1});
  frames[0].push_back({-5.0, 0.1, 0.1});
  const auto r = voxelize(frames, cfg);
  CHECK(r.dropped == 1);
  CHECK(r.tensor.occupied_count() == 1);

  frames[0] = {{-5, -5, -5}, {99, 99, 99}};
  CHECK_THROWS(voxelize(frames, cfg));
}

TEST_CASE("voxelize is permutation invariant") {
  VoxelGridConfig cfg;
  Rng rng(8);
  std::vector<PointCloud> frames(3);
  for (auto& fr : frames)
    for (int i = 0; i < 50; ++i)
      fr.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3), rng.uniform(-0.8, 0.8)});
  auto shuffled = frames;
  for (auto& fr : shuffled) std::shuffle(fr.begin(), fr.end(), rng.engine());
  CHECK(voxelize(frames, cfg).tensor.cells == voxelize(shuffled, cfg).tensor.cells);
}

TEST_CASE("augment identity, determinism, scale about centroid") {
  std::vector<PointCloud> frames(2);
  frames[0] = {{0.1, 0.2, 0.3}, {-0.1, 0.0, 0.5}};
  frames[1] = {{0.0, 0.1, 0.4}};

  AugmentConfig id;
  id.jitter_sigma_m = 0;
  id.shift_range_m = 0;
  id.scale_lo = id.scale_hi = 1.0;
  Rng rng(1);
  const auto same = augment(frames, id, rng);
  for (size_t f = 0; f < frames.size(); ++f)
    for (size_t i = 0; i < frames[f].size(); ++i) {
      CHECK(same[f][i].x == frames[f][i].x);
      CHECK(same[f][i].y == frames[f][i].y);
      CHECK(same[f][i].z == frames[f][i].z);
    }

  AugmentConfig full;
  Rng a(77), b(77);
  const auto r1 = augment(frames, full, a);
  const auto r2 = augment(frames, full, b);
  for (size_t f = 0; f < r1.size(); ++f)
    for (size_t i = 0; i < r1[f].size(); ++i) CHECK(r1[f][i].x == r2[f][i].x);

  AugmentConfig sc;
  sc.jitter_sigma_m = 0;
  sc.shift_range_m = 0;
  sc.scale_lo = sc.scale_hi = 1.2;
  std::vector<PointCloud> pts(1);
  const Vec3 c = centroid_of(frames);
  pts[0] = {{c.x + 0.10, c.y + 0.10, c.z + 0.10}, {c.x - 0.10, c.y - 0.10, c.z - 0.10}};
  Rng r(3);
  const auto scaled = augment(pts, sc, r);
  const Vec3 c2 = centroid_of(pts);
  CHECK(scaled[0][0].x - c2.x == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(scaled[0][0].y - c2.y == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(scaled[0][0].z - c2.z == doctest::Approx(0.12).epsilon(1e-12));
}

TEST_CASE("project_z collapses occupancy") {
  VoxelTensor4D t;
  t.frames = 1;
  t.dims = {8, 8, 8};
  t.cells.resize(1);
  t.cells[0] = {t.pack(2, 3, 1), t.pack(2, 3, 6), t.pack(5, 0, 7)};
  std::sort(t.cells[0].begin(), t.cells[0].end());
  const auto p = project_z(t);
  CHECK(p.dims[2] == 1);
  CHECK(p.occupied_count() == 2);
  CHECK(p.occupied(0, 2, 3, 0));
  CHECK(p.occupied(0, 5, 0, 0));
}

TEST_CASE("pgm 16-bit roundtrip") {
  const auto path = std::filesystem::temp_directory_path() / "g4d_test_roundtrip.pgm";
  std::vector<uint16_t> vals(12 * 5);
  Rng rng(2);
  for (auto& v : vals) v = static_cast<uint16_t>(rng.uniform_int(0, 65535));
  write_pgm16(path.string(), 12, 5, vals);
  const DepthFrame f = read_pgm16(path.string());
  CHECK(f.width == 12);
  CHECK(f.height == 5);
  CHECK(f.values == vals);
  std::filesystem::remove(path);
}
