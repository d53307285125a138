#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "g4d/dataset.hpp"
#include "g4d/synth.hpp"

using namespace g4d;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
}  // namespace

TEST_CASE("sample_identities: determinism, distinctness, range respect") {
  const auto a = sample_identities(2, 42);
  const auto b = sample_identities(2, 42);
  CHECK(a[0].height_m == b[0].height_m);
  CHECK(a[1].gait_period_frames == b[1].gait_period_frames);
  CHECK((a[0].height_m != a[1].height_m || a[0].limb_length_m != a[1].limb_length_m));

  IdentityRanges r;
  const auto many = sample_identities(1000, 7, r);
  for (const auto& p : many) {
    CHECK(p.height_m >= r.height[0]);
    CHECK(p.height_m <= r.height[1]);
    CHECK(p.gait_period_frames >= r.gait_period[0]);
    CHECK(p.gait_period_frames <= r.gait_period[1]);
    CHECK(p.hip_sway_cm >= r.hip_sway_cm[0]);
    CHECK(p.hip_sway_cm <= r.hip_sway_cm[1]);
    CHECK(p.gait_period_frames >= 4);
  }
}

TEST_CASE("render_sequence: periodicity, coverage, monotone size") {
  SynthConfig cfg;
  cfg.noise_sigma_mm = 0.0;
  IdentityProfile p;  // defaults, period 12
  cfg.frames = 24;
  for (const char* cam : {"topdown", "frontal"}) {
    cfg.camera = cam;
    Rng rng(1);
    const auto frames = render_sequence(p, cfg, 0, rng);
    REQUIRE(frames.size() == 24);
    const size_t total = static_cast<size_t>(cfg.image_width) * cfg.image_height;
    for (const auto& f : frames) {
      size_t on = 0;
      for (uint16_t v : f.values) on += v > 0;
      CHECK(on >= total / 20);
    }
    for (int t = 0; t < 12; ++t) CHECK(frames[t].values == frames[t + 12].values);
  }

  // static body renders identical frames
  IdentityProfile still = p;
  still.step_amplitude_rad = 0;
  still.shoulder_rot_rad = 0;
  still.hip_sway_cm = 0;
  still.walking_speed_mps = 0;
  Rng rng(2);
  const auto fr = render_sequence(still, cfg, 0, rng);
  for (size_t t = 1; t < fr.size(); ++t) CHECK(fr[t].values == fr[0].values);

  // taller profile => larger silhouette (frontal view)
  cfg.camera = "frontal";
  IdentityProfile tall = still;
  tall.height_m = 1.95;
  IdentityProfile shortp = still;
  shortp.height_m = 1.50;
  Rng r2(3);
  auto count_on = [](const DepthFrame& f) {
    size_t n = 0;
    for (uint16_t v : f.values) n += v > 0;
    return n;
  };
  CHECK(count_on(render_sequence(tall, cfg, 0, r2)[0]) >
        count_on(render_sequence(shortp, cfg, 0, r2)[0]));
}

TEST_CASE("emit_dataset: layout, determinism, ingest-back") {
  SynthConfig cfg;
  cfg.num_ids = 2;
  cfg.seqs_per_id = 1;
  cfg.train_seqs_per_id = 1;
  cfg.frames = 8;
  cfg.seed = 5;
  // frames >= max gait period for these two ids
  cfg.ranges.gait_period[0] = 6;
  cfg.ranges.gait_period[1] = 8;

  const fs::path dir1 = fs::temp_directory_path() / "g4d_synth_a";
  const fs::path dir2 = fs::temp_directory_path() / "g4d_synth_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const EmitResult r1 = emit_dataset(cfg, dir1.string());
  const EmitResult r2 = emit_dataset(cfg, dir2.string());
  CHECK(r1.file_count == 16);
  CHECK(r1.sequence_count == 2);
  CHECK(fs::exists(dir1 / "person_01" / "seq_01" / "frame_0000.pgm"));

  // byte-identical across runs with the same seed
  for (auto& e : fs::recursive_directory_iterator(dir1)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir1);
    CHECK(slurp(e.path()) == slurp(dir2 / rel));
  }

  // loads through the manifest; every in-bounds point survives voxelization
  const Dataset ds = load_dataset(r1.manifest_path);
  CHECK(ds.num_classes == 2);
  CHECK(ds.sequences.size() == 2);
  for (const auto& s : ds.sequences) {
    CHECK(s.frames.size() == 8);
    size_t n = 0;
    for (const auto& f : s.frames) n += f.size();
    const auto vr = voxelize(s.frames, VoxelGridConfig{});
    // centroid anchoring can push a few floor-level points past the z extent
    CHECK(vr.dropped < n / 100);
    CHECK(vr.tensor.occupied_count() > 0);
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("synth config validation") {
  CHECK_THROWS(synth_config_from_json({{"num_ids", 1}}));
  CHECK_THROWS(synth_config_from_json({{"camera", "sideways"}}));
  CHECK_THROWS(synth_config_from_json({{"frames", 4}}));  // < max gait period
  const SynthConfig ok = synth_config_from_json(
      {{"num_ids", 3}, {"frames", 20}, {"noise_sigma_mm", 10.0}, {"seed", 9}});
  CHECK(ok.num_ids == 3);
  CHECK(ok.noise_sigma_mm == 10.0);
}
