#include "g4d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "g4d/pgm.hpp"

namespace g4d {

namespace fs = std::filesystem;

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.num_ids = j.value("num_ids", c.num_ids);
  c.seqs_per_id = j.value("seqs_per_id", c.seqs_per_id);
  c.train_seqs_per_id = j.value("train_seqs_per_id", c.train_seqs_per_id);
  c.frames = j.value("frames", c.frames);
  c.camera = j.value("camera", c.camera);
  c.image_width = j.value("image_width", c.image_width);
  c.image_height = j.value("image_height", c.image_height);
  c.noise_sigma_mm = j.value("noise_sigma_mm", c.noise_sigma_mm);
  c.seed = j.value("seed", c.seed);
  c.gait_drift = j.value("gait_drift", c.gait_drift);
  c.stance_jitter_m = j.value("stance_jitter_m", c.stance_jitter_m);
  if (j.contains("intrinsics")) {
    const auto& in = j["intrinsics"];
    c.intr.fx = in.value("fx", c.intr.fx);
    c.intr.fy = in.value("fy", c.intr.fy);
    c.intr.cx = in.value("cx", c.intr.cx);
    c.intr.cy = in.value("cy", c.intr.cy);
  }
  if (j.contains("ranges")) {
    const auto& r = j["ranges"];
    auto pair = [&](const char* k, double* dst) {
      if (r.contains(k)) {
        dst[0] = r[k][0];
        dst[1] = r[k][1];
      }
    };
    pair("height", c.ranges.height);
    pair("torso_radius", c.ranges.torso_radius);
    pair("head_radius", c.ranges.head_radius);
    pair("limb_length", c.ranges.limb_length);
    pair("step_amplitude", c.ranges.step_amplitude);
    pair("shoulder_rot", c.ranges.shoulder_rot);
    pair("hip_sway_cm", c.ranges.hip_sway_cm);
    pair("walking_speed", c.ranges.walking_speed);
    if (r.contains("gait_period")) {
      c.ranges.gait_period[0] = r["gait_period"][0];
      c.ranges.gait_period[1] = r["gait_period"][1];
    }
  }
  if (c.num_ids < 2) throw std::invalid_argument("synth: num_ids must be >= 2");
  if (c.camera != "frontal" && c.camera != "topdown")
    throw std::invalid_argument("synth: camera must be 'frontal' or 'topdown'");
  if (c.frames < c.ranges.gait_period[1])
    throw std::invalid_argument("synth: frames must cover at least one gait period");
  return c;
}

std::vector<IdentityProfile> sample_identities(int count, uint64_t seed,
                                               const IdentityRanges& r) {
  if (count < 2) throw std::invalid_argument("sample_identities: count must be >= 2");
  std::vector<IdentityProfile> out(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, 0x1d, i));
    IdentityProfile& p = out[i];
    p.height_m = rng.uniform(r.height[0], r.height[1]);
    p.torso_radius_m = rng.uniform(r.torso_radius[0], r.torso_radius[1]);
    p.head_radius_m = rng.uniform(r.head_radius[0], r.head_radius[1]);
    p.limb_length_m = rng.uniform(r.limb_length[0], r.limb_length[1]);
    p.gait_period_frames = rng.uniform_int(r.gait_period[0], r.gait_period[1]);
    p.step_amplitude_rad = rng.uniform(r.step_amplitude[0], r.step_amplitude[1]);
    p.shoulder_rot_rad = rng.uniform(r.shoulder_rot[0], r.shoulder_rot[1]);
    p.hip_sway_cm = rng.uniform(r.hip_sway_cm[0], r.hip_sway_cm[1]);
    p.walking_speed_mps = rng.uniform(r.walking_speed[0], r.walking_speed[1]);
  }
  return out;
}

namespace {

struct V3 {
  double x = 0, y = 0, z = 0;
};
V3 operator+(V3 a, V3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
V3 operator-(V3 a, V3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
V3 operator*(double s, V3 a) { return {s * a.x, s * a.y, s * a.z}; }
double dot(V3 a, V3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(V3 a) { return std::sqrt(dot(a, a)); }

struct Capsule {
  V3 a, b;  // world coords; a == b gives a sphere
  double r;
};

// Articulated figure: head sphere, torso capsule, 4 limbs of 2 capsules each.
// World frame: +Z up, X lateral, Y the facing direction; feet near z = 0.
// All joints are driven by exact-period sinusoids, so frame t and t+P are
// bit-identical before sensor noise.
std::vector<Capsule> body_at_frame(const IdentityProfile& p, int frame, int phase0) {
  const int P = p.gait_period_frames;
  const double ph = 2.0 * M_PI * ((frame + phase0) % P) / P;

  const double hip_z = p.limb_length_m + 0.05;
  const double shoulder_z = std::max(hip_z + 0.15, p.height_m - 2.0 * p.head_radius_m);
  const double sway = p.hip_sway_cm / 100.0 * std::sin(ph);
  const double bob = 0.015 * p.walking_speed_mps * std::sin(2.0 * ph);

  std::vector<Capsule> prim;
  auto at = [&](double x, double y, double z) { return V3{x + sway, y, z + bob}; };

  // torso + head
  prim.push_back({at(0, 0, hip_z), at(0, 0, shoulder_z), p.torso_radius_m});
  const V3 head = at(0, 0, p.height_m - p.head_radius_m);
  prim.push_back({head, head, p.head_radius_m});

  const double l_half = 0.5 * p.limb_length_m;
  const double arm_len = 0.75 * p.limb_length_m;
  const double a_half = 0.5 * arm_len;
  const double shoulder_w = p.torso_radius_m + 0.05;

  for (int side = -1; side <= 1; side += 2) {
    const double sp = ph + (side < 0 ? M_PI : 0.0);
    // leg: swing about the hip in the Y-Z plane, slight knee bend
    const double th = p.step_amplitude_rad * std::sin(sp);
    const double bend = 0.2 * p.step_amplitude_rad * (1.0 + std::cos(sp));
    const V3 hip = at(side * 0.09, 0, hip_z);
    const V3 knee = hip + V3{0, l_half * std::sin(th), -l_half * std::cos(th)};
    const double th2 = th - bend;
    const V3 ankle = knee + V3{0, l_half * std::sin(th2), -l_half * std::cos(th2)};
    prim.push_back({hip, knee, 0.06});
    prim.push_back({knee, ankle, 0.05});

    // arm: counter-swings; shoulder line rotates about the vertical axis
    const double psi = p.shoulder_rot_rad * std::sin(ph);
    const V3 shoulder = at(side * shoulder_w * std::cos(psi),
                           side * shoulder_w * std::sin(psi), shoulder_z - 0.03);
    const double ta = 0.7 * p.step_amplitude_rad * std::sin(sp + M_PI);
    const V3 elbow = shoulder + V3{0, a_half * std::sin(ta), -a_half * std::cos(ta)};
    const double ta2 = ta + 0.3 * p.step_amplitude_rad * (1.0 + std::cos(sp));
    const V3 wrist = elbow + V3{0, a_half * std::sin(ta2), -a_half * std::cos(ta2)};
    prim.push_back({shoulder, elbow, 0.045});
    prim.push_back({elbow, wrist, 0.04});
  }
  return prim;
}

// World -> camera transforms. Camera looks along +z_cam; depth = z_cam.
V3 to_camera(const V3& w, const std::string& pose) {
  if (pose == "topdown") {
    // ceiling camera at 2.55 m looking straight down
    return {w.x, w.y, 2.55 - w.z};
  }
  // frontal camera 2.8 m in front at 0.9 m height, image y pointing down
  return {w.x, -(w.z - 0.9), w.y + 2.8};
}

// Smallest positive ray parameter for r(t) = t*d hitting the capsule, or -1.
double ray_capsule(const V3& d, const Capsule& c) {
  double best = -1.0;
  auto consider = [&](double t) {
    if (t > 1e-6 && (best < 0 || t < best)) best = t;
  };
  auto sphere = [&](const V3& ctr, double r) {
    const double a = dot(d, d);
    const double b = -2.0 * dot(d, ctr);
    const double c0 = dot(ctr, ctr) - r * r;
    const double disc = b * b - 4 * a * c0;
    if (disc < 0) return;
    consider((-b - std::sqrt(disc)) / (2 * a));
  };
  const V3 ab = c.b - c.a;
  const double len = norm(ab);
  if (len < 1e-9) {
    sphere(c.a, c.r);
    return best;
  }
  const V3 u = (1.0 / len) * ab;
  const V3 dp = d - dot(d, u) * u;
  const V3 mp = (0.0 - 1.0) * c.a + dot(c.a, u) * u;  // -a + (a.u)u
  const double a = dot(dp, dp);
  if (a > 1e-12) {
    const double b = 2.0 * dot(mp, dp);
    const double c0 = dot(mp, mp) - c.r * c.r;
    const double disc = b * b - 4 * a * c0;
    if (disc >= 0) {
      const double t = (-b - std::sqrt(disc)) / (2 * a);
      if (t > 1e-6) {
        const double s = dot(t * d - c.a, u);
        if (s >= 0 && s <= len) consider(t);
      }
    }
  }
  sphere(c.a, c.r);
  sphere(c.b, c.r);
  return best;
}

}  // namespace

std::vector<DepthFrame> render_sequence(const IdentityProfile& profile,
                                        const SynthConfig& cfg, int phase0, Rng& rng) {
  std::vector<DepthFrame> frames;
  frames.reserve(cfg.frames);
  const int W = cfg.image_width, H = cfg.image_height;
  const size_t min_pixels = static_cast<size_t>(0.05 * W * H);

  for (int t = 0; t < cfg.frames; ++t) {
    auto body = body_at_frame(profile, t, phase0);
    std::vector<Capsule> cam_body(body.size());
    for (size_t j = 0; j < body.size(); ++j) {
      for (V3* e : {&body[j].a, &body[j].b}) {
        e->x += cfg.stance[0];
        e->y += cfg.stance[1];
      }
      cam_body[j] = {to_camera(body[j].a, cfg.camera), to_camera(body[j].b, cfg.camera),
                     body[j].r};
      // frustum check on capsule endpoints expanded by the radius
      for (const V3* e : {&cam_body[j].a, &cam_body[j].b}) {
        if (e->z < 0.2)
          throw std::runtime_error("render_sequence: subject out of frustum (depth)");
        const double mu = cfg.intr.fx * cam_body[j].r / e->z;
        const double mv = cfg.intr.fy * cam_body[j].r / e->z;
        const double u = e->x * cfg.intr.fx / e->z + cfg.intr.cx;
        const double v = e->y * cfg.intr.fy / e->z + cfg.intr.cy;
        if (u - mu < 0 || u + mu > W - 1 || v - mv < 0 || v + mv > H - 1)
          throw std::runtime_error("render_sequence: subject out of frustum");
      }
    }

    DepthFrame f;
    f.width = W;
    f.height = H;
    f.tau = t;
    f.values.assign(static_cast<size_t>(W) * H, 0);
    size_t hit_count = 0;
    for (int v = 0; v < H; ++v) {
      for (int u = 0; u < W; ++u) {
        const V3 d = {(u - cfg.intr.cx) / cfg.intr.fx, (v - cfg.intr.cy) / cfg.intr.fy,
                      1.0};
        double best = -1.0;
        for (const auto& c : cam_body) {
          const double t_hit = ray_capsule(d, c);
          if (t_hit > 0 && (best < 0 || t_hit < best)) best = t_hit;
        }
        if (best < 0) continue;
        double mm = best * 1000.0;  // d.z == 1, so t is the depth in meters
        if (cfg.noise_sigma_mm > 0) mm += rng.normal(0.0, cfg.noise_sigma_mm);
        const long q = std::lround(mm);
        f.values[static_cast<size_t>(v) * W + u] =
            static_cast<uint16_t>(std::clamp(q, 1l, 65535l));
        ++hit_count;
      }
    }
    if (hit_count < min_pixels)
      throw std::runtime_error("render_sequence: subject covers < 5% of pixels");
    frames.push_back(std::move(f));
  }
  return frames;
}

EmitResult emit_dataset(const SynthConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto ids =
      sample_identities(cfg.num_ids, derive_seed(cfg.seed, 0x1), cfg.ranges);

  nlohmann::json manifest = nlohmann::json::array();
  EmitResult res;
  char buf[64];
  for (int i = 1; i <= cfg.num_ids; ++i) {
    for (int n = 1; n <= cfg.seqs_per_id; ++n) {
      Rng rng(derive_seed(cfg.seed, 0x2, i, n));
      const int phase0 = rng.uniform_int(0, ids[i - 1].gait_period_frames - 1);
      // body shape is identity-stable; gait style and stance drift per walk
      IdentityProfile p = ids[i - 1];
      const double d = cfg.gait_drift;
      p.step_amplitude_rad *= rng.uniform(1.0 - d, 1.0 + d);
      p.shoulder_rot_rad *= rng.uniform(1.0 - d, 1.0 + d);
      p.hip_sway_cm *= rng.uniform(1.0 - d, 1.0 + d);
      p.walking_speed_mps *= rng.uniform(1.0 - d * 0.5, 1.0 + d * 0.5);
      SynthConfig scfg = cfg;
      scfg.stance[0] = rng.uniform(-cfg.stance_jitter_m, cfg.stance_jitter_m);
      scfg.stance[1] = rng.uniform(-cfg.stance_jitter_m, cfg.stance_jitter_m);
      const auto frames = render_sequence(p, scfg, phase0, rng);

      std::snprintf(buf, sizeof buf, "person_%02d/seq_%02d", i, n);
      const std::string rel = buf;
      fs::create_directories(fs::path(out_dir) / rel);
      for (const auto& f : frames) {
        std::snprintf(buf, sizeof buf, "frame_%04d.pgm", f.tau);
        write_pgm16((fs::path(out_dir) / rel / buf).string(), f.width, f.height,
                    f.values);
        ++res.file_count;
      }
      std::snprintf(buf, sizeof buf, "p%02d_s%02d", i, n);
      manifest.push_back({{"sequence_id", std::string(buf)},
                          {"person_id", "person_" + std::to_string(i)},
                          {"split", n <= cfg.train_seqs_per_id ? "train" : "test"},
                          {"frame_glob", rel + "/*.pgm"},
                          {"intrinsics",
                           {{"fx", cfg.intr.fx},
                            {"fy", cfg.intr.fy},
                            {"cx", cfg.intr.cx},
                            {"cy", cfg.intr.cy}}},
                          {"camera_pose", cfg.camera}});
      ++res.sequence_count;
    }
  }
  res.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  std::ofstream out(res.manifest_path);
  if (!out) throw std::runtime_error("emit_dataset: cannot write manifest");
  out << manifest.dump(2) << '\n';
  return res;
}

}  // namespace g4d
