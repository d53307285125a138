#include "g4d/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace g4d {

bool VoxelTensor4D::occupied(int f, int x, int y, int z) const {
  if (f < 0 || f >= frames) return false;
  if (x < 0 || x >= dims[0] || y < 0 || y >= dims[1] || z < 0 || z >= dims[2])
    return false;
  const uint32_t c = pack(x, y, z);
  const auto& v = cells[f];
  return std::binary_search(v.begin(), v.end(), c);
}

size_t VoxelTensor4D::occupied_count() const {
  size_t n = 0;
  for (const auto& v : cells) n += v.size();
  return n;
}

PointCloud backproject(const DepthFrame& frame, const CameraIntrinsics& intr) {
  if (!intr.valid()) throw std::invalid_argument("backproject: invalid intrinsics");
  if (frame.values.size() != static_cast<size_t>(frame.width) * frame.height)
    throw std::invalid_argument("backproject: malformed frame");
  PointCloud pts;
  pts.reserve(frame.values.size() / 8);
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const uint16_t raw = frame.values[static_cast<size_t>(v) * frame.width + u];
      if (raw == 0) continue;
      const double d = raw / 1000.0;  // mm -> m
      pts.push_back({(u - intr.cx) * d / intr.fx, (v - intr.cy) * d / intr.fy, d});
    }
  }
  return pts;
}

void project(const Vec3& p, const CameraIntrinsics& intr, double& u, double& v,
             double& depth_m) {
  depth_m = p.z;
  u = p.x * intr.fx / p.z + intr.cx;
  v = p.y * intr.fy / p.z + intr.cy;
}

Vec3 centroid_of(const std::vector<PointCloud>& frames) {
  Vec3 c;
  size_t n = 0;
  for (const auto& f : frames)
    for (const auto& p : f) {
      c.x += p.x;
      c.y += p.y;
      c.z += p.z;
      ++n;
    }
  if (n) {
    c.x /= n;
    c.y /= n;
    c.z /= n;
  }
  return c;
}

VoxelizeResult voxelize(const std::vector<PointCloud>& frames,
                        const VoxelGridConfig& cfg) {
  VoxelizeResult res;
  res.tensor.frames = static_cast<int>(frames.size());
  res.tensor.dims = cfg.dims;
  res.tensor.cells.resize(frames.size());
  if (frames.empty()) {
    res.tensor.frames = 0;
    return res;
  }

  Vec3 origin = cfg.origin;
  if (cfg.center_origin) {
    const Vec3 c = centroid_of(frames);
    origin.x = c.x - (cfg.dims[0] / 2) * cfg.cell_m[0];
    origin.y = c.y - (cfg.dims[1] / 2) * cfg.cell_m[1];
    origin.z = c.z - (cfg.dims[2] / 2) * cfg.cell_m[2];
  }

  size_t total = 0;
  for (size_t f = 0; f < frames.size(); ++f) {
    auto& out = res.tensor.cells[f];
    out.reserve(frames[f].size());
    for (const auto& p : frames[f]) {
      ++total;
      const int ix = static_cast<int>(std::floor((p.x - origin.x) / cfg.cell_m[0]));
      const int iy = static_cast<int>(std::floor((p.y - origin.y) / cfg.cell_m[1]));
      const int iz = static_cast<int>(std::floor((p.z - origin.z) / cfg.cell_m[2]));
      if (ix < 0 || ix >= cfg.dims[0] || iy < 0 || iy >= cfg.dims[1] || iz < 0 ||
          iz >= cfg.dims[2]) {
        ++res.dropped;
        continue;
      }
      out.push_back(res.tensor.pack(ix, iy, iz));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  if (total > 0 && res.dropped == total)
    throw std::runtime_error("voxelize: every point out of bounds (check grid origin)");
  return res;
}

std::vector<PointCloud> augment(const std::vector<PointCloud>& frames,
                                const AugmentConfig& cfg, Rng& rng) {
  const Vec3 c = centroid_of(frames);
  const double scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  const Vec3 shift = {rng.uniform(-cfg.shift_range_m, cfg.shift_range_m),
                      rng.uniform(-cfg.shift_range_m, cfg.shift_range_m),
                      rng.uniform(-cfg.shift_range_m, cfg.shift_range_m)};
  std::vector<PointCloud> out(frames.size());
  for (size_t f = 0; f < frames.size(); ++f) {
    out[f].reserve(frames[f].size());
    for (const auto& p : frames[f]) {
      Vec3 q;
      q.x = c.x + scale * (p.x - c.x) + shift.x + rng.normal(0.0, cfg.jitter_sigma_m);
      q.y = c.y + scale * (p.y - c.y) + shift.y + rng.normal(0.0, cfg.jitter_sigma_m);
      q.z = c.z + scale * (p.z - c.z) + shift.z + rng.normal(0.0, cfg.jitter_sigma_m);
      out[f].push_back(q);
    }
  }
  return out;
}

VoxelTensor4D project_z(const VoxelTensor4D& t) {
  VoxelTensor4D out;
  out.frames = t.frames;
  out.dims = {t.dims[0], t.dims[1], 1};
  out.cells.resize(t.frames);
  for (int f = 0; f < t.frames; ++f) {
    auto& dst = out.cells[f];
    dst.reserve(t.cells[f].size());
    for (uint32_t c : t.cells[f]) {
      int x, y, z;
      t.unpack(c, x, y, z);
      dst.push_back(out.pack(x, y, 0));
    }
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
  }
  return out;
}

}  // namespace g4d
