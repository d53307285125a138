#ifndef G4D_VOXEL_HPP_
#define G4D_VOXEL_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "g4d/rng.hpp"

namespace g4d {

struct DepthFrame {
  int width = 0, height = 0;
  std::vector<uint16_t> values;  // depth in mm, 0 = invalid
  int tau = 0;                   // frame index within the sequence
};

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  bool valid() const { return fx > 0 && fy > 0; }
};

struct Vec3 {
  double x = 0, y = 0, z = 0;
};
using PointCloud = std::vector<Vec3>;

// Sparse binary 4D occupancy grid; per frame a sorted list of packed
// (x*Y + y)*Z + z cell indices. Dense windows are materialized on demand.
struct VoxelTensor4D {
  int frames = 0;
  std::array<int, 3> dims = {250, 100, 200};  // X, Y, Z
  std::vector<std::vector<uint32_t>> cells;   // size == frames, each sorted

  uint32_t pack(int x, int y, int z) const {
    return (static_cast<uint32_t>(x) * dims[1] + y) * dims[2] + z;
  }
  void unpack(uint32_t c, int& x, int& y, int& z) const {
    z = c % dims[2];
    c /= dims[2];
    y = c % dims[1];
    x = c / dims[1];
  }
  bool occupied(int f, int x, int y, int z) const;
  size_t occupied_count() const;
};

struct LabeledSequence {
  VoxelTensor4D tensor;
  int label = 1;  // class index in [1..C]
  std::string sequence_id;
};

// Pinhole backprojection: one metric point per pixel with depth > 0.
PointCloud backproject(const DepthFrame& frame, const CameraIntrinsics& intr);

// Inverse of backproject for a single point (used by the roundtrip property).
void project(const Vec3& p, const CameraIntrinsics& intr, double& u, double& v,
             double& depth_m);

struct VoxelGridConfig {
  std::array<int, 3> dims = {250, 100, 200};
  // Paper units: x,y cells are 1 cm; z cells are 10 mm.
  std::array<double, 3> cell_m = {0.01, 0.01, 0.01};
  // When true the per-sequence centroid is anchored at the grid center cell;
  // otherwise `origin` is the metric position of cell (0,0,0).
  bool center_origin = true;
  Vec3 origin;
};

struct VoxelizeResult {
  VoxelTensor4D tensor;
  size_t dropped = 0;  // out-of-bounds points
};

// Throws if the input has points but every one lands out of bounds.
VoxelizeResult voxelize(const std::vector<PointCloud>& frames,
                        const VoxelGridConfig& cfg);

struct AugmentConfig {
  double jitter_sigma_m = 0.05;   // per-point gaussian, per axis
  double shift_range_m = 0.05;    // global uniform shift in [-r, +r] per axis
  double scale_lo = 0.8, scale_hi = 1.2;  // global uniform scale about centroid
};

// Point-level augmentation applied before voxelization. Label untouched.
std::vector<PointCloud> augment(const std::vector<PointCloud>& frames,
                                const AugmentConfig& cfg, Rng& rng);

Vec3 centroid_of(const std::vector<PointCloud>& frames);

// Collapses occupancy along z (binary OR) to a single-z-slab tensor; the 2D
// model variant consumes this.
VoxelTensor4D project_z(const VoxelTensor4D& t);

}  // namespace g4d

#endif
