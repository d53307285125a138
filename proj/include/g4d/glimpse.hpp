#ifndef G4D_GLIMPSE_HPP_
#define G4D_GLIMPSE_HPP_

#include <array>
#include <vector>

#include "g4d/voxel.hpp"

namespace g4d {

// Normalized 4D location, each component in [-1, 1] after clamping.
struct GlimpseLocation {
  double x = 0, y = 0, z = 0, tau = 0;

  std::array<double, 4> arr() const { return {x, y, z, tau}; }
  static GlimpseLocation from(const std::array<double, 4>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  GlimpseLocation clamped() const;
};

// dims selects the model variant: 4 = full spatio-temporal, 3 = single-frame
// volume, 2 = z-projected single frame. Patch k spans k*g_s cells along each
// active axis and is average-pooled over k^dims blocks.
struct GlimpseConfig {
  int g_s = 8;
  int G = 5;
  int dims = 4;

  size_t patch_len() const {
    size_t n = 1;
    for (int a = 0; a < dims; ++a) n *= g_s;
    return n;
  }
  size_t flat_len() const { return patch_len() * G; }
  void validate() const;
};

struct GlimpsePyramid {
  std::vector<double> values;  // G patches concatenated, each g_s^dims cells
};

// Linear map of [-1,1] onto [0, dim-1] per axis, round half up; tau maps onto
// [0, f-1]. Returns (x, y, z, frame).
std::array<int, 4> denormalize(const GlimpseLocation& loc,
                               const std::array<int, 3>& dims, int frames);

GlimpsePyramid extract(const VoxelTensor4D& tensor, const GlimpseLocation& loc,
                       const GlimpseConfig& cfg);

}  // namespace g4d

#endif
