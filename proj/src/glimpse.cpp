#include "g4d/glimpse.hpp"

#include <cmath>
#include <stdexcept>

namespace g4d {

GlimpseLocation GlimpseLocation::clamped() const {
  auto cl = [](double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); };
  return {cl(x), cl(y), cl(z), cl(tau)};
}

void GlimpseConfig::validate() const {
  if (g_s < 2 || g_s % 2 != 0) throw std::invalid_argument("glimpse: g_s must be even, >= 2");
  if (G < 1) throw std::invalid_argument("glimpse: G must be >= 1");
  if (dims < 2 || dims > 4) throw std::invalid_argument("glimpse: dims must be 2, 3 or 4");
}

std::array<int, 4> denormalize(const GlimpseLocation& loc,
                               const std::array<int, 3>& dims, int frames) {
  const GlimpseLocation c = loc.clamped();
  auto map = [](double v, int dim) {
    return static_cast<int>(std::floor((v + 1.0) * 0.5 * (dim - 1) + 0.5));
  };
  return {map(c.x, dims[0]), map(c.y, dims[1]), map(c.z, dims[2]), map(c.tau, frames)};
}

GlimpsePyramid extract(const VoxelTensor4D& tensor, const GlimpseLocation& loc,
                       const GlimpseConfig& cfg) {
  cfg.validate();
  if (tensor.frames < 1) throw std::invalid_argument("extract: empty tensor");
  const auto c = denormalize(loc, tensor.dims, tensor.frames);

  GlimpsePyramid pyr;
  pyr.values.assign(cfg.flat_len(), 0.0);
  const size_t plen = cfg.patch_len();

  for (int k = 1; k <= cfg.G; ++k) {
    const int half = k * cfg.g_s / 2;
    const int L = k * cfg.g_s;
    // Window spans [c - L/2, c + L/2 - 1] per active axis.
    const int sx = c[0] - half, sy = c[1] - half;
    const int sz = cfg.dims >= 3 ? c[2] - half : 0;
    const int st = cfg.dims == 4 ? c[3] - half : c[3];

    std::vector<int> count(plen, 0);
    const int f_lo = cfg.dims == 4 ? std::max(0, st) : st;
    const int f_hi = cfg.dims == 4 ? std::min(tensor.frames - 1, st + L - 1) : st;
    for (int f = f_lo; f <= f_hi; ++f) {
      if (f < 0 || f >= tensor.frames) continue;
      const int bt = cfg.dims == 4 ? (f - st) / k : 0;
      for (uint32_t cell : tensor.cells[f]) {
        int x, y, z;
        tensor.unpack(cell, x, y, z);
        if (x < sx || x >= sx + L || y < sy || y >= sy + L) continue;
        if (cfg.dims >= 3 && (z < sz || z >= sz + L)) continue;
        const int bx = (x - sx) / k, by = (y - sy) / k;
        size_t bin = static_cast<size_t>(bx) * cfg.g_s + by;
        if (cfg.dims >= 3) bin = bin * cfg.g_s + (z - sz) / k;
        if (cfg.dims == 4) bin = bin * cfg.g_s + bt;
        ++count[bin];
      }
    }
    double block = 1.0;
    for (int a = 0; a < cfg.dims; ++a) block *= k;
    double* out = &pyr.values[static_cast<size_t>(k - 1) * plen];
    for (size_t j = 0; j < plen; ++j) out[j] = count[j] / block;
  }
  return pyr;
}

}  // namespace g4d
