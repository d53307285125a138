#ifndef G4D_PGM_HPP_
#define G4D_PGM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "g4d/voxel.hpp"

namespace g4d {

// Binary P5, maxval 65535, big-endian 16-bit samples; value = depth in mm,
// 0 = invalid.
void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<uint16_t>& values);
DepthFrame read_pgm16(const std::string& path);

// Generic 16-bit grayscale writer (used for heatmaps as well).
}  // namespace g4d

#endif
