#pragma once

#include <string>
#include <vector>

#include "amd/tensor.hpp"

namespace amd {

/// Writes a 3 x H x W tensor with values in [0,1] as binary PPM (P6).
void write_ppm(const std::string& path, const Tensor& image);

/// Writes an h x w map as 8-bit binary PGM (P5) after min-max normalization
/// with the given bounds (lo == hi collapses to mid-gray).
void write_pgm(const std::string& path, const std::vector<double>& map, int h, int w,
               double lo, double hi);

}  // namespace amd
