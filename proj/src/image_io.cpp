#include "amd/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "amd/errors.hpp"

namespace amd {

namespace {

unsigned char to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(c * 255.0));
}

}  // namespace

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.shape().size() != 3 || image.dim(0) != 3)
        throw DimensionError("write_ppm: image must be 3 x H x W");
    const int h = image.dim(1), w = image.dim(2);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + path);
    os << "P6\n" << w << " " << h << "\n255\n";
    const auto& v = image.values();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane; ++i) {
        unsigned char px[3] = {to_byte(v[i]), to_byte(v[plane + i]), to_byte(v[2 * plane + i])};
        os.write(reinterpret_cast<const char*>(px), 3);
    }
    if (!os) throw DataError("write failed: " + path);
}

void write_pgm(const std::string& path, const std::vector<double>& map, int h, int w,
               double lo, double hi) {
    if (static_cast<std::size_t>(h) * w != map.size())
        throw DimensionError("write_pgm: map size does not match h x w");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + path);
    os << "P5\n" << w << " " << h << "\n255\n";
    const double span = hi - lo;
    for (double v : map) {
        const double t = span > 0.0 ? (v - lo) / span : 0.5;
        const unsigned char b = to_byte(t);
        os.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!os) throw DataError("write failed: " + path);
}

}  // namespace amd
