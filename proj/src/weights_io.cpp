#include "amd/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "amd/errors.hpp"

namespace amd {

namespace {

constexpr char kMagic[4] = {'A', 'M', 'D', 'W'};
constexpr std::uint32_t kFormatVersion = 1;

// The format is explicitly little-endian; this library targets LE hosts.
static_assert(sizeof(double) == 8, "f64 layout required");

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("weights file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_weights(const std::string& path, const NamedTensors& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, kFormatVersion);
    write_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const auto& shape = tensor.shape();
        write_u32(os, static_cast<std::uint32_t>(shape.size()));
        for (int d : shape) write_u32(os, static_cast<std::uint32_t>(d));
        const auto& vals = tensor.values();
        os.write(reinterpret_cast<const char*>(vals.data()),
                 static_cast<std::streamsize>(vals.size() * sizeof(double)));
    }
    if (!os) throw DataError("write failed: " + path);
}

NamedTensors load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open weights file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not an AMDW weights file: " + path);
    const std::uint32_t version = read_u32(is);
    if (version != kFormatVersion)
        throw DataError("unsupported weights format version " + std::to_string(version));
    const std::uint32_t count = read_u32(is);
    NamedTensors out;
    out.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw DataError("weights file truncated");
        const std::uint32_t rank = read_u32(is);
        std::vector<int> shape(rank);
        std::int64_t n = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            shape[i] = static_cast<int>(read_u32(is));
            n *= shape[i];
        }
        std::vector<double> values(static_cast<std::size_t>(n));
        is.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!is) throw DataError("weights file truncated");
        out.emplace_back(std::move(name), Tensor::from_values(std::move(shape), std::move(values)));
    }
    return out;
}

const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name) {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw DataError("tensor not found in weights: " + name);
}

}  // namespace amd
