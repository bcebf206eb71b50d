#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "amd/tensor.hpp"

namespace amd {

/// Axis-aligned rectangle in normalized image coordinates, x across the
/// width, y down the height, bounds in [0,1].
struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// One renderable attribute: when the bit is set, the region is filled with
/// the attribute color and the footprint is recorded as a ground-truth mask.
struct AttributeSpec {
    std::string name;
    Rect region;
    std::array<double, 3> color{};
    double frequency = 0.5;  // marginal P(bit = 1), in (0,1)
};

struct AttributeSchema {
    int image_height = 64;
    int image_width = 32;
    std::vector<AttributeSpec> attributes;

    int attribute_count() const { return static_cast<int>(attributes.size()); }

    /// Desk-scale default: 8 attributes, two large-area clothing colors at
    /// 50% frequency and six small accessories at 10-40%, mirroring the
    /// imbalance between large and small attributes.
    static AttributeSchema desk_default();

    /// First m attributes of an extended fixed palette (m in 2..12).
    static AttributeSchema with_attribute_count(int m);

    void validate() const;
};

struct PersonRecord {
    Tensor image;  // 3 x H x W, values in [0,1]
    int id = 0;
    int camera = 0;
    std::vector<std::uint8_t> attributes;                 // length M, ID-level
    std::vector<std::vector<std::uint8_t>> region_masks;  // M masks of H*W bytes; empty-of-ones iff bit 0
};

struct DatasetSplit {
    AttributeSchema schema;
    std::vector<PersonRecord> train;
    std::vector<PersonRecord> query;
    std::vector<PersonRecord> gallery;
    std::vector<std::string> warnings;  // e.g. IDs excluded from Q
};

/// Renders n_ids * images_per_id attribute-grounded records. Every ID draws
/// a distinct attribute vector from the schema marginals (resampled on
/// collision); cameras are assigned round-robin per image with
/// camera-dependent photometric casts plus per-image photometric and
/// geometric jitter. Deterministic in seed.
std::vector<PersonRecord> generate_dataset(const AttributeSchema& schema, int n_ids,
                                           int images_per_id, int n_cameras, std::uint64_t seed);

/// ID-disjoint train/test split; within test IDs one image per camera goes
/// to the query set where possible and the rest to the gallery. Test IDs
/// visible in a single camera are excluded from Q with a warning.
DatasetSplit split_dataset(const std::vector<PersonRecord>& records, double test_fraction,
                           std::uint64_t seed);

/// Directory layout: manifest.json + images.bin (raw f64) + masks.bin (u8).
/// Round trip is lossless.
void save_dataset(const DatasetSplit& split, const std::string& dir);
DatasetSplit load_dataset(const std::string& dir);

/// PPM export of up to `limit` records per split section, for inspection.
void export_ppm_samples(const DatasetSplit& split, const std::string& dir, int limit);

}  // namespace amd
