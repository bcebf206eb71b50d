#include "amd/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "amd/image_io.hpp"
#include "amd/rng.hpp"

namespace amd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint32_t kManifestVersion = 1;

struct PixelRect {
    int x0, y0, x1, y1;  // half-open
    bool empty() const { return x0 >= x1 || y0 >= y1; }
};

PixelRect to_pixels(const Rect& r, int h, int w, int dx, int dy) {
    PixelRect p;
    p.x0 = std::clamp(static_cast<int>(std::lround(r.x0 * w)) + dx, 0, w);
    p.x1 = std::clamp(static_cast<int>(std::lround(r.x1 * w)) + dx, 0, w);
    p.y0 = std::clamp(static_cast<int>(std::lround(r.y0 * h)) + dy, 0, h);
    p.y1 = std::clamp(static_cast<int>(std::lround(r.y1 * h)) + dy, 0, h);
    return p;
}

void fill_rect(std::vector<double>& img, int h, int w, const PixelRect& r,
               const std::array<double, 3>& color) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int c = 0; c < 3; ++c)
        for (int y = r.y0; y < r.y1; ++y)
            for (int x = r.x0; x < r.x1; ++x)
                img[c * plane + static_cast<std::size_t>(y) * w + x] = color[static_cast<std::size_t>(c)];
}

void mark_rect(std::vector<std::uint8_t>& mask, int w, const PixelRect& r) {
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x) mask[static_cast<std::size_t>(y) * w + x] = 1;
}

// Fixed per-camera color cast; cameras differ mostly in tint and gain.
std::array<double, 3> camera_tint(int camera) {
    const double phase = 2.39996322972865332 * camera;  // golden-angle spacing
    return {0.05 * std::sin(phase), 0.05 * std::sin(phase + 2.0944),
            0.05 * std::sin(phase + 4.1888)};
}

std::vector<std::uint8_t> sample_attribute_vector(const AttributeSchema& schema, Rng& rng) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(schema.attribute_count()));
    for (std::size_t k = 0; k < bits.size(); ++k)
        bits[k] = rng.bernoulli(schema.attributes[k].frequency) ? 1 : 0;
    return bits;
}

json schema_to_json(const AttributeSchema& s) {
    json attrs = json::array();
    for (const auto& a : s.attributes) {
        attrs.push_back({{"name", a.name},
                         {"region", {a.region.x0, a.region.y0, a.region.x1, a.region.y1}},
                         {"color", {a.color[0], a.color[1], a.color[2]}},
                         {"frequency", a.frequency}});
    }
    return json{{"image_height", s.image_height}, {"image_width", s.image_width}, {"attributes", attrs}};
}

AttributeSchema schema_from_json(const json& j) {
    AttributeSchema s;
    s.image_height = j.at("image_height").get<int>();
    s.image_width = j.at("image_width").get<int>();
    for (const auto& a : j.at("attributes")) {
        AttributeSpec spec;
        spec.name = a.at("name").get<std::string>();
        const auto& r = a.at("region");
        spec.region = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                       r.at(3).get<double>()};
        const auto& c = a.at("color");
        spec.color = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
        spec.frequency = a.at("frequency").get<double>();
        s.attributes.push_back(std::move(spec));
    }
    return s;
}

}  // namespace

AttributeSchema AttributeSchema::desk_default() { return with_attribute_count(8); }

AttributeSchema AttributeSchema::with_attribute_count(int m) {
    // Two large clothing-color regions at 50% plus small accessories. The
    // palette is fixed so datasets regenerate identically across versions.
    static const std::vector<AttributeSpec> palette = {
        {"upper_red", {0.22, 0.22, 0.78, 0.52}, {0.85, 0.15, 0.15}, 0.50},
        {"lower_blue", {0.28, 0.54, 0.72, 0.88}, {0.15, 0.20, 0.80}, 0.50},
        {"hat_yellow", {0.30, 0.02, 0.70, 0.12}, {0.90, 0.85, 0.10}, 0.20},
        {"backpack_green", {0.02, 0.26, 0.18, 0.50}, {0.10, 0.70, 0.20}, 0.30},
        {"handbag_magenta", {0.82, 0.50, 0.98, 0.66}, {0.85, 0.10, 0.80}, 0.25},
        {"boots_dark", {0.28, 0.90, 0.72, 0.98}, {0.08, 0.06, 0.10}, 0.40},
        {"scarf_cyan", {0.32, 0.14, 0.68, 0.20}, {0.10, 0.80, 0.85}, 0.15},
        {"armband_white", {0.04, 0.56, 0.16, 0.72}, {0.95, 0.95, 0.95}, 0.35},
        {"badge_orange", {0.82, 0.06, 0.96, 0.18}, {0.95, 0.55, 0.10}, 0.30},
        {"glove_purple", {0.84, 0.70, 0.98, 0.84}, {0.55, 0.15, 0.75}, 0.25},
        {"patch_olive", {0.02, 0.76, 0.16, 0.90}, {0.45, 0.50, 0.15}, 0.30},
        {"collar_pink", {0.36, 0.20, 0.64, 0.24}, {0.95, 0.55, 0.70}, 0.20},
    };
    if (m < 2 || m > static_cast<int>(palette.size()))
        throw ConfigError("attribute count must be in 2.." + std::to_string(palette.size()));
    AttributeSchema s;
    s.attributes.assign(palette.begin(), palette.begin() + m);
    return s;
}

void AttributeSchema::validate() const {
    if (attribute_count() < 2) throw ConfigError("schema needs at least 2 attributes");
    if (image_height <= 0 || image_width <= 0) throw ConfigError("schema image dims must be positive");
    for (const auto& a : attributes) {
        const Rect& r = a.region;
        if (!(r.x0 >= 0 && r.y0 >= 0 && r.x1 <= 1 && r.y1 <= 1 && r.x0 < r.x1 && r.y0 < r.y1))
            throw ConfigError("attribute region out of [0,1]^2: " + a.name);
        if (!(a.frequency > 0.0 && a.frequency < 1.0))
            throw ConfigError("attribute frequency must be in (0,1): " + a.name);
    }
}

std::vector<PersonRecord> generate_dataset(const AttributeSchema& schema, int n_ids,
                                           int images_per_id, int n_cameras, std::uint64_t seed) {
    schema.validate();
    if (n_ids < 2) throw ConfigError("generate_dataset: n_ids must be >= 2");
    if (images_per_id < 2) throw ConfigError("generate_dataset: images_per_id must be >= 2");
    if (n_cameras < 2) throw ConfigError("generate_dataset: n_cameras must be >= 2");
    const int m = schema.attribute_count();
    if (m < 63 && (1ULL << m) < static_cast<std::uint64_t>(n_ids))
        throw DataError("generate_dataset: 2^M < n_ids, cannot assign distinct attribute vectors");

    const int h = schema.image_height, w = schema.image_width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    // ID-level attribute vectors, distinct across IDs.
    Rng attr_rng(derive_seed(seed, 0));
    std::set<std::vector<std::uint8_t>> used;
    std::vector<std::vector<std::uint8_t>> id_attrs(static_cast<std::size_t>(n_ids));
    for (int i = 0; i < n_ids; ++i) {
        std::vector<std::uint8_t> bits = sample_attribute_vector(schema, attr_rng);
        while (used.count(bits)) bits = sample_attribute_vector(schema, attr_rng);
        used.insert(bits);
        id_attrs[static_cast<std::size_t>(i)] = std::move(bits);
    }

    // Base body layout shared by all identities; attributes recolor or
    // overlay parts of it.
    const Rect head{0.36, 0.04, 0.64, 0.14};
    const Rect torso{0.22, 0.22, 0.78, 0.52};
    const Rect legs{0.28, 0.54, 0.72, 0.88};
    const std::array<double, 3> skin{0.85, 0.72, 0.60};
    const std::array<double, 3> torso_base{0.45, 0.50, 0.45};
    const std::array<double, 3> legs_base{0.40, 0.40, 0.45};

    Rng render_rng(derive_seed(seed, 1));
    std::vector<PersonRecord> records;
    records.reserve(static_cast<std::size_t>(n_ids) * images_per_id);
    for (int id = 0; id < n_ids; ++id) {
        for (int j = 0; j < images_per_id; ++j) {
            PersonRecord rec;
            rec.id = id;
            rec.camera = j % n_cameras;
            rec.attributes = id_attrs[static_cast<std::size_t>(id)];

            const auto tint = camera_tint(rec.camera);
            const std::array<double, 3> bg{0.55 + tint[0], 0.55 + tint[1], 0.58 + tint[2]};
            std::vector<double> img(3 * plane);
            for (int c = 0; c < 3; ++c)
                std::fill(img.begin() + c * static_cast<std::int64_t>(plane),
                          img.begin() + (c + 1) * static_cast<std::int64_t>(plane),
                          bg[static_cast<std::size_t>(c)]);

            // Whole-person shift plus small per-region wobble.
            const int gdx = static_cast<int>(render_rng.uniform_int(5)) - 2;
            const int gdy = static_cast<int>(render_rng.uniform_int(5)) - 2;
            fill_rect(img, h, w, to_pixels(head, h, w, gdx, gdy), skin);
            fill_rect(img, h, w, to_pixels(torso, h, w, gdx, gdy), torso_base);
            fill_rect(img, h, w, to_pixels(legs, h, w, gdx, gdy), legs_base);

            rec.region_masks.assign(static_cast<std::size_t>(m), std::vector<std::uint8_t>(plane, 0));
            for (int k = 0; k < m; ++k) {
                // One jitter draw per attribute keeps the stream layout fixed
                // whether or not the bit is set.
                const int adx = gdx + static_cast<int>(render_rng.uniform_int(3)) - 1;
                const int ady = gdy + static_cast<int>(render_rng.uniform_int(3)) - 1;
                if (!rec.attributes[static_cast<std::size_t>(k)]) continue;
                const AttributeSpec& spec = schema.attributes[static_cast<std::size_t>(k)];
                PixelRect pr = to_pixels(spec.region, h, w, adx, ady);
                if (pr.empty()) pr = to_pixels(spec.region, h, w, 0, 0);  // keep mask nonempty
                if (pr.empty())
                    throw DataError("attribute region rounds to zero pixels: " + spec.name);
                fill_rect(img, h, w, pr, spec.color);
                mark_rect(rec.region_masks[static_cast<std::size_t>(k)], w, pr);
            }

            // Photometric jitter: gain, per-channel offset, pixel noise.
            const double gain = render_rng.uniform(0.92, 1.08);
            std::array<double, 3> offset{};
            for (auto& o : offset) o = render_rng.uniform(-0.03, 0.03);
            for (int c = 0; c < 3; ++c)
                for (std::size_t i = 0; i < plane; ++i) {
                    double v = img[c * plane + i] * gain + offset[static_cast<std::size_t>(c)] +
                               render_rng.uniform(-0.02, 0.02);
                    img[c * plane + i] = std::clamp(v, 0.0, 1.0);
                }

            rec.image = Tensor::from_values({3, h, w}, std::move(img));
            records.push_back(std::move(rec));
        }
    }
    return records;
}

DatasetSplit split_dataset(const std::vector<PersonRecord>& records, double test_fraction,
                           std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("split_dataset: test_fraction must be in (0,1)");
    std::vector<int> ids;
    for (const auto& r : records)
        if (std::find(ids.begin(), ids.end(), r.id) == ids.end()) ids.push_back(r.id);
    std::sort(ids.begin(), ids.end());
    const int n_ids = static_cast<int>(ids.size());
    int n_test = static_cast<int>(std::lround(test_fraction * n_ids));
    n_test = std::clamp(n_test, 2, n_ids - 2);
    if (n_ids < 4) throw ConfigError("split_dataset: need at least 4 IDs (2 per side)");

    Rng rng(derive_seed(seed, 2));
    rng.shuffle(ids);
    std::set<int> test_ids(ids.begin(), ids.begin() + n_test);

    DatasetSplit split;
    std::map<int, std::map<int, std::vector<const PersonRecord*>>> by_id_cam;
    for (const auto& r : records) {
        if (test_ids.count(r.id))
            by_id_cam[r.id][r.camera].push_back(&r);
        else
            split.train.push_back(r);
    }

    for (auto& [id, cams] : by_id_cam) {
        if (cams.size() < 2) {
            split.warnings.push_back("test id " + std::to_string(id) +
                                     " visible in a single camera; excluded from query set");
            for (auto& [cam, recs] : cams)
                for (const PersonRecord* r : recs) split.gallery.push_back(*r);
            continue;
        }
        std::vector<const PersonRecord*> queries;
        std::vector<const PersonRecord*> rest;
        for (auto& [cam, recs] : cams) {
            queries.push_back(recs.front());
            for (std::size_t i = 1; i < recs.size(); ++i) rest.push_back(recs[i]);
        }
        if (rest.empty()) {
            // Q would leave the ID unmatched in the gallery; keep one image
            // per camera in G instead and query nothing for this ID.
            split.warnings.push_back("test id " + std::to_string(id) +
                                     " has one image per camera; excluded from query set");
            for (const PersonRecord* r : queries) split.gallery.push_back(*r);
            continue;
        }
        for (const PersonRecord* r : queries) split.query.push_back(*r);
        for (const PersonRecord* r : rest) split.gallery.push_back(*r);
    }
    return split;
}

namespace {

void append_section(json& manifest, std::ofstream& images, std::ofstream& masks,
                    const std::vector<PersonRecord>& recs, const char* section,
                    std::uint64_t& image_off, std::uint64_t& mask_off) {
    for (const auto& r : recs) {
        json rec{{"id", r.id},
                 {"camera", r.camera},
                 {"attributes", r.attributes},
                 {"split", section},
                 {"image_offset", image_off},
                 {"mask_offset", mask_off}};
        manifest["records"].push_back(std::move(rec));
        const auto& vals = r.image.values();
        images.write(reinterpret_cast<const char*>(vals.data()),
                     static_cast<std::streamsize>(vals.size() * sizeof(double)));
        image_off += vals.size() * sizeof(double);
        for (const auto& mask : r.region_masks) {
            masks.write(reinterpret_cast<const char*>(mask.data()),
                        static_cast<std::streamsize>(mask.size()));
            mask_off += mask.size();
        }
    }
}

}  // namespace

void save_dataset(const DatasetSplit& split, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream images(fs::path(dir) / "images.bin", std::ios::binary | std::ios::trunc);
    std::ofstream masks(fs::path(dir) / "masks.bin", std::ios::binary | std::ios::trunc);
    if (!images || !masks) throw DataError("cannot open dataset blobs for writing in " + dir);

    json manifest;
    manifest["format_version"] = kManifestVersion;
    manifest["schema"] = schema_to_json(split.schema);
    manifest["records"] = json::array();
    manifest["warnings"] = split.warnings;
    std::uint64_t image_off = 0, mask_off = 0;
    append_section(manifest, images, masks, split.train, "train", image_off, mask_off);
    append_section(manifest, images, masks, split.query, "query", image_off, mask_off);
    append_section(manifest, images, masks, split.gallery, "gallery", image_off, mask_off);
    images.flush();
    masks.flush();
    if (!images || !masks) throw DataError("dataset blob write failed in " + dir);

    std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
    if (!mf) throw DataError("cannot write manifest in " + dir);
    mf << manifest.dump(2) << "\n";
}

DatasetSplit load_dataset(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw DataError("missing manifest.json in " + dir);
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt manifest: ") + e.what());
    }
    if (manifest.value("format_version", 0u) != kManifestVersion)
        throw DataError("unsupported dataset format version");

    DatasetSplit split;
    split.schema = schema_from_json(manifest.at("schema"));
    if (manifest.contains("warnings"))
        split.warnings = manifest.at("warnings").get<std::vector<std::string>>();
    const int h = split.schema.image_height, w = split.schema.image_width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int m = split.schema.attribute_count();

    std::ifstream images(fs::path(dir) / "images.bin", std::ios::binary);
    std::ifstream masks(fs::path(dir) / "masks.bin", std::ios::binary);
    if (!images || !masks) throw DataError("missing dataset blobs in " + dir);

    for (const auto& jrec : manifest.at("records")) {
        PersonRecord rec;
        rec.id = jrec.at("id").get<int>();
        rec.camera = jrec.at("camera").get<int>();
        rec.attributes = jrec.at("attributes").get<std::vector<std::uint8_t>>();
        if (static_cast<int>(rec.attributes.size()) != m)
            throw DataError("record attribute vector does not match schema");

        std::vector<double> vals(3 * plane);
        images.seekg(static_cast<std::streamoff>(jrec.at("image_offset").get<std::uint64_t>()));
        images.read(reinterpret_cast<char*>(vals.data()),
                    static_cast<std::streamsize>(vals.size() * sizeof(double)));
        if (!images) throw DataError("images.bin truncated");
        rec.image = Tensor::from_values({3, h, w}, std::move(vals));

        masks.seekg(static_cast<std::streamoff>(jrec.at("mask_offset").get<std::uint64_t>()));
        rec.region_masks.assign(static_cast<std::size_t>(m), std::vector<std::uint8_t>(plane));
        for (auto& mask : rec.region_masks) {
            masks.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(plane));
            if (!masks) throw DataError("masks.bin truncated");
        }

        const std::string section = jrec.at("split").get<std::string>();
        if (section == "train")
            split.train.push_back(std::move(rec));
        else if (section == "query")
            split.query.push_back(std::move(rec));
        else if (section == "gallery")
            split.gallery.push_back(std::move(rec));
        else
            throw DataError("unknown split section: " + section);
    }
    return split;
}

void export_ppm_samples(const DatasetSplit& split, const std::string& dir, int limit) {
    fs::create_directories(dir);
    auto dump = [&](const std::vector<PersonRecord>& recs, const char* tag) {
        const int n = std::min<int>(limit, static_cast<int>(recs.size()));
        for (int i = 0; i < n; ++i) {
            const auto& r = recs[static_cast<std::size_t>(i)];
            const std::string name = std::string(tag) + "_" + std::to_string(i) + "_id" +
                                     std::to_string(r.id) + "_cam" + std::to_string(r.camera) + ".ppm";
            write_ppm((fs::path(dir) / name).string(), r.image);
        }
    };
    dump(split.train, "train");
    dump(split.query, "query");
    dump(split.gallery, "gallery");
}

}  // namespace amd
