#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "amd/synth_data.hpp"

using namespace amd;
namespace fs = std::filesystem;

namespace {

bool records_equal(const PersonRecord& a, const PersonRecord& b) {
    return a.id == b.id && a.camera == b.camera && a.attributes == b.attributes &&
           a.region_masks == b.region_masks && a.image.shape() == b.image.shape() &&
           a.image.values() == b.image.values();
}

AttributeSchema wide_schema(int m, double frequency) {
    AttributeSchema s = AttributeSchema::with_attribute_count(8);
    while (s.attribute_count() < m) {
        AttributeSpec spec = s.attributes[static_cast<std::size_t>(s.attribute_count() % 8)];
        spec.name += "_x" + std::to_string(s.attribute_count());
        s.attributes.push_back(spec);
    }
    for (auto& a : s.attributes) a.frequency = frequency;
    return s;
}

}  // namespace

TEST_CASE("counting and distinct attribute vectors") {
    const auto records = generate_dataset(AttributeSchema::desk_default(), 2, 2, 2, 1);
    CHECK(records.size() == 4);
    std::set<std::vector<std::uint8_t>> distinct;
    for (const auto& r : records) distinct.insert(r.attributes);
    CHECK(distinct.size() == 2);
}

TEST_CASE("determinism: same seed gives bit-identical datasets") {
    const auto a = generate_dataset(AttributeSchema::desk_default(), 4, 3, 2, 99);
    const auto b = generate_dataset(AttributeSchema::desk_default(), 4, 3, 2, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(records_equal(a[i], b[i]));

    const auto c = generate_dataset(AttributeSchema::desk_default(), 4, 3, 2, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!records_equal(a[i], c[i])) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("marginal frequency holds over many ids") {
    // 2^10 = 1024 >= 400, so distinctness stays satisfiable
    const auto records = generate_dataset(wide_schema(10, 0.5), 400, 2, 2, 7);
    std::map<int, std::vector<std::uint8_t>> by_id;
    for (const auto& r : records) by_id[r.id] = r.attributes;
    for (int k = 0; k < 10; ++k) {
        int positive = 0;
        for (const auto& [id, attrs] : by_id) positive += attrs[static_cast<std::size_t>(k)];
        const double fraction = positive / 400.0;
        CHECK(fraction >= 0.4);
        CHECK(fraction <= 0.6);
    }
}

TEST_CASE("mask is nonempty exactly for positive attributes") {
    const auto records = generate_dataset(AttributeSchema::desk_default(), 6, 3, 3, 5);
    for (const auto& r : records) {
        REQUIRE(r.region_masks.size() == r.attributes.size());
        for (std::size_t k = 0; k < r.attributes.size(); ++k) {
            int ones = 0;
            for (auto b : r.region_masks[k]) ones += b;
            CHECK((ones > 0) == (r.attributes[k] == 1));
        }
        CHECK(r.image.all_finite());
        for (double v : r.image.values()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("attribute vectors are constant within an id") {
    const auto records = generate_dataset(AttributeSchema::desk_default(), 5, 4, 2, 21);
    std::map<int, std::vector<std::uint8_t>> seen;
    for (const auto& r : records) {
        auto it = seen.find(r.id);
        if (it == seen.end())
            seen[r.id] = r.attributes;
        else
            CHECK(it->second == r.attributes);
    }
}

TEST_CASE("capacity error when 2^M < n_ids") {
    CHECK_THROWS_AS(generate_dataset(AttributeSchema::with_attribute_count(2), 5, 2, 2, 1),
                    DataError);
    CHECK_THROWS_AS(generate_dataset(AttributeSchema::desk_default(), 1, 2, 2, 1), ConfigError);
    CHECK_THROWS_AS(generate_dataset(AttributeSchema::desk_default(), 2, 1, 2, 1), ConfigError);
    CHECK_THROWS_AS(generate_dataset(AttributeSchema::desk_default(), 2, 2, 1, 1), ConfigError);
}

TEST_CASE("split is id-disjoint with the expected sizes") {
    const auto records = generate_dataset(AttributeSchema::desk_default(), 10, 4, 2, 3);
    const DatasetSplit split = split_dataset(records, 0.5, 3);
    std::set<int> train_ids, test_ids;
    for (const auto& r : split.train) train_ids.insert(r.id);
    for (const auto& r : split.query) test_ids.insert(r.id);
    for (const auto& r : split.gallery) test_ids.insert(r.id);
    CHECK(train_ids.size() == 5);
    CHECK(test_ids.size() == 5);
    for (int id : train_ids) CHECK(test_ids.count(id) == 0);
}

TEST_CASE("query assignment: one image per id per camera") {
    // 32 ids at fraction 0.5 -> 16 test ids x 4 images x 2 cameras -> |Q| = 32
    const auto records = generate_dataset(AttributeSchema::desk_default(), 32, 4, 2, 13);
    const DatasetSplit split = split_dataset(records, 0.5, 13);
    CHECK(split.query.size() == 32);
    CHECK(split.gallery.size() == 32);
    // every query id remains in the gallery under some other camera
    for (const auto& q : split.query) {
        bool matchable = false;
        for (const auto& g : split.gallery)
            if (g.id == q.id && g.camera != q.camera) matchable = true;
        CHECK(matchable);
    }
}

TEST_CASE("single-camera test ids are excluded from the query set") {
    auto records = generate_dataset(AttributeSchema::desk_default(), 4, 4, 2, 17);
    // collapse everything onto camera 0: Q must come out empty with warnings
    for (auto& r : records) r.camera = 0;
    const DatasetSplit split = split_dataset(records, 0.5, 17);
    CHECK(split.query.empty());
    CHECK_FALSE(split.gallery.empty());
    CHECK_FALSE(split.warnings.empty());

    // a single one-camera id is excluded from Q but keeps its images in G
    auto records2 = generate_dataset(AttributeSchema::desk_default(), 4, 4, 2, 17);
    for (auto& r : records2)
        if (r.id == 2) r.camera = 0;
    const DatasetSplit split2 = split_dataset(records2, 0.5, 17);
    for (const auto& q : split2.query) CHECK(q.id != 2);
}

TEST_CASE("save and load round trip") {
    const auto records = generate_dataset(AttributeSchema::desk_default(), 6, 4, 2, 23);
    DatasetSplit split = split_dataset(records, 0.5, 23);
    split.schema = AttributeSchema::desk_default();
    const std::string dir = (fs::temp_directory_path() / "amd_dataset_test").string();
    fs::remove_all(dir);
    save_dataset(split, dir);
    const DatasetSplit loaded = load_dataset(dir);
    REQUIRE(loaded.train.size() == split.train.size());
    REQUIRE(loaded.query.size() == split.query.size());
    REQUIRE(loaded.gallery.size() == split.gallery.size());
    for (std::size_t i = 0; i < split.train.size(); ++i)
        CHECK(records_equal(split.train[i], loaded.train[i]));
    for (std::size_t i = 0; i < split.query.size(); ++i)
        CHECK(records_equal(split.query[i], loaded.query[i]));
    for (std::size_t i = 0; i < split.gallery.size(); ++i)
        CHECK(records_equal(split.gallery[i], loaded.gallery[i]));
    CHECK(loaded.schema.attribute_count() == 8);
    fs::remove_all(dir);
}

TEST_CASE("truncated blobs are a format error") {
    const auto records = generate_dataset(AttributeSchema::desk_default(), 4, 2, 2, 29);
    DatasetSplit split = split_dataset(records, 0.5, 29);
    split.schema = AttributeSchema::desk_default();
    const std::string dir = (fs::temp_directory_path() / "amd_dataset_trunc").string();
    fs::remove_all(dir);
    save_dataset(split, dir);
    fs::resize_file(fs::path(dir) / "images.bin", 100);
    CHECK_THROWS_AS(load_dataset(dir), DataError);
    fs::remove_all(dir);
    CHECK_THROWS_AS(load_dataset("/nonexistent/amd_dataset"), DataError);
}

TEST_CASE("empty split round trips without crashing") {
    DatasetSplit empty;
    empty.schema = AttributeSchema::desk_default();
    const std::string dir = (fs::temp_directory_path() / "amd_dataset_empty").string();
    fs::remove_all(dir);
    save_dataset(empty, dir);
    const DatasetSplit loaded = load_dataset(dir);
    CHECK(loaded.train.empty());
    CHECK(loaded.query.empty());
    CHECK(loaded.gallery.empty());
    fs::remove_all(dir);
}

TEST_CASE("schema validation") {
    AttributeSchema s = AttributeSchema::desk_default();
    s.attributes[0].frequency = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = AttributeSchema::desk_default();
    s.attributes[0].region = {0.5, 0.5, 1.5, 0.9};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK_THROWS_AS(AttributeSchema::with_attribute_count(1), ConfigError);
    CHECK_THROWS_AS(AttributeSchema::with_attribute_count(13), ConfigError);
    CHECK(AttributeSchema::with_attribute_count(12).attribute_count() == 12);
}
