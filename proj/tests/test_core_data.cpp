#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectra/core_data.hpp"
#include "spectra/errors.hpp"
#include "test_util.hpp"

#include <cstring>
#include <filesystem>
#include <limits>

using namespace spectra;
using spectra::testing::Rng;

namespace {

std::filesystem::path temp_file(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "spectra_test_core_data";
    std::filesystem::create_directories(dir);
    return dir / name;
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected spectra::Error");
    return ErrorCode::InvalidArgument;
}

bool bit_identical(const FeatureSet& a, const FeatureSet& b)
{
    return a.size() == b.size() && a.dim() == b.dim() &&
           std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(float)) == 0;
}

} // namespace

TEST_CASE("smallest FVEC file is 20 bytes")
{
    const FeatureSet fs(1, 1, {0.0f});
    const auto bytes = encode_feature_set(fs);
    const std::vector<std::uint8_t> expected = {'F', 'V', 'E', 'C', '0', '0', '0', '1', 1, 0, 0, 0,
                                                1,   0,   0,   0,   0,   0,   0,   0};
    CHECK(bytes == expected);
}

TEST_CASE("FVEC length for n=2, d=3 is 40 bytes and little-endian")
{
    const FeatureSet fs(2, 3, {1.0f, -2.0f, 0.5f, 3.0f, 4.0f, 5.0f});
    const auto bytes = encode_feature_set(fs);
    CHECK(bytes.size() == 40);
    CHECK(bytes[8] == 2);
    CHECK(bytes[12] == 3);
    // 1.0f = 0x3f800000
    CHECK(bytes[16] == 0x00);
    CHECK(bytes[17] == 0x00);
    CHECK(bytes[18] == 0x80);
    CHECK(bytes[19] == 0x3f);
}

TEST_CASE("saving twice gives byte-identical files")
{
    Rng rng(1);
    const auto fs = spectra::testing::random_features(rng, 17, 5);
    const auto a = temp_file("twice_a.fvec");
    const auto b = temp_file("twice_b.fvec");
    save_feature_set(fs, a);
    save_feature_set(fs, b);
    CHECK(read_file_bytes(a) == read_file_bytes(b));
}

TEST_CASE("round trip is the identity for random containers")
{
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = rng.index(1, 1000);
        const std::size_t d = rng.index(1, 64);
        const std::size_t t = rng.index(2, 12);
        const auto fs = spectra::testing::random_features(rng, n, d, 100.0);
        const auto lv = spectra::testing::random_labels(rng, n, t);

        const auto path = temp_file("roundtrip.fvec");
        save_feature_set(fs, path);
        CHECK(bit_identical(load_feature_set(path), fs));

        const auto lpath = temp_file("roundtrip.lbl");
        save_label_vector(lv, lpath);
        CHECK(load_label_vector(lpath) == lv);

        // Heads hold doubles in memory but float32 on disk; float-representable
        // values must survive exactly.
        auto head = spectra::testing::random_head(rng, t, d);
        std::vector<double> w(head.weights().begin(), head.weights().end());
        std::vector<double> b(head.bias().begin(), head.bias().end());
        for (auto& v : w)
            v = static_cast<float>(v);
        for (auto& v : b)
            v = static_cast<float>(v);
        const LinearHead exact(t, d, w, b, 0.25);
        const auto hpath = temp_file("roundtrip.head");
        save_linear_head(exact, hpath);
        CHECK(load_linear_head(hpath) == exact);
    }
}

TEST_CASE("wrong magic is rejected")
{
    const LabelVector lv(2, {0, 1, 1});
    const auto bytes = encode_label_vector(lv);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "LBL00001");
    CHECK(code_of([&] { decode_feature_set(bytes); }) == ErrorCode::BadMagic);
    CHECK(code_of([&] { decode_linear_head(bytes); }) == ErrorCode::BadMagic);
}

TEST_CASE("size must match the header promise")
{
    // n = 10, d = 4 but only 39 floats.
    const FeatureSet fs(10, 4, std::vector<float>(40, 1.0f));
    auto bytes = encode_feature_set(fs);
    bytes.resize(bytes.size() - 4);
    try {
        decode_feature_set(bytes);
        FAIL("expected TruncatedFile");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TruncatedFile);
        REQUIRE(e.offset().has_value());
        CHECK(*e.offset() == bytes.size());
    }

    auto longer = encode_feature_set(fs);
    longer.push_back(0);
    CHECK(code_of([&] { decode_feature_set(longer); }) == ErrorCode::TruncatedFile);

    auto lbl = encode_label_vector(LabelVector(3, {0, 1, 2}));
    lbl.pop_back();
    CHECK(code_of([&] { decode_label_vector(lbl); }) == ErrorCode::TruncatedFile);

    auto head = encode_linear_head(LinearHead::zeros(3, 2, 0.1));
    CHECK(head.size() == 20 + 4 * (6 + 3));
    head.resize(head.size() - 1);
    CHECK(code_of([&] { decode_linear_head(head); }) == ErrorCode::TruncatedFile);

    const std::vector<std::uint8_t> tiny = {'F', 'V'};
    CHECK(code_of([&] { decode_feature_set(tiny); }) == ErrorCode::TruncatedFile);
}

TEST_CASE("non-finite values carry their index")
{
    auto bytes = encode_feature_set(FeatureSet(2, 2, {0.0f, 1.0f, 2.0f, 3.0f}));
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(&bytes[16 + 4 * 3], &nan, 4);  // host is little-endian in CI
    try {
        decode_feature_set(bytes);
        FAIL("expected NonFiniteValue");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteValue);
        CHECK(e.offset() == 3u);
    }

    CHECK(code_of([] {
              LinearHead(2, 1, {1.0, std::numeric_limits<double>::infinity()}, {0.0, 0.0}, 0.0);
          }) == ErrorCode::NonFiniteValue);
}

TEST_CASE("label ids are validated against T")
{
    try {
        LabelVector(3, {0, 1, 3, 2});
        FAIL("expected ClassOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ClassOutOfRange);
        CHECK(e.offset() == 2u);
    }
    CHECK(code_of([] { LabelVector(1, {0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("empty feature sets are invalid")
{
    CHECK(code_of([] { FeatureSet(0, 3, {}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { FeatureSet(2, 2, {1.0f}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("consistency checks")
{
    const FeatureSet fs(3, 2, std::vector<float>(6, 0.0f));
    const LabelVector lv(2, {0, 1, 0});
    CHECK_NOTHROW(check_consistent(fs, lv, LinearHead::zeros(2, 2)));
    CHECK(code_of([&] { check_consistent(fs, LabelVector(2, {0, 1})); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { check_consistent(fs, lv, LinearHead::zeros(2, 3)); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code_of([&] { check_consistent(fs, lv, LinearHead::zeros(3, 2)); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("query resolution")
{
    const LinearHead head(3, 1, {1.0, 2.0, 2.0}, {0.0, 0.0, 0.0}, 0.0);
    const auto q = resolve(head, Query{{1.0}, std::nullopt, std::nullopt});
    CHECK(q.predicted == 1);  // tie between 1 and 2 goes to the lower id
    CHECK(q.general());
    const auto r = resolve(head, Query{{1.0}, 0u, 2u});
    CHECK(r.predicted == 0);
    CHECK(r.relative == 2);
    CHECK(code_of([&] { resolve(head, Query{{1.0}, 3u, std::nullopt}); }) ==
          ErrorCode::ClassOutOfRange);
    CHECK(code_of([&] { resolve(head, Query{{1.0, 2.0}, std::nullopt, std::nullopt}); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("manifest paths resolve against the manifest directory")
{
    const auto path = temp_file("bundle.json");
    save_manifest(DatasetManifest{std::filesystem::path("f.fvec"), std::filesystem::path("l.lbl"),
                                  std::nullopt, "toy"},
                  path);
    const auto m = load_manifest(path);
    CHECK(m.name == "toy");
    REQUIRE(m.features.has_value());
    CHECK(*m.features == path.parent_path() / "f.fvec");
    CHECK_FALSE(m.head.has_value());
}

TEST_CASE("missing files are I/O errors")
{
    CHECK(code_of([] { load_feature_set("/nonexistent/dir/x.fvec"); }) == ErrorCode::IoError);
}

TEST_CASE("vocabulary-sized heads fit the format")
{
    const std::size_t t = 50257;
    const auto head = LinearHead::zeros(t, 2, 0.0);
    const auto back = decode_linear_head(encode_linear_head(head));
    CHECK(back.num_classes() == t);
    const LabelVector lv(t, {50256, 0});
    CHECK(decode_label_vector(encode_label_vector(lv)) == lv);
}
