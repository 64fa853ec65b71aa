#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectra/attribution.hpp"
#include "spectra/errors.hpp"
#include "spectra/head.hpp"
#include "spectra/render.hpp"
#include "spectra/support.hpp"
#include "test_util.hpp"

#include <array>
#include <filesystem>
#include <regex>

using namespace spectra;
using namespace spectra::testing;

namespace {

const std::array<std::array<double, 2>, 3> kCenters = {{{0.0, 0.0}, {4.0, 0.0}, {2.0, 3.5}}};

std::size_t count(const std::string& text, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

struct Scene {
    Blobs blobs;
    LinearHead head;
    SupportSet support;
    Spectrum spectrum;
};

Scene scene(std::size_t per_class)
{
    auto blobs = make_blobs(7, per_class, kCenters, 1.0);
    Rng rng(3);
    const auto head = random_head(rng, 3, 2);
    const Query q{{1.0, 0.5}, std::nullopt, std::nullopt};
    auto support = support_set(blobs.features, blobs.labels, head, q);
    auto spectrum =
        build_spectrum(representer_scores(blobs.features, blobs.labels, head, q, false), support);
    return Scene{std::move(blobs), head, std::move(support), std::move(spectrum)};
}

} // namespace

TEST_CASE("one circle per training point plus the test point")
{
    for (std::size_t per : {1u, 5u, 40u}) {
        const auto s = scene(per);
        const auto svg = render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum);
        CHECK(count(svg, "<circle") == 3 * per + 1);
        CHECK(count(svg, "class=\"support\"") == s.support.indices.size());
        CHECK(count(svg, "id=\"test-point\"") == 1);
        CHECK(count(svg, "<polyline") == 1);
    }
}

TEST_CASE("opaque circles are exactly the support set and the path follows the staircase")
{
    const auto s = scene(30);
    REQUIRE_FALSE(s.spectrum.empty());
    const auto svg = render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum);

    std::vector<std::size_t> opaque;
    const std::regex circle(R"re(<circle class="support" data-index="(\d+)")re");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator(); ++it)
        opaque.push_back(std::stoul((*it)[1]));
    CHECK(opaque == s.support.indices);

    std::smatch m;
    REQUIRE(std::regex_search(svg, m, std::regex(R"re(data-indices="([^"]*)")re")));
    std::string expected;
    for (const auto& e : s.spectrum.entries)
        expected += (expected.empty() ? "" : " ") + std::to_string(e.index);
    CHECK(m[1].str() == expected);
}

TEST_CASE("output is deterministic")
{
    const auto s = scene(20);
    const auto a = render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum);
    const auto b = render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum);
    CHECK(a == b);

    const auto dir = std::filesystem::temp_directory_path() / "spectra_test_render";
    std::filesystem::create_directories(dir);
    render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum, {}, dir / "a.svg");
    render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum, {}, dir / "b.svg");
    CHECK(read_file_bytes(dir / "a.svg") == read_file_bytes(dir / "b.svg"));
    const auto bytes = read_file_bytes(dir / "a.svg");
    CHECK(std::string(bytes.begin(), bytes.end()) == a);
}

TEST_CASE("errors")
{
    const auto s = scene(5);
    SUBCASE("three-dimensional features")
    {
        const FeatureSet fs(1, 3, {0.0f, 0.0f, 0.0f});
        const LabelVector lv(2, {0});
        try {
            render_2d_spectrum_svg(fs, lv, s.support, Spectrum{});
            FAIL("expected NotTwoDimensional");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NotTwoDimensional);
        }
    }
    SUBCASE("palette shorter than T")
    {
        PlotSpec plot;
        plot.palette.resize(2);
        CHECK_THROWS_AS(render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum, plot),
                        Error);
    }
    SUBCASE("non-positive size")
    {
        PlotSpec plot;
        plot.width = 0;
        CHECK_THROWS_AS(render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum, plot),
                        Error);
    }
    SUBCASE("unwritable path")
    {
        try {
            render_2d_spectrum_svg(s.blobs.features, s.blobs.labels, s.support, s.spectrum, {},
                                   "/nonexistent/dir/out.svg");
            FAIL("expected IoError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IoError);
        }
    }
}
