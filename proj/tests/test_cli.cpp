#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "json.hpp"
#include "spectra/core_data.hpp"
#include "spectra/spectrum.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

fs::path workdir()
{
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / "spectra_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args, const std::string& env = "")
{
    const auto out = workdir() / "stdout.txt";
    const auto err = workdir() / "stderr.txt";
    const std::string cmd = env + " \"" SPECTRA_CLI "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    return Run{WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

std::string q(const fs::path& p)
{
    return "\"" + p.string() + "\"";
}

/// gen-blobs + train into a fresh directory; returns it.
fs::path dataset(const std::string& name, int per_class = 30)
{
    const auto dir = workdir() / name;
    REQUIRE(run("gen-blobs --n-per-class " + std::to_string(per_class) + " --out-dir " + q(dir)).status == 0);
    REQUIRE(run("train --manifest " + q(dir / "manifest.json") + " --out " + q(dir / "head.head")).status == 0);
    return dir;
}

std::string data_flags(const fs::path& dir)
{
    return "--manifest " + q(dir / "manifest.json") + " --head " + q(dir / "head.head");
}

void check_error_line(const Run& r, int status, const std::string& name, bool quiet_stdout = true)
{
    CHECK(r.status == status);
    if (quiet_stdout)
        CHECK(r.out.empty());
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK(std::regex_match(r.err, std::regex("[A-Za-z]+: [^\n]+\n")));
    CHECK(r.err.rfind(name + ": ", 0) == 0);
}

} // namespace

TEST_CASE("gen-blobs writes a loadable bundle")
{
    const auto dir = workdir() / "gen";
    const auto r = run("gen-blobs --n-per-class 12 --out-dir " + q(dir));
    REQUIRE(r.status == 0);
    CHECK(r.out.empty());
    const auto m = spectra::load_manifest(dir / "manifest.json");
    CHECK(spectra::load_feature_set(*m.features).size() == 36);
    CHECK(spectra::load_label_vector(*m.labels).num_classes() == 3);
}

TEST_CASE("SPECTRA_SEED replaces the default seed")
{
    const auto a = workdir() / "seed_a", b = workdir() / "seed_b", c = workdir() / "seed_c";
    REQUIRE(run("gen-blobs --n-per-class 5 --out-dir " + q(a), "SPECTRA_SEED=123").status == 0);
    REQUIRE(run("gen-blobs --n-per-class 5 --seed 123 --out-dir " + q(b)).status == 0);
    REQUIRE(run("gen-blobs --n-per-class 5 --out-dir " + q(c)).status == 0);
    CHECK(slurp(a / "features.fvec") == slurp(b / "features.fvec"));
    CHECK(slurp(a / "features.fvec") != slurp(c / "features.fvec"));
    check_error_line(run("gen-blobs --out-dir " + q(c), "SPECTRA_SEED=abc"), 2, "InvalidArgument");
}

TEST_CASE("predict and support")
{
    const auto dir = dataset("ps");
    const auto p = run("predict --head " + q(dir / "head.head") + " --point 4,0 --point 0,0");
    REQUIRE(p.status == 0);
    std::istringstream lines(p.out);
    std::string line;
    std::getline(lines, line);
    CHECK(json::parse(line)["class"] == 1);
    std::getline(lines, line);
    CHECK(json::parse(line)["class"] == 0);

    const auto s = run("support " + data_flags(dir) + " --point 1,0.5 --relative 1");
    REQUIRE(s.status == 0);
    const auto j = json::parse(s.out);
    CHECK(j["kind"] == "relative");
    CHECK(j["k"] == 1);
    CHECK(j["indices"].is_array());
}

TEST_CASE("spectrum output round-trips")
{
    const auto dir = dataset("spec");
    for (const std::string measure : {"representer", "influence"}) {
        const auto r = run("spectrum " + data_flags(dir) + " --measure " + measure +
                           " --point 1,0.5 --point 3,1");
        REQUIRE(r.status == 0);
        std::istringstream lines(r.out);
        std::string line;
        int count = 0;
        while (std::getline(lines, line)) {
            ++count;
            const auto s = spectra::spectrum_from_json(line);
            CHECK(json::parse(spectra::spectrum_to_json(s)) == json::parse(line));
        }
        CHECK(count == 2);
    }
    CHECK(run("spectrum " + data_flags(dir) + " --point 1,0.5 --relative 2 --relative-g").status == 0);
    check_error_line(run("spectrum " + data_flags(dir) + " --measure nope --point 1,1"), 2,
                     "InvalidArgument");
}

TEST_CASE("influence-validate")
{
    const auto r = run("influence-validate --min-r 0.9");
    REQUIRE(r.status == 0);
    const auto j = json::parse(r.out);
    CHECK(j["n"] == 30);
    CHECK(j["pearson"].get<double>() >= 0.9);
    // the correlation report is still written before the failure
    check_error_line(run("influence-validate --min-r 1.5"), 4, "ValidationFailed", false);
}

TEST_CASE("token-spectrum and tfidf")
{
    const auto dir = workdir() / "tokens";
    fs::create_directories(dir);
    {
        std::ofstream c(dir / "corpus.txt");
        c << "0 1 2 0 2\n1 2\n2 2 1\n";
    }
    // Token points for target 2 with input length 2 and buffer 1, in enumeration order.
    const std::vector<std::array<std::size_t, 3>> rows = {
        {0, 2, 2}, {0, 2, 3}, {0, 4, 2}, {0, 4, 3}, {1, 1, 2}, {2, 1, 2}};
    json a{{"features", "emb.fvec"}, {"target", 2}, {"rows", json::array()}};
    for (const auto& r : rows)
        a["rows"].push_back({{"doc", r[0]}, {"end", r[1]}, {"p", r[2]}});
    std::ofstream(dir / "align.json") << a.dump();
    spectra::save_feature_set(
        spectra::FeatureSet(6, 2, {0.0f, 0.0f, 1.0f, -1.0f, 0.5f, 2.5f, -1.0f, 1.0f, 2.0f, 0.0f, 0.2f, 0.3f}),
        dir / "emb.fvec");
    spectra::save_linear_head(
        spectra::LinearHead(3, 2, {1.0, 0.0, 0.0, 1.0, 0.6, 0.7}, {0.0, 0.1, -0.2}, 0.05), dir / "h.head");

    const auto base = "token-spectrum --corpus " + q(dir / "corpus.txt") + " --alignment " +
                      q(dir / "align.json") + " --head " + q(dir / "h.head") +
                      " --input-len 2 --buffer 1 --context 1.5,2";
    const auto r = run(base);
    REQUIRE(r.status == 0);
    const auto j = json::parse(r.out);
    CHECK(j["target"] == 2);
    CHECK(j["token_points"] == 6);
    CHECK(j["spectrum"].size() == j["points"].size());
    CHECK_FALSE(j["spectrum"].empty());

    check_error_line(run(base + " --relative 0 --max-relative-classes 2"), 3, "RelativeRefused");

    const auto t = run("tfidf --corpus " + q(dir / "corpus.txt") + " --vocab 4 --generated \"3 1 3\" --top 1");
    REQUIRE(t.status == 0);
    const auto tj = json::parse(t.out);
    CHECK(tj["scores"][0].get<double>() == doctest::Approx(2.0 * std::log(4.0)));
    CHECK(tj["top"] == json::array({0}));
}

TEST_CASE("plot")
{
    const auto dir = dataset("plot", 10);
    const auto spec = dir / "spectrum.json";
    REQUIRE(run("spectrum " + data_flags(dir) + " --point 1,0.5 --out " + q(spec)).status == 0);
    REQUIRE(run("plot " + data_flags(dir) + " --point 1,0.5 --spectrum " + q(spec) + " --out " +
                q(dir / "a.svg"))
                .status == 0);
    REQUIRE(run("plot " + data_flags(dir) + " --point 1,0.5 --out " + q(dir / "b.svg")).status == 0);
    const auto svg = slurp(dir / "a.svg");
    CHECK(svg == slurp(dir / "b.svg"));
    std::size_t circles = 0;
    for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1))
        ++circles;
    CHECK(circles == 31);
}

TEST_CASE("errors are one line with a stable exit status")
{
    const auto dir = dataset("errors", 5);
    SUBCASE("bad format -> 2")
    {
        std::ofstream(workdir() / "junk.fvec") << "not a feature file";
        check_error_line(run("support --features " + q(workdir() / "junk.fvec") + " --labels " +
                             q(dir / "labels.lbl") + " --head " + q(dir / "head.head") + " --point 0,0"),
                         2, "BadMagic");
        check_error_line(run("no-such-command"), 2, "InvalidArgument");
        check_error_line(run("support " + data_flags(dir) + " --point 1,x"), 2, "InvalidArgument");
    }
    SUBCASE("dimension or class mismatch -> 3")
    {
        check_error_line(run("support " + data_flags(dir) + " --point 1,2,3"), 3, "DimensionMismatch");
        check_error_line(run("support " + data_flags(dir) + " --point 1,2 --class 7"), 3,
                         "ClassOutOfRange");
    }
    SUBCASE("numerical failure -> 4")
    {
        check_error_line(run("train --manifest " + q(dir / "manifest.json") + " --max-iters 1 --out " +
                             q(dir / "x.head")),
                         4, "DidNotConverge");
    }
    SUBCASE("I/O -> 5")
    {
        check_error_line(run("predict --head /nonexistent/h.head --point 0,0"), 5, "IoError");
        check_error_line(run("train --manifest " + q(dir / "manifest.json") +
                             " --out /nonexistent/dir/h.head"),
                         5, "IoError");
    }
}
