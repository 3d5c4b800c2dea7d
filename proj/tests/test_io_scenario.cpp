#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "dyad/scenario.hpp"
#include "support/fixtures.hpp"

using namespace dyad;
using fixtures::unitTree;

namespace {

std::string tmpDir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("dyad_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

std::string slurpAll(const std::string& dir) {
    std::vector<std::filesystem::path> paths;
    for (auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file()) paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    std::string all;
    for (auto& p : paths) all += p.filename().string() + "\n" + readFile(p.string()) + "\n";
    return all;
}

}  // namespace

TEST_CASE("leaf CSV round trip and diagnostics") {
    auto t = unitTree(1, 3);
    Rng rng(211);
    StepFunction f = randomStepFunction(t, rng);
    std::string csv = leafValuesCsv(f.values());
    std::vector<double> back = parseLeafValuesCsv(csv, t->leafCount());
    for (std::uint64_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);
    CHECK(csv.find("\r\n") != std::string::npos);

    // Malformed rows are reported with their row number.
    try {
        parseLeafValuesCsv("leaf_index,value\r\n0,1.0\r\n1,abc\r\n", 8);
        FAIL("expected a diagnostic");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parseLeafValuesCsv("leaf_index,value\r\n42,1.0\r\n", 8), Error);
}

TEST_CASE("cube CSV round trip") {
    auto t = unitTree(2, 2);
    Rng rng(223);
    CoefficientField eps = randomCoefficientField(t, rng);
    std::string csv = cubeValuesCsv(*t, eps.values());
    std::vector<double> back = parseCubeValuesCsv(*t, csv);
    for (std::uint64_t flat = 0; flat < t->cubeCount(); ++flat)
        CHECK(back[flat] == eps.epsFlat(flat));
}

TEST_CASE("json writer formatting") {
    JsonWriter j;
    j.beginObject();
    j.field("a", 1.5);
    j.field("b", std::string("x\"y"));
    j.key("c").beginArray().value(1).value(2).endArray();
    j.field("d", true);
    j.endObject();
    CHECK(j.str() == "{\"a\":1.5,\"b\":\"x\\\"y\",\"c\":[1,2],\"d\":true}");
    CHECK(formatDouble(0.1) == "0.10000000000000001");
}

TEST_CASE("scenario parse diagnostics") {
    std::string dir = tmpDir("scenario_diag");
    writeFile(dir + "/broken.json", "{\"model\": }");
    CHECK_THROWS_WITH(parseScenario(dir + "/broken.json", 0, 1, 1000),
                      Catch::Matchers::ContainsSubstring("parse error"));

    writeFile(dir + "/nomodel.json", "{\"tasks\": [{\"task\": \"selftest\"}]}");
    CHECK_THROWS_WITH(parseScenario(dir + "/nomodel.json", 0, 1, 1000),
                      Catch::Matchers::ContainsSubstring("model"));

    // Malformed weight CSV: the diagnostic names the offending row.
    writeFile(dir + "/w.csv", "leaf_index,value\r\n0,1.0\r\n1,oops\r\n");
    writeFile(dir + "/badweight.json",
              "{\"model\": {\"n\": 1, \"depth\": 1}, \"weight\": {\"type\": \"csv\", \"path\": "
              "\"w.csv\"}, \"tasks\": [{\"task\": \"selftest\"}]}");
    CHECK_THROWS_WITH(parseScenario(dir + "/badweight.json", 0, 1, 1000),
                      Catch::Matchers::ContainsSubstring("row 3"));
}

TEST_CASE("scenario runs reproduce byte-identical outputs per seed") {
    std::string dir = tmpDir("scenario_repro");
    writeFile(dir + "/s.json", R"({
      "model": {"n": 1, "depth": 4, "root_corner": [0.0], "root_side": 1.0},
      "measure": {"type": "random"},
      "weight": {"type": "random"},
      "coefficients": {"type": "random"},
      "tasks": [
        {"task": "czdecomp-suite", "trials": 25},
        {"task": "sparse-haar"},
        {"task": "ap-constant"},
        {"task": "weighted-bound", "p": 2.0, "trials": 5},
        {"task": "compactness-scan", "p": 2.0, "n_list": [1, 2], "trials": 3}
      ]
    })");
    std::string out1 = tmpDir("scenario_repro_out1");
    std::string out2 = tmpDir("scenario_repro_out2");
    CHECK(runScenario(dir + "/s.json", out1, 7, 1, 1'000'000) == 0);
    CHECK(runScenario(dir + "/s.json", out2, 7, 1, 1'000'000) == 0);
    CHECK(slurpAll(out1) == slurpAll(out2));

    // A different seed changes the random inputs (and hence the reports).
    std::string out3 = tmpDir("scenario_repro_out3");
    CHECK(runScenario(dir + "/s.json", out3, 8, 1, 1'000'000) == 0);
    CHECK(slurpAll(out1) != slurpAll(out3));
}

TEST_CASE("fixture scenario reports the hand-computed stopping cube") {
    std::string dir = tmpDir("scenario_fixture");
    writeFile(dir + "/fx.json", R"({
      "model": {"n": 1, "depth": 2, "root_corner": [0.0], "root_side": 1.0},
      "measure": {"type": "uniform"},
      "function": {"type": "indicator", "level": 2, "idx": [0], "value": 4.0},
      "coefficients": {"type": "constant", "value": 1.0},
      "tasks": [
        {"task": "decompose", "lambda": 2.0},
        {"task": "sparse-haar"}
      ]
    })");
    std::string out = tmpDir("scenario_fixture_out");
    CHECK(runScenario(dir + "/fx.json", out, 7, 1, 1'000'000) == 0);
    std::string rep = readFile(out + "/decompose.json");
    CHECK(rep.find("\"stopping_cubes\":[{\"level\":2,\"idx\":[0]}]") != std::string::npos);
    CHECK(rep.find("\"good_energy_ratio\":1") != std::string::npos);
    std::string sh = readFile(out + "/sparsify_haar.json");
    CHECK(sh.find("\"packing_pass\":true") != std::string::npos);
}

TEST_CASE("model header json") {
    auto t = fixtures::boxTree(2, 3, -1.0, 2.0);
    std::string hdr = modelHeaderJson(*t);
    CHECK(hdr.find("\"n\":2") != std::string::npos);
    CHECK(hdr.find("\"depth\":3") != std::string::npos);
    CHECK(hdr.find("\"root_side\":2") != std::string::npos);
}

TEST_CASE("decay profile json carries sampled maps") {
    DecayProfile p = DecayProfile::geometric(0.5);
    std::string j = decayProfileJson(p, {0.25, 1.0, 4.0});
    CHECK(j.find("\"form\":\"geometric_log\"") != std::string::npos);
    CHECK(j.find("\"t\":4") != std::string::npos);
    CHECK(j.find("\"value\":0.25") != std::string::npos);  // 0.5^{|log2 4|}
}

TEST_CASE("binary matrix round trip") {
    std::string dir = tmpDir("matrix_bin");
    std::vector<double> m{1.0, -2.5, 0.125, 3e100};
    writeMatrixBinary(dir + "/m.bin", m);
    std::vector<double> back = readMatrixBinary(dir + "/m.bin", m.size());
    CHECK(back == m);
    CHECK_THROWS_AS(readMatrixBinary(dir + "/m.bin", 8), Error);
}
