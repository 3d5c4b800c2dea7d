// Command-line front end: scenario configs in, verification reports and
// plot-ready CSV out.

#include <CLI11.hpp>
#include <iostream>

#include "dyad/scenario.hpp"

namespace {

struct CommonOpts {
    std::string scenario;
    std::string outDir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
    std::uint64_t leafCap = dyad::DyadicTree::kDefaultLeafCap;
};

void addCommon(CLI::App* app, CommonOpts& opts, bool scenarioRequired) {
    auto* s = app->add_option("--scenario", opts.scenario, "Scenario JSON path");
    if (scenarioRequired) s->required();
    app->add_option("--out", opts.outDir, "Output directory");
    app->add_option("--seed", opts.seed, "RNG seed (reports are byte-stable per seed)");
    app->add_option("--threads", opts.threads, "Worker threads for matrix assembly");
    app->add_option("--leaf-cap", opts.leafCap, "Maximum number of tree leaves");
}

int runSingleTask(const CommonOpts& opts, const std::string& task) {
    dyad::Scenario sc = dyad::parseScenario(opts.scenario, opts.seed, opts.threads, opts.leafCap);
    // Prefer the matching task entry from the scenario, else defaults.
    dyad::Json chosen{{"task", task}};
    for (const dyad::Json& t : sc.tasks) {
        if (t.at("task").get<std::string>() == task) {
            chosen = t;
            break;
        }
    }
    dyad::TaskResult r = dyad::runTask(sc, chosen);
    std::filesystem::create_directories(opts.outDir);
    std::string stem = r.name;
    for (char& c : stem)
        if (c == '-') c = '_';
    dyad::writeFile(opts.outDir + "/" + stem + ".json", r.reportJson + "\n");
    for (auto& [fname, content] : r.files) dyad::writeFile(opts.outDir + "/" + fname, content);
    std::cout << (r.hardPass ? "PASS " : "FAIL ") << r.name << "\n";
    return r.hardPass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dyad: exact dyadic-model verification toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* run = app.add_subcommand("run", "Run every task in a scenario");
    addCommon(run, opts, true);

    const std::vector<std::string> singleTasks = {
        "decompose",      "sparsify-haar",    "sparsify-czo",
        "ap-constant",    "weighted-bound",   "compactness-scan",
        "weak-compactness", "eps-coefficients"};
    for (const std::string& name : singleTasks) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " task");
        addCommon(sub, opts, true);
    }
    auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant suite");
    addCommon(selftest, opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return dyad::runScenario(opts.scenario, opts.outDir, opts.seed, opts.threads,
                                     opts.leafCap);
        if (selftest->parsed()) {
            auto items = dyad::selftestBattery(opts.seed);
            bool pass = true;
            for (const auto& it : items) {
                std::cout << (it.pass ? "PASS " : "FAIL ") << it.name
                          << " (metric=" << dyad::formatDouble(it.metric) << ")\n";
                pass = pass && it.pass;
            }
            if (!opts.outDir.empty() && !opts.scenario.empty()) {
                // When a scenario is given, also record the JSON report.
                dyad::Scenario sc =
                    dyad::parseScenario(opts.scenario, opts.seed, opts.threads, opts.leafCap);
                dyad::TaskResult r = dyad::runTask(sc, dyad::Json{{"task", "selftest"}});
                std::filesystem::create_directories(opts.outDir);
                dyad::writeFile(opts.outDir + "/selftest.json", r.reportJson + "\n");
            }
            return pass ? 0 : 1;
        }
        for (const std::string& name : singleTasks)
            if (app.get_subcommand(name)->parsed()) return runSingleTask(opts, name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
