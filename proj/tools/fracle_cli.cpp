#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fracle/pipeline.hpp"

using namespace fracle;

namespace {

struct Flags {
    std::optional<int> n;
    std::optional<double> s, p;
    std::string config;
    std::optional<std::string> out;
    bool plots = false;
    std::optional<int> threads;
    std::vector<std::string> sets;
};

void addShared(CLI::App* cmd, Flags& f) {
    cmd->add_option("--n", f.n, "dimension");
    cmd->add_option("--s", f.s, "fractional order in (0, 1)");
    cmd->add_option("--p", f.p, "exponent above (n+2s)/(n-2s)");
    cmd->add_option("--config", f.config, "key = value config file");
    cmd->add_option("--out", f.out, std::string("output directory (default $") + RunConfig::kOutEnv + " or ./fracle-out)");
    cmd->add_flag("--plots", f.plots, "write SVG plots");
    cmd->add_option("--threads", f.threads, "worker threads");
    cmd->add_option("--set", f.sets, "override a config key, key=value")->take_all();
}

RunConfig makeConfig(const Flags& f) {
    RunConfig cfg;
    if (!f.config.empty()) cfg.loadFile(f.config);
    if (f.n) cfg.n = *f.n;
    if (f.s) cfg.s = *f.s;
    if (f.p) cfg.p = *f.p;
    if (f.out) cfg.out = *f.out;
    if (f.plots) cfg.plots = true;
    if (f.threads) cfg.threads = *f.threads;
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DomainError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

void print(const io::Json& j) { std::cout << j.dump(2) << "\n"; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional Lane-Emden profiles, linearization and bound states"};
    app.require_subcommand(1);
    Flags f;
    auto* constants = app.add_subcommand("constants", "print beta, d_s, Hardy constant and stability as JSON");
    auto* indicial = app.add_subcommand("indicial", "print indicial roots per mode as CSV");
    auto* kernel = app.add_subcommand("kernel", "calibrate cylinder kernels and report validation errors");
    auto* ball = app.add_subcommand("solve-ball", "ball Green operator, branch continuation and blow-up");
    auto* entire = app.add_subcommand("solve-entire", "entire profile on the cylinder with asymptotic checks");
    auto* lin = app.add_subcommand("linearized", "linearized kernels, decay fits and mode-1 solvability");
    auto* perturb = app.add_subcommand("perturb", "perturbative bound states over a lambda sweep");
    auto* pipeline = app.add_subcommand("pipeline", "run every stage and write a hashed manifest");
    for (auto* c : {constants, indicial, kernel, ball, entire, lin, perturb, pipeline}) addShared(c, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const RunConfig cfg = makeConfig(f);
        if (constants->parsed()) {
            const auto q = cfg.params();
            print(stages::constantsJson(q, computeConstants(q)));
            return 0;
        }
        if (indicial->parsed()) {
            const auto q = cfg.params();
            std::cout << stages::indicialCsv(q, computeConstants(q), cfg.modes).str();
            return 0;
        }
        if (pipeline->parsed()) {
            const auto res = runPipeline(cfg);
            print(res.summary);
            if (!res.ok) {
                std::cerr << "stage '" << res.failedStage << "' failed: " << res.error << "\n";
                return 1;
            }
            return 0;
        }
        Pipeline pl(cfg);
        io::ArtifactWriter w(cfg.outputDir());
        if (kernel->parsed()) print(stages::kernel(pl, w));
        else if (ball->parsed()) {
            const auto j = stages::ball(pl, w);
            w.write("ball.json", j);
            print(j);
        } else if (entire->parsed()) {
            const auto j = stages::entire(pl, w);
            w.write("entire.json", j);
            print(j);
        } else if (lin->parsed()) print(stages::linearized(pl, w));
        else if (perturb->parsed()) print(stages::perturb(pl, w));
        return 0;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
