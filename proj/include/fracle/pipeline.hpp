#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracle/ball/branch.hpp"
#include "fracle/entire/solve.hpp"
#include "fracle/indicial.hpp"
#include "fracle/io.hpp"
#include "fracle/linearized/linearized.hpp"
#include "fracle/nls/perturbation.hpp"
#include "fracle/parallel.hpp"

namespace fracle {

struct RunConfig {
    int n = 3;
    double s = 0.5;
    double p = 3.0;
    double T = 20.0;
    double h = 0.05;
    int ballN = 400;
    double branchTarget = 1e3;
    double picardLambda = 0.1;
    double newtonTol = 1e-8;
    double fixedPointTol = 1e-9;
    std::string potential = "powerTail";
    std::optional<double> mu; // powerTail exponent, default 2s + 0.5
    double bumpRadius = 1.0;
    std::vector<double> lambdas{0.2, 0.1, 0.05, 0.025};
    std::vector<int> modes{0, 1, 2};
    bool twoSolver = true;
    std::string out;
    bool plots = false;
    int threads = 1;

    static constexpr const char* kOutEnv = "FRACLE_OUT";

    static std::vector<std::string> keys() {
        return {"n", "s", "p", "T", "h", "ball_n", "branch_target", "picard_lambda", "newton_tol",
                "fixed_point_tol", "potential", "mu", "bump_radius", "lambdas", "modes", "two_solver", "out",
                "plots", "threads"};
    }

    void set(const std::string& key, const std::string& value) {
        auto num = [&] {
            try {
                return io::parseDouble(value);
            } catch (const DomainError&) {
                throw DomainError("config: key '" + key + "' expects a number, got '" + value + "'");
            }
        };
        auto integer = [&] {
            const double x = num();
            if (x != std::floor(x)) throw DomainError("config: key '" + key + "' expects an integer");
            return int(x);
        };
        auto flag = [&] {
            if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
            if (value == "0" || value == "false" || value == "no" || value == "off") return false;
            throw DomainError("config: key '" + key + "' expects a boolean, got '" + value + "'");
        };
        auto list = [&] {
            std::vector<double> out;
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item.erase(0, item.find_first_not_of(" \t"));
                item.erase(item.find_last_not_of(" \t") + 1);
                if (!item.empty()) out.push_back(io::parseDouble(item));
            }
            return out;
        };
        if (key == "n") n = integer();
        else if (key == "s") s = num();
        else if (key == "p") p = num();
        else if (key == "T") T = num();
        else if (key == "h") h = num();
        else if (key == "ball_n") ballN = integer();
        else if (key == "branch_target") branchTarget = num();
        else if (key == "picard_lambda") picardLambda = num();
        else if (key == "newton_tol") newtonTol = num();
        else if (key == "fixed_point_tol") fixedPointTol = num();
        else if (key == "potential") potential = value;
        else if (key == "mu") mu = num();
        else if (key == "bump_radius") bumpRadius = num();
        else if (key == "lambdas") lambdas = list();
        else if (key == "modes") {
            modes.clear();
            for (double m : list()) {
                if (m != std::floor(m)) throw DomainError("config: modes must be integers");
                modes.push_back(int(m));
            }
        } else if (key == "two_solver") twoSolver = flag();
        else if (key == "out") out = value;
        else if (key == "plots") plots = flag();
        else if (key == "threads") threads = integer();
        else throw DomainError("config: unknown key '" + key + "'");
    }

    // `key = value` lines, `#` starts a comment
    void load(std::istream& in, const std::string& origin = "config") {
        std::string line;
        int lineNo = 0;
        while (std::getline(in, line)) {
            ++lineNo;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line.erase(0, line.find_first_not_of(" \t\r"));
            line.erase(line.find_last_not_of(" \t\r") + 1);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw DomainError(origin + ":" + std::to_string(lineNo) + ": expected 'key = value'");
            std::string k = line.substr(0, eq), v = line.substr(eq + 1);
            k.erase(k.find_last_not_of(" \t") + 1);
            v.erase(0, v.find_first_not_of(" \t"));
            try {
                set(k, v);
            } catch (const DomainError& e) {
                throw DomainError(origin + ":" + std::to_string(lineNo) + ": " + e.what());
            }
        }
    }

    void loadFile(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw DomainError("cannot read config file '" + path + "'");
        load(f, path);
    }

    ProblemParams params() const { return ProblemParams::make(n, s, p); }

    PotentialSpec potentialSpec() const {
        if (potential == "powerTail") return PotentialSpec::powerTail(mu ? *mu : 2.0 * s + 0.5, s);
        if (potential == "compactBump") return PotentialSpec::compactBump(bumpRadius, s);
        if (potential == "zero") return PotentialSpec::zero(s);
        throw DomainError("config: unknown potential '" + potential + "' (powerTail, compactBump, zero)");
    }

    std::string outputDir() const {
        if (!out.empty()) return out;
        if (const char* e = std::getenv(kOutEnv); e && *e) return e;
        return "fracle-out";
    }

    // Checks every precondition up front so that an invalid config fails before any computation.
    void validate() const {
        params();
        CylinderGrid::make(T, h);
        BallGrid::make(ballN);
        if (!(branchTarget > 1.0)) throw DomainError("config: branch_target must exceed 1");
        if (!(picardLambda > 0.0)) throw DomainError("config: picard_lambda must be positive");
        if (!(newtonTol > 0.0) || !(fixedPointTol > 0.0)) throw DomainError("config: tolerances must be positive");
        const auto spec = potentialSpec();
        spec.validate();
        for (std::size_t k = 0; k < lambdas.size(); ++k) {
            if (!(lambdas[k] > 0.0 && lambdas[k] <= 1.0)) throw DomainError("config: lambdas must lie in (0, 1]");
            if (k && !(lambdas[k] < lambdas[k - 1])) throw DomainError("config: lambdas must be decreasing");
        }
        for (std::size_t k = 0; k < modes.size(); ++k) {
            if (modes[k] < 0) throw DomainError("config: modes must be non-negative");
            if (k && !(modes[k] > modes[k - 1])) throw DomainError("config: modes must be strictly ascending");
        }
        if (threads < 1) throw DomainError("config: threads must be >= 1");
    }

    // Everything that affects results; output location and thread count are excluded.
    io::Json toJson() const {
        io::Json j;
        j["n"] = n;
        j["s"] = s;
        j["p"] = p;
        j["T"] = T;
        j["h"] = h;
        j["ball_n"] = ballN;
        j["branch_target"] = branchTarget;
        j["picard_lambda"] = picardLambda;
        j["newton_tol"] = newtonTol;
        j["fixed_point_tol"] = fixedPointTol;
        j["potential"] = potential;
        j["mu"] = potential == "powerTail" ? io::Json(mu ? *mu : 2.0 * s + 0.5) : io::Json(nullptr);
        j["bump_radius"] = bumpRadius;
        j["lambdas"] = lambdas;
        j["modes"] = modes;
        j["two_solver"] = twoSolver;
        j["plots"] = plots;
        return j;
    }
};

// Lazily computed intermediate results shared by the stages.
class Pipeline {
public:
    explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        q_ = cfg_.params();
        c_ = computeConstants(q_);
        grid_ = CylinderGrid::make(cfg_.T, cfg_.h);
        ball_ = BallGrid::make(cfg_.ballN);
        threadCount() = cfg_.threads;
    }

    const RunConfig& config() const { return cfg_; }
    const ProblemParams& params() const { return q_; }
    const SpectralConstants& constants() const { return c_; }
    const CylinderGrid& grid() const { return grid_; }

    const KernelTable& table(int m) {
        auto it = tables_.find(m);
        if (it == tables_.end()) it = tables_.emplace(m, calibrate(q_, m, grid_)).first;
        return it->second;
    }

    const RadialGreenOperator& green() {
        if (!green_) green_ = buildGreen(q_, ball_);
        return *green_;
    }

    const BranchState& minimal() {
        if (!minimal_) minimal_ = minimalBranch(green(), q_.p, cfg_.picardLambda, {}, &picard_);
        return *minimal_;
    }
    const PicardReport& picard() {
        minimal();
        return picard_;
    }

    const BranchResult& branch() {
        if (!branch_) branch_ = continueBranch(green(), q_.p, minimal(), cfg_.branchTarget);
        return *branch_;
    }

    const BlowUpProfile& blowUp() {
        if (!blowUp_) blowUp_ = blowUpRescale(q_, ball_, branch().states.back(), grid_);
        return *blowUp_;
    }

    const EntireSolution& entire() {
        if (!entire_) {
            EntireOptions opt;
            opt.tolerance = cfg_.newtonTol;
            entire_ = solveEntire(q_, table(0), sigmoidGuess(q_, grid_), opt);
        }
        return *entire_;
    }

    const EntireSolution& entireFromBall() {
        if (!entireBall_) {
            EntireOptions opt;
            opt.tolerance = cfg_.newtonTol;
            entireBall_ = solveEntire(q_, table(0), blowUp().v, opt);
        }
        return *entireBall_;
    }

    const PotentialProfile& potential() {
        if (!potential_) potential_ = buildPotential(entire());
        return *potential_;
    }

    WeightedNorms norms() const { return WeightedNorms::make(q_); }

    const KernelResidualReport& kernels() {
        if (!kernels_) kernels_ = kernelResiduals(table(0), table(1), potential(), entire());
        return *kernels_;
    }

    const SweepTable& sweep() {
        if (!sweep_) {
            FixedPointOptions opt;
            opt.tolerance = cfg_.fixedPointTol;
            sweep_ = lambdaSweep(table(0), entire(), potential(), cfg_.potentialSpec(), cfg_.lambdas, norms(), opt);
        }
        return *sweep_;
    }

private:
    RunConfig cfg_;
    ProblemParams q_;
    SpectralConstants c_;
    CylinderGrid grid_;
    BallGrid ball_;
    std::map<int, KernelTable> tables_;
    std::optional<RadialGreenOperator> green_;
    std::optional<BranchState> minimal_;
    PicardReport picard_;
    std::optional<BranchResult> branch_;
    std::optional<BlowUpProfile> blowUp_;
    std::optional<EntireSolution> entire_, entireBall_;
    std::optional<PotentialProfile> potential_;
    std::optional<KernelResidualReport> kernels_;
    std::optional<SweepTable> sweep_;
};

namespace stages {

inline io::Json constantsJson(const ProblemParams& q, const SpectralConstants& c) {
    io::Json j;
    j["n"] = q.n;
    j["s"] = q.s;
    j["p"] = q.p;
    j["beta"] = c.beta;
    j["ds"] = c.ds;
    j["hardy"] = c.hardy;
    j["stable"] = c.stable;
    j["pJL"] = c.pJL ? io::Json(*c.pJL) : io::Json(nullptr);
    j["tau0"] = q.tau0();
    return j;
}

inline io::Csv indicialCsv(const ProblemParams& q, const SpectralConstants& c, const std::vector<int>& modes) {
    io::Csv csv({"mode", "rootZeroPlus", "rootZeroMinus", "rootInfType", "rootInfA", "rootInfB"});
    for (int m : modes) {
        const auto r = indicialRoots(q, c, m);
        csv.row() << m << r.rootsAtZero.b << r.rootsAtZero.a << (r.rootsAtInfinity.complex ? "complex" : "real")
                  << r.rootsAtInfinity.a << r.rootsAtInfinity.b;
    }
    return csv;
}

// Largest relative singular-solution residual |P L - L^p| / L^p on the grid.
inline double singularResidual(const KernelTable& tb, const ProblemParams& q, const CylinderGrid& g) {
    const double L = std::pow(computeConstants(q).beta, 1.0 / (q.p - 1.0));
    GridFunction u(g, Eigen::VectorXd::Constant(g.size(), L), Tail{L, {}, {}}, Tail{L, {}, {}});
    return (applyOperator(tb, u).values.array() - std::pow(L, q.p)).abs().maxCoeff() / std::pow(L, q.p);
}

inline double maxValidationError(const KernelTable& t) {
    double e = 0.0;
    for (auto [a, err] : t.validation) e = std::max(e, err);
    return e;
}

inline io::Json kernel(Pipeline& pl, io::ArtifactWriter& w) {
    const auto& q = pl.params();
    const auto& g = pl.grid();
    const auto half = CylinderGrid::make(g.T, 0.5 * g.h);
    io::Csv csv({"mode", "h", "alpha", "relativeError"});
    io::Json j;
    j["modes"] = io::Json::array();
    for (int m : {0, 1}) {
        const auto& t = pl.table(m);
        const auto fine = calibrate(q, m, half);
        for (auto [a, e] : t.validation) csv.row() << m << g.h << a << e;
        for (auto [a, e] : fine.validation) csv.row() << m << half.h << a << e;
        const double ec = maxValidationError(t), ef = maxValidationError(fine);
        j["modes"].push_back({{"mode", m},
                              {"c", t.c},
                              {"cAnalytic", t.cAnalytic},
                              {"betaM", t.betaM},
                              {"maxValidationError", ec},
                              {"maxValidationErrorHalfStep", ef},
                              {"observedOrder", std::log2(ec / ef)}});
    }
    j["singularResidual"] = singularResidual(pl.table(0), q, g);
    w.write("kernel_validation.csv", csv);
    io::Csv kt({"lag", "value"});
    const auto& t0 = pl.table(0);
    for (int k = -t0.kLeft; k <= t0.kRight; ++k)
        if (k != 0) kt.row() << k * t0.h << t0.kernelAt(k);
    w.write("kernel_mode0.csv", kt);
    w.write("kernel.json", j);
    return j;
}

inline io::Json ball(Pipeline& pl, io::ArtifactWriter& w) {
    const auto& q = pl.params();
    const auto& op = pl.green();
    const Eigen::VectorXd tors = op.apply(Eigen::VectorXd::Ones(op.grid.size()));
    const auto& br = pl.branch();
    io::Csv csv({"lambda", "supNorm", "arcLength", "residual"});
    for (const auto& st : br.states) csv.row() << st.lambda << st.supNorm << st.arcLength << st.residual;
    w.write("branch.csv", csv);
    io::Csv folds({"index", "lambdaStar", "supNorm", "maximum"});
    for (const auto& f : br.folds) folds.row() << f.index << f.lambdaStar << f.supNorm << f.maximum;
    w.write("folds.csv", folds);
    const auto& bu = pl.blowUp();
    io::Csv prof({"r", "W"});
    for (std::size_t k = 0; k < bu.r.size(); ++k) prof.row() << bu.r[k] << bu.W[k];
    w.write("blowup_profile.csv", prof);
    io::Json j;
    j["ballN"] = op.grid.size() - 1;
    j["greenConstant"] = op.constant;
    j["torsionAtZero"] = tors[0];
    j["torsionExpected"] = torsionConstant(q.n, q.s);
    j["torsionMaxError"] = op.torsionMaxError;
    j["picardIterations"] = pl.picard().iterations;
    j["picardMonotone"] = pl.picard().monotone;
    j["lambdaStar"] = br.folds.empty() ? io::Json(nullptr) : io::Json(br.folds.front().lambdaStar);
    j["folds"] = br.folds.size();
    j["finalSupNorm"] = br.states.back().supNorm;
    j["finalLambda"] = br.states.back().lambda;
    j["blowUpScale"] = bu.scale;
    if (pl.config().plots) {
        io::Series s{"branch", {}, {}};
        for (const auto& st : br.states) s.x.push_back(st.lambda), s.y.push_back(st.supNorm);
        w.write("branch.svg", io::svgPlot({"Ball branch", "lambda", "sup w", false, true}, {s}));
    }
    return j;
}

inline io::Json entire(Pipeline& pl, io::ArtifactWriter& w) {
    const auto& q = pl.params();
    const auto& c = pl.constants();
    const auto& sol = pl.entire();
    const auto rep = verifyAsymptotics(sol, c);
    const auto H = hamiltonianBoundary(sol, c);
    const auto phys = toPhysical(sol);
    io::Csv cyl({"t", "v", "H1"});
    for (int i = 0; i < sol.v.grid.size(); ++i) cyl.row() << sol.v.grid.node(i) << sol.v.values[i] << H.values[i];
    w.write("entire_cylinder.csv", cyl);
    io::Csv pr({"r", "w"});
    for (std::size_t k = 0; k < phys.r.size(); ++k) pr.row() << phys.r[k] << phys.w[k];
    w.write("entire_profile.csv", pr);
    io::Json j;
    j["residual"] = sol.residualNorm;
    j["iterations"] = sol.iterations;
    j["fittedLimit"] = sol.fittedLimit;
    j["expectedLimit"] = rep.expectedLimit;
    j["fitOk"] = rep.fit.ok;
    j["oscillatory"] = rep.oscillatory;
    j["expectedOscillatory"] = rep.expectedOscillatory;
    j["fittedFrequency"] = rep.fit.freq;
    j["expectedFrequency"] = rep.expectedFreq;
    j["physicalRealPart"] = rep.physicalRealPart;
    j["expectedRealPart"] = rep.expectedRealPart;
    j["hamiltonianMinusInfinity"] = H.left->limit;
    j["hamiltonianPlusInfinity"] = H.right->limit;
    j["hamiltonianFirstNode"] = H.values[0];
    j["hamiltonianLastNode"] = H.values[H.grid.last()];
    j["physicalScale"] = phys.scale;
    std::optional<double> overlap;
    if (pl.config().twoSolver) {
        const auto& alt = pl.entireFromBall();
        overlap = overlapDifference(alt.v, pl.blowUp().v, q.tau0());
        j["twoSolver"] = {{"ballSupNorm", pl.blowUp().m},
                          {"secondResidual", alt.residualNorm},
                          {"overlapDifference", *overlap},
                          {"solutionsDifference", overlapDifference(sol.v, alt.v, q.tau0())}};
    } else {
        j["twoSolver"] = nullptr;
    }
    if (pl.config().plots) {
        io::Series a{"entire", {}, {}}, hs{"H1", {}, {}};
        for (int i = 0; i < sol.v.grid.size(); ++i) {
            a.x.push_back(sol.v.grid.node(i)), a.y.push_back(sol.v.values[i]);
            hs.x.push_back(sol.v.grid.node(i)), hs.y.push_back(H.values[i]);
        }
        std::vector<io::Series> ss{a};
        if (pl.config().twoSolver) {
            io::Series b{"ball blow-up", {}, {}};
            const auto& bu = pl.blowUp().v;
            for (int i = 0; i < bu.grid.size(); ++i) b.x.push_back(bu.grid.node(i)), b.y.push_back(bu.values[i]);
            ss.push_back(b);
        }
        w.write("profile.svg", io::svgPlot({"Entire profile, cylinder variable", "t = -log r", "r^tau0 w"}, ss));
        w.write("hamiltonian.svg", io::svgPlot({"Boundary Hamiltonian", "t = -log r", "H1"}, {hs}));
    }
    return j;
}

inline io::Json linearized(Pipeline& pl, io::ArtifactWriter& w) {
    const auto& q = pl.params();
    const auto nm = pl.norms();
    const auto& kr = pl.kernels();
    const auto& pot = pl.potential();
    io::Csv csv({"t", "z0", "w1", "V"});
    for (int i = 0; i < pl.grid().size(); ++i)
        csv.row() << pl.grid().node(i) << kr.z0.values[i] << kr.w1.values[i] << pot.V.values[i];
    w.write("linearized_kernels.csv", csv);

    const auto d0 = decayFit(q, 0, kr.z0, nm);
    const auto d1 = decayFit(q, 1, kr.w1, nm);
    const LinearizedSystem sys0(pl.table(0), pot, nm);
    const auto load = cylinderLoad(q, pl.grid(), [](double r) { return std::exp(-r * r); });
    const auto s0 = sys0.solve(load);

    const LinearizedSystem sys1(pl.table(1), pot, nm);
    io::Json ortho;
    ortho["needed"] = sys1.needsOrthogonality();
    ortho["threshold"] = orthogonalityThreshold(q);
    const Eigen::VectorXd aligned = pot.V.values.cwiseProduct(kr.w1.values);
    ortho["alignedRatio"] = orthogonalityRatio(q, aligned, kr.w1);
    try {
        sys1.solve(aligned, &kr.w1);
        ortho["alignedLoadRejected"] = false;
    } catch (const SolvabilityError&) {
        ortho["alignedLoadRejected"] = true;
    }

    io::Json j;
    j["sigma"] = nm.sigma;
    j["z0Residual"] = kr.z0Residual;
    j["w1Residual"] = kr.w1Residual;
    j["z0Scale"] = kr.z0Scale;
    j["w1Scale"] = kr.w1Scale;
    j["z0PhysicalExponent"] = d0.physicalExponent;
    j["w1PhysicalExponent"] = d1.physicalExponent;
    j["w1ExpectedExponent"] = d1.expectedExponent;
    j["modeZeroSample"] = {{"load", "exp(-r^2)"},
                           {"starNorm", s0.starNorm},
                           {"starStarNorm", s0.starStarNorm},
                           {"cEstimate", s0.cEstimate},
                           {"residual", s0.residual},
                           {"smallestSingular", s0.smallestSingular}};
    j["modeOne"] = ortho;
    w.write("linearized.json", j);
    return j;
}

inline io::Json perturb(Pipeline& pl, io::ArtifactWriter& w) {
    const auto& tab = pl.sweep();
    const auto spec = pl.config().potentialSpec();
    io::Csv csv({"lambda", "phiStarNorm", "uSupNorm", "iterations", "residual"});
    io::Json runs = io::Json::array();
    int k = 0;
    for (const auto& e : tab.entries) {
        if (e.ok) {
            csv.row() << e.lambda << e.state.starNorm << e.state.uSup << e.state.iterations << e.state.residual;
            io::Csv prof({"t", "phi_cylinder", "v_plus_phi", "r_scaled", "u"});
            const auto& g = e.state.psi.grid;
            const double tau0 = pl.params().tau0();
            for (int i = 0; i < g.size(); ++i) {
                const double t = g.node(i), vv = pl.entire().v.values[i] + e.state.psi.values[i];
                // u(y) = lambda^{tau0} (w + phi)(lambda y) with r = lambda y
                prof.row() << t << e.state.psi.values[i] << vv << std::exp(-t) / e.lambda
                           << e.state.uScale * std::exp(tau0 * t) * vv;
            }
            w.write("bound_state_" + std::to_string(k) + ".csv", prof);
        } else {
            csv.row() << e.lambda << NAN << NAN << 0 << NAN;
        }
        io::Json r;
        r["lambda"] = e.lambda;
        r["ok"] = e.ok;
        if (e.ok) {
            r["starNorm"] = e.state.starNorm;
            r["uSup"] = e.state.uSup;
            r["iterations"] = e.state.iterations;
            r["damping"] = e.state.damping;
            r["radius"] = e.state.radius;
            r["residual"] = e.state.residual;
            double ratio = 0.0;
            for (std::size_t i = 2; i < e.state.updates.size(); ++i)
                ratio = std::max(ratio, e.state.updates[i] / e.state.updates[i - 1]);
            r["maxUpdateRatio"] = ratio;
        } else {
            r["error"] = e.error;
        }
        runs.push_back(r);
        ++k;
    }
    w.write("sweep.csv", csv);
    io::Json j;
    j["potential"] = spec.name();
    j["sigma"] = pl.norms().sigma;
    j["slope"] = std::isnan(tab.slope) ? io::Json(nullptr) : io::Json(tab.slope);
    j["runs"] = runs;
    w.write("perturb.json", j);
    if (pl.config().plots) {
        io::Series s{"||phi||_*", {}, {}};
        for (const auto& e : tab.entries)
            if (e.ok && e.state.starNorm > 0) s.x.push_back(e.lambda), s.y.push_back(e.state.starNorm);
        w.write("sweep.svg", io::svgPlot({"Perturbation sweep", "lambda", "||phi||_*", true, true}, {s}));
    }
    return j;
}

} // namespace stages

struct PipelineResult {
    bool ok = false;
    std::string failedStage, error;
    io::Json summary;
    io::Json manifest;
};

// Runs every stage in order and writes manifest.json; on failure the manifest lists the completed prefix.
inline PipelineResult runPipeline(const RunConfig& cfg) {
    Pipeline pl(cfg);
    io::ArtifactWriter w(cfg.outputDir());
    PipelineResult res;
    io::Json completed = io::Json::array();
    const std::vector<std::pair<std::string, std::function<io::Json()>>> list{
        {"constants",
         [&] {
             auto j = stages::constantsJson(pl.params(), pl.constants());
             w.write("constants.json", j);
             return j;
         }},
        {"indicial",
         [&] {
             w.write("indicial.csv", stages::indicialCsv(pl.params(), pl.constants(), cfg.modes));
             return io::Json{{"modes", cfg.modes}};
         }},
        {"kernel", [&] { return stages::kernel(pl, w); }},
        {"ball",
         [&] {
             auto j = stages::ball(pl, w);
             w.write("ball.json", j);
             return j;
         }},
        {"entire",
         [&] {
             auto j = stages::entire(pl, w);
             w.write("entire.json", j);
             return j;
         }},
        {"linearized", [&] { return stages::linearized(pl, w); }},
        {"perturb", [&] { return stages::perturb(pl, w); }},
    };
    res.ok = true;
    for (const auto& [name, fn] : list) {
        try {
            res.summary[name] = fn();
            completed.push_back(name);
        } catch (const Error& e) {
            res.ok = false;
            res.failedStage = name;
            res.error = e.what();
            break;
        }
    }
    res.manifest["config"] = cfg.toJson();
    res.manifest["stages"] = completed;
    res.manifest["failed"] = res.ok ? io::Json(nullptr) : io::Json{{"stage", res.failedStage}, {"error", res.error}};
    res.manifest["files"] = w.manifestFiles();
    w.write("manifest.json", res.manifest);
    return res;
}

} // namespace fracle
