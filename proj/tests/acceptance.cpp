// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "dynqr/backtest.hpp"
#include "dynqr/cli/commands.hpp"
#include "dynqr/cli/csv.hpp"
#include "dynqr/dgp.hpp"
#include "dynqr/fitter.hpp"
#include "dynqr/optim.hpp"

#include <fmt/core.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace dynqr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return s;
}

double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
    }
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dynqr_acceptance_" + name);
    fs::remove_all(dir);
    return dir;
}

Outcome optimizer_sanity() {
    optim::OptimOptions s;
    s.seed = 1;
    s.max_evaluations = 20000;
    s.target_value = 1e-10;
    s.pop_size = 4 + static_cast<std::size_t>(3.0 * std::log(20.0));
    const auto a = optim::cmaes_minimize(sphere, std::vector<double>(20, 3.0), 2.0, s);

    optim::OptimOptions r;
    r.seed = 1;
    r.max_evaluations = 200000;
    r.target_value = 1e-6;
    const auto b = optim::cmaes_minimize(rosenbrock, std::vector<double>(10, 0.0), 0.5, r);

    const auto c = optim::nelder_mead_minimize(rosenbrock, std::vector<double>{-1.2, 1.0}, optim::OptimOptions{});
    const bool ok = a.best_value < 1e-10 && a.evaluations <= 20000 && b.best_value < 1e-6 &&
                    b.evaluations <= 200000 && c.best_value < 1e-6;
    return {ok, fmt::format("sphere20 {:.3g} in {} evals; rosenbrock10 {:.3g} in {} evals; NM rosenbrock2 {:.3g}",
                            a.best_value, a.evaluations, b.best_value, b.evaluations, c.best_value)};
}

Outcome qr_recovery() {
    double worst = 0.0;
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        dgp::DgpConfig cfg;
        cfg.design = dgp::Design::y1;
        cfg.process = dgp::Process::qar1;
        cfg.T = 50;
        cfg.seed = seed;
        const SeriesData data = dgp::run_replications(cfg, 1, QuantileGrid::deciles()).front().data;
        for (double tau : {0.1, 0.5, 0.9}) {
            fitter::FitRequest req;
            req.data = data;
            req.spec = dgp::estimation_spec(cfg);
            req.spec.exog_columns = {0};
            req.grid = QuantileGrid({tau});
            req.seed = seed;
            const auto fit = fitter::fit(req);
            const Design d = build_design(data, req.spec);
            const std::vector<double> y(data.y.begin() + static_cast<std::ptrdiff_t>(d.first_valid), data.y.end());
            const auto oracle = fitter::qr_oracle(y, d.effective(), tau);
            const double fitted = fit.pinball_component * static_cast<double>(y.size());
            const double rel = (fitted - oracle.loss) / oracle.loss;
            worst = std::max(worst, rel);
            ok = ok && rel <= 1e-3;
        }
    }
    return {ok, fmt::format("30 fits, worst relative excess over the oracle {:.3g}", worst)};
}

cli::RunConfig mc_config(const std::string& design, const std::string& process, std::vector<double> lambdas,
                         std::size_t reps, const fs::path& out) {
    return cli::parse_config(json{{"seed", 20240101},
                                  {"output_dir", out.string()},
                                  {"dgp", {{"process", process}}},
                                  {"montecarlo",
                                   {{"replications", reps},
                                    {"lambdas", lambdas},
                                    {"designs", {design}},
                                    {"sample_sizes", {50}},
                                    {"include_nelder_mead", false}}}});
}

Outcome crossing_monotonicity() {
    const fs::path out = scratch("crossing");
    (void)cli::cmd_montecarlo(mc_config("y3", "dqar11", {0.0, 1.0, 5.0}, 10, out));
    const json rows = json::parse(slurp(out / "crossing.json")).at("rows");
    std::map<double, double> pct;
    for (const auto& r : rows) {
        pct[r.at("lambda").get<double>()] = r.at("crossing_pct").get<double>();
    }
    const double c0 = pct.at(0.0), c1 = pct.at(1.0), c5 = pct.at(5.0);
    const bool ok = c5 <= c1 && c1 <= c0 && c5 < 1.0 && c0 > 1.0;
    return {ok, fmt::format("mean crossing % over 10 reps: lambda 0 {:.3f}, lambda 1 {:.3f}, lambda 5 {:.3f}", c0, c1,
                            c5)};
}

Outcome bias_direction() {
    const fs::path out = scratch("bias");
    (void)cli::cmd_montecarlo(mc_config("y1", "qar1", {0.0, 5.0}, 10, out));
    const json rows = json::parse(slurp(out / "bias.json")).at("rows");
    double b0 = NAN, b5 = NAN;
    for (const auto& r : rows) {
        if (std::abs(r.at("tau").get<double>() - 0.1) < 1e-12) {
            (r.at("lambda").get<double>() == 0.0 ? b0 : b5) = r.at("bias").get<double>();
        }
    }
    return {b5 <= b0, fmt::format("mean bias at tau 0.1 over 10 reps: lambda 0 {:.4f}, lambda 5 {:.4f}", b0, b5)};
}

Outcome dgp_coverage() {
    const QuantileGrid grid({0.1, 0.5, 0.9});
    double worst = 0.0;
    std::size_t paths = 0;
    for (auto d : {dgp::Design::y1, dgp::Design::y2, dgp::Design::y3}) {
        for (auto p : {dgp::Process::qar1, dgp::Process::dqar11}) {
            if (d == dgp::Design::y3 && p == dgp::Process::dqar11) {
                continue;  // a crossing-free 5000-step path is practically never drawn for this cell
            }
            dgp::DgpConfig cfg;
            cfg.design = d;
            cfg.process = p;
            cfg.T = 5000;
            std::mt19937_64 rng(5000);
            const auto ds = dgp::simulate_path(cfg, grid, rng);
            for (std::size_t q = 0; q < grid.size(); ++q) {
                std::size_t hits = 0;
                for (std::size_t t = 0; t < ds.data.size(); ++t) {
                    hits += ds.data.y[t] <= ds.true_paths(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(q));
                }
                worst = std::max(worst, std::abs(static_cast<double>(hits) / 5000.0 - grid[q]));
            }
            ++paths;
        }
    }
    return {worst <= 0.02, fmt::format("{} design/process paths of length 5000, worst |coverage - tau| {:.4f} "
                                       "(y3 with the lagged-quantile term excluded)",
                                       paths, worst)};
}

Outcome rearrangement_dominance() {
    dgp::DgpConfig cfg;
    cfg.design = dgp::Design::y3;
    cfg.process = dgp::Process::dqar11;
    cfg.T = 254;
    cfg.seed = 254;
    const auto ds = dgp::run_replications(cfg, 1, QuantileGrid::deciles()).front();
    backtest::BacktestPlan plan;
    plan.initial_window = 100;
    plan.fit_template.spec = dgp::estimation_spec(cfg);
    plan.fit_template.spec.exog_columns = {0};
    plan.fit_template.lambda = 0.0;
    plan.fit_template.seed = 7;
    plan.fit_template.optim_options.max_iters = 150;
    const auto res = backtest::run_backtest(ds.data, plan);
    const double u = res.unsorted.score(scoring::WeightScheme::uniform);
    const double s = res.sorted.score(scoring::WeightScheme::uniform);
    return {res.records.size() == 153 && s <= u,
            fmt::format("{} one-step forecasts; uniform qwCRPS sorted {:.6f} vs unsorted {:.6f}", res.records.size(), s,
                        u)};
}

Outcome coefficient_form_consistency() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> pick_t(1, 60), pick_k(1, 4), pick_q(2, 9);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const int T = pick_t(rng), K1 = pick_k(rng), Q = pick_q(rng);
        CoefficientSet c(static_cast<std::size_t>(Q), static_cast<std::size_t>(K1), 0);
        Matrix X(T, K1);
        for (auto* m : {&c.beta, &X}) {
            for (Eigen::Index i = 0; i < m->size(); ++i) {
                m->data()[i] = normal(rng);
            }
        }
        const double path_form =
            crossing_distance(quantile_recursion(c, X, std::vector<double>(static_cast<std::size_t>(Q), 0.0)));
        double sum = 0.0;
        for (int q = 1; q < Q; ++q) {
            const Vector gamma = (c.beta.row(q) - c.beta.row(q - 1)).transpose();
            for (int t = 0; t < T; ++t) {
                sum += std::max(0.0, -X.row(t).dot(gamma));
            }
        }
        const double coef_form = sum / static_cast<double>((Q - 1) * T);
        const double scale = std::max(std::abs(coef_form), 1e-300);
        worst = std::max(worst, coef_form == 0.0 ? std::abs(path_form) : std::abs(path_form - coef_form) / scale);
    }
    return {worst <= 1e-12, fmt::format("1000 draws, worst relative difference {:.3g}", worst)};
}

Outcome montecarlo_determinism() {
    const fs::path dir = scratch("determinism");
    fs::create_directories(dir);
    std::ofstream(dir / "config.json") << json{{"seed", 99},
                                               {"dgp", {{"process", "dqar11"}}},
                                               {"fit", {{"optim", {{"max_iters", 100}}}}},
                                               {"montecarlo", {{"replications", 2}, {"designs", {"y1", "y3"}}}}}
                                              .dump();
    std::vector<std::string> files;
    for (const char* run : {"a", "b"}) {
        const std::string config = (dir / "config.json").string();
        const std::string out = (dir / run).string();
        const char* argv[] = {"dynqr", "montecarlo", "--config", config.c_str(), "--out", out.c_str()};
        std::ostringstream so, se;
        if (cli::run(6, argv, so, se) != 0) {
            return {false, "montecarlo failed: " + se.str()};
        }
    }
    std::size_t compared = 0;
    bool same = true;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const fs::path other = dir / "b" / entry.path().filename();
        same = same && fs::exists(other) && slurp(entry.path()) == slurp(other);
        ++compared;
    }
    return {same && compared == 4, fmt::format("{} output files compared byte for byte", compared)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"optimizer sanity", optimizer_sanity},
        {"QR recovery against the subset oracle", qr_recovery},
        {"crossing penalty monotonicity", crossing_monotonicity},
        {"bias improvement direction", bias_direction},
        {"DGP coverage", dgp_coverage},
        {"rearrangement dominance", rearrangement_dominance},
        {"crossing distance path/coefficient consistency", coefficient_form_consistency},
        {"montecarlo determinism", montecarlo_determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        fmt::print("criterion {}: {} - {}: {} [{:.1f}s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                   o.detail, secs);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
