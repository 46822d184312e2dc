// covest: command line front end for the covariance estimation library.
//
//   covest estimate  three-stage robust covariance estimate of a sample CSV
//   covest bench     seeded Monte Carlo sweep driven by a config file
//   covest verify    exact finite-support oracle checks, pass/fail table
//
// Exit codes: 0 success, 1 usage or runtime error, 2 failed verification
// or failed post-sweep consistency check.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "covest/covest.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void handle_sigint(int) { g_interrupted = 1; }

std::string fmt(double v) { return covest::detail::format_double(v); }

int run_estimate(const std::string& input, double delta, const std::string& mode_name,
                 bool no_symmetrize, double kappa, std::size_t dirs,
                 std::uint64_t seed) {
    using namespace covest;

    TailMode mode;
    if (mode_name == "subgaussian") mode = TailMode::subgaussian;
    else if (mode_name == "heavy") mode = TailMode::heavy_tailed;
    else {
        std::cerr << "covest estimate: --mode must be subgaussian or heavy\n";
        return 1;
    }

    const SampleSet samples = read_samples_csv(input);

    EstimateConfig cfg;
    cfg.symmetrize_first = !no_symmetrize;
    cfg.kappa = kappa;
    cfg.tournament.random_pairs = dirs;
    cfg.tournament.seed = seed;
    const EstimateReport rep = estimate_covariance(samples, delta, mode, cfg);

    const std::size_t d = rep.estimate.dim();
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            std::cout << (j ? "," : "") << fmt(rep.estimate(i, j));
        std::cout << '\n';
    }

    std::cerr << "input=" << input << '\n'
              << "samples=" << samples.count() << '\n'
              << "dim=" << d << '\n'
              << "delta=" << fmt(delta) << '\n'
              << "mode=" << mode_name << '\n';
    if (rep.pipeline) {
        const PipelineState& p = *rep.pipeline;
        std::cerr << "symmetrized=" << (p.symmetrized ? "yes" : "no") << '\n'
                  << "split=" << p.n1 << '/' << p.n2 << '/' << p.n3 << '\n'
                  << "phi1=" << fmt(p.phi1) << '\n'
                  << "phi2=" << fmt(p.phi2) << '\n'
                  << "gamma=" << fmt(p.gamma) << '\n'
                  << "beta=" << fmt(p.beta) << '\n';
    }
    std::cerr << "depth=" << fmt(rep.depth_at_estimate) << '\n'
              << "blocks=" << rep.block_count << '\n'
              << "block_size=" << rep.block_size << '\n'
              << "directions=" << rep.direction_count << '\n'
              << "candidates=" << rep.candidate_count << '\n'
              << "seed=" << seed << '\n';
    return 0;
}

int run_bench(const std::string& config_path, std::string out_path, std::size_t jobs,
              bool no_timing) {
    using namespace covest;

    const BenchConfig cfg = load_bench_config(config_path);
    if (out_path.empty()) out_path = cfg.output_path;
    if (out_path.empty()) {
        std::cerr << "covest bench: no output path; pass --out or set output= "
                     "in the config\n";
        return 1;
    }

    const std::size_t planned = cfg.cells().size() * cfg.trials;
    std::cerr << "covest bench: " << cfg.cells().size() << " cells x " << cfg.trials
              << " trials (" << planned << " total), jobs=" << jobs << '\n';

    g_interrupted = 0;
    auto previous = std::signal(SIGINT, handle_sigint);
    const SweepResult result =
        run_sweep(cfg, jobs, []() { return g_interrupted != 0; });
    std::signal(SIGINT, previous);

    write_trials_csv(result.records, out_path, !no_timing);
    if (result.interrupted)
        std::cerr << "covest bench: interrupted; flushed " << result.records.size()
                  << " of " << planned << " trials to " << out_path << '\n';
    else
        std::cerr << "covest bench: wrote " << result.records.size() << " trials to "
                  << out_path << '\n';

    for (const CellSummary& s : result.summaries)
        std::cerr << format_cell_summary(s) << '\n';

    if (!spot_check_pipeline(result.records, cfg)) {
        std::cerr << "covest bench: spot check FAILED; recorded pipeline errors "
                     "do not reproduce\n";
        return 2;
    }
    return 0;
}

int run_verify(const std::vector<std::string>& wanted,
               const std::vector<double>& alpha_override, double resolution) {
    using namespace covest;

    if (!(resolution > 0.0)) {
        std::cerr << "covest verify: --resolution must be positive\n";
        return 1;
    }
    OracleResolution res;
    res.angular_deg = 1.0 / resolution;
    res.sphere_points =
        static_cast<std::size_t>(10000.0 * resolution);
    res.mc_directions = static_cast<std::size_t>(20000.0 * resolution);

    std::vector<NamedLaw> laws = reference_laws();
    if (!wanted.empty()) {
        std::vector<NamedLaw> picked;
        for (const std::string& name : wanted) {
            const auto it = std::find_if(laws.begin(), laws.end(),
                                         [&](const NamedLaw& l) { return l.name == name; });
            if (it == laws.end()) {
                std::cerr << "covest verify: unknown law '" << name
                          << "'; available:";
                for (const NamedLaw& l : laws) std::cerr << ' ' << l.name;
                std::cerr << '\n';
                return 1;
            }
            picked.push_back(*it);
        }
        laws = std::move(picked);
    }

    std::size_t failures = 0;
    auto report = [&failures](const std::string& law, const std::string& check,
                              bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << law << ": " << check;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << '\n';
        if (!ok) ++failures;
    };

    for (const NamedLaw& entry : laws) {
        const FiniteSupportDistribution& law = entry.law;
        const CovarianceMatrix sigma = exact_second_moment(law);
        const double sigma_norm = operator_norm(sigma);

        const WeakVarianceReport wv = weak_variance(law, res);
        report(entry.name, "weak variance below directional fourth moment",
               wv.R_value <= wv.v_value + 1e-9,
               "R=" + fmt(wv.R_value) + " v=" + fmt(wv.v_value));

        const double cap = entry.norm_equiv_L * entry.norm_equiv_L * sigma_norm;
        report(entry.name, "fourth moment below L^2 * operator norm",
               wv.v_value <= cap + 1e-9,
               "v=" + fmt(wv.v_value) + " L^2*norm=" + fmt(cap));

        if (law.dim() <= 3) {
            const LowerBoundReport lb = lower_bound_check(law, res);
            report(entry.name, "weak variance above the rank lower bound", lb.passed,
                   "R=" + fmt(lb.R_value) + " bound=" + fmt(lb.bound));
        }

        const std::vector<double>& grid =
            alpha_override.empty() ? entry.truncation_grid : alpha_override;
        const TruncationBiasReport tb = verify_truncation_bias(law, grid);
        report(entry.name, "truncation bias vanishes at full support",
               tb.zero_at_full_support, "");
        report(entry.name, "truncation bias nonincreasing in the radius",
               tb.monotone || tb.inconclusive,
               tb.inconclusive ? "constant-radius support" : "");
        report(entry.name, "truncation bias decays at the quadratic rate",
               tb.quadratic_shape, "E||X||^4=" + fmt(tb.fourth_norm_moment));

        const double alpha_full = law.max_atom_norm();
        const MatrixVarianceReport mv = matrix_variance_B(law, alpha_full);
        report(entry.name, "matrix variance bounded by alpha^2 * norm",
               mv.norm_B <= alpha_full * alpha_full * sigma_norm * (1.0 + 1e-12) + 1e-12,
               "||B||=" + fmt(mv.norm_B));
    }

    std::cout << (failures == 0 ? "all checks passed"
                                : std::to_string(failures) + " check(s) failed")
              << '\n';
    return failures == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust covariance estimation toolkit"};
    app.require_subcommand(1);

    // estimate
    std::string input, mode_name;
    double delta = 0.0, kappa = 4.0;
    std::size_t dirs = 0;
    std::uint64_t seed = 0x0c07e57ULL;
    bool no_symmetrize = false;
    CLI::App* est = app.add_subcommand(
        "estimate", "estimate a covariance matrix from a sample CSV");
    est->add_option("--input", input, "sample CSV, one observation per row")
        ->required();
    est->add_option("--delta", delta, "failure probability in (0, 1)")->required();
    est->add_option("--mode", mode_name, "tail regime: subgaussian | heavy")
        ->required();
    est->add_flag("--no-symmetrize", no_symmetrize,
                  "treat the data as already centered");
    est->add_option("--kappa", kappa, "stage-2 truncation multiplier (default 4)");
    est->add_option("--dirs", dirs,
                    "random direction pairs per tournament (default 50 d^2)");
    est->add_option("--seed", seed, "seed for direction sampling");

    // bench
    std::string config_path, out_path;
    std::size_t jobs = 1;
    bool no_timing = false;
    CLI::App* bench =
        app.add_subcommand("bench", "run a seeded Monte Carlo benchmark sweep");
    bench->add_option("--config", config_path, "flat key=value sweep config")
        ->required();
    bench->add_option("--out", out_path, "output CSV path (overrides config)");
    bench->add_option("--jobs", jobs, "worker threads (default 1)");
    bench->add_flag("--no-timing", no_timing,
                    "omit wall-time columns for byte-level reproducibility");

    // verify
    std::vector<std::string> laws;
    std::vector<double> alpha_grid;
    double resolution = 1.0;
    CLI::App* verify = app.add_subcommand(
        "verify", "run the exact finite-support oracle checks");
    verify->add_option("--law", laws, "restrict to named laws (repeatable)");
    verify->add_option("--alpha-grid", alpha_grid,
                       "truncation radii for the bias table")
        ->delimiter(',');
    verify->add_option("--resolution", resolution,
                       "direction grid density multiplier (default 1)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (est->parsed())
            return run_estimate(input, delta, mode_name, no_symmetrize, kappa, dirs,
                                seed);
        if (bench->parsed())
            return run_bench(config_path, out_path, std::max<std::size_t>(1, jobs),
                             no_timing);
        if (verify->parsed()) return run_verify(laws, alpha_grid, resolution);
    } catch (const covest::error& e) {
        std::cerr << "covest: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
