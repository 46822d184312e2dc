// Acceptance gate for the estimation library. Each criterion prints one
// [PASS]/[FAIL] line with its measured values and elapsed time; the
// process exits 2 if any criterion fails. Runtime budgets are part of the
// criteria and enforced.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "covest/covest.hpp"

using namespace covest;

namespace {

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

struct Gate {
    int total = 0;
    int failed = 0;

    void run(const std::string& name, double budget_seconds,
             const std::function<std::pair<bool, std::string>()>& body) {
        ++total;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string detail;
        try {
            std::tie(ok, detail) = body();
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        if (elapsed > budget_seconds) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += "exceeded the " + fmt(budget_seconds) + " s budget";
        }
        std::printf("[%s] %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", name.c_str(),
                    detail.c_str(), elapsed);
        std::fflush(stdout);
        if (!ok) ++failed;
    }
};

BenchConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_bench_config(in);
}

// Shared between the scaling-rate criterion and the determinism criterion,
// which reruns the identical sweep and compares bytes.
const char* const kScalingConfigText =
    "distribution = gaussian\n"
    "grid.d = 8\n"
    "grid.N = 1000,2000,4000\n"
    "grid.delta = 0.01\n"
    "trials = 300\n"
    "seed = 20260803\n";

std::optional<SweepResult> g_scaling_sweep;

const SweepResult& scaling_sweep() {
    if (!g_scaling_sweep)
        g_scaling_sweep = run_sweep(parse_config_text(kScalingConfigText));
    return *g_scaling_sweep;
}

const NamedLaw& law_by_name(const std::vector<NamedLaw>& laws,
                            const std::string& name) {
    for (const NamedLaw& l : laws)
        if (l.name == name) return l;
    throw invalid_input_error("no reference law named " + name);
}

std::pair<bool, std::string> stage1_trace_coverage() {
    const CovarianceMatrix sigma =
        CovarianceMatrix::diagonal(std::vector<double>(4, 1.0));
    const int trials = 200;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        RandomStream rng(20260801, static_cast<std::uint64_t>(t));
        const SampleSet s = sample_gaussian(sigma, 2000, rng);
        const double phi1 = estimate_trace(s, 0.01);
        if (phi1 >= 2.0 && phi1 <= 8.0) ++hits;
    }
    return {hits >= 198, "trace estimate in [2, 8] in " + std::to_string(hits) +
                             "/200 trials (need 198)"};
}

std::pair<bool, std::string> stage2_norm_coverage() {
    const CovarianceMatrix sigma = CovarianceMatrix::diagonal({4.0, 1.0, 1.0});
    const double true_trace = 6.0; // isolates the norm stage from stage 1
    const int trials = 200;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        RandomStream rng(20260802, static_cast<std::uint64_t>(t));
        const SampleSet s = sample_gaussian(sigma, 3000, rng);
        TournamentConfig cfg;
        cfg.seed = mix_seed(20260802, static_cast<std::uint64_t>(t));
        const double phi2 = estimate_norm_stage2(s, true_trace, 0.01, 4.0, cfg);
        if (phi2 >= 2.0 && phi2 <= 8.0) ++hits;
    }
    return {hits >= 190, "norm estimate in [2, 8] in " + std::to_string(hits) +
                             "/200 trials (need 190)"};
}

std::pair<bool, std::string> n_scaling_rate() {
    const SweepResult& res = scaling_sweep();
    if (res.summaries.size() != 3)
        return {false, "expected 3 cells, got " +
                           std::to_string(res.summaries.size())};
    const double lo = std::sqrt(2.0) * 0.75;
    const double hi = std::sqrt(2.0) * 1.25;
    std::string seen;
    bool ok = true;
    for (std::size_t c = 0; c + 1 < 3; ++c) {
        const double ratio =
            res.summaries[c].q50_pipeline / res.summaries[c + 1].q50_pipeline;
        ok = ok && ratio >= lo && ratio <= hi;
        if (!seen.empty()) seen += ", ";
        seen += fmt(ratio);
    }
    return {ok, "median-error ratios across doubled N: " + seen + " (need [" +
                    fmt(lo) + ", " + fmt(hi) + "])"};
}

std::pair<bool, std::string> heavy_tail_quantile_dominance() {
    const BenchConfig cfg = parse_config_text(
        "distribution = student_t\n"
        "grid.d = 8\n"
        "grid.N = 6000\n"
        "grid.delta = 0.005\n"
        "grid.nu = 5\n"
        "trials = 300\n"
        "seed = 20260813\n"
        "estimators = pipeline,empirical\n");
    const SweepResult res = run_sweep(cfg);
    std::vector<double> pipeline, empirical;
    for (const TrialRecord& r : res.records) {
        if (std::isfinite(r.err_pipeline)) pipeline.push_back(r.err_pipeline);
        if (std::isfinite(r.err_empirical)) empirical.push_back(r.err_empirical);
    }
    if (pipeline.size() != 300 || empirical.size() != 300)
        return {false, "estimator failures in the sweep"};
    const double qp = lower_quantile(pipeline, 0.995);
    const double qe = lower_quantile(empirical, 0.995);
    return {qp <= qe, "0.995-quantile of error: robust " + fmt(qp) +
                          " vs plain average " + fmt(qe)};
}

std::pair<bool, std::string> weak_variance_oracle() {
    const auto laws = reference_laws();
    const NamedLaw& flat = law_by_name(laws, "flat-signs");
    const WeakVarianceReport wv = weak_variance(flat.law);
    const double R = wv.R_value;

    const bool near_one = std::fabs(R - 1.0) <= 0.001;
    const double upper = std::sqrt(2.0); // sqrt(2) * alpha_1 * alpha_2
    const bool below_upper = R <= upper + 1e-12;
    const LowerBoundReport lb = lower_bound_check(flat.law);
    const bool above_lower =
        lb.passed && std::fabs(lb.bound - std::sqrt(0.5)) <= 1e-9;

    return {near_one && below_upper && above_lower,
            "R = " + fmt(R, 10) + ", bounds " + fmt(lb.bound) + " <= R <= " +
                fmt(upper) + " hold"};
}

std::pair<bool, std::string> truncation_bias_shape() {
    const auto laws = reference_laws();
    const NamedLaw& two_atom = law_by_name(laws, "two-atom");
    const TruncationBiasReport rep =
        verify_truncation_bias(two_atom.law, {1.5, 2.0, 2.5, 3.0});

    std::string biases;
    for (const TruncationBiasRow& row : rep.rows) {
        if (!biases.empty()) biases += "/";
        biases += fmt(row.op_bias);
    }
    const bool exact_ends = rep.rows.front().op_bias == 4.5 &&
                            rep.rows.back().op_bias == 0.0 &&
                            rep.rows.back().trace_bias == 0.0;
    const bool ok = rep.monotone && rep.quadratic_shape &&
                    rep.zero_at_full_support && exact_ends;
    return {ok, "biases " + biases + " exactly; nonincreasing and alpha^2-bounded"};
}

std::pair<bool, std::string> moment_ordering() {
    bool ok = true;
    std::size_t checked = 0;
    std::string worst;
    for (const NamedLaw& entry : reference_laws()) {
        const WeakVarianceReport wv = weak_variance(entry.law);
        const double cap = entry.norm_equiv_L * entry.norm_equiv_L *
                           operator_norm(exact_second_moment(entry.law));
        const bool this_ok =
            wv.R_value <= wv.v_value + 1e-9 && wv.v_value <= cap + 1e-9;
        if (!this_ok) worst = entry.name;
        ok = ok && this_ok;
        ++checked;
    }
    return {ok, ok ? "R <= v <= L^2 * operator norm on all " +
                         std::to_string(checked) + " reference laws"
                   : "ordering fails on law " + worst};
}

std::pair<bool, std::string> net_norm_bracket() {
    int checked = 0;
    for (std::size_t d : {std::size_t{2}, std::size_t{3}}) {
        const auto net = quarter_net(d);
        for (int k = 0; k < 100; ++k) {
            RandomStream rng(20260808, d * 1000 + static_cast<std::uint64_t>(k));
            SymMatrix a(d);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j <= i; ++j) a.set(i, j, rng.normal());
            const double norm = operator_norm(a);
            double sup = 0.0;
            for (const auto& u : net)
                for (const auto& v : net)
                    sup = std::max(sup, std::fabs(a.bilinear(u, v)));
            const double slack = 1e-12 * std::max(1.0, norm);
            if (!(sup <= norm + slack) || !(norm <= 2.0 * sup + slack))
                return {false, "bracket violated for a " + std::to_string(d) + "x" +
                                   std::to_string(d) + " matrix (sup " + fmt(sup) +
                                   ", norm " + fmt(norm) + ")"};
            ++checked;
        }
    }
    return {true, "grid sup <= norm <= 2 * sup on " + std::to_string(checked) +
                      " random symmetric matrices"};
}

std::pair<bool, std::string> corrupted_block_robustness() {
    const std::vector<std::vector<double>> base = {{1.0, 0.5},
                                                   {-0.3, 1.2},
                                                   {0.7, -0.4},
                                                   {1.1, 0.2},
                                                   {-0.6, -0.9}};
    SampleSet s(2, 25);
    for (std::size_t block = 0; block < 5; ++block) {
        const double scale = block == 4 ? 100.0 : 1.0;
        for (std::size_t i = 0; i < 5; ++i) {
            s(5 * block + i, 0) = base[i][0] * scale;
            s(5 * block + i, 1) = base[i][1] * scale;
        }
    }

    const BlockScheme scheme = partition_blocks(25, 0.01); // five blocks of five
    const std::vector<SymMatrix> blocks = block_matrices(s, scheme);
    const SymMatrix clean = blocks[0];
    for (std::size_t j = 1; j < 4; ++j)
        if (!(blocks[j] == clean)) return {false, "clean blocks differ"};

    const CandidateSet cands = build_candidate_set(blocks);
    RandomStream rng(20260809);
    const DirectionSet dirs = build_direction_set(2, cands, rng);
    const EstimateReport rep = select_estimate(cands, blocks, dirs);

    const bool ok = rep.depth_at_estimate == 0.0 && rep.estimate == clean;
    return {ok, "winner equals the clean block matrix bitwise with depth " +
                    fmt(rep.depth_at_estimate)};
}

SymMatrix rotate_sym(const SymMatrix& c, const Matrix& q) {
    const std::size_t d = c.dim();
    SymMatrix out(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                double inner = 0.0;
                for (std::size_t b = 0; b < d; ++b) inner += c(a, b) * q(j, b);
                sum += q(i, a) * inner;
            }
            out.set(i, j, sum);
        }
    return out;
}

Matrix givens(std::size_t d, std::size_t i, std::size_t j, double angle) {
    Matrix g = Matrix::identity(d);
    g(i, i) = std::cos(angle);
    g(j, j) = std::cos(angle);
    g(i, j) = -std::sin(angle);
    g(j, i) = std::sin(angle);
    return g;
}

std::pair<bool, std::string> equivariance_suite() {
    const CovarianceMatrix sigma = CovarianceMatrix::diagonal({2.0, 1.0, 0.5});

    // Scaling the data by t scales the full pipeline output by t^2.
    RandomStream rng(20260810);
    const SampleSet s = sample_gaussian(sigma, 1200, rng);
    SampleSet s3 = s;
    for (std::size_t i = 0; i < s3.count(); ++i)
        for (std::size_t j = 0; j < s3.dim(); ++j) s3(i, j) *= 3.0;

    const EstimateConfig cfg;
    const EstimateReport plain =
        estimate_covariance(s, 0.01, TailMode::subgaussian, cfg);
    const EstimateReport scaled =
        estimate_covariance(s3, 0.01, TailMode::subgaussian, cfg);
    SymMatrix want_scaled = plain.estimate;
    want_scaled.scale(9.0);
    const double scale_rel = operator_norm(scaled.estimate - want_scaled) /
                             operator_norm(want_scaled);

    // Rotating blocks, candidates, and directions together rotates the
    // tournament winner. The direction family itself is basis-anchored, so
    // the check rotates it explicitly.
    RandomStream rng_rot(20260811);
    const SampleSet sr = sample_gaussian(sigma, 600, rng_rot);
    const BlockScheme scheme = partition_blocks(sr.count(), 0.01);
    const std::vector<SymMatrix> blocks = block_matrices(sr, scheme);
    const CandidateSet cands = build_candidate_set(blocks);
    RandomStream dir_rng(20260812);
    const DirectionSet dirs = build_direction_set(3, cands, dir_rng);

    const Matrix q = givens(3, 0, 1, 0.3) * givens(3, 0, 2, 0.7) *
                     givens(3, 1, 2, 1.1);
    SampleSet sq(3, sr.count());
    for (std::size_t i = 0; i < sr.count(); ++i)
        for (std::size_t a = 0; a < 3; ++a) {
            double sum = 0.0;
            for (std::size_t b = 0; b < 3; ++b) sum += q(a, b) * sr(i, b);
            sq(i, a) = sum;
        }
    const std::vector<SymMatrix> blocks_q = block_matrices(sq, scheme);
    CandidateSet cands_q;
    for (const SymMatrix& c : cands.matrices)
        cands_q.matrices.push_back(rotate_sym(c, q));
    DirectionSet dirs_q;
    for (const DirPair& p : dirs.pairs) {
        DirPair rotated;
        rotated.tag = p.tag;
        rotated.u.assign(3, 0.0);
        rotated.v.assign(3, 0.0);
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) {
                rotated.u[a] += q(a, b) * p.u[b];
                rotated.v[a] += q(a, b) * p.v[b];
            }
        dirs_q.pairs.push_back(std::move(rotated));
    }

    const EstimateReport won = select_estimate(cands, blocks, dirs);
    const EstimateReport won_q = select_estimate(cands_q, blocks_q, dirs_q);
    const SymMatrix want_rot = rotate_sym(won.estimate, q);
    const double rot_rel =
        operator_norm(won_q.estimate - want_rot) / operator_norm(want_rot);
    const double depth_rel =
        std::fabs(won_q.depth_at_estimate - won.depth_at_estimate) /
        std::max(1.0, won.depth_at_estimate);

    const bool ok = scale_rel <= 1e-9 && rot_rel <= 1e-9 && depth_rel <= 1e-9;
    return {ok, "relative deviations: scaling " + fmt(scale_rel, 2) +
                    ", rotation " + fmt(rot_rel, 2) + ", depth " +
                    fmt(depth_rel, 2) + " (all need <= 1e-09)"};
}

std::pair<bool, std::string> sweep_determinism() {
    const SweepResult& first = scaling_sweep();
    const SweepResult second = run_sweep(parse_config_text(kScalingConfigText));

    std::ostringstream a, b;
    write_trials_csv(first.records, a, false);
    write_trials_csv(second.records, b, false);
    const bool ok = a.str() == b.str();
    return {ok, ok ? std::to_string(a.str().size()) +
                         " CSV bytes identical across two runs "
                         "(timing columns excluded)"
                   : "CSV output differs between runs"};
}

} // namespace

int main() {
    Gate gate;
    gate.run("stage1-trace-coverage", 10.0, stage1_trace_coverage);
    gate.run("stage2-norm-coverage", 60.0, stage2_norm_coverage);
    gate.run("n-scaling-rate", 300.0, n_scaling_rate);
    gate.run("heavy-tail-quantile-dominance", 300.0, heavy_tail_quantile_dominance);
    gate.run("weak-variance-oracle", 5.0, weak_variance_oracle);
    gate.run("truncation-bias-shape", 1.0, truncation_bias_shape);
    gate.run("moment-ordering", 10.0, moment_ordering);
    gate.run("net-norm-bracket", 10.0, net_norm_bracket);
    gate.run("corrupted-block-robustness", 1.0, corrupted_block_robustness);
    gate.run("equivariance-suite", 5.0, equivariance_suite);
    gate.run("sweep-determinism", 600.0, sweep_determinism);

    std::printf("%d of %d criteria passed\n", gate.total - gate.failed, gate.total);
    return gate.failed == 0 ? 0 : 2;
}
