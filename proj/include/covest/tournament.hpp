#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "covest/error.hpp"
#include "covest/matrix.hpp"
#include "covest/mom.hpp"
#include "covest/random.hpp"
#include "covest/samples.hpp"

namespace covest {

/// Truncation radius together with the tail-regime weight; the pair that
/// parameterizes a truncated tournament run.
struct TruncationConfig {
    double alpha;
    double gamma;

    TruncationConfig(double a, double g) : alpha(a), gamma(g) {
        if (!(a > 0.0))
            throw invalid_parameter_error("TruncationConfig: alpha must be positive");
        if (!(g >= 1.0))
            throw invalid_parameter_error("TruncationConfig: gamma must be >= 1");
    }
};

enum class TailMode { subgaussian, heavy_tailed };

enum class DirectionPolicy { standard, grid_net };

/// Knobs for one tournament run. random_pairs == 0 selects the default
/// budget of 50 * d^2 random direction pairs.
struct TournamentConfig {
    std::size_t random_pairs = 0;
    std::uint64_t seed = 0x0c07e57ULL;
    std::uint64_t stream = 0;
    DirectionPolicy policy = DirectionPolicy::standard;
};

/// Rows whose Euclidean norm exceeds alpha are replaced by the zero
/// vector; rows exactly at the boundary are kept.
inline SampleSet truncate_samples(const SampleSet& s, double alpha) {
    if (!(alpha > 0.0))
        throw invalid_parameter_error("truncate_samples: alpha must be positive");
    SampleSet out = s;
    for (std::size_t i = 0; i < s.count(); ++i) {
        if (s.row_norm2(i) > alpha) {
            double* r = out.row(i);
            for (std::size_t j = 0; j < s.dim(); ++j) r[j] = 0.0;
        }
    }
    return out;
}

/// Per-block second-moment matrices M_j = (1/m) sum over the block of
/// x x^T.
inline std::vector<SymMatrix> block_matrices(const SampleSet& s,
                                             const BlockScheme& scheme) {
    if (scheme.coverage() > s.count())
        throw invalid_input_error("block_matrices: scheme does not fit the sample");
    std::vector<SymMatrix> out;
    out.reserve(scheme.block_count);
    for (const auto& [begin, end] : scheme.blocks) {
        SymMatrix m(s.dim());
        const double w = 1.0 / static_cast<double>(end - begin);
        for (std::size_t i = begin; i < end; ++i) m.add_outer(s.row(i), w);
        out.push_back(std::move(m));
    }
    return out;
}

/// Deterministic quarter net of the unit sphere: every point of S^{d-1}
/// lies within Euclidean distance 1/4 of some net point. Explicit grids
/// exist for d <= 3 only.
inline std::vector<std::vector<double>> quarter_net(std::size_t d) {
    // Geodesic step whose chord is exactly 1/4.
    const double h = 2.0 * std::asin(0.125);
    const double two_pi = 2.0 * 3.14159265358979323846;
    std::vector<std::vector<double>> net;
    if (d == 1) {
        net.push_back({1.0});
        net.push_back({-1.0});
    } else if (d == 2) {
        const auto count = static_cast<std::size_t>(std::ceil(two_pi / h)); // 26
        for (std::size_t k = 0; k < count; ++k) {
            const double a = two_pi * static_cast<double>(k) / static_cast<double>(count);
            net.push_back({std::cos(a), std::sin(a)});
        }
    } else if (d == 3) {
        net.push_back({0.0, 0.0, 1.0});
        net.push_back({0.0, 0.0, -1.0});
        const auto rings = static_cast<std::size_t>(std::floor(3.14159265358979323846 / h));
        const auto azimuths = static_cast<std::size_t>(std::ceil(two_pi / h)); // 26
        for (std::size_t k = 1; k <= rings; ++k) {
            const double theta = h * static_cast<double>(k);
            const double st = std::sin(theta), ct = std::cos(theta);
            for (std::size_t j = 0; j < azimuths; ++j) {
                const double a =
                    two_pi * static_cast<double>(j) / static_cast<double>(azimuths);
                net.push_back({st * std::cos(a), st * std::sin(a), ct});
            }
        }
    } else {
        throw unsupported_dimension_error(
            "quarter_net: explicit grids cover d <= 3 only, got d = " +
            std::to_string(d));
    }
    return net;
}

enum class DirTag { basis, random, eigen, grid_net };

struct DirPair {
    std::vector<double> u, v;
    DirTag tag;
};

/// Finite family of unit direction pairs (u, v); deduplicated up to sign.
struct DirectionSet {
    std::vector<DirPair> pairs;
};

/// Candidate matrices for the tournament, in tie-break priority order.
struct CandidateSet {
    std::vector<SymMatrix> matrices;
};

namespace detail {

inline void canonicalize_sign(std::vector<double>& v) {
    for (double x : v) {
        if (x > 0.0) return;
        if (x < 0.0) {
            for (double& y : v) y = -y;
            return;
        }
    }
}

inline std::vector<double> unit_basis(std::size_t d, std::size_t i) {
    std::vector<double> e(d, 0.0);
    e[i] = 1.0;
    return e;
}

inline std::vector<double> random_unit(std::size_t d, RandomStream& rng) {
    // In one dimension a uniform unit vector is a fair sign; drawing it
    // directly keeps the coordinates exactly +-1 for deduplication.
    if (d == 1) return {rng.rademacher()};
    std::vector<double> v(d);
    while (true) {
        double sq = 0.0;
        for (double& x : v) {
            x = rng.normal();
            sq += x * x;
        }
        if (sq > 1e-300) {
            const double inv = 1.0 / std::sqrt(sq);
            for (double& x : v) x *= inv;
            return v;
        }
    }
}

} // namespace detail

/// Union of basis pairs, seeded random unit pairs, eigenvector pairs of
/// every candidate, and (for d <= 3 under the grid-net policy) all pairs
/// from the quarter net. Pairs are sign-canonicalized and deduplicated.
inline DirectionSet build_direction_set(std::size_t d, const CandidateSet& cands,
                                        RandomStream& rng,
                                        std::size_t random_pairs = 0,
                                        DirectionPolicy policy = DirectionPolicy::standard) {
    if (d < 1) throw invalid_parameter_error("build_direction_set: need d >= 1");
    if (random_pairs == 0) random_pairs = 50 * d * d;

    DirectionSet out;
    std::set<std::pair<std::vector<double>, std::vector<double>>> seen;
    auto push = [&](std::vector<double> u, std::vector<double> v, DirTag tag) {
        detail::canonicalize_sign(u);
        detail::canonicalize_sign(v);
        if (seen.emplace(u, v).second)
            out.pairs.push_back({std::move(u), std::move(v), tag});
    };

    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            push(detail::unit_basis(d, i), detail::unit_basis(d, j), DirTag::basis);

    for (std::size_t k = 0; k < random_pairs; ++k) {
        auto u = detail::random_unit(d, rng);
        auto v = detail::random_unit(d, rng);
        push(std::move(u), std::move(v), DirTag::random);
    }

    for (const SymMatrix& m : cands.matrices) {
        if (m.dim() != d)
            throw dimension_mismatch_error("build_direction_set: candidate dimension");
        const EigenSystem es = eigensystem(m);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                push(es.vector(i), es.vector(j), DirTag::eigen);
    }

    if (policy == DirectionPolicy::grid_net) {
        const auto net = quarter_net(d); // throws for d > 3
        for (const auto& u : net)
            for (const auto& v : net) push(u, v, DirTag::grid_net);
    }
    return out;
}

/// Coordinatewise lower median of the blocks, then each block matrix,
/// then their average; this order is the tournament tie-break order.
inline CandidateSet build_candidate_set(const std::vector<SymMatrix>& blocks) {
    if (blocks.empty())
        throw insufficient_data_error("build_candidate_set: no blocks");
    const std::size_t d = blocks.front().dim();
    CandidateSet out;

    SymMatrix med(d);
    std::vector<double> entry(blocks.size());
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            for (std::size_t b = 0; b < blocks.size(); ++b) entry[b] = blocks[b](i, j);
            med.set(i, j, lower_median(entry));
        }
    out.matrices.push_back(std::move(med));

    for (const SymMatrix& m : blocks) out.matrices.push_back(m);

    SymMatrix mean(d);
    for (const SymMatrix& m : blocks)
        mean.add_scaled(m, 1.0 / static_cast<double>(blocks.size()));
    out.matrices.push_back(std::move(mean));
    return out;
}

/// Least radius epsilon such that a strict majority of blocks satisfies
/// |v^T (M_j - Y) u| <= epsilon for every direction pair: the maximum over
/// pairs of the per-pair majority radius.
inline double tournament_depth(const SymMatrix& y, const std::vector<SymMatrix>& blocks,
                               const DirectionSet& dirs) {
    if (blocks.empty())
        throw insufficient_data_error("tournament_depth: no blocks");
    if (dirs.pairs.empty())
        throw invalid_input_error("tournament_depth: empty direction set");
    const std::size_t d = y.dim();
    for (const SymMatrix& m : blocks)
        if (m.dim() != d)
            throw dimension_mismatch_error("tournament_depth: block dimension");

    std::vector<SymMatrix> diffs;
    diffs.reserve(blocks.size());
    for (const SymMatrix& m : blocks) diffs.push_back(m - y);

    double depth = 0.0;
    std::vector<double> proj(blocks.size());
    for (const DirPair& p : dirs.pairs) {
        if (p.u.size() != d || p.v.size() != d)
            throw dimension_mismatch_error("tournament_depth: direction dimension");
        for (std::size_t b = 0; b < diffs.size(); ++b)
            proj[b] = diffs[b].bilinear(p.v, p.u);
        depth = std::max(depth, majority_radius(proj));
    }
    return depth;
}

/// Stage split and intermediate values of the full three-stage pipeline.
struct PipelineState {
    double phi1 = 0.0;
    double phi2 = 0.0;
    double gamma = 1.0;
    double beta = 0.0;
    TailMode mode = TailMode::subgaussian;
    std::size_t n1 = 0, n2 = 0, n3 = 0; // disjoint thirds, remainder to stage 3
    bool symmetrized = false;
    bool gate_checked = false;  // stage-1 sample-size gate (report only)
    bool gate_satisfied = true;
};

/// Chosen matrix plus the tournament depth it achieved and an echo of the
/// run configuration.
struct EstimateReport {
    SymMatrix estimate;
    double depth_at_estimate = 0.0;
    double delta = 0.0;
    double alpha = 0.0; // truncation radius of the reported run
    std::size_t block_count = 0;
    std::size_t block_size = 0;
    std::size_t direction_count = 0;
    std::size_t candidate_count = 0;
    std::uint64_t seed = 0;
    std::optional<PipelineState> pipeline;

    explicit EstimateReport(SymMatrix est) : estimate(std::move(est)) {}
};

/// Returns the candidate with minimal tournament depth; ties go to the
/// earlier candidate in list order.
inline EstimateReport select_estimate(const CandidateSet& cands,
                                      const std::vector<SymMatrix>& blocks,
                                      const DirectionSet& dirs) {
    if (cands.matrices.empty())
        throw invalid_input_error("select_estimate: empty candidate set");
    std::size_t best = 0;
    double best_depth = tournament_depth(cands.matrices[0], blocks, dirs);
    for (std::size_t k = 1; k < cands.matrices.size(); ++k) {
        const double depth = tournament_depth(cands.matrices[k], blocks, dirs);
        if (depth < best_depth) {
            best = k;
            best_depth = depth;
        }
    }
    EstimateReport rep(cands.matrices[best]);
    rep.depth_at_estimate = best_depth;
    rep.direction_count = dirs.pairs.size();
    rep.candidate_count = cands.matrices.size();
    return rep;
}

/// Truncate, block, and run one tournament at radius alpha.
inline EstimateReport run_truncated_tournament(const SampleSet& s, double alpha,
                                               double delta,
                                               const TournamentConfig& cfg = {}) {
    const BlockScheme scheme = partition_blocks(s.count(), delta);
    const SampleSet truncated = truncate_samples(s, alpha);
    const std::vector<SymMatrix> blocks = block_matrices(truncated, scheme);
    const CandidateSet cands = build_candidate_set(blocks);
    RandomStream rng(cfg.seed, cfg.stream);
    const DirectionSet dirs =
        build_direction_set(s.dim(), cands, rng, cfg.random_pairs, cfg.policy);
    EstimateReport rep = select_estimate(cands, blocks, dirs);
    rep.delta = delta;
    rep.alpha = alpha;
    rep.block_count = scheme.block_count;
    rep.block_size = scheme.block_size;
    rep.seed = cfg.seed;
    return rep;
}

/// Stage 2: tournament at radius kappa * sqrt(phi1); the norm estimate is
/// the operator norm of the winner.
inline double estimate_norm_stage2(const SampleSet& s, double phi1, double delta,
                                   double kappa = 4.0,
                                   const TournamentConfig& cfg = {}) {
    if (!(phi1 > 0.0))
        throw invalid_parameter_error("estimate_norm_stage2: phi1 must be positive");
    if (!(kappa > 0.0))
        throw invalid_parameter_error("estimate_norm_stage2: kappa must be positive");
    const EstimateReport rep =
        run_truncated_tournament(s, kappa * std::sqrt(phi1), delta, cfg);
    return operator_norm(rep.estimate);
}

/// 1 in the subgaussian regime; max(1, ln r_hat) under heavy tails.
inline double choose_gamma(TailMode mode, double r_hat) {
    if (!(r_hat >= 1.0))
        throw invalid_parameter_error("choose_gamma: r_hat must be >= 1");
    if (mode == TailMode::subgaussian) return 1.0;
    return std::max(1.0, std::log(r_hat));
}

/// (phi1 * phi2 * N / gamma)^(1/4).
inline double choose_beta(double phi1, double phi2, std::size_t n_samples, double gamma) {
    if (!(phi1 > 0.0) || !(phi2 > 0.0))
        throw invalid_parameter_error("choose_beta: trace and norm estimates must be positive");
    if (n_samples == 0)
        throw invalid_parameter_error("choose_beta: need a positive sample count");
    if (!(gamma > 0.0))
        throw invalid_parameter_error("choose_beta: gamma must be positive");
    return std::pow(phi1 * phi2 * static_cast<double>(n_samples) / gamma, 0.25);
}

/// Full pipeline configuration; symmetrization is on by default.
struct EstimateConfig {
    bool symmetrize_first = true;
    double kappa = 4.0;
    TournamentConfig tournament;
    /// If positive, stage 1 reports (without enforcing) whether its
    /// sub-sample satisfies N1 >= stage1_gate_c * ln(1/delta).
    double stage1_gate_c = 0.0;
};

/// Three-stage estimator: trace from the first third, norm from the
/// second, final tournament at the combined truncation level on the rest.
inline EstimateReport estimate_covariance(const SampleSet& s, double delta, TailMode mode,
                                          const EstimateConfig& cfg = {}) {
    if (s.count() < 6)
        throw insufficient_data_error("estimate_covariance: need at least 6 samples");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw invalid_parameter_error("estimate_covariance: delta must lie in (0, 1)");

    PipelineState state;
    state.mode = mode;
    state.symmetrized = cfg.symmetrize_first;

    const SampleSet work = cfg.symmetrize_first ? symmetrize(s) : s;
    const std::size_t third = work.count() / 3;
    state.n1 = third;
    state.n2 = third;
    state.n3 = work.count() - 2 * third;

    try {
        state.phi1 = estimate_trace(work.slice(0, state.n1), delta);
    } catch (const error& e) {
        throw stage_error(1, "trace", e.what());
    }
    if (cfg.stage1_gate_c > 0.0) {
        state.gate_checked = true;
        state.gate_satisfied =
            static_cast<double>(state.n1) >= cfg.stage1_gate_c * std::log(1.0 / delta);
    }

    TournamentConfig stage2_cfg = cfg.tournament;
    stage2_cfg.stream = mix_seed(cfg.tournament.stream, 2);
    try {
        state.phi2 = estimate_norm_stage2(work.slice(state.n1, state.n2), state.phi1,
                                          delta, cfg.kappa, stage2_cfg);
        if (!(state.phi2 > 0.0))
            throw degenerate_input_error("norm estimate is zero");
    } catch (const error& e) {
        throw stage_error(2, "norm", e.what());
    }

    const double r_hat = std::max(1.0, state.phi1 / state.phi2);
    state.gamma = choose_gamma(mode, r_hat);
    state.beta = choose_beta(state.phi1, state.phi2, state.n3, state.gamma);
    const TruncationConfig final_level(state.beta, state.gamma);

    TournamentConfig stage3_cfg = cfg.tournament;
    stage3_cfg.stream = mix_seed(cfg.tournament.stream, 3);
    try {
        EstimateReport rep = run_truncated_tournament(
            work.slice(2 * third, state.n3), final_level.alpha, delta, stage3_cfg);
        rep.pipeline = state;
        return rep;
    } catch (const error& e) {
        throw stage_error(3, "tournament", e.what());
    }
}

/// MoM estimate of the directional second moment over an explicit quarter
/// net, union-bound adjusted and corrected by the net factor 2.
inline double epsilon_net_norm(const SampleSet& s, double delta) {
    if (s.dim() > 3)
        throw unsupported_dimension_error(
            "epsilon_net_norm: explicit quarter nets cover d <= 3 only");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw invalid_parameter_error("epsilon_net_norm: delta must lie in (0, 1)");
    const auto net = quarter_net(s.dim());
    const double adjusted = delta / static_cast<double>(net.size());
    const BlockScheme scheme = partition_blocks(s.count(), adjusted);
    double best = 0.0;
    std::vector<double> proj(s.count());
    for (const auto& u : net) {
        for (std::size_t i = 0; i < s.count(); ++i) {
            double dot = 0.0;
            const double* r = s.row(i);
            for (std::size_t j = 0; j < s.dim(); ++j) dot += r[j] * u[j];
            proj[i] = dot * dot;
        }
        best = std::max(best, mom_scalar(proj, scheme));
    }
    return 2.0 * best;
}

} // namespace covest
