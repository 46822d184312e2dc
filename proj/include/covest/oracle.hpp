#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covest/error.hpp"
#include "covest/matrix.hpp"
#include "covest/random.hpp"

namespace covest {

/// Finitely supported law given by atoms and probabilities. Expectations
/// over such a law are exact weighted sums, which makes it the reference
/// oracle for the estimators.
class FiniteSupportDistribution {
public:
    using Atom = std::pair<std::vector<double>, double>;

    explicit FiniteSupportDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty())
            throw invalid_input_error("FiniteSupportDistribution: no atoms");
        dim_ = atoms_.front().first.size();
        if (dim_ == 0)
            throw invalid_input_error("FiniteSupportDistribution: zero-dimensional atom");
        double total = 0.0;
        for (const auto& [x, p] : atoms_) {
            if (x.size() != dim_)
                throw dimension_mismatch_error(
                    "FiniteSupportDistribution: atoms of mixed dimension");
            for (double c : x)
                if (!std::isfinite(c))
                    throw invalid_input_error(
                        "FiniteSupportDistribution: non-finite atom coordinate");
            if (!(p >= 0.0))
                throw invalid_parameter_error(
                    "FiniteSupportDistribution: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw invalid_parameter_error(
                "FiniteSupportDistribution: probabilities sum to " +
                std::to_string(total));
    }

    /// All 2^d sign combinations of the coefficient vector, equally
    /// likely. Coefficients may repeat here; only nonnegativity is needed.
    static FiniteSupportDistribution rademacher_diag(const std::vector<double>& alpha) {
        if (alpha.empty() || alpha.size() > 20)
            throw invalid_parameter_error(
                "rademacher_diag embedding: need 1 <= d <= 20 coefficients");
        for (double a : alpha)
            if (!(a >= 0.0))
                throw invalid_parameter_error(
                    "rademacher_diag embedding: coefficients must be >= 0");
        const std::size_t d = alpha.size();
        const std::size_t count = std::size_t{1} << d;
        const double prob = 1.0 / static_cast<double>(count);
        std::vector<Atom> atoms;
        atoms.reserve(count);
        for (std::size_t mask = 0; mask < count; ++mask) {
            std::vector<double> x(d);
            for (std::size_t j = 0; j < d; ++j)
                x[j] = (mask >> j & 1) ? alpha[j] : -alpha[j];
            atoms.emplace_back(std::move(x), prob);
        }
        return FiniteSupportDistribution(std::move(atoms));
    }

    std::size_t dim() const noexcept { return dim_; }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }

    double atom_norm(std::size_t a) const {
        double sq = 0.0;
        for (double c : atoms_[a].first) sq += c * c;
        return std::sqrt(sq);
    }

    double max_atom_norm() const {
        double m = 0.0;
        for (std::size_t a = 0; a < atoms_.size(); ++a)
            m = std::max(m, atom_norm(a));
        return m;
    }

    /// E ||X||^4 by exact enumeration.
    double fourth_norm_moment() const {
        double sum = 0.0;
        for (std::size_t a = 0; a < atoms_.size(); ++a) {
            const double nrm = atom_norm(a);
            sum += atoms_[a].second * nrm * nrm * nrm * nrm;
        }
        return sum;
    }

private:
    std::vector<Atom> atoms_;
    std::size_t dim_;
};

/// E X X^T, truncated at radius alpha when given (atoms beyond the radius
/// contribute zero; the boundary is kept).
inline CovarianceMatrix exact_second_moment(const FiniteSupportDistribution& p,
                                            std::optional<double> alpha = std::nullopt) {
    SymMatrix acc(p.dim());
    for (std::size_t a = 0; a < p.atoms().size(); ++a) {
        if (alpha && p.atom_norm(a) > *alpha) continue;
        acc.add_outer(p.atoms()[a].first.data(), p.atoms()[a].second);
    }
    return CovarianceMatrix(acc);
}

/// Direction-grid density for the oracle sweeps.
struct OracleResolution {
    double angular_deg = 1.0;         // d = 2 grid step
    std::size_t sphere_points = 10000; // d = 3 Fibonacci grid size
    std::size_t mc_directions = 20000; // d > 3 sampled directions
    std::uint64_t mc_seed = 1234;
};

namespace detail {

inline std::vector<std::vector<double>> oracle_directions(std::size_t d,
                                                          const OracleResolution& res) {
    std::vector<std::vector<double>> dirs;
    if (d == 1) {
        dirs.push_back({1.0});
    } else if (d == 2) {
        const auto count = static_cast<std::size_t>(
            std::max(4.0, std::ceil(360.0 / res.angular_deg)));
        const double two_pi = 2.0 * 3.14159265358979323846;
        for (std::size_t k = 0; k < count; ++k) {
            const double a = two_pi * static_cast<double>(k) / static_cast<double>(count);
            dirs.push_back({std::cos(a), std::sin(a)});
        }
    } else if (d == 3) {
        // Fibonacci sphere: deterministic, nearly uniform.
        const std::size_t n = std::max<std::size_t>(16, res.sphere_points);
        const double golden_angle = 3.14159265358979323846 * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < n; ++i) {
            const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) /
                                       static_cast<double>(n);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double theta = golden_angle * static_cast<double>(i);
            dirs.push_back({r * std::cos(theta), r * std::sin(theta), z});
        }
    } else {
        RandomStream rng(res.mc_seed, d);
        for (std::size_t k = 0; k < res.mc_directions; ++k) {
            std::vector<double> v(d);
            double sq = 0.0;
            for (double& x : v) {
                x = rng.normal();
                sq += x * x;
            }
            if (sq <= 1e-300) {
                --k;
                continue;
            }
            const double inv = 1.0 / std::sqrt(sq);
            for (double& x : v) x *= inv;
            dirs.push_back(std::move(v));
        }
    }
    return dirs;
}

} // namespace detail

struct WeakVarianceReport {
    enum class Method { exact_enumeration, grid_search, monte_carlo };

    double R_value = 0.0;
    double v_value = 0.0;
    std::vector<double> argmax_u, argmax_v;
    Method method = Method::grid_search;
};

/// sqrt of sup over unit v of E <X, v>^4, the directional fourth-moment
/// statistic. Atom enumeration is exact; the sup runs over the oracle
/// direction grid.
inline double fourth_moment_sup(const FiniteSupportDistribution& p,
                                const OracleResolution& res = {}) {
    const auto dirs = detail::oracle_directions(p.dim(), res);
    double sup = 0.0;
    for (const auto& v : dirs) {
        double q = 0.0;
        for (const auto& [x, prob] : p.atoms()) {
            double dot = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) dot += x[j] * v[j];
            q += prob * dot * dot * dot * dot;
        }
        sup = std::max(sup, q);
    }
    return std::sqrt(sup);
}

/// Closed form for a centered gaussian: E <X, v>^4 = 3 (v^T Sigma v)^2, so
/// the statistic is sqrt(3) * ||Sigma||.
inline double gaussian_fourth_moment_sup(const CovarianceMatrix& sigma) {
    return std::sqrt(3.0) * operator_norm(sigma);
}

/// R = sup over unit pairs (u, v) of sqrt(E (v^T (X X^T - Sigma) u)^2).
/// For fixed u the optimal v is the top eigenvector of
/// C_u = E w w^T with w = (X X^T - Sigma) u, so only u is gridded.
inline WeakVarianceReport weak_variance(const FiniteSupportDistribution& p,
                                        const OracleResolution& res = {}) {
    const std::size_t d = p.dim();
    const CovarianceMatrix sigma = exact_second_moment(p);

    WeakVarianceReport rep;
    if (d == 1)
        rep.method = WeakVarianceReport::Method::exact_enumeration;
    else if (d <= 3)
        rep.method = WeakVarianceReport::Method::grid_search;
    else
        rep.method = WeakVarianceReport::Method::monte_carlo;

    const auto dirs = detail::oracle_directions(d, res);
    std::vector<double> w(d);
    double best_sq = -1.0;
    for (const auto& u : dirs) {
        SymMatrix cu(d);
        for (const auto& [x, prob] : p.atoms()) {
            double xu = 0.0;
            for (std::size_t j = 0; j < d; ++j) xu += x[j] * u[j];
            for (std::size_t j = 0; j < d; ++j) {
                double su = 0.0;
                for (std::size_t k = 0; k < d; ++k) su += sigma(j, k) * u[k];
                w[j] = x[j] * xu - su;
            }
            cu.add_outer(w.data(), prob);
        }
        const EigenSystem es = eigensystem(cu);
        if (es.values[0] > best_sq) {
            best_sq = es.values[0];
            rep.argmax_u = u;
            rep.argmax_v = es.vector(0);
        }
    }
    rep.R_value = std::sqrt(std::max(0.0, best_sq));
    rep.v_value = fourth_moment_sup(p, res);
    return rep;
}

struct MatrixVarianceReport {
    double norm_B = 0.0;
    std::optional<double> rank_B; // undefined for the zero matrix
};

/// B = E (Z Z^T)^2 for the truncated variable Z; since (x x^T)^2 =
/// ||x||^2 x x^T this is an exact atom sum. Returns ||B|| and its
/// effective rank.
inline MatrixVarianceReport matrix_variance_B(const FiniteSupportDistribution& p,
                                              double alpha) {
    if (!(alpha > 0.0))
        throw invalid_parameter_error("matrix_variance_B: alpha must be positive");
    SymMatrix b(p.dim());
    for (std::size_t a = 0; a < p.atoms().size(); ++a) {
        const double nrm = p.atom_norm(a);
        if (nrm > alpha) continue;
        b.add_outer(p.atoms()[a].first.data(), p.atoms()[a].second * nrm * nrm);
    }
    MatrixVarianceReport rep;
    rep.norm_B = operator_norm(b);
    if (rep.norm_B > 0.0) rep.rank_B = trace(b) / rep.norm_B;
    return rep;
}

struct TruncationBiasRow {
    double alpha = 0.0;
    double op_bias = 0.0;    // ||truncated second moment - Sigma||
    double trace_bias = 0.0; // |trace difference|
};

struct TruncationBiasReport {
    std::vector<TruncationBiasRow> rows; // sorted by alpha ascending
    bool zero_at_full_support = false;   // bias exactly 0 at alpha = max atom norm
    bool monotone = false;               // biases nonincreasing in alpha
    bool quadratic_shape = false;        // alpha^2 * bias <= E ||X||^4 throughout
    bool inconclusive = false;           // constant-norm support: all-or-nothing
    double fourth_norm_moment = 0.0;
};

/// Exact truncation-bias decay table over a radius sequence. The shape
/// check uses the constant-free tail bound
/// ||Sigma - Sigma_alpha|| <= E ||X||^2 1{||X|| > alpha} <= E ||X||^4 / alpha^2.
inline TruncationBiasReport verify_truncation_bias(const FiniteSupportDistribution& p,
                                                   std::vector<double> alphas) {
    if (alphas.empty())
        throw invalid_parameter_error("verify_truncation_bias: empty radius sequence");
    for (double a : alphas)
        if (!(a > 0.0))
            throw invalid_parameter_error("verify_truncation_bias: radii must be positive");
    std::sort(alphas.begin(), alphas.end());

    TruncationBiasReport rep;
    rep.fourth_norm_moment = p.fourth_norm_moment();

    double min_norm = p.atom_norm(0), max_norm = p.atom_norm(0);
    for (std::size_t a = 1; a < p.atoms().size(); ++a) {
        const double nrm = p.atom_norm(a);
        min_norm = std::min(min_norm, nrm);
        max_norm = std::max(max_norm, nrm);
    }
    rep.inconclusive = (max_norm - min_norm) <= 1e-15 * std::max(1.0, max_norm);

    const CovarianceMatrix sigma = exact_second_moment(p);
    const double full_trace = trace(sigma);

    auto bias_at = [&](double alpha) {
        const CovarianceMatrix trunc = exact_second_moment(p, alpha);
        TruncationBiasRow row;
        row.alpha = alpha;
        row.op_bias = operator_norm(sigma.sym() - trunc.sym());
        row.trace_bias = std::abs(full_trace - trace(trunc));
        return row;
    };

    for (double a : alphas) rep.rows.push_back(bias_at(a));

    const TruncationBiasRow full = bias_at(max_norm);
    rep.zero_at_full_support = (full.op_bias == 0.0 && full.trace_bias == 0.0);

    rep.monotone = true;
    for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
        if (rep.rows[i + 1].op_bias > rep.rows[i].op_bias + 1e-12 ||
            rep.rows[i + 1].trace_bias > rep.rows[i].trace_bias + 1e-12)
            rep.monotone = false;

    rep.quadratic_shape = true;
    for (const auto& row : rep.rows) {
        const double scaled = row.alpha * row.alpha *
                              std::max(row.op_bias, row.trace_bias);
        if (scaled > rep.fourth_norm_moment + 1e-9) rep.quadratic_shape = false;
    }
    return rep;
}

struct LowerBoundReport {
    bool passed = false;
    double margin = 0.0;  // R - bound
    double R_value = 0.0;
    double bound = 0.0;   // sqrt((r - 1) / d) * ||Sigma||
};

/// A reference law with its declared fourth-to-second moment ratio bound
/// and a default radius grid for the truncation-bias table.
struct NamedLaw {
    std::string name;
    FiniteSupportDistribution law;
    double norm_equiv_L;
    std::vector<double> truncation_grid;
};

/// The exactly analyzable laws that the verification commands and the
/// acceptance gate iterate. L is an exact sup for two-atom and cross and
/// the kurtosis-3 upper bound for the sign laws.
inline std::vector<NamedLaw> reference_laws() {
    const double root2 = 1.4142135623730951;
    std::vector<NamedLaw> laws;
    laws.push_back({"flat-signs", FiniteSupportDistribution::rademacher_diag({1.0, 1.0}),
                    std::pow(3.0, 0.25),
                    {0.5, 1.0, root2, 2.0}});
    laws.push_back({"decaying-signs",
                    FiniteSupportDistribution::rademacher_diag({2.0, 1.0, 0.5}),
                    std::pow(3.0, 0.25),
                    {1.0, 1.5, 2.0, 2.2912878474779199, 3.0}});
    laws.push_back({"near-isotropic",
                    FiniteSupportDistribution::rademacher_diag({1.05, 1.0, 0.95}),
                    std::pow(3.0, 0.25),
                    {1.0, 1.5, 1.7334935534824298, 2.0}});
    // Two atoms on a line at radii 1 and 3; the moment ratio is exactly
    // 41/25.
    laws.push_back({"two-atom",
                    FiniteSupportDistribution({{{1.0}, 0.5}, {{3.0}, 0.5}}),
                    std::pow(41.0 / 25.0, 0.25),
                    {1.5, 2.0, 2.5, 3.0}});
    // Four atoms on the plane axes; identity covariance, ratio exactly 2.
    laws.push_back({"cross",
                    FiniteSupportDistribution({{{root2, 0.0}, 0.25},
                                               {{-root2, 0.0}, 0.25},
                                               {{0.0, root2}, 0.25},
                                               {{0.0, -root2}, 0.25}}),
                    std::pow(2.0, 0.25),
                    {0.7, 1.0, root2, 2.0}});
    return laws;
}

/// Checks R >= sqrt((r - 1)/d) * ||Sigma|| - 1e-9 with r the effective
/// rank; exact R needs an explicit grid, hence d <= 3.
inline LowerBoundReport lower_bound_check(const FiniteSupportDistribution& p,
                                          const OracleResolution& res = {}) {
    if (p.dim() > 3)
        throw unsupported_dimension_error(
            "lower_bound_check: exact weak variance requires d <= 3");
    const CovarianceMatrix sigma = exact_second_moment(p);
    const double nrm = operator_norm(sigma);

    LowerBoundReport rep;
    rep.R_value = weak_variance(p, res).R_value;
    if (nrm > 0.0) {
        const double r = trace(sigma) / nrm;
        rep.bound = std::sqrt(std::max(0.0, (r - 1.0) / static_cast<double>(p.dim()))) * nrm;
    }
    rep.margin = rep.R_value - rep.bound;
    rep.passed = rep.R_value >= rep.bound - 1e-9;
    return rep;
}

} // namespace covest
