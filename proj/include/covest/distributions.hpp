#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covest/error.hpp"
#include "covest/matrix.hpp"
#include "covest/random.hpp"
#include "covest/samples.hpp"

namespace covest {

/// Covariance shrink factor applied inside the student-t sampler so that
/// the user-facing covariance equals the requested one.
inline double student_shape_factor(int nu) {
    return static_cast<double>(nu - 2) / static_cast<double>(nu);
}

/// A sampleable centered law together with its exact population covariance
/// and a fourth-to-second moment ratio constant L. L is exact where a
/// closed form exists and a documented upper bound otherwise.
class DistributionSpec {
public:
    enum class Kind { gaussian, student_t, subexponential, rademacher_diag };

    static DistributionSpec gaussian(CovarianceMatrix sigma) {
        DistributionSpec s(Kind::gaussian, sigma.dim());
        s.sigma_ = std::move(sigma);
        return s;
    }

    static DistributionSpec student_t(int nu, CovarianceMatrix sigma) {
        if (nu <= 4)
            throw invalid_parameter_error(
                "student_t: need nu > 4 for finite fourth moments, got " +
                std::to_string(nu));
        DistributionSpec s(Kind::student_t, sigma.dim());
        s.nu_ = nu;
        s.sigma_ = std::move(sigma);
        return s;
    }

    static DistributionSpec subexponential(std::vector<double> scales) {
        if (scales.empty())
            throw invalid_parameter_error("subexponential: empty scale vector");
        for (double sc : scales)
            if (!(sc > 0.0))
                throw invalid_parameter_error("subexponential: scales must be positive");
        DistributionSpec s(Kind::subexponential, scales.size());
        s.coeffs_ = std::move(scales);
        return s;
    }

    static DistributionSpec rademacher_diag(std::vector<double> alpha) {
        if (alpha.empty())
            throw invalid_parameter_error("rademacher_diag: empty coefficient vector");
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            if (alpha[i] < 0.0)
                throw invalid_parameter_error("rademacher_diag: coefficients must be >= 0");
            if (i + 1 < alpha.size() && !(alpha[i] > alpha[i + 1]))
                throw invalid_parameter_error(
                    "rademacher_diag: coefficients must be strictly decreasing");
        }
        DistributionSpec s(Kind::rademacher_diag, alpha.size());
        s.coeffs_ = std::move(alpha);
        return s;
    }

    Kind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    int nu() const noexcept { return nu_; }
    const std::vector<double>& coefficients() const noexcept { return coeffs_; }

    CovarianceMatrix true_covariance() const {
        switch (kind_) {
        case Kind::gaussian:
        case Kind::student_t:
            return *sigma_;
        case Kind::subexponential:
        case Kind::rademacher_diag: {
            std::vector<double> d(coeffs_.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = coeffs_[i] * coeffs_[i];
            return CovarianceMatrix::diagonal(d);
        }
        }
        throw invalid_input_error("DistributionSpec: unknown kind");
    }

    /// Gaussian and sign laws have directional kurtosis at most 3, hence
    /// L = 3^{1/4}. Student-t has marginal kurtosis (3nu-6)/(nu-4). The
    /// centered-exponential value is an upper bound 4 * 1.5, not exact.
    double norm_equiv_L() const {
        switch (kind_) {
        case Kind::gaussian:
        case Kind::rademacher_diag:
            return std::pow(3.0, 0.25);
        case Kind::student_t: {
            const double k = (3.0 * nu_ - 6.0) / (nu_ - 4.0);
            return std::pow(k, 0.25);
        }
        case Kind::subexponential:
            return 6.0;
        }
        throw invalid_input_error("DistributionSpec: unknown kind");
    }

    bool heavy_tailed() const noexcept {
        return kind_ == Kind::student_t || kind_ == Kind::subexponential;
    }

    std::string name() const {
        switch (kind_) {
        case Kind::gaussian: return "gaussian";
        case Kind::student_t: return "student_t";
        case Kind::subexponential: return "subexponential";
        case Kind::rademacher_diag: return "rademacher_diag";
        }
        return "unknown";
    }

private:
    DistributionSpec(Kind k, std::size_t d) : kind_(k), dim_(d) {}

    Kind kind_;
    std::size_t dim_;
    int nu_ = 0;
    std::optional<CovarianceMatrix> sigma_;
    std::vector<double> coeffs_;
};

inline SampleSet sample_gaussian(const CovarianceMatrix& sigma, std::size_t n,
                                 RandomStream& rng) {
    if (n < 1) throw invalid_parameter_error("sample_gaussian: need N >= 1");
    const std::size_t d = sigma.dim();
    const Matrix l = cholesky(sigma);
    SampleSet out(d, n);
    std::vector<double> g(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) g[j] = rng.normal();
        double* r = out.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            double sum = 0.0;
            for (std::size_t b = 0; b <= a; ++b) sum += l(a, b) * g[b];
            r[a] = sum;
        }
    }
    return out;
}

/// X = Z / sqrt(V / nu), Z gaussian with the shrunk shape matrix and V a
/// chi-square built from nu squared normals. Draw order per sample: the d
/// normals for Z, then the nu normals for V.
inline SampleSet sample_student_t(int nu, const CovarianceMatrix& sigma, std::size_t n,
                                  RandomStream& rng) {
    if (nu <= 4)
        throw invalid_parameter_error("sample_student_t: need nu > 4, got " +
                                      std::to_string(nu));
    if (n < 1) throw invalid_parameter_error("sample_student_t: need N >= 1");
    const std::size_t d = sigma.dim();
    SymMatrix shape = sigma.sym();
    shape.scale(student_shape_factor(nu));
    const Matrix l = cholesky(CovarianceMatrix(std::move(shape)));
    SampleSet out(d, n);
    std::vector<double> g(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) g[j] = rng.normal();
        double v = 0.0;
        for (int k = 0; k < nu; ++k) {
            const double z = rng.normal();
            v += z * z;
        }
        const double factor = 1.0 / std::sqrt(v / static_cast<double>(nu));
        double* r = out.row(i);
        for (std::size_t a = 0; a < d; ++a) {
            double sum = 0.0;
            for (std::size_t b = 0; b <= a; ++b) sum += l(a, b) * g[b];
            r[a] = sum * factor;
        }
    }
    return out;
}

/// Independent coordinates scale_i * (E_i - 1), E_i unit-rate exponential.
inline SampleSet sample_subexponential(const std::vector<double>& scales, std::size_t n,
                                       RandomStream& rng) {
    DistributionSpec::subexponential(scales); // parameter validation only
    if (n < 1) throw invalid_parameter_error("sample_subexponential: need N >= 1");
    const std::size_t d = scales.size();
    SampleSet out(d, n);
    for (std::size_t i = 0; i < n; ++i) {
        double* r = out.row(i);
        for (std::size_t j = 0; j < d; ++j) r[j] = scales[j] * (rng.exponential() - 1.0);
    }
    return out;
}

/// Coordinates alpha_i * (fair sign); every row has squared norm equal to
/// the sum of the alpha_i^2 exactly.
inline SampleSet sample_rademacher_diag(const std::vector<double>& alpha, std::size_t n,
                                        RandomStream& rng) {
    DistributionSpec::rademacher_diag(alpha); // parameter validation only
    if (n < 1) throw invalid_parameter_error("sample_rademacher_diag: need N >= 1");
    const std::size_t d = alpha.size();
    SampleSet out(d, n);
    for (std::size_t i = 0; i < n; ++i) {
        double* r = out.row(i);
        for (std::size_t j = 0; j < d; ++j) r[j] = alpha[j] * rng.rademacher();
    }
    return out;
}

inline SampleSet sample(const DistributionSpec& spec, std::size_t n, RandomStream& rng) {
    switch (spec.kind()) {
    case DistributionSpec::Kind::gaussian:
        return sample_gaussian(spec.true_covariance(), n, rng);
    case DistributionSpec::Kind::student_t:
        return sample_student_t(spec.nu(), spec.true_covariance(), n, rng);
    case DistributionSpec::Kind::subexponential:
        return sample_subexponential(spec.coefficients(), n, rng);
    case DistributionSpec::Kind::rademacher_diag:
        return sample_rademacher_diag(spec.coefficients(), n, rng);
    }
    throw invalid_input_error("sample: unknown distribution kind");
}

} // namespace covest
