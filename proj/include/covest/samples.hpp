#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "covest/error.hpp"
#include "covest/matrix.hpp"

namespace covest {

/// N samples in R^d, stored row-major. Every entry is finite.
class SampleSet {
public:
    SampleSet(std::size_t dim, std::size_t count)
        : dim_(dim), count_(count), data_(dim * count, 0.0) {
        if (dim == 0) throw invalid_input_error("SampleSet: dimension must be >= 1");
    }

    SampleSet(std::size_t dim, std::vector<double> flat) : dim_(dim), data_(std::move(flat)) {
        if (dim == 0) throw invalid_input_error("SampleSet: dimension must be >= 1");
        if (data_.size() % dim != 0)
            throw invalid_input_error("SampleSet: flat data length not a multiple of dim");
        count_ = data_.size() / dim;
        for (double v : data_)
            if (!std::isfinite(v))
                throw invalid_input_error("SampleSet: non-finite entry");
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t count() const noexcept { return count_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

    const double* row(std::size_t i) const { return data_.data() + i * dim_; }
    double* row(std::size_t i) { return data_.data() + i * dim_; }

    std::vector<double> row_vector(std::size_t i) const {
        return {row(i), row(i) + dim_};
    }

    /// Sum of squared coordinates; exact when the squares are (no sqrt
    /// round trip).
    double row_sq_norm(std::size_t i) const {
        double sum = 0.0;
        const double* r = row(i);
        for (std::size_t j = 0; j < dim_; ++j) sum += r[j] * r[j];
        return sum;
    }

    double row_norm2(std::size_t i) const { return std::sqrt(row_sq_norm(i)); }

    /// Contiguous sub-sample [begin, begin + count).
    SampleSet slice(std::size_t begin, std::size_t count) const {
        if (begin + count > count_)
            throw invalid_input_error("SampleSet::slice: range exceeds sample count");
        SampleSet out(dim_, count);
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = 0; j < dim_; ++j) out(i, j) = (*this)(begin + i, j);
        return out;
    }

    bool operator==(const SampleSet& other) const {
        return dim_ == other.dim_ && count_ == other.count_ && data_ == other.data_;
    }

private:
    std::size_t dim_, count_;
    std::vector<double> data_;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// One sample per row, comma separated, 17 significant digits. With
/// `header` the first line is x1,...,xd.
inline void write_samples_csv(const SampleSet& s, std::ostream& out, bool header = false) {
    if (header) {
        for (std::size_t j = 0; j < s.dim(); ++j)
            out << (j ? ",x" : "x") << (j + 1);
        out << '\n';
    }
    for (std::size_t i = 0; i < s.count(); ++i) {
        for (std::size_t j = 0; j < s.dim(); ++j) {
            if (j) out << ',';
            out << detail::format_double(s(i, j));
        }
        out << '\n';
    }
}

inline void write_samples_csv(const SampleSet& s, const std::string& path,
                              bool header = false) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    write_samples_csv(s, out, header);
    if (!out) throw io_error("write failed: " + path);
}

/// Reads a sample CSV. A first line that does not parse as numbers is
/// treated as a header and skipped; any later parse failure is an error.
inline SampleSet read_samples_csv(std::istream& in) {
    std::vector<double> flat;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    std::string line;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream row(line);
        std::string cell;
        bool parse_ok = true;
        while (std::getline(row, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() &&
                       (cell[used] == ' ' || cell[used] == '\t' || cell[used] == '\r'))
                    ++used;
                if (used != cell.size()) { parse_ok = false; break; }
                vals.push_back(v);
            } catch (const std::exception&) {
                parse_ok = false;
                break;
            }
        }
        if (!parse_ok) {
            if (line_no == 1) continue; // header row
            throw invalid_input_error("sample CSV: non-numeric value at line " +
                                      std::to_string(line_no));
        }
        if (first_data_row) {
            dim = vals.size();
            first_data_row = false;
        } else if (vals.size() != dim) {
            throw invalid_input_error("sample CSV: ragged row at line " +
                                      std::to_string(line_no));
        }
        flat.insert(flat.end(), vals.begin(), vals.end());
    }
    if (dim == 0) throw invalid_input_error("sample CSV: no data rows");
    return SampleSet(dim, std::move(flat));
}

inline SampleSet read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path);
    return read_samples_csv(in);
}

/// Pairs consecutive rows into (X_{2k-1} - X_{2k}) / sqrt(2); an odd
/// trailing row is dropped. Output is centered and symmetric with the same
/// population covariance.
inline SampleSet symmetrize(const SampleSet& s) {
    if (s.count() < 2)
        throw insufficient_data_error("symmetrize: need at least 2 samples");
    const std::size_t pairs = s.count() / 2;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    SampleSet out(s.dim(), pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        const double* a = s.row(2 * k);
        const double* b = s.row(2 * k + 1);
        double* r = out.row(k);
        for (std::size_t j = 0; j < s.dim(); ++j) r[j] = (a[j] - b[j]) * inv_sqrt2;
    }
    return out;
}

/// Average of x_i x_i^T over the sample (data treated as centered).
inline CovarianceMatrix empirical_covariance(const SampleSet& s) {
    if (s.count() == 0)
        throw insufficient_data_error("empirical_covariance: empty sample");
    SymMatrix acc(s.dim());
    const double w = 1.0 / static_cast<double>(s.count());
    for (std::size_t i = 0; i < s.count(); ++i) acc.add_outer(s.row(i), w);
    return CovarianceMatrix(acc);
}

} // namespace covest
