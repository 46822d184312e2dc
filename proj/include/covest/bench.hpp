#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "covest/distributions.hpp"
#include "covest/error.hpp"
#include "covest/matrix.hpp"
#include "covest/random.hpp"
#include "covest/samples.hpp"
#include "covest/tournament.hpp"

namespace covest {

/// Estimators the benchmark can compare. `pipeline` and `empirical`
/// produce covariance matrices scored by operator-norm error; the
/// `epsilon_net` entry is the factor-2 norm bracket, scored by the
/// absolute error of its operator-norm estimate.
enum class Estimator { pipeline, empirical, epsilon_net };

inline std::string estimator_name(Estimator e) {
    switch (e) {
    case Estimator::pipeline: return "pipeline";
    case Estimator::empirical: return "empirical";
    case Estimator::epsilon_net: return "epsilon_net";
    }
    return "unknown";
}

/// Diagonal covariance shapes the config grid can request. `identity` is
/// I_d, `spike:t` is diag(t, 1, ..., 1), `diag:v1:...:vk` is explicit and
/// must match the cell dimension.
struct SigmaShape {
    enum class Kind { identity, spike, diag };

    Kind kind = Kind::identity;
    double spike = 1.0;
    std::vector<double> entries;
    std::string label = "identity";

    static SigmaShape parse(const std::string& token);

    CovarianceMatrix materialize(std::size_t d) const {
        std::vector<double> diag(d, 1.0);
        switch (kind) {
        case Kind::identity:
            break;
        case Kind::spike:
            if (d < 1) throw invalid_parameter_error("SigmaShape: need d >= 1");
            diag[0] = spike;
            break;
        case Kind::diag:
            if (entries.size() != d)
                throw invalid_parameter_error(
                    "SigmaShape: diag has " + std::to_string(entries.size()) +
                    " entries but the cell dimension is " + std::to_string(d));
            diag = entries;
            break;
        }
        return CovarianceMatrix::diagonal(diag);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t begin = 0;
    while (true) {
        const auto pos = s.find(sep, begin);
        if (pos == std::string::npos) {
            out.push_back(s.substr(begin));
            return out;
        }
        out.push_back(s.substr(begin, pos - begin));
        begin = pos + 1;
    }
}

inline double parse_double_token(const std::string& token, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (trim(token.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw invalid_parameter_error(what + ": cannot parse number '" + token + "'");
}

inline std::uint64_t parse_u64_token(const std::string& token, const std::string& what) {
    try {
        std::size_t used = 0;
        const std::string t = trim(token);
        if (!t.empty() && t[0] != '-') {
            const std::uint64_t v = std::stoull(t, &used);
            if (trim(t.substr(used)).empty()) return v;
        }
    } catch (const std::exception&) {
    }
    throw invalid_parameter_error(what + ": cannot parse nonnegative integer '" +
                                  token + "'");
}

} // namespace detail

inline SigmaShape SigmaShape::parse(const std::string& token) {
    const std::string t = detail::trim(token);
    SigmaShape s;
    if (t == "identity") {
        return s;
    }
    if (t.rfind("spike:", 0) == 0) {
        s.kind = Kind::spike;
        s.spike = detail::parse_double_token(t.substr(6), "sigma spike value");
        if (!(s.spike >= 0.0))
            throw invalid_parameter_error("sigma spike value must be >= 0");
        s.label = "spike:" + detail::format_double(s.spike);
        return s;
    }
    if (t.rfind("diag:", 0) == 0) {
        s.kind = Kind::diag;
        for (const std::string& part : detail::split(t.substr(5), ':'))
            s.entries.push_back(detail::parse_double_token(part, "sigma diag entry"));
        s.label = "diag";
        for (double v : s.entries) s.label += ":" + detail::format_double(v);
        return s;
    }
    throw invalid_parameter_error(
        "sigma shape '" + t + "' is not identity, spike:<t>, or diag:<v1>:...:<vk>");
}

/// One grid point of a benchmark sweep. `nu` is 0 unless the distribution
/// takes a degrees-of-freedom parameter.
struct BenchCell {
    std::size_t index = 0;
    std::string distribution;
    std::size_t d = 0;
    SigmaShape sigma;
    std::size_t N = 0;
    double delta = 0.0;
    int nu = 0;

    DistributionSpec make_spec() const {
        const CovarianceMatrix cov = sigma.materialize(d);
        if (distribution == "gaussian") return DistributionSpec::gaussian(cov);
        if (distribution == "student_t") return DistributionSpec::student_t(nu, cov);
        if (distribution == "subexponential" || distribution == "rademacher_diag") {
            // These laws are parameterized by per-coordinate scales whose
            // squares form the diagonal of the covariance.
            std::vector<double> scales(d);
            for (std::size_t i = 0; i < d; ++i) scales[i] = std::sqrt(cov.sym()(i, i));
            return distribution == "subexponential"
                       ? DistributionSpec::subexponential(scales)
                       : DistributionSpec::rademacher_diag(scales);
        }
        throw invalid_parameter_error("unknown distribution '" + distribution + "'");
    }

    std::string describe() const {
        std::string s = "cell " + std::to_string(index) + " (" + distribution +
                        ", d=" + std::to_string(d) + ", sigma=" + sigma.label +
                        ", N=" + std::to_string(N) +
                        ", delta=" + detail::format_double(delta);
        if (nu != 0) s += ", nu=" + std::to_string(nu);
        return s + ")";
    }
};

/// Parsed benchmark configuration. Cells are the Cartesian product of the
/// grid axes, enumerated with d outermost and nu innermost.
struct BenchConfig {
    std::string distribution;
    std::vector<std::size_t> grid_d;
    std::vector<SigmaShape> grid_sigma;
    std::vector<std::size_t> grid_N;
    std::vector<double> grid_delta;
    std::vector<int> grid_nu;
    std::size_t trials = 0;
    std::vector<Estimator> estimators;
    std::uint64_t master_seed = 1;
    std::string output_path;

    std::vector<BenchCell> cells() const {
        std::vector<BenchCell> out;
        std::size_t index = 0;
        for (std::size_t d : grid_d)
            for (const SigmaShape& sigma : grid_sigma)
                for (std::size_t n : grid_N)
                    for (double delta : grid_delta)
                        for (int nu : grid_nu) {
                            BenchCell c;
                            c.index = index++;
                            c.distribution = distribution;
                            c.d = d;
                            c.sigma = sigma;
                            c.N = n;
                            c.delta = delta;
                            c.nu = nu;
                            out.push_back(std::move(c));
                        }
        return out;
    }
};

/// One benchmark trial. Inactive or failed estimator fields stay NaN and
/// failures are described in `note`. Wall times are measurements, not part
/// of the deterministic payload.
struct TrialRecord {
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

    std::size_t cell = 0;
    std::size_t trial = 0;
    std::uint64_t stream_id = 0;
    std::string distribution;
    std::size_t d = 0;
    std::string sigma;
    std::size_t N = 0;
    double delta = 0.0;
    int nu = 0;
    double err_pipeline = kUnset;
    double err_empirical = kUnset;
    double err_net = kUnset;
    double time_pipeline = kUnset;
    double time_empirical = kUnset;
    double time_net = kUnset;
    double phi1 = kUnset;
    double phi2 = kUnset;
    double beta = kUnset;
    double gamma = kUnset;
    std::string note;
};

namespace detail {

/// Bitwise equality with all NaNs identified; NaN payloads carry no
/// information here and may differ across a serialization round trip.
inline bool same_double(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

} // namespace detail

/// Equality of everything except the wall-time fields.
inline bool deterministic_equal(const TrialRecord& a, const TrialRecord& b) {
    return a.cell == b.cell && a.trial == b.trial && a.stream_id == b.stream_id &&
           a.distribution == b.distribution && a.d == b.d && a.sigma == b.sigma &&
           a.N == b.N && detail::same_double(a.delta, b.delta) && a.nu == b.nu &&
           detail::same_double(a.err_pipeline, b.err_pipeline) &&
           detail::same_double(a.err_empirical, b.err_empirical) &&
           detail::same_double(a.err_net, b.err_net) &&
           detail::same_double(a.phi1, b.phi1) &&
           detail::same_double(a.phi2, b.phi2) &&
           detail::same_double(a.beta, b.beta) &&
           detail::same_double(a.gamma, b.gamma) && a.note == b.note;
}

/// Stream id for one trial: the master seed mixed with the cell index,
/// then with the trial index, through the splitmix64-based combiner.
inline std::uint64_t trial_stream_id(std::uint64_t master_seed, std::size_t cell,
                                     std::size_t trial) {
    return mix_seed(mix_seed(master_seed, cell), trial);
}

inline TrialRecord run_trial(const BenchCell& cell, std::size_t trial,
                             std::uint64_t master_seed,
                             const std::vector<Estimator>& estimators = {
                                 Estimator::pipeline}) {
    using clock = std::chrono::steady_clock;

    TrialRecord rec;
    rec.cell = cell.index;
    rec.trial = trial;
    rec.stream_id = trial_stream_id(master_seed, cell.index, trial);
    rec.distribution = cell.distribution;
    rec.d = cell.d;
    rec.sigma = cell.sigma.label;
    rec.N = cell.N;
    rec.delta = cell.delta;
    rec.nu = cell.nu;

    auto fail = [&rec](const std::string& who, const std::string& what) {
        std::string msg = who + ": " + what;
        // Keep the note CSV-safe.
        for (char& c : msg)
            if (c == ',' || c == '\n' || c == '\r') c = ';';
        if (!rec.note.empty()) rec.note += "; ";
        rec.note += msg;
    };

    const auto active = [&estimators](Estimator e) {
        return std::find(estimators.begin(), estimators.end(), e) != estimators.end();
    };

    SymMatrix truth(1);
    SampleSet samples(cell.d, 0);
    try {
        const DistributionSpec spec = cell.make_spec();
        truth = spec.true_covariance().sym();
        RandomStream data_rng(rec.stream_id, 0);
        samples = sample(spec, cell.N, data_rng);
    } catch (const error& e) {
        fail("sample", e.what());
        return rec;
    }

    if (active(Estimator::pipeline)) {
        const auto start = clock::now();
        try {
            EstimateConfig cfg;
            // Direction draws live on stream 1 so they never collide with
            // the data draws on stream 0.
            cfg.tournament.seed = rec.stream_id;
            cfg.tournament.stream = 1;
            const TailMode mode = cell.make_spec().heavy_tailed()
                                      ? TailMode::heavy_tailed
                                      : TailMode::subgaussian;
            const EstimateReport rep =
                estimate_covariance(samples, cell.delta, mode, cfg);
            rec.err_pipeline = operator_norm(rep.estimate - truth);
            if (rep.pipeline) {
                rec.phi1 = rep.pipeline->phi1;
                rec.phi2 = rep.pipeline->phi2;
                rec.beta = rep.pipeline->beta;
                rec.gamma = rep.pipeline->gamma;
            }
        } catch (const error& e) {
            fail("pipeline", e.what());
        }
        rec.time_pipeline = std::chrono::duration<double>(clock::now() - start).count();
    }

    if (active(Estimator::empirical)) {
        const auto start = clock::now();
        try {
            rec.err_empirical =
                operator_norm(empirical_covariance(samples).sym() - truth);
        } catch (const error& e) {
            fail("empirical", e.what());
        }
        rec.time_empirical = std::chrono::duration<double>(clock::now() - start).count();
    }

    if (active(Estimator::epsilon_net)) {
        const auto start = clock::now();
        try {
            rec.err_net =
                std::fabs(epsilon_net_norm(samples, cell.delta) - operator_norm(truth));
        } catch (const error& e) {
            fail("epsilon_net", e.what());
        }
        rec.time_net = std::chrono::duration<double>(clock::now() - start).count();
    }

    return rec;
}

/// k-th smallest with k = ceil(q * size), 1-based; the lower empirical
/// quantile. Agrees with lower_median at q = 1/2 for every size.
inline double lower_quantile(std::vector<double> values, double q) {
    if (values.empty())
        throw insufficient_data_error("lower_quantile: empty value list");
    if (!(q > 0.0) || !(q <= 1.0))
        throw invalid_parameter_error("lower_quantile: q must lie in (0, 1]");
    const double scaled = q * static_cast<double>(values.size());
    auto k = static_cast<std::size_t>(std::ceil(scaled - 1e-9));
    if (k < 1) k = 1;
    if (k > values.size()) k = values.size();
    std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
    return values[k - 1];
}

/// Error quantiles of one cell, per estimator, over rows whose error is
/// finite. All-NaN when the estimator is inactive or always failed.
struct CellSummary {
    std::size_t cell = 0;
    std::size_t rows = 0;
    double q50_pipeline = TrialRecord::kUnset;
    double q90_pipeline = TrialRecord::kUnset;
    double q99_pipeline = TrialRecord::kUnset;
    double q50_empirical = TrialRecord::kUnset;
    double q90_empirical = TrialRecord::kUnset;
    double q99_empirical = TrialRecord::kUnset;
    double q50_net = TrialRecord::kUnset;
    double q90_net = TrialRecord::kUnset;
    double q99_net = TrialRecord::kUnset;
};

inline std::vector<CellSummary> summarize_cells(const std::vector<TrialRecord>& records) {
    std::vector<std::size_t> cells;
    for (const TrialRecord& r : records) cells.push_back(r.cell);
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

    std::vector<CellSummary> out;
    for (std::size_t cell : cells) {
        CellSummary s;
        s.cell = cell;
        std::vector<double> pipeline, empirical, net;
        for (const TrialRecord& r : records) {
            if (r.cell != cell) continue;
            ++s.rows;
            if (std::isfinite(r.err_pipeline)) pipeline.push_back(r.err_pipeline);
            if (std::isfinite(r.err_empirical)) empirical.push_back(r.err_empirical);
            if (std::isfinite(r.err_net)) net.push_back(r.err_net);
        }
        auto fill = [](const std::vector<double>& v, double& q50, double& q90,
                       double& q99) {
            if (v.empty()) return;
            q50 = lower_quantile(v, 0.50);
            q90 = lower_quantile(v, 0.90);
            q99 = lower_quantile(v, 0.99);
        };
        fill(pipeline, s.q50_pipeline, s.q90_pipeline, s.q99_pipeline);
        fill(empirical, s.q50_empirical, s.q90_empirical, s.q99_empirical);
        fill(net, s.q50_net, s.q90_net, s.q99_net);
        out.push_back(s);
    }
    return out;
}

struct SweepResult {
    std::vector<TrialRecord> records; // sorted by (cell, trial)
    std::vector<CellSummary> summaries;
    bool interrupted = false;
};

/// Runs every cell x trial of the config. The interrupted predicate is
/// polled between trials; once it returns true no further trials start and
/// the completed records are summarized and returned. With jobs > 1 the
/// predicate must be safe to call concurrently.
inline SweepResult run_sweep(const BenchConfig& cfg, std::size_t jobs = 1,
                             const std::function<bool()>& interrupted = {}) {
    if (cfg.trials < 1)
        throw invalid_parameter_error("run_sweep: need at least one trial per cell");
    const std::vector<BenchCell> cells = cfg.cells();
    if (cells.empty())
        throw invalid_parameter_error("run_sweep: the config expands to no cells");

    const std::size_t total = cells.size() * cfg.trials;
    const auto stop = [&interrupted]() { return interrupted && interrupted(); };
    const auto make_row = [&](std::size_t task) -> TrialRecord {
        const BenchCell& cell = cells[task / cfg.trials];
        const std::size_t trial = task % cfg.trials;
        try {
            return run_trial(cell, trial, cfg.master_seed, cfg.estimators);
        } catch (const std::exception& e) {
            TrialRecord rec;
            rec.cell = cell.index;
            rec.trial = trial;
            rec.stream_id = trial_stream_id(cfg.master_seed, cell.index, trial);
            rec.distribution = cell.distribution;
            rec.d = cell.d;
            rec.sigma = cell.sigma.label;
            rec.N = cell.N;
            rec.delta = cell.delta;
            rec.nu = cell.nu;
            std::string msg = e.what();
            for (char& c : msg)
                if (c == ',' || c == '\n' || c == '\r') c = ';';
            rec.note = "trial: " + msg;
            return rec;
        }
    };

    SweepResult result;
    if (jobs <= 1) {
        result.records.reserve(total);
        for (std::size_t task = 0; task < total; ++task) {
            if (stop()) {
                result.interrupted = true;
                break;
            }
            result.records.push_back(make_row(task));
        }
    } else {
        std::vector<TrialRecord> slots(total);
        std::vector<std::uint8_t> done(total, 0);
        std::atomic<std::size_t> next{0};
        std::atomic<bool> saw_stop{false};
        auto worker = [&]() {
            while (true) {
                if (stop()) {
                    saw_stop.store(true);
                    return;
                }
                const std::size_t task = next.fetch_add(1);
                if (task >= total) return;
                slots[task] = make_row(task);
                done[task] = 1;
            }
        };
        std::vector<std::thread> pool;
        const std::size_t workers = std::min(jobs, total);
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
        result.interrupted = saw_stop.load();
        for (std::size_t task = 0; task < total; ++task)
            if (done[task]) result.records.push_back(std::move(slots[task]));
    }

    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const TrialRecord& a, const TrialRecord& b) {
                         return a.cell != b.cell ? a.cell < b.cell : a.trial < b.trial;
                     });
    result.summaries = summarize_cells(result.records);
    return result;
}

namespace detail {

inline std::vector<std::string> trial_csv_columns(bool include_timing) {
    std::vector<std::string> cols = {"cell", "trial", "stream_id", "distribution",
                                     "d",    "sigma", "N",         "delta",
                                     "nu"};
    cols.insert(cols.end(), {"err_pipeline", "err_empirical", "err_net"});
    if (include_timing)
        cols.insert(cols.end(), {"time_pipeline", "time_empirical", "time_net"});
    cols.insert(cols.end(), {"phi1", "phi2", "beta", "gamma", "note"});
    return cols;
}

} // namespace detail

/// Writes records sorted by (cell, trial), one header line naming every
/// column, floats with 17 significant digits. `include_timing` false drops
/// the wall-time columns entirely; that is the determinism-check form.
inline void write_trials_csv(std::vector<TrialRecord> records, std::ostream& out,
                             bool include_timing = true) {
    std::stable_sort(records.begin(), records.end(),
                     [](const TrialRecord& a, const TrialRecord& b) {
                         return a.cell != b.cell ? a.cell < b.cell : a.trial < b.trial;
                     });
    const auto cols = detail::trial_csv_columns(include_timing);
    for (std::size_t i = 0; i < cols.size(); ++i)
        out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const TrialRecord& r : records) {
        std::string note = r.note;
        for (char& c : note)
            if (c == ',' || c == '\n' || c == '\r') c = ';';
        out << r.cell << ',' << r.trial << ',' << r.stream_id << ','
            << r.distribution << ',' << r.d << ',' << r.sigma << ',' << r.N << ','
            << detail::format_double(r.delta) << ',' << r.nu << ','
            << detail::format_double(r.err_pipeline) << ','
            << detail::format_double(r.err_empirical) << ','
            << detail::format_double(r.err_net) << ',';
        if (include_timing)
            out << detail::format_double(r.time_pipeline) << ','
                << detail::format_double(r.time_empirical) << ','
                << detail::format_double(r.time_net) << ',';
        out << detail::format_double(r.phi1) << ',' << detail::format_double(r.phi2)
            << ',' << detail::format_double(r.beta) << ','
            << detail::format_double(r.gamma) << ',' << note << '\n';
    }
}

inline void write_trials_csv(const std::vector<TrialRecord>& records,
                             const std::string& path, bool include_timing = true) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    write_trials_csv(records, out, include_timing);
    if (!out) throw io_error("write failed: " + path);
}

inline std::vector<TrialRecord> read_trials_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw invalid_input_error("trial CSV: missing header line");
    bool timing = true;
    if (detail::split(detail::trim(line), ',') == detail::trial_csv_columns(false))
        timing = false;
    else if (detail::split(detail::trim(line), ',') != detail::trial_csv_columns(true))
        throw invalid_input_error("trial CSV: unrecognized header: " + line);

    const std::size_t expected = detail::trial_csv_columns(timing).size();
    std::vector<TrialRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split(detail::trim(line), ',');
        if (f.size() != expected)
            throw invalid_input_error("trial CSV line " + std::to_string(line_no) +
                                      ": expected " + std::to_string(expected) +
                                      " fields, got " + std::to_string(f.size()));
        const std::string where = "trial CSV line " + std::to_string(line_no);
        TrialRecord r;
        std::size_t k = 0;
        r.cell = detail::parse_u64_token(f[k++], where);
        r.trial = detail::parse_u64_token(f[k++], where);
        r.stream_id = detail::parse_u64_token(f[k++], where);
        r.distribution = f[k++];
        r.d = detail::parse_u64_token(f[k++], where);
        r.sigma = f[k++];
        r.N = detail::parse_u64_token(f[k++], where);
        r.delta = detail::parse_double_token(f[k++], where);
        r.nu = static_cast<int>(detail::parse_u64_token(f[k++], where));
        r.err_pipeline = detail::parse_double_token(f[k++], where);
        r.err_empirical = detail::parse_double_token(f[k++], where);
        r.err_net = detail::parse_double_token(f[k++], where);
        if (timing) {
            r.time_pipeline = detail::parse_double_token(f[k++], where);
            r.time_empirical = detail::parse_double_token(f[k++], where);
            r.time_net = detail::parse_double_token(f[k++], where);
        }
        r.phi1 = detail::parse_double_token(f[k++], where);
        r.phi2 = detail::parse_double_token(f[k++], where);
        r.beta = detail::parse_double_token(f[k++], where);
        r.gamma = detail::parse_double_token(f[k++], where);
        r.note = f[k++];
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<TrialRecord> read_trials_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path);
    return read_trials_csv(in);
}

/// Re-runs the pipeline on `rows` randomly chosen successful records and
/// checks that the regenerated errors and intermediates match bitwise.
/// Returns true when every checked row reproduces.
inline bool spot_check_pipeline(const std::vector<TrialRecord>& records,
                                const BenchConfig& cfg, std::size_t rows = 5,
                                std::uint64_t seed = 7) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (std::isfinite(records[i].err_pipeline)) eligible.push_back(i);
    if (eligible.empty()) return true;

    const std::vector<BenchCell> cells = cfg.cells();
    RandomStream rng(seed);
    for (std::size_t k = 0; k < rows; ++k) {
        const auto pick = static_cast<std::size_t>(
            rng.uniform01() * static_cast<double>(eligible.size()));
        const TrialRecord& want =
            records[eligible[std::min(pick, eligible.size() - 1)]];
        if (want.cell >= cells.size()) return false;
        const TrialRecord redo =
            run_trial(cells[want.cell], want.trial, cfg.master_seed, cfg.estimators);
        if (!detail::same_double(redo.err_pipeline, want.err_pipeline) ||
            !detail::same_double(redo.phi1, want.phi1) ||
            !detail::same_double(redo.phi2, want.phi2) ||
            !detail::same_double(redo.beta, want.beta) ||
            !detail::same_double(redo.gamma, want.gamma))
            return false;
    }
    return true;
}

/// Human-readable one-line summary for logs.
inline std::string format_cell_summary(const CellSummary& s) {
    auto q = [](double v) { return detail::format_double(v); };
    std::string line = "cell " + std::to_string(s.cell) + " rows " +
                       std::to_string(s.rows);
    if (std::isfinite(s.q50_pipeline))
        line += "  pipeline q50/q90/q99 " + q(s.q50_pipeline) + "/" +
                q(s.q90_pipeline) + "/" + q(s.q99_pipeline);
    if (std::isfinite(s.q50_empirical))
        line += "  empirical q50/q90/q99 " + q(s.q50_empirical) + "/" +
                q(s.q90_empirical) + "/" + q(s.q99_empirical);
    if (std::isfinite(s.q50_net))
        line += "  epsilon_net q50/q90/q99 " + q(s.q50_net) + "/" + q(s.q90_net) +
                "/" + q(s.q99_net);
    return line;
}

/// Parses the flat dotted-key config format. Unknown and duplicate keys
/// are rejected. Required keys: distribution, grid.d, grid.N, grid.delta,
/// trials. grid.nu is required for student_t and rejected otherwise.
inline BenchConfig parse_bench_config(std::istream& in) {
    BenchConfig cfg;
    std::set<std::string> seen;
    std::string raw;
    std::size_t line_no = 0;

    std::string distribution, d_val, sigma_val = "identity", n_val, delta_val;
    std::string nu_val, trials_val, estimators_val = "pipeline", seed_val, output_val;
    const std::vector<std::pair<std::string, std::string*>> keys = {
        {"distribution", &distribution}, {"grid.d", &d_val},
        {"grid.sigma", &sigma_val},      {"grid.N", &n_val},
        {"grid.delta", &delta_val},      {"grid.nu", &nu_val},
        {"trials", &trials_val},         {"estimators", &estimators_val},
        {"seed", &seed_val},             {"output", &output_val}};

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw invalid_parameter_error("config line " + std::to_string(line_no) +
                                          ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            throw invalid_parameter_error("config: duplicate key '" + key + "'");
        bool known = false;
        for (const auto& [name, slot] : keys)
            if (key == name) {
                *slot = value;
                known = true;
                break;
            }
        if (!known)
            throw invalid_parameter_error("config: unknown key '" + key + "'");
    }

    auto require = [&seen](const std::string& key) {
        if (!seen.count(key))
            throw invalid_parameter_error("config: missing required key '" + key + "'");
    };
    require("distribution");
    require("grid.d");
    require("grid.N");
    require("grid.delta");
    require("trials");

    cfg.distribution = distribution;
    if (cfg.distribution != "gaussian" && cfg.distribution != "student_t" &&
        cfg.distribution != "subexponential" && cfg.distribution != "rademacher_diag")
        throw invalid_parameter_error("config: unknown distribution '" +
                                      cfg.distribution + "'");

    for (const std::string& t : detail::split(d_val, ',')) {
        const std::uint64_t d = detail::parse_u64_token(t, "grid.d");
        if (d < 1) throw invalid_parameter_error("grid.d: dimensions must be >= 1");
        cfg.grid_d.push_back(static_cast<std::size_t>(d));
    }
    for (const std::string& t : detail::split(sigma_val, ','))
        cfg.grid_sigma.push_back(SigmaShape::parse(t));
    for (const std::string& t : detail::split(n_val, ',')) {
        const std::uint64_t n = detail::parse_u64_token(t, "grid.N");
        if (n < 1) throw invalid_parameter_error("grid.N: sample sizes must be >= 1");
        cfg.grid_N.push_back(static_cast<std::size_t>(n));
    }
    for (const std::string& t : detail::split(delta_val, ',')) {
        const double delta = detail::parse_double_token(t, "grid.delta");
        if (!(delta > 0.0) || !(delta < 1.0))
            throw invalid_parameter_error("grid.delta: values must lie in (0, 1)");
        cfg.grid_delta.push_back(delta);
    }
    if (cfg.distribution == "student_t") {
        if (!seen.count("grid.nu"))
            throw invalid_parameter_error("config: student_t needs grid.nu");
        for (const std::string& t : detail::split(nu_val, ',')) {
            const auto nu = static_cast<int>(detail::parse_u64_token(t, "grid.nu"));
            if (nu <= 4)
                throw invalid_parameter_error(
                    "grid.nu: need nu > 4 for finite fourth moments");
            cfg.grid_nu.push_back(nu);
        }
    } else {
        if (seen.count("grid.nu"))
            throw invalid_parameter_error(
                "config: grid.nu applies to student_t only");
        cfg.grid_nu.push_back(0);
    }

    cfg.trials = static_cast<std::size_t>(detail::parse_u64_token(trials_val, "trials"));
    if (cfg.trials < 1)
        throw invalid_parameter_error("config: trials must be >= 1");

    cfg.estimators.clear();
    for (const std::string& t : detail::split(estimators_val, ',')) {
        const std::string name = detail::trim(t);
        if (name == "pipeline") cfg.estimators.push_back(Estimator::pipeline);
        else if (name == "empirical") cfg.estimators.push_back(Estimator::empirical);
        else if (name == "epsilon_net") cfg.estimators.push_back(Estimator::epsilon_net);
        else
            throw invalid_parameter_error("config: unknown estimator '" + name + "'");
    }
    if (seen.count("seed")) cfg.master_seed = detail::parse_u64_token(seed_val, "seed");
    cfg.output_path = output_val;

    // Every grid cell must describe a sampleable law.
    for (const BenchCell& cell : cfg.cells()) {
        try {
            cell.make_spec();
        } catch (const error& e) {
            throw invalid_parameter_error("config: " + cell.describe() + ": " +
                                          e.what());
        }
        for (Estimator e : cfg.estimators)
            if (e == Estimator::epsilon_net && cell.d > 3)
                throw invalid_parameter_error(
                    "config: the epsilon_net estimator needs d <= 3, but " +
                    cell.describe() + " has d = " + std::to_string(cell.d));
    }
    return cfg;
}

inline BenchConfig load_bench_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path);
    return parse_bench_config(in);
}

} // namespace covest
