#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "covest/distributions.hpp"
#include "covest/mom.hpp"

using namespace covest;
using Catch::Approx;

TEST_CASE("block partition follows the confidence level") {
    const double e3 = std::exp(-3.0);
    const auto s12 = partition_blocks(12, e3);
    CHECK(s12.block_count == 3);
    CHECK(s12.block_size == 4);
    REQUIRE(s12.blocks.size() == 3);
    CHECK(s12.blocks[0] == std::pair<std::size_t, std::size_t>{0, 4});
    CHECK(s12.blocks[1] == std::pair<std::size_t, std::size_t>{4, 8});
    CHECK(s12.blocks[2] == std::pair<std::size_t, std::size_t>{8, 12});

    const auto s13 = partition_blocks(13, e3);
    CHECK(s13.block_count == 3);
    CHECK(s13.block_size == 4);
    CHECK(s13.coverage() == 12); // index 12 discarded

    const auto s10 = partition_blocks(10, 0.9);
    CHECK(s10.block_count == 1);
    CHECK(s10.block_size == 10);
}

TEST_CASE("block partition validates parameters and keeps blocks big enough") {
    CHECK_THROWS_AS(partition_blocks(1, 0.1), invalid_parameter_error);
    CHECK_THROWS_AS(partition_blocks(100, 0.0), invalid_parameter_error);
    CHECK_THROWS_AS(partition_blocks(100, 1.0), invalid_parameter_error);
    CHECK_THROWS_AS(partition_blocks(100, -0.5), invalid_parameter_error);

    // Tiny delta clamps to floor(N/2) blocks, so m >= 2 whenever N >= 4.
    const auto s = partition_blocks(9, 1e-12);
    CHECK(s.block_count == 4);
    CHECK(s.block_size == 2);

    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 4 + rng() % 200;
        const double delta = std::exp(-1.0 - 30.0 * (rng() % 1000) / 1000.0);
        const auto sc = partition_blocks(n, delta);
        CHECK(sc.block_size >= 2);
        CHECK(sc.coverage() <= n);
        CHECK(sc.block_count >= 1);
        for (std::size_t j = 0; j + 1 < sc.blocks.size(); ++j)
            CHECK(sc.blocks[j].second == sc.blocks[j + 1].first);
    }
}

TEST_CASE("lower median picks the lower central order statistic") {
    CHECK(lower_median({5.0}) == 5.0);
    CHECK(lower_median({1.0, 2.0, 3.0, 4.0}) == 2.0);
    CHECK(lower_median({3.0, 1.0, 2.0}) == 2.0);
    CHECK_THROWS_AS(lower_median({}), invalid_input_error);
}

TEST_CASE("majority radius is the strict-majority order statistic") {
    CHECK(majority_radius({0.7}) == 0.7);
    CHECK(majority_radius({1.0, 3.0}) == 3.0);
    CHECK(majority_radius({0.1, 5.0, 0.2}) == 0.2);
    CHECK(majority_radius({-0.1, 5.0, -0.2}) == 0.2);
    CHECK_THROWS_AS(majority_radius({}), invalid_input_error);
}

TEST_CASE("majority radius grows weakly when a larger value joins") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> normal(0.0, 2.0);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t k = 1 + rng() % 9;
        std::vector<double> vals(k);
        for (double& v : vals) v = normal(rng);
        const double r = majority_radius(vals);
        std::vector<double> extended = vals;
        extended.push_back((r + 1.0) * (rng() % 2 ? 1.0 : -1.0));
        CHECK(majority_radius(extended) >= r);
    }
}

TEST_CASE("median of means on scalar values") {
    const auto scheme = partition_blocks(12, std::exp(-3.0));

    std::vector<double> constant(12, 4.25);
    CHECK(mom_scalar(constant, scheme) == 4.25);

    std::vector<double> ramp(12);
    for (int i = 0; i < 12; ++i) ramp[i] = i + 1.0;
    CHECK(mom_scalar(ramp, scheme) == 6.5); // block means 2.5, 6.5, 10.5

    CHECK_THROWS_AS(mom_scalar({1.0, 2.0}, scheme), invalid_input_error);
}

TEST_CASE("median of means ignores one corrupted block out of five") {
    const auto scheme = partition_blocks(10, std::exp(-5.0));
    REQUIRE(scheme.block_count == 5);
    std::vector<double> vals = {1.0, 1.2, 0.9, 1.1, 1e9, 1e9, 1.05, 0.95, 1.0, 1.0};
    const double out = mom_scalar(vals, scheme);
    CHECK(out >= 0.975); // min clean block mean
    CHECK(out <= 1.1);   // max clean block mean
}

TEST_CASE("median of means degenerates to the mean for one block") {
    const auto scheme = partition_blocks(10, 0.9);
    std::vector<double> vals = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(mom_scalar(vals, scheme) == Approx(5.5).epsilon(1e-15));
}

TEST_CASE("median of means is invariant to permutations within blocks") {
    const auto scheme = partition_blocks(12, std::exp(-3.0));
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> vals(12);
        for (double& v : vals) v = normal(rng);
        const double base = mom_scalar(vals, scheme);
        std::vector<double> shuffled = vals;
        for (const auto& [begin, end] : scheme.blocks)
            std::shuffle(shuffled.begin() + static_cast<std::ptrdiff_t>(begin),
                         shuffled.begin() + static_cast<std::ptrdiff_t>(end), rng);
        // Equal up to summation-order rounding inside each block mean.
        CHECK(mom_scalar(shuffled, scheme) == Approx(base).margin(1e-12));
    }
}

TEST_CASE("trace estimate on deterministic data") {
    SampleSet s(2, 8);
    for (std::size_t i = 0; i < 8; ++i) s(i, 0) = 1.0; // all rows e1
    CHECK(estimate_trace(s, 0.1) == 1.0);

    RandomStream rng(2, 0);
    const auto r = sample_rademacher_diag({1.0, 0.5}, 500, rng);
    // Squared norms are constant, so the estimate is exact for any delta.
    CHECK(estimate_trace(r, 0.01) == 1.25);
    CHECK(estimate_trace(r, 0.37) == 1.25);
}

TEST_CASE("trace estimate brackets the true trace for gaussian data") {
    const double tr = 4.0; // identity in dimension 4
    int inside = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        RandomStream rng(1000, static_cast<std::uint64_t>(t));
        const auto s = sample_gaussian(CovarianceMatrix::identity(4), 2000, rng);
        const double phi1 = estimate_trace(s, 0.01);
        if (phi1 >= tr / 2.0 && phi1 <= 2.0 * tr) ++inside;
    }
    CHECK(inside >= 198); // >= 99% of 200
}
