#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rpsim/errors.hpp"
#include "rpsim/noise.hpp"

using namespace rpsim;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

// Known-answer vectors published with Random123 (kat_vectors, philox4x32 10 rounds).
TEST(Philox, KnownAnswers) {
    using A4 = std::array<std::uint32_t, 4>;
    EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NoiseLattice, IncrementIsPureFunctionOfIndex) {
    const NoiseLattice lattice(42, 0.01, 3);
    const Vector a = lattice.increment(0);
    const Vector b = lattice.increment(0);
    ASSERT_EQ(a.size(), 3);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(a[c], b[c]);

    const NoiseLattice copy(42, 0.01, 3);
    EXPECT_EQ(copy.increment(-123456789)[2], lattice.increment(-123456789)[2]);
}

TEST(NoiseLattice, SeedSensitivity) {
    const NoiseLattice a(42, 0.01, 1), b(43, 0.01, 1);
    int differing = 0;
    for (int j = 0; j < 100; ++j) differing += a.increment(j)[0] != b.increment(j)[0];
    EXPECT_GT(differing, 0);
    EXPECT_EQ(differing, 100);
}

TEST(NoiseLattice, TwoSidedIndicesAreDistinct) {
    const NoiseLattice lattice(7, 0.5, 1);
    EXPECT_NE(lattice.increment(-1)[0], lattice.increment(1)[0]);
    EXPECT_NE(lattice.increment(-1)[0], lattice.increment(0)[0]);
}

TEST(NoiseLattice, CoordinatesAreDistinct) {
    const NoiseLattice lattice(7, 0.5, 2);
    const Vector v = lattice.increment(10);
    EXPECT_NE(v[0], v[1]);
}

TEST(NoiseLattice, SampleMeanAndVariance) {
    const double base = 0x1.0p-6;
    const NoiseLattice lattice(2024, base, 1);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int j = -n / 2; j < n / 2; ++j) {
        const double x = lattice.increment(j)[0];
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    // CLT: the mean has standard deviation sqrt(base / n).
    EXPECT_LT(std::abs(mean), 4.0 * std::sqrt(base / n));
    // The sample variance of Gaussians has standard deviation base * sqrt(2 / n).
    EXPECT_LT(std::abs(var - base), 4.0 * base * std::sqrt(2.0 / n));
}

TEST(NoiseLattice, KolmogorovSmirnovAgainstStandardNormal) {
    const double base = 0.01;
    const NoiseLattice lattice(99, base, 1);
    const int n = 10000;
    std::vector<double> z(n);
    for (int j = 0; j < n; ++j) z[j] = lattice.increment(j)[0] / std::sqrt(base);
    std::sort(z.begin(), z.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = normal_cdf(z[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    // Asymptotic critical value at alpha = 1e-3: sqrt(-ln(alpha / 2) / 2) / sqrt(n).
    const double critical = std::sqrt(-std::log(0.5e-3) / 2.0) / std::sqrt(static_cast<double>(n));
    EXPECT_LT(d, critical);
}

TEST(CoarseIncrement, IdentityRefinement) {
    const NoiseLattice lattice(5, 0.125, 2);
    const GridSpec grid{0.125, 1, 0, 8, 8};
    for (int k = -5; k < 5; ++k) {
        const Vector a = lattice.coarse_increment(grid, k);
        const Vector b = lattice.increment(k);
        EXPECT_EQ(a[0], b[0]);
        EXPECT_EQ(a[1], b[1]);
    }
}

TEST(CoarseIncrement, AdditivityIsExact) {
    const NoiseLattice lattice(5, 0.0625, 1);
    const GridSpec grid{0.0625, 2, 0, 8, 8};
    for (int k = -5; k < 5; ++k)
        EXPECT_EQ(lattice.coarse_increment(grid, k)[0], lattice.increment(2 * k)[0] + lattice.increment(2 * k + 1)[0]);

    const GridSpec grid4{0.0625, 4, 0, 4, 4};
    const Vector expected = ((lattice.increment(4) + lattice.increment(5)) + lattice.increment(6)) + lattice.increment(7);
    EXPECT_EQ(lattice.coarse_increment(grid4, 1)[0], expected[0]);
}

TEST(CoarseIncrement, VarianceScalesWithMultiple) {
    const double base = 0x1.0p-8;
    const int m = 4;
    const NoiseLattice lattice(31, base, 1);
    const GridSpec grid{base, m, 0, 64, 64};
    const int n = 100000;
    double sumsq = 0.0;
    for (int k = 0; k < n; ++k) {
        const double x = lattice.coarse_increment(grid, k)[0];
        sumsq += x * x;
    }
    const double var = sumsq / n;
    EXPECT_LT(std::abs(var - m * base), 4.0 * m * base * std::sqrt(2.0 / n));
}

TEST(CoarseIncrement, MisalignedGridRejected) {
    const NoiseLattice lattice(5, 0.01, 1);
    const GridSpec grid{0.02, 1, 0, 10, 10};
    EXPECT_THROW((void)lattice.coarse_increment(grid, 0), AlignmentError);
}

TEST(Shift, ZeroShiftIsIdentity) {
    const NoiseLattice lattice(11, 0.05, 1);
    const NoiseLattice view = lattice.shifted(0);
    for (int j = -20; j < 20; ++j) EXPECT_EQ(view.increment(j)[0], lattice.increment(j)[0]);
}

TEST(Shift, GroupProperty) {
    const NoiseLattice lattice(11, 0.05, 2);
    const NoiseLattice round_trip = lattice.shifted(37).shifted(-37);
    const NoiseLattice twice = lattice.shifted(20).shifted(20);
    const NoiseLattice once = lattice.shifted(40);
    for (int j = -50; j < 50; ++j) {
        EXPECT_EQ(round_trip.increment(j)[1], lattice.increment(j)[1]);
        EXPECT_EQ(twice.increment(j)[0], once.increment(j)[0]);
    }
}

TEST(Shift, OnePeriodShiftReadsIncrementsOnePeriodLater) {
    const double h = 0.05;
    const NoiseLattice lattice(11, h, 1);
    const GridSpec grid = make_grid(h, h, 1.0, -10.0, 0.0);
    const std::int64_t n = grid.period_steps;
    ASSERT_EQ(n, 20);
    const NoiseLattice view = lattice.shifted(grid, 1);
    EXPECT_EQ(view.offset(), 1);
    const NoiseLattice period_view = lattice.shifted(n);
    for (int j = -200; j < 0; ++j) EXPECT_EQ(period_view.increment(j)[0], lattice.increment(j + n)[0]);
    EXPECT_EQ(lattice.shifted_by_time(1.0).offset(), n);
}

TEST(Shift, NonIntegerTimeShiftRejected) {
    const NoiseLattice lattice(11, 0.05, 1);
    EXPECT_THROW((void)lattice.shifted_by_time(0.07), AlignmentError);
}

TEST(Grid, EnforcesPeriodDivisibility) {
    EXPECT_THROW((void)make_grid(0.01, 0.3, 1.0, -1.2, 0.0), AlignmentError);
    EXPECT_THROW((void)make_grid(0.01, 0.015, 1.0, -1.0, 0.0), AlignmentError);
    EXPECT_THROW((void)make_grid(0.5, 1.0, 1.0, -1.0, 0.0), ConfigError);
    EXPECT_THROW((void)make_grid(0.05, 0.05, 1.0, -1.01, 0.0), AlignmentError);
}

TEST(Grid, Geometry) {
    const GridSpec g = make_grid(0x1.0p-12, 0x1.0p-4, 1.0, -10.0, 0.0);
    EXPECT_EQ(g.multiple, 256);
    EXPECT_EQ(g.period_steps, 16);
    EXPECT_EQ(g.start_index, -160);
    EXPECT_EQ(g.count, 160);
    EXPECT_DOUBLE_EQ(g.time(0), -10.0);
    EXPECT_EQ(g.phase(0), 0.0);
    EXPECT_EQ(g.phase(3), g.phase(3 + 16));
    EXPECT_DOUBLE_EQ(g.phase(3), 3.0 / 16.0);
}

TEST(IncrementTable, MatchesSourceAndRejectsOutOfRange) {
    const NoiseLattice lattice(3, 0.01, 2);
    const IncrementTable table(lattice, -10, 20);
    for (int j = -10; j < 10; ++j) EXPECT_EQ(table.increment(j)[1], lattice.increment(j)[1]);
    EXPECT_EQ(table.seed(), lattice.seed());
    EXPECT_THROW((void)table.increment(10), std::out_of_range);
    EXPECT_THROW((void)table.increment(-11), std::out_of_range);

    const GridSpec grid{0.01, 5, -2, 4, 4};
    for (int k = -2; k < 2; ++k) EXPECT_EQ(table.coarse_increment(grid, k)[0], lattice.coarse_increment(grid, k)[0]);
}
