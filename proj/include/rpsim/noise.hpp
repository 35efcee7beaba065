#pragma once

// Index-keyed two-sided Brownian increments.
//
// Every increment is a pure function of (seed, absolute lattice index, coordinate), so
// runs that start at different pull-back times, shifted noise realisations and coarse
// grids all read the same Brownian path without carrying generator state around.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "rpsim/types.hpp"

namespace rpsim {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Independent sub-streams keyed off one seed.
enum class Stream : std::uint32_t {
    kWiener = 0,
    kInitialCondition = 1,
    kResampling = 2,
    kSeedDerivation = 3,
    kAssumptionSampling = 4,
};

/// Uniform in the open interval (0, 1), 53 bits of resolution.
double counter_uniform(std::uint64_t seed, std::int64_t index, std::uint32_t coordinate,
                       Stream stream) noexcept;

/// Standard normal by inverse-CDF of counter_uniform.
double counter_normal(std::uint64_t seed, std::int64_t index, std::uint32_t coordinate,
                      Stream stream) noexcept;

/// Raw 64 random bits for (seed, index, stream).
std::uint64_t counter_bits(std::uint64_t seed, std::int64_t index, std::uint32_t coordinate,
                           Stream stream) noexcept;

/// Seed for the i-th independent realisation derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

/// Equidistant partition {(start_index + j) h : j = 0..count} aligned with a lattice of
/// resolution base_step, with h = multiple * base_step and period tau = period_steps * h.
struct GridSpec {
    double base_step = 0.0;
    std::int64_t multiple = 1;
    std::int64_t start_index = 0;
    std::int64_t count = 0;
    std::int64_t period_steps = 1;

    [[nodiscard]] double step() const noexcept { return static_cast<double>(multiple) * base_step; }
    [[nodiscard]] double period() const noexcept { return static_cast<double>(period_steps) * step(); }
    [[nodiscard]] std::int64_t end_index() const noexcept { return start_index + count; }
    /// Absolute time of node j (j = 0 is the start).
    [[nodiscard]] double time(std::int64_t j) const noexcept {
        return static_cast<double>(start_index + j) * step();
    }
    /// Time of node j reduced into [0, tau), computed from the integer index.
    [[nodiscard]] double phase(std::int64_t j) const noexcept;

    /// Throws ConfigError when h is outside (0,1), counts are not positive, etc.
    void validate() const;
};

/// Build a grid on [t_start, t_end] with step h for a model of period tau, checking that
/// h is a lattice multiple, tau = n h, and both endpoints are grid times.
GridSpec make_grid(double base_step, double h, double tau, double t_start, double t_end);

/// Interface for anything that hands out fine-resolution increments by absolute index.
class IncrementSource {
public:
    virtual ~IncrementSource() = default;

    [[nodiscard]] virtual int dimension() const noexcept = 0;
    [[nodiscard]] virtual double base_step() const noexcept = 0;
    [[nodiscard]] virtual Vector increment(std::int64_t j) const = 0;
    /// Seed of the underlying lattice, when there is one.
    [[nodiscard]] virtual std::optional<std::uint64_t> seed() const noexcept { return std::nullopt; }

    /// Sum of the `grid.multiple` fine increments under coarse interval k, added in
    /// ascending index order. Throws AlignmentError if the grid is on another lattice.
    [[nodiscard]] Vector coarse_increment(const GridSpec& grid, std::int64_t k) const;
};

/// Deterministic two-sided Wiener increments, N(0, base_step) per coordinate.
class NoiseLattice final : public IncrementSource {
public:
    NoiseLattice(std::uint64_t seed, double base_step, int dimension);

    [[nodiscard]] std::optional<std::uint64_t> seed() const noexcept override { return seed_; }
    [[nodiscard]] int dimension() const noexcept override { return dimension_; }
    [[nodiscard]] double base_step() const noexcept override { return base_step_; }
    /// Accumulated Wiener shift in lattice steps (0 for an unshifted lattice).
    [[nodiscard]] std::int64_t offset() const noexcept { return offset_; }

    [[nodiscard]] Vector increment(std::int64_t j) const override;

    /// theta-shift: the returned view satisfies view.increment(j) == increment(j + steps).
    [[nodiscard]] NoiseLattice shifted(std::int64_t steps) const;
    /// Shift by `grid_steps` steps of `grid`.
    [[nodiscard]] NoiseLattice shifted(const GridSpec& grid, std::int64_t grid_steps) const;
    /// Shift by a time span; throws AlignmentError unless dt is an integer number of steps.
    [[nodiscard]] NoiseLattice shifted_by_time(double dt) const;

private:
    std::uint64_t seed_;
    double base_step_;
    int dimension_;
    std::int64_t offset_ = 0;
};

/// Fine increments for the index range [first, first + count) materialised once.
class IncrementTable final : public IncrementSource {
public:
    IncrementTable(const IncrementSource& source, std::int64_t first, std::int64_t count);

    [[nodiscard]] int dimension() const noexcept override { return dimension_; }
    [[nodiscard]] double base_step() const noexcept override { return base_step_; }
    [[nodiscard]] std::int64_t first() const noexcept { return first_; }
    [[nodiscard]] std::int64_t count() const noexcept { return count_; }
    [[nodiscard]] Vector increment(std::int64_t j) const override;
    [[nodiscard]] std::optional<std::uint64_t> seed() const noexcept override { return seed_; }

private:
    std::optional<std::uint64_t> seed_;
    std::int64_t first_;
    std::int64_t count_;
    int dimension_;
    double base_step_;
    std::vector<double> values_;  // row-major: count x dimension
};

}  // namespace rpsim
