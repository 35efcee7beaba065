#include "rpsim/noise.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "rpsim/errors.hpp"

namespace rpsim {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// Relative slack when deciding whether a ratio of floating times is an integer.
constexpr double kAlignmentSlack = 1e-9;

std::int64_t require_integer_ratio(double numerator, double denominator, const char* what) {
    const double ratio = numerator / denominator;
    const double nearest = std::round(ratio);
    if (!std::isfinite(ratio) || std::abs(ratio - nearest) > kAlignmentSlack * std::max(1.0, std::abs(ratio))) {
        std::ostringstream os;
        os << what << ": " << numerator << " / " << denominator << " = " << ratio
           << " is not an integer";
        throw AlignmentError(os.str());
    }
    return static_cast<std::int64_t>(nearest);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c[0], hi0, lo0);
        mulhilo(kPhiloxM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    return c;
}

std::uint64_t counter_bits(std::uint64_t seed, std::int64_t index, std::uint32_t coordinate,
                           Stream stream) noexcept {
    const auto u = static_cast<std::uint64_t>(index);
    const auto out = philox4x32(
        {static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(u >> 32), coordinate,
         static_cast<std::uint32_t>(stream)},
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double counter_uniform(std::uint64_t seed, std::int64_t index, std::uint32_t coordinate,
                       Stream stream) noexcept {
    const std::uint64_t bits = counter_bits(seed, index, coordinate, stream);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::int64_t index, std::uint32_t coordinate,
                      Stream stream) noexcept {
    const double u = counter_uniform(seed, index, coordinate, stream);
    // Phi^{-1}(u) = -sqrt(2) erfc^{-1}(2u); u is never 0 or 1.
    return -M_SQRT2 * boost::math::erfc_inv(2.0 * u);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
    return counter_bits(base_seed, static_cast<std::int64_t>(index), 0, Stream::kSeedDerivation);
}

double GridSpec::phase(std::int64_t j) const noexcept {
    std::int64_t r = (start_index + j) % period_steps;
    if (r < 0) r += period_steps;
    return static_cast<double>(r) * step();
}

void GridSpec::validate() const {
    if (!(base_step > 0.0) || !std::isfinite(base_step)) throw ConfigError("grid: base_step must be positive");
    if (multiple < 1) throw ConfigError("grid: step multiple must be >= 1");
    if (count < 1) throw ConfigError("grid: count must be >= 1");
    if (period_steps < 1) throw ConfigError("grid: period_steps must be >= 1 (tau = n*h)");
    const double h = step();
    if (!(h > 0.0 && h < 1.0)) {
        std::ostringstream os;
        os << "grid: step h = " << h << " must lie in (0, 1)";
        throw ConfigError(os.str());
    }
}

GridSpec make_grid(double base_step, double h, double tau, double t_start, double t_end) {
    if (!(base_step > 0.0)) throw ConfigError("grid: base_step must be positive");
    if (!(h > 0.0 && h < 1.0)) {
        std::ostringstream os;
        os << "grid: step h = " << h << " must lie in (0, 1)";
        throw ConfigError(os.str());
    }
    if (!(tau > 0.0)) throw ConfigError("grid: period tau must be positive");
    if (!(t_end > t_start)) throw ConfigError("grid: t_end must exceed t_start");

    GridSpec grid;
    grid.base_step = base_step;
    grid.multiple = require_integer_ratio(h, base_step, "h = m*base_step");
    grid.period_steps = require_integer_ratio(tau, h, "tau = n*h");
    grid.start_index = require_integer_ratio(t_start, h, "start time on grid");
    grid.count = require_integer_ratio(t_end, h, "end time on grid") - grid.start_index;
    grid.validate();
    return grid;
}

Vector IncrementSource::coarse_increment(const GridSpec& grid, std::int64_t k) const {
    if (grid.base_step != base_step()) {
        std::ostringstream os;
        os << "grid base_step " << grid.base_step << " differs from lattice base_step " << base_step();
        throw AlignmentError(os.str());
    }
    const std::int64_t first = k * grid.multiple;
    Vector sum = increment(first);
    for (std::int64_t i = 1; i < grid.multiple; ++i) sum += increment(first + i);
    return sum;
}

NoiseLattice::NoiseLattice(std::uint64_t seed, double base_step, int dimension)
    : seed_(seed), base_step_(base_step), dimension_(dimension) {
    if (!(base_step > 0.0) || !std::isfinite(base_step)) throw ConfigError("noise: base_step must be positive");
    if (dimension < 1) throw ConfigError("noise: dimension must be >= 1");
}

Vector NoiseLattice::increment(std::int64_t j) const {
    const double scale = std::sqrt(base_step_);
    const std::int64_t index = j + offset_;
    Vector dw(dimension_);
    for (int c = 0; c < dimension_; ++c)
        dw[c] = scale * counter_normal(seed_, index, static_cast<std::uint32_t>(c), Stream::kWiener);
    return dw;
}

NoiseLattice NoiseLattice::shifted(std::int64_t steps) const {
    NoiseLattice view = *this;
    view.offset_ += steps;
    return view;
}

NoiseLattice NoiseLattice::shifted(const GridSpec& grid, std::int64_t grid_steps) const {
    if (grid.base_step != base_step_) throw AlignmentError("shift: grid is not on this lattice");
    return shifted(grid_steps * grid.multiple);
}

NoiseLattice NoiseLattice::shifted_by_time(double dt) const {
    if (dt == 0.0) return *this;
    return shifted(require_integer_ratio(dt, base_step_, "shift in lattice steps"));
}

IncrementTable::IncrementTable(const IncrementSource& source, std::int64_t first, std::int64_t count)
    : seed_(source.seed()), first_(first), count_(count), dimension_(source.dimension()), base_step_(source.base_step()) {
    if (count < 0) throw ConfigError("increment table: negative count");
    values_.resize(static_cast<std::size_t>(count) * static_cast<std::size_t>(dimension_));
    for (std::int64_t i = 0; i < count; ++i) {
        const Vector dw = source.increment(first + i);
        for (int c = 0; c < dimension_; ++c)
            values_[static_cast<std::size_t>(i * dimension_ + c)] = dw[c];
    }
}

Vector IncrementTable::increment(std::int64_t j) const {
    const std::int64_t i = j - first_;
    if (i < 0 || i >= count_) {
        std::ostringstream os;
        os << "increment table: index " << j << " outside [" << first_ << ", " << first_ + count_ << ")";
        throw std::out_of_range(os.str());
    }
    return Eigen::Map<const Vector>(values_.data() + i * dimension_, dimension_);
}

}  // namespace rpsim
