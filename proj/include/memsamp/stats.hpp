#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Small running-statistics helpers shared by the simulators: Welford
// accumulation plus two-sided 95% Student-t intervals.

namespace memsamp {

/// Two-sided 97.5% Student-t quantile. Tabulated through 30 degrees of
/// freedom, Cornish-Fisher expansion around the normal quantile beyond.
inline double student_t_975(std::int64_t df) {
    static constexpr double table[31] = {
        0.0,     12.7062, 4.30265, 3.18245, 2.77645, 2.57058, 2.44691,
        2.36462, 2.30600, 2.26216, 2.22814, 2.20099, 2.17881, 2.16037,
        2.14479, 2.13145, 2.11991, 2.10982, 2.10092, 2.09302, 2.08596,
        2.07961, 2.07387, 2.06866, 2.06390, 2.05954, 2.05553, 2.05183,
        2.04841, 2.04523, 2.04227};
    if (df < 1) throw std::invalid_argument("degrees of freedom must be positive");
    if (df <= 30) return table[df];
    const double z = 1.959963985;
    const double z3 = z * z * z;
    const double z5 = z3 * z * z;
    const double d = static_cast<double>(df);
    return z + (z3 + z) / (4.0 * d) +
           (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * d * d);
}

/// Streaming mean and variance accumulator (Welford's update).
class SampleStats {
public:
    void add(double value) {
        ++n_;
        const double delta = value - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (value - mean_);
    }

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }

    /// Unbiased sample variance; zero until two samples arrive.
    double variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }

    /// Half-width of the two-sided 95% t interval for the mean.
    double ci_halfwidth() const {
        if (n_ < 2) return 0.0;
        return student_t_975(n_ - 1) *
               std::sqrt(variance() / static_cast<double>(n_));
    }

private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace memsamp
