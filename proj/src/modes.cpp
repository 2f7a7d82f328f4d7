#include "nesslab/modes.hpp"

#include <cmath>
#include <numbers>

#include "nesslab/error.hpp"

namespace nesslab {

ModeBasis::ModeBasis(std::size_t n) : n_(n), norm_(1.0 / std::sqrt(static_cast<double>(n))) {
    require(n >= 1, ErrorKind::invalid_input, "mode basis needs n >= 1");
    cos_.resize(n);
    sin_.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        cos_[m] = std::cos(a);
        sin_[m] = std::sin(a);
    }
}

long ModeBasis::wavenumber(std::size_t slot) const {
    const auto k = static_cast<long>(slot);
    const auto n = static_cast<long>(n_);
    return 2 * k > n ? k - n : k;
}

std::size_t ModeBasis::slot(long k) const {
    const auto n = static_cast<long>(n_);
    return static_cast<std::size_t>(((k % n) + n) % n);
}

std::complex<double> ModeBasis::coefficient(std::span<const double> x, long k) const {
    const std::size_t ks = slot(k);
    double re = 0.0, im = 0.0;
    std::size_t m = 0;
    for (std::size_t j = 0; j < n_; ++j) {
        re += cos_[m] * x[j];
        im -= sin_[m] * x[j];
        m += ks;
        if (m >= n_) m -= n_;
    }
    return {re * norm_, im * norm_};
}

std::vector<std::complex<double>> ModeBasis::forward(std::span<const double> x) const {
    require(x.size() == n_, ErrorKind::invalid_input, "mode transform: size mismatch");
    std::vector<std::complex<double>> out(n_);
    for (std::size_t k = 0; k < n_; ++k) out[k] = coefficient(x, static_cast<long>(k));
    return out;
}

std::vector<double> ModeBasis::inverse(std::span<const std::complex<double>> modes) const {
    require(modes.size() == n_, ErrorKind::invalid_input, "mode transform: size mismatch");
    std::vector<double> x(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
        double acc = 0.0;
        std::size_t m = 0;
        for (std::size_t k = 0; k < n_; ++k) {
            // Re[(a + ib)(cos + i sin)]
            acc += modes[k].real() * cos_[m] - modes[k].imag() * sin_[m];
            m += j;
            if (m >= n_) m -= n_;
        }
        x[j] = acc * norm_;
    }
    return x;
}

}  // namespace nesslab
