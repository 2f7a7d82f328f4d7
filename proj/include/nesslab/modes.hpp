#pragma once

// Fourier coordinates of a periodic chain,
//
//     X_k = N^{-1/2} sum_j exp(-2 pi i k j / N) x_j ,   k = -N/2+1 .. N/2,
//
// stored by k mod N. With this sign the stationary harmonic correlations take
// the form Im<P_k Q_{-k}> = delta_k alpha_k tau / (2 gamma) for tau > 0.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace nesslab {

class ModeBasis {
public:
    explicit ModeBasis(std::size_t n);

    std::size_t size() const { return n_; }

    /// Signed wavenumber in (-N/2, N/2] of storage slot `slot`.
    long wavenumber(std::size_t slot) const;
    /// Storage slot of wavenumber k (any integer, reduced mod N).
    std::size_t slot(long k) const;

    std::vector<std::complex<double>> forward(std::span<const double> x) const;
    /// Single coefficient X_k.
    std::complex<double> coefficient(std::span<const double> x, long k) const;
    /// Real part of the inverse transform; `modes` must be Hermitian for an
    /// exact real result.
    std::vector<double> inverse(std::span<const std::complex<double>> modes) const;

private:
    std::size_t n_;
    double norm_;
    std::vector<double> cos_;
    std::vector<double> sin_;
};

}  // namespace nesslab
