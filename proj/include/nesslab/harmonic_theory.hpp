#pragma once

// Exact results for the periodic harmonic chain and the reference
// conductivity curves used to judge simulations.
//
// Mode quantities follow the transform in modes.hpp:
//
//     w_k^2   = w^2 (mu^2 + 4 sin^2(pi k/N))
//     alpha_k = 2 w^2 sin(2 pi k/N) / w_k^2
//     delta_k = 1 / (1 - w_k^2 alpha_k^2 tau^2 / (4 gamma^2 T^2))
//
// and in the stationary tau-driven state
//
//     <|P_k|^2> = delta_k T,   <|Q_k|^2> = delta_k T / w_k^2,
//     <P_k Q_{-k}> = i delta_k alpha_k tau / (2 gamma).

#include <array>
#include <complex>
#include <cstddef>

#include "nesslab/dynamics.hpp"
#include "nesslab/lattice.hpp"

namespace nesslab {

double mode_frequency(const ModelParams& model, long k, std::size_t n);
/// Throws zero_mode when w_k = 0 (mu = 0, k = 0).
double mode_alpha(const ModelParams& model, long k, std::size_t n);
/// Throws supercritical_drive when the stationary moments do not exist.
double mode_delta(const ModelParams& model, const DynamicsParams& dyn, long k, std::size_t n);

struct ModeCorrelations {
    long k = 0;
    double omega_k_sq = 0.0;
    double alpha_k = 0.0;
    double delta_k = 1.0;
    double pp = 0.0;       ///< <|P_k|^2>
    double qq = 0.0;       ///< <|Q_k|^2>
    double pq_imag = 0.0;  ///< Im <P_k Q_{-k}>
    double pq_real = 0.0;  ///< Re <P_k Q_{-k}>, always 0

    std::complex<double> pq() const { return {pq_real, pq_imag}; }
};

/// Needs lambda = 0, nearest-neighbour coupling and gamma > 0.
ModeCorrelations stationary_mode_correlations(const ModelParams& model, const DynamicsParams& dyn,
                                              long k, std::size_t n);

/// The four stationary second-moment equations evaluated on `c`; all
/// entries vanish for an exact solution.
std::array<std::complex<double>, 4> stationary_equation_residuals(const ModeCorrelations& c,
                                                                  const ModelParams& model,
                                                                  const DynamicsParams& dyn);

/// J = (w^2/N) sum_k sin(2 pi k/N) Im<Q_{-k} P_k> over the exact correlations
/// of an N-site ring; modes with sin(2 pi k/N) = 0 carry no current.
double mode_sum_current(const ModelParams& model, const DynamicsParams& dyn, std::size_t n);

/// I(mu) = int_{-1/2}^{1/2} sin^2(2 pi x) / (mu^2 + 4 sin^2(pi x)) dx.
double harmonic_current_integral(double mu);

/// (w^2 tau / gamma) I(mu). At gamma = 0 the current is infinite: returns
/// +-infinity with the sign of tau (and 0 for tau = 0).
double harmonic_mean_current(double omega, double mu, double gamma, double tau);

/// w^2 tau int_{-1/2}^{1/2} sin(2 pi x) sin(2 pi m x) / (mu^2 + 4 sin^2(pi x)) dx.
double sigma_m_integral(double omega, double mu, double tau, int m);

/// Linear-response conductivity of the harmonic N-site ring with flip noise
/// and bulk friction: (1/(eta + gamma)) (1/N) sum_{k != 0} v_k^2 with
/// v_k = w^2 sin(2 pi k/N) / w_k. Exact for every N; the free zero mode at
/// mu = 0 is dropped, which at mu = 0 gives w^2 (1 - 2/N) / (2 (eta + gamma)).
double flip_ring_conductivity(double omega, double mu, double eta, double gamma, std::size_t n);

enum class ConductivityKind { harmonic_infinite, flip_noise, closure };

inline constexpr double closure_alpha = 0.275637;

struct ConductivityModel {
    ConductivityKind kind = ConductivityKind::flip_noise;
    double omega = 1.0;
    double mu = 0.0;
    double eta = 0.0;     ///< flip-noise
    double lambda = 0.0;  ///< closure
    double alpha = closure_alpha;

    /// kappa(T). Harmonic returns +infinity. Closure is a large-mu reference.
    double operator()(double temperature) const;
    void validate() const;
};

double conductivity(const ConductivityModel& model, double temperature);

/// kappa(T) = c T^a.
struct PowerLawConductivity {
    double c = 1.0;
    double a = 0.0;

    double operator()(double temperature) const;
    /// Phi(T) = int kappa dT (log branch at a = -1).
    double potential(double temperature) const;
};

/// Throws unsupported_configuration for the harmonic (infinite) kind.
PowerLawConductivity as_power_law(const ConductivityModel& model);

/// Stationary Fourier-law profile on x in [0, 1] with Phi(T(x)) linear in x.
struct TemperatureProfile {
    PowerLawConductivity kappa;
    double t_left = 1.0;
    double t_right = 1.0;

    double operator()(double x) const;
    double gradient(double x) const;
    /// Phi(T_R) - Phi(T_L) = kappa(T) T'(x): the current times N, in the
    /// convention j = kappa (T_{i+1} - T_i). Negative when T_L > T_R.
    double scaled_current() const;
    double current(std::size_t n_sites) const {
        return scaled_current() / static_cast<double>(n_sites);
    }
};

TemperatureProfile solve_temperature_profile(const PowerLawConductivity& kappa, double t_left,
                                             double t_right);
TemperatureProfile solve_temperature_profile(const ConductivityModel& model, double t_left,
                                             double t_right);

}  // namespace nesslab
