#pragma once

// Lattice Hamiltonians and pointwise observables of 1-D oscillator chains.
//
// Two geometries are supported:
//
//   periodic      H = sum_i [p_i^2/2 + V(q_i)] + sum_k sum_i U^k(q_i - q_{i+k}),
//                 indices taken mod M;
//   open-pinned   H = sum_i [p_i^2/2 + V(q_i)] + sum_{i} U(q_{i+1} - q_i)
//                     + U(q_1) + U(q_N)   (each end pinned by the coupling).
//
// with V(q) = w^2 mu^2 q^2/2 + lambda q^4/4 and U^1(x) = w^2 x^2/2. Longer
// range couplings U^k (k >= 2) are available on the periodic chain.
//
// Sites and bonds are 0-based. Bond i joins sites i and i+1; its current
// j_i is the energy flowing into site i from site i+1 (positive when energy
// moves towards lower indices).

#include <cstddef>
#include <span>
#include <vector>

namespace nesslab {

enum class Boundary { open_pinned, periodic };

/// Even polynomial pair potential U(x) = harmonic x^2/2 + quartic x^4/4.
struct Coupling {
    double harmonic = 0.0;
    double quartic = 0.0;

    double potential(double x) const {
        const double x2 = x * x;
        return 0.5 * harmonic * x2 + 0.25 * quartic * x2 * x2;
    }
    /// F = -U'
    double force(double x) const { return -(harmonic + quartic * x * x) * x; }
};

struct ModelParams {
    std::size_t size = 2;
    double omega = 1.0;
    double mu = 0.0;
    double lambda = 0.0;
    Boundary boundary = Boundary::periodic;
    /// U^k for k = 2, 3, ...; empty means nearest-neighbour only.
    std::vector<Coupling> far_couplings;

    std::size_t interaction_range() const { return 1 + far_couplings.size(); }
    bool periodic() const { return boundary == Boundary::periodic; }
    std::size_t bond_count() const { return periodic() ? size : size - 1; }

    /// U^k, k >= 1.
    Coupling coupling(std::size_t k) const;

    double on_site_potential(double q) const {
        const double q2 = q * q;
        return 0.5 * omega * omega * mu * mu * q2 + 0.25 * lambda * q2 * q2;
    }
    double on_site_force(double q) const {
        return -(omega * omega * mu * mu + lambda * q * q) * q;
    }

    /// Largest harmonic frequency, w^2 (mu^2 + 4).
    double max_frequency_sq() const { return omega * omega * (mu * mu + 4.0); }

    /// Throws invalid_input / unsupported_configuration on violation.
    void validate() const;
};

struct ChainState {
    std::vector<double> q;
    std::vector<double> p;
    double t = 0.0;

    static ChainState zeros(std::size_t n) {
        return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0};
    }
};

struct ForceField {
    std::vector<double> f;
};

/// One recorded point of a trajectory. Vector fields are filled only when
/// the recording plan requests them.
struct ObservableSample {
    double t = 0.0;
    std::vector<double> j;    ///< bond currents
    std::vector<double> h;    ///< local energies
    std::vector<double> kin;  ///< p_i^2
    double J = 0.0;           ///< bond-averaged current
    double H = 0.0;           ///< total energy
    std::vector<double> extra_moments;  ///< named at series level
};

double total_energy(const ChainState& state, const ModelParams& model);
double local_energy(const ChainState& state, const ModelParams& model, std::size_t i);
std::vector<double> local_energies(const ChainState& state, const ModelParams& model);

double bond_current(const ChainState& state, const ModelParams& model, std::size_t i);
std::vector<double> bond_currents(const ChainState& state, const ModelParams& model);

/// J = mean of the bond currents (M bonds periodic, N-1 bonds open).
double mean_current(const ChainState& state, const ModelParams& model);

ForceField hamiltonian_force(const ChainState& state, const ModelParams& model);

/// Non-Hamiltonian drive (tau/2T) sum_k [F^k(q_{i-k}-q_i) + F^k(q_i-q_{i+k})].
/// Periodic chains only.
ForceField tau_force(const ChainState& state, const ModelParams& model, double tau,
                     double temperature);

/// sum_i tau_force_i p_i; equals M J tau / T identically.
double tau_injected_power(const ChainState& state, const ModelParams& model, double tau,
                          double temperature);

/// Kernels used by the integrator: overwrite `f` with the total force
/// (Hamiltonian plus tau drive with prefactor drive = tau/(2T)).
void compute_forces(std::span<const double> q, const ModelParams& model, double drive,
                    std::span<double> f);

// Site-averaged moments of translation-invariant chains (periodic).
double mean_second_neighbour_gap_sq(const ChainState& s);  ///< <(q_{i+1}-q_{i-1})^2>
double mean_q_q3(const ChainState& s);                     ///< <q_i q_{i+1}^3>
double mean_q3_q(const ChainState& s);                     ///< <q_i^3 q_{i+1}>
double mean_p_q_shift(const ChainState& s, std::ptrdiff_t l);  ///< <p_i q_{i+l}>

/// Throws invalid_input if the state does not match the model.
void check_state(const ChainState& state, const ModelParams& model);

}  // namespace nesslab
