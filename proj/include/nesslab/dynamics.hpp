#pragma once

// Stochastic integration of thermostatted oscillator chains.
//
// Every step is the splitting
//
//     O(dt/2)  B(dt/2) A(dt) B(dt/2)  O(dt/2)  [flips]
//
// where O is the exact Ornstein-Uhlenbeck update p <- c p + sqrt(T (1-c^2)) xi
// with c = exp(-gamma dt/2) on the thermostatted sites, B is a kick under the
// Hamiltonian force plus the tau drive and A a free drift. Velocity flips
// p_i -> -p_i fire independently per site at rate flip_rate/2.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nesslab/lattice.hpp"
#include "nesslab/rng.hpp"

namespace nesslab {

enum class DriveMode { equilibrium, tau_driven, boundary_driven, flip_noise };

std::string_view to_string(DriveMode mode);
std::optional<DriveMode> parse_drive_mode(std::string_view name);

struct DynamicsParams {
    DriveMode mode = DriveMode::equilibrium;
    double gamma = 1.0;
    double temperature = 1.0;  ///< periodic chains and the equilibrium open chain
    double t_left = 1.0;       ///< boundary-driven only
    double t_right = 1.0;      ///< boundary-driven only
    double tau = 0.0;
    double flip_rate = 0.0;    ///< eta; sites flip at rate eta/2

    void validate(const ModelParams& model) const;

    /// Temperature of the reservoir acting on `site`.
    double bath_temperature(const ModelParams& model, std::size_t site) const;
};

struct IntegrationSpec {
    double dt = 0.01;
    std::uint64_t n_steps = 0;        ///< total, burn-in included
    std::uint64_t burn_in_steps = 0;
    std::uint64_t record_every = 1;
    std::uint64_t seed = 0;
    std::uint64_t trajectory_id = 0;

    /// dt > 0, record_every >= 1, n_steps >= burn_in, dt < 2/omega_max.
    void validate(const ModelParams& model) const;

    static double default_dt(const ModelParams& model);
    static double default_burn_in_time(const ModelParams& model, const DynamicsParams& dyn);

    std::uint64_t recorded_steps() const { return n_steps - burn_in_steps; }
    std::uint64_t sample_count() const { return recorded_steps() / record_every; }
};

/// A named scalar evaluated on every recorded state.
struct MomentProbe {
    std::string name;
    std::function<double(const ChainState&, const ModelParams&)> eval;
};

namespace probes {
MomentProbe second_neighbour_gap_sq();  ///< "gap2_sq"
MomentProbe q_q3();                     ///< "q_q3"
MomentProbe q3_q();                     ///< "q3_q"
MomentProbe p_q_shift(std::ptrdiff_t l);  ///< "p_q[l]"
MomentProbe mean_kinetic();             ///< "kin_mean" = <p_i^2> over sites
}  // namespace probes

struct RecordPlan {
    bool bond_currents = false;
    bool local_energies = false;
    bool kinetic = false;
    bool states = false;  ///< keep full (q, p) copies
    std::vector<MomentProbe> moments;

    static RecordPlan everything() { return {true, true, true, false, {}}; }
};

struct ObservableSeries {
    IntegrationSpec spec;
    ModelParams model;
    DynamicsParams dyn;
    std::vector<std::string> moment_names;
    std::vector<ObservableSample> samples;
    std::vector<ChainState> states;  ///< filled when the plan asks for it
    ChainState final_state;

    /// Index of a named moment; throws missing_moments if absent.
    std::size_t moment_index(std::string_view name) const;
    std::vector<double> moment_series(std::string_view name) const;
    std::vector<double> current_series() const;
};

/// Stateful integrator reused across steps; owns scratch force storage.
class Integrator {
public:
    Integrator(ModelParams model, DynamicsParams dyn, double dt);

    /// One full step in place. Throws DivergenceError on non-finite state.
    void step(ChainState& s, RandomStream& rng);

    /// Hamiltonian-part hook: called with the state right after the first
    /// OU half-step and right before the second one.
    using SegmentHook = std::function<void(const ChainState& start, const ChainState& end)>;
    void step_with_hook(ChainState& s, RandomStream& rng, const SegmentHook& hook);

    const ModelParams& model() const { return model_; }
    const DynamicsParams& dyn() const { return dyn_; }
    double dt() const { return dt_; }
    std::uint64_t steps_taken() const { return steps_; }
    std::uint64_t flips_applied() const { return flips_; }

private:
    void ou_half(ChainState& s, RandomStream& rng);
    void verlet(ChainState& s);
    void flips(ChainState& s, RandomStream& rng);
    void check_finite(const ChainState& s) const;

    ModelParams model_;
    DynamicsParams dyn_;
    double dt_;
    double drive_;  ///< tau / (2T)
    std::vector<std::size_t> bath_sites_;
    std::vector<double> ou_c_;
    std::vector<double> ou_s_;
    std::vector<double> force_;
    bool force_valid_ = false;
    double flip_log_keep_ = 0.0;  ///< log of the per-site no-flip probability
    std::uint64_t flip_countdown_ = 0;
    bool flip_armed_ = false;
    std::uint64_t steps_ = 0;
    std::uint64_t flips_ = 0;
    double last_time_ = 0.0;
    const double* last_q_ = nullptr;
};

// Single-step entry points (allocate a fresh integrator; for tests and tools).
ChainState step_tau_driven(const ChainState& state, const ModelParams& model,
                           const DynamicsParams& dyn, double dt, RandomStream& rng);
ChainState step_boundary_driven(const ChainState& state, const ModelParams& model,
                                const DynamicsParams& dyn, double dt, RandomStream& rng);

/// Independent per-site flips with probability 1 - exp(-flip_rate dt / 2).
ChainState apply_flip_noise(const ChainState& state, double flip_rate, double dt,
                            RandomStream& rng);

/// Exact draw from exp(-H/T) for the periodic harmonic chain. With mu = 0 the
/// free k = 0 mode must be excluded explicitly; it is then left at rest.
ChainState sample_equilibrium_harmonic(const ModelParams& model, double temperature,
                                       RandomStream& rng, bool exclude_zero_mode = false);

/// Default initial condition used by simulate().
ChainState initial_state(const ModelParams& model, const DynamicsParams& dyn,
                         RandomStream& rng);

ObservableSeries simulate(const ModelParams& model, const DynamicsParams& dyn,
                          const IntegrationSpec& spec, const RecordPlan& plan = {},
                          std::optional<ChainState> initial = std::nullopt);

/// Runs trajectories 0..count-1 (trajectory_id = first_id + index) on up to
/// `workers` threads and returns results ordered by trajectory index.
template <class Result>
std::vector<Result> run_ensemble(std::size_t count, unsigned workers,
                                 const std::function<Result(std::size_t)>& job);

/// Non-template core of run_ensemble.
void run_indexed(std::size_t count, unsigned workers,
                 const std::function<void(std::size_t)>& job);

template <class Result>
std::vector<Result> run_ensemble(std::size_t count, unsigned workers,
                                 const std::function<Result(std::size_t)>& job) {
    std::vector<std::optional<Result>> slots(count);
    run_indexed(count, workers, [&](std::size_t i) { slots[i].emplace(job(i)); });
    std::vector<Result> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace nesslab
