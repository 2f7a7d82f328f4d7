#pragma once

// Steady-state estimators with batch-means uncertainties.
//
// Every error bar in the library comes from batch means: a series (or the
// concatenation of several independent series) is cut into equal batches and
// the spread of the batch averages gives the standard error. Quantities that
// combine several observables are first formed sample by sample and then
// batched, so cross-correlations are accounted for automatically.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nesslab/dynamics.hpp"
#include "nesslab/lattice.hpp"

namespace nesslab {

struct EstimateWithError {
    double mean = 0.0;
    double error = 0.0;        ///< standard error of the mean
    double n_effective = 0.0;  ///< sample variance / error^2, capped at the raw count
    std::size_t n_raw = 0;
    std::size_t batches = 0;
    std::string method = "batch-means";

    /// |mean - value| <= k * error.
    bool consistent_with(double value, double k = 3.0) const;
};

inline constexpr std::size_t default_batches = 20;
/// Batch count floor(sqrt(n)) over n pooled samples, never below
/// default_batches: batches of about sqrt(n) samples make the error estimate
/// itself consistent as n grows.
inline constexpr std::size_t auto_batches = 0;

std::size_t resolve_batches(std::size_t batches, std::size_t total_samples);

/// One series. Fewer than two samples throws insufficient_data. When there
/// are fewer samples than batches, every sample is its own batch. Leading
/// samples that do not fill a batch are dropped.
EstimateWithError batch_means(std::span<const double> x, std::size_t batches = auto_batches);

/// Independent series pooled: each contributes ceil(batches / count) batches.
EstimateWithError batch_means(const std::vector<std::vector<double>>& runs,
                              std::size_t batches = auto_batches);

/// Per-batch averages of each run (the raw material of batch_means).
std::vector<double> batch_averages(const std::vector<std::vector<double>>& runs,
                                   std::size_t batches);

/// Batch averages as a matrix: row b holds the batch-b average of each column.
/// `columns[c]` lists the per-run series of variable c.
std::vector<std::vector<double>> batch_matrix(
    const std::vector<std::vector<std::vector<double>>>& columns, std::size_t batches);

using SampleSelector = std::function<double(const ObservableSample&)>;

/// Batch-means average of `select` over the recorded samples of every series.
EstimateWithError stationary_average(std::span<const ObservableSeries> ensemble,
                                     const SampleSelector& select,
                                     std::size_t batches = auto_batches);
EstimateWithError stationary_average(const ObservableSeries& series, const SampleSelector& select,
                                     std::size_t batches = auto_batches);

/// Test that a vector of means is zero, using the covariance of its batch
/// averages (Hotelling T^2). Falls back to a diagonal chi^2 when there are
/// too few batches to estimate the covariance.
struct ZeroVectorTest {
    double statistic = 0.0;  ///< T^2 (or chi^2 for the diagonal fallback)
    double dof1 = 0.0;
    double dof2 = 0.0;       ///< 0 for the chi^2 fallback
    double p_value = 1.0;
    bool full_covariance = true;
};

ZeroVectorTest zero_vector_test(const std::vector<std::vector<double>>& batch_rows);

struct ProfileEstimate {
    std::vector<EstimateWithError> sites;  ///< one entry per site or bond
    ZeroVectorTest shape_test;             ///< constancy (currents) or linearity (temperatures)
};

/// Per-site <p_i^2>. The shape test checks linearity of the sites in
/// [first, last] through their second differences. By default the two end
/// sites are excluded. Needs recorded kinetic terms.
ProfileEstimate temperature_profile_estimate(std::span<const ObservableSeries> ensemble,
                                             std::size_t batches = 4 * default_batches,
                                             std::optional<std::size_t> first = std::nullopt,
                                             std::optional<std::size_t> last = std::nullopt);

/// Per-bond <j_i>. The shape test checks bond-to-bond constancy through
/// neighbouring differences. Needs recorded bond currents.
ProfileEstimate current_profile_estimate(std::span<const ObservableSeries> ensemble,
                                         std::size_t batches = 4 * default_batches);

struct EntropyProductionRecord {
    double t = 0.0;
    double sigma = 0.0;      ///< M J tau / T^2
    double W = 0.0;          ///< cumulative trapezoid of sigma from the first sample
    double sigma_bar = 0.0;  ///< W / (t - t_0); 0 at the first sample
};

std::vector<EntropyProductionRecord> entropy_production(const ObservableSeries& series,
                                                        const DynamicsParams& dyn);

/// Time averages of sigma over consecutive non-overlapping windows of
/// `window` time units (trapezoid on the recorded grid).
std::vector<double> window_averages(const std::vector<EntropyProductionRecord>& records,
                                    double window);

struct RateFunctionEstimate {
    double window = 0.0;
    double bin_width = 0.0;
    std::vector<double> bins;      ///< centres, symmetric about 0
    std::vector<double> log_prob;  ///< (1/t) log P(bin), -inf for empty bins
    std::vector<std::size_t> counts;
    std::vector<double> fit_w;     ///< positive centres used in the fit
    std::vector<double> fit_y;     ///< (1/t) log[P(w)/P(-w)]
    double symmetry_slope = 0.0;
    double slope_stderr = 0.0;
    std::size_t pairs_used = 0;
};

/// Histogram of window averages `sigma_bar` (window length `window`) and
/// the weighted fit of (1/t) log[P(w)/P(-w)] = s w through the origin, over
/// bin pairs with at least `min_count` entries on each side. Throws
/// insufficient_negative_events when no pair qualifies.
RateFunctionEstimate rate_function_symmetry(std::span<const double> sigma_bar, double window,
                                            std::size_t bins_per_side = 20,
                                            std::size_t min_count = 10);

struct GreenKuboPolicy {
    double max_lag_time = 0.0;    ///< 0 means a quarter of the shortest segment
    double sustain_time = 0.0;    ///< window over which C must stay in the noise
    double noise_factor = 2.0;
};

struct GreenKuboResult {
    std::vector<double> lag;              ///< s
    std::vector<double> correlation;      ///< C(s) = <J(0) J(s)>
    std::vector<double> correlation_err;
    std::vector<double> running;          ///< (M/T^2) int_0^s C
    std::vector<double> running_err;
    EstimateWithError kappa;              ///< running integral at the cutoff
    double cutoff = 0.0;
    bool truncated = false;               ///< cutoff never reached
};

/// `runs` are current series J(t) recorded every `sample_dt` from
/// independent equilibrium trajectories. Each run is split into segments
/// (at least `batches` in total) whose correlations give the error bars.
GreenKuboResult green_kubo(const std::vector<std::vector<double>>& runs, double sample_dt,
                           std::size_t sites, double temperature, const GreenKuboPolicy& policy,
                           std::size_t batches = default_batches);

struct LinearResponseFit {
    EstimateWithError slope;      ///< kappa in <J> = kappa tau
    EstimateWithError quadratic;  ///< b in <J> = a tau + b tau^2
    bool slope_significant = false;
    bool nonlinear = false;       ///< quadratic term beyond 3 standard errors
};

/// `current[g][r]` is the J series of trajectory r at drive taus[g]. Runs
/// with the same r should share their random stream (common random numbers);
/// fits are formed per sample and batched, so that correlation is handled.
LinearResponseFit linear_response_fit(std::span<const double> taus,
                                      const std::vector<std::vector<std::vector<double>>>& current,
                                      std::size_t batches = auto_batches);

/// Runs the tau grid with `trajectories` common-random-number trajectories
/// per point and fits.
LinearResponseFit linear_response_conductivity(const ModelParams& model,
                                               const DynamicsParams& dyn_template,
                                               const IntegrationSpec& spec,
                                               std::span<const double> taus,
                                               std::size_t trajectories, unsigned workers,
                                               std::size_t batches = auto_batches);

/// Moment probes the current balance needs.
std::vector<MomentProbe> balance_probes();

/// Per sample: -(gamma + eta) J + (w^4 tau / 4T) gap2 + (lambda w^2/2)(q_q3 - q3_q),
/// batch-averaged over the ensemble. Throws missing_moments without the probes.
EstimateWithError current_balance_residual(std::span<const ObservableSeries> ensemble,
                                           std::size_t batches = auto_batches);

/// The quartic term (lambda w^2/2)(<q_i q_{i+1}^3> - <q_i^3 q_{i+1}>) alone.
EstimateWithError quartic_balance_term(std::span<const ObservableSeries> ensemble,
                                       std::size_t batches = auto_batches);

struct JhatEstimate {
    std::ptrdiff_t l = 0;
    EstimateWithError value;  ///< w^2 <p_i q_{i+l}>
};

/// Needs probes::p_q_shift(l) for every requested l.
std::vector<JhatEstimate> jhat_spectrum(std::span<const ObservableSeries> ensemble,
                                        std::span<const std::ptrdiff_t> shifts,
                                        std::size_t batches = auto_batches);

/// Jhat_1 - J per sample, batched; consistent with 0 in a stationary state.
EstimateWithError jhat_current_gap(std::span<const ObservableSeries> ensemble,
                                   std::size_t batches = auto_batches);

/// Boundary-driven path for the action functional. Each Hamiltonian segment
/// of the integrator contributes its bond currents at both ends; the bath
/// kicks happen between segments.
struct ActionPath {
    double t_left = 1.0;
    double t_right = 1.0;
    std::vector<double> segment_dt;
    std::vector<std::vector<double>> j_start;  ///< bond currents at segment start
    std::vector<std::vector<double>> j_end;
    std::vector<double> h_initial;             ///< local energies at t = 0
    std::vector<double> h_final;

    std::size_t sites() const { return h_initial.size(); }
    /// Pi xi: time order reversed and momenta negated.
    ActionPath reversed() const;
    /// Trapezoid integral of each bond current over the path.
    std::vector<double> current_integrals() const;
};

ActionPath record_action_path(const ModelParams& model, const DynamicsParams& dyn,
                              const IntegrationSpec& spec);

struct ActionFunctionalReport {
    double R_global = 0.0;
    double R_local = 0.0;
    std::vector<double> K;
    double residual = 0.0;
};

/// K must have one entry per site with K_1 = T_L and K_N = T_R (else
/// invalid_profile).
ActionFunctionalReport action_functional_check(const ActionPath& path, std::span<const double> K);

/// R^t from the boundary terms alone.
double action_functional_global(const ActionPath& path);

}  // namespace nesslab
