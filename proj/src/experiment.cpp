#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nesslab/error.hpp"
#include "nesslab/estimators.hpp"
#include "nesslab/experiment.hpp"
#include "nesslab/harmonic_theory.hpp"

namespace nesslab {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

bool harmonic_ring(const ModelParams& m) {
    return m.periodic() && m.lambda == 0.0 && m.far_couplings.empty();
}

IntegrationSpec make_spec(const ExperimentConfig& c, const ModelParams& m,
                          const DynamicsParams& d) {
    IntegrationSpec s = c.spec;
    const double burn = c.burn_in_time ? *c.burn_in_time : IntegrationSpec::default_burn_in_time(m, d);
    s.burn_in_steps = static_cast<std::uint64_t>(std::llround(burn / s.dt));
    s.n_steps = s.burn_in_steps + static_cast<std::uint64_t>(std::llround(c.duration_time / s.dt));
    return s;
}

// Shared key columns: theory and simulation tables over the same grid join on these.
void add_parameter_columns(ResultTable& t) {
    t.add_column("size", "count");
    t.add_column("omega", "1/time");
    t.add_column("mu", "1");
    t.add_column("lambda", "energy/length^4");
    t.add_column("gamma", "1/time");
    t.add_column("temperature", "energy");
    t.add_column("t_left", "energy");
    t.add_column("t_right", "energy");
    t.add_column("tau", "energy");
    t.add_column("flip_rate", "1/time");
}

std::vector<double> parameter_values(const ModelParams& m, const DynamicsParams& d) {
    return {static_cast<double>(m.size), m.omega, m.mu, m.lambda, d.gamma,
            d.temperature, d.t_left, d.t_right, d.tau, d.flip_rate};
}

void push(std::vector<double>& row, const EstimateWithError& e) {
    row.push_back(e.mean);
    row.push_back(e.error);
    row.push_back(e.n_effective);
}

EstimateWithError missing() {
    EstimateWithError e;
    e.mean = e.error = nan;
    return e;
}

template <class F>
EstimateWithError guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::insufficient_data) return missing();
        throw;
    }
}

/// Linear-response slope of the harmonic ring, w^2 I(mu) / (gamma + eta).
/// Infinite at gamma = eta = 0; NaN where no closed form applies.
double kappa_reference(const ModelParams& m, const DynamicsParams& d) {
    if (!harmonic_ring(m)) return nan;
    if (d.mode != DriveMode::tau_driven && d.mode != DriveMode::flip_noise &&
        d.mode != DriveMode::equilibrium)
        return nan;
    const double damping = d.gamma + (d.mode == DriveMode::tau_driven ? 0.0 : d.flip_rate);
    if (damping <= 0.0) return std::numeric_limits<double>::infinity();
    return m.omega * m.omega * harmonic_current_integral(m.mu) / damping;
}

/// The same slope for the finite ring, zero mode excluded.
double kappa_ring_reference(const ModelParams& m, const DynamicsParams& d) {
    const double infinite = kappa_reference(m, d);
    if (!std::isfinite(infinite)) return infinite;
    const double eta = d.mode == DriveMode::tau_driven ? 0.0 : d.flip_rate;
    return flip_ring_conductivity(m.omega, m.mu, eta, d.gamma, m.size);
}

/// Exact finite-ring current of the tau-driven harmonic chain.
double mode_sum_reference(const ModelParams& m, const DynamicsParams& d) {
    if (!harmonic_ring(m) || d.mode != DriveMode::tau_driven || d.gamma <= 0.0) return nan;
    try {
        return mode_sum_current(m, d, m.size);
    } catch (const Error&) {
        return nan;
    }
}

struct Runner {
    const ExperimentConfig& config;
    ExperimentResult& result;

    /// Trajectories first_id .. first_id + count - 1; diverged ones come back
    /// empty and are counted and reported.
    std::vector<std::optional<ObservableSeries>> run(const ModelParams& m, const DynamicsParams& d,
                                                     const RecordPlan& plan, std::size_t count,
                                                     std::uint64_t first_id = 0) {
        const IntegrationSpec base = make_spec(config, m, d);
        struct Outcome {
            std::optional<ObservableSeries> series;
            std::string failure;
        };
        auto outcomes = run_ensemble<Outcome>(count, config.workers, [&](std::size_t i) {
            IntegrationSpec s = base;
            s.trajectory_id = first_id + i;
            try {
                return Outcome{simulate(m, d, s, plan), {}};
            } catch (const DivergenceError& e) {
                std::ostringstream os;
                os << "trajectory " << s.trajectory_id << " diverged at step " << e.step()
                   << " (size " << m.size << ", gamma " << d.gamma << ", tau " << d.tau << ")";
                return Outcome{std::nullopt, os.str()};
            }
        });
        std::vector<std::optional<ObservableSeries>> out;
        for (auto& o : outcomes) {
            ++result.trajectories;
            if (!o.series) {
                ++result.failed_trajectories;
                result.warnings.push_back(o.failure);
            }
            out.push_back(std::move(o.series));
        }
        return out;
    }
};

std::vector<ObservableSeries> successful(std::vector<std::optional<ObservableSeries>>&& runs) {
    std::vector<ObservableSeries> out;
    for (auto& r : runs)
        if (r) out.push_back(std::move(*r));
    return out;
}

std::size_t total_samples(const std::vector<ObservableSeries>& ens) {
    std::size_t n = 0;
    for (const auto& s : ens) n += s.samples.size();
    return n;
}

void steady_state(const ExperimentConfig& c, Runner& runner) {
    const auto& m = c.model;
    const auto& d = c.dyn;
    RecordPlan plan;
    plan.bond_currents = plan.local_energies = plan.kinetic = true;
    const auto ens = successful(runner.run(m, d, plan, c.ensemble_size));
    const bool have = total_samples(ens) >= 2;

    ResultTable summary{"summary", {}, {}};
    add_parameter_columns(summary);
    summary.add_estimate("J", "energy/time");
    summary.add_estimate("H", "energy");
    summary.add_estimate("kinetic_temperature", "energy");
    summary.add_estimate("entropy_production", "1/time");
    summary.add_column("J_mode_sum", "energy/time");
    summary.add_column("J_reference", "energy/time");
    summary.add_column("trajectories", "count");
    summary.add_column("failed_trajectories", "count");

    ResultTable sites{"sites", {}, {}};
    sites.add_column("site", "index");
    sites.add_estimate("T", "energy");
    sites.add_estimate("h", "energy");

    ResultTable bonds{"bonds", {}, {}};
    bonds.add_column("bond", "index");
    bonds.add_estimate("j", "energy/time");

    if (have) {
        auto row = parameter_values(m, d);
        const std::span<const ObservableSeries> span(ens);
        push(row, guarded([&] { return stationary_average(span, [](const auto& s) { return s.J; }); }));
        push(row, guarded([&] { return stationary_average(span, [](const auto& s) { return s.H; }); }));
        push(row, guarded([&] {
            return stationary_average(span, [](const ObservableSample& s) {
                double k = 0.0;
                for (double v : s.kin) k += v;
                return k / static_cast<double>(s.kin.size());
            });
        }));
        const bool entropy = m.periodic() && d.tau != 0.0;
        const double scale = static_cast<double>(m.size) * d.tau / (d.temperature * d.temperature);
        push(row, entropy ? guarded([&] {
            return stationary_average(span, [&](const auto& s) { return scale * s.J; });
        })
                          : missing());
        row.push_back(mode_sum_reference(m, d));
        row.push_back(d.tau * kappa_reference(m, d));
        row.push_back(static_cast<double>(c.ensemble_size));
        row.push_back(static_cast<double>(c.ensemble_size - ens.size()));
        summary.add_row(std::move(row));

        for (std::size_t i = 0; i < m.size; ++i) {
            std::vector<double> r{static_cast<double>(i)};
            push(r, guarded([&] { return stationary_average(span, [i](const auto& s) { return s.kin[i]; }); }));
            push(r, guarded([&] { return stationary_average(span, [i](const auto& s) { return s.h[i]; }); }));
            sites.add_row(std::move(r));
        }
        for (std::size_t i = 0; i < m.bond_count(); ++i) {
            std::vector<double> r{static_cast<double>(i)};
            push(r, guarded([&] { return stationary_average(span, [i](const auto& s) { return s.j[i]; }); }));
            bonds.add_row(std::move(r));
        }
    }
    runner.result.tables = {std::move(summary), std::move(sites), std::move(bonds)};
}

/// J series per trajectory id, for every grid point; trajectories that
/// diverged at any point are dropped from all points so common random
/// numbers stay paired.
std::vector<std::vector<std::vector<double>>> paired_currents(
    Runner& runner, const ModelParams& m, const std::vector<DynamicsParams>& grid,
    std::size_t count) {
    std::vector<std::vector<std::optional<ObservableSeries>>> raw;
    for (const auto& d : grid) raw.push_back(runner.run(m, d, {}, count));
    std::vector<std::vector<std::vector<double>>> out(grid.size());
    for (std::size_t r = 0; r < count; ++r) {
        bool ok = true;
        for (const auto& g : raw) ok = ok && g[r].has_value();
        if (!ok) continue;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            auto j = raw[g][r]->current_series();
            if (j.empty()) continue;
            out[g].push_back(std::move(j));
        }
    }
    return out;
}

void sweep_tau(const ExperimentConfig& c, Runner& runner) {
    std::vector<DynamicsParams> grid;
    for (double t : c.sweep_values) {
        DynamicsParams d = c.dyn;
        d.tau = t;
        grid.push_back(d);
    }
    const auto current = paired_currents(runner, c.model, grid, c.ensemble_size);

    ResultTable sweep{"sweep", {}, {}};
    add_parameter_columns(sweep);
    sweep.add_estimate("J", "energy/time");
    sweep.add_column("J_mode_sum", "energy/time");
    sweep.add_column("J_reference", "energy/time");
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (current[g].empty()) continue;
        auto row = parameter_values(c.model, grid[g]);
        push(row, guarded([&] { return batch_means(current[g]); }));
        row.push_back(mode_sum_reference(c.model, grid[g]));
        row.push_back(grid[g].tau * kappa_reference(c.model, grid[g]));
        sweep.add_row(std::move(row));
    }

    ResultTable fit{"fit", {}, {}};
    add_parameter_columns(fit);
    fit.add_estimate("slope", "energy/time/energy");
    fit.add_estimate("quadratic", "energy/time/energy^2");
    fit.add_column("slope_significant", "flag");
    fit.add_column("nonlinear", "flag");
    fit.add_column("slope_reference", "energy/time/energy");
    fit.add_column("points", "count");
    if (!current.front().empty()) {
        DynamicsParams d = c.dyn;
        d.tau = nan;
        auto row = parameter_values(c.model, d);
        LinearResponseFit lr;
        bool ok = true;
        try {
            lr = linear_response_fit(c.sweep_values, current);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data && e.kind() != ErrorKind::invalid_input)
                throw;
            runner.result.warnings.push_back(std::string("slope fit skipped: ") + e.what());
            ok = false;
        }
        if (ok) {
            push(row, lr.slope);
            push(row, lr.quadratic.n_raw ? lr.quadratic : missing());
            row.push_back(lr.slope_significant);
            row.push_back(lr.nonlinear);
            row.push_back(kappa_reference(c.model, c.dyn));
            row.push_back(static_cast<double>(grid.size()));
            fit.add_row(std::move(row));
        }
    }
    runner.result.tables = {std::move(sweep), std::move(fit)};
}

void sweep_gamma(const ExperimentConfig& c, Runner& runner) {
    const double probe = std::abs(c.dyn.tau);
    const std::vector<double> taus{-probe, probe};

    ResultTable sweep{"sweep", {}, {}};
    add_parameter_columns(sweep);
    sweep.add_estimate("kappa", "energy/time/energy");
    sweep.add_estimate("quadratic", "energy/time/energy^2");
    sweep.add_column("nonlinear", "flag");
    sweep.add_column("kappa_reference", "energy/time/energy");
    sweep.add_column("kappa_ring_reference", "energy/time/energy");

    std::vector<double> gammas, kappa, err, neff;
    for (double g : c.sweep_values) {
        DynamicsParams d = c.dyn;
        d.gamma = g;
        std::vector<DynamicsParams> grid;
        for (double t : taus) {
            DynamicsParams dt = d;
            dt.tau = t;
            grid.push_back(dt);
        }
        const auto current = paired_currents(runner, c.model, grid, c.ensemble_size);
        if (current.front().empty()) continue;
        LinearResponseFit lr;
        try {
            lr = linear_response_fit(taus, current);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data) throw;
            runner.result.warnings.push_back(std::string("gamma point skipped: ") + e.what());
            continue;
        }
        d.tau = probe;
        auto row = parameter_values(c.model, d);
        push(row, lr.slope);
        push(row, lr.quadratic.n_raw ? lr.quadratic : missing());
        row.push_back(lr.nonlinear);
        row.push_back(kappa_reference(c.model, d));
        row.push_back(kappa_ring_reference(c.model, d));
        sweep.add_row(std::move(row));
        gammas.push_back(g);
        kappa.push_back(lr.slope.mean);
        err.push_back(lr.slope.error);
        neff.push_back(lr.slope.n_effective);
    }

    // kappa(gamma) = a + b gamma by weighted least squares; a is the gamma -> 0 limit.
    ResultTable ex{"extrapolation", {}, {}};
    add_parameter_columns(ex);
    ex.add_estimate("kappa_limit", "energy/time/energy");
    ex.add_estimate("kappa_gamma_slope", "energy/time/energy^2");
    ex.add_column("kappa_limit_reference", "energy/time/energy");
    ex.add_column("increasing_as_gamma_decreases", "flag");
    ex.add_column("points", "count");
    if (gammas.size() >= 2) {
        bool weighted = true;
        for (double e : err) weighted = weighted && std::isfinite(e) && e > 0.0;
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < gammas.size(); ++i) {
            const double w = weighted ? 1.0 / (err[i] * err[i]) : 1.0;
            sw += w;
            sx += w * gammas[i];
            sy += w * kappa[i];
            sxx += w * gammas[i] * gammas[i];
            sxy += w * gammas[i] * kappa[i];
        }
        const double det = sw * sxx - sx * sx;
        EstimateWithError a, b;
        a.method = b.method = "weighted-least-squares";
        a.n_raw = b.n_raw = gammas.size();
        a.n_effective = b.n_effective = *std::min_element(neff.begin(), neff.end());
        if (det > 0.0) {
            a.mean = (sxx * sy - sx * sxy) / det;
            b.mean = (sw * sxy - sx * sy) / det;
            a.error = weighted ? std::sqrt(sxx / det) : nan;
            b.error = weighted ? std::sqrt(sw / det) : nan;
        } else {
            a.mean = b.mean = a.error = b.error = nan;
        }
        std::vector<std::size_t> order(gammas.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](auto i, auto j) { return gammas[i] > gammas[j]; });
        bool increasing = true;
        for (std::size_t i = 1; i < order.size(); ++i)
            increasing = increasing && kappa[order[i]] > kappa[order[i - 1]];

        DynamicsParams d = c.dyn;
        d.gamma = 0.0;
        d.tau = probe;
        auto row = parameter_values(c.model, d);
        push(row, a);
        push(row, b);
        row.push_back(kappa_reference(c.model, d));
        row.push_back(increasing);
        row.push_back(static_cast<double>(gammas.size()));
        ex.add_row(std::move(row));
    }
    runner.result.tables = {std::move(sweep), std::move(ex)};
}

void sweep_size(const ExperimentConfig& c, Runner& runner) {
    ResultTable sweep{"sweep", {}, {}};
    add_parameter_columns(sweep);
    sweep.add_estimate("J", "energy/time");
    sweep.add_column("J_mode_sum", "energy/time");
    sweep.add_column("J_reference", "energy/time");
    for (double v : c.sweep_values) {
        ModelParams m = c.model;
        m.size = static_cast<std::size_t>(v);
        const auto ens = successful(runner.run(m, c.dyn, {}, c.ensemble_size));
        if (total_samples(ens) < 2) continue;
        auto row = parameter_values(m, c.dyn);
        push(row, guarded([&] {
            return stationary_average(std::span<const ObservableSeries>(ens),
                                      [](const auto& s) { return s.J; });
        }));
        row.push_back(mode_sum_reference(m, c.dyn));
        row.push_back(c.dyn.tau * kappa_reference(m, c.dyn));
        sweep.add_row(std::move(row));
    }
    runner.result.tables = {std::move(sweep)};
}

void green_kubo_run(const ExperimentConfig& c, Runner& runner) {
    const auto ens = successful(runner.run(c.model, c.dyn, {}, c.ensemble_size));
    std::vector<std::vector<double>> runs;
    for (const auto& s : ens) runs.push_back(s.current_series());

    ResultTable corr{"correlation", {}, {}};
    corr.add_column("lag", "time");
    corr.add_estimate("C", "energy^2/time^2");
    corr.add_estimate("running_kappa", "energy/time/energy");

    ResultTable summary{"summary", {}, {}};
    add_parameter_columns(summary);
    summary.add_estimate("kappa", "energy/time/energy");
    summary.add_column("cutoff", "time");
    summary.add_column("truncated", "flag");
    summary.add_column("kappa_reference", "energy/time/energy");
    summary.add_column("kappa_ring_reference", "energy/time/energy");

    if (!runs.empty()) {
        GreenKuboPolicy policy;
        policy.max_lag_time = c.gk_max_lag_time;
        policy.sustain_time = c.gk_sustain_time;
        try {
            const auto gk = green_kubo(runs, c.spec.dt * static_cast<double>(c.spec.record_every),
                                       c.model.size, c.dyn.temperature, policy);
            const double segments = static_cast<double>(gk.kappa.batches);
            for (std::size_t l = 0; l < gk.lag.size(); ++l)
                corr.add_row({gk.lag[l], gk.correlation[l], gk.correlation_err[l], segments,
                              gk.running[l], gk.running_err[l], segments});
            auto row = parameter_values(c.model, c.dyn);
            push(row, gk.kappa);
            row.push_back(gk.cutoff);
            row.push_back(gk.truncated);
            row.push_back(kappa_reference(c.model, c.dyn));
            row.push_back(kappa_ring_reference(c.model, c.dyn));
            summary.add_row(std::move(row));
            if (gk.truncated)
                runner.result.warnings.emplace_back(
                    "Green-Kubo integral has no plateau within the lag window");
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data) throw;
            runner.result.warnings.push_back(std::string("Green-Kubo skipped: ") + e.what());
        }
    }
    runner.result.tables = {std::move(corr), std::move(summary)};
}

void fluctuation_theorem(const ExperimentConfig& c, Runner& runner) {
    const auto ens = successful(runner.run(c.model, c.dyn, {}, c.ensemble_size));

    ResultTable hist{"histogram", {}, {}};
    hist.add_column("window", "time");
    hist.add_column("sigma_bar", "1/time");
    hist.add_column("count", "count");
    hist.add_column("log_prob_rate", "1/time");

    ResultTable sym{"symmetry", {}, {}};
    add_parameter_columns(sym);
    sym.add_column("window", "time");
    sym.add_column("segments", "count");
    sym.add_estimate("sigma_mean", "1/time");
    sym.add_estimate("symmetry_slope", "1");
    sym.add_column("insufficient_negative_events", "flag");

    std::vector<std::vector<EntropyProductionRecord>> records;
    for (const auto& s : ens) records.push_back(entropy_production(s, c.dyn));

    for (double w : c.ft_windows_time) {
        std::vector<double> bars;
        for (const auto& r : records) {
            const auto v = window_averages(r, w);
            bars.insert(bars.end(), v.begin(), v.end());
        }
        auto row = parameter_values(c.model, c.dyn);
        row.push_back(w);
        row.push_back(static_cast<double>(bars.size()));
        // Windows do not overlap and decorrelate quickly: each is one sample.
        push(row, guarded([&] { return batch_means(bars, bars.size()); }));
        bool negative_missing = false;
        try {
            const auto rf = rate_function_symmetry(bars, w, c.ft_bins_per_side, c.ft_min_count);
            for (std::size_t b = 0; b < rf.bins.size(); ++b)
                hist.add_row({w, rf.bins[b], static_cast<double>(rf.counts[b]), rf.log_prob[b]});
            EstimateWithError s;
            s.mean = rf.symmetry_slope;
            s.error = rf.slope_stderr;
            s.n_effective = static_cast<double>(rf.pairs_used);
            s.n_raw = rf.pairs_used;
            push(row, s);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_negative_events &&
                e.kind() != ErrorKind::insufficient_data)
                throw;
            negative_missing = e.kind() == ErrorKind::insufficient_negative_events;
            push(row, missing());
            std::ostringstream os;
            os << "window " << w << ": " << e.what();
            runner.result.warnings.push_back(os.str());
        }
        row.push_back(negative_missing);
        if (!bars.empty()) sym.add_row(std::move(row));
    }
    runner.result.tables = {std::move(hist), std::move(sym)};
}

void boundary_profile(const ExperimentConfig& c, Runner& runner) {
    const auto& m = c.model;
    const auto& d = c.dyn;
    RecordPlan plan;
    plan.bond_currents = plan.kinetic = true;
    const auto ens = successful(runner.run(m, d, plan, c.ensemble_size));

    std::optional<TemperatureProfile> reference;
    if (d.flip_rate > 0.0 && m.lambda == 0.0) {
        ConductivityModel k;
        k.kind = ConductivityKind::flip_noise;
        k.omega = m.omega;
        k.mu = m.mu;
        k.eta = d.flip_rate;
        reference = solve_temperature_profile(k, d.t_left, d.t_right);
    }
    const double n = static_cast<double>(m.size);

    ResultTable sites{"sites", {}, {}};
    sites.add_column("site", "index");
    sites.add_column("x", "1");
    sites.add_estimate("T", "energy");
    sites.add_column("T_reference", "energy");

    ResultTable bonds{"bonds", {}, {}};
    bonds.add_column("bond", "index");
    bonds.add_estimate("j", "energy/time");
    bonds.add_column("j_reference", "energy/time");

    ResultTable summary{"summary", {}, {}};
    add_parameter_columns(summary);
    summary.add_estimate("J", "energy/time");
    summary.add_column("j_reference", "energy/time");
    summary.add_column("current_constancy_statistic", "1");
    summary.add_column("current_constancy_p", "1");
    summary.add_column("temperature_linearity_statistic", "1");
    summary.add_column("temperature_linearity_p", "1");

    if (total_samples(ens) >= 2) {
        const std::span<const ObservableSeries> span(ens);
        const double j_ref = reference ? reference->current(m.size) : nan;
        std::optional<ProfileEstimate> temps, currents;
        try {
            temps = temperature_profile_estimate(span);
            currents = current_profile_estimate(span);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::insufficient_data) throw;
            runner.result.warnings.push_back(std::string("profile tests skipped: ") + e.what());
        }
        for (std::size_t i = 0; i < m.size; ++i) {
            const double x = m.size > 1 ? static_cast<double>(i) / (n - 1.0) : 0.0;
            std::vector<double> r{static_cast<double>(i), x};
            push(r, temps ? temps->sites[i]
                          : guarded([&] {
                                return stationary_average(span, [i](const auto& s) { return s.kin[i]; });
                            }));
            r.push_back(reference ? (*reference)(x) : nan);
            sites.add_row(std::move(r));
        }
        for (std::size_t i = 0; i < m.bond_count(); ++i) {
            std::vector<double> r{static_cast<double>(i)};
            push(r, currents ? currents->sites[i]
                             : guarded([&] {
                                   return stationary_average(span, [i](const auto& s) { return s.j[i]; });
                               }));
            r.push_back(j_ref);
            bonds.add_row(std::move(r));
        }
        auto row = parameter_values(m, d);
        push(row, guarded([&] { return stationary_average(span, [](const auto& s) { return s.J; }); }));
        row.push_back(j_ref);
        row.push_back(currents ? currents->shape_test.statistic : nan);
        row.push_back(currents ? currents->shape_test.p_value : nan);
        row.push_back(temps ? temps->shape_test.statistic : nan);
        row.push_back(temps ? temps->shape_test.p_value : nan);
        summary.add_row(std::move(row));
    }
    runner.result.tables = {std::move(sites), std::move(bonds), std::move(summary)};
}

void theory_tables(const ExperimentConfig& c, Runner& runner) {
    ResultTable t{"theory", {}, {}};
    add_parameter_columns(t);
    t.add_column("I_mu", "1");
    t.add_column("kappa_harmonic", "energy/time/energy");
    t.add_column("J_harmonic", "energy/time");
    t.add_column("J_mode_sum", "energy/time");
    t.add_column("subcritical", "flag");
    t.add_column("kappa_flip", "energy/time/energy");
    t.add_column("kappa_flip_limit", "energy/time/energy");
    t.add_column("kappa_closure", "energy/time/energy");

    for (double v : c.sweep_values) {
        ModelParams m = c.model;
        DynamicsParams d = c.dyn;
        switch (*c.sweep_axis) {
            case SweepAxis::tau: d.tau = v; break;
            case SweepAxis::gamma: d.gamma = v; break;
            case SweepAxis::size: m.size = static_cast<std::size_t>(v); break;
            case SweepAxis::mu: m.mu = v; break;
        }
        const double w2 = m.omega * m.omega;
        const double i_mu = harmonic_current_integral(m.mu);
        auto row = parameter_values(m, d);
        row.push_back(i_mu);
        row.push_back(d.gamma > 0.0 ? w2 * i_mu / d.gamma : std::numeric_limits<double>::infinity());
        row.push_back(harmonic_mean_current(m.omega, m.mu, d.gamma, d.tau));

        double mode_sum = nan;
        bool subcritical = true;
        if (harmonic_ring(m) && d.gamma > 0.0) {
            DynamicsParams td = d;
            td.mode = DriveMode::tau_driven;
            td.flip_rate = 0.0;
            try {
                mode_sum = mode_sum_current(m, td, m.size);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::supercritical_drive) throw;
                subcritical = false;
            }
        }
        row.push_back(mode_sum);
        row.push_back(subcritical);
        row.push_back(d.flip_rate > 0.0 ? w2 * i_mu / (d.flip_rate + d.gamma) : nan);
        row.push_back(d.flip_rate > 0.0 ? w2 * i_mu / d.flip_rate : nan);
        double closure = nan;
        if (m.lambda > 0.0 && m.mu > 0.0) {
            ConductivityModel k;
            k.kind = ConductivityKind::closure;
            k.omega = m.omega;
            k.mu = m.mu;
            k.lambda = m.lambda;
            closure = k(d.temperature);
        }
        row.push_back(closure);
        t.add_row(std::move(row));
    }
    runner.result.tables = {std::move(t)};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentConfig c = config;
    c.validate();
    ExperimentResult result;
    result.warnings = c.warnings;
    Runner runner{c, result};
    switch (c.experiment) {
        case ExperimentKind::steady_state: steady_state(c, runner); break;
        case ExperimentKind::sweep_tau: sweep_tau(c, runner); break;
        case ExperimentKind::sweep_gamma: sweep_gamma(c, runner); break;
        case ExperimentKind::sweep_size: sweep_size(c, runner); break;
        case ExperimentKind::green_kubo: green_kubo_run(c, runner); break;
        case ExperimentKind::fluctuation_theorem: fluctuation_theorem(c, runner); break;
        case ExperimentKind::boundary_profile: boundary_profile(c, runner); break;
        case ExperimentKind::theory_tables: theory_tables(c, runner); break;
    }
    return result;
}

}  // namespace nesslab
