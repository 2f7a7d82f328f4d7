#include "nesslab/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "nesslab/error.hpp"
#include "nesslab/modes.hpp"

namespace nesslab {

std::string_view to_string(DriveMode mode) {
    switch (mode) {
        case DriveMode::equilibrium: return "equilibrium";
        case DriveMode::tau_driven: return "tau-driven";
        case DriveMode::boundary_driven: return "boundary-driven";
        case DriveMode::flip_noise: return "flip-noise";
    }
    return "?";
}

std::optional<DriveMode> parse_drive_mode(std::string_view name) {
    for (auto m : {DriveMode::equilibrium, DriveMode::tau_driven, DriveMode::boundary_driven,
                   DriveMode::flip_noise})
        if (to_string(m) == name) return m;
    return std::nullopt;
}

void DynamicsParams::validate(const ModelParams& model) const {
    std::vector<std::string> problems;
    auto check = [&](bool ok, std::string msg) {
        if (!ok) problems.push_back(std::move(msg));
    };
    check(std::isfinite(gamma) && gamma >= 0.0, "gamma must be >= 0");
    check(std::isfinite(tau), "tau must be finite");
    check(std::isfinite(flip_rate) && flip_rate >= 0.0, "flip_rate must be >= 0");
    const bool periodic_mode = mode == DriveMode::tau_driven || mode == DriveMode::flip_noise;
    if (periodic_mode)
        check(model.periodic(), std::string(to_string(mode)) + " needs a periodic chain");
    if (mode == DriveMode::boundary_driven) {
        check(!model.periodic(), "boundary-driven needs an open chain");
        check(t_left > 0.0 && t_right > 0.0, "t_left and t_right must be > 0");
    } else {
        check(temperature > 0.0, "temperature must be > 0");
    }
    check(tau == 0.0 || periodic_mode, "tau != 0 requires tau-driven or flip-noise mode");
    check(flip_rate == 0.0 || mode == DriveMode::flip_noise ||
              mode == DriveMode::boundary_driven,
          "flip_rate > 0 requires flip-noise or boundary-driven mode");
    if (!problems.empty()) {
        std::string msg = "dynamics:";
        for (const auto& p : problems) msg += " " + p + ";";
        fail(ErrorKind::invalid_input, msg);
    }
}

double DynamicsParams::bath_temperature(const ModelParams& model, std::size_t site) const {
    if (mode != DriveMode::boundary_driven || model.periodic()) return temperature;
    return site == 0 ? t_left : t_right;
}

void IntegrationSpec::validate(const ModelParams& model) const {
    std::vector<std::string> problems;
    if (!(std::isfinite(dt) && dt > 0.0)) problems.emplace_back("dt must be > 0");
    if (record_every < 1) problems.emplace_back("record_every must be >= 1");
    if (n_steps < burn_in_steps) problems.emplace_back("n_steps must include burn_in_steps");
    const double w_max = std::sqrt(model.max_frequency_sq());
    if (dt >= 2.0 / w_max) {
        std::ostringstream os;
        os << "dt = " << dt << " violates the stability bound dt < 2/omega_max with omega_max = "
           << w_max;
        problems.push_back(os.str());
    }
    if (!problems.empty()) {
        std::string msg = "integration:";
        for (const auto& p : problems) msg += " " + p + ";";
        fail(ErrorKind::invalid_input, msg);
    }
}

double IntegrationSpec::default_dt(const ModelParams& model) {
    return 0.01 / std::max(1.0, std::sqrt(model.max_frequency_sq()));
}

double IntegrationSpec::default_burn_in_time(const ModelParams& model, const DynamicsParams& dyn) {
    const double sweep = 20.0 * static_cast<double>(model.size) / model.omega;
    return dyn.gamma > 0.0 ? std::min(20.0 / dyn.gamma, sweep) : sweep;
}

namespace probes {

MomentProbe second_neighbour_gap_sq() {
    return {"gap2_sq", [](const ChainState& s, const ModelParams&) {
                return mean_second_neighbour_gap_sq(s);
            }};
}
MomentProbe q_q3() {
    return {"q_q3", [](const ChainState& s, const ModelParams&) { return mean_q_q3(s); }};
}
MomentProbe q3_q() {
    return {"q3_q", [](const ChainState& s, const ModelParams&) { return mean_q3_q(s); }};
}
MomentProbe p_q_shift(std::ptrdiff_t l) {
    return {"p_q[" + std::to_string(l) + "]",
            [l](const ChainState& s, const ModelParams&) { return mean_p_q_shift(s, l); }};
}
MomentProbe mean_kinetic() {
    return {"kin_mean", [](const ChainState& s, const ModelParams&) {
                double acc = 0.0;
                for (double v : s.p) acc += v * v;
                return acc / static_cast<double>(s.p.size());
            }};
}

}  // namespace probes

std::size_t ObservableSeries::moment_index(std::string_view name) const {
    for (std::size_t i = 0; i < moment_names.size(); ++i)
        if (moment_names[i] == name) return i;
    fail(ErrorKind::missing_moments, "series does not record moment '" + std::string(name) + "'");
}

std::vector<double> ObservableSeries::moment_series(std::string_view name) const {
    const std::size_t k = moment_index(name);
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.extra_moments[k]);
    return out;
}

std::vector<double> ObservableSeries::current_series() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.J);
    return out;
}

// ---------------------------------------------------------------------------

Integrator::Integrator(ModelParams model, DynamicsParams dyn, double dt)
    : model_(std::move(model)), dyn_(dyn), dt_(dt), force_(model_.size) {
    model_.validate();
    dyn_.validate(model_);
    require(dt > 0.0, ErrorKind::invalid_input, "dt must be > 0");
    drive_ = model_.periodic() ? dyn_.tau / (2.0 * dyn_.temperature) : 0.0;

    if (model_.periodic()) {
        for (std::size_t i = 0; i < model_.size; ++i) bath_sites_.push_back(i);
    } else {
        bath_sites_ = {0, model_.size - 1};
    }
    const double c = std::exp(-0.5 * dyn_.gamma * dt_);
    for (std::size_t site : bath_sites_) {
        ou_c_.push_back(c);
        ou_s_.push_back(std::sqrt(dyn_.bath_temperature(model_, site) * (1.0 - c * c)));
    }
    flip_log_keep_ = -0.5 * dyn_.flip_rate * dt_;
}

void Integrator::ou_half(ChainState& s, RandomStream& rng) {
    if (dyn_.gamma == 0.0) return;
    for (std::size_t b = 0; b < bath_sites_.size(); ++b) {
        double& p = s.p[bath_sites_[b]];
        p = ou_c_[b] * p + ou_s_[b] * rng.normal();
    }
}

void Integrator::verlet(ChainState& s) {
    const std::size_t n = model_.size;
    const double half = 0.5 * dt_;
    if (!force_valid_) compute_forces(s.q, model_, drive_, force_);
    double* p = s.p.data();
    double* q = s.q.data();
    const double* f = force_.data();
    for (std::size_t i = 0; i < n; ++i) p[i] += half * f[i];
    for (std::size_t i = 0; i < n; ++i) q[i] += dt_ * p[i];
    compute_forces(s.q, model_, drive_, force_);
    for (std::size_t i = 0; i < n; ++i) p[i] += half * f[i];
    force_valid_ = true;
    check_finite(s);
}

void Integrator::check_finite(const ChainState& s) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < model_.size; ++i) acc += force_[i] + s.p[i];
    if (!std::isfinite(acc))
        throw DivergenceError(steps_ + 1, "integration diverged at step " +
                                              std::to_string(steps_ + 1));
}

void Integrator::flips(ChainState& s, RandomStream& rng) {
    if (flip_log_keep_ == 0.0) return;
    // Geometric skipping over the flattened (step, site) Bernoulli trials.
    auto draw_gap = [&]() -> std::uint64_t {
        const double g = std::floor(std::log(rng.uniform()) / flip_log_keep_);
        return g >= 1.8e19 ? std::uint64_t{1} << 63 : static_cast<std::uint64_t>(g);
    };
    if (!flip_armed_) {
        flip_countdown_ = draw_gap();
        flip_armed_ = true;
    }
    const std::uint64_t n = model_.size;
    std::uint64_t site = 0;
    while (flip_countdown_ < n - site) {
        site += flip_countdown_;
        s.p[site] = -s.p[site];
        ++flips_;
        ++site;
        flip_countdown_ = draw_gap();
    }
    flip_countdown_ -= n - site;
}

void Integrator::step(ChainState& s, RandomStream& rng) {
    step_with_hook(s, rng, {});
}

void Integrator::step_with_hook(ChainState& s, RandomStream& rng, const SegmentHook& hook) {
    if (s.q.size() != model_.size || s.p.size() != model_.size) check_state(s, model_);
    // Cached forces are only valid for the state this integrator last moved.
    if (steps_ == 0 || s.t != last_time_ || s.q.data() != last_q_) force_valid_ = false;
    ou_half(s, rng);
    if (hook) {
        const ChainState start = s;
        verlet(s);
        hook(start, s);
    } else {
        verlet(s);
    }
    ou_half(s, rng);
    flips(s, rng);
    ++steps_;
    s.t += dt_;
    last_time_ = s.t;
    last_q_ = s.q.data();
}

ChainState step_tau_driven(const ChainState& state, const ModelParams& model,
                           const DynamicsParams& dyn, double dt, RandomStream& rng) {
    require(model.periodic(), ErrorKind::unsupported_configuration,
            "tau-driven step needs a periodic chain");
    Integrator integ(model, dyn, dt);
    ChainState next = state;
    integ.step(next, rng);
    return next;
}

ChainState step_boundary_driven(const ChainState& state, const ModelParams& model,
                                const DynamicsParams& dyn, double dt, RandomStream& rng) {
    require(!model.periodic() && dyn.mode == DriveMode::boundary_driven,
            ErrorKind::unsupported_configuration,
            "boundary-driven step needs an open chain in boundary-driven mode");
    Integrator integ(model, dyn, dt);
    ChainState next = state;
    integ.step(next, rng);
    return next;
}

ChainState apply_flip_noise(const ChainState& state, double flip_rate, double dt,
                            RandomStream& rng) {
    require(flip_rate >= 0.0 && dt > 0.0, ErrorKind::invalid_input,
            "flip noise needs flip_rate >= 0 and dt > 0");
    ChainState next = state;
    if (flip_rate == 0.0) return next;
    const double prob = -std::expm1(-0.5 * flip_rate * dt);
    for (double& p : next.p)
        if (rng.uniform() < prob) p = -p;
    return next;
}

namespace {

ChainState harmonic_draw(const ModelParams& model, double temperature, RandomStream& rng,
                         bool exclude_zero_mode) {
    const std::size_t n = model.size;
    const ModeBasis basis(n);
    const double w2 = model.omega * model.omega;
    std::vector<std::complex<double>> qmodes(n), pmodes(n);
    for (std::size_t slot = 0; slot < n; ++slot) {
        const long k = basis.wavenumber(slot);
        if (k < 0) continue;
        const double sk = std::sin(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        const double wk2 = w2 * (model.mu * model.mu + 4.0 * sk * sk);
        const bool zero = k == 0;
        if (zero && exclude_zero_mode) continue;
        const bool real_mode = zero || 2 * static_cast<std::size_t>(k) == n;
        const double sq = std::sqrt(temperature / wk2);
        const double sp = std::sqrt(temperature);
        if (real_mode) {
            qmodes[slot] = sq * rng.normal();
            pmodes[slot] = sp * rng.normal();
        } else {
            const double r = std::sqrt(0.5);
            const double a = rng.normal(), b = rng.normal(), c = rng.normal(), d = rng.normal();
            qmodes[slot] = {r * sq * a, r * sq * b};
            pmodes[slot] = {r * sp * c, r * sp * d};
            qmodes[basis.slot(-k)] = std::conj(qmodes[slot]);
            pmodes[basis.slot(-k)] = std::conj(pmodes[slot]);
        }
    }
    return {basis.inverse(qmodes), basis.inverse(pmodes), 0.0};
}

}  // namespace

ChainState sample_equilibrium_harmonic(const ModelParams& model, double temperature,
                                       RandomStream& rng, bool exclude_zero_mode) {
    model.validate();
    require(model.periodic(), ErrorKind::unsupported_configuration,
            "harmonic sampler needs a periodic chain");
    require(model.lambda == 0.0 && model.far_couplings.empty(), ErrorKind::unsupported_configuration,
            "harmonic sampler needs lambda = 0 and nearest-neighbour coupling");
    require(temperature > 0.0, ErrorKind::invalid_input, "temperature must be > 0");
    require(model.mu > 0.0 || exclude_zero_mode, ErrorKind::pinning_required,
            "mu = 0 leaves the k = 0 mode free; exclude it explicitly");
    return harmonic_draw(model, temperature, rng, model.mu == 0.0 || exclude_zero_mode);
}

ChainState initial_state(const ModelParams& model, const DynamicsParams& dyn, RandomStream& rng) {
    if (model.periodic() && model.far_couplings.empty())
        return harmonic_draw(model, dyn.temperature, rng, model.mu == 0.0);
    ChainState s = ChainState::zeros(model.size);
    const double t_mean = dyn.mode == DriveMode::boundary_driven
                              ? 0.5 * (dyn.t_left + dyn.t_right)
                              : dyn.temperature;
    for (double& p : s.p) p = std::sqrt(t_mean) * rng.normal();
    return s;
}

namespace {

ObservableSample record(const ChainState& s, const ModelParams& model, const RecordPlan& plan,
                        double t) {
    ObservableSample out;
    out.t = t;
    const std::size_t nb = model.bond_count();
    std::vector<double> j(nb);
    if (model.far_couplings.empty()) {
        const double w2 = model.omega * model.omega;
        const std::size_t n = model.size;
        for (std::size_t i = 0; i < nb; ++i) {
            const std::size_t ip = i + 1 == n ? 0 : i + 1;
            j[i] = 0.5 * w2 * (s.q[ip] - s.q[i]) * (s.p[i] + s.p[ip]);
        }
    } else {
        j = bond_currents(s, model);
    }
    double sum = 0.0;
    for (double v : j) sum += v;
    out.J = nb ? sum / static_cast<double>(nb) : 0.0;
    out.H = total_energy(s, model);
    if (plan.bond_currents) out.j = std::move(j);
    if (plan.local_energies) out.h = local_energies(s, model);
    if (plan.kinetic) {
        out.kin.resize(model.size);
        for (std::size_t i = 0; i < model.size; ++i) out.kin[i] = s.p[i] * s.p[i];
    }
    out.extra_moments.reserve(plan.moments.size());
    for (const auto& m : plan.moments) out.extra_moments.push_back(m.eval(s, model));
    return out;
}

}  // namespace

ObservableSeries simulate(const ModelParams& model, const DynamicsParams& dyn,
                          const IntegrationSpec& spec, const RecordPlan& plan,
                          std::optional<ChainState> initial) {
    model.validate();
    dyn.validate(model);
    spec.validate(model);

    ObservableSeries series;
    series.spec = spec;
    series.model = model;
    series.dyn = dyn;
    for (const auto& m : plan.moments) series.moment_names.push_back(m.name);
    series.samples.reserve(spec.sample_count());

    RandomStream rng(spec.seed, spec.trajectory_id);
    ChainState state = initial ? std::move(*initial) : initial_state(model, dyn, rng);
    check_state(state, model);
    state.t = 0.0;

    Integrator integ(model, dyn, spec.dt);
    std::uint64_t until_record = spec.record_every;
    for (std::uint64_t step = 1; step <= spec.n_steps; ++step) {
        integ.step(state, rng);
        if (step <= spec.burn_in_steps) continue;
        if (--until_record == 0) {
            until_record = spec.record_every;
            const double t = static_cast<double>(step) * spec.dt;
            series.samples.push_back(record(state, model, plan, t));
            if (plan.states) series.states.push_back(state);
        }
    }
    series.final_state = std::move(state);
    return series;
}

void run_indexed(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& job) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mtx;
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&]() {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(mtx);
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<std::size_t>(workers, count);
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace nesslab
