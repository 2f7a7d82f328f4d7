#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nesslab/dynamics.hpp"
#include "nesslab/error.hpp"
#include "nesslab/modes.hpp"

using namespace nesslab;

namespace {

ModelParams ring(std::size_t m, double omega = 1.0, double mu = 0.0, double lambda = 0.0) {
    ModelParams p;
    p.size = m;
    p.omega = omega;
    p.mu = mu;
    p.lambda = lambda;
    return p;
}

struct MeanErr {
    double mean, err;
};

// Plain batch means, 40 batches.
MeanErr batch(const std::vector<double>& x) {
    const std::size_t nb = 40, len = x.size() / nb;
    std::vector<double> m(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t i = 0; i < len; ++i) m[b] += x[b * len + i];
        m[b] /= static_cast<double>(len);
    }
    double mean = 0, var = 0;
    for (double v : m) mean += v;
    mean /= nb;
    for (double v : m) var += (v - mean) * (v - mean);
    var /= nb - 1;
    return {mean, std::sqrt(var / nb)};
}

double energy_drift(double dt, double horizon) {
    const auto model = ring(6, 1.0, 0.8);
    DynamicsParams dyn;
    dyn.gamma = 0.0;
    RandomStream rng(5, 0);
    ChainState s = sample_equilibrium_harmonic(model, 1.0, rng);
    const double h0 = total_energy(s, model);
    Integrator integ(model, dyn, dt);
    double worst = 0.0;
    const auto n = static_cast<std::uint64_t>(std::llround(horizon / dt));
    for (std::uint64_t i = 0; i < n; ++i) {
        integ.step(s, rng);
        worst = std::max(worst, std::abs(total_energy(s, model) - h0) / h0);
    }
    return worst;
}

}  // namespace

TEST_CASE("Verlet single mode keeps energy") {
    const auto model = ring(1, 1.0, 1.0);
    DynamicsParams dyn;
    dyn.gamma = 0.0;
    Integrator integ(model, dyn, 0.01);
    RandomStream rng(1, 0);
    ChainState s{{1.0}, {0.0}, 0.0};
    const double h0 = total_energy(s, model);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        integ.step(s, rng);
        worst = std::max(worst, std::abs(total_energy(s, model) - h0));
    }
    CHECK(worst <= 1e-4 * h0);
}

TEST_CASE("Hamiltonian energy error scales as dt^2") {
    const double e1 = energy_drift(0.04, 40.0);
    const double e2 = energy_drift(0.02, 40.0);
    CHECK(e1 < 2e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("OU substep is exact for a free particle") {
    // One site, no pinning: the only force is the self-bond, which vanishes.
    const auto model = ring(1);
    DynamicsParams dyn;
    dyn.gamma = 1.3;
    dyn.temperature = 0.7;
    const double dt = 0.05, p0 = 2.0;
    const int steps = 10, draws = 40000;
    const double t = steps * dt;
    double s1 = 0, s2 = 0;
    for (int d = 0; d < draws; ++d) {
        RandomStream rng(77, static_cast<std::uint64_t>(d));
        Integrator integ(model, dyn, dt);
        ChainState s{{0.0}, {p0}, 0.0};
        for (int i = 0; i < steps; ++i) integ.step(s, rng);
        s1 += s.p[0];
        s2 += s.p[0] * s.p[0];
    }
    const double mean = s1 / draws, var = s2 / draws - mean * mean;
    const double m_true = p0 * std::exp(-dyn.gamma * t);
    const double v_true = dyn.temperature * (1 - std::exp(-2 * dyn.gamma * t));
    CHECK(std::abs(mean - m_true) < 4 * std::sqrt(v_true / draws));
    CHECK(std::abs(var - v_true) < 4 * v_true * std::sqrt(2.0 / draws));
}

TEST_CASE("p variance relaxes to T") {
    const auto model = ring(1, 1.0, 1.0);
    DynamicsParams dyn;
    dyn.gamma = 2.0;
    dyn.temperature = 1.5;
    const double dt = 0.02;
    const int steps = static_cast<int>(20.0 / dyn.gamma / dt), draws = 50000;
    double s2 = 0;
    for (int d = 0; d < draws; ++d) {
        RandomStream rng(3, static_cast<std::uint64_t>(d));
        Integrator integ(model, dyn, dt);
        ChainState s{{0.0}, {0.0}, 0.0};
        for (int i = 0; i < steps; ++i) integ.step(s, rng);
        s2 += s.p[0] * s.p[0];
    }
    CHECK(s2 / draws == doctest::Approx(dyn.temperature).epsilon(0.02));
}

TEST_CASE("tau drive vanishes on a uniform configuration") {
    const auto model = ring(4, 1.0, 0.5);
    DynamicsParams dyn;
    dyn.mode = DriveMode::tau_driven;
    dyn.gamma = 0.0;
    dyn.tau = 0.3;
    ChainState s{{0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}, 0.0};
    RandomStream rng(1, 1);
    const auto next = step_tau_driven(s, model, dyn, 0.01, rng);
    for (double p : next.p) CHECK(p == 0.0);
    for (double q : next.q) CHECK(q == 0.0);
}

TEST_CASE("flip noise") {
    RandomStream rng(9, 0);
    ChainState s{{0.3, -0.2, 1.0, 0.5}, {1.0, -2.0, 0.5, 0.25}, 0.0};
    const auto same = apply_flip_noise(s, 0.0, 0.1, rng);
    CHECK(same.p == s.p);

    const auto model = ring(4, 1.0, 0.5);
    const double h = total_energy(s, model);
    const double eta = 0.8, dt = 0.01;
    const int steps = 25000;  // 1e5 site-steps
    std::uint64_t flips = 0;
    ChainState cur = s;
    for (int i = 0; i < steps; ++i) {
        const auto next = apply_flip_noise(cur, eta, dt, rng);
        for (std::size_t k = 0; k < 4; ++k) flips += next.p[k] != cur.p[k];
        CHECK(total_energy(next, model) == h);
        cur = next;
    }
    const double expect = 0.5 * eta * dt * 4 * steps;
    CHECK(std::abs(static_cast<double>(flips) - expect) < 3 * std::sqrt(expect));

    SUBCASE("integrator flip clock") {
        DynamicsParams dyn;
        dyn.mode = DriveMode::flip_noise;
        dyn.gamma = 0.0;
        dyn.flip_rate = 1.5;
        Integrator integ(ring(16, 1.0, 1.0), dyn, 0.01);
        RandomStream r2(4, 2);
        ChainState z = ChainState::zeros(16);
        z.p.assign(16, 1.0);
        for (int i = 0; i < 20000; ++i) integ.step(z, r2);
        const double mean = 0.5 * 1.5 * 0.01 * 16 * 20000;
        CHECK(std::abs(static_cast<double>(integ.flips_applied()) - mean) < 3 * std::sqrt(mean));
    }
}

TEST_CASE("exact harmonic sampler") {
    const std::size_t m = 8;
    const auto model = ring(m, 1.2, 0.9);
    const double T = 0.8;
    const int draws = 100000;
    const ModeBasis basis(m);
    std::vector<double> mode_energy(m, 0.0);
    double p2 = 0.0, qq1 = 0.0;
    RandomStream rng(12, 0);
    for (int d = 0; d < draws; ++d) {
        const auto s = sample_equilibrium_harmonic(model, T, rng);
        const auto Q = basis.forward(s.q);
        for (std::size_t k = 0; k < m; ++k) {
            const double sk = std::sin(std::numbers::pi * basis.wavenumber(k) / m);
            const double wk2 = model.omega * model.omega * (model.mu * model.mu + 4 * sk * sk);
            mode_energy[k] += wk2 * std::norm(Q[k]);
        }
        for (std::size_t i = 0; i < m; ++i) {
            p2 += s.p[i] * s.p[i];
            qq1 += s.q[i] * s.q[(i + 1) % m];
        }
    }
    CHECK(p2 / (draws * m) == doctest::Approx(T).epsilon(0.02));
    for (double e : mode_energy) CHECK(e / draws == doctest::Approx(T).epsilon(0.02));
    double expect = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double a = 2 * std::numbers::pi * static_cast<double>(k) / m;
        const double sk = std::sin(a / 2);
        expect += T / (model.omega * model.omega * (model.mu * model.mu + 4 * sk * sk)) * std::cos(a);
    }
    expect /= m;
    CHECK(qq1 / (draws * m) == doctest::Approx(expect).epsilon(0.02));

    try {
        sample_equilibrium_harmonic(ring(8), 1.0, rng);
        FAIL("expected pinning error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::pinning_required);
    }
    const auto s0 = sample_equilibrium_harmonic(ring(8), 1.0, rng, true);
    double sq = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        sq += s0.q[i];
        sp += s0.p[i];
    }
    CHECK(std::abs(sq) < 1e-12);
    CHECK(std::abs(sp) < 1e-12);
}

TEST_CASE("simulate: determinism and bookkeeping") {
    const auto model = ring(12, 1.0, 1.0, 0.5);
    DynamicsParams dyn;
    dyn.mode = DriveMode::tau_driven;
    dyn.gamma = 0.7;
    dyn.tau = 0.1;
    IntegrationSpec spec;
    spec.dt = 0.02;
    spec.n_steps = 3000;
    spec.burn_in_steps = 1000;
    spec.record_every = 5;
    spec.seed = 99;
    RecordPlan plan = RecordPlan::everything();
    plan.moments = {probes::q_q3(), probes::p_q_shift(1)};

    const auto a = simulate(model, dyn, spec, plan);
    const auto b = simulate(model, dyn, spec, plan);
    REQUIRE(a.samples.size() == 400);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].J == b.samples[i].J);
        CHECK(a.samples[i].h == b.samples[i].h);
        CHECK(a.samples[i].extra_moments == b.samples[i].extra_moments);
        if (i > 0) CHECK(a.samples[i].t - a.samples[i - 1].t == doctest::Approx(0.1));
        double mean = 0.0;
        for (double j : a.samples[i].j) mean += j;
        CHECK(std::abs(a.samples[i].J - mean / 12) < 1e-15);
    }
    CHECK(a.moment_index("p_q[1]") == 1);
    CHECK_THROWS_AS(a.moment_index("nope"), Error);

    SUBCASE("worker count does not change results") {
        auto job = [&](std::size_t i) {
            IntegrationSpec s = spec;
            s.trajectory_id = i;
            return simulate(model, dyn, s).current_series();
        };
        const auto serial = run_ensemble<std::vector<double>>(6, 1, job);
        const auto parallel = run_ensemble<std::vector<double>>(6, 4, job);
        CHECK(serial == parallel);
        CHECK(serial[0] != serial[1]);
    }
    SUBCASE("empty recording") {
        IntegrationSpec s = spec;
        s.n_steps = s.burn_in_steps;
        const auto e = simulate(model, dyn, s);
        CHECK(e.samples.empty());
        CHECK(e.final_state.q.size() == 12);
    }
}

TEST_CASE("independent trajectories are uncorrelated") {
    const auto model = ring(16, 1.0, 1.0);
    DynamicsParams dyn;
    dyn.mode = DriveMode::tau_driven;
    dyn.gamma = 1.0;
    dyn.tau = 0.1;
    IntegrationSpec spec;
    spec.dt = 0.02;
    spec.n_steps = 200000;
    spec.burn_in_steps = 1000;
    spec.record_every = 2;
    auto run = [&](std::uint64_t id) {
        IntegrationSpec s = spec;
        s.trajectory_id = id;
        return simulate(model, dyn, s).current_series();
    };
    const auto a = run(0), b = run(1);
    const std::size_t nb = 50, len = a.size() / nb;
    std::vector<double> ma(nb), mb(nb);
    for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t i = 0; i < len; ++i) {
            ma[k] += a[k * len + i] / len;
            mb[k] += b[k * len + i] / len;
        }
    double xa = 0, xb = 0;
    for (std::size_t k = 0; k < nb; ++k) {
        xa += ma[k] / nb;
        xb += mb[k] / nb;
    }
    double cab = 0, caa = 0, cbb = 0;
    for (std::size_t k = 0; k < nb; ++k) {
        cab += (ma[k] - xa) * (mb[k] - xb);
        caa += (ma[k] - xa) * (ma[k] - xa);
        cbb += (mb[k] - xb) * (mb[k] - xb);
    }
    CHECK(std::abs(cab / std::sqrt(caa * cbb)) < 3.0 / std::sqrt(static_cast<double>(nb)));
}

TEST_CASE("boundary-driven chain") {
    ModelParams model = ring(8, 1.0, 0.5);
    model.boundary = Boundary::open_pinned;
    DynamicsParams dyn;
    dyn.mode = DriveMode::boundary_driven;
    dyn.gamma = 1.0;
    dyn.t_left = dyn.t_right = 1.2;
    IntegrationSpec spec;
    spec.dt = 0.02;
    spec.n_steps = 1000000;
    spec.burn_in_steps = 5000;
    spec.record_every = 5;
    spec.seed = 21;
    RecordPlan plan;
    plan.kinetic = true;
    plan.bond_currents = true;

    SUBCASE("equal temperatures give equipartition") {
        const auto series = simulate(model, dyn, spec, plan);
        for (std::size_t i = 0; i < model.size; ++i) {
            std::vector<double> k;
            for (const auto& s : series.samples) k.push_back(s.kin[i]);
            const auto e = batch(k);
            CHECK(std::abs(e.mean - 1.2) < 3 * e.err);
        }
    }
    SUBCASE("two sites: heat flows from hot to cold") {
        ModelParams two = model;
        two.size = 2;
        dyn.t_left = 2.0;
        dyn.t_right = 0.5;
        const auto series = simulate(two, dyn, spec, plan);
        std::vector<double> j;
        for (const auto& s : series.samples) j.push_back(s.j[0]);
        const auto e = batch(j);
        // j_i is the energy entering site i from site i+1, so hot-left means j < 0.
        CHECK(e.mean < -3 * e.err);
    }
    SUBCASE("no bath is a closed Hamiltonian chain") {
        dyn.gamma = 0.0;
        Integrator integ(model, dyn, 0.01);
        RandomStream rng(2, 0);
        ChainState s = ChainState::zeros(8);
        s.q[3] = 0.5;
        s.p[0] = 1.0;
        const double h0 = total_energy(s, model);
        double worst = 0;
        for (int i = 0; i < 50000; ++i) {
            integ.step(s, rng);
            worst = std::max(worst, std::abs(total_energy(s, model) - h0));
        }
        CHECK(worst < 1e-4 * h0);
    }
}

TEST_CASE("divergence and validation errors") {
    const auto model = ring(4, 1.0, 1.0, 1.0);
    DynamicsParams dyn;
    IntegrationSpec spec;
    spec.dt = 0.01;
    spec.n_steps = 10;
    ChainState s = ChainState::zeros(4);
    s.q[0] = 1e110;
    try {
        simulate(model, dyn, spec, {}, s);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 1);
        CHECK(e.kind() == ErrorKind::integration_diverged);
    }

    spec.dt = 2.0 / std::sqrt(model.max_frequency_sq());
    CHECK_THROWS_WITH_AS(spec.validate(model), doctest::Contains("omega_max"), Error);

    DynamicsParams bad;
    bad.tau = 0.1;
    CHECK_THROWS_AS(bad.validate(model), Error);
    bad = {};
    bad.mode = DriveMode::boundary_driven;
    CHECK_THROWS_AS(bad.validate(model), Error);
    bad = {};
    bad.flip_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(model), Error);
    bad = {};
    bad.gamma = -1.0;
    CHECK_THROWS_AS(bad.validate(model), Error);

    CHECK(parse_drive_mode("flip-noise") == DriveMode::flip_noise);
    CHECK_FALSE(parse_drive_mode("sideways").has_value());
}
