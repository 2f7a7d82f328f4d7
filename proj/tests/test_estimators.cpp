#include <doctest.h>

#include <cmath>
#include <random>

#include "nesslab/error.hpp"
#include "nesslab/estimators.hpp"
#include "nesslab/harmonic_theory.hpp"

using namespace nesslab;

namespace {

ModelParams ring(std::size_t m, double omega = 1.0, double mu = 1.0, double lambda = 0.0) {
    ModelParams p;
    p.size = m;
    p.omega = omega;
    p.mu = mu;
    p.lambda = lambda;
    return p;
}

ObservableSeries constant_current_series(std::size_t m, double J, std::size_t n, double spacing) {
    ObservableSeries s;
    s.model = ring(m);
    for (std::size_t i = 0; i < n; ++i) {
        ObservableSample smp;
        smp.t = static_cast<double>(i) * spacing;
        smp.J = J;
        s.samples.push_back(smp);
    }
    return s;
}

template <class Gen>
std::vector<double> ar1(std::size_t n, double a, Gen& gen) {
    std::normal_distribution<double> nd;
    std::vector<double> x(n);
    double v = nd(gen);
    const double s = std::sqrt(1 - a * a);
    for (auto& e : x) {
        e = v;
        v = a * v + s * nd(gen);
    }
    return x;
}

}  // namespace

TEST_CASE("batch means basics") {
    const std::vector<double> c(100, 2.5);
    const auto e = batch_means(c);
    CHECK(e.mean == 2.5);
    CHECK(e.error == 0.0);
    CHECK(e.batches == 20);
    CHECK(e.method == "batch-means");

    std::vector<double> alt(400);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
    const auto a = batch_means(alt);
    CHECK(a.mean == doctest::Approx(0.0));
    CHECK(a.error < 1.0 / std::sqrt(400.0));

    CHECK_THROWS_AS(batch_means(std::vector<double>{1.0}), Error);
    try {
        batch_means(std::vector<double>{});
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::insufficient_data);
    }
    const auto small = batch_means(std::vector<double>{1.0, 3.0});
    CHECK(small.mean == 2.0);
    CHECK(small.batches == 2);
}

TEST_CASE("batch means coverage on iid normals") {
    std::mt19937_64 gen(31);
    std::normal_distribution<double> nd(1.5, 2.0);
    int misses = 0;
    const int seeds = 1000;
    for (int s = 0; s < seeds; ++s) {
        std::vector<double> x(2000);
        for (auto& v : x) v = nd(gen);
        const auto e = batch_means(x);
        CHECK(e.n_effective <= 2000.0);
        if (!e.consistent_with(1.5)) ++misses;
    }
    CHECK(misses <= seeds / 100);
}

TEST_CASE("batch means on autocorrelated data") {
    std::mt19937_64 gen(8);
    const double a = 0.95;
    int misses = 0;
    double n_eff = 0;
    for (int s = 0; s < 200; ++s) {
        const auto x = ar1(40000, a, gen);
        const auto e = batch_means(x);
        n_eff += e.n_effective / 200;
        if (!e.consistent_with(0.0)) ++misses;
    }
    CHECK(misses <= 4);
    // integrated autocorrelation time (1 + a)/(1 - a) = 39
    CHECK(n_eff == doctest::Approx(40000.0 / 39.0).epsilon(0.2));

    std::vector<std::vector<double>> runs;
    for (int r = 0; r < 3; ++r) runs.push_back(ar1(9000, 0.5, gen));
    const auto pooled = batch_means(runs, default_batches);
    CHECK(pooled.batches == 21);
    CHECK(pooled.n_raw == 3 * 7 * (9000 / 7));

    // sqrt(27000) = 164 batches, spread as 55 per run.
    CHECK(resolve_batches(auto_batches, 27000) == 164);
    CHECK(resolve_batches(auto_batches, 100) == default_batches);
    CHECK(resolve_batches(7, 27000) == 7);
    CHECK(batch_means(runs).batches == 165);
}

TEST_CASE("zero-vector test") {
    std::mt19937_64 gen(12);
    std::normal_distribution<double> nd;
    auto make = [&](double shift) {
        std::vector<std::vector<double>> rows;
        for (int b = 0; b < 80; ++b) {
            const double common = nd(gen);
            std::vector<double> r;
            for (int j = 0; j < 5; ++j) r.push_back(common + 0.1 * nd(gen) + (j == 2 ? shift : 0.0));
            rows.push_back(r);
        }
        return rows;
    };
    const auto null = zero_vector_test(make(0.0));
    CHECK(null.full_covariance);
    CHECK(null.p_value > 0.01);
    // a shift that is tiny next to the common noise but large next to the
    // independent noise is only visible through the covariance
    CHECK(zero_vector_test(make(0.1)).p_value < 1e-4);
}

TEST_CASE("entropy production") {
    const auto s = constant_current_series(4, 0.5, 11, 0.1);
    DynamicsParams dyn;
    dyn.mode = DriveMode::tau_driven;
    dyn.tau = 0.1;
    dyn.temperature = 1.0;
    const auto rec = entropy_production(s, dyn);
    for (const auto& r : rec) {
        CHECK(r.sigma == doctest::Approx(0.2));
        CHECK(r.W == doctest::Approx(0.2 * r.t));
        if (r.t > 0) CHECK(r.sigma_bar * r.t == doctest::Approx(r.W));
    }
    const auto windows = window_averages(rec, 0.5);
    REQUIRE(windows.size() == 2);
    CHECK(windows[0] == doctest::Approx(0.2));

    dyn.tau = 0.0;
    for (const auto& r : entropy_production(s, dyn)) CHECK(r.sigma == 0.0);
}

TEST_CASE("rate function symmetry on synthetic Gaussians") {
    std::mt19937_64 gen(5);
    const double t = 20.0, m = 0.1;
    // Gaussian window averages obey the symmetry exactly when var = 2 m / t.
    std::normal_distribution<double> nd(m, std::sqrt(2 * m / t));
    std::vector<double> w(200000);
    for (auto& v : w) v = nd(gen);
    const auto est = rate_function_symmetry(w, t);
    CHECK(est.symmetry_slope == doctest::Approx(1.0).epsilon(0.05));
    CHECK(est.bins.size() == 40);
    CHECK(est.bins[19] == doctest::Approx(-est.bins[20]));
    CHECK(est.pairs_used > 3);

    std::normal_distribution<double> eq(0.0, 0.3);
    for (auto& v : w) v = eq(gen);
    const auto sym = rate_function_symmetry(w, t);
    CHECK(std::abs(sym.symmetry_slope) < 3 * sym.slope_stderr + 1e-3);

    std::vector<double> positive(1000);
    for (std::size_t i = 0; i < positive.size(); ++i) positive[i] = 1.0 + 0.001 * static_cast<double>(i);
    try {
        rate_function_symmetry(positive, t);
        FAIL("expected insufficient negative events");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::insufficient_negative_events);
    }
}

TEST_CASE("Green-Kubo on an exponentially correlated signal") {
    std::mt19937_64 gen(19);
    const double dt = 0.1, tc = 2.0;
    const double a = std::exp(-dt / tc);
    std::vector<std::vector<double>> runs;
    for (int r = 0; r < 4; ++r) runs.push_back(ar1(200000, a, gen));
    GreenKuboPolicy policy;
    policy.max_lag_time = 30.0;
    policy.sustain_time = 5.0;
    const auto gk = green_kubo(runs, dt, 8, 2.0, policy);
    CHECK_FALSE(gk.truncated);
    CHECK(gk.correlation[0] == doctest::Approx(1.0).epsilon(0.03));
    const double expect = 8.0 / 4.0 * tc;
    CHECK(std::abs(gk.kappa.mean - expect) < 4 * gk.kappa.error + 0.05 * expect);
    CHECK(gk.running.size() == gk.lag.size());

    // a conserved current never decays: the integral keeps growing
    std::vector<std::vector<double>> flat;
    std::normal_distribution<double> nd;
    for (int r = 0; r < 20; ++r) flat.push_back(std::vector<double>(5000, nd(gen)));
    const auto g2 = green_kubo(flat, dt, 8, 1.0, {});
    CHECK(g2.truncated);
    CHECK(g2.running.back() > 1.9 * g2.running[g2.running.size() / 2]);
}

TEST_CASE("linear response fit") {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    const std::vector<double> taus{-0.02, -0.01, 0.01, 0.02};
    const double kappa = 0.7;
    std::vector<std::vector<std::vector<double>>> cur(4, std::vector<std::vector<double>>(2));
    for (int r = 0; r < 2; ++r) {
        std::vector<double> common(20000);
        for (auto& v : common) v = nd(gen);
        for (std::size_t g = 0; g < 4; ++g)
            for (std::size_t i = 0; i < common.size(); ++i)
                cur[g][static_cast<std::size_t>(r)].push_back(kappa * taus[g] + 0.05 * common[i] +
                                                              0.001 * nd(gen));
    }
    const auto fit = linear_response_fit(taus, cur);
    CHECK(fit.slope.consistent_with(kappa, 4.0));
    CHECK(fit.slope.error < 0.05);
    CHECK(fit.slope_significant);
    CHECK_FALSE(fit.nonlinear);

    // negating the grid and the data leaves the slope unchanged
    std::vector<double> neg;
    for (double t : taus) neg.push_back(-t);
    auto rev = cur;
    for (auto& g : rev)
        for (auto& r : g)
            for (auto& v : r) v = -v;
    const auto fit2 = linear_response_fit(neg, rev);
    CHECK(fit2.slope.mean == doctest::Approx(fit.slope.mean));

    auto quad = cur;
    for (std::size_t g = 0; g < 4; ++g)
        for (auto& r : quad[g])
            for (auto& v : r) v += 50.0 * taus[g] * taus[g];
    CHECK(linear_response_fit(taus, quad).nonlinear);
}

TEST_CASE("current balance and Jhat on simulated chains") {
    DynamicsParams dyn;
    dyn.mode = DriveMode::tau_driven;
    dyn.gamma = 1.0;
    dyn.tau = 0.2;
    IntegrationSpec spec;
    spec.dt = 0.02;
    spec.n_steps = 400000;
    spec.burn_in_steps = 2000;
    spec.record_every = 5;
    RecordPlan plan;
    plan.moments = balance_probes();
    for (std::ptrdiff_t l : {0, 1, 2}) plan.moments.push_back(probes::p_q_shift(l));

    SUBCASE("harmonic") {
        const auto series = simulate(ring(16), dyn, spec, plan);
        std::span<const ObservableSeries> ens(&series, 1);
        CHECK(current_balance_residual(ens).consistent_with(0.0));
        CHECK(jhat_current_gap(ens).consistent_with(0.0));
        const std::vector<std::ptrdiff_t> ls{0, 1};
        const auto jh = jhat_spectrum(ens, ls);
        CHECK(jh[0].value.consistent_with(0.0));
        const auto J = stationary_average(series, [](const ObservableSample& s) { return s.J; });
        CHECK(std::abs(jh[1].value.mean - J.mean) < 3 * std::hypot(jh[1].value.error, J.error));
        // finite ring: the exact mode sum is the reference
        CHECK(J.consistent_with(mode_sum_current(ring(16), dyn, 16)));
    }
    SUBCASE("anharmonic") {
        const auto series = simulate(ring(16, 1.0, 1.0, 1.0), dyn, spec, plan);
        std::span<const ObservableSeries> ens(&series, 1);
        CHECK(current_balance_residual(ens).consistent_with(0.0));
    }
    SUBCASE("equilibrium Jhat vanishes") {
        DynamicsParams eq;
        eq.gamma = 1.0;
        const auto series = simulate(ring(16), eq, spec, plan);
        std::span<const ObservableSeries> ens(&series, 1);
        const std::vector<std::ptrdiff_t> ls{0, 1, 2};
        for (const auto& j : jhat_spectrum(ens, ls)) CHECK(j.value.consistent_with(0.0));
    }
    SUBCASE("missing moments") {
        const auto bare = simulate(ring(8), dyn, [&] {
            IntegrationSpec s = spec;
            s.n_steps = 5000;
            return s;
        }());
        std::span<const ObservableSeries> ens(&bare, 1);
        try {
            current_balance_residual(ens);
            FAIL("expected missing moments");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::missing_moments);
        }
    }
}

TEST_CASE("quartic term vanishes under a Gaussian translation-invariant law") {
    const auto model = ring(12, 1.0, 0.8);
    RandomStream rng(44, 0);
    ObservableSeries s;
    s.model = model;
    s.model.lambda = 1.0;
    s.moment_names = {"q_q3", "q3_q"};
    for (int d = 0; d < 40000; ++d) {
        const auto st = sample_equilibrium_harmonic(model, 1.0, rng);
        ObservableSample smp;
        smp.extra_moments = {mean_q_q3(st), mean_q3_q(st)};
        s.samples.push_back(smp);
    }
    CHECK(quartic_balance_term(std::span<const ObservableSeries>(&s, 1)).consistent_with(0.0));
}

TEST_CASE("profiles of an equilibrium open chain") {
    ModelParams model = ring(6, 1.0, 0.5);
    model.boundary = Boundary::open_pinned;
    DynamicsParams dyn;
    dyn.gamma = 1.0;
    dyn.temperature = 0.8;
    IntegrationSpec spec;
    spec.dt = 0.02;
    spec.n_steps = 1000000;
    spec.burn_in_steps = 5000;
    spec.record_every = 5;
    RecordPlan plan;
    plan.kinetic = true;
    plan.bond_currents = true;
    const auto series = simulate(model, dyn, spec, plan);
    std::span<const ObservableSeries> ens(&series, 1);
    const auto temp = temperature_profile_estimate(ens);
    REQUIRE(temp.sites.size() == 6);
    for (const auto& e : temp.sites) CHECK(e.consistent_with(0.8));
    CHECK(temp.shape_test.p_value > 0.01);
    const auto cur = current_profile_estimate(ens);
    REQUIRE(cur.sites.size() == 5);
    for (const auto& e : cur.sites) CHECK(e.consistent_with(0.0));
    CHECK(cur.shape_test.p_value > 0.01);
}

TEST_CASE("action functional") {
    ModelParams model = ring(6, 1.0, 0.5);
    model.boundary = Boundary::open_pinned;
    DynamicsParams dyn;
    dyn.mode = DriveMode::boundary_driven;
    dyn.gamma = 1.0;
    dyn.t_left = 1.25;
    dyn.t_right = 0.75;
    IntegrationSpec spec;
    spec.dt = 1e-4;
    spec.burn_in_steps = 20000;
    spec.n_steps = spec.burn_in_steps + 10000;
    const auto path = record_action_path(model, dyn, spec);
    REQUIRE(path.segment_dt.size() == 10000);

    std::vector<double> K{1.25, 0.4, 2.0, 1.1, 3.0, 0.75};
    const auto rep = action_functional_check(path, K);
    CHECK(rep.residual < 1e-6 * std::abs(rep.R_global) + 1e-8);

    const auto back = action_functional_check(path.reversed(), K);
    CHECK(back.R_global == doctest::Approx(-rep.R_global).epsilon(1e-12));
    CHECK(back.R_local == doctest::Approx(-rep.R_local).epsilon(1e-12));

    K.back() = 0.7;
    try {
        action_functional_check(path, K);
        FAIL("expected invalid profile");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_profile);
    }
    CHECK_THROWS_AS(action_functional_check(path, std::vector<double>{1.25, 0.75}), Error);

    SUBCASE("constant K collapses both forms") {
        dyn.t_left = dyn.t_right = 0.9;
        const auto p = record_action_path(model, dyn, spec);
        const std::vector<double> flat(6, 0.9);
        const auto r = action_functional_check(p, flat);
        const auto I = p.current_integrals();
        double dh = 0.0;
        for (std::size_t i = 0; i < 6; ++i)
            if (i == 0 || i == 5) dh += p.h_final[i] - p.h_initial[i];
        CHECK(r.R_global == doctest::Approx((I.front() - I.back() - dh) / 0.9));
        CHECK(r.residual < 1e-6 * std::abs(r.R_global) + 1e-8);
    }
}
