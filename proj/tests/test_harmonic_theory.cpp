#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "nesslab/error.hpp"
#include "nesslab/harmonic_theory.hpp"

using namespace nesslab;

namespace {

constexpr double pi = std::numbers::pi;

ModelParams ring(std::size_t m, double omega, double mu) {
    ModelParams p;
    p.size = m;
    p.omega = omega;
    p.mu = mu;
    return p;
}

DynamicsParams drive(double gamma, double T, double tau) {
    DynamicsParams d;
    d.mode = DriveMode::tau_driven;
    d.gamma = gamma;
    d.temperature = T;
    d.tau = tau;
    return d;
}

// Independent oracle: the integrands are smooth and periodic, so the plain
// trapezoid rule on a uniform grid converges geometrically.
template <class F>
double periodic_trapezoid(F f, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += f(-0.5 + (i + 0.5) / n);
    return acc / n;
}

}  // namespace

TEST_CASE("mode frequency, alpha, delta") {
    const auto m = ring(16, 1.0, 1.0);
    CHECK(mode_frequency(m, 0, 16) == doctest::Approx(1.0));
    CHECK(mode_frequency(m, 8, 16) == doctest::Approx(5.0));
    CHECK(mode_frequency(m, 4, 16) == doctest::Approx(3.0));
    CHECK_THROWS_AS(mode_frequency(m, 9, 16), Error);
    CHECK_THROWS_AS(mode_frequency(m, -8, 16), Error);

    CHECK(mode_alpha(m, 0, 16) == 0.0);
    CHECK(std::abs(mode_alpha(m, 8, 16)) < 1e-15);
    for (long k = -7; k <= 7; ++k) CHECK(mode_alpha(m, -k, 16) == doctest::Approx(-mode_alpha(m, k, 16)));
    try {
        mode_alpha(ring(16, 1.0, 0.0), 0, 16);
        FAIL("expected zero-mode error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::zero_mode);
    }

    CHECK(mode_delta(m, drive(1.0, 1.0, 0.0), 3, 16) == 1.0);
    for (long k = 1; k <= 7; ++k)
        CHECK(mode_delta(m, drive(0.3, 1.0, 0.05), k, 16) ==
              doctest::Approx(mode_delta(m, drive(0.3, 1.0, 0.05), -k, 16)));

    // pick tau so that the drive ratio at k = 4 is exactly 1/2
    const double wk2 = mode_frequency(m, 4, 16), a = mode_alpha(m, 4, 16);
    const double gamma = 0.4, T = 1.3;
    const double tau = std::sqrt(0.5 * 4 * gamma * gamma * T * T / (wk2 * a * a));
    CHECK(mode_delta(m, drive(gamma, T, tau), 4, 16) == doctest::Approx(2.0));
    try {
        mode_delta(m, drive(gamma, T, tau * 1.5), 4, 16);
        FAIL("expected supercritical error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::supercritical_drive);
    }
}

TEST_CASE("stationary mode correlations") {
    const auto m = ring(32, 1.1, 0.6);
    const auto eq = stationary_mode_correlations(m, drive(0.5, 0.9, 0.0), 5, 32);
    CHECK(eq.pp == doctest::Approx(0.9));
    CHECK(eq.qq == doctest::Approx(0.9 / mode_frequency(m, 5, 32)));
    CHECK(eq.pq_imag == 0.0);

    const auto plus = stationary_mode_correlations(m, drive(0.5, 0.9, 0.1), 5, 32);
    const auto minus = stationary_mode_correlations(m, drive(0.5, 0.9, -0.1), 5, 32);
    CHECK(plus.pq_imag == doctest::Approx(-minus.pq_imag));
    CHECK(plus.pq_real == 0.0);

    SUBCASE("plug-back residuals over random subcritical parameters") {
        std::mt19937_64 gen(17);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t n = 4 + static_cast<std::size_t>(u(gen) * 60);
            const auto model = ring(n, 0.3 + 2 * u(gen), 0.1 + 2 * u(gen));
            auto d = drive(0.05 + u(gen), 0.2 + 2 * u(gen), 0.0);
            const long k = -static_cast<long>(n - 1) / 2 + static_cast<long>(u(gen) * (n - 1));
            const double wk2 = mode_frequency(model, k, n), a = mode_alpha(model, k, n);
            if (a == 0.0) continue;
            // tau at a random fraction of the critical drive
            d.tau = (2 * u(gen) - 1) * 2 * d.gamma * d.temperature / std::sqrt(wk2 * a * a) * 0.99;
            const auto c = stationary_mode_correlations(model, d, k, n);
            const double scale = 2 * d.gamma * d.temperature * c.delta_k + c.pp + std::abs(c.pq_imag);
            for (const auto& r : stationary_equation_residuals(c, model, d))
                CHECK(std::abs(r) < 1e-12 * scale);
        }
    }
}

TEST_CASE("current integral I(mu)") {
    CHECK(harmonic_current_integral(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    const double big = harmonic_current_integral(100.0) * 1e4;
    CHECK(std::abs(big - 0.5) < 1e-3);
    const double oracle = periodic_trapezoid(
        [](double x) {
            const double s = std::sin(pi * x);
            return std::pow(std::sin(2 * pi * x), 2) / (1.0 + 4 * s * s);
        },
        4000);
    CHECK(std::abs(harmonic_current_integral(1.0) - oracle) < 1e-8);
    double prev = harmonic_current_integral(0.0);
    for (double mu = 0.25; mu <= 8.0; mu += 0.25) {
        const double cur = harmonic_current_integral(mu);
        CHECK(cur < prev);
        prev = cur;
    }
    // closed form (mu^2 + 2 - mu sqrt(mu^2 + 4)) / 4 from the residue theorem
    for (double mu : {0.1, 0.5, 1.0, 2.0, 7.0}) {
        const double closed = (mu * mu + 2 - mu * std::sqrt(mu * mu + 4)) / 4;
        CHECK(harmonic_current_integral(mu) == doctest::Approx(closed).epsilon(1e-10));
    }
    CHECK_THROWS_AS(harmonic_current_integral(-1.0), Error);
}

TEST_CASE("harmonic mean current") {
    CHECK(harmonic_mean_current(1.3, 0.5, 0.7, 0.0) == 0.0);
    CHECK(harmonic_mean_current(2.0, 0.0, 0.5, 0.1) == doctest::Approx(4.0 * 0.1 / (2 * 0.5)));
    CHECK(harmonic_mean_current(1.0, 1.0, 0.4, 0.05) ==
          doctest::Approx(2 * harmonic_mean_current(1.0, 1.0, 0.8, 0.05)));
    CHECK(harmonic_mean_current(1.0, 1.0, 0.0, 0.05) == std::numeric_limits<double>::infinity());
    CHECK(harmonic_mean_current(1.0, 1.0, 0.0, -0.05) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("mode sum converges to the large-N current") {
    const auto model = ring(4096, 1.3, 0.8);
    const auto d = drive(0.5, 1.0, 1e-3);
    const double exact = harmonic_mean_current(1.3, 0.8, 0.5, 1e-3);
    CHECK(std::abs(mode_sum_current(model, d, 4096) / exact - 1.0) < 1e-3);
    // mu = 0 skips the free mode
    CHECK(mode_sum_current(ring(64, 1.0, 0.0), d, 64) > 0.0);
}

TEST_CASE("flip ring conductivity") {
    // Reference values: direct solve of the generator on quadratic observables.
    CHECK(flip_ring_conductivity(1.0, 1.0, 0.5, 0.2, 8) == doctest::Approx(0.272108843537415).epsilon(1e-12));
    CHECK(flip_ring_conductivity(1.0, 0.3, 0.5, 0.05, 16) == doctest::Approx(0.6695617872860646).epsilon(1e-12));
    CHECK(flip_ring_conductivity(2.0, 1.0, 0.5, 0.2, 8) == doctest::Approx(1.6844833171363784).epsilon(1e-12));
    for (std::size_t n : {8u, 64u, 256u})
        CHECK(flip_ring_conductivity(1.0, 0.0, 0.5, 0.1, n) ==
              doctest::Approx(0.5 * (1.0 - 2.0 / n) / 0.6).epsilon(1e-12));
    const double limit = harmonic_current_integral(0.7) / 0.5;
    CHECK(std::abs(flip_ring_conductivity(1.0, 0.7, 0.5, 0.0, 4096) / limit - 1.0) < 1e-6);
    CHECK_THROWS_AS(flip_ring_conductivity(1.0, 0.0, 0.0, 0.0, 8), Error);
    CHECK_THROWS_AS(flip_ring_conductivity(1.0, 0.0, 0.5, 0.0, 2), Error);
}

TEST_CASE("sigma_m") {
    for (double mu : {0.0, 0.7, 3.0})
        CHECK(sigma_m_integral(1.2, mu, 0.3, 1) ==
              doctest::Approx(1.44 * 0.3 * harmonic_current_integral(mu)).epsilon(1e-10));
    CHECK(sigma_m_integral(1.0, 1.0, 0.0, 3) == 0.0);
    const double oracle = periodic_trapezoid(
        [](double x) {
            const double s = std::sin(pi * x);
            return std::sin(2 * pi * x) * std::sin(4 * pi * x) / (100.0 + 4 * s * s);
        },
        4000);
    CHECK(std::abs(sigma_m_integral(1.0, 10.0, 1.0, 2) - oracle) < 1e-8);
    CHECK(std::abs(sigma_m_integral(1.0, 10.0, 1.0, 2)) < std::abs(sigma_m_integral(1.0, 10.0, 1.0, 1)));
    CHECK_THROWS_AS(sigma_m_integral(1.0, 1.0, 1.0, 0), Error);
}

TEST_CASE("conductivity models") {
    ConductivityModel flip{ConductivityKind::flip_noise, 1.5, 0.0, 0.5};
    CHECK(conductivity(flip, 1.0) == doctest::Approx(2.25 / (2 * 0.5)));
    CHECK(conductivity(flip, 3.0) == conductivity(flip, 1.0));

    ConductivityModel closure{ConductivityKind::closure, 1.0, 1.0, 0.0, 1.0};
    CHECK(conductivity(closure, 1.0) == 0.275637);
    ConductivityModel c2{ConductivityKind::closure, 1.3, 2.1, 0.0, 0.7};
    CHECK(conductivity(c2, 1.7) ==
          doctest::Approx(0.275637 * std::pow(1.3, 9) * std::pow(2.1, 3) / (0.49 * 1.7 * 1.7)));
    CHECK(conductivity(c2, 0.5) * 0.25 == doctest::Approx(conductivity(c2, 2.0) * 4.0));
    closure.lambda = 0.0;
    CHECK_THROWS_AS(conductivity(closure, 1.0), Error);

    ConductivityModel harm{ConductivityKind::harmonic_infinite};
    CHECK(std::isinf(conductivity(harm, 1.0)));
    CHECK_THROWS_AS(solve_temperature_profile(harm, 1.0, 2.0), Error);
}

TEST_CASE("temperature profiles") {
    for (double a : {-3.0, -2.0, -1.0, -0.5, 0.0, 1.0, 2.5}) {
        const auto flat = solve_temperature_profile(PowerLawConductivity{1.3, a}, 1.4, 1.4);
        for (double x : {0.0, 0.3, 1.0}) CHECK(flat(x) == doctest::Approx(1.4).epsilon(1e-14));

        const PowerLawConductivity kappa{0.8, a};
        const auto prof = solve_temperature_profile(kappa, 0.7, 1.9);
        CHECK(prof(0.0) == 0.7);
        CHECK(prof(1.0) == 1.9);
        // kappa(T) T' by central differences on a 1e3 grid
        const double flux = prof.scaled_current();
        const int n = 1000;
        const double h = 1e-5;
        double worst = 0.0;
        for (int i = 1; i < n; ++i) {
            const double x = static_cast<double>(i) / n;
            worst = std::max(worst, std::abs(kappa(prof(x)) * prof.gradient(x) - flux));
            const double fd = (prof(x + h) - prof(x - h)) / (2 * h);
            CHECK(fd == doctest::Approx(prof.gradient(x)).epsilon(1e-7));
        }
        CHECK(worst < 1e-10 * std::abs(flux));
    }
    const auto lin = solve_temperature_profile(PowerLawConductivity{1.0, 0.0}, 1.0, 2.0);
    for (double x : {0.1, 0.5, 0.9}) CHECK(lin(x) == doctest::Approx(1.0 + x).epsilon(1e-14));
    const auto inv = solve_temperature_profile(PowerLawConductivity{1.0, -2.0}, 1.0, 2.0);
    CHECK(inv(0.5) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(inv.scaled_current() == doctest::Approx(0.5));
    CHECK(solve_temperature_profile(PowerLawConductivity{1.0, 0.0}, 2.0, 1.0).scaled_current() < 0.0);
    CHECK_THROWS_AS(solve_temperature_profile(PowerLawConductivity{1.0, 0.0}, 0.0, 1.0), Error);
}
