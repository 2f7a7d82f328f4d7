#include "nesslab/harmonic_theory.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nesslab/error.hpp"

namespace nesslab {

namespace {

constexpr double pi = std::numbers::pi;

void check_wavenumber(long k, std::size_t n) {
    const auto nn = static_cast<long>(n);
    require(n >= 1 && 2 * k > -nn && 2 * k <= nn, ErrorKind::invalid_input,
            "wavenumber " + std::to_string(k) + " outside (-N/2, N/2] for N = " +
                std::to_string(n));
}

double phase(long k, std::size_t n) {
    return 2.0 * pi * static_cast<double>(k) / static_cast<double>(n);
}

template <class F>
double integrate(F f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 30, 1e-12);
}

void require_harmonic(const ModelParams& model, const DynamicsParams& dyn) {
    require(model.lambda == 0.0 && model.far_couplings.empty(),
            ErrorKind::unsupported_configuration,
            "exact mode correlations need lambda = 0 and nearest-neighbour coupling");
    require(dyn.gamma > 0.0, ErrorKind::invalid_input, "exact mode correlations need gamma > 0");
    require(dyn.temperature > 0.0, ErrorKind::invalid_input, "temperature must be > 0");
}

}  // namespace

double mode_frequency(const ModelParams& model, long k, std::size_t n) {
    check_wavenumber(k, n);
    const double s = std::sin(0.5 * phase(k, n));
    return model.omega * model.omega * (model.mu * model.mu + 4.0 * s * s);
}

double mode_alpha(const ModelParams& model, long k, std::size_t n) {
    const double wk2 = mode_frequency(model, k, n);
    require(wk2 > 0.0, ErrorKind::zero_mode, "alpha_k undefined for the free k = 0 mode");
    return 2.0 * model.omega * model.omega * std::sin(phase(k, n)) / wk2;
}

double mode_delta(const ModelParams& model, const DynamicsParams& dyn, long k, std::size_t n) {
    const double wk2 = mode_frequency(model, k, n);
    if (dyn.tau == 0.0) return 1.0;
    const double a = mode_alpha(model, k, n);
    require(dyn.gamma > 0.0 && dyn.temperature > 0.0, ErrorKind::supercritical_drive,
            "tau != 0 needs gamma > 0 and T > 0 for stationary moments");
    const double g = wk2 * a * a * dyn.tau * dyn.tau /
                     (4.0 * dyn.gamma * dyn.gamma * dyn.temperature * dyn.temperature);
    require(g < 1.0, ErrorKind::supercritical_drive,
            "drive ratio " + std::to_string(g) + " >= 1 at k = " + std::to_string(k) +
                ": no stationary second moments");
    return 1.0 / (1.0 - g);
}

ModeCorrelations stationary_mode_correlations(const ModelParams& model, const DynamicsParams& dyn,
                                              long k, std::size_t n) {
    require_harmonic(model, dyn);
    ModeCorrelations c;
    c.k = k;
    c.omega_k_sq = mode_frequency(model, k, n);
    c.alpha_k = mode_alpha(model, k, n);
    c.delta_k = mode_delta(model, dyn, k, n);
    c.pp = c.delta_k * dyn.temperature;
    c.qq = c.pp / c.omega_k_sq;
    c.pq_imag = c.delta_k * c.alpha_k * dyn.tau / (2.0 * dyn.gamma);
    return c;
}

std::array<std::complex<double>, 4> stationary_equation_residuals(const ModeCorrelations& c,
                                                                  const ModelParams&,
                                                                  const DynamicsParams& dyn) {
    using namespace std::complex_literals;
    const std::complex<double> pq = c.pq();  // <P_k Q_{-k}>
    const std::complex<double> qp = std::conj(pq);  // <Q_k P_{-k}>
    const double drive = c.omega_k_sq * c.alpha_k * dyn.tau / dyn.temperature;
    return {pq + qp,
            c.pp - c.omega_k_sq * c.qq,
            2.0 * dyn.gamma * c.pp + 1i * drive * pq - 2.0 * dyn.gamma * dyn.temperature,
            2.0 * dyn.gamma * pq - 1i * drive * c.qq};
}

double mode_sum_current(const ModelParams& model, const DynamicsParams& dyn, std::size_t n) {
    require_harmonic(model, dyn);
    double acc = 0.0;
    const auto nn = static_cast<long>(n);
    for (long k = -(nn - 1) / 2; 2 * k <= nn; ++k) {
        const double s = std::sin(phase(k, n));
        if (k == 0 || 2 * k == nn) continue;
        acc += s * stationary_mode_correlations(model, dyn, k, n).pq_imag;
    }
    return model.omega * model.omega * acc / static_cast<double>(n);
}

double harmonic_current_integral(double mu) {
    require(std::isfinite(mu) && mu >= 0.0, ErrorKind::invalid_input, "mu must be >= 0");
    const double mu2 = mu * mu;
    // sin^2(2 pi x) = 4 s^2 c^2 with s = sin(pi x), c = cos(pi x); even in x.
    auto f = [mu2](double x) {
        const double s = std::sin(pi * x), c = std::cos(pi * x);
        const double s2 = s * s;
        if (mu2 == 0.0) return c * c;
        return 4.0 * s2 * c * c / (mu2 + 4.0 * s2);
    };
    return 2.0 * integrate(f, 0.0, 0.5);
}

double harmonic_mean_current(double omega, double mu, double gamma, double tau) {
    require(omega > 0.0 && gamma >= 0.0, ErrorKind::invalid_input,
            "harmonic current needs omega > 0 and gamma >= 0");
    if (tau == 0.0) return 0.0;
    if (gamma == 0.0) return std::copysign(std::numeric_limits<double>::infinity(), tau);
    return omega * omega * tau / gamma * harmonic_current_integral(mu);
}

double flip_ring_conductivity(double omega, double mu, double eta, double gamma, std::size_t n) {
    require(omega > 0.0 && mu >= 0.0 && eta >= 0.0 && gamma >= 0.0 && eta + gamma > 0.0,
            ErrorKind::invalid_input,
            "flip ring conductivity needs omega > 0, mu >= 0, eta, gamma >= 0 and eta + gamma > 0");
    require(n >= 3, ErrorKind::invalid_input, "flip ring conductivity needs n >= 3");
    const double w2 = omega * omega, mu2 = mu * mu;
    double acc = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double th = phase(static_cast<long>(k), n);
        const double s = std::sin(0.5 * th), sn = std::sin(th);
        acc += w2 * w2 * sn * sn / (mu2 + 4.0 * w2 * s * s);
    }
    return acc / static_cast<double>(n) / (eta + gamma);
}

double sigma_m_integral(double omega, double mu, double tau, int m) {
    require(m >= 1, ErrorKind::invalid_input, "sigma_m needs m >= 1");
    require(mu >= 0.0, ErrorKind::invalid_input, "mu must be >= 0");
    if (tau == 0.0) return 0.0;
    const double mu2 = mu * mu;
    const double md = m;
    auto f = [mu2, md](double x) {
        const double s = std::sin(pi * x);
        if (mu2 == 0.0) {
            // sin(2 pi x) / (4 sin^2(pi x)) = cos(pi x) / (2 sin(pi x))
            if (std::abs(s) < 1e-300) return md;
            return std::cos(pi * x) * std::sin(2.0 * pi * md * x) / (2.0 * s);
        }
        return std::sin(2.0 * pi * x) * std::sin(2.0 * pi * md * x) / (mu2 + 4.0 * s * s);
    };
    // The integrand is even; split at the zeros of the fast factor.
    double acc = 0.0;
    const int pieces = 2 * m;
    for (int i = 0; i < pieces; ++i)
        acc += integrate(f, 0.5 * i / pieces, 0.5 * (i + 1) / pieces);
    return omega * omega * tau * 2.0 * acc;
}

void ConductivityModel::validate() const {
    require(omega > 0.0 && mu >= 0.0, ErrorKind::invalid_input,
            "conductivity: omega > 0 and mu >= 0 required");
    switch (kind) {
        case ConductivityKind::harmonic_infinite: break;
        case ConductivityKind::flip_noise:
            require(eta > 0.0, ErrorKind::invalid_input, "flip-noise conductivity needs eta > 0");
            break;
        case ConductivityKind::closure:
            require(lambda > 0.0, ErrorKind::invalid_input,
                    "closure conductivity diverges at lambda = 0");
            require(mu > 0.0, ErrorKind::invalid_input, "closure conductivity needs mu > 0");
            break;
    }
}

double ConductivityModel::operator()(double temperature) const {
    validate();
    require(temperature > 0.0, ErrorKind::invalid_input, "temperature must be > 0");
    switch (kind) {
        case ConductivityKind::harmonic_infinite: return std::numeric_limits<double>::infinity();
        case ConductivityKind::flip_noise:
            return omega * omega / eta * harmonic_current_integral(mu);
        case ConductivityKind::closure:
            return alpha * std::pow(omega, 9) * mu * mu * mu /
                   (lambda * lambda * temperature * temperature);
    }
    return 0.0;
}

double conductivity(const ConductivityModel& model, double temperature) {
    return model(temperature);
}

double PowerLawConductivity::operator()(double t) const { return c * std::pow(t, a); }

double PowerLawConductivity::potential(double t) const {
    if (a == -1.0) return c * std::log(t);
    return c * std::pow(t, a + 1.0) / (a + 1.0);
}

PowerLawConductivity as_power_law(const ConductivityModel& model) {
    model.validate();
    switch (model.kind) {
        case ConductivityKind::flip_noise: return {model(1.0), 0.0};
        case ConductivityKind::closure: return {model(1.0), -2.0};
        case ConductivityKind::harmonic_infinite: break;
    }
    fail(ErrorKind::unsupported_configuration,
         "the harmonic chain has infinite conductivity and no Fourier profile");
}

double TemperatureProfile::operator()(double x) const {
    if (x <= 0.0) return t_left;
    if (x >= 1.0) return t_right;
    const double a = kappa.a;
    if (a == -1.0) return t_left * std::pow(t_right / t_left, x);
    const double b = a + 1.0;
    const double l = std::pow(t_left, b), r = std::pow(t_right, b);
    return std::pow(l + x * (r - l), 1.0 / b);
}

double TemperatureProfile::gradient(double x) const {
    // Phi(T(x)) is linear, so kappa(T) T' = Phi(T_R) - Phi(T_L).
    return scaled_current() / kappa((*this)(x));
}

double TemperatureProfile::scaled_current() const {
    return kappa.potential(t_right) - kappa.potential(t_left);
}

TemperatureProfile solve_temperature_profile(const PowerLawConductivity& kappa, double t_left,
                                             double t_right) {
    require(t_left > 0.0 && t_right > 0.0, ErrorKind::invalid_input,
            "boundary temperatures must be > 0");
    require(kappa.c > 0.0 && std::isfinite(kappa.a), ErrorKind::invalid_input,
            "power-law conductivity needs c > 0");
    return {kappa, t_left, t_right};
}

TemperatureProfile solve_temperature_profile(const ConductivityModel& model, double t_left,
                                             double t_right) {
    return solve_temperature_profile(as_power_law(model), t_left, t_right);
}

}  // namespace nesslab
