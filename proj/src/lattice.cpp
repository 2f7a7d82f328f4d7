#include "nesslab/lattice.hpp"

#include <cmath>
#include <string>

#include "nesslab/error.hpp"

namespace nesslab {

namespace {

std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
    const auto m = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
}

}  // namespace

Coupling ModelParams::coupling(std::size_t k) const {
    if (k == 1) return {omega * omega, 0.0};
    if (k >= 2 && k - 2 < far_couplings.size()) return far_couplings[k - 2];
    return {};
}

void ModelParams::validate() const {
    std::string problems;
    auto check = [&](bool ok, const char* msg) {
        if (!ok) {
            if (!problems.empty()) problems += "; ";
            problems += msg;
        }
    };
    // A one-site ring is allowed; its self-bond contributes nothing.
    check(size >= (periodic() ? 1u : 2u), "size too small for the boundary type");
    check(std::isfinite(omega) && omega > 0.0, "omega must be > 0");
    check(std::isfinite(mu) && mu >= 0.0, "mu must be >= 0");
    check(std::isfinite(lambda) && lambda >= 0.0, "lambda must be >= 0");
    if (!problems.empty()) fail(ErrorKind::invalid_input, "model: " + problems);
    require(periodic() || far_couplings.empty(), ErrorKind::unsupported_configuration,
            "model: couplings beyond nearest neighbour need a periodic chain");
}

void check_state(const ChainState& state, const ModelParams& model) {
    require(state.q.size() == model.size && state.p.size() == model.size,
            ErrorKind::invalid_input,
            "state dimension " + std::to_string(state.q.size()) + "/" +
                std::to_string(state.p.size()) + " does not match model size " +
                std::to_string(model.size));
}

double total_energy(const ChainState& s, const ModelParams& model) {
    check_state(s, model);
    const std::size_t n = model.size;
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e += 0.5 * s.p[i] * s.p[i] + model.on_site_potential(s.q[i]);
    if (model.periodic()) {
        for (std::size_t k = 1; k <= model.interaction_range(); ++k) {
            const Coupling u = model.coupling(k);
            for (std::size_t i = 0; i < n; ++i) e += u.potential(s.q[i] - s.q[wrap(i + k, n)]);
        }
    } else {
        const Coupling u = model.coupling(1);
        for (std::size_t i = 0; i + 1 < n; ++i) e += u.potential(s.q[i + 1] - s.q[i]);
        e += u.potential(s.q[0]) + u.potential(s.q[n - 1]);
    }
    return e;
}

double local_energy(const ChainState& s, const ModelParams& model, std::size_t i) {
    check_state(s, model);
    const std::size_t n = model.size;
    require(i < n, ErrorKind::invalid_input, "site index " + std::to_string(i) + " out of range");
    double e = 0.5 * s.p[i] * s.p[i] + model.on_site_potential(s.q[i]);
    if (model.periodic()) {
        const auto ii = static_cast<std::ptrdiff_t>(i);
        for (std::size_t k = 1; k <= model.interaction_range(); ++k) {
            const Coupling u = model.coupling(k);
            const auto kk = static_cast<std::ptrdiff_t>(k);
            e += 0.5 * (u.potential(s.q[i] - s.q[wrap(ii + kk, n)]) +
                        u.potential(s.q[i] - s.q[wrap(ii - kk, n)]));
        }
    } else {
        const Coupling u = model.coupling(1);
        if (i + 1 < n) e += 0.5 * u.potential(s.q[i + 1] - s.q[i]);
        if (i > 0) e += 0.5 * u.potential(s.q[i] - s.q[i - 1]);
        if (i == 0 || i == n - 1) e += u.potential(s.q[i]);
    }
    return e;
}

std::vector<double> local_energies(const ChainState& s, const ModelParams& model) {
    std::vector<double> h(model.size);
    for (std::size_t i = 0; i < model.size; ++i) h[i] = local_energy(s, model, i);
    return h;
}

double bond_current(const ChainState& s, const ModelParams& model, std::size_t i) {
    check_state(s, model);
    const std::size_t n = model.size;
    require(i < model.bond_count(), ErrorKind::invalid_input,
            "bond index " + std::to_string(i) + " out of range");
    if (!model.periodic()) {
        const Coupling u = model.coupling(1);
        return 0.5 * u.force(s.q[i] - s.q[i + 1]) * (s.p[i] + s.p[i + 1]);
    }
    double j = 0.0;
    for (std::size_t k = 1; k <= model.interaction_range(); ++k) {
        const std::size_t ik = wrap(static_cast<std::ptrdiff_t>(i + k), n);
        j += 0.5 * (s.p[i] + s.p[ik]) * model.coupling(k).force(s.q[i] - s.q[ik]);
    }
    return j;
}

std::vector<double> bond_currents(const ChainState& s, const ModelParams& model) {
    std::vector<double> j(model.bond_count());
    for (std::size_t i = 0; i < j.size(); ++i) j[i] = bond_current(s, model, i);
    return j;
}

double mean_current(const ChainState& s, const ModelParams& model) {
    const auto j = bond_currents(s, model);
    double sum = 0.0;
    for (double v : j) sum += v;
    return j.empty() ? 0.0 : sum / static_cast<double>(j.size());
}

void compute_forces(std::span<const double> q, const ModelParams& model, double drive,
                    std::span<double> f) {
    const std::size_t n = model.size;
    const double w2 = model.omega * model.omega;
    const double pin = w2 * model.mu * model.mu;
    const double lam = model.lambda;

    if (!model.periodic()) {
        // Open chain: U(q_1), U(q_N) pin the ends; drive is not defined here.
        for (std::size_t i = 0; i < n; ++i) f[i] = -(pin + lam * q[i] * q[i]) * q[i];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double bond = w2 * (q[i + 1] - q[i]);
            f[i] += bond;
            f[i + 1] -= bond;
        }
        f[0] -= w2 * q[0];
        f[n - 1] -= w2 * q[n - 1];
        return;
    }

    if (model.far_couplings.empty() && n >= 3) {
        // Nearest-neighbour ring: the hot path of every simulation.
        const double a = w2 * (2.0 + model.mu * model.mu);
        const double b = w2 * drive;
        {
            const double qm = q[n - 1], qi = q[0], qp = q[1];
            f[0] = -a * qi + w2 * (qm + qp) - lam * qi * qi * qi + b * (qp - qm);
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double qm = q[i - 1], qi = q[i], qp = q[i + 1];
            f[i] = -a * qi + w2 * (qm + qp) - lam * qi * qi * qi + b * (qp - qm);
        }
        {
            const double qm = q[n - 2], qi = q[n - 1], qp = q[0];
            f[n - 1] = -a * qi + w2 * (qm + qp) - lam * qi * qi * qi + b * (qp - qm);
        }
        return;
    }

    for (std::size_t i = 0; i < n; ++i) f[i] = model.on_site_force(q[i]);
    for (std::size_t k = 1; k <= model.interaction_range(); ++k) {
        const Coupling u = model.coupling(k);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t ip = wrap(static_cast<std::ptrdiff_t>(i + k), n);
            const std::size_t im = wrap(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(k), n);
            const double fwd = u.force(q[i] - q[ip]);   // F^k(q_i - q_{i+k})
            const double back = u.force(q[im] - q[i]);  // F^k(q_{i-k} - q_i)
            f[i] += (fwd - back) + drive * (back + fwd);
        }
    }
}

ForceField hamiltonian_force(const ChainState& s, const ModelParams& model) {
    check_state(s, model);
    ForceField out{std::vector<double>(model.size)};
    compute_forces(s.q, model, 0.0, out.f);
    return out;
}

ForceField tau_force(const ChainState& s, const ModelParams& model, double tau,
                     double temperature) {
    check_state(s, model);
    require(model.periodic(), ErrorKind::unsupported_configuration,
            "tau drive requires a periodic chain");
    require(temperature > 0.0, ErrorKind::invalid_input, "temperature must be > 0");
    const std::size_t n = model.size;
    const double drive = tau / (2.0 * temperature);
    ForceField out{std::vector<double>(n, 0.0)};
    for (std::size_t k = 1; k <= model.interaction_range(); ++k) {
        const Coupling u = model.coupling(k);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t ip = wrap(static_cast<std::ptrdiff_t>(i + k), n);
            const std::size_t im = wrap(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(k), n);
            out.f[i] += drive * (u.force(s.q[im] - s.q[i]) + u.force(s.q[i] - s.q[ip]));
        }
    }
    return out;
}

double tau_injected_power(const ChainState& s, const ModelParams& model, double tau,
                          double temperature) {
    const auto f = tau_force(s, model, tau, temperature);
    double w = 0.0;
    for (std::size_t i = 0; i < model.size; ++i) w += f.f[i] * s.p[i];
    return w;
}

double mean_second_neighbour_gap_sq(const ChainState& s) {
    const std::size_t n = s.q.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = s.q[(i + 1) % n] - s.q[(i + n - 1) % n];
        acc += d * d;
    }
    return acc / static_cast<double>(n);
}

double mean_q_q3(const ChainState& s) {
    const std::size_t n = s.q.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = s.q[(i + 1) % n];
        acc += s.q[i] * b * b * b;
    }
    return acc / static_cast<double>(n);
}

double mean_q3_q(const ChainState& s) {
    const std::size_t n = s.q.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = s.q[i];
        acc += a * a * a * s.q[(i + 1) % n];
    }
    return acc / static_cast<double>(n);
}

double mean_p_q_shift(const ChainState& s, std::ptrdiff_t l) {
    const std::size_t n = s.q.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += s.p[i] * s.q[wrap(static_cast<std::ptrdiff_t>(i) + l, n)];
    return acc / static_cast<double>(n);
}

}  // namespace nesslab
