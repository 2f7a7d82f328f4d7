#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "nesslab/error.hpp"
#include "nesslab/experiment.hpp"
#include "nesslab/harmonic_theory.hpp"

namespace nesslab {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kind_names[] = {
    {ExperimentKind::steady_state, "steady-state"},
    {ExperimentKind::sweep_tau, "sweep-tau"},
    {ExperimentKind::sweep_gamma, "sweep-gamma"},
    {ExperimentKind::sweep_size, "sweep-size"},
    {ExperimentKind::green_kubo, "green-kubo"},
    {ExperimentKind::fluctuation_theorem, "fluctuation-theorem"},
    {ExperimentKind::boundary_profile, "boundary-profile"},
    {ExperimentKind::theory_tables, "theory-tables"},
};

constexpr std::pair<SweepAxis, std::string_view> axis_names[] = {
    {SweepAxis::tau, "tau"},
    {SweepAxis::gamma, "gamma"},
    {SweepAxis::size, "size"},
    {SweepAxis::mu, "mu"},
};

std::string_view boundary_name(Boundary b) {
    return b == Boundary::periodic ? "periodic" : "open-pinned";
}

// Collects every syntax and type problem before giving up, each tagged with
// its line and dotted field path.
class Reader {
public:
    explicit Reader(std::string origin) : origin_(std::move(origin)) {}

    template <class T>
    bool get(const YAML::Node& map, const char* key, const std::string& path, T& out) {
        const YAML::Node node = map[key];
        if (!node) return false;
        try {
            out = node.as<T>();
            return true;
        } catch (const YAML::Exception&) {
            error(node, path + key, "has the wrong type");
            return false;
        }
    }

    bool section(const YAML::Node& root, const char* key, YAML::Node& out) {
        const YAML::Node found = root[key];
        if (!found) return false;
        out.reset(found);
        if (!out.IsMap()) {
            error(out, key, "must be a mapping");
            return false;
        }
        return true;
    }

    void allow_only(const YAML::Node& map, std::initializer_list<std::string_view> keys,
                    const std::string& path) {
        for (const auto& kv : map) {
            const auto name = kv.first.as<std::string>();
            bool known = false;
            for (auto k : keys) known = known || k == name;
            if (!known) error(kv.first, path + name, "is not a known field");
        }
    }

    void error(const YAML::Node& node, const std::string& field, const std::string& what) {
        std::ostringstream os;
        os << origin_ << ":" << node.Mark().line + 1 << ": field '" << field << "' " << what;
        errors_.push_back(os.str());
    }

    void throw_if_errors() const {
        if (errors_.empty()) return;
        std::string msg = "configuration errors:";
        for (const auto& e : errors_) msg += "\n  " + e;
        fail(ErrorKind::configuration, msg);
    }

private:
    std::string origin_;
    std::vector<std::string> errors_;
};

/// max_k w_k alpha_k |tau| / (2 gamma T); the harmonic stationary state
/// exists only below 1.
double drive_ratio(const ModelParams& model, const DynamicsParams& dyn) {
    if (dyn.gamma <= 0.0) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t k = 1; 2 * k <= model.size; ++k) {
        const double s = std::sin(2.0 * std::numbers::pi * static_cast<double>(k) /
                                  static_cast<double>(model.size));
        if (s == 0.0) continue;
        const double wk = mode_frequency(model, static_cast<long>(k), model.size);
        worst = std::max(worst, 2.0 * model.omega * model.omega * std::abs(s) / wk);
    }
    return worst * std::abs(dyn.tau) / (2.0 * dyn.gamma * dyn.temperature);
}

bool harmonic_ring(const ModelParams& m) {
    return m.periodic() && m.lambda == 0.0 && m.far_couplings.empty();
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
    for (auto [k, n] : kind_names)
        if (k == kind) return n;
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
    for (auto [k, n] : kind_names)
        if (n == name) return k;
    return std::nullopt;
}

bool is_sweep(ExperimentKind kind) {
    return kind == ExperimentKind::sweep_tau || kind == ExperimentKind::sweep_gamma ||
           kind == ExperimentKind::sweep_size || kind == ExperimentKind::theory_tables;
}

std::string_view to_string(SweepAxis axis) {
    for (auto [a, n] : axis_names)
        if (a == axis) return n;
    return "unknown";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
    for (auto [a, n] : axis_names)
        if (n == name) return a;
    return std::nullopt;
}

void ExperimentConfig::validate() {
    std::vector<std::string> problems;
    auto check = [&](bool ok, std::string msg) {
        if (!ok) problems.push_back(std::move(msg));
    };
    auto collect = [&](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            problems.emplace_back(e.what());
        }
    };
    warnings.clear();

    collect([&] { model.validate(); });
    collect([&] { dyn.validate(model); });

    IntegrationSpec probe = spec;
    check(std::isfinite(duration_time) && duration_time >= 0.0, "duration_time must be >= 0");
    check(!burn_in_time || (std::isfinite(*burn_in_time) && *burn_in_time >= 0.0),
          "burn_in_time must be >= 0");
    if (std::isfinite(spec.dt) && spec.dt > 0.0 && duration_time >= 0.0) {
        probe.burn_in_steps = 0;
        probe.n_steps = static_cast<std::uint64_t>(std::llround(duration_time / spec.dt));
    }
    collect([&] { probe.validate(model); });

    const bool sweep_needed = is_sweep(experiment);
    check(!sweep_needed || !sweep_values.empty(),
          std::string(to_string(experiment)) + " needs nonempty sweep_values");
    check(sweep_needed || sweep_values.empty(),
          std::string(to_string(experiment)) + " takes no sweep_values");
    for (double v : sweep_values) check(std::isfinite(v), "sweep_values must be finite");

    const bool periodic_driven =
        dyn.mode == DriveMode::tau_driven || dyn.mode == DriveMode::flip_noise;
    switch (experiment) {
        case ExperimentKind::steady_state:
            break;
        case ExperimentKind::sweep_tau:
            check(periodic_driven, "sweep-tau needs tau-driven or flip-noise dynamics");
            break;
        case ExperimentKind::sweep_gamma:
            check(periodic_driven, "sweep-gamma needs tau-driven or flip-noise dynamics");
            check(dyn.tau != 0.0, "sweep-gamma needs a nonzero probe drive tau_energy");
            for (double g : sweep_values) check(g > 0.0, "sweep-gamma values must be > 0");
            break;
        case ExperimentKind::sweep_size:
            for (double m : sweep_values)
                check(m >= 2.0 && m == std::floor(m) && m < 1e9,
                      "sweep-size values must be integers >= 2");
            break;
        case ExperimentKind::green_kubo:
            check(model.periodic(), "green-kubo needs a periodic chain");
            check(dyn.tau == 0.0, "green-kubo needs tau_energy = 0 (equilibrium)");
            check(gk_max_lag_time >= 0.0 && gk_sustain_time >= 0.0,
                  "green_kubo times must be >= 0");
            break;
        case ExperimentKind::fluctuation_theorem:
            check(dyn.mode == DriveMode::tau_driven, "fluctuation-theorem needs tau-driven dynamics");
            check(dyn.tau != 0.0, "fluctuation-theorem needs tau_energy != 0");
            check(!ft_windows_time.empty(), "fluctuation-theorem needs windows_time");
            for (double w : ft_windows_time) {
                check(w > 0.0, "windows_time values must be > 0");
                check(w <= duration_time, "windows_time values must not exceed duration_time");
            }
            check(ft_bins_per_side >= 1, "bins_per_side must be >= 1");
            break;
        case ExperimentKind::boundary_profile:
            check(dyn.mode == DriveMode::boundary_driven,
                  "boundary-profile needs boundary-driven dynamics");
            break;
        case ExperimentKind::theory_tables:
            check(sweep_axis.has_value(), "theory-tables needs sweep_parameter");
            if (sweep_axis == SweepAxis::size)
                for (double m : sweep_values)
                    check(m >= 2.0 && m == std::floor(m), "size values must be integers >= 2");
            if (sweep_axis == SweepAxis::gamma)
                for (double g : sweep_values) check(g >= 0.0, "gamma values must be >= 0");
            if (sweep_axis == SweepAxis::mu)
                for (double m : sweep_values) check(m >= 0.0, "mu values must be >= 0");
            break;
    }
    check(experiment == ExperimentKind::theory_tables || !sweep_axis.has_value(),
          "sweep_parameter applies to theory-tables only");

    if (!problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  " + p;
        fail(ErrorKind::configuration, msg);
    }

    // Harmonic oracle comparisons are meaningless past the critical drive.
    if (harmonic_ring(model) && periodic_driven) {
        std::vector<DynamicsParams> points{dyn};
        if (experiment == ExperimentKind::sweep_tau || experiment == ExperimentKind::sweep_gamma) {
            points.clear();
            for (double v : sweep_values) {
                DynamicsParams d = dyn;
                (experiment == ExperimentKind::sweep_tau ? d.tau : d.gamma) = v;
                points.push_back(d);
            }
        }
        for (const auto& d : points) {
            const double r = drive_ratio(model, d);
            if (r >= 1.0) {
                std::ostringstream os;
                os << "harmonic drive is supercritical (ratio " << r << " >= 1) at tau = " << d.tau
                   << ", gamma = " << d.gamma << "; no stationary state exists";
                warnings.push_back(os.str());
            }
        }
    }
}

ExperimentConfig parse_config(std::string_view text, std::string_view origin) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << origin << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": " << e.msg;
        fail(ErrorKind::configuration, "configuration syntax error: " + os.str());
    }
    if (!root.IsMap())
        fail(ErrorKind::configuration, std::string(origin) + ": top level must be a mapping");

    Reader rd{std::string(origin)};
    ExperimentConfig c;
    rd.allow_only(root,
                  {"experiment", "seed", "workers", "ensemble_size", "output_dir", "sweep_values",
                   "sweep_parameter", "model", "dynamics", "integration", "green_kubo",
                   "fluctuation"},
                  "");

    std::string kind;
    if (!rd.get(root, "experiment", "", kind)) {
        if (!root["experiment"])
            rd.error(root, "experiment", "is required");
    } else if (auto k = parse_experiment_kind(kind)) {
        c.experiment = *k;
    } else {
        rd.error(root["experiment"], "experiment", "has unknown value '" + kind + "'");
    }

    rd.get(root, "seed", "", c.spec.seed);
    rd.get(root, "workers", "", c.workers);
    rd.get(root, "ensemble_size", "", c.ensemble_size);
    std::string out;
    if (rd.get(root, "output_dir", "", out)) c.output_dir = out;
    rd.get(root, "sweep_values", "", c.sweep_values);
    std::string axis;
    if (rd.get(root, "sweep_parameter", "", axis)) {
        if (auto a = parse_sweep_axis(axis))
            c.sweep_axis = a;
        else
            rd.error(root["sweep_parameter"], "sweep_parameter", "has unknown value '" + axis + "'");
    }

    // Experiment-dependent defaults, overridden by explicit fields below.
    c.model.size = 64;
    c.model.mu = 1.0;
    if (c.experiment == ExperimentKind::boundary_profile) {
        c.model.boundary = Boundary::open_pinned;
        c.dyn.mode = DriveMode::boundary_driven;
    } else if (c.experiment == ExperimentKind::sweep_tau ||
               c.experiment == ExperimentKind::sweep_gamma ||
               c.experiment == ExperimentKind::fluctuation_theorem) {
        c.dyn.mode = DriveMode::tau_driven;
    }

    YAML::Node sec;
    if (rd.section(root, "model", sec)) {
        rd.allow_only(sec,
                      {"size_sites", "boundary", "omega_per_time", "mu",
                       "lambda_energy_per_length4", "far_couplings"},
                      "model.");
        rd.get(sec, "size_sites", "model.", c.model.size);
        std::string b;
        if (rd.get(sec, "boundary", "model.", b)) {
            if (b == "periodic")
                c.model.boundary = Boundary::periodic;
            else if (b == "open-pinned")
                c.model.boundary = Boundary::open_pinned;
            else
                rd.error(sec["boundary"], "model.boundary", "has unknown value '" + b + "'");
        }
        rd.get(sec, "omega_per_time", "model.", c.model.omega);
        rd.get(sec, "mu", "model.", c.model.mu);
        rd.get(sec, "lambda_energy_per_length4", "model.", c.model.lambda);
        if (const auto far = sec["far_couplings"]) {
            if (!far.IsSequence()) {
                rd.error(far, "model.far_couplings", "must be a sequence");
            } else {
                for (const auto& f : far) {
                    Coupling cp;
                    if (!f.IsMap()) {
                        rd.error(f, "model.far_couplings", "entries must be mappings");
                        continue;
                    }
                    rd.allow_only(f, {"harmonic_energy_per_length2", "quartic_energy_per_length4"},
                                  "model.far_couplings.");
                    rd.get(f, "harmonic_energy_per_length2", "model.far_couplings.", cp.harmonic);
                    rd.get(f, "quartic_energy_per_length4", "model.far_couplings.", cp.quartic);
                    c.model.far_couplings.push_back(cp);
                }
            }
        }
    }

    if (rd.section(root, "dynamics", sec)) {
        rd.allow_only(sec,
                      {"mode", "gamma_per_time", "temperature_energy", "t_left_energy",
                       "t_right_energy", "tau_energy", "flip_rate_per_time"},
                      "dynamics.");
        std::string m;
        if (rd.get(sec, "mode", "dynamics.", m)) {
            if (auto mode = parse_drive_mode(m))
                c.dyn.mode = *mode;
            else
                rd.error(sec["mode"], "dynamics.mode", "has unknown value '" + m + "'");
        }
        rd.get(sec, "gamma_per_time", "dynamics.", c.dyn.gamma);
        rd.get(sec, "temperature_energy", "dynamics.", c.dyn.temperature);
        rd.get(sec, "t_left_energy", "dynamics.", c.dyn.t_left);
        rd.get(sec, "t_right_energy", "dynamics.", c.dyn.t_right);
        rd.get(sec, "tau_energy", "dynamics.", c.dyn.tau);
        rd.get(sec, "flip_rate_per_time", "dynamics.", c.dyn.flip_rate);
    }

    bool dt_given = false;
    c.spec.record_every = 10;
    if (rd.section(root, "integration", sec)) {
        rd.allow_only(sec, {"dt_time", "duration_time", "burn_in_time", "record_every_steps"},
                      "integration.");
        dt_given = rd.get(sec, "dt_time", "integration.", c.spec.dt);
        rd.get(sec, "duration_time", "integration.", c.duration_time);
        double burn = 0.0;
        if (rd.get(sec, "burn_in_time", "integration.", burn)) c.burn_in_time = burn;
        rd.get(sec, "record_every_steps", "integration.", c.spec.record_every);
    }

    if (rd.section(root, "green_kubo", sec)) {
        rd.allow_only(sec, {"max_lag_time", "sustain_time"}, "green_kubo.");
        rd.get(sec, "max_lag_time", "green_kubo.", c.gk_max_lag_time);
        rd.get(sec, "sustain_time", "green_kubo.", c.gk_sustain_time);
    }

    if (rd.section(root, "fluctuation", sec)) {
        rd.allow_only(sec, {"windows_time", "bins_per_side", "min_count"}, "fluctuation.");
        rd.get(sec, "windows_time", "fluctuation.", c.ft_windows_time);
        rd.get(sec, "bins_per_side", "fluctuation.", c.ft_bins_per_side);
        rd.get(sec, "min_count", "fluctuation.", c.ft_min_count);
    }

    rd.throw_if_errors();
    if (!dt_given) c.spec.dt = IntegrationSpec::default_dt(c.model);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::configuration, "cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string canonical_config(const ExperimentConfig& c) {
    using nlohmann::json;
    json far = json::array();
    for (const auto& f : c.model.far_couplings)
        far.push_back({{"harmonic_energy_per_length2", f.harmonic},
                       {"quartic_energy_per_length4", f.quartic}});
    json j = {
        {"experiment", std::string(to_string(c.experiment))},
        {"seed", c.spec.seed},
        {"ensemble_size", c.ensemble_size},
        {"sweep_values", c.sweep_values},
        {"sweep_parameter",
         c.sweep_axis ? json(std::string(to_string(*c.sweep_axis))) : json(nullptr)},
        {"model",
         {{"size_sites", c.model.size},
          {"boundary", std::string(boundary_name(c.model.boundary))},
          {"omega_per_time", c.model.omega},
          {"mu", c.model.mu},
          {"lambda_energy_per_length4", c.model.lambda},
          {"far_couplings", far}}},
        {"dynamics",
         {{"mode", std::string(to_string(c.dyn.mode))},
          {"gamma_per_time", c.dyn.gamma},
          {"temperature_energy", c.dyn.temperature},
          {"t_left_energy", c.dyn.t_left},
          {"t_right_energy", c.dyn.t_right},
          {"tau_energy", c.dyn.tau},
          {"flip_rate_per_time", c.dyn.flip_rate}}},
        {"integration",
         {{"dt_time", c.spec.dt},
          {"duration_time", c.duration_time},
          {"burn_in_time", c.burn_in_time ? json(*c.burn_in_time) : json(nullptr)},
          {"record_every_steps", c.spec.record_every}}},
        {"green_kubo",
         {{"max_lag_time", c.gk_max_lag_time}, {"sustain_time", c.gk_sustain_time}}},
        {"fluctuation",
         {{"windows_time", c.ft_windows_time},
          {"bins_per_side", c.ft_bins_per_side},
          {"min_count", c.ft_min_count}}},
    };
    return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace nesslab
