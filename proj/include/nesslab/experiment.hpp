#pragma once

// Experiment configuration, orchestration and result files.
//
// A run is fully determined by its configuration (seed included): every
// trajectory draws from the stream keyed by (seed, trajectory_id), and the
// tables are assembled in trajectory order whatever the worker count.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nesslab/dynamics.hpp"
#include "nesslab/lattice.hpp"

namespace nesslab {

enum class ExperimentKind {
    steady_state,
    sweep_tau,
    sweep_gamma,
    sweep_size,
    green_kubo,
    fluctuation_theorem,
    boundary_profile,
    theory_tables,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);
bool is_sweep(ExperimentKind kind);

/// Grid axis of theory-tables.
enum class SweepAxis { tau, gamma, size, mu };

std::string_view to_string(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::steady_state;
    ModelParams model;
    DynamicsParams dyn;
    IntegrationSpec spec;     ///< seed lives here; trajectory_id is assigned per run
    double duration_time = 1000.0;  ///< recorded time per trajectory
    std::optional<double> burn_in_time;  ///< unset: the dynamics default per run
    std::vector<double> sweep_values;
    std::optional<SweepAxis> sweep_axis;  ///< theory-tables only
    std::size_t ensemble_size = 1;
    unsigned workers = 1;
    std::filesystem::path output_dir = "results";

    double gk_max_lag_time = 0.0;
    double gk_sustain_time = 0.0;
    std::vector<double> ft_windows_time;
    std::size_t ft_bins_per_side = 20;
    std::size_t ft_min_count = 10;

    std::vector<std::string> warnings;  ///< filled by validation

    /// Every failed invariant in one configuration error.
    void validate();
};

/// Parses YAML text. Syntax and type errors name the line and field.
ExperimentConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON text of the resolved configuration (sorted keys, full
/// precision) and its FNV-1a 64-bit hash in hex.
std::string canonical_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

struct Column {
    std::string name;
    std::string unit;  ///< "1" for dimensionless, "count", "flag"
};

/// Numeric table. Estimates occupy three adjacent columns: value, value_err
/// and value_neff.
struct ResultTable {
    static constexpr int schema_version = 1;

    std::string name;
    std::vector<Column> columns;
    std::vector<std::vector<double>> rows;

    void add_column(std::string name, std::string unit);
    void add_estimate(const std::string& name, const std::string& unit);
    std::size_t column_index(std::string_view name) const;
    void add_row(std::vector<double> row);
};

struct ExperimentResult {
    std::vector<ResultTable> tables;
    std::vector<std::string> warnings;
    std::size_t trajectories = 0;
    std::size_t failed_trajectories = 0;  ///< diverged; excluded and reported

    bool partial() const { return failed_trajectories > 0; }
    const ResultTable& table(std::string_view name) const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

struct WriteOptions {
    bool force = false;
    double wall_time_seconds = 0.0;
};

/// Writes <name>.tsv per table and manifest.json into `dir`. Refuses an
/// existing manifest unless forced.
void write_results(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& dir, const WriteOptions& options = {});

/// The TSV text of one table (metadata line, header, units row, data).
std::string format_table(const ResultTable& table, const ExperimentConfig& config);

/// "%.17g" with nan and inf spelled out.
std::string format_number(double x);

}  // namespace nesslab
