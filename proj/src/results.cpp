#include <boost/version.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "nesslab/error.hpp"
#include "nesslab/experiment.hpp"

namespace nesslab {

namespace {

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& what) {
    fail(ErrorKind::io, path.string() + ": " + what);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_fail(path, "cannot open for writing");
    out << text;
    out.flush();
    if (!out) io_fail(path, "write failed");
}

std::string compiler_version() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
}

}  // namespace

void ResultTable::add_column(std::string col, std::string unit) {
    require(rows.empty(), ErrorKind::invalid_input, "columns must precede rows");
    columns.push_back({std::move(col), std::move(unit)});
}

void ResultTable::add_estimate(const std::string& col, const std::string& unit) {
    add_column(col, unit);
    add_column(col + "_err", unit);
    add_column(col + "_neff", "count");
}

std::size_t ResultTable::column_index(std::string_view col) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == col) return i;
    fail(ErrorKind::invalid_input, "table '" + name + "' has no column '" + std::string(col) + "'");
}

void ResultTable::add_row(std::vector<double> row) {
    require(row.size() == columns.size(), ErrorKind::invalid_input,
            "row width does not match table '" + name + "'");
    rows.push_back(std::move(row));
}

const ResultTable& ExperimentResult::table(std::string_view name) const {
    for (const auto& t : tables)
        if (t.name == name) return t;
    fail(ErrorKind::invalid_input, "no result table '" + std::string(name) + "'");
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_table(const ResultTable& table, const ExperimentConfig& config) {
    std::string s = "# schema_version=" + std::to_string(ResultTable::schema_version) +
                    "\ttable=" + table.name + "\texperiment=" +
                    std::string(to_string(config.experiment)) +
                    "\tconfig_hash=" + config_hash(config) +
                    "\tseed=" + std::to_string(config.spec.seed) + "\n";
    auto line = [&](auto field) {
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            if (i) s += '\t';
            s += field(table.columns[i]);
        }
        s += '\n';
    };
    line([](const Column& c) { return c.name; });
    line([](const Column& c) { return c.unit; });
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) s += '\t';
            s += format_number(row[i]);
        }
        s += '\n';
    }
    return s;
}

void write_results(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& dir, const WriteOptions& options) {
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path manifest = dir / "manifest.json";
    if (fs::exists(manifest, ec) && !options.force)
        io_fail(dir, "already holds results; pass --force to overwrite");
    fs::create_directories(dir, ec);
    if (ec) io_fail(dir, "cannot create directory: " + ec.message());

    using nlohmann::ordered_json;
    ordered_json files = ordered_json::array();
    for (const auto& t : result.tables) {
        const fs::path path = dir / (t.name + ".tsv");
        write_file(path, format_table(t, config));
        files.push_back({{"table", t.name}, {"file", path.filename().string()},
                         {"rows", t.rows.size()}, {"columns", t.columns.size()}});
    }

    ordered_json m;
    m["schema_version"] = ResultTable::schema_version;
    m["experiment"] = std::string(to_string(config.experiment));
    m["seed"] = config.spec.seed;
    m["config_hash"] = config_hash(config);
    m["config"] = nlohmann::json::parse(canonical_config(config));
    m["workers"] = config.workers;
    m["trajectories"] = result.trajectories;
    m["failed_trajectories"] = result.failed_trajectories;
    m["partial"] = result.partial();
    m["warnings"] = result.warnings;
    m["tables"] = files;
    m["wall_time_seconds"] = options.wall_time_seconds;
    m["versions"] = {
        {"nesslab", "1.0.0"},
        {"compiler", compiler_version()},
        {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                      std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                      std::to_string(BOOST_VERSION % 100)},
        {"cxx_standard", __cplusplus},
    };
    write_file(manifest, m.dump(2) + "\n");
}

}  // namespace nesslab
