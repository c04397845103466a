#pragma once

#include "poro/model.hpp"
#include "poro/stepper.hpp"

#include <optional>
#include <string>
#include <vector>

namespace poro {

/// Settings of one command. Unset optionals fall back to the benchmark's
/// defaults through resolve_*().
struct RunConfig {
    std::string benchmark = "test1";
    std::optional<int> nx;
    std::optional<int> ny;
    std::optional<double> dt;
    std::optional<double> T;
    int theta = 1;

    std::optional<double> lambda;
    std::optional<double> mu;
    std::optional<double> alpha;
    std::optional<double> c0;
    std::optional<double> K;
    std::optional<double> mu_f;
    std::optional<double> rho_f;
    std::optional<double> g_x;
    std::optional<double> g_y;

    std::string out_dir = ".";
    std::optional<int> snapshot_every;
    std::vector<int> refinements;  // mesh counts for the convergence command
    std::vector<double> c0_list;   // storage coefficients for the sweep command
    std::optional<double> c_stab;

    bool write_vtk = true;
    bool energy = true;
    bool conservation = true;
    bool errors = true;

    double solver_tol = 1e-10;
    double energy_tol = 1e-8;
    double conservation_tol = 1e-10;
    double locking_line = 0.5;
    double locking_flat_tol = 1e-6;
    int locking_max_extrema = 2;
    double locking_max_undershoot = 0.05;

    MaterialParams resolve_params() const;
    Benchmark resolve_benchmark() const;
    TimeScheme resolve_scheme() const;
    int resolve_nx() const;
    int resolve_ny() const;

    /// Throws ConfigError (line 0) when a cross-field invariant fails.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

/// key=value lines; '#' starts a comment. Unknown keys, unparsable values and
/// domain violations throw ConfigError naming the line.
RunConfig parse_config(const std::string& text);

/// Applies one key=value assignment; `line` is reported in errors.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value, int line);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

} // namespace poro
