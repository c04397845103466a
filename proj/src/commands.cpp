#include "poro/commands.hpp"

#include "poro/diagnostics.hpp"
#include "poro/error.hpp"
#include "poro/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace poro {

namespace {

namespace fs = std::filesystem;

fs::path prepare_dir(const RunConfig& c)
{
    fs::path dir(c.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create output directory '" + c.out_dir + "': " + ec.message());
    }
    return dir;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    return f;
}

std::string snapshot_name(int step)
{
    std::ostringstream os;
    os << "fields_" << step << ".vtk";
    return os.str();
}

} // namespace

const std::vector<std::string>& diagnostics_columns()
{
    static const std::vector<std::string> cols = {
        "step", "t", "J", "S_cum", "energy_residual", "C_eta_res", "C_xi_res", "flux_res",
        "err_u_L2", "err_u_H1", "err_p_L2", "err_p_H1"};
    return cols;
}

const std::vector<std::string>& rates_columns()
{
    static const std::vector<std::string> cols = {
        "h", "err_p_LinfL2", "rate_p_LinfL2", "err_p_L2H1", "rate_p_L2H1",
        "err_u_LinfL2", "rate_u_LinfL2", "err_u_L2H1", "rate_u_L2H1", "flag"};
    return cols;
}

const std::vector<std::string>& sweep_columns()
{
    static const std::vector<std::string> cols = {"c0_a", "c0_b", "dist_u", "dist_eta", "dist_xi"};
    return cols;
}

int cmd_run(const RunConfig& config, std::ostream& console)
{
    config.validate();
    const fs::path dir = prepare_dir(config);
    const Benchmark bench = config.resolve_benchmark();
    const TimeScheme scheme = config.resolve_scheme();
    const Mesh mesh = build_rect_mesh(config.resolve_nx(), config.resolve_ny(), bench.domain);
    SolverOptions sopt;
    sopt.tolerance = config.solver_tol;
    Systems sys(bench, mesh, sopt);

    const int n = scheme.n_steps();
    const int every = config.snapshot_every ? *config.snapshot_every : std::max(1, (n + 9) / 10);

    std::ostringstream log;
    log << "# configuration\n" << to_text(config);
    log << "# resolved\nnx=" << mesh.nx << "\nny=" << mesh.ny << "\ndt=" << format_double(scheme.dt)
        << "\nT=" << format_double(scheme.T) << "\nn_steps=" << n << "\nh=" << format_double(mesh.h) << '\n';
    const MaterialParams& prm = bench.params;
    log << "lambda=" << format_double(prm.lambda) << "\nmu=" << format_double(prm.mu)
        << "\nalpha=" << format_double(prm.alpha) << "\nc0=" << format_double(prm.c0)
        << "\nK=" << format_double(prm.K) << "\nmu_f=" << format_double(prm.mu_f)
        << "\nrho_f=" << format_double(prm.rho_f) << "\ng=" << format_double(prm.g.x()) << ','
        << format_double(prm.g.y()) << '\n';
    const DerivedCoeffs& k = sys.coeffs();
    log << "kappa1=" << format_double(k.kappa1) << "\nkappa2=" << format_double(k.kappa2)
        << "\nkappa3=" << format_double(k.kappa3) << '\n';

    std::ofstream csv_file = open_out(dir / "diagnostics.csv");
    CsvWriter csv(csv_file, diagnostics_columns());

    EnergyAuditor energy(sys, scheme);
    ConservationTracker conservation(sys, scheme);
    std::optional<ErrorAccumulator> errors;
    if (config.errors && bench.exact_u && bench.exact_p) {
        errors.emplace(sys, scheme);
    }
    const bool energy_exact = bench.time_independent_data;
    double worst_energy = 0.0;
    double worst_eta = 0.0;
    double worst_xi = 0.0;
    bool eta_applies = false;
    bool xi_applies = false;
    std::vector<std::string> snapshots;

    RunOptions ropt;
    ropt.keep_trajectory = false;
    ropt.c_stab = config.c_stab;
    ropt.observer = [&](const FieldState& s) {
        std::optional<EnergyRecord> er;
        if (config.energy) {
            er = energy.push(s);
        }
        std::optional<ConservationResidual> cr;
        if (config.conservation) {
            cr = conservation.push(s);
        }
        std::optional<StepErrors> se;
        if (errors) {
            se = errors->push(s);
        }
        if (config.write_vtk && (s.step == 0 || s.step == n || s.step % every == 0)) {
            const std::string name = snapshot_name(s.step);
            std::ofstream vtk = open_out(dir / name);
            write_vtk(vtk, mesh, sys.dofs(), s);
            snapshots.push_back(name);
        }
        if (s.step == 0) {
            return;
        }
        std::vector<std::optional<double>> row(diagnostics_columns().size());
        row[0] = s.step;
        row[1] = s.t;
        if (er) {
            row[2] = er->J;
            row[3] = er->S;
            row[4] = er->residual;
            worst_energy = std::max(worst_energy, std::abs(er->residual) / std::max(1.0, std::abs(energy.J0())));
        }
        if (cr) {
            eta_applies = cr->eta_applies;
            xi_applies = cr->xi_applies;
            if (cr->eta_applies) {
                row[5] = cr->eta;
                worst_eta = std::max(worst_eta, cr->eta);
            }
            if (cr->xi_applies) {
                row[6] = cr->xi;
                row[7] = cr->flux;
                worst_xi = std::max({worst_xi, cr->xi, cr->flux});
            }
        }
        if (se) {
            row[8] = se->u_L2;
            row[9] = se->u_H1;
            row[10] = se->p_L2;
            row[11] = se->p_H1;
        }
        csv.row(row);
    };

    console << "running " << bench.name << " on " << mesh.nx << "x" << mesh.ny << ", theta=" << scheme.theta
            << ", dt=" << format_double(scheme.dt) << ", " << n << " steps\n";
    const RunResult res = run(sys, scheme, ropt);
    csv_file.flush();

    log << "# stability gate\nc_stab=" << format_double(res.gate.c_stab)
        << "\ngate_limit=" << format_double(res.gate.limit)
        << "\ngate_applies=" << (res.gate.applies ? "true" : "false")
        << "\ngate_satisfied=" << (res.gate.satisfied ? "true" : "false") << '\n';
    for (const auto& w : res.warnings) {
        log << "warning: " << w << '\n';
        console << "warning: " << w << '\n';
    }
    log << "# solver\nsolves=" << sys.log().solves << "\nfactorizations=" << sys.log().factorizations
        << "\nmax_relative_residual=" << csv_number(sys.log().max_relative_residual) << '\n';
    log << "# diagnostics\n";
    if (config.energy) {
        log << "max_energy_residual=" << csv_number(worst_energy)
            << (energy_exact ? "" : " (data depend on time; informational)") << '\n';
        if (energy_exact && worst_energy > config.energy_tol) {
            log << "warning: energy residual above " << format_double(config.energy_tol) << '\n';
        }
    }
    if (config.conservation) {
        log << "max_conservation_eta=" << (eta_applies ? csv_number(worst_eta) : "n/a (pressure data on the boundary)")
            << "\nmax_conservation_xi_flux="
            << (xi_applies ? csv_number(worst_xi) : "n/a (needs pure traction and pure flux)") << '\n';
        if (std::max(eta_applies ? worst_eta : 0.0, xi_applies ? worst_xi : 0.0) > config.conservation_tol) {
            log << "warning: conservation residual above " << format_double(config.conservation_tol) << '\n';
        }
    }
    if (errors) {
        const ErrorReport& r = errors->report();
        log << "err_u_LinfL2=" << csv_number(r.u_LinfL2) << "\nerr_u_L2H1=" << csv_number(r.u_L2H1)
            << "\nerr_p_LinfL2=" << csv_number(r.p_LinfL2) << "\nerr_p_L2H1=" << csv_number(r.p_L2H1) << '\n';
    }
    try {
        const LockingIndicator li = locking_scan(sys, res.final_state, config.locking_line, config.locking_flat_tol);
        log << "locking_extrema=" << li.extrema << "\nlocking_undershoot=" << csv_number(li.undershoot) << '\n';
    } catch (const InvalidArgument& e) {
        log << "locking_scan skipped: " << e.what() << '\n';
    }
    log << "# snapshots\n";
    for (const auto& s : snapshots) {
        log << s << '\n';
    }
    write_text_file((dir / "run.log").string(), log.str());
    console << "wrote " << (dir / "diagnostics.csv").string() << ", " << snapshots.size()
            << " snapshots and run.log\n";
    return 0;
}

int cmd_convergence(const RunConfig& config, std::ostream& console)
{
    config.validate();
    const fs::path dir = prepare_dir(config);
    const Benchmark bench = config.resolve_benchmark();
    if (!bench.exact_u || !bench.exact_p) {
        throw UnsupportedConfiguration("benchmark '" + bench.name + "' has no exact solution");
    }
    const TimeScheme scheme = config.resolve_scheme();
    std::vector<int> levels = config.refinements;
    if (levels.empty()) {
        const int base = config.resolve_nx();
        levels = {base, 2 * base, 4 * base, 8 * base};
    }
    SolverOptions sopt;
    sopt.tolerance = config.solver_tol;

    std::vector<double> h, pl2, ph1, ul2, uh1;
    for (int nx : levels) {
        const Mesh mesh = build_rect_mesh(nx, nx, bench.domain);
        Systems sys(bench, mesh, sopt);
        ErrorAccumulator acc(sys, scheme);
        RunOptions ropt;
        ropt.keep_trajectory = false;
        ropt.observer = [&](const FieldState& s) { acc.push(s); };
        run(sys, scheme, ropt);
        const ErrorReport& r = acc.report();
        h.push_back(mesh.h);
        pl2.push_back(r.p_LinfL2);
        ph1.push_back(r.p_L2H1);
        ul2.push_back(r.u_LinfL2);
        uh1.push_back(r.u_L2H1);
        console << "nx=" << nx << " p_LinfL2=" << csv_number(r.p_LinfL2) << " p_L2H1=" << csv_number(r.p_L2H1)
                << " u_LinfL2=" << csv_number(r.u_LinfL2) << " u_L2H1=" << csv_number(r.u_L2H1) << '\n';
    }
    const auto rp0 = convergence_rates(h, pl2);
    const auto rp1 = convergence_rates(h, ph1);
    const auto ru0 = convergence_rates(h, ul2);
    const auto ru1 = convergence_rates(h, uh1);

    std::ofstream f = open_out(dir / "rates.csv");
    CsvWriter csv(f, rates_columns());
    constexpr double kFloor = 1e-9;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const bool at_tol = std::max({pl2[i], ph1[i], ul2[i], uh1[i]}) <= kFloor ||
                            (i > 0 && std::max({pl2[i - 1], ph1[i - 1], ul2[i - 1], uh1[i - 1]}) <= kFloor);
        const auto rate = [&](const std::optional<double>& r) {
            return (r && !at_tol) ? csv_number(*r) : std::string();
        };
        csv.row_text({csv_number(h[i]), csv_number(pl2[i]), rate(rp0[i]), csv_number(ph1[i]), rate(rp1[i]),
                      csv_number(ul2[i]), rate(ru0[i]), csv_number(uh1[i]), rate(ru1[i]),
                      at_tol ? "at_tolerance" : ""});
    }
    console << "wrote " << (dir / "rates.csv").string() << '\n';
    return 0;
}

int cmd_sweep(const RunConfig& config, std::ostream& console)
{
    config.validate();
    const fs::path dir = prepare_dir(config);
    const Benchmark bench = config.resolve_benchmark();
    const TimeScheme scheme = config.resolve_scheme();
    const Mesh mesh = build_rect_mesh(config.resolve_nx(), config.resolve_ny(), bench.domain);
    std::vector<double> list = config.c0_list;
    if (list.empty()) {
        list = {1e-2, 1e-4, 1e-6};
    }
    SolverOptions sopt;
    sopt.tolerance = config.solver_tol;
    const auto rows = biot_limit_sweep(bench, mesh, scheme, list, sopt);
    std::ofstream f = open_out(dir / "sweep.csv");
    CsvWriter csv(f, sweep_columns());
    for (const auto& r : rows) {
        csv.row({r.c0_a, r.c0_b, r.dist_u, r.dist_eta, r.dist_xi});
        console << "c0 " << format_double(r.c0_a) << " -> " << format_double(r.c0_b) << ": u "
                << csv_number(r.dist_u) << ", eta " << csv_number(r.dist_eta) << ", xi " << csv_number(r.dist_xi)
                << '\n';
    }
    console << "wrote " << (dir / "sweep.csv").string() << '\n';
    return 0;
}

} // namespace poro
