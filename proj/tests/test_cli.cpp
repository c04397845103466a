#include "poro/commands.hpp"
#include "poro/config.hpp"
#include "poro/error.hpp"
#include "poro/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace poro;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("poro_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string l;
    while (std::getline(ss, l)) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

int line_of_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(PORO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST(Config, Test1Defaults) {
    RunConfig c = parse_config("benchmark=test1\nnx=8\ndt=1e-5\ntheta=1");
    EXPECT_EQ(c.benchmark, "test1");
    EXPECT_EQ(c.nx, 8);
    EXPECT_EQ(c.theta, 1);
    TimeScheme s = c.resolve_scheme();
    EXPECT_DOUBLE_EQ(s.T, 0.001);
    EXPECT_EQ(s.n_steps(), 100);
    EXPECT_EQ(c.resolve_ny(), 8);
}

TEST(Config, EmptyFileGivesDefaults) {
    RunConfig c = parse_config("");
    EXPECT_EQ(c, RunConfig{});
    EXPECT_EQ(c.benchmark, "test1");
    EXPECT_EQ(parse_config("# only a comment\n\n   \n"), RunConfig{});
}

TEST(Config, ErrorsNameTheLine) {
    EXPECT_EQ(line_of_error("theta=2"), 1);
    EXPECT_EQ(line_of_error("nx=4\n\n# comment\nfoo=1\n"), 4);
    EXPECT_EQ(line_of_error("dt=abc"), 1);
    EXPECT_EQ(line_of_error("nx=4\nnx=0"), 2);
    EXPECT_EQ(line_of_error("nx=4.5"), 1);
    EXPECT_EQ(line_of_error("mu=-1"), 1);
    EXPECT_EQ(line_of_error("write_vtk=maybe"), 1);
    EXPECT_EQ(line_of_error("benchmark=terzaghi"), 1);
    EXPECT_EQ(line_of_error("nx"), 1);
    // Cross-field check: T not a multiple of dt.
    EXPECT_EQ(line_of_error("dt=0.3\nT=1"), 0);
}

TEST(Config, CommentsAndWhitespace) {
    RunConfig c = parse_config("  nx = 12   # mesh\n#theta=0\nc0_list = 1e-2, 1e-4\nrefinements=4,8\n");
    EXPECT_EQ(c.nx, 12);
    EXPECT_EQ(c.theta, 1);
    EXPECT_EQ(c.c0_list, (std::vector<double>{1e-2, 1e-4}));
    EXPECT_EQ(c.refinements, (std::vector<int>{4, 8}));
}

TEST(Config, MaterialOverridesResolve) {
    RunConfig c = parse_config("benchmark=locking\nK=1e-3\nc0=0.5");
    MaterialParams p = c.resolve_params();
    EXPECT_EQ(p.K, 1e-3);
    EXPECT_EQ(p.c0, 0.5);
    EXPECT_DOUBLE_EQ(p.mu, locking_default_params().mu);
    EXPECT_EQ(c.resolve_benchmark().name, "locking");
}

TEST(Config, RoundTripIsLossless) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> U(1e-6, 10.0);
    for (int k = 0; k < 50; ++k) {
        RunConfig c;
        c.benchmark = k % 2 ? "locking" : "barry_mercer";
        c.nx = 1 + k;
        if (k % 3) c.ny = 2 + k;
        c.theta = k % 2;
        c.dt = 0.01;
        c.T = 0.01 * (k + 1);
        if (k % 4 == 0) c.lambda = U(rng);
        c.mu = U(rng);
        c.alpha = U(rng);
        c.c0 = U(rng);
        if (k % 5) c.K = U(rng);
        c.mu_f = U(rng);
        c.g_y = -U(rng);
        c.out_dir = "out dir " + std::to_string(k);
        c.snapshot_every = 3;
        c.refinements = {4, 8, 16};
        c.c0_list = {U(rng), U(rng)};
        if (k % 2) c.c_stab = U(rng);
        c.write_vtk = k % 3 == 0;
        c.energy = k % 2 == 0;
        c.solver_tol = U(rng) * 1e-10;
        c.locking_line = U(rng) / 10;
        c.locking_max_extrema = k;
        RunConfig back = parse_config(to_text(c));
        EXPECT_EQ(back, c) << to_text(c);
    }
}

TEST(Config, OverrideAppliesAfterParse) {
    RunConfig c = parse_config("nx=4");
    apply_setting(c, "nx", "6", 0);
    EXPECT_EQ(c.nx, 6);
    EXPECT_THROW(apply_setting(c, "bogus", "1", 0), ConfigError);
}

TEST(Io, NumbersRoundTripWith17Digits) {
    EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1e6, 1e6);
    for (int k = 0; k < 1000; ++k) {
        double v = U(rng) * std::pow(10.0, static_cast<int>(k % 40) - 20);
        EXPECT_EQ(std::stod(csv_number(v)), v);
        EXPECT_EQ(std::stod(format_double(v)), v);
        EXPECT_LE(format_double(v).size(), csv_number(v).size());
    }
    EXPECT_EQ(format_double(1e-5), "1e-05");
}

TEST(Io, CsvWriterLayout) {
    std::ostringstream os;
    {
        CsvWriter w(os, {"a", "b", "c"});
        w.row({1.0, std::nullopt, 0.25});
        w.row_text({"x", "", "z"});
    }
    EXPECT_EQ(os.str(), "a,b,c\n1,,0.25\nx,,z\n");
    CsvWriter w(os, {"a", "b"});
    EXPECT_THROW(w.row({1.0}), Error);
}

TEST(Io, VtkFollowsLegacyGrammar) {
    Mesh mesh = build_rect_mesh(3, 2);
    DofMap dofs = make_dofmap(mesh);
    FieldState s;
    s.u = Vector::LinSpaced(dofs.num_u(), 0.0, 1.0);
    s.p = Vector::LinSpaced(dofs.num_scalar(), -1.0, 1.0);
    s.xi = 2 * s.p;
    s.eta = 3 * s.p;
    s.q = 4 * s.p;
    std::ostringstream os;
    write_vtk(os, mesh, dofs, s, "test fields");
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# vtk DataFile Version 2.0");
    std::getline(in, line);
    EXPECT_EQ(line, "test fields");
    std::getline(in, line);
    EXPECT_EQ(line, "ASCII");
    std::getline(in, line);
    EXPECT_EQ(line, "DATASET UNSTRUCTURED_GRID");

    const int nv = mesh.num_vertices(), nt = mesh.num_triangles();
    std::string kw, type;
    int n = 0;
    in >> kw >> n >> type;
    EXPECT_EQ(kw, "POINTS");
    EXPECT_EQ(n, nv);
    for (int v = 0; v < nv; ++v) {
        double x, y, z;
        in >> x >> y >> z;
        EXPECT_EQ(x, mesh.vertices[v].x());
        EXPECT_EQ(y, mesh.vertices[v].y());
        EXPECT_EQ(z, 0.0);
    }
    int size = 0;
    in >> kw >> n >> size;
    EXPECT_EQ(kw, "CELLS");
    EXPECT_EQ(n, nt);
    EXPECT_EQ(size, 4 * nt);
    for (int t = 0; t < nt; ++t) {
        int k, a, b, c;
        in >> k >> a >> b >> c;
        EXPECT_EQ(k, 3);
        EXPECT_EQ(a, mesh.triangles[t][0]);
        EXPECT_EQ(b, mesh.triangles[t][1]);
        EXPECT_EQ(c, mesh.triangles[t][2]);
    }
    in >> kw >> n;
    EXPECT_EQ(kw, "CELL_TYPES");
    EXPECT_EQ(n, nt);
    for (int t = 0; t < nt; ++t) {
        int ct;
        in >> ct;
        EXPECT_EQ(ct, 5);
    }
    in >> kw >> n;
    EXPECT_EQ(kw, "POINT_DATA");
    EXPECT_EQ(n, nv);

    std::string name;
    in >> kw >> name >> type;
    EXPECT_EQ(kw, "VECTORS");
    EXPECT_EQ(name, "displacement");
    for (int v = 0; v < nv; ++v) {
        double a, b, c;
        in >> a >> b >> c;
        EXPECT_EQ(a, s.u[dofs.u_dof(v, 0)]);
        EXPECT_EQ(b, s.u[dofs.u_dof(v, 1)]);
        EXPECT_EQ(c, 0.0);
    }
    const std::vector<std::pair<std::string, const Vector*>> scalars{
        {"pressure", &s.p}, {"xi", &s.xi}, {"eta", &s.eta}, {"q", &s.q}};
    for (const auto& [expected, field] : scalars) {
        int comps = 0;
        in >> kw >> name >> type >> comps;
        EXPECT_EQ(kw, "SCALARS");
        EXPECT_EQ(name, expected);
        EXPECT_EQ(comps, 1);
        in >> kw >> name;
        EXPECT_EQ(kw, "LOOKUP_TABLE");
        EXPECT_EQ(name, "default");
        for (int v = 0; v < nv; ++v) {
            double x;
            in >> x;
            EXPECT_EQ(x, (*field)[v]);
        }
    }
    in >> kw;
    EXPECT_TRUE(in.eof() || kw.empty());
}

TEST(Commands, Test1DefaultRun) {
    fs::path dir = scratch_dir("test1");
    RunConfig c;
    c.out_dir = dir.string();
    std::ostringstream console;
    ASSERT_EQ(cmd_run(c, console), 0);

    auto rows = lines_of(slurp(dir / "diagnostics.csv"));
    ASSERT_EQ(rows.size(), 101u);
    EXPECT_EQ(rows[0], join(diagnostics_columns()));
    EXPECT_EQ(rows[0], "step,t,J,S_cum,energy_residual,C_eta_res,C_xi_res,flux_res,err_u_L2,err_u_H1,"
                       "err_p_L2,err_p_H1");
    auto last = split(rows.back(), ',');
    ASSERT_EQ(last.size(), 12u);
    EXPECT_EQ(last[0], "100");
    EXPECT_NEAR(std::stod(last[1]), 1e-3, 1e-15);
    EXPECT_FALSE(last[8].empty());
    EXPECT_FALSE(last[11].empty());
    EXPECT_TRUE(last[5].empty()); // pressure data: the eta identity does not apply

    EXPECT_TRUE(fs::exists(dir / "fields_0.vtk"));
    EXPECT_TRUE(fs::exists(dir / "fields_100.vtk"));
    int snapshots = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".vtk") ++snapshots;
    EXPECT_EQ(snapshots, 11);
    std::string log = slurp(dir / "run.log");
    EXPECT_NE(log.find("benchmark=test1"), std::string::npos);
    EXPECT_NE(log.find("kappa1"), std::string::npos);
}

TEST(Commands, ZeroStepRunWritesHeaderOnly) {
    fs::path dir = scratch_dir("zero");
    RunConfig c = parse_config("benchmark=locking\nnx=4\nT=0\nwrite_vtk=false");
    c.out_dir = dir.string();
    std::ostringstream console;
    ASSERT_EQ(cmd_run(c, console), 0);
    EXPECT_EQ(slurp(dir / "diagnostics.csv"), join(diagnostics_columns()) + "\n");
}

TEST(Commands, IdenticalConfigsGiveIdenticalFiles) {
    std::string text = "benchmark=traction_flux\nnx=4\ndt=1e-3\nT=5e-3\ntheta=0\nsnapshot_every=2";
    std::ostringstream console;
    fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    RunConfig ca = parse_config(text), cb = parse_config(text);
    ca.out_dir = a.string();
    cb.out_dir = b.string();
    ASSERT_EQ(cmd_run(ca, console), 0);
    ASSERT_EQ(cmd_run(cb, console), 0);
    EXPECT_EQ(slurp(a / "diagnostics.csv"), slurp(b / "diagnostics.csv"));
    EXPECT_EQ(slurp(a / "fields_4.vtk"), slurp(b / "fields_4.vtk"));
    EXPECT_EQ(lines_of(slurp(a / "diagnostics.csv")).size(), 6u);
    // Both identities apply to the traction/flux configuration.
    auto row = split(lines_of(slurp(a / "diagnostics.csv"))[3], ',');
    EXPECT_LE(std::stod(row[5]), 1e-10);
    EXPECT_LE(std::stod(row[6]), 1e-10);
    EXPECT_LE(std::stod(row[7]), 1e-10);
}

TEST(Commands, ConvergenceFlagsPolynomialData) {
    fs::path dir = scratch_dir("poly");
    RunConfig c = parse_config("benchmark=polynomial\nrefinements=2,4\ndt=1e-3\nT=3e-3");
    c.out_dir = dir.string();
    std::ostringstream console;
    ASSERT_EQ(cmd_convergence(c, console), 0);
    auto rows = lines_of(slurp(dir / "rates.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], join(rates_columns()));
    for (int i = 1; i <= 2; ++i) {
        auto cells = split(rows[i], ',');
        EXPECT_EQ(cells.back(), "at_tolerance");
        EXPECT_TRUE(cells[2].empty());
        EXPECT_LE(std::stod(cells[1]), 1e-9);
    }
}

TEST(Commands, SingleMeshHasNoRates) {
    fs::path dir = scratch_dir("single");
    RunConfig c = parse_config("benchmark=test1\nrefinements=4\ndt=1e-4\nT=2e-4");
    c.out_dir = dir.string();
    std::ostringstream console;
    ASSERT_EQ(cmd_convergence(c, console), 0);
    auto rows = lines_of(slurp(dir / "rates.csv"));
    ASSERT_EQ(rows.size(), 2u);
    auto cells = split(rows[1], ',');
    EXPECT_TRUE(cells[2].empty());
    EXPECT_TRUE(cells[4].empty());
    EXPECT_TRUE(cells[6].empty());
    EXPECT_TRUE(cells[8].empty());
    EXPECT_GT(std::stod(cells[1]), 0.0);
}

TEST(Commands, SweepWritesConsecutivePairs) {
    fs::path dir = scratch_dir("sweep");
    RunConfig c = parse_config("benchmark=locking\nnx=4\ndt=1e-4\nT=2e-4\nc0_list=1e-3,1e-3,0");
    c.out_dir = dir.string();
    std::ostringstream console;
    ASSERT_EQ(cmd_sweep(c, console), 0);
    auto rows = lines_of(slurp(dir / "sweep.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], "c0_a,c0_b,dist_u,dist_eta,dist_xi");
    EXPECT_EQ(rows[1], "0.001,0.001,0,0,0");
    EXPECT_NE(split(rows[2], ',')[2], "0");
}

TEST(Binary, ExitCodes) {
    fs::path dir = scratch_dir("binary");
    fs::path cfg = dir / "bad.cfg";
    std::ofstream(cfg) << "nx=4\ntheta=2\n";
    EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + dir.string()), 2);

    fs::path good = dir / "good.cfg";
    std::ofstream(good) << "benchmark=locking\nnx=2\nT=0\n";
    EXPECT_EQ(run_cli("run --config " + good.string() + " --out " + (dir / "o").string() +
                      " --set write_vtk=false"),
              0);
    EXPECT_TRUE(fs::exists(dir / "o" / "diagnostics.csv"));
    EXPECT_FALSE(fs::exists(dir / "o" / "fields_0.vtk"));

    EXPECT_EQ(run_cli("run --config " + good.string() + " --set nosuchkey=1"), 2);
    EXPECT_NE(run_cli("frobnicate"), 0);
    EXPECT_NE(run_cli("run --config " + (dir / "missing.cfg").string()), 0);
}
