#include "poro/config.hpp"

#include "poro/error.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace poro {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v, int line)
{
    double out = 0.0;
    const char* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, out);
    if (v.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
        throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects a number, got '" + v + "'", line);
    }
    return out;
}

int parse_int(const std::string& key, const std::string& v, int line)
{
    int out = 0;
    const char* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, out);
    if (v.empty() || res.ec != std::errc() || res.ptr != end) {
        throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects an integer, got '" + v + "'", line);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v, int line)
{
    if (v == "true" || v == "1" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "off") {
        return false;
    }
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects true or false", line);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, F&& one)
{
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(one(trim(item)));
    }
    return out;
}

[[noreturn]] void domain_error(const std::string& key, const std::string& why, int line)
{
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' " + why, line);
}

double positive(const std::string& key, double v, int line)
{
    if (!(v > 0.0)) {
        domain_error(key, "must be positive", line);
    }
    return v;
}

double nonnegative(const std::string& key, double v, int line)
{
    if (!(v >= 0.0)) {
        domain_error(key, "must be nonnegative", line);
    }
    return v;
}

int at_least_one(const std::string& key, int v, int line)
{
    if (v < 1) {
        domain_error(key, "must be at least 1", line);
    }
    return v;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&, int)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"benchmark", [](RunConfig& c, const std::string& k, const std::string& v, int l) {
             if (!is_benchmark_name(v)) {
                 domain_error(k, "names an unknown benchmark '" + v + "'", l);
             }
             c.benchmark = v;
         }},
        {"nx", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.nx = at_least_one(k, parse_int(k, v, l), l); }},
        {"ny", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.ny = at_least_one(k, parse_int(k, v, l), l); }},
        {"dt", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.dt = positive(k, parse_double(k, v, l), l); }},
        {"T", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.T = nonnegative(k, parse_double(k, v, l), l); }},
        {"theta", [](RunConfig& c, const std::string& k, const std::string& v, int l) {
             const int t = parse_int(k, v, l);
             if (t != 0 && t != 1) {
                 domain_error(k, "must be 0 or 1", l);
             }
             c.theta = t;
         }},
        {"lambda", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.lambda = nonnegative(k, parse_double(k, v, l), l); }},
        {"mu", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.mu = positive(k, parse_double(k, v, l), l); }},
        {"alpha", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.alpha = positive(k, parse_double(k, v, l), l); }},
        {"c0", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.c0 = nonnegative(k, parse_double(k, v, l), l); }},
        {"K", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.K = positive(k, parse_double(k, v, l), l); }},
        {"mu_f", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.mu_f = positive(k, parse_double(k, v, l), l); }},
        {"rho_f", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.rho_f = nonnegative(k, parse_double(k, v, l), l); }},
        {"g_x", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.g_x = parse_double(k, v, l); }},
        {"g_y", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.g_y = parse_double(k, v, l); }},
        {"out_dir", [](RunConfig& c, const std::string& k, const std::string& v, int l) {
             if (v.empty()) {
                 domain_error(k, "must not be empty", l);
             }
             c.out_dir = v;
         }},
        {"snapshot_every", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.snapshot_every = at_least_one(k, parse_int(k, v, l), l); }},
        {"refinements", [](RunConfig& c, const std::string& k, const std::string& v, int l) {
             c.refinements = parse_list<int>(v, [&](const std::string& s) { return at_least_one(k, parse_int(k, s, l), l); });
         }},
        {"c0_list", [](RunConfig& c, const std::string& k, const std::string& v, int l) {
             c.c0_list = parse_list<double>(v, [&](const std::string& s) { return nonnegative(k, parse_double(k, s, l), l); });
         }},
        {"c_stab", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.c_stab = positive(k, parse_double(k, v, l), l); }},
        {"write_vtk", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.write_vtk = parse_bool(k, v, l); }},
        {"energy", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.energy = parse_bool(k, v, l); }},
        {"conservation", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.conservation = parse_bool(k, v, l); }},
        {"errors", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.errors = parse_bool(k, v, l); }},
        {"solver_tol", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.solver_tol = positive(k, parse_double(k, v, l), l); }},
        {"energy_tol", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.energy_tol = positive(k, parse_double(k, v, l), l); }},
        {"conservation_tol", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.conservation_tol = positive(k, parse_double(k, v, l), l); }},
        {"locking_line", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.locking_line = parse_double(k, v, l); }},
        {"locking_flat_tol", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.locking_flat_tol = nonnegative(k, parse_double(k, v, l), l); }},
        {"locking_max_extrema", [](RunConfig& c, const std::string& k, const std::string& v, int l) {
             const int n = parse_int(k, v, l);
             if (n < 0) {
                 domain_error(k, "must be nonnegative", l);
             }
             c.locking_max_extrema = n;
         }},
        {"locking_max_undershoot", [](RunConfig& c, const std::string& k, const std::string& v, int l) { c.locking_max_undershoot = nonnegative(k, parse_double(k, v, l), l); }},
    };
    return table;
}

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value, int line)
{
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'", line);
    }
    it->second(config, key, value, line);
}

RunConfig parse_config(const std::string& text)
{
    RunConfig c;
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) + ": expected key=value", line);
        }
        apply_setting(c, trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line);
    }
    c.validate();
    return c;
}

MaterialParams RunConfig::resolve_params() const
{
    MaterialParams p = default_params(benchmark);
    if (lambda) p.lambda = *lambda;
    if (mu) p.mu = *mu;
    if (alpha) p.alpha = *alpha;
    if (c0) p.c0 = *c0;
    if (K) p.K = *K;
    if (mu_f) p.mu_f = *mu_f;
    if (rho_f) p.rho_f = *rho_f;
    if (g_x) p.g.x() = *g_x;
    if (g_y) p.g.y() = *g_y;
    return p;
}

Benchmark RunConfig::resolve_benchmark() const { return make_benchmark(benchmark, resolve_params()); }

TimeScheme RunConfig::resolve_scheme() const
{
    const Benchmark b = make_benchmark(benchmark, default_params(benchmark));
    TimeScheme s;
    s.theta = theta;
    s.dt = dt ? *dt : b.default_dt;
    s.T = T ? *T : b.T;
    return s;
}

int RunConfig::resolve_nx() const
{
    return nx ? *nx : make_benchmark(benchmark, default_params(benchmark)).default_cells;
}

int RunConfig::resolve_ny() const { return ny ? *ny : resolve_nx(); }

void RunConfig::validate() const
{
    try {
        resolve_params().validate();
        derive_kappas(resolve_params());
        resolve_scheme().validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what(), 0);
    }
}

std::string to_text(const RunConfig& c)
{
    std::ostringstream os;
    const auto opt = [&](const char* k, const auto& v) {
        if (v) {
            if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) {
                os << k << '=' << format_double(*v) << '\n';
            } else {
                os << k << '=' << *v << '\n';
            }
        }
    };
    os << "benchmark=" << c.benchmark << '\n';
    opt("nx", c.nx);
    opt("ny", c.ny);
    opt("dt", c.dt);
    opt("T", c.T);
    os << "theta=" << c.theta << '\n';
    opt("lambda", c.lambda);
    opt("mu", c.mu);
    opt("alpha", c.alpha);
    opt("c0", c.c0);
    opt("K", c.K);
    opt("mu_f", c.mu_f);
    opt("rho_f", c.rho_f);
    opt("g_x", c.g_x);
    opt("g_y", c.g_y);
    os << "out_dir=" << c.out_dir << '\n';
    opt("snapshot_every", c.snapshot_every);
    if (!c.refinements.empty()) {
        os << "refinements=";
        for (std::size_t i = 0; i < c.refinements.size(); ++i) {
            os << (i ? "," : "") << c.refinements[i];
        }
        os << '\n';
    }
    if (!c.c0_list.empty()) {
        os << "c0_list=";
        for (std::size_t i = 0; i < c.c0_list.size(); ++i) {
            os << (i ? "," : "") << format_double(c.c0_list[i]);
        }
        os << '\n';
    }
    opt("c_stab", c.c_stab);
    os << "write_vtk=" << (c.write_vtk ? "true" : "false") << '\n';
    os << "energy=" << (c.energy ? "true" : "false") << '\n';
    os << "conservation=" << (c.conservation ? "true" : "false") << '\n';
    os << "errors=" << (c.errors ? "true" : "false") << '\n';
    os << "solver_tol=" << format_double(c.solver_tol) << '\n';
    os << "energy_tol=" << format_double(c.energy_tol) << '\n';
    os << "conservation_tol=" << format_double(c.conservation_tol) << '\n';
    os << "locking_line=" << format_double(c.locking_line) << '\n';
    os << "locking_flat_tol=" << format_double(c.locking_flat_tol) << '\n';
    os << "locking_max_extrema=" << c.locking_max_extrema << '\n';
    os << "locking_max_undershoot=" << format_double(c.locking_max_undershoot) << '\n';
    return os.str();
}

} // namespace poro
