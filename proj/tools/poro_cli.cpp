#include "poro/commands.hpp"
#include "poro/config.hpp"
#include "poro/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

poro::RunConfig load(const std::string& path, const std::string& out,
                     const std::vector<std::string>& overrides)
{
    std::string text;
    if (!path.empty()) {
        std::ifstream f(path, std::ios::binary);
        if (!f) {
            throw poro::Error("cannot read config '" + path + "'");
        }
        std::ostringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }
    poro::RunConfig c = poro::parse_config(text);
    for (std::size_t i = 0; i < overrides.size(); ++i) {
        const auto eq = overrides[i].find('=');
        if (eq == std::string::npos) {
            throw poro::ConfigError("--set expects key=value, got '" + overrides[i] + "'", 0);
        }
        poro::apply_setting(c, overrides[i].substr(0, eq), overrides[i].substr(eq + 1), 0);
    }
    if (!out.empty()) {
        c.out_dir = out;
    }
    c.validate();
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Finite element solver for quasi-static poroelasticity"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value configuration file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--set", overrides, "override one key, applied after the file")->take_all();
    };
    CLI::App* run = app.add_subcommand("run", "time-step one benchmark and write fields and diagnostics");
    CLI::App* conv = app.add_subcommand("convergence", "mesh refinement study (rates.csv)");
    CLI::App* sweep = app.add_subcommand("sweep", "storage coefficient sweep (sweep.csv)");
    add_common(run);
    add_common(conv);
    add_common(sweep);

    CLI11_PARSE(app, argc, argv);

    try {
        const poro::RunConfig c = load(config_path, out_dir, overrides);
        if (run->parsed()) {
            return poro::cmd_run(c, std::cout);
        }
        if (conv->parsed()) {
            return poro::cmd_convergence(c, std::cout);
        }
        return poro::cmd_sweep(c, std::cout);
    } catch (const poro::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
