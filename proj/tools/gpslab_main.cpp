// Command-line front end.  Exit codes: 0 success, 2 configuration error,
// 3 numerical failure, 4 insufficient data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "gpslab/gpslab.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string zoo_name;
    std::string out_dir;
    std::int64_t seed = -1;
    int workers = 0;
    std::string format = "both";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_group) {
    if (needs_group) {
        cmd->add_option("--config", args.config_path,
                        "Path to a JSON configuration file");
        cmd->add_option("--zoo", args.zoo_name,
                        "Name of a built-in example group");
    }
    cmd->add_option("--out", args.out_dir,
                    "Directory for report.json and CSV outputs");
    cmd->add_option("--seed", args.seed, "Override the configuration seed");
    cmd->add_option("--workers", args.workers,
                    "Worker thread count (default: GPSLAB_WORKERS or hardware)");
    cmd->add_option("--format", args.format, "Output format")
        ->check(CLI::IsMember({"json", "csv", "both"}));
}

gpslab::Config load_config(const CommonArgs& args) {
    if (args.config_path.empty() == args.zoo_name.empty())
        throw gpslab::ConfigError(
            "exactly one of --config and --zoo is required");
    if (!args.zoo_name.empty()) return gpslab::zoo_config(args.zoo_name);
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in)
        throw gpslab::ConfigError("cannot open config file: " +
                                  args.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return gpslab::parse_config(buf.str());
}

gpslab::CmdOptions to_options(const CommonArgs& args) {
    gpslab::CmdOptions opts;
    opts.out_dir = args.out_dir;
    if (args.seed >= 0) opts.seed = static_cast<std::uint64_t>(args.seed);
    opts.workers = args.workers;
    opts.format = args.format;
    if (!opts.out_dir.empty())
        std::filesystem::create_directories(opts.out_dir);
    return opts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for weighted counting in free products "
                 "of matrix groups"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* c_check = app.add_subcommand(
        "check-gps", "Audit the cocycle and Gromov-product identities");
    CLI::App* c_enum = app.add_subcommand(
        "enumerate", "Count normal-form words in a magnitude ball");
    CLI::App* c_exp = app.add_subcommand(
        "exponent", "Estimate the critical exponent two ways");
    CLI::App* c_spr = app.add_subcommand(
        "spr", "Entropy-gap and positive-recurrence diagnostics");
    CLI::App* c_shadow = app.add_subcommand(
        "shadow-lemma", "Audit shadow masses against the predicted decay");
    CLI::App* c_schottky = app.add_subcommand(
        "schottky-check", "Sample-test the ping-pong inclusions");
    CLI::App* c_zoo =
        app.add_subcommand("zoo", "List or print built-in example configs");
    for (CLI::App* c : {c_check, c_enum, c_exp, c_spr, c_shadow, c_schottky})
        add_common(c, args, true);
    std::string zoo_print_name;
    c_zoo->add_option("name", zoo_print_name,
                      "Print this example's configuration as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_zoo->parsed()) {
            if (zoo_print_name.empty()) {
                for (const std::string& n : gpslab::zoo_names())
                    std::cout << n << "\n";
            } else {
                std::cout << gpslab::serialize_config(
                                 gpslab::zoo_config(zoo_print_name))
                                 .dump(2)
                          << "\n";
            }
            return 0;
        }

        const gpslab::Config cfg = load_config(args);
        const gpslab::CmdOptions opts = to_options(args);
        gpslab::Report rep;
        if (c_check->parsed())
            rep = gpslab::cmd_check_gps(cfg, opts);
        else if (c_enum->parsed())
            rep = gpslab::cmd_enumerate(cfg, opts);
        else if (c_exp->parsed())
            rep = gpslab::cmd_exponent(cfg, opts);
        else if (c_spr->parsed())
            rep = gpslab::cmd_spr(cfg, opts);
        else if (c_shadow->parsed())
            rep = gpslab::cmd_shadow_lemma(cfg, opts);
        else if (c_schottky->parsed())
            rep = gpslab::cmd_schottky_check(cfg, opts);
        std::cout << rep.to_json().dump(2) << "\n";
        return 0;
    } catch (const gpslab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gpslab::UnknownZooName& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gpslab::DisjointnessViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const gpslab::InsufficientData& e) {
        std::cerr << "insufficient data: " << e.what() << "\n";
        return 4;
    } catch (const gpslab::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
