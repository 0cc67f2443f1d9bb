#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qkd3/commands.hpp"

namespace {

struct Options {
    std::string config_path;
    std::optional<std::string> out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<unsigned> threads;
};

nlohmann::json load_config(const Options& opt) {
    nlohmann::json cfg = nlohmann::json::object();
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) {
            throw std::invalid_argument("cannot open config file '" + opt.config_path + "'");
        }
        cfg = nlohmann::json::parse(in);
        if (!cfg.is_object()) {
            throw std::invalid_argument("config file must hold a JSON object");
        }
    }
    if (opt.seed) cfg["seed"] = *opt.seed;
    if (opt.trials) cfg["trials"] = *opt.trials;
    if (opt.threads) cfg["threads"] = *opt.threads;
    cfg["format"] = opt.format;
    if (opt.out) cfg["out"] = *opt.out;
    return cfg;
}

int run(const std::string& name, const Options& opt) {
    nlohmann::json cfg;
    qkd3::Table table;
    try {
        cfg = load_config(opt);
        table = qkd3::cli::commands().at(name)(cfg);
    } catch (const nlohmann::json::exception& ex) {
        std::cerr << "qkd3 " << name << ": configuration error: " << ex.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "qkd3 " << name << ": configuration error: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "qkd3 " << name << ": " << ex.what() << '\n';
        return 2;
    }

    const std::string text = qkd3::render(table, opt.format);
    if (opt.out) {
        std::ofstream out(*opt.out);
        if (!out) {
            std::cerr << "qkd3 " << name << ": cannot write '" << *opt.out << "'\n";
            return 2;
        }
        out << text;
    } else {
        std::cout << text;
    }
    for (const auto& failure : table.failures) {
        std::cerr << "qkd3 " << name << ": row failed: " << failure << '\n';
    }
    return table.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-stage multi-photon QKD simulator"};
    app.set_version_flag("--version", std::string(qkd3::kToolVersion));
    app.require_subcommand(1);

    Options opt;
    std::string chosen;
    for (const auto& [name, fn] : qkd3::cli::commands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output file (default: stdout)");
        sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--seed", opt.seed, "master seed");
        sub->add_option("--trials", opt.trials, "Monte Carlo trials per point");
        sub->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
        sub->callback([&chosen, n = name] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run(chosen, opt);
}
