#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpsim/cli.hpp"
#include "json.hpp"

int main(int argc, char** argv) {
    CLI::App app{"finite-range contact process simulator"};
    app.require_subcommand(0, 1);

    std::string config_path, out_root = "runs";
    std::string seed_str, replicas_str;
    std::vector<std::string> sets;
    bool window_doubling = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_option("--seed", seed_str, "master seed");
        sub->add_option("--replicas", replicas_str, "number of replicas");
        sub->add_option("--out", out_root, "output root directory");
        sub->add_option("--set", sets, "override a config key (key=value, repeatable)");
        sub->add_flag("--window-doubling", window_doubling,
                      "rerun with a doubled window and record a stability verdict");
    };

    std::vector<CLI::App*> subs;
    for (const auto& name : cpsim::cli::command_names()) {
        auto* sub = app.add_subcommand(name);
        add_common(sub);
        subs.push_back(sub);
    }
    auto* defaults = app.add_subcommand("defaults", "print the config default table");

    CLI11_PARSE(app, argc, argv);

    if (defaults->parsed()) {
        for (const auto& [k, v] : cpsim::cli::default_table())
            std::printf("%-14s %s\n", k.c_str(), v.c_str());
        return 0;
    }
    const auto parsed = app.get_subcommands();
    if (parsed.empty()) {
        std::fprintf(stderr, "%s\n", app.help().c_str());
        return 1;
    }
    const std::string command = parsed.front()->get_name();

    try {
        std::map<std::string, std::string> cfg;
        if (!config_path.empty()) cfg = cpsim::cli::parse_config_file(config_path);
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value");
            cfg[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        if (!seed_str.empty()) cfg["seed"] = seed_str;
        if (!replicas_str.empty()) cfg["replicas"] = replicas_str;

        const auto res = cpsim::cli::execute(command, cfg, out_root, window_doubling);
        std::printf("%s\n", res.run_dir.c_str());
        return res.status;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}, {"command", command}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
}
