// levyou <command> [--config FILE] [--<key> VALUE ...]
//
// Exit status: 0 all criteria pass, 1 a criterion failed, 2 usage or config error.

#include "levyou/harness/config.hpp"
#include "levyou/harness/run.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <map>

namespace {

constexpr int kCriterionFailure = 1;
constexpr int kUsageError = 2;

}  // namespace

int main(int argc, char** argv) {
    using namespace levyou;
    using namespace levyou::harness;

    CLI::App app{"Levy-driven Ornstein-Uhlenbeck experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    std::map<std::string, std::string> config_files;
    std::map<std::string, std::map<std::string, std::string>> overrides;
    for (const auto& [command, name] : kCommands) {
        const std::string sub_name(name);
        auto* sub = app.add_subcommand(sub_name, "run the " + sub_name + " experiment");
        sub->add_option("--config", config_files[sub_name], "flat key = value configuration file");
        auto& values = overrides[sub_name];
        for (const auto& key : kConfigKeys) {
            if (key.name == "command") continue;
            const std::string flag = "--" + std::string(key.name);
            sub->add_option(flag, values[std::string(key.name)], std::string(key.help));
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        RawConfig raw;
        if (const auto& file = config_files[name]; !file.empty()) {
            std::ifstream in(file);
            if (!in) throw ConfigError("config", "cannot open " + file);
            raw = parse_key_values(in);
            if (auto it = raw.find("command"); it != raw.end() && it->second != name) {
                throw ConfigError("command", "config file says '" + it->second + "' but the subcommand is " + name);
            }
        }
        set_key(raw, "command", name);
        for (const auto& [key, value] : overrides[name]) {
            if (sub->count("--" + key) > 0) set_key(raw, key, value);
        }
        const auto config = build_config(raw);
        const auto manifest = run(config);
        for (const auto& c : manifest.criteria) {
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.id << ": " << c.detail << '\n';
        }
        std::cout << "manifest: " << (std::filesystem::path(config.out) / "manifest.json").string() << '\n';
        return manifest.passed() ? 0 : kCriterionFailure;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
    } catch (const FormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
    } catch (const ContractViolation& e) {
        std::cerr << "invalid request: " << e.what() << '\n';
    } catch (const DomainError& e) {
        std::cerr << "invalid request: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return kUsageError;
}
