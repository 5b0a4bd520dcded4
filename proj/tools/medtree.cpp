// Command-line experiment runner.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "medtree/cli.hpp"
#include "medtree/version.hpp"

int main(int argc, char** argv)
{
    using namespace medtree;
    CLI::App app{"Median process and majority dynamics experiments on the "
                 "3-regular tree"};
    app.set_version_flag("--version", artifact_version);
    app.require_subcommand(1);

    struct Flags
    {
        std::string config_file;
        std::string output;
        std::vector<std::string> sets;
        std::map<std::string, std::string> direct;
    };
    std::map<std::string, Flags> flags;

    for (const auto& kind : experiment_kinds())
    {
        auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        Flags& f = flags[kind];
        sub->add_option("-c,--config", f.config_file, "key=value config file")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--output", f.output,
                        std::string("output directory (default $")
                            + output_dir_env + " or ./medtree-out)");
        sub->add_option("--set", f.sets, "override, as key=value");
        for (const char* key : {"seed", "replicas", "radius", "horizon", "p"})
            sub->add_option(std::string("--") + key, f.direct[key],
                            "override config key '" + std::string(key) + "'");
    }
    CLI11_PARSE(app, argc, argv);

    auto* sub = app.get_subcommands().front();
    const std::string kind = sub->get_name();
    Flags& f = flags[kind];
    try
    {
        ExperimentConfig config;
        if (!f.config_file.empty())
        {
            std::ifstream in(f.config_file);
            std::stringstream text;
            text << in.rdbuf();
            config = parse_config(text.str());
            if (config.has("kind") && to_string(config.kind) != kind)
                throw ConfigError({"config file is for kind '"
                                   + to_string(config.kind)
                                   + "' but the subcommand is '" + kind + "'"});
        }
        apply_override(config, "kind", kind);
        for (const auto& [key, value] : f.direct)
            if (sub->count("--" + key) > 0)
                apply_override(config, key, value);
        for (const auto& kv : f.sets)
        {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError({"--set expects key=value, got '" + kv + "'"});
            apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
        std::filesystem::path out
            = f.output.empty() ? default_output_dir()
                             : std::filesystem::path(f.output);
        RunResult r = run_experiment(config, out);
        (r.exit_code == 0 ? std::cout : std::cerr) << r.summary << '\n';
        if (r.exit_code != 1)
            std::cout << "wrote " << r.files.size() << " files to "
                      << out.string() << '\n';
        return r.exit_code;
    }
    catch (const ConfigError& e)
    {
        std::cerr << e.what() << '\n';
        return 1;
    }
}
