#include "gp_pathwise/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw gp::ConfigError("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

// Remaining arguments must be "--key value" or "--key=value" pairs.
void apply_overrides(gp::ExperimentConfig& cfg, const std::vector<std::string>& extras) {
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& arg = extras[i];
        if (arg.rfind("--", 0) != 0) throw gp::ConfigError("unexpected argument '" + arg + "'");
        std::string key = arg.substr(2), value;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size()) throw gp::ConfigError("option '" + arg + "' needs a value");
            value = extras[++i];
        }
        std::replace(key.begin(), key.end(), '-', '_');
        cfg.set(key, value);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pathwise GP sampling experiments"};
    app.allow_extras();
    std::string experiment, config_path, out_dir;
    std::uint64_t seed = 0;
    bool paper_scale = false, json = false;
    app.add_option("experiment", experiment, "wasserstein, thompson or dynamics")->required();
    app.add_option("--config", config_path, "flat key = value config file");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out_dir, "output directory (default: output_path key)");
    app.add_flag("--paper-scale", paper_scale, "full-size magnitudes; explicit --key overrides still apply");
    app.add_flag("--json", json, "also write a JSON mirror of every table");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        gp::ExperimentConfig cfg = gp::ExperimentConfig::defaults(gp::parse_experiment(experiment));
        if (!config_path.empty()) {
            cfg = gp::ExperimentConfig::parse(read_file(config_path));
            if (gp::to_string(cfg.experiment) != experiment)
                throw gp::ConfigError("config file is for experiment '" + gp::to_string(cfg.experiment) + "'");
        }
        if (paper_scale) cfg.apply_paper_scale();
        apply_overrides(cfg, app.remaining());
        if (app.count("--seed")) cfg.seed = seed;
        if (!out_dir.empty()) cfg.output_path = out_dir;
        cfg.validate();

        const auto tables = gp::run_experiment(cfg);
        for (const auto& path : gp::write_tables(tables, cfg, cfg.output_path, json)) std::cout << path.string() << "\n";
        return 0;
    } catch (const gp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
