#pragma once

#include "gp_pathwise/thompson.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gp {

enum class Experiment { wasserstein, thompson, dynamics };

std::string to_string(Experiment experiment);
Experiment parse_experiment(const std::string& name);

/// Invalid configuration text, key or value. Maps to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Flat key = value configuration shared by the three experiment families.
/// Keys an experiment does not use are still validated and serialized.
struct ExperimentConfig {
    Experiment experiment = Experiment::wasserstein;
    std::uint64_t seed = 0;
    Eigen::Index replicates = 16;
    std::string output_path = "results";
    bool record_timing = false;  // wall-clock columns break byte-identical reruns
    bool paper_scale = false;

    // Sizes. `m` caps the sparse inducing set (wasserstein) or sets it (dynamics).
    std::vector<Eigen::Index> n{16, 64, 256, 1024};
    std::vector<Eigen::Index> d{2, 4};
    Eigen::Index m = 1024;
    Eigen::Index basis = 1024;        // initial Fourier allocation l
    Eigen::Index test_points = 256;   // *
    Eigen::Index draws = 10000;
    Eigen::Index bases = 16;          // independent Fourier bases per sampler; draws are split evenly
    double noise_variance = 1e-3;

    // Thompson sampling.
    std::vector<TSSampler> samplers{TSSampler::function_space, TSSampler::weight_space, TSSampler::decoupled};
    Eigen::Index budget = 256;
    Eigen::Index batch = 2;

    // Dynamics.
    Eigen::Index horizon = 200;
    Eigen::Index trajectories = 500;
    Eigen::Index train_n = 2000;
    std::vector<Eigen::Index> timing_horizons{250, 500, 1000};
    Eigen::Index timing_trajectories = 4;
    Eigen::Index stride = 10;
    double epsilon = 1e-2;  // Sinkhorn regularization

    /// Desk-scale defaults for one experiment family.
    static ExperimentConfig defaults(Experiment experiment);
    /// Parses `key = value` lines ('#' starts a comment). The experiment key
    /// selects the defaults; unknown or repeated keys are rejected.
    static ExperimentConfig parse(const std::string& text);

    /// Sets one key from its text form. Throws ConfigError.
    void set(const std::string& key, const std::string& value);
    /// Restores the full-size magnitudes of the original experiments.
    void apply_paper_scale();
    void validate() const;

    /// Every key in a fixed order; parse(serialize()) reproduces the config.
    std::string serialize() const;
    /// FNV-1a 64 of serialize() with output_path blanked.
    std::uint64_t hash() const;

    bool operator==(const ExperimentConfig& other) const = default;
};

/// A named table of preformatted cells.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
};

/// Shortest round-trip text form of a double.
std::string format_number(double value);
std::string format_number(Eigen::Index value);

/// UTF-8 CSV: a comment line with the config hash and table name, the
/// header, then one line per row.
std::string to_csv(const Table& table, std::uint64_t config_hash);
std::string to_json(const Table& table, std::uint64_t config_hash);

/// Per replicate, dimension and training size: W2 between each sampler's
/// empirical moments at the test points and the exact posterior.
std::vector<Table> run_wasserstein_experiment(const ExperimentConfig& cfg);
/// Per dimension, replicate and sampler: incumbent and regret per iteration.
std::vector<Table> run_thompson_experiment(const ExperimentConfig& cfg);
/// Model fit, voltage quantile traces, Sinkhorn series and (optionally) timing.
std::vector<Table> run_dynamics_experiment(const ExperimentConfig& cfg);
std::vector<Table> run_experiment(const ExperimentConfig& cfg);

/// Writes <dir>/<experiment>_<table>.csv (and .json when asked) per table.
std::vector<std::filesystem::path> write_tables(const std::vector<Table>& tables, const ExperimentConfig& cfg,
                                                const std::filesystem::path& dir, bool json = false);

}  // namespace gp
