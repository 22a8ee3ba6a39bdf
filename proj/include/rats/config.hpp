#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rats/acquisition.hpp"
#include "rats/bench_synthetic.hpp"
#include "rats/bench_sinusoid.hpp"

namespace rats {

// Flat `key = value` config file: numbers, strings, bools and nested
// bracketed float lists; '#' starts a comment. Typed getters consume keys so
// leftover keys can be reported as errors (typos in sweep scripts).
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback);
    std::string require_string(const std::string& key);
    double get_double(const std::string& key, double fallback);
    int get_int(const std::string& key, int fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);
    std::vector<std::vector<double>> get_nested(const std::string& key);
    std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback);

    // Throws listing every key that was never consumed.
    void reject_unknown_keys() const;

    void set(const std::string& key, const std::string& value);

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

enum class BenchmarkKind { Synthetic, Sinusoid, Concentration };

// Everything a run needs, resolved from a config file plus defaults.
struct RunConfig {
    BenchmarkKind benchmark = BenchmarkKind::Sinusoid;
    std::string out_dir = "runs/out";
    std::uint64_t train_seed = 0;
    std::uint64_t validation_seed = 1234;
    int rounds = 50;
    int checkpoint_every = 1;

    AcquisitionConfig acquisition;
    std::vector<std::vector<double>> dims;

    // risk model
    int latent_dim = 10;
    double beta = 1.0;
    int fit_steps = 100;
    double risk_lr = 1e-3;
    int mc_passes = 10;

    // sinusoid benchmark
    int k_support = 10;
    int n_query = 10;
    int inner_steps = 1;
    double inner_lr = 1e-3;
    double outer_lr = 1e-3;
    int validation_tasks = 1000;
    int validation_every = 100;

    // synthetic benchmark
    std::string landscape = "gaussian_bump";
    std::vector<double> peak;
    double width = 0.15;
    double amplitude = 1.0;
    std::vector<double> drift;
    int probe_points = 64;
    double reducer_radius = 0.06;
    double reducer_factor = 0.95;
    int entropy_bins = 32;

    // concentration experiment
    double concentration_eps = 0.011750309741540454;
    std::vector<int> pseudo_batch_grid = {8, 32, 128, 512};
    int trials = 10000;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from(ConfigFile& file);

// Resolved-config echo written into the run directory, parseable by the
// same grammar.
std::string render_config(const RunConfig& config);

SamplerComparisonConfig to_comparison_config(const RunConfig& config);
SinusoidExperimentConfig to_sinusoid_config(const RunConfig& config);
ConcentrationExperimentConfig to_concentration_config(const RunConfig& config);

}  // namespace rats
