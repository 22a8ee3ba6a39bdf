#include "rats/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rats {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: field '" + key + "' expects a number, got '" + raw + "'");
    }
}

std::vector<std::string> split_top_level(const std::string& raw) {
    // split a bracketed list "[a, b, [c, d]]" on top-level commas
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : raw) {
        if (c == '[') {
            if (depth > 0) cur += c;
            ++depth;
        } else if (c == ']') {
            --depth;
            if (depth > 0) cur += c;
            if (depth == 0) break;
        } else if (c == ',' && depth == 1) {
            out.push_back(trim(cur));
            cur.clear();
        } else if (depth >= 1) {
            cur += c;
        }
    }
    const std::string last = trim(cur);
    if (!last.empty()) out.push_back(last);
    return out;
}

std::string render_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile file;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
        if (file.values_.count(key))
            throw std::invalid_argument("config: duplicate key '" + key + "'");
        file.values_[key] = value;
    }
    return file;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
}

bool ConfigFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string ConfigFile::require_string(const std::string& key) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("config: missing required field '" + key + "'");
    return it->second;
}

double ConfigFile::get_double(const std::string& key, double fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : parse_double(key, it->second);
}

int ConfigFile::get_int(const std::string& key, int fallback) {
    const double v = get_double(key, static_cast<double>(fallback));
    if (v != std::floor(v))
        throw std::invalid_argument("config: field '" + key + "' expects an integer");
    return static_cast<int>(v);
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoull(it->second);
    } catch (...) {
        throw std::invalid_argument("config: field '" + key + "' expects a non-negative integer");
    }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw std::invalid_argument("config: field '" + key + "' expects true or false");
}

std::vector<double> ConfigFile::get_doubles(const std::string& key,
                                            const std::vector<double>& fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const std::string& item : split_top_level(it->second)) out.push_back(parse_double(key, item));
    return out;
}

std::vector<std::vector<double>> ConfigFile::get_nested(const std::string& key) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return {};
    std::vector<std::vector<double>> out;
    for (const std::string& item : split_top_level(it->second)) {
        std::vector<double> row;
        if (!item.empty() && item.front() == '[')
            for (const std::string& cell : split_top_level(item)) row.push_back(parse_double(key, cell));
        else
            row.push_back(parse_double(key, item));
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<int> ConfigFile::get_ints(const std::string& key, const std::vector<int>& fallback) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<int> out;
    for (const std::string& item : split_top_level(it->second)) {
        const double v = parse_double(key, item);
        if (v != std::floor(v))
            throw std::invalid_argument("config: field '" + key + "' expects integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

void ConfigFile::reject_unknown_keys() const {
    std::string unknown;
    for (const auto& [key, value] : values_)
        if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty())
        throw std::invalid_argument("config: unknown field(s): " + unknown);
}

void ConfigFile::set(const std::string& key, const std::string& value) { values_[key] = value; }

RunConfig run_config_from(ConfigFile& file) {
    RunConfig config;
    const std::string bench = file.get_string("benchmark", "sinusoid");
    if (bench == "synthetic")
        config.benchmark = BenchmarkKind::Synthetic;
    else if (bench == "sinusoid")
        config.benchmark = BenchmarkKind::Sinusoid;
    else if (bench == "concentration")
        config.benchmark = BenchmarkKind::Concentration;
    else
        throw std::invalid_argument("config: field 'benchmark' must be synthetic, sinusoid or concentration");

    config.out_dir = file.get_string("out_dir", config.out_dir);
    config.train_seed = file.get_u64("train_seed", config.train_seed);
    config.validation_seed = file.get_u64("validation_seed", config.validation_seed);
    config.rounds = file.get_int("rounds", config.benchmark == BenchmarkKind::Sinusoid ? 2000 : 50);
    config.checkpoint_every = file.get_int("checkpoint_every", config.checkpoint_every);

    config.acquisition.strategy = strategy_from_string(file.get_string("strategy", "erm"));
    config.acquisition.batch_size =
        file.get_int("batch_size", config.benchmark == BenchmarkKind::Sinusoid ? 16 : 8);
    int default_factor = 1;
    switch (config.acquisition.strategy) {
        case Strategy::Erm:
        case Strategy::Gdrm: default_factor = 1; break;
        case Strategy::Drm: default_factor = 2; break;
        case Strategy::MptsUcb: default_factor = 2; break;
        case Strategy::Pdts: default_factor = config.benchmark == BenchmarkKind::Sinusoid ? 32 : 64; break;
    }
    const int factor = file.get_int("pseudo_batch_factor", default_factor);
    if (factor < 1) throw std::invalid_argument("config: field 'pseudo_batch_factor' must be >= 1");
    config.acquisition.pseudo_batch = config.acquisition.batch_size * factor;
    config.acquisition.gamma0 = file.get_double("gamma0", 1.0);
    config.acquisition.gamma1 = file.get_double("gamma1", 1.0);
    config.acquisition.gamma_div = file.get_double("gamma_div", 1.0);
    config.acquisition.gdrm_eta = file.get_double("gdrm_eta", 0.001);
    config.acquisition.mix_rho = file.get_double("mix_rho", 0.5);
    validate(config.acquisition);

    config.dims = file.get_nested("dims");

    // sinusoid keeps the 10-wide architecture default; the 1-D synthetic
    // bench works far better with a narrow latent (frozen after pilot runs)
    config.latent_dim =
        file.get_int("latent_dim", config.benchmark == BenchmarkKind::Sinusoid ? 10 : 2);
    config.beta = file.get_double("beta", config.beta);
    config.fit_steps =
        file.get_int("fit_steps", config.benchmark == BenchmarkKind::Sinusoid ? 8 : 100);
    config.risk_lr =
        file.get_double("risk_lr", config.benchmark == BenchmarkKind::Sinusoid ? 5e-4 : 5e-3);
    config.mc_passes = file.get_int("mc_passes", config.mc_passes);

    config.k_support = file.get_int("k_support", config.k_support);
    config.n_query = file.get_int("n_query", config.n_query);
    config.inner_steps = file.get_int("inner_steps", config.inner_steps);
    config.inner_lr = file.get_double("inner_lr", config.inner_lr);
    config.outer_lr = file.get_double("outer_lr", config.outer_lr);
    config.validation_tasks = file.get_int("validation_tasks", config.validation_tasks);
    config.validation_every = file.get_int("validation_every", config.validation_every);

    config.landscape = file.get_string("landscape", config.landscape);
    config.peak = file.get_doubles("peak", config.peak);
    // concentration defaults pair (width, amplitude, eps) so the measured
    // neighborhood probability lands at 0.1
    const bool conc = config.benchmark == BenchmarkKind::Concentration;
    config.width = file.get_double("width", conc ? 0.1 : config.width);
    config.amplitude = file.get_double("amplitude", conc ? 0.1 : config.amplitude);
    config.drift = file.get_doubles("drift", config.drift);
    config.probe_points = file.get_int("probe_points", config.probe_points);
    config.reducer_radius = file.get_double("reducer_radius", config.reducer_radius);
    config.reducer_factor = file.get_double("reducer_factor", config.reducer_factor);
    config.entropy_bins = file.get_int("entropy_bins", config.entropy_bins);

    config.concentration_eps = file.get_double("concentration_eps", config.concentration_eps);
    config.pseudo_batch_grid = file.get_ints("pseudo_batch_grid", config.pseudo_batch_grid);
    config.trials = file.get_int("trials", config.trials);

    file.reject_unknown_keys();

    if (config.rounds < 1) throw std::invalid_argument("config: field 'rounds' must be >= 1");
    if (config.dims.empty()) {
        if (config.benchmark == BenchmarkKind::Sinusoid)
            config.dims = {{0.1, 5.0}, {0.0, M_PI}};
        else
            config.dims = {{0.0, 1.0}};
    }
    for (const auto& row : config.dims)
        if (row.size() != 2)
            throw std::invalid_argument("config: field 'dims' expects [[lo, hi], ...] pairs");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    ConfigFile file = ConfigFile::parse_file(path);
    return run_config_from(file);
}

std::string render_config(const RunConfig& config) {
    std::ostringstream out;
    const char* bench = config.benchmark == BenchmarkKind::Synthetic      ? "synthetic"
                        : config.benchmark == BenchmarkKind::Sinusoid     ? "sinusoid"
                                                                          : "concentration";
    out << "benchmark = " << bench << "\n";
    out << "strategy = " << to_string(config.acquisition.strategy) << "\n";
    out << "out_dir = " << config.out_dir << "\n";
    out << "train_seed = " << config.train_seed << "\n";
    out << "validation_seed = " << config.validation_seed << "\n";
    out << "rounds = " << config.rounds << "\n";
    out << "checkpoint_every = " << config.checkpoint_every << "\n";
    out << "batch_size = " << config.acquisition.batch_size << "\n";
    out << "pseudo_batch_factor = "
        << config.acquisition.pseudo_batch / config.acquisition.batch_size << "\n";
    out << "gamma0 = " << render_double(config.acquisition.gamma0) << "\n";
    out << "gamma1 = " << render_double(config.acquisition.gamma1) << "\n";
    out << "gamma_div = " << render_double(config.acquisition.gamma_div) << "\n";
    out << "gdrm_eta = " << render_double(config.acquisition.gdrm_eta) << "\n";
    out << "mix_rho = " << render_double(config.acquisition.mix_rho) << "\n";
    out << "dims = [";
    for (std::size_t i = 0; i < config.dims.size(); ++i) {
        out << (i ? ", [" : "[") << render_double(config.dims[i][0]) << ", "
            << render_double(config.dims[i][1]) << "]";
    }
    out << "]\n";
    out << "latent_dim = " << config.latent_dim << "\n";
    out << "beta = " << render_double(config.beta) << "\n";
    out << "fit_steps = " << config.fit_steps << "\n";
    out << "risk_lr = " << render_double(config.risk_lr) << "\n";
    out << "mc_passes = " << config.mc_passes << "\n";
    if (config.benchmark == BenchmarkKind::Sinusoid) {
        out << "k_support = " << config.k_support << "\n";
        out << "n_query = " << config.n_query << "\n";
        out << "inner_steps = " << config.inner_steps << "\n";
        out << "inner_lr = " << render_double(config.inner_lr) << "\n";
        out << "outer_lr = " << render_double(config.outer_lr) << "\n";
        out << "validation_tasks = " << config.validation_tasks << "\n";
        out << "validation_every = " << config.validation_every << "\n";
    } else {
        out << "landscape = " << config.landscape << "\n";
        if (!config.peak.empty()) {
            out << "peak = [";
            for (std::size_t i = 0; i < config.peak.size(); ++i)
                out << (i ? ", " : "") << render_double(config.peak[i]);
            out << "]\n";
        }
        out << "width = " << render_double(config.width) << "\n";
        out << "amplitude = " << render_double(config.amplitude) << "\n";
        if (!config.drift.empty()) {
            out << "drift = [";
            for (std::size_t i = 0; i < config.drift.size(); ++i)
                out << (i ? ", " : "") << render_double(config.drift[i]);
            out << "]\n";
        }
        out << "entropy_bins = " << config.entropy_bins << "\n";
        if (config.benchmark == BenchmarkKind::Synthetic) {
            out << "probe_points = " << config.probe_points << "\n";
            out << "reducer_radius = " << render_double(config.reducer_radius) << "\n";
            out << "reducer_factor = " << render_double(config.reducer_factor) << "\n";
        } else {
            out << "concentration_eps = " << render_double(config.concentration_eps) << "\n";
            out << "pseudo_batch_grid = [";
            for (std::size_t i = 0; i < config.pseudo_batch_grid.size(); ++i)
                out << (i ? ", " : "") << config.pseudo_batch_grid[i];
            out << "]\n";
            out << "trials = " << config.trials << "\n";
        }
    }
    return out.str();
}

namespace {

TaskSpace space_from_dims(const std::vector<std::vector<double>>& dims) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(dims.size());
    for (const auto& row : dims) pairs.emplace_back(row[0], row[1]);
    return make_space(pairs);
}

Landscape landscape_from(const RunConfig& config, const TaskSpace& space) {
    Landscape landscape;
    landscape.kind = landscape_kind_from_string(config.landscape);
    if (config.peak.empty()) {
        landscape.peak = 0.5 * (space.lower + space.upper);
    } else {
        if (static_cast<int>(config.peak.size()) != space.dim())
            throw std::invalid_argument("config: field 'peak' dimension mismatch");
        landscape.peak = Vec::Map(config.peak.data(), static_cast<Eigen::Index>(config.peak.size()));
    }
    landscape.width = config.width;
    landscape.amplitude = config.amplitude;
    if (!config.drift.empty()) {
        if (static_cast<int>(config.drift.size()) != space.dim())
            throw std::invalid_argument("config: field 'drift' dimension mismatch");
        landscape.drift =
            Vec::Map(config.drift.data(), static_cast<Eigen::Index>(config.drift.size()));
    }
    return landscape;
}

}  // namespace

SamplerComparisonConfig to_comparison_config(const RunConfig& config) {
    SamplerComparisonConfig out;
    out.space = space_from_dims(config.dims);
    out.landscape = landscape_from(config, out.space);
    out.acquisition = config.acquisition;
    out.rounds = config.rounds;
    out.probe_points = config.probe_points;
    out.fit_steps = config.fit_steps;
    out.risk_lr = config.risk_lr;
    out.mc_passes = config.mc_passes;
    out.latent_dim = config.latent_dim;
    out.beta = config.beta;
    out.reducer_radius = config.reducer_radius;
    out.reducer_factor = config.reducer_factor;
    out.entropy_bins = config.entropy_bins;
    out.seed = config.train_seed;
    out.checkpoint_every = config.checkpoint_every;
    return out;
}

SinusoidExperimentConfig to_sinusoid_config(const RunConfig& config) {
    SinusoidExperimentConfig out;
    out.acquisition = config.acquisition;
    out.iterations = config.rounds;
    out.k_support = config.k_support;
    out.n_query = config.n_query;
    out.inner_steps = config.inner_steps;
    out.inner_lr = config.inner_lr;
    out.outer_lr = config.outer_lr;
    out.fit_steps = config.fit_steps;
    out.risk_lr = config.risk_lr;
    out.latent_dim = config.latent_dim;
    out.beta = config.beta;
    out.mc_passes = config.mc_passes;
    out.validation_tasks = config.validation_tasks;
    out.validation_every = config.validation_every;
    out.train_seed = config.train_seed;
    out.validation_seed = config.validation_seed;
    out.checkpoint_every = config.checkpoint_every;
    return out;
}

ConcentrationExperimentConfig to_concentration_config(const RunConfig& config) {
    ConcentrationExperimentConfig out;
    out.space = space_from_dims(config.dims);
    out.landscape = landscape_from(config, out.space);
    out.eps = config.concentration_eps;
    out.batch_size = config.acquisition.batch_size;
    out.pseudo_batch_grid = config.pseudo_batch_grid;
    out.trials = config.trials;
    out.gamma_div = config.acquisition.gamma_div;
    out.entropy_bins = config.entropy_bins;
    out.seed = config.train_seed;
    return out;
}

}  // namespace rats
