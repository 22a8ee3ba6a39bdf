#include "rats/harness.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "rats/metrics.hpp"
#include "rats/risk_model.hpp"

namespace rats {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

ordered_json tasks_to_json(const std::vector<TaskId>& tasks) {
    ordered_json arr = ordered_json::array();
    for (const TaskId& id : tasks) {
        ordered_json coords = ordered_json::array();
        for (Eigen::Index i = 0; i < id.size(); ++i) coords.push_back(id[i]);
        arr.push_back(coords);
    }
    return arr;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("harness: cannot write " + path.string());
    return out;
}

void write_meta(const fs::path& dir, const RunConfig& config, const std::string& label) {
    ordered_json meta;
    meta["benchmark"] = config.benchmark == BenchmarkKind::Synthetic      ? "synthetic"
                        : config.benchmark == BenchmarkKind::Sinusoid     ? "sinusoid"
                                                                          : "concentration";
    meta["strategy"] = label;
    meta["train_seed"] = config.train_seed;
    auto out = open_out(dir / "meta.json");
    out << meta.dump() << "\n";
}

std::string strategy_label(const AcquisitionConfig& acq) {
    std::string label = to_string(acq.strategy);
    if (acq.strategy == Strategy::MptsUcb)
        label += "_rho" + format_double(acq.mix_rho);
    return label;
}

void run_synthetic(const RunConfig& config, const fs::path& dir) {
    SamplerComparisonConfig cmp = to_comparison_config(config);
    cmp.checkpoint_dir = dir.string();
    const std::string label = strategy_label(config.acquisition);

    // logs are appended and flushed per round: a crashed run leaves valid
    // prefixes behind
    auto jsonl = open_out(dir / "rounds.jsonl");
    auto csv = open_out(dir / "rounds.csv");
    auto timings = open_out(dir / "timings.csv");
    csv << "round, strategy, entropy, pcc, cvar90, cvar50, mean_risk\n";
    timings << "round, wall_ms\n";
    run_sampler_comparison(cmp, [&](const ComparisonRound& r) {
        ordered_json row;
        row["round"] = r.round;
        row["strategy"] = label;
        row["selected_tasks"] = tasks_to_json(r.selected);
        row["true_risks"] = r.true_risks;
        row["predicted_risks"] = r.predicted_risks;
        row["probe_risks"] = r.probe_risks;
        row["entropy"] = r.entropy;
        row["pcc"] = r.pcc;
        row["cvar90"] = r.cvar90;
        row["cvar50"] = r.cvar50;
        row["mean_risk"] = r.mean_risk;
        jsonl << row.dump() << "\n";
        jsonl.flush();
        csv << r.round << ", " << label << ", " << format_double(r.entropy) << ", "
            << format_double(r.pcc) << ", " << format_double(r.cvar90) << ", "
            << format_double(r.cvar50) << ", " << format_double(r.mean_risk) << "\n";
        csv.flush();
        timings << r.round << ", " << format_double(r.wall_ms) << "\n";
    });
}

void run_sinusoid(const RunConfig& config, const fs::path& dir) {
    SinusoidExperimentConfig sin = to_sinusoid_config(config);
    sin.checkpoint_dir = dir.string();
    const std::string label = strategy_label(config.acquisition);

    auto train = open_out(dir / "train.jsonl");
    auto val = open_out(dir / "validation.jsonl");
    auto timings = open_out(dir / "timings.csv");
    timings << "iter, wall_ms\n";
    auto to_row = [&](const SinusoidIterationRow& r, bool validation) {
        ordered_json row;
        row["iter"] = r.iteration;
        row["strategy"] = label;
        row["mean_mse"] = r.mean_mse;
        row["cvar90"] = r.cvar90;
        row["cvar70"] = r.cvar70;
        row["cvar50"] = r.cvar50;
        if (!validation) row["pcc"] = r.pcc;
        row["selected_tasks"] = validation ? ordered_json::array() : tasks_to_json(r.selected);
        if (!validation) row["predicted_risks"] = r.predicted;
        row["risks"] = r.risks;
        return row;
    };
    const SinusoidResult result = run_sinusoid_experiment(
        sin,
        [&](const SinusoidIterationRow& r) {
            train << to_row(r, false).dump() << "\n";
            train.flush();
            timings << r.iteration << ", " << format_double(r.wall_ms) << "\n";
        },
        [&](const SinusoidIterationRow& r) {
            val << to_row(r, true).dump() << "\n";
            val.flush();
        });

    auto final_csv = open_out(dir / "final_test.csv");
    final_csv << "alpha, mse\n";
    for (double alpha : {0.9, 0.7, 0.5, 0.0})
        final_csv << format_double(alpha) << ", "
                  << format_double(cvar_tail_mean(result.final_validation_risks, alpha)) << "\n";

    auto learner = open_out(dir / "learner_final.txt");
    write_net(learner, result.learner.net);
}

void run_concentration(const RunConfig& config, const fs::path& dir) {
    const ConcentrationExperimentConfig con = to_concentration_config(config);
    const ConcentrationReport report = run_concentration_experiment(con);

    auto topb = open_out(dir / "concentration_topb.csv");
    auto diverse = open_out(dir / "concentration_diverse.csv");
    topb << "b_hat, p_concentrate, stderr, entropy\n";
    diverse << "b_hat, p_concentrate, stderr, entropy\n";
    for (const ConcentrationRow& r : report.rows) {
        topb << r.pseudo_batch << ", " << format_double(r.top_b_probability) << ", "
             << format_double(r.top_b_std_error) << ", " << format_double(r.top_b_entropy) << "\n";
        diverse << r.pseudo_batch << ", " << format_double(r.diverse_probability) << ", "
                << format_double(r.diverse_std_error) << ", " << format_double(r.diverse_entropy)
                << "\n";
    }
    auto meta = open_out(dir / "concentration_meta.csv");
    meta << "p_eps_measured\n" << format_double(report.measured_p_eps) << "\n";
}

}  // namespace

std::string resolve_out_dir(const std::string& out_dir) {
    fs::path path(out_dir);
    if (path.is_relative()) {
        if (const char* root = std::getenv(kOutputRootEnv)) path = fs::path(root) / path;
    }
    return path.string();
}

std::string run(const RunConfig& config) {
    const fs::path dir = resolve_out_dir(config.out_dir);
    fs::create_directories(dir);

    {
        auto echo = open_out(dir / "config.txt");
        echo << render_config(config);
    }
    write_meta(dir, config, strategy_label(config.acquisition));

    switch (config.benchmark) {
        case BenchmarkKind::Synthetic: run_synthetic(config, dir); break;
        case BenchmarkKind::Sinusoid: run_sinusoid(config, dir); break;
        case BenchmarkKind::Concentration: run_concentration(config, dir); break;
    }
    return dir.string();
}

std::string emit_plotdata(const std::string& run_dir) {
    const fs::path dir(run_dir);
    if (!fs::exists(dir)) throw std::runtime_error("harness: no such run directory: " + run_dir);

    struct LongRow {
        long long round;
        std::uint64_t seed;
        std::string strategy;
        std::string metric;
        double value;
    };
    std::vector<LongRow> rows;

    std::vector<fs::path> jsonl_files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            jsonl_files.push_back(entry.path());
    std::sort(jsonl_files.begin(), jsonl_files.end());
    if (jsonl_files.empty())
        throw std::runtime_error("harness: no JSONL logs under " + run_dir);

    for (const fs::path& file : jsonl_files) {
        const fs::path meta_path = file.parent_path() / "meta.json";
        if (!fs::exists(meta_path))
            throw std::runtime_error("harness: missing meta.json next to " + file.string());
        ordered_json meta;
        {
            std::ifstream in(meta_path);
            in >> meta;
        }
        const std::uint64_t seed = meta.at("train_seed").get<std::uint64_t>();
        const std::string fallback_strategy = meta.at("strategy").get<std::string>();

        std::ifstream in(file);
        std::string line;
        long long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            ordered_json row;
            try {
                row = ordered_json::parse(line);
            } catch (const std::exception& e) {
                throw std::runtime_error("harness: corrupt JSONL at " + file.string() + ":" +
                                         std::to_string(lineno));
            }
            const long long round =
                row.contains("round") ? row.at("round").get<long long>()
                                      : row.at("iter").get<long long>();
            const std::string strategy =
                row.contains("strategy") ? row.at("strategy").get<std::string>() : fallback_strategy;
            const std::string prefix =
                file.filename() == "validation.jsonl" ? "validation_" : "";
            for (const auto& [key, value] : row.items()) {
                if (!value.is_number()) continue;
                if (key == "round" || key == "iter") continue;
                rows.push_back(LongRow{round, seed, strategy, prefix + key,
                                       value.get<double>()});
            }
        }
    }

    const fs::path out_path = dir / "plotdata.csv";
    auto out = open_out(out_path);
    out << "round, seed, strategy, metric, value\n";
    for (const LongRow& r : rows)
        out << r.round << ", " << r.seed << ", " << r.strategy << ", " << r.metric << ", "
            << format_double(r.value) << "\n";
    return out_path.string();
}

}  // namespace rats
