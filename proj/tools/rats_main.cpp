// Command-line front end for the task-sampling benchmarks.

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rats/harness.hpp"
#include "rats/metrics.hpp"
#include "rats/subset.hpp"

namespace {

using namespace rats;

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct Overrides {
    std::string config_path;
    std::string strategy;
    std::string out_dir;
    std::string seed;
    std::string rounds;
    std::string batch_size;
    std::string pseudo_batch_factor;
    std::string gamma_div;
    std::string mix_rho;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "config file (key = value lines)");
    cmd->add_option("--strategy", ov.strategy, "erm | gdrm | drm | mpts_ucb | pdts");
    cmd->add_option("--out", ov.out_dir, "output directory");
    cmd->add_option("--seed", ov.seed, "training seed");
    cmd->add_option("--rounds", ov.rounds, "total rounds / meta-iterations");
    cmd->add_option("--batch-size", ov.batch_size, "tasks optimized per round (B)");
    cmd->add_option("--pseudo-batch-factor", ov.pseudo_batch_factor,
                    "candidate pool size as a multiple of B");
    cmd->add_option("--gamma-div", ov.gamma_div, "diversity weight");
    cmd->add_option("--mix-rho", ov.mix_rho, "random-mix fraction for mpts_ucb");
}

RunConfig build_config(const Overrides& ov, const std::string& benchmark) {
    ConfigFile file = ov.config_path.empty() ? ConfigFile::parse_string("")
                                             : ConfigFile::parse_file(ov.config_path);
    if (!file.has("benchmark")) file.set("benchmark", benchmark);
    if (!ov.strategy.empty()) file.set("strategy", ov.strategy);
    if (!ov.out_dir.empty()) file.set("out_dir", ov.out_dir);
    if (!ov.seed.empty()) file.set("train_seed", ov.seed);
    if (!ov.rounds.empty()) file.set("rounds", ov.rounds);
    if (!ov.batch_size.empty()) file.set("batch_size", ov.batch_size);
    if (!ov.pseudo_batch_factor.empty()) file.set("pseudo_batch_factor", ov.pseudo_batch_factor);
    if (!ov.gamma_div.empty()) file.set("gamma_div", ov.gamma_div);
    if (!ov.mix_rho.empty()) file.set("mix_rho", ov.mix_rho);
    return run_config_from(file);
}

// CSV rows of numbers; a non-numeric first line is treated as a header.
std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header
            }
            throw std::runtime_error("non-numeric CSV row: " + line);
        }
        first = false;
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("no data rows in " + path);
    return rows;
}

int cmd_select(const std::string& input, int b, double gamma, bool exact) {
    const auto rows = read_csv(input);
    const std::size_t width = rows.front().size();
    if (width < 2) throw std::runtime_error("select: need coordinate columns plus a score column");
    for (const auto& row : rows)
        if (row.size() != width) throw std::runtime_error("select: ragged CSV");

    const int d = static_cast<int>(width) - 1;
    // bounds inferred from the data; degenerate dimensions are widened
    std::vector<std::pair<double, double>> dims(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        double lo = rows.front()[static_cast<std::size_t>(j)];
        double hi = lo;
        for (const auto& row : rows) {
            lo = std::min(lo, row[static_cast<std::size_t>(j)]);
            hi = std::max(hi, row[static_cast<std::size_t>(j)]);
        }
        if (!(lo < hi)) {
            lo -= 0.5;
            hi += 0.5;
        }
        dims[static_cast<std::size_t>(j)] = {lo, hi};
    }
    const TaskSpace space = make_space(dims);

    ScoredCandidates cands;
    for (const auto& row : rows) {
        TaskId id(d);
        for (int j = 0; j < d; ++j) id[j] = row[static_cast<std::size_t>(j)];
        cands.ids.push_back(id);
        cands.scores.push_back(row.back());
    }

    std::vector<int> picks = exact ? brute_force_diverse(space, cands, b, gamma).picks
                                   : greedy_diverse(space, cands, b, gamma);
    for (int i : picks) std::cout << i << "\n";
    return 0;
}

int cmd_eval(const std::string& input) {
    const auto rows = read_csv(input);
    RiskSample risks;
    for (const auto& row : rows) risks.push_back(row.back());
    std::cout << "alpha, cvar\n";
    for (double alpha : {0.9, 0.7, 0.5, 0.0})
        std::cout << fmt(alpha) << ", " << fmt(cvar_tail_mean(risks, alpha)) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust active task sampling benchmarks"};
    app.require_subcommand(1);

    Overrides run_ov, sin_ov, con_ov, cmp_ov;
    auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
    run_cmd->add_option("--config", run_ov.config_path, "config file")->required();

    auto* sin_cmd = app.add_subcommand("sinusoid", "few-shot sinusoid regression benchmark");
    add_override_flags(sin_cmd, sin_ov);

    auto* con_cmd = app.add_subcommand("concentration", "Top-B concentration study");
    add_override_flags(con_cmd, con_ov);

    auto* cmp_cmd = app.add_subcommand("compare", "sampler comparison on a synthetic landscape");
    add_override_flags(cmp_cmd, cmp_ov);

    std::string select_input, eval_input, plot_dir;
    int select_b = 1;
    double select_gamma = 1.0;
    bool select_exact = false;
    auto* sel_cmd = app.add_subcommand("select", "diversity-regularized subset selection on a CSV");
    sel_cmd->add_option("--input", select_input, "CSV of (coordinates..., score)")->required();
    sel_cmd->add_option("--b", select_b, "subset size")->required();
    sel_cmd->add_option("--gamma", select_gamma, "diversity weight");
    sel_cmd->add_flag("--exact", select_exact, "use the exhaustive solver");

    auto* eval_cmd = app.add_subcommand("eval", "CVaR table for a CSV of risks");
    eval_cmd->add_option("--input", eval_input, "CSV of risk values")->required();

    auto* plot_cmd = app.add_subcommand("plotdata", "aggregate run logs into long-format CSV");
    plot_cmd->add_option("dir", plot_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            const RunConfig config = load_run_config(run_ov.config_path);
            std::cout << "run dir: " << rats::run(config) << "\n";
        } else if (sin_cmd->parsed()) {
            const RunConfig config = build_config(sin_ov, "sinusoid");
            std::cout << "run dir: " << rats::run(config) << "\n";
        } else if (con_cmd->parsed()) {
            const RunConfig config = build_config(con_ov, "concentration");
            std::cout << "run dir: " << rats::run(config) << "\n";
        } else if (cmp_cmd->parsed()) {
            const RunConfig config = build_config(cmp_ov, "synthetic");
            std::cout << "run dir: " << rats::run(config) << "\n";
        } else if (sel_cmd->parsed()) {
            return cmd_select(select_input, select_b, select_gamma, select_exact);
        } else if (eval_cmd->parsed()) {
            return cmd_eval(eval_input);
        } else if (plot_cmd->parsed()) {
            std::cout << rats::emit_plotdata(plot_dir) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
