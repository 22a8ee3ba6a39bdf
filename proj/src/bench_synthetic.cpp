#include "rats/bench_synthetic.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rats {

namespace {

TaskId drifted_peak(const Landscape& landscape, int round) {
    if (landscape.drift.size() == 0) return landscape.peak;
    return landscape.peak + static_cast<double>(round) * landscape.drift;
}

double bump(const TaskId& id, const TaskId& center, double width, double amplitude) {
    const double r2 = (id - center).squaredNorm();
    return amplitude * std::exp(-r2 / (2.0 * width * width));
}

}  // namespace

LandscapeKind landscape_kind_from_string(const std::string& name) {
    if (name == "gaussian_bump") return LandscapeKind::GaussianBump;
    if (name == "multimodal") return LandscapeKind::Multimodal;
    if (name == "plateau") return LandscapeKind::Plateau;
    throw std::invalid_argument("bench_synthetic: unknown landscape kind '" + name + "'");
}

double eval_landscape(const Landscape& landscape, const TaskId& id, int round) {
    const TaskId center = drifted_peak(landscape, round);
    switch (landscape.kind) {
        case LandscapeKind::GaussianBump:
            return bump(id, center, landscape.width, landscape.amplitude);
        case LandscapeKind::Multimodal: {
            // secondary mode offset by three widths along every axis
            const TaskId second = center.array() + 3.0 * landscape.width;
            return bump(id, center, landscape.width, landscape.amplitude) +
                   bump(id, second, landscape.width, 0.6 * landscape.amplitude);
        }
        case LandscapeKind::Plateau: {
            const double r = (id - center).norm() / landscape.width;
            return landscape.amplitude / (1.0 + std::pow(r, 8.0));
        }
    }
    return 0.0;
}

double landscape_max(const Landscape& landscape) {
    if (landscape.kind != LandscapeKind::GaussianBump)
        throw std::invalid_argument("bench_synthetic: max is only defined for the gaussian bump");
    return landscape.amplitude;
}

void AmplitudeReducer::apply(const std::vector<TaskId>& selected,
                             const std::vector<double>& weights) {
    if (selected.size() != weights.size())
        throw std::invalid_argument("bench_synthetic: reducer weights length mismatch");
    for (std::size_t i = 0; i < selected.size(); ++i) {
        centers.push_back(selected[i]);
        // uniform weights give the plain factor; a task weighted w in a batch
        // of B dents with share w*B of the nominal reduction
        const double share = std::min(weights[i] * static_cast<double>(selected.size()), 1.0);
        strengths.push_back(1.0 - (1.0 - factor) * share);
    }
}

double AmplitudeReducer::attenuation(const TaskId& id) const {
    double a = 1.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double r2 = (id - centers[i]).squaredNorm();
        const double dent = 1.0 - (1.0 - strengths[i]) * std::exp(-r2 / (2.0 * radius * radius));
        a *= dent;
    }
    return a;
}

ConcentrationReport run_concentration_experiment(const ConcentrationExperimentConfig& config) {
    if (config.landscape.kind != LandscapeKind::GaussianBump)
        throw std::invalid_argument("bench_synthetic: concentration study needs a unimodal landscape");
    if (config.pseudo_batch_grid.empty())
        throw std::invalid_argument("bench_synthetic: empty pseudo-batch grid");

    const double f_max = landscape_max(config.landscape);
    ConcentrationReport report;
    long long in_neighborhood = 0;
    long long total_draws = 0;

    for (const int b_hat : config.pseudo_batch_grid) {
        if (b_hat < config.batch_size)
            throw std::invalid_argument("bench_synthetic: pseudo batch below batch size");
        Rng rng(derive_seed(config.seed, "concentration", static_cast<std::uint64_t>(b_hat)));
        long long top_hits = 0;
        long long div_hits = 0;
        std::vector<TaskId> top_selected;
        std::vector<TaskId> div_selected;
        top_selected.reserve(static_cast<std::size_t>(config.trials * config.batch_size));
        div_selected.reserve(static_cast<std::size_t>(config.trials * config.batch_size));

        for (int t = 0; t < config.trials; ++t) {
            ScoredCandidates cands;
            cands.ids = sample_uniform(config.space, b_hat, rng);
            cands.scores.reserve(cands.ids.size());
            for (const TaskId& id : cands.ids) {
                const double v = eval_landscape(config.landscape, id, 0);
                cands.scores.push_back(v);
                if (f_max - v <= config.eps) ++in_neighborhood;
                ++total_draws;
            }
            const std::vector<int> top = top_b(cands, config.batch_size);
            const std::vector<int> div =
                greedy_diverse(config.space, cands, config.batch_size, config.gamma_div);

            auto all_in = [&](const std::vector<int>& picks) {
                for (int i : picks)
                    if (f_max - cands.scores[static_cast<std::size_t>(i)] > config.eps) return false;
                return true;
            };
            top_hits += all_in(top) ? 1 : 0;
            div_hits += all_in(div) ? 1 : 0;
            for (int i : top) top_selected.push_back(cands.ids[static_cast<std::size_t>(i)]);
            for (int i : div) div_selected.push_back(cands.ids[static_cast<std::size_t>(i)]);
        }

        ConcentrationRow row;
        row.pseudo_batch = b_hat;
        const double n = static_cast<double>(config.trials);
        row.top_b_probability = static_cast<double>(top_hits) / n;
        row.top_b_std_error = std::sqrt(row.top_b_probability * (1.0 - row.top_b_probability) / n);
        row.diverse_probability = static_cast<double>(div_hits) / n;
        row.diverse_std_error =
            std::sqrt(row.diverse_probability * (1.0 - row.diverse_probability) / n);
        row.top_b_entropy = histogram_entropy(top_selected, config.space, config.entropy_bins);
        row.diverse_entropy = histogram_entropy(div_selected, config.space, config.entropy_bins);
        report.rows.push_back(row);
    }

    report.measured_p_eps =
        static_cast<double>(in_neighborhood) / static_cast<double>(total_draws);
    return report;
}

std::vector<ComparisonRound> run_sampler_comparison(const SamplerComparisonConfig& config,
                                                    const ComparisonObserver& on_round) {
    validate(config.acquisition);
    if (config.rounds < 1) throw std::invalid_argument("bench_synthetic: rounds must be positive");

    Rng model_rng(derive_seed(config.seed, "model_init"));
    RiskModelConfig model_config;
    model_config.latent_dim = config.latent_dim;
    model_config.beta = config.beta;
    RiskModel model = make_risk_model(config.space, model_config, model_rng);

    AmplitudeReducer reducer;
    reducer.radius = config.reducer_radius;
    reducer.factor = config.reducer_factor;

    // fixed held-out probe set, identical across strategies and seeds:
    // evenly spaced midpoints in 1-D, a frozen uniform cloud otherwise
    std::vector<TaskId> probe;
    probe.reserve(static_cast<std::size_t>(config.probe_points));
    if (config.space.dim() == 1) {
        for (int i = 0; i < config.probe_points; ++i) {
            const double u =
                (static_cast<double>(i) + 0.5) / static_cast<double>(config.probe_points);
            probe.push_back(denormalize(config.space, Vec::Constant(1, u)));
        }
    } else {
        Rng probe_rng(derive_seed(0, "probe_grid"));
        probe = sample_uniform(config.space, config.probe_points, probe_rng);
    }

    auto effective_risk = [&](const TaskId& id, int round) {
        return eval_landscape(config.landscape, id, round) * reducer.attenuation(id);
    };

    auto failure_checkpoint = [&](const RiskModel& m) {
        if (config.checkpoint_dir.empty()) return;
        std::ofstream out(config.checkpoint_dir + "/risk_model_failure.txt");
        write_checkpoint(out, m);
    };

    std::vector<ComparisonRound> log;
    std::vector<TaskId> all_selected;
    for (int t = 0; t < config.rounds; ++t) try {
        const auto start = std::chrono::steady_clock::now();
        Rng select_rng(derive_seed(config.seed, "select", static_cast<std::uint64_t>(t)));
        SelectionResult sel;
        switch (config.acquisition.strategy) {
            case Strategy::Erm:
            case Strategy::Gdrm:
                sel = select_erm(config.space, config.acquisition, select_rng);
                break;
            case Strategy::Drm:
                sel = select_drm(config.space, config.acquisition,
                                 [&](const TaskId& id) { return effective_risk(id, t); },
                                 select_rng);
                break;
            case Strategy::MptsUcb:
                sel = select_mpts_ucb(config.space, config.acquisition, model, config.mc_passes,
                                      select_rng);
                break;
            case Strategy::Pdts:
                sel = select_pdts(config.space, config.acquisition, model, select_rng);
                break;
        }

        ComparisonRound round;
        round.round = t;
        round.selected = sel.tasks;
        round.true_risks.reserve(sel.tasks.size());
        for (const TaskId& id : sel.tasks) round.true_risks.push_back(effective_risk(id, t));

        if (config.acquisition.strategy == Strategy::Gdrm)
            sel.weights = gdrm_weights(round.true_risks, config.acquisition.gdrm_eta);

        HistoryBatch batch{sel.tasks, round.true_risks, t};
        Rng fit_rng(derive_seed(config.seed, "fit", static_cast<std::uint64_t>(t)));
        fit_round(model, batch, config.fit_steps, config.risk_lr, fit_rng);

        // predictive quality on the pre-update surface the model just saw
        Rng probe_rng(derive_seed(config.seed, "probe", static_cast<std::uint64_t>(t)));
        const std::vector<RiskEstimate> probe_est =
            predict_mc(model, probe, config.mc_passes, probe_rng);
        std::vector<double> probe_truth;
        probe_truth.reserve(probe.size());
        for (const TaskId& id : probe) probe_truth.push_back(effective_risk(id, t));
        std::vector<double> probe_pred;
        probe_pred.reserve(probe_est.size());
        for (const RiskEstimate& e : probe_est) probe_pred.push_back(e.mean);
        round.pcc = pcc(probe_pred, probe_truth);

        const std::vector<RiskEstimate> sel_est =
            predict_mc(model, sel.tasks, config.mc_passes, probe_rng);
        for (const RiskEstimate& e : sel_est) round.predicted_risks.push_back(e.mean);

        reducer.apply(sel.tasks, sel.weights);

        round.probe_risks.reserve(probe.size());
        for (const TaskId& id : probe) round.probe_risks.push_back(effective_risk(id, t));
        round.cvar90 = cvar_tail_mean(round.probe_risks, 0.9);
        round.cvar50 = cvar_tail_mean(round.probe_risks, 0.5);
        round.mean_risk = cvar_tail_mean(round.probe_risks, 0.0);

        all_selected.insert(all_selected.end(), sel.tasks.begin(), sel.tasks.end());
        round.entropy = histogram_entropy(all_selected, config.space, config.entropy_bins);

        if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
            ((t + 1) % config.checkpoint_every == 0 || t + 1 == config.rounds)) {
            std::ofstream out(config.checkpoint_dir + "/risk_model_round_" + std::to_string(t) +
                              ".txt");
            write_checkpoint(out, model);
        }

        round.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        log.push_back(std::move(round));
        if (on_round) on_round(log.back());
    } catch (const std::runtime_error&) {
        failure_checkpoint(model);
        throw;
    }
    return log;
}

}  // namespace rats
