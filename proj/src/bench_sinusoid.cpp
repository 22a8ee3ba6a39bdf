#include "rats/bench_sinusoid.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rats/metrics.hpp"
#include "rats/risk_model.hpp"

namespace rats {

namespace {

constexpr double kAmplitudeLo = 0.1;
constexpr double kAmplitudeHi = 5.0;
constexpr double kShotRange = 5.0;

}  // namespace

TaskSpace sinusoid_space() {
    return make_space({{kAmplitudeLo, kAmplitudeHi}, {0.0, M_PI}});
}

SinusoidTask sinusoid_from_id(const TaskId& id) {
    if (id.size() != 2) throw std::invalid_argument("bench_sinusoid: identifier must be 2-D");
    if (!contains(sinusoid_space(), id))
        throw std::invalid_argument("bench_sinusoid: identifier outside amplitude/phase ranges");
    return SinusoidTask{id[0], id[1]};
}

ShotSet sample_shots(const SinusoidTask& task, int k, Rng& rng) {
    if (k < 1) throw std::invalid_argument("bench_sinusoid: need at least one shot");
    ShotSet shots;
    shots.x = Vec(k);
    shots.y = Vec(k);
    for (int i = 0; i < k; ++i) {
        shots.x[i] = rng.uniform(-kShotRange, kShotRange);
        shots.y[i] = task.amplitude * std::sin(shots.x[i] - task.phase);
    }
    return shots;
}

MamlLearner make_maml_learner(double inner_lr, double outer_lr, Rng& rng) {
    MamlLearner learner;
    learner.net = make_net(1, {40, 40, 1},
                           {Activation::Relu, Activation::Relu, Activation::Identity}, rng);
    learner.inner_lr = inner_lr;
    learner.outer_lr = outer_lr;
    learner.outer_adam = make_adam(learner.net, outer_lr);
    return learner;
}

double mse(const DenseNet& net, const ShotSet& data) {
    double sum = 0.0;
    Vec in(1);
    for (Eigen::Index i = 0; i < data.x.size(); ++i) {
        in[0] = data.x[i];
        const double r = forward(net, in)[0] - data.y[i];
        sum += r * r;
    }
    return sum / static_cast<double>(data.x.size());
}

Gradient mse_gradient(const DenseNet& net, const ShotSet& data) {
    Gradient grad = zero_gradient(net);
    const double n = static_cast<double>(data.x.size());
    Vec in(1), up(1);
    for (Eigen::Index i = 0; i < data.x.size(); ++i) {
        in[0] = data.x[i];
        up[0] = 2.0 * (forward(net, in)[0] - data.y[i]) / n;
        backward_accumulate(net, in, up, grad);
    }
    return grad;
}

DenseNet adapt(const MamlLearner& learner, const ShotSet& support, int inner_steps) {
    if (support.x.size() == 0) throw std::invalid_argument("bench_sinusoid: empty support set");
    DenseNet net = learner.net;
    for (int s = 0; s < inner_steps; ++s) {
        const Gradient g = mse_gradient(net, support);
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            net.layers[l].weights -= learner.inner_lr * g.weights[l];
            net.layers[l].biases -= learner.inner_lr * g.biases[l];
        }
    }
    return net;
}

double adaptation_risk_on(const MamlLearner& learner, const ShotSet& support, const ShotSet& query,
                          int inner_steps) {
    return mse(adapt(learner, support, inner_steps), query);
}

double adaptation_risk(const MamlLearner& learner, const SinusoidTask& task, int k_support,
                       int n_query, int inner_steps, Rng& rng) {
    const ShotSet support = sample_shots(task, k_support, rng);
    const ShotSet query = sample_shots(task, n_query, rng);
    return adaptation_risk_on(learner, support, query, inner_steps);
}

Gradient meta_gradient(const MamlLearner& learner, const std::vector<TaskData>& tasks,
                       const std::vector<double>& weights, int inner_steps) {
    if (tasks.size() != weights.size())
        throw std::invalid_argument("bench_sinusoid: tasks/weights length mismatch");
    Gradient total = zero_gradient(learner.net);
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (weights[i] == 0.0) continue;
        const DenseNet adapted = adapt(learner, tasks[i].support, inner_steps);
        const Gradient g = mse_gradient(adapted, tasks[i].query);
        axpy(weights[i], g, total);
    }
    return total;
}

std::vector<double> meta_step(MamlLearner& learner, const std::vector<SinusoidTask>& tasks,
                              const std::vector<double>& weights, int k_support, int n_query,
                              int inner_steps, Rng& rng) {
    std::vector<TaskData> data;
    data.reserve(tasks.size());
    std::vector<double> risks;
    risks.reserve(tasks.size());
    for (const SinusoidTask& task : tasks) {
        TaskData td;
        td.support = sample_shots(task, k_support, rng);
        td.query = sample_shots(task, n_query, rng);
        risks.push_back(adaptation_risk_on(learner, td.support, td.query, inner_steps));
        data.push_back(std::move(td));
    }
    const Gradient g = meta_gradient(learner, data, weights, inner_steps);
    learner.outer_adam.learning_rate = learner.outer_lr;
    adam_step(learner.net, g, learner.outer_adam);
    return risks;
}

SinusoidResult run_sinusoid_experiment(const SinusoidExperimentConfig& config,
                                       const SinusoidObserver& on_train_row,
                                       const SinusoidObserver& on_validation_row) {
    validate(config.acquisition);
    if (config.iterations < 1) throw std::invalid_argument("bench_sinusoid: iterations must be positive");
    const TaskSpace space = sinusoid_space();

    SinusoidResult result;
    Rng learner_rng(derive_seed(config.train_seed, "learner_init"));
    result.learner = make_maml_learner(config.inner_lr, config.outer_lr, learner_rng);

    const bool model_based = config.acquisition.strategy == Strategy::MptsUcb ||
                             config.acquisition.strategy == Strategy::Pdts;
    Rng model_rng(derive_seed(config.train_seed, "model_init"));
    RiskModelConfig model_config;
    model_config.latent_dim = config.latent_dim;
    model_config.beta = config.beta;
    RiskModel model = make_risk_model(space, model_config, model_rng);

    Rng validation_rng(derive_seed(config.validation_seed, "validation_tasks"));
    result.validation_tasks = sample_uniform(space, config.validation_tasks, validation_rng);

    auto evaluate_validation = [&](int iteration) {
        std::vector<double> risks;
        risks.reserve(result.validation_tasks.size());
        for (std::size_t i = 0; i < result.validation_tasks.size(); ++i) {
            Rng shot_rng(derive_seed(config.validation_seed, "validation_shots", i));
            risks.push_back(adaptation_risk(result.learner,
                                            sinusoid_from_id(result.validation_tasks[i]),
                                            config.k_support, config.n_query, config.inner_steps,
                                            shot_rng));
        }
        SinusoidIterationRow row;
        row.iteration = iteration;
        row.mean_mse = cvar_tail_mean(risks, 0.0);
        row.cvar90 = cvar_tail_mean(risks, 0.9);
        row.cvar70 = cvar_tail_mean(risks, 0.7);
        row.cvar50 = cvar_tail_mean(risks, 0.5);
        row.risks = risks;
        result.validation_rows.push_back(std::move(row));
        if (on_validation_row) on_validation_row(result.validation_rows.back());
        return result.validation_rows.back().risks;
    };

    auto failure_checkpoint = [&]() {
        if (config.checkpoint_dir.empty() || !model_based) return;
        std::ofstream out(config.checkpoint_dir + "/risk_model_failure.txt");
        write_checkpoint(out, model);
    };

    for (int t = 0; t < config.iterations; ++t) try {
        const auto start = std::chrono::steady_clock::now();
        Rng select_rng(derive_seed(config.train_seed, "select", static_cast<std::uint64_t>(t)));
        SelectionResult sel;
        switch (config.acquisition.strategy) {
            case Strategy::Erm:
            case Strategy::Gdrm:
                sel = select_erm(space, config.acquisition, select_rng);
                break;
            case Strategy::Drm: {
                // exact oracle: evaluate every candidate's adaptation risk
                int eval_index = 0;
                sel = select_drm(space, config.acquisition,
                                 [&](const TaskId& id) {
                                     Rng shot_rng(derive_seed(
                                         config.train_seed, "drm_eval",
                                         static_cast<std::uint64_t>(t) * 1000003ULL +
                                             static_cast<std::uint64_t>(eval_index++)));
                                     return adaptation_risk(result.learner, sinusoid_from_id(id),
                                                            config.k_support, config.n_query,
                                                            config.inner_steps, shot_rng);
                                 },
                                 select_rng);
                break;
            }
            case Strategy::MptsUcb:
                sel = select_mpts_ucb(space, config.acquisition, model, config.mc_passes,
                                      select_rng);
                break;
            case Strategy::Pdts:
                sel = select_pdts(space, config.acquisition, model, select_rng);
                break;
        }

        std::vector<SinusoidTask> tasks;
        tasks.reserve(sel.tasks.size());
        for (const TaskId& id : sel.tasks) tasks.push_back(sinusoid_from_id(id));

        Rng shot_rng(derive_seed(config.train_seed, "task_shots", static_cast<std::uint64_t>(t)));
        std::vector<double> risks;
        if (config.acquisition.strategy == Strategy::Gdrm) {
            // weights come from this round's realized losses
            std::vector<TaskData> data;
            data.reserve(tasks.size());
            for (const SinusoidTask& task : tasks) {
                TaskData td;
                td.support = sample_shots(task, config.k_support, shot_rng);
                td.query = sample_shots(task, config.n_query, shot_rng);
                risks.push_back(
                    adaptation_risk_on(result.learner, td.support, td.query, config.inner_steps));
                data.push_back(std::move(td));
            }
            const std::vector<double> weights = gdrm_weights(risks, config.acquisition.gdrm_eta);
            const Gradient g = meta_gradient(result.learner, data, weights, config.inner_steps);
            result.learner.outer_adam.learning_rate = result.learner.outer_lr;
            adam_step(result.learner.net, g, result.learner.outer_adam);
        } else {
            risks = meta_step(result.learner, tasks, sel.weights, config.k_support, config.n_query,
                              config.inner_steps, shot_rng);
        }

        SinusoidIterationRow row;
        if (model_based) {
            // predictive quality of the model state that made the selection
            Rng predict_rng(
                derive_seed(config.train_seed, "predict", static_cast<std::uint64_t>(t)));
            const std::vector<RiskEstimate> est =
                predict_mc(model, sel.tasks, config.mc_passes, predict_rng);
            for (const RiskEstimate& e : est) row.predicted.push_back(e.mean);
            try {
                row.pcc = pcc(row.predicted, risks);
            } catch (const std::invalid_argument&) {
                row.pcc = 0.0;  // undefined for degenerate batches
            }
        }

        if (model_based) {
            HistoryBatch batch{sel.tasks, risks, t};
            Rng fit_rng(derive_seed(config.train_seed, "fit", static_cast<std::uint64_t>(t)));
            fit_round(model, batch, config.fit_steps, config.risk_lr, fit_rng);
            if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
                ((t + 1) % config.checkpoint_every == 0 || t + 1 == config.iterations)) {
                std::ofstream out(config.checkpoint_dir + "/risk_model_iter_" +
                                  std::to_string(t) + ".txt");
                write_checkpoint(out, model);
            }
        }

        row.iteration = t;
        row.mean_mse = cvar_tail_mean(risks, 0.0);
        row.cvar90 = cvar_tail_mean(risks, 0.9);
        row.cvar70 = cvar_tail_mean(risks, 0.7);
        row.cvar50 = cvar_tail_mean(risks, 0.5);
        row.selected = sel.tasks;
        row.risks = risks;
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        result.train_rows.push_back(std::move(row));
        if (on_train_row) on_train_row(result.train_rows.back());

        if (config.validation_every > 0 && (t + 1) % config.validation_every == 0)
            evaluate_validation(t + 1);
    } catch (const std::runtime_error&) {
        failure_checkpoint();
        throw;
    }

    if (result.validation_rows.empty() ||
        result.validation_rows.back().iteration != config.iterations)
        evaluate_validation(config.iterations);
    result.final_validation_risks = result.validation_rows.back().risks;
    return result;
}

}  // namespace rats
