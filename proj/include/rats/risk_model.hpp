#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "rats/nnet.hpp"
#include "rats/task_space.hpp"

namespace rats {

// One optimization round's evaluated tasks: (identifier, risk) pairs.
struct HistoryBatch {
    std::vector<TaskId> ids;
    std::vector<double> risks;
    int round = 0;
};

void validate(const TaskSpace& space, const HistoryBatch& batch);

struct LatentPosterior {
    Vec mean;
    Vec std;
};

// Closed-form KL of diagonal Gaussians; exactly zero when q == p parameter-wise.
double kl_diag_gaussian(const LatentPosterior& q, const LatentPosterior& p);

// Running standardizer for risk labels; keeps Gaussian-likelihood scales sane
// when raw risks live on very different ranges across benchmarks.
struct LabelNormalizer {
    long long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void update(const std::vector<double>& values);
    double scale() const;  // std with a small floor
    double to_normalized(double raw) const { return (raw - mean) / scale(); }
    double to_raw(double normalized) const { return normalized * scale() + mean; }
};

struct RiskModelConfig {
    int latent_dim = 10;
    int embed_width = 10;
    int embed_hidden_layers = 4;
    int decoder_width = 10;
    int decoder_hidden_layers = 2;  // trunk; mean/std heads add the final layer
    double beta = 1.0;
};

// Latent-variable model of p(risk | identifier, history): an embedding net
// over (tau, l) records pooled into a diagonal-Gaussian latent, and a decoder
// over (tau, z) emitting a Gaussian (mean, std) per task. Trained by the
// streaming ELBO with a KL penalty toward the previous round's posterior.
struct RiskModel {
    TaskSpace space;
    RiskModelConfig config;

    DenseNet embed;      // (d+1) -> embed_width, relu hiddens
    DenseNet mean_head;  // embed_width -> latent_dim
    DenseNet std_head;   // embed_width -> latent_dim, softplus
    DenseNet dec_trunk;  // (d+latent) -> decoder_width, relu
    DenseNet dec_mean;   // decoder_width -> 1
    DenseNet dec_std;    // decoder_width -> 1, softplus

    LatentPosterior prior;      // frozen q from the previous round
    LatentPosterior posterior;  // q from the last fitted batch, used by predict
    LabelNormalizer normalizer;

    struct Optimizer {
        AdamState embed, mean_head, std_head, dec_trunk, dec_mean, dec_std;
    };
    std::optional<Optimizer> optimizer;  // persists across rounds
};

RiskModel make_risk_model(const TaskSpace& space, const RiskModelConfig& config, Rng& rng);

// Gradients for the encoder side (phi) and decoder side (psi) jointly.
struct RiskModelGradient {
    Gradient embed, mean_head, std_head, dec_trunk, dec_mean, dec_std;
};

// Embeds each normalized (tau, l) record, mean-pools, maps to (mu, softplus
// std). Records are pooled in canonical sorted order with multiplicity
// weights, which makes the result exactly invariant to permutation and to
// duplicating the whole batch from a single record.
LatentPosterior encode(const RiskModel& model, const HistoryBatch& batch);

struct ElboResult {
    double value = 0.0;           // reconstruction - beta * kl
    double reconstruction = 0.0;  // sum_i ln p(l_i | tau_i, z)
    double kl = 0.0;
    RiskModelGradient grad;  // gradient of the ELBO (ascent direction)
};

// Single-sample reparameterized ELBO and its exact gradient at the given
// latent noise; `elbo` draws the noise from rng and delegates here.
ElboResult elbo_at_noise(const RiskModel& model, const HistoryBatch& batch, const Vec& noise);
ElboResult elbo(const RiskModel& model, const HistoryBatch& batch, Rng& rng);

// K Adam steps on -ELBO over the batch, then snapshots the batch posterior
// into the frozen prior for the next round. The snapshot happens even for
// K = 0. Training uses only this batch; older rounds act through the prior.
void fit_round(RiskModel& model, const HistoryBatch& batch, int steps, double learning_rate,
               Rng& rng);

struct RiskEstimate {
    double mean = 0.0;  // m(l), raw units
    double std = 0.0;   // sigma(l), raw units
    double draw = 0.0;  // single posterior draw, raw units
};

// Decoder Gaussian at (tau, z), normalized label units.
struct DecodedGaussian {
    double mean = 0.0;
    double std = 0.0;
};
DecodedGaussian decode(const RiskModel& model, const TaskId& id, const Vec& z);

// Multi-pass Monte Carlo estimate: draws z `passes` times; the estimate's
// mean averages decoder means and its variance combines decoder noise with
// the spread across z draws (law of total variance), all de-normalized to
// raw units. The draw field carries a sampled value from the first pass.
std::vector<RiskEstimate> predict_mc(const RiskModel& model, const std::vector<TaskId>& candidates,
                                     int passes, Rng& rng);

// Posterior sampling: one z for the whole candidate set, one likelihood draw
// per candidate, raw units.
std::vector<double> predict_posterior_sample(const RiskModel& model,
                                             const std::vector<TaskId>& candidates, Rng& rng);

// Deterministic core of posterior sampling, exposed for tests: latent noise
// and one likelihood noise entry per candidate are supplied by the caller.
std::vector<double> posterior_sample_at(const RiskModel& model,
                                        const std::vector<TaskId>& candidates, const Vec& z,
                                        const Vec& likelihood_noise);

// Checkpoint: shape headers + flat float lists for all nets, plus the
// normalizer state and frozen prior/posterior.
void write_checkpoint(std::ostream& out, const RiskModel& model);
void read_checkpoint(std::istream& in, RiskModel& model);

}  // namespace rats
