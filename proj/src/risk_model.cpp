#include "rats/risk_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rats {

namespace {

constexpr double kMinStd = 1e-6;     // additive floor after softplus heads
constexpr double kLogTwoPi = 1.8378770664093453;

struct PooledBatch {
    std::vector<Vec> inputs;      // distinct normalized (tau, l) records, sorted
    std::vector<double> weights;  // multiplicity / n, one per distinct record
};

// Canonical grouped pooling: sort records lexicographically on the normalized
// (tau, l) vector and fold duplicates into a multiplicity weight. Summing the
// weighted embeddings in this fixed order makes encode bitwise invariant to
// record permutation, and a batch that repeats one record k times pools with
// weight exactly 1.
PooledBatch pool_inputs(const RiskModel& model, const HistoryBatch& batch) {
    const std::size_t n = batch.ids.size();
    std::vector<Vec> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec unit = normalize(model.space, batch.ids[i]);
        Vec row(unit.size() + 1);
        row.head(unit.size()) = unit;
        row[unit.size()] = model.normalizer.to_normalized(batch.risks[i]);
        rows.push_back(std::move(row));
    }
    auto lex_less = [](const Vec& a, const Vec& b) {
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            if (a[i] < b[i]) return true;
            if (a[i] > b[i]) return false;
        }
        return false;
    };
    std::sort(rows.begin(), rows.end(), lex_less);
    PooledBatch pooled;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && rows[j] == rows[i]) ++j;
        pooled.inputs.push_back(rows[i]);
        pooled.weights.push_back(static_cast<double>(j - i) / static_cast<double>(n));
        i = j;
    }
    return pooled;
}

struct EncodeTrace {
    PooledBatch pooled;
    Vec pooled_embedding;
    Vec mu;
    Vec sigma;  // softplus head output + floor
};

EncodeTrace encode_trace(const RiskModel& model, const HistoryBatch& batch) {
    EncodeTrace trace;
    trace.pooled = pool_inputs(model, batch);
    Vec sum = Vec::Zero(model.embed.output_dim());
    for (std::size_t i = 0; i < trace.pooled.inputs.size(); ++i)
        sum += trace.pooled.weights[i] * forward(model.embed, trace.pooled.inputs[i]);
    trace.pooled_embedding = sum;
    trace.mu = forward(model.mean_head, trace.pooled_embedding);
    trace.sigma = forward(model.std_head, trace.pooled_embedding).array() + kMinStd;
    return trace;
}

Vec decoder_input(const RiskModel& model, const TaskId& id, const Vec& z) {
    const Vec unit = normalize(model.space, id);
    Vec u(unit.size() + z.size());
    u.head(unit.size()) = unit;
    u.tail(z.size()) = z;
    return u;
}

void write_double(std::ostream& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

void write_posterior(std::ostream& out, const char* tag, const LatentPosterior& p) {
    out << tag << " " << p.mean.size() << "\n";
    for (Eigen::Index i = 0; i < p.mean.size(); ++i) {
        write_double(out, p.mean[i]);
        out << " ";
        write_double(out, p.std[i]);
        out << "\n";
    }
}

LatentPosterior read_posterior(std::istream& in, const std::string& tag) {
    std::string word;
    Eigen::Index n = 0;
    in >> word >> n;
    if (word != tag || n <= 0) throw std::runtime_error("risk_model: bad checkpoint posterior");
    LatentPosterior p;
    p.mean = Vec(n);
    p.std = Vec(n);
    for (Eigen::Index i = 0; i < n; ++i) in >> p.mean[i] >> p.std[i];
    return p;
}

}  // namespace

void validate(const TaskSpace& space, const HistoryBatch& batch) {
    if (batch.ids.empty()) throw std::invalid_argument("risk_model: empty history batch");
    if (batch.ids.size() != batch.risks.size())
        throw std::invalid_argument("risk_model: ids/risks length mismatch");
    for (const TaskId& id : batch.ids)
        if (!contains(space, id)) throw std::invalid_argument("risk_model: identifier out of bounds");
    for (double r : batch.risks)
        if (!std::isfinite(r)) throw std::invalid_argument("risk_model: non-finite risk");
}

double kl_diag_gaussian(const LatentPosterior& q, const LatentPosterior& p) {
    if (q.mean.size() != p.mean.size())
        throw std::invalid_argument("risk_model: KL dimension mismatch");
    double kl = 0.0;
    for (Eigen::Index i = 0; i < q.mean.size(); ++i) {
        const double ratio = q.std[i] / p.std[i];
        const double shift = (q.mean[i] - p.mean[i]) / p.std[i];
        kl += 0.5 * (ratio * ratio + shift * shift - 1.0) + std::log(p.std[i]) - std::log(q.std[i]);
    }
    return kl;
}

void LabelNormalizer::update(const std::vector<double>& values) {
    for (double v : values) {
        count += 1;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }
}

double LabelNormalizer::scale() const {
    if (count < 2) return 1.0;
    const double var = m2 / static_cast<double>(count);
    return std::max(std::sqrt(var), 1e-6);
}

RiskModel make_risk_model(const TaskSpace& space, const RiskModelConfig& config, Rng& rng) {
    if (config.latent_dim < 1) throw std::invalid_argument("risk_model: latent_dim must be positive");
    if (config.beta <= 0.0) throw std::invalid_argument("risk_model: beta must be positive");
    RiskModel model;
    model.space = space;
    model.config = config;
    const int d = space.dim();

    std::vector<int> embed_widths(static_cast<std::size_t>(config.embed_hidden_layers),
                                  config.embed_width);
    std::vector<Activation> embed_acts(embed_widths.size(), Activation::Relu);
    model.embed = make_net(d + 1, embed_widths, embed_acts, rng);
    model.mean_head = make_net(config.embed_width, {config.latent_dim}, {Activation::Identity}, rng);
    model.std_head = make_net(config.embed_width, {config.latent_dim}, {Activation::Softplus}, rng);

    std::vector<int> trunk_widths(static_cast<std::size_t>(config.decoder_hidden_layers),
                                  config.decoder_width);
    std::vector<Activation> trunk_acts(trunk_widths.size(), Activation::Relu);
    model.dec_trunk = make_net(d + config.latent_dim, trunk_widths, trunk_acts, rng);
    model.dec_mean = make_net(config.decoder_width, {1}, {Activation::Identity}, rng);
    model.dec_std = make_net(config.decoder_width, {1}, {Activation::Softplus}, rng);

    model.prior.mean = Vec::Zero(config.latent_dim);
    model.prior.std = Vec::Ones(config.latent_dim);
    model.posterior = model.prior;
    return model;
}

LatentPosterior encode(const RiskModel& model, const HistoryBatch& batch) {
    validate(model.space, batch);
    const EncodeTrace trace = encode_trace(model, batch);
    return LatentPosterior{trace.mu, trace.sigma};
}

ElboResult elbo_at_noise(const RiskModel& model, const HistoryBatch& batch, const Vec& noise) {
    validate(model.space, batch);
    if (noise.size() != model.config.latent_dim)
        throw std::invalid_argument("risk_model: latent noise dimension mismatch");

    ElboResult result;
    result.grad.embed = zero_gradient(model.embed);
    result.grad.mean_head = zero_gradient(model.mean_head);
    result.grad.std_head = zero_gradient(model.std_head);
    result.grad.dec_trunk = zero_gradient(model.dec_trunk);
    result.grad.dec_mean = zero_gradient(model.dec_mean);
    result.grad.dec_std = zero_gradient(model.dec_std);

    const EncodeTrace trace = encode_trace(model, batch);
    const Vec z = trace.mu + trace.sigma.cwiseProduct(noise);

    Vec g_z = Vec::Zero(z.size());
    const std::size_t n = batch.ids.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec u = decoder_input(model, batch.ids[i], z);
        const Vec h = forward(model.dec_trunk, u);
        const double m = forward(model.dec_mean, h)[0];
        const double s = forward(model.dec_std, h)[0] + kMinStd;
        const double y = model.normalizer.to_normalized(batch.risks[i]);
        const double resid = y - m;

        result.reconstruction += -0.5 * kLogTwoPi - std::log(s) - 0.5 * (resid / s) * (resid / s);

        const double dll_dm = resid / (s * s);
        const double dll_ds = -1.0 / s + resid * resid / (s * s * s);

        Vec one(1);
        one[0] = dll_dm;
        const Vec dh_mean = backward_accumulate(model.dec_mean, h, one, result.grad.dec_mean);
        one[0] = dll_ds;
        const Vec dh_std = backward_accumulate(model.dec_std, h, one, result.grad.dec_std);
        const Vec du =
            backward_accumulate(model.dec_trunk, u, dh_mean + dh_std, result.grad.dec_trunk);
        g_z += du.tail(z.size());
    }

    result.kl = kl_diag_gaussian(LatentPosterior{trace.mu, trace.sigma}, model.prior);
    result.value = result.reconstruction - model.config.beta * result.kl;

    // d elbo / d mu and d sigma: reconstruction flows through z = mu+sigma*eps,
    // the KL term has the closed-form diagonal-Gaussian derivative.
    Vec d_mu(z.size());
    Vec d_sigma(z.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double pvar = model.prior.std[j] * model.prior.std[j];
        const double dkl_dmu = (trace.mu[j] - model.prior.mean[j]) / pvar;
        const double dkl_dsigma = trace.sigma[j] / pvar - 1.0 / trace.sigma[j];
        d_mu[j] = g_z[j] - model.config.beta * dkl_dmu;
        d_sigma[j] = g_z[j] * noise[j] - model.config.beta * dkl_dsigma;
    }

    const Vec d_pooled_mu =
        backward_accumulate(model.mean_head, trace.pooled_embedding, d_mu, result.grad.mean_head);
    const Vec d_pooled_sigma =
        backward_accumulate(model.std_head, trace.pooled_embedding, d_sigma, result.grad.std_head);
    const Vec d_pooled = d_pooled_mu + d_pooled_sigma;
    for (std::size_t i = 0; i < trace.pooled.inputs.size(); ++i)
        backward_accumulate(model.embed, trace.pooled.inputs[i],
                            (trace.pooled.weights[i] * d_pooled).eval(), result.grad.embed);

    if (!std::isfinite(result.value))
        throw std::runtime_error("risk_model: non-finite ELBO (reconstruction " +
                                 std::to_string(result.reconstruction) + ", kl " +
                                 std::to_string(result.kl) + ")");
    return result;
}

ElboResult elbo(const RiskModel& model, const HistoryBatch& batch, Rng& rng) {
    Vec noise(model.config.latent_dim);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
    return elbo_at_noise(model, batch, noise);
}

void fit_round(RiskModel& model, const HistoryBatch& batch, int steps, double learning_rate,
               Rng& rng) {
    validate(model.space, batch);
    if (steps < 0) throw std::invalid_argument("risk_model: negative step count");
    model.normalizer.update(batch.risks);

    if (steps > 0) {
        if (!model.optimizer) {
            RiskModel::Optimizer opt{make_adam(model.embed, learning_rate),
                                     make_adam(model.mean_head, learning_rate),
                                     make_adam(model.std_head, learning_rate),
                                     make_adam(model.dec_trunk, learning_rate),
                                     make_adam(model.dec_mean, learning_rate),
                                     make_adam(model.dec_std, learning_rate)};
            model.optimizer = std::move(opt);
        }
        auto set_lr = [&](AdamState& s) { s.learning_rate = learning_rate; };
        set_lr(model.optimizer->embed);
        set_lr(model.optimizer->mean_head);
        set_lr(model.optimizer->std_head);
        set_lr(model.optimizer->dec_trunk);
        set_lr(model.optimizer->dec_mean);
        set_lr(model.optimizer->dec_std);

        for (int k = 0; k < steps; ++k) {
            ElboResult r = elbo(model, batch, rng);
            // ascend the ELBO = descend its negation
            scale(-1.0, r.grad.embed);
            scale(-1.0, r.grad.mean_head);
            scale(-1.0, r.grad.std_head);
            scale(-1.0, r.grad.dec_trunk);
            scale(-1.0, r.grad.dec_mean);
            scale(-1.0, r.grad.dec_std);
            adam_step(model.embed, r.grad.embed, model.optimizer->embed);
            adam_step(model.mean_head, r.grad.mean_head, model.optimizer->mean_head);
            adam_step(model.std_head, r.grad.std_head, model.optimizer->std_head);
            adam_step(model.dec_trunk, r.grad.dec_trunk, model.optimizer->dec_trunk);
            adam_step(model.dec_mean, r.grad.dec_mean, model.optimizer->dec_mean);
            adam_step(model.dec_std, r.grad.dec_std, model.optimizer->dec_std);
        }
    }

    // streaming update: next round's KL anchors to this batch's posterior
    model.posterior = encode(model, batch);
    model.prior = model.posterior;
}

DecodedGaussian decode(const RiskModel& model, const TaskId& id, const Vec& z) {
    const Vec u = decoder_input(model, id, z);
    const Vec h = forward(model.dec_trunk, u);
    return DecodedGaussian{forward(model.dec_mean, h)[0], forward(model.dec_std, h)[0] + kMinStd};
}

std::vector<RiskEstimate> predict_mc(const RiskModel& model, const std::vector<TaskId>& candidates,
                                     int passes, Rng& rng) {
    if (passes < 2) throw std::invalid_argument("risk_model: predict_mc needs passes >= 2");
    const std::size_t n = candidates.size();
    std::vector<double> mean_sum(n, 0.0);
    std::vector<double> second_moment(n, 0.0);  // E[s^2 + m^2] accumulator
    std::vector<double> first_pass_draw(n, 0.0);

    for (int p = 0; p < passes; ++p) {
        Vec eps(model.config.latent_dim);
        for (Eigen::Index j = 0; j < eps.size(); ++j) eps[j] = rng.normal();
        const Vec z = model.posterior.mean + model.posterior.std.cwiseProduct(eps);
        for (std::size_t i = 0; i < n; ++i) {
            const DecodedGaussian g = decode(model, candidates[i], z);
            mean_sum[i] += g.mean;
            second_moment[i] += g.std * g.std + g.mean * g.mean;
            if (p == 0) first_pass_draw[i] = g.mean + g.std * rng.normal();
        }
    }

    const double scale = model.normalizer.scale();
    std::vector<RiskEstimate> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = mean_sum[i] / passes;
        const double var = std::max(second_moment[i] / passes - m * m, 0.0);
        out[i].mean = model.normalizer.to_raw(m);
        out[i].std = scale * std::sqrt(var);
        out[i].draw = model.normalizer.to_raw(first_pass_draw[i]);
    }
    return out;
}

std::vector<double> posterior_sample_at(const RiskModel& model,
                                        const std::vector<TaskId>& candidates, const Vec& z,
                                        const Vec& likelihood_noise) {
    if (likelihood_noise.size() != static_cast<Eigen::Index>(candidates.size()))
        throw std::invalid_argument("risk_model: likelihood noise length mismatch");
    std::vector<double> out;
    out.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const DecodedGaussian g = decode(model, candidates[i], z);
        out.push_back(model.normalizer.to_raw(g.mean + g.std * likelihood_noise[static_cast<Eigen::Index>(i)]));
    }
    return out;
}

std::vector<double> predict_posterior_sample(const RiskModel& model,
                                             const std::vector<TaskId>& candidates, Rng& rng) {
    Vec eps(model.config.latent_dim);
    for (Eigen::Index j = 0; j < eps.size(); ++j) eps[j] = rng.normal();
    const Vec z = model.posterior.mean + model.posterior.std.cwiseProduct(eps);
    Vec noise(static_cast<Eigen::Index>(candidates.size()));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
    return posterior_sample_at(model, candidates, z, noise);
}

void write_checkpoint(std::ostream& out, const RiskModel& model) {
    out << "rats_risk_model 1\n";
    write_net(out, model.embed);
    write_net(out, model.mean_head);
    write_net(out, model.std_head);
    write_net(out, model.dec_trunk);
    write_net(out, model.dec_mean);
    write_net(out, model.dec_std);
    out << "normalizer " << model.normalizer.count << " ";
    write_double(out, model.normalizer.mean);
    out << " ";
    write_double(out, model.normalizer.m2);
    out << "\n";
    write_posterior(out, "prior", model.prior);
    write_posterior(out, "posterior", model.posterior);
}

void read_checkpoint(std::istream& in, RiskModel& model) {
    std::string word;
    int version = 0;
    in >> word >> version;
    if (word != "rats_risk_model" || version != 1)
        throw std::runtime_error("risk_model: bad checkpoint header");
    model.embed = read_net(in);
    model.mean_head = read_net(in);
    model.std_head = read_net(in);
    model.dec_trunk = read_net(in);
    model.dec_mean = read_net(in);
    model.dec_std = read_net(in);
    in >> word >> model.normalizer.count >> model.normalizer.mean >> model.normalizer.m2;
    if (word != "normalizer") throw std::runtime_error("risk_model: bad checkpoint normalizer");
    model.prior = read_posterior(in, "prior");
    model.posterior = read_posterior(in, "posterior");
    model.optimizer.reset();
    if (!in) throw std::runtime_error("risk_model: truncated checkpoint");
}

}  // namespace rats
