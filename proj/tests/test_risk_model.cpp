#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rats/risk_model.hpp"

using namespace rats;

namespace {

TaskSpace unit_space(int d) {
    std::vector<std::pair<double, double>> dims(static_cast<std::size_t>(d), {0.0, 1.0});
    return make_space(dims);
}

RiskModelConfig small_config() {
    RiskModelConfig c;
    c.latent_dim = 3;
    c.embed_width = 5;
    c.embed_hidden_layers = 2;
    c.decoder_width = 4;
    c.decoder_hidden_layers = 1;
    return c;
}

HistoryBatch random_batch(const TaskSpace& space, int n, Rng& rng) {
    HistoryBatch batch;
    batch.ids = sample_uniform(space, n, rng);
    for (int i = 0; i < n; ++i) batch.risks.push_back(rng.normal());
    return batch;
}

// straight-line reference for encode: embed each record, average, run heads
LatentPosterior reference_encode(const RiskModel& model, const HistoryBatch& batch) {
    const int d = model.space.dim();
    Vec pooled = Vec::Zero(model.embed.output_dim());
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        Vec row(d + 1);
        row.head(d) = normalize(model.space, batch.ids[i]);
        row[d] = model.normalizer.to_normalized(batch.risks[i]);
        pooled += forward(model.embed, row);
    }
    pooled /= static_cast<double>(batch.ids.size());
    LatentPosterior q;
    q.mean = forward(model.mean_head, pooled);
    q.std = forward(model.std_head, pooled).array() + 1e-6;
    return q;
}

struct ParamRef {
    DenseNet* net;
    std::size_t layer;
    bool is_weight;
    Eigen::Index row, col;
};

std::vector<ParamRef> all_params(RiskModel& model) {
    std::vector<ParamRef> refs;
    for (DenseNet* net : {&model.embed, &model.mean_head, &model.std_head, &model.dec_trunk,
                          &model.dec_mean, &model.dec_std}) {
        for (std::size_t l = 0; l < net->layers.size(); ++l) {
            for (Eigen::Index r = 0; r < net->layers[l].weights.rows(); ++r)
                for (Eigen::Index c = 0; c < net->layers[l].weights.cols(); ++c)
                    refs.push_back({net, l, true, r, c});
            for (Eigen::Index r = 0; r < net->layers[l].biases.size(); ++r)
                refs.push_back({net, l, false, r, 0});
        }
    }
    return refs;
}

double grad_entry(const RiskModel& model, const RiskModelGradient& grad, const ParamRef& ref) {
    const Gradient* g = nullptr;
    if (ref.net == &model.embed) g = &grad.embed;
    else if (ref.net == &model.mean_head) g = &grad.mean_head;
    else if (ref.net == &model.std_head) g = &grad.std_head;
    else if (ref.net == &model.dec_trunk) g = &grad.dec_trunk;
    else if (ref.net == &model.dec_mean) g = &grad.dec_mean;
    else g = &grad.dec_std;
    return ref.is_weight ? g->weights[ref.layer](ref.row, ref.col) : g->biases[ref.layer][ref.row];
}

bool elbo_gradient_matches_fd(RiskModel& model, const HistoryBatch& batch, const Vec& noise,
                              double tol) {
    const ElboResult analytic = elbo_at_noise(model, batch, noise);
    const double h = 1e-5;
    for (const ParamRef& ref : all_params(model)) {
        double& p = ref.is_weight ? ref.net->layers[ref.layer].weights(ref.row, ref.col)
                                  : ref.net->layers[ref.layer].biases[ref.row];
        const double saved = p;
        p = saved + h;
        const double up = elbo_at_noise(model, batch, noise).value;
        p = saved - h;
        const double down = elbo_at_noise(model, batch, noise).value;
        p = saved;
        const double fd = (up - down) / (2.0 * h);
        const double a = grad_entry(model, analytic.grad, ref);
        if (std::abs(a - fd) > tol * std::max({std::abs(a), std::abs(fd), 1.0})) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("encode: permutation of the batch is bitwise invariant") {
    const TaskSpace space = unit_space(2);
    Rng rng(41);
    RiskModel model = make_risk_model(space, small_config(), rng);
    HistoryBatch batch = random_batch(space, 6, rng);

    HistoryBatch permuted = batch;
    std::reverse(permuted.ids.begin(), permuted.ids.end());
    std::reverse(permuted.risks.begin(), permuted.risks.end());

    const LatentPosterior a = encode(model, batch);
    const LatentPosterior b = encode(model, permuted);
    for (Eigen::Index i = 0; i < a.mean.size(); ++i) {
        CHECK(a.mean[i] == b.mean[i]);
        CHECK(a.std[i] == b.std[i]);
    }
}

TEST_CASE("encode: duplicating a single record k times changes nothing") {
    const TaskSpace space = unit_space(1);
    Rng rng(42);
    RiskModel model = make_risk_model(space, small_config(), rng);
    HistoryBatch single = random_batch(space, 1, rng);

    for (int k : {2, 3, 5}) {
        HistoryBatch repeated;
        for (int i = 0; i < k; ++i) {
            repeated.ids.push_back(single.ids[0]);
            repeated.risks.push_back(single.risks[0]);
        }
        const LatentPosterior a = encode(model, single);
        const LatentPosterior b = encode(model, repeated);
        for (Eigen::Index i = 0; i < a.mean.size(); ++i) {
            CHECK(a.mean[i] == b.mean[i]);
            CHECK(a.std[i] == b.std[i]);
        }
    }
}

TEST_CASE("encode: matches the straight-line reference evaluator") {
    const TaskSpace space = unit_space(2);
    Rng rng(43);
    RiskModel model = make_risk_model(space, small_config(), rng);
    const HistoryBatch batch = random_batch(space, 7, rng);
    const LatentPosterior got = encode(model, batch);
    const LatentPosterior want = reference_encode(model, batch);
    CHECK((got.mean - want.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((got.std - want.std).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index i = 0; i < got.std.size(); ++i) CHECK(got.std[i] > 0.0);
    CHECK_THROWS_AS(encode(model, HistoryBatch{}), std::invalid_argument);
}

TEST_CASE("kl: closed-form unit cases") {
    LatentPosterior std_normal{Vec::Zero(2), Vec::Ones(2)};
    CHECK(kl_diag_gaussian(std_normal, std_normal) == 0.0);
    // KL(N(1,1) || N(0,1)) = 0.5 per coordinate
    LatentPosterior shifted{Vec::Ones(2), Vec::Ones(2)};
    CHECK(kl_diag_gaussian(shifted, std_normal) == doctest::Approx(1.0));
}

TEST_CASE("elbo: KL term is exactly zero when the prior equals the posterior") {
    const TaskSpace space = unit_space(2);
    Rng rng(44);
    RiskModel model = make_risk_model(space, small_config(), rng);
    const HistoryBatch batch = random_batch(space, 5, rng);
    model.prior = encode(model, batch);
    const ElboResult r = elbo_at_noise(model, batch, Vec::Zero(model.config.latent_dim));
    CHECK(r.kl == 0.0);
    CHECK(r.value == r.reconstruction);
}

TEST_CASE("elbo: KL term is non-negative") {
    const TaskSpace space = unit_space(1);
    Rng rng(45);
    RiskModel model = make_risk_model(space, small_config(), rng);
    for (int trial = 0; trial < 20; ++trial) {
        const HistoryBatch batch = random_batch(space, 4, rng);
        const ElboResult r = elbo(model, batch, rng);
        CHECK(r.kl >= 0.0);
    }
}

TEST_CASE("elbo: gradient matches finite differences at frozen noise") {
    const TaskSpace space = unit_space(2);
    Rng rng(46);
    for (int trial = 0; trial < 3; ++trial) {
        RiskModel model = make_risk_model(space, small_config(), rng);
        // generic parameter point: zero biases can park a relu pre-activation
        // exactly on the kink where central differences are undefined
        for (DenseNet* net : {&model.embed, &model.mean_head, &model.std_head, &model.dec_trunk,
                              &model.dec_mean, &model.dec_std})
            for (Layer& l : net->layers)
                for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases[i] = 0.3 * rng.normal();
        const HistoryBatch batch = random_batch(space, 4, rng);
        Vec noise(model.config.latent_dim);
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
        CHECK(elbo_gradient_matches_fd(model, batch, noise, 1e-4));
    }
}

TEST_CASE("fit_round: K = 0 still snapshots the prior") {
    const TaskSpace space = unit_space(1);
    Rng rng(47);
    RiskModel model = make_risk_model(space, small_config(), rng);
    const HistoryBatch batch = random_batch(space, 5, rng);
    const DenseNet embed_before = model.embed;
    fit_round(model, batch, 0, 1e-3, rng);
    CHECK((model.embed.layers[0].weights - embed_before.layers[0].weights).isZero(0.0));
    const LatentPosterior q = encode(model, batch);
    CHECK((model.prior.mean - q.mean).isZero(0.0));
    CHECK((model.posterior.mean - q.mean).isZero(0.0));
}

TEST_CASE("fit_round: constant labels converge to the label in normalized units") {
    const TaskSpace space = unit_space(1);
    Rng rng(48);
    RiskModel model = make_risk_model(space, small_config(), rng);
    HistoryBatch batch;
    batch.ids = sample_uniform(space, 8, rng);
    batch.risks.assign(8, 2.5);
    fit_round(model, batch, 500, 5e-3, rng);
    // constant labels normalize to 0; decoder mean at the training points
    // should sit within 0.1 of that
    const Vec z = model.posterior.mean;
    for (const TaskId& id : batch.ids) {
        const DecodedGaussian g = decode(model, id, z);
        CHECK(std::abs(g.mean - 0.0) < 0.1);
    }
}

TEST_CASE("fit_round: the training loss decreases for most seeds") {
    const TaskSpace space = unit_space(1);
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 7; ++seed) {
        Rng rng(100 + seed);
        RiskModel model = make_risk_model(space, small_config(), rng);
        HistoryBatch batch;
        batch.ids = sample_uniform(space, 10, rng);
        for (const TaskId& id : batch.ids) batch.risks.push_back(std::sin(6.0 * id[0]));
        model.normalizer.update(batch.risks);

        // average a few fixed-noise evaluations to compare losses fairly
        auto mean_loss = [&]() {
            double total = 0.0;
            Rng noise_rng(999);
            for (int i = 0; i < 8; ++i) total += -elbo(model, batch, noise_rng).value;
            return total / 8.0;
        };
        const double before = mean_loss();
        Rng fit_rng(555 + seed);
        fit_round(model, batch, 200, 5e-3, fit_rng);
        const double after = mean_loss();
        improved += after < before ? 1 : 0;
    }
    CHECK(improved >= 6);
}

TEST_CASE("predict_mc: constant decoder returns the de-normalized bias") {
    const TaskSpace space = unit_space(1);
    Rng rng(49);
    RiskModel model = make_risk_model(space, small_config(), rng);
    // seed the normalizer with a known center/scale
    model.normalizer.update({1.0, 2.0, 3.0, 4.0});
    for (DenseNet* net : {&model.dec_trunk, &model.dec_mean, &model.dec_std})
        for (Layer& l : net->layers) {
            l.weights.setZero();
            l.biases.setZero();
        }
    const auto cands = sample_uniform(space, 5, rng);
    const auto est = predict_mc(model, cands, 16, rng);
    const double softplus_zero = std::log(2.0);
    for (const RiskEstimate& e : est) {
        CHECK(e.mean == doctest::Approx(model.normalizer.to_raw(0.0)));
        CHECK(e.std ==
              doctest::Approx(model.normalizer.scale() * (softplus_zero + 1e-6)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(predict_mc(model, cands, 1, rng), std::invalid_argument);
}

TEST_CASE("predict_mc: analytic pushforward mean for an effectively affine decoder") {
    // positive trunk weights plus large biases keep every relu active over
    // the sampled z range, so the decoder mean is affine in z and the exact
    // mixture mean is the decode at the posterior mean
    const TaskSpace space = unit_space(1);
    Rng rng(90);
    RiskModelConfig config = small_config();
    RiskModel model = make_risk_model(space, config, rng);
    model.normalizer.update({1.0, 3.0, 5.0});
    for (Layer& l : model.dec_trunk.layers) {
        l.weights = l.weights.cwiseAbs() * 0.2;
        l.biases.setConstant(5.0);
    }
    model.posterior.mean = Vec::Constant(config.latent_dim, 0.1);
    model.posterior.std = Vec::Constant(config.latent_dim, 0.3);

    const auto cands = sample_uniform(space, 4, rng);
    const int passes = 10000;
    Rng mc_rng(91);
    const auto est = predict_mc(model, cands, passes, mc_rng);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const double analytic =
            model.normalizer.to_raw(decode(model, cands[i], model.posterior.mean).mean);
        const double se = est[i].std / std::sqrt(static_cast<double>(passes));
        CHECK(std::abs(est[i].mean - analytic) < 3.0 * se + 1e-9);
    }
}

TEST_CASE("predict_mc: std collapses when posterior and noise head collapse") {
    const TaskSpace space = unit_space(1);
    Rng rng(92);
    RiskModel model = make_risk_model(space, small_config(), rng);
    model.posterior.std = Vec::Constant(model.config.latent_dim, 1e-12);
    // drive the noise head's softplus far negative
    model.dec_std.layers.back().weights.setZero();
    model.dec_std.layers.back().biases.setConstant(-40.0);
    const auto cands = sample_uniform(space, 3, rng);
    const auto est = predict_mc(model, cands, 32, rng);
    for (const RiskEstimate& e : est) CHECK(e.std < 1e-5);
}

TEST_CASE("predict_mc: agrees with an independent mixture-mean oracle") {
    const TaskSpace space = unit_space(1);
    Rng rng(50);
    RiskModelConfig config = small_config();
    RiskModel model = make_risk_model(space, config, rng);
    model.normalizer.update({0.0, 1.0, 2.0});
    model.posterior.mean = Vec::Constant(config.latent_dim, 0.3);
    model.posterior.std = Vec::Constant(config.latent_dim, 0.5);

    const auto cands = sample_uniform(space, 3, rng);
    const int passes = 20000;
    Rng mc_rng(51);
    const auto est = predict_mc(model, cands, passes, mc_rng);

    // independent oracle: the same mixture mean estimated with a fresh stream
    Rng oracle_rng(52);
    for (std::size_t c = 0; c < cands.size(); ++c) {
        double mean_sum = 0.0;
        double sq_sum = 0.0;
        for (int p = 0; p < passes; ++p) {
            Vec z(config.latent_dim);
            for (Eigen::Index j = 0; j < z.size(); ++j)
                z[j] = model.posterior.mean[j] + model.posterior.std[j] * oracle_rng.normal();
            const double m = decode(model, cands[c], z).mean;
            mean_sum += m;
            sq_sum += m * m;
        }
        const double oracle_mean = model.normalizer.to_raw(mean_sum / passes);
        const double mean_var = std::max(sq_sum / passes - (mean_sum / passes) * (mean_sum / passes), 0.0);
        const double se =
            model.normalizer.scale() * std::sqrt(mean_var / passes) * std::sqrt(2.0);
        CHECK(std::abs(est[c].mean - oracle_mean) < 4.0 * se + 1e-9);
    }
}

TEST_CASE("predict_mc: deterministic given the seed") {
    const TaskSpace space = unit_space(2);
    Rng rng(53);
    RiskModel model = make_risk_model(space, small_config(), rng);
    const auto cands = sample_uniform(space, 4, rng);
    Rng r1(99), r2(99);
    const auto a = predict_mc(model, cands, 10, r1);
    const auto b = predict_mc(model, cands, 10, r2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean == b[i].mean);
        CHECK(a[i].std == b[i].std);
        CHECK(a[i].draw == b[i].draw);
    }
}

TEST_CASE("posterior sampling: noise-free limit decodes at the posterior mean") {
    const TaskSpace space = unit_space(1);
    Rng rng(54);
    RiskModel model = make_risk_model(space, small_config(), rng);
    const auto cands = sample_uniform(space, 4, rng);
    const Vec z = model.posterior.mean;
    const auto vals = posterior_sample_at(model, cands, z, Vec::Zero(4));
    for (std::size_t i = 0; i < cands.size(); ++i)
        CHECK(vals[i] == doctest::Approx(model.normalizer.to_raw(decode(model, cands[i], z).mean)));
}

TEST_CASE("posterior sampling: reordering candidates permutes the outputs") {
    const TaskSpace space = unit_space(1);
    Rng rng(55);
    RiskModel model = make_risk_model(space, small_config(), rng);
    auto cands = sample_uniform(space, 5, rng);
    const Vec z = model.posterior.mean + model.posterior.std;
    auto vals = posterior_sample_at(model, cands, z, Vec::Zero(5));
    std::reverse(cands.begin(), cands.end());
    auto rev = posterior_sample_at(model, cands, z, Vec::Zero(5));
    std::reverse(rev.begin(), rev.end());
    for (std::size_t i = 0; i < vals.size(); ++i) CHECK(vals[i] == rev[i]);
}

TEST_CASE("posterior sampling: seed average approaches predict_mc means") {
    const TaskSpace space = unit_space(1);
    Rng rng(56);
    RiskModel model = make_risk_model(space, small_config(), rng);
    model.normalizer.update({0.5, 1.5, 2.0});
    const auto cands = sample_uniform(space, 3, rng);

    const int seeds = 4000;
    std::vector<double> sums(cands.size(), 0.0);
    std::vector<double> sq(cands.size(), 0.0);
    for (int s = 0; s < seeds; ++s) {
        Rng draw_rng(derive_seed(777, "ps", static_cast<std::uint64_t>(s)));
        const auto vals = predict_posterior_sample(model, cands, draw_rng);
        for (std::size_t i = 0; i < vals.size(); ++i) {
            sums[i] += vals[i];
            sq[i] += vals[i] * vals[i];
        }
    }
    Rng mc_rng(58);
    const auto est = predict_mc(model, cands, 4000, mc_rng);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const double mean = sums[i] / seeds;
        const double var = std::max(sq[i] / seeds - mean * mean, 0.0);
        const double se_ps = std::sqrt(var / seeds);
        const double se_mc = est[i].std / std::sqrt(4000.0);
        const double combined = std::sqrt(se_ps * se_ps + se_mc * se_mc);
        CHECK(std::abs(mean - est[i].mean) < 3.0 * combined + 1e-12);
    }
}

TEST_CASE("checkpoint: model round-trips exactly") {
    const TaskSpace space = unit_space(2);
    Rng rng(59);
    RiskModel model = make_risk_model(space, small_config(), rng);
    HistoryBatch batch = random_batch(space, 6, rng);
    fit_round(model, batch, 20, 1e-3, rng);

    std::stringstream buffer;
    write_checkpoint(buffer, model);
    RiskModel copy = make_risk_model(space, small_config(), rng);
    read_checkpoint(buffer, copy);

    CHECK(copy.normalizer.count == model.normalizer.count);
    CHECK(copy.normalizer.mean == model.normalizer.mean);
    CHECK((copy.prior.mean - model.prior.mean).isZero(0.0));
    CHECK((copy.posterior.std - model.posterior.std).isZero(0.0));
    const auto cands = sample_uniform(space, 3, rng);
    const Vec z = model.posterior.mean;
    const auto a = posterior_sample_at(model, cands, z, Vec::Zero(3));
    const auto b = posterior_sample_at(copy, cands, z, Vec::Zero(3));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("history batch validation rejects bad records") {
    const TaskSpace space = unit_space(1);
    HistoryBatch batch;
    batch.ids = {TaskId::Constant(1, 2.0)};  // out of bounds
    batch.risks = {1.0};
    CHECK_THROWS_AS(validate(space, batch), std::invalid_argument);
    batch.ids = {TaskId::Constant(1, 0.5)};
    batch.risks = {std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(validate(space, batch), std::invalid_argument);
    batch.risks = {1.0, 2.0};
    CHECK_THROWS_AS(validate(space, batch), std::invalid_argument);
}
