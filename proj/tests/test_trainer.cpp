#include <doctest.h>

#include <cmath>

#include "lipad/experiments.hpp"
#include "lipad/rng.hpp"
#include "lipad/trainer.hpp"
#include "lipad/transport.hpp"

using namespace lipad;

namespace {

ParamSet linear_critic(std::vector<std::vector<double>> w, double bias) {
    DenseNetSpec spec;
    spec.input_dim = static_cast<long>(w.size());
    spec.hidden_dims = {};
    spec.output_dim = 1;
    ParamSet ps = build_critic(spec, 1);
    Tensor weight(spec.input_dim, 1);
    for (long i = 0; i < spec.input_dim; ++i) weight.at(i, 0) = w[i][0];
    ps.find("weight_0") = weight;
    ps.find("bias_0") = Tensor::scalar(bias);
    return ps;
}

} // namespace

TEST_CASE("interpolates: endpoints and logged-t reconstruction") {
    const Tensor a = Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    const Tensor b = Tensor::from_rows({{-1.0, 0.5}, {7.0, -2.0}});
    CHECK(interpolates_with_t(a, b, {1.0, 1.0}) == a);
    CHECK(interpolates_with_t(a, b, {0.0, 0.0}) == b);

    const std::vector<double> t = {0.25, 0.9};
    const Tensor mix = interpolates_with_t(a, b, t);
    for (long r = 0; r < 2; ++r)
        for (long c = 0; c < 2; ++c)
            CHECK(mix.at(r, c) == doctest::Approx(t[r] * a.at(r, c) + (1 - t[r]) * b.at(r, c)).epsilon(1e-15));

    CHECK_THROWS_AS((void)interpolates_with_t(a, b, {0.5}), DimensionError);
    Rng rng(3);
    const Tensor c = Tensor::from_rows({{1.0}});
    CHECK_THROWS_AS((void)interpolates(a, c, rng), DimensionError);
}

TEST_CASE("critic_loss: constant critic gives loss lambda") {
    DenseNetSpec spec;
    spec.input_dim = 2;
    spec.hidden_dims = {};
    spec.output_dim = 1;
    ParamSet ps = build_critic(spec, 1);
    ps.find("weight_0") = Tensor(2, 1); // zero weights -> f constant
    ps.find("bias_0") = Tensor::scalar(3.0);

    Rng rng(5);
    Tensor nom(4, 2), cor(4, 2);
    Rng fill(6);
    for (long i = 0; i < nom.size(); ++i) {
        nom[i] = fill.normal();
        cor[i] = fill.normal();
    }
    const LossResult res = critic_loss(ps, nom, cor, 10.0, rng);
    CHECK(res.loss == doctest::Approx(10.0).epsilon(1e-12)); // 0 - 0 + lambda*(0-1)^2
    CHECK(res.gp_term == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(res.dual_estimate == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("critic_loss: unit-slope linear critic on identical batches gives loss 0") {
    ParamSet ps = linear_critic({{0.6}, {0.8}}, 0.25); // ||w|| = 1
    Rng rng(9);
    Tensor batch(5, 2);
    Rng fill(10);
    for (long i = 0; i < batch.size(); ++i) batch[i] = fill.normal();
    const LossResult res = critic_loss(ps, batch, batch, 10.0, rng);
    CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("critic_loss: 1-d hand example, f(x) = -x, nominal {0}, corrupt {1}") {
    ParamSet ps = linear_critic({{-1.0}}, 0.0);
    Rng rng(2);
    const LossResult res = critic_loss(ps, Tensor::from_rows({{0.0}}), Tensor::from_rows({{1.0}}), 10.0, rng);
    CHECK(res.loss == doctest::Approx(-1.0).epsilon(1e-12)); // (-1) - 0 + 0
    CHECK(res.dual_estimate == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("critic_loss: rejects empty and mismatched batches") {
    ParamSet ps = linear_critic({{1.0}}, 0.0);
    Rng rng(1);
    CHECK_THROWS_AS((void)critic_loss(ps, Tensor(0, 1), Tensor(0, 1), 10.0, rng), ContractError);
    CHECK_THROWS_AS((void)critic_loss(ps, Tensor(2, 1), Tensor(2, 2), 10.0, rng), DimensionError);
}

TEST_CASE("train: separates two blobs from their gaussian corruption") {
    Rng data_rng(41);
    const long n = 256;
    Tensor data(n, 2);
    for (long i = 0; i < n; ++i) {
        const double cx = i % 2 == 0 ? -2.0 : 2.0;
        data.at(i, 0) = cx + 0.1 * data_rng.normal();
        data.at(i, 1) = 0.1 * data_rng.normal();
    }
    TrainConfig tc;
    tc.iterations = 300;
    tc.batch_size = 64;
    tc.seed = 7;
    const CriticState state = train(data, CorruptionProcess::gaussian(1.0), default_critic_spec(2), tc);

    Rng noise(77);
    const Tensor corrupted = gaussian_corrupt(data, 1.0, noise);
    const Tensor f_nom = critic_forward(state.params, data);
    const Tensor f_cor = critic_forward(state.params, corrupted);
    double mean_nom = 0.0, mean_cor = 0.0;
    for (long i = 0; i < n; ++i) {
        mean_nom += f_nom.at(i, 0);
        mean_cor += f_cor.at(i, 0);
    }
    CHECK(mean_nom / n > mean_cor / n);
    CHECK(state.step == 300);
    CHECK_FALSE(state.trace.empty());
}

TEST_CASE("train: fixed seed reproduces the loss trace exactly") {
    Rng data_rng(4);
    Tensor data(64, 2);
    for (long i = 0; i < data.size(); ++i) data[i] = data_rng.normal();
    TrainConfig tc;
    tc.iterations = 60;
    tc.batch_size = 16;
    tc.seed = 11;
    tc.trace_every = 10;
    const CriticState a = train(data, CorruptionProcess::gaussian(1.0), default_critic_spec(2), tc);
    const CriticState b = train(data, CorruptionProcess::gaussian(1.0), default_critic_spec(2), tc);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].step == b.trace[i].step);
        CHECK(a.trace[i].loss == b.trace[i].loss);
        CHECK(a.trace[i].gp_term == b.trace[i].gp_term);
        CHECK(a.trace[i].dual_estimate == b.trace[i].dual_estimate);
    }
    for (size_t p = 0; p < a.params.entries.size(); ++p)
        CHECK(a.params.entries[p].second == b.params.entries[p].second);
}

TEST_CASE("train: divergence aborts with the step index") {
    Rng data_rng(4);
    Tensor data(64, 1);
    for (long i = 0; i < data.size(); ++i) data[i] = data_rng.normal();
    TrainConfig tc;
    tc.iterations = 400;
    tc.batch_size = 8;
    tc.learning_rate = 1e150; // guaranteed numeric blowup
    tc.seed = 2;
    DenseNetSpec spec;
    spec.input_dim = 1;
    spec.hidden_dims = {8};
    spec.output_dim = 1;
    CHECK_THROWS_WITH_AS((void)train(data, CorruptionProcess::gaussian(1.0), spec, tc),
                         doctest::Contains("diverged at step"), NumericError);
}

TEST_CASE("train: dataset smaller than batch size is rejected") {
    TrainConfig tc;
    tc.batch_size = 128;
    CHECK_THROWS_AS((void)train(Tensor(16, 2), CorruptionProcess::gaussian(1.0), default_critic_spec(2), tc),
                    ContractError);
}

TEST_CASE("anomaly_score: equals -f and ordering is shift-invariant") {
    ParamSet ps = linear_critic({{2.0}}, 1.0);
    const Tensor x = Tensor::from_rows({{-1.0}, {0.0}, {2.0}});
    const Tensor f = critic_forward(ps, x);
    const Tensor s = anomaly_score(ps, x);
    for (long i = 0; i < 3; ++i) CHECK(s.at(i, 0) == doctest::Approx(-f.at(i, 0)).epsilon(1e-15));

    // adding a constant to f (via the bias) must not change the ordering
    ParamSet shifted = linear_critic({{2.0}}, 101.0);
    const Tensor s2 = anomaly_score(shifted, x);
    for (long i = 0; i + 1 < 3; ++i) CHECK((s.at(i, 0) < s.at(i + 1, 0)) == (s2.at(i, 0) < s2.at(i + 1, 0)));
}

TEST_CASE("train: contamination shifts the learned potential within the transport bound") {
    // train twice, clean vs 5% contaminated, with the corruption process as
    // the true anomaly sampler; the change in the potential's nominal/anomaly
    // gap stays within W(Pn, mixture)/(1-gamma) plus slack for suboptimality
    const double gamma = 0.05;
    Rng data_rng(61);
    const long n = 200;
    Tensor clean(n, 2);
    for (long i = 0; i < clean.size(); ++i) clean[i] = data_rng.normal();

    Rng anom_rng(62);
    const Tensor anomalies = gaussian_corrupt(clean, 1.0, anom_rng);
    const long a = static_cast<long>(std::llround(gamma * n / (1.0 - gamma)));
    Tensor mixture(n + a, 2);
    for (long i = 0; i < n; ++i)
        for (long c = 0; c < 2; ++c) mixture.at(i, c) = clean.at(i, c);
    for (long i = 0; i < a; ++i)
        for (long c = 0; c < 2; ++c) mixture.at(n + i, c) = anomalies.at(i, c);

    DenseNetSpec spec;
    spec.input_dim = 2;
    spec.hidden_dims = {64, 32};
    spec.output_dim = 1;
    TrainConfig tc;
    tc.iterations = 800;
    tc.batch_size = 64;
    tc.seed = 5;
    const CriticState f_star = train(clean, CorruptionProcess::gaussian(1.0), spec, tc);
    const CriticState f_star2 = train(mixture, CorruptionProcess::gaussian(1.0), spec, tc);

    // held-out draws from Pn and Pa
    Rng held(63);
    Tensor pn(256, 2);
    for (long i = 0; i < pn.size(); ++i) pn[i] = held.normal();
    const Tensor pa = gaussian_corrupt(pn, 1.0, held);

    auto mean_f = [](const CriticState& s, const Tensor& x) {
        const Tensor f = critic_forward(s.params, x);
        double m = 0.0;
        for (long i = 0; i < f.size(); ++i) m += f[i];
        return m / static_cast<double>(f.size());
    };
    const double a_value = std::abs((mean_f(f_star, pn) - mean_f(f_star2, pn)) +
                                    (mean_f(f_star2, pa) - mean_f(f_star, pa)));

    // oracle W1 between the clean training set and the contaminated one
    const double w = ot::exact_w1(ot::EmpiricalDist::uniform(clean), ot::EmpiricalDist::uniform(mixture)).cost;
    const double bound = w / (1.0 - gamma) + 0.1;
    CAPTURE(a_value);
    CAPTURE(bound);
    CHECK(a_value <= bound);
}

TEST_CASE("train: dual estimate approaches the oracle W1 on a 1-d gaussian pair") {
    // desk-size sanity run; the acceptance suite runs the full protocol
    Rng data_rng(31);
    const long n = 512;
    Tensor data(n, 1);
    for (long i = 0; i < n; ++i) data.at(i, 0) = 0.1 * data_rng.normal();
    TrainConfig tc;
    tc.iterations = 600;
    tc.batch_size = 128;
    tc.seed = 3;
    tc.gp_warmup_steps = 300;
    DenseNetSpec spec;
    spec.input_dim = 1;
    spec.hidden_dims = {64, 32};
    spec.output_dim = 1;
    const CriticState state = train(data, CorruptionProcess::gaussian(1.0), spec, tc);

    Rng held(99);
    Tensor nom(256, 1), cor(256, 1);
    for (long i = 0; i < 256; ++i) {
        nom.at(i, 0) = 0.1 * held.normal();
        cor.at(i, 0) = 0.1 * held.normal() + held.normal();
    }
    const Tensor f_nom = critic_forward(state.params, nom);
    const Tensor f_cor = critic_forward(state.params, cor);
    double dual = 0.0;
    for (long i = 0; i < 256; ++i) dual += f_nom.at(i, 0) - f_cor.at(i, 0);
    dual /= 256.0;

    const double oracle =
        ot::exact_w1(ot::EmpiricalDist::uniform(nom), ot::EmpiricalDist::uniform(cor)).cost;
    CHECK(dual > 0.35 * oracle); // loose at this step count
    CHECK(dual < 1.15 * oracle);
}
