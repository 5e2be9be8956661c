#include "lipad/trainer.hpp"

#include <cmath>
#include <fstream>

#include "lipad/errors.hpp"

namespace lipad {

void TrainConfig::validate() const {
    if (lambda < 0.0) throw ConfigError("train config: lambda must be nonnegative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("train config: betas must be in [0,1)");
    if (batch_size < 2) throw ConfigError("train config: batch_size must be >= 2");
    if (iterations < 1) throw ConfigError("train config: iterations must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("train config: learning_rate must be positive");
    if (epsilon <= 0.0) throw ConfigError("train config: epsilon must be positive");
    if (trace_every < 1) throw ConfigError("train config: trace_every must be >= 1");
    if (gp_warmup_steps < 0) throw ConfigError("train config: gp_warmup_steps must be >= 0");
}

Tensor interpolates_with_t(const Tensor& nominal, const Tensor& corrupt, const std::vector<double>& t) {
    if (nominal.rows() != corrupt.rows() || nominal.cols() != corrupt.cols())
        throw DimensionError("interpolates: batch shapes differ");
    if (static_cast<long>(t.size()) != nominal.rows()) throw DimensionError("interpolates: t length mismatch");
    Tensor out(nominal.rows(), nominal.cols());
    for (long r = 0; r < out.rows(); ++r)
        for (long c = 0; c < out.cols(); ++c)
            out.at(r, c) = t[r] * nominal.at(r, c) + (1.0 - t[r]) * corrupt.at(r, c);
    return out;
}

Tensor interpolates(const Tensor& nominal, const Tensor& corrupt, Rng& rng) {
    std::vector<double> t(nominal.rows());
    for (double& v : t) v = rng.uniform();
    return interpolates_with_t(nominal, corrupt, t);
}

LossResult critic_loss(const ParamSet& params, const Tensor& nominal, const Tensor& corrupt, double lambda, Rng& rng) {
    if (nominal.rows() == 0 || corrupt.rows() == 0) throw ContractError("critic_loss: empty batch");
    if (nominal.cols() != corrupt.cols()) throw DimensionError("critic_loss: batch widths differ");
    if (nominal.rows() != corrupt.rows()) throw DimensionError("critic_loss: batch row counts differ");

    ad::Graph g;
    const long n = nominal.rows();
    const long d = nominal.cols();
    const ad::NodeId x_nom = g.input("x_nominal", n, d);
    const ad::NodeId x_cor = g.input("x_corrupt", n, d);
    const ad::NodeId x_int = g.input("x_interp", n, d);
    const ad::NodeId f_nom = build_mlp_graph(g, params, x_nom);
    const ad::NodeId f_cor = build_mlp_graph(g, params, x_cor);
    const ad::NodeId f_int = build_mlp_graph(g, params, x_int);
    const ad::NodeId mean_nom = g.mean(f_nom);
    const ad::NodeId mean_cor = g.mean(f_cor);
    const ad::NodeId norm = g.input_grad_norm(f_int, x_int);
    const ad::NodeId gp_mean = g.mean(g.square(g.sub_scalar(norm, 1.0)));
    const ad::NodeId loss = g.add(g.sub(mean_cor, mean_nom), g.scale(gp_mean, lambda));

    bind_params(g, params);
    g.bind("x_nominal", nominal);
    g.bind("x_corrupt", corrupt);
    g.bind("x_interp", interpolates(nominal, corrupt, rng));

    LossResult res;
    try {
        res.loss = g.forward(loss).scalar_value();
        res.grads = g.backward(loss);
    } catch (const NumericError& e) {
        double max_param = 0.0, max_grad = 0.0;
        for (const auto& [name, t] : params.entries) max_param = std::max(max_param, max_abs(t));
        for (const auto& [name, t] : res.grads) max_grad = std::max(max_grad, max_abs(t));
        throw NumericError(std::string(e.what()) + " (max |param| = " + std::to_string(max_param) +
                           ", max |grad| = " + std::to_string(max_grad) + ")");
    }
    res.gp_term = lambda * g.value(gp_mean).scalar_value();
    res.dual_estimate = g.value(mean_nom).scalar_value() - g.value(mean_cor).scalar_value();
    return res;
}

CriticState train(const Tensor& nominal_data, const CorruptionProcess& corruption, const DenseNetSpec& spec,
                  const TrainConfig& config) {
    config.validate();
    corruption.validate();
    const long n_data = nominal_data.rows();
    if (n_data < config.batch_size)
        throw ContractError("train: dataset smaller than batch size (" + std::to_string(n_data) + " < " +
                            std::to_string(config.batch_size) + ")");
    if (nominal_data.cols() != spec.input_dim) throw DimensionError("train: data width != critic input dim");

    CriticState state;
    state.params = build_critic(spec, config.seed);
    for (const auto& [name, t] : state.params.entries) {
        state.adam_m.emplace_back(t.rows(), t.cols());
        state.adam_v.emplace_back(t.rows(), t.cols());
    }

    Rng root(config.seed);
    Rng rng_batch = root.child("minibatch");
    Rng rng_corrupt = root.child("corruption");
    Rng rng_interp = root.child("interpolate");

    const long n = config.batch_size;
    const long d = spec.input_dim;

    ad::Graph g;
    const ad::NodeId x_nom = g.input("x_nominal", n, d);
    const ad::NodeId x_cor = g.input("x_corrupt", n, d);
    const ad::NodeId x_int = g.input("x_interp", n, d);
    const ad::NodeId f_nom = build_mlp_graph(g, state.params, x_nom);
    const ad::NodeId f_cor = build_mlp_graph(g, state.params, x_cor);
    const ad::NodeId f_int = build_mlp_graph(g, state.params, x_int);
    const ad::NodeId mean_nom = g.mean(f_nom);
    const ad::NodeId mean_cor = g.mean(f_cor);
    const ad::NodeId norm = g.input_grad_norm(f_int, x_int);
    const ad::NodeId gp_mean = g.mean(g.square(g.sub_scalar(norm, 1.0)));
    const ad::NodeId gp_scaled = g.scale(gp_mean, config.lambda);
    const ad::NodeId loss = g.add(g.sub(mean_cor, mean_nom), gp_scaled);

    auto sample_batch = [&](Rng& r) {
        Tensor batch(n, d);
        for (long i = 0; i < n; ++i) {
            const long idx = static_cast<long>(r.uniform_int(static_cast<std::uint64_t>(n_data)));
            for (long c = 0; c < d; ++c) batch.at(i, c) = nominal_data.at(idx, c);
        }
        return batch;
    };

    for (long step = 1; step <= config.iterations; ++step) {
        const Tensor nominal = sample_batch(rng_batch);
        const Tensor corrupt = corruption.apply(sample_batch(rng_corrupt), rng_corrupt);
        const Tensor interp = interpolates(nominal, corrupt, rng_interp);

        if (config.gp_warmup_steps > 0) {
            const double ramp = std::min(1.0, static_cast<double>(step) / static_cast<double>(config.gp_warmup_steps));
            g.set_scalar(gp_scaled, config.lambda * ramp);
        }
        bind_params(g, state.params);
        g.bind("x_nominal", nominal);
        g.bind("x_corrupt", corrupt);
        g.bind("x_interp", interp);

        double loss_value;
        ad::GradMap grads;
        try {
            loss_value = g.forward(loss).scalar_value();
            grads = g.backward(loss);
        } catch (const NumericError& e) {
            double max_param = 0.0, max_grad = 0.0;
            for (const auto& [name, t] : state.params.entries) max_param = std::max(max_param, max_abs(t));
            for (const auto& [name, t] : grads) max_grad = std::max(max_grad, max_abs(t));
            throw NumericError("train: diverged at step " + std::to_string(step) + ": " + e.what() +
                               " (max |param| = " + std::to_string(max_param) + ", max |grad| = " +
                               std::to_string(max_grad) + ")");
        }

        // Adam
        state.step = step;
        const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
        for (size_t p = 0; p < state.params.entries.size(); ++p) {
            auto& [name, theta] = state.params.entries[p];
            const Tensor& grad = grads.at(name);
            Tensor& m = state.adam_m[p];
            Tensor& v = state.adam_v[p];
            for (long i = 0; i < theta.size(); ++i) {
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                theta[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
            }
        }

        if (step % config.trace_every == 0 || step == 1 || step == config.iterations) {
            TraceRow row;
            row.step = step;
            row.loss = loss_value;
            row.gp_term = g.value(gp_scaled).scalar_value();
            row.dual_estimate = g.value(mean_nom).scalar_value() - g.value(mean_cor).scalar_value();
            state.trace.push_back(row);
        }
    }
    return state;
}

Tensor anomaly_score(const ParamSet& params, const Tensor& x) {
    Tensor f = critic_forward(params, x);
    for (long i = 0; i < f.size(); ++i) f[i] = -f[i];
    return f;
}

Tensor anomaly_score(const CriticState& state, const Tensor& x) { return anomaly_score(state.params, x); }

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_trace_csv: cannot open '" + path + "'");
    out << "step,loss,gp_term,dual_estimate\n";
    char buf[160];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof(buf), "%ld,%.12g,%.12g,%.12g\n", r.step, r.loss, r.gp_term, r.dual_estimate);
        out << buf;
    }
}

} // namespace lipad
