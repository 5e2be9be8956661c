#include "lipad/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lipad/errors.hpp"

namespace lipad {

namespace {
constexpr double kLrdFloor = 1e-12;

double dist_to(const Tensor& pts, long i, std::span<const double> x) {
    double acc = 0.0;
    for (long c = 0; c < pts.cols(); ++c) {
        const double d = pts.at(i, c) - x[c];
        acc += d * d;
    }
    return std::sqrt(acc);
}
} // namespace

KnnIndex::KnnIndex(Tensor points) : points_(std::move(points)) {
    if (points_.rows() < 1) throw ContractError("KnnIndex: empty point set");
}

std::vector<std::pair<double, int>> KnnIndex::k_nearest(std::span<const double> x, long k, long exclude) const {
    const long n = size();
    const long available = exclude >= 0 ? n - 1 : n;
    if (k < 1 || k > available)
        throw ContractError("k_nearest: k = " + std::to_string(k) + " out of range for " + std::to_string(available) +
                            " candidates");
    if (static_cast<long>(x.size()) != dim()) throw DimensionError("k_nearest: query width mismatch");
    std::vector<std::pair<double, int>> all;
    all.reserve(n);
    for (long i = 0; i < n; ++i) {
        if (i == exclude) continue;
        all.emplace_back(dist_to(points_, i, x), static_cast<int>(i));
    }
    // pair ordering breaks distance ties by lower index
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    all.resize(k);
    return all;
}

void KnnIndex::batch_k_nearest(const Tensor& queries, long k, std::vector<std::vector<int>>& out_idx,
                               std::vector<std::vector<double>>& out_dist, long exclude_shift) const {
    const long nq = queries.rows();
    out_idx.assign(nq, {});
    out_dist.assign(nq, {});
    const long block = std::max<long>(1, (1 << 22) / std::max<long>(1, size())); // ~32MB of doubles per block
    for (long q0 = 0; q0 < nq; q0 += block) {
        const long qn = std::min(block, nq - q0);
        Tensor sub(qn, queries.cols());
        for (long r = 0; r < qn; ++r)
            for (long c = 0; c < queries.cols(); ++c) sub.at(r, c) = queries.at(q0 + r, c);
        const Tensor d2 = pairwise_sqdist(sub, points_);
        for (long r = 0; r < qn; ++r) {
            const long exclude = exclude_shift >= 0 ? exclude_shift + q0 + r : -1;
            std::vector<std::pair<double, int>> row;
            row.reserve(size());
            for (long j = 0; j < size(); ++j) {
                if (j == exclude) continue;
                row.emplace_back(d2.at(r, j), static_cast<int>(j));
            }
            std::partial_sort(row.begin(), row.begin() + k, row.end());
            auto& oi = out_idx[q0 + r];
            auto& od = out_dist[q0 + r];
            oi.resize(k);
            od.resize(k);
            for (long j = 0; j < k; ++j) {
                oi[j] = row[j].second;
                od[j] = std::sqrt(std::max(0.0, row[j].first));
            }
        }
    }
}

double knn_sum_score(const KnnIndex& index, std::span<const double> x, long k, long member_index) {
    const auto nn = index.k_nearest(x, k, member_index);
    double total = 0.0;
    for (const auto& [d, i] : nn) total += d;
    return total;
}

std::vector<double> knn_sum_scores(const KnnIndex& index, const Tensor& queries, long k) {
    std::vector<std::vector<int>> idx;
    std::vector<std::vector<double>> dist;
    index.batch_k_nearest(queries, k, idx, dist);
    std::vector<double> out(queries.rows());
    for (long q = 0; q < queries.rows(); ++q) out[q] = std::accumulate(dist[q].begin(), dist[q].end(), 0.0);
    return out;
}

LofModel::LofModel(const KnnIndex& index, long k) : index_(index), k_(k) {
    const long n = index.size();
    if (k < 1 || k >= n) throw ContractError("LofModel: need 1 <= k < N");
    index_.batch_k_nearest(index_.points(), k, neighbors_, neighbor_dist_, /*exclude_shift=*/0);
    kdist_.resize(n);
    for (long i = 0; i < n; ++i) kdist_[i] = neighbor_dist_[i].back();
    lrd_.resize(n);
    for (long i = 0; i < n; ++i) {
        double reach = 0.0;
        for (long j = 0; j < k_; ++j) reach += std::max(kdist_[neighbors_[i][j]], neighbor_dist_[i][j]);
        lrd_[i] = 1.0 / std::max(reach / static_cast<double>(k_), kLrdFloor);
    }
}

double LofModel::score(std::span<const double> x, long member_index) const {
    const auto nn = index_.k_nearest(x, k_, member_index);
    double reach = 0.0;
    double neighbor_lrd = 0.0;
    for (const auto& [d, i] : nn) {
        reach += std::max(kdist_[i], d);
        neighbor_lrd += lrd_[i];
    }
    const double lrd_x = 1.0 / std::max(reach / static_cast<double>(k_), kLrdFloor);
    return (neighbor_lrd / static_cast<double>(k_)) / lrd_x;
}

std::vector<double> LofModel::scores(const Tensor& queries) const {
    std::vector<std::vector<int>> idx;
    std::vector<std::vector<double>> dist;
    index_.batch_k_nearest(queries, k_, idx, dist);
    std::vector<double> out(queries.rows());
    for (long q = 0; q < queries.rows(); ++q) {
        double reach = 0.0;
        double neighbor_lrd = 0.0;
        for (long j = 0; j < k_; ++j) {
            reach += std::max(kdist_[idx[q][j]], dist[q][j]);
            neighbor_lrd += lrd_[idx[q][j]];
        }
        const double lrd_x = 1.0 / std::max(reach / static_cast<double>(k_), kLrdFloor);
        out[q] = (neighbor_lrd / static_cast<double>(k_)) / lrd_x;
    }
    return out;
}

double lof_score(const KnnIndex& index, std::span<const double> x, long k, long member_index) {
    return LofModel(index, k).score(x, member_index);
}

AeModel ae_train(const Tensor& data, const AutoencoderSpec& spec, double denoising_sigma, const TrainConfig& config) {
    config.validate();
    spec.validate();
    if (denoising_sigma < 0.0) throw ContractError("ae_train: denoising sigma must be nonnegative");
    const long n_data = data.rows();
    if (n_data < config.batch_size) throw ContractError("ae_train: dataset smaller than batch size");
    if (data.cols() != spec.input_dim) throw DimensionError("ae_train: data width != input dim");

    AeModel model;
    model.params = build_autoencoder(spec, config.seed);
    model.denoising_sigma = denoising_sigma;

    std::vector<Tensor> adam_m, adam_v;
    for (const auto& [name, t] : model.params.entries) {
        adam_m.emplace_back(t.rows(), t.cols());
        adam_v.emplace_back(t.rows(), t.cols());
    }

    Rng root(config.seed);
    Rng rng_batch = root.child("ae-minibatch");
    Rng rng_noise = root.child("ae-noise");

    const long n = config.batch_size;
    const long d = spec.input_dim;

    ad::Graph g;
    const ad::NodeId x_in = g.input("x_in", n, d);
    const ad::NodeId x_target = g.input("x_target", n, d);
    const ad::NodeId recon = build_mlp_graph(g, model.params, x_in);
    const ad::NodeId loss = g.mean(g.square(g.sub(recon, x_target)));

    for (long step = 1; step <= config.iterations; ++step) {
        Tensor batch(n, d);
        for (long i = 0; i < n; ++i) {
            const long idx = static_cast<long>(rng_batch.uniform_int(static_cast<std::uint64_t>(n_data)));
            for (long c = 0; c < d; ++c) batch.at(i, c) = data.at(idx, c);
        }
        Tensor noisy = denoising_sigma > 0.0 ? gaussian_corrupt(batch, denoising_sigma, rng_noise) : batch;

        bind_params(g, model.params);
        g.bind("x_in", std::move(noisy));
        g.bind("x_target", batch);

        double loss_value;
        ad::GradMap grads;
        try {
            loss_value = g.forward(loss).scalar_value();
            grads = g.backward(loss);
        } catch (const NumericError& e) {
            throw NumericError("ae_train: diverged at step " + std::to_string(step) + ": " + e.what());
        }

        const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
        for (size_t p = 0; p < model.params.entries.size(); ++p) {
            auto& [name, theta] = model.params.entries[p];
            const Tensor& grad = grads.at(name);
            for (long i = 0; i < theta.size(); ++i) {
                adam_m[p][i] = config.beta1 * adam_m[p][i] + (1.0 - config.beta1) * grad[i];
                adam_v[p][i] = config.beta2 * adam_v[p][i] + (1.0 - config.beta2) * grad[i] * grad[i];
                theta[i] -= config.learning_rate * (adam_m[p][i] / bc1) / (std::sqrt(adam_v[p][i] / bc2) + config.epsilon);
            }
        }

        if (step % config.trace_every == 0 || step == 1 || step == config.iterations)
            model.trace.push_back({step, loss_value, 0.0, 0.0});
    }
    return model;
}

std::vector<double> ae_score(const AeModel& model, const Tensor& x) {
    const Tensor recon = autoencoder_forward(model.params, x);
    std::vector<double> out(x.rows());
    for (long r = 0; r < x.rows(); ++r) {
        double acc = 0.0;
        for (long c = 0; c < x.cols(); ++c) {
            const double d = recon.at(r, c) - x.at(r, c);
            acc += d * d;
        }
        out[r] = acc / static_cast<double>(x.cols());
    }
    return out;
}

} // namespace lipad
