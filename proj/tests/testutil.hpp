#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "lipad/graph.hpp"
#include "lipad/metrics.hpp"
#include "lipad/tensor.hpp"

namespace testutil {

using lipad::Tensor;

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-6});
    return std::abs(a - b) / denom;
}

/// Central finite differences of a scalar graph output w.r.t. one leaf.
inline Tensor fd_leaf_gradient(lipad::ad::Graph& g, lipad::ad::NodeId out, const std::string& leaf,
                               const Tensor& base, double h = 1e-5) {
    Tensor grad(base.rows(), base.cols());
    for (long i = 0; i < base.size(); ++i) {
        Tensor tp = base;
        tp[i] += h;
        g.bind(leaf, tp);
        const double fp = g.forward(out).scalar_value();
        Tensor tm = base;
        tm[i] -= h;
        g.bind(leaf, tm);
        const double fm = g.forward(out).scalar_value();
        grad[i] = (fp - fm) / (2.0 * h);
    }
    g.bind(leaf, base);
    g.forward(out);
    return grad;
}

inline double max_rel_err(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (long i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
    return worst;
}

/// Loop-free-of-shared-code MLP evaluator for one row: weights[l] is
/// fan_in x fan_out row-major, biases[l] length fan_out; leaky-relu between
/// layers, linear head.
inline std::vector<double> straight_line_mlp(const std::vector<std::vector<double>>& weights,
                                             const std::vector<std::vector<double>>& biases,
                                             const std::vector<long>& dims, double slope,
                                             const std::vector<double>& x) {
    std::vector<double> h = x;
    for (size_t layer = 0; layer + 1 < dims.size(); ++layer) {
        const long in = dims[layer], out_dim = dims[layer + 1];
        std::vector<double> z(out_dim, 0.0);
        for (long o = 0; o < out_dim; ++o) {
            double acc = biases[layer][o];
            for (long i = 0; i < in; ++i) acc += h[i] * weights[layer][i * out_dim + o];
            z[o] = acc;
        }
        if (layer + 2 < dims.size())
            for (double& v : z)
                if (v < 0.0) v *= slope;
        h = std::move(z);
    }
    return h;
}

/// Quadratic-time AUC oracle: pair counting with ties worth 1/2.
inline double brute_force_auc(const lipad::ScoredDataset& sd) {
    double wins = 0.0;
    long pairs = 0;
    for (size_t i = 0; i < sd.scores.size(); ++i) {
        if (sd.labels[i] != 1) continue;
        for (size_t j = 0; j < sd.scores.size(); ++j) {
            if (sd.labels[j] != 0) continue;
            ++pairs;
            if (sd.scores[i] > sd.scores[j])
                wins += 1.0;
            else if (sd.scores[i] == sd.scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

/// Plain-loop LOF with the same conventions as the library (exactly k
/// neighbors, distance ties by lower index, lrd floored at 1e-12).
struct BruteLof {
    const Tensor& pts;
    long k;

    std::vector<std::pair<double, int>> neighbors(const std::vector<double>& x, long exclude) const {
        std::vector<std::pair<double, int>> all;
        for (long i = 0; i < pts.rows(); ++i) {
            if (i == exclude) continue;
            double acc = 0.0;
            for (long c = 0; c < pts.cols(); ++c) {
                const double d = pts.at(i, c) - x[c];
                acc += d * d;
            }
            all.emplace_back(std::sqrt(acc), static_cast<int>(i));
        }
        std::sort(all.begin(), all.end());
        all.resize(k);
        return all;
    }

    std::vector<double> row(long i) const {
        std::vector<double> x(pts.cols());
        for (long c = 0; c < pts.cols(); ++c) x[c] = pts.at(i, c);
        return x;
    }

    double kdist(long i) const { return neighbors(row(i), i).back().first; }

    double lrd(long i) const {
        double reach = 0.0;
        for (const auto& [d, o] : neighbors(row(i), i)) reach += std::max(kdist(o), d);
        return 1.0 / std::max(reach / static_cast<double>(k), 1e-12);
    }

    double lof(const std::vector<double>& x, long exclude = -1) const {
        double reach = 0.0, nlrd = 0.0;
        for (const auto& [d, o] : neighbors(x, exclude)) {
            reach += std::max(kdist(o), d);
            nlrd += lrd(o);
        }
        const double lrd_x = 1.0 / std::max(reach / static_cast<double>(k), 1e-12);
        return (nlrd / static_cast<double>(k)) / lrd_x;
    }
};

/// Fresh scratch directory under the build tree.
inline std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("lipad-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

} // namespace testutil
