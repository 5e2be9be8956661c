#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "lipad/models.hpp"
#include "lipad/tensor.hpp"
#include "lipad/trainer.hpp"

namespace lipad {

/// Exact brute-force Euclidean nearest-neighbor index. Equidistant neighbors
/// are broken by lower index so queries are deterministic.
class KnnIndex {
  public:
    explicit KnnIndex(Tensor points);

    const Tensor& points() const { return points_; }
    long size() const { return points_.rows(); }
    long dim() const { return points_.cols(); }

    /// k nearest (distance, index) pairs, ascending; `exclude` is skipped
    /// (pass the member index when querying an index point against itself).
    std::vector<std::pair<double, int>> k_nearest(std::span<const double> x, long k, long exclude = -1) const;

    /// Per-query k nearest over a batch, GEMM-blocked for large inputs.
    /// Row q of `out_idx`/`out_dist` holds query q's neighbors ascending.
    void batch_k_nearest(const Tensor& queries, long k, std::vector<std::vector<int>>& out_idx,
                         std::vector<std::vector<double>>& out_dist, long exclude_shift = -1) const;

  private:
    Tensor points_;
};

/// Sum of distances to the k nearest index points.
double knn_sum_score(const KnnIndex& index, std::span<const double> x, long k, long member_index = -1);

/// Batched kNN-sum scores for a test matrix.
std::vector<double> knn_sum_scores(const KnnIndex& index, const Tensor& queries, long k);

/// Canonical LOF: k-distance, reachability distance, local reachability
/// density (epsilon-floored), ratio to the neighbors' mean lrd.
/// Precomputes member statistics once per k.
class LofModel {
  public:
    LofModel(const KnnIndex& index, long k);

    /// LOF of an arbitrary query point; member_index >= 0 excludes the point
    /// itself from its neighbor set.
    double score(std::span<const double> x, long member_index = -1) const;
    std::vector<double> scores(const Tensor& queries) const;

    double member_lrd(long i) const { return lrd_[i]; }
    double member_kdist(long i) const { return kdist_[i]; }

  private:
    const KnnIndex& index_;
    long k_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::vector<double>> neighbor_dist_;
    std::vector<double> kdist_;
    std::vector<double> lrd_;
};

double lof_score(const KnnIndex& index, std::span<const double> x, long k = 20, long member_index = -1);

/// Autoencoder baseline; denoising_sigma = 0 gives the plain AE.
struct AeModel {
    ParamSet params;
    double denoising_sigma = 0.0;
    std::vector<TraceRow> trace;
};

/// Minimizes mean squared reconstruction error with Adam (beta1 = 0.9).
/// With denoising_sigma > 0 Gaussian noise is added to inputs only.
AeModel ae_train(const Tensor& data, const AutoencoderSpec& spec, double denoising_sigma, const TrainConfig& config);

/// Per-point mean squared reconstruction error.
std::vector<double> ae_score(const AeModel& model, const Tensor& x);

} // namespace lipad
