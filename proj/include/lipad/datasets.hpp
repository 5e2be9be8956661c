#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lipad/tensor.hpp"

namespace lipad {

/// Points with 0 = nominal / 1 = anomalous labels and optional class ids
/// (digit classes for image data).
struct LabeledData {
    Tensor points;
    std::vector<int> labels;
    std::vector<int> class_ids;

    long size() const { return points.rows(); }
    long dim() const { return points.cols(); }
};

/// Standard two-moons construction: upper half-circle at (0,0), reflected
/// lower half-circle at (1, 0.5), isotropic Gaussian jitter. All nominal.
LabeledData make_moons(long n, double noise, std::uint64_t seed);

/// IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian dims).
/// Pixels rescaled to [0,1]; class ids from the label file.
LabeledData load_mnist_idx(const std::string& images_path, const std::string& labels_path);

void write_idx_images(const std::string& path, const Tensor& images01, long side);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

/// Appends a = round(gamma*N/(1-gamma)) anomaly rows drawn without
/// replacement; injected rows are labeled 1.
LabeledData contaminate(const LabeledData& nominal, const LabeledData& anomalies, double gamma, std::uint64_t seed);

/// 10-d standardized Gaussian-mixture nominal data plus anomalies that copy
/// nominal rows with coordinate 0 pushed beyond +2 std. Returns n nominal
/// rows followed by round(n/4) anomalous rows.
LabeledData synthetic_tabular(long n, std::uint64_t seed);

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev; // floored at 1e-8

    Tensor apply(const Tensor& x) const;
    Tensor invert(const Tensor& x) const;
};

Standardizer fit_standardizer(const Tensor& x);

/// The all-black 28x28 image in [0,1] pixel space.
Tensor black_image();

/// Row subsets / splits used by the experiment drivers.
LabeledData select_rows(const LabeledData& d, const std::vector<long>& rows);
LabeledData filter_by_class(const LabeledData& d, int class_id, bool keep);

} // namespace lipad
