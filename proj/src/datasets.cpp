#include "lipad/datasets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "lipad/errors.hpp"
#include "lipad/rng.hpp"

namespace lipad {

LabeledData make_moons(long n, double noise, std::uint64_t seed) {
    if (n < 2) throw ContractError("make_moons: n must be >= 2");
    if (noise < 0.0) throw ContractError("make_moons: noise must be nonnegative");
    const long n_lower = n / 2;
    const long n_upper = n - n_lower;
    Rng rng = Rng(seed).child("moons");

    LabeledData d;
    d.points = Tensor(n, 2);
    d.labels.assign(n, 0);
    for (long i = 0; i < n_upper; ++i) {
        const double t = n_upper > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_upper - 1)
                                     : 0.0;
        d.points.at(i, 0) = std::cos(t);
        d.points.at(i, 1) = std::sin(t);
    }
    for (long i = 0; i < n_lower; ++i) {
        const double t = n_lower > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_lower - 1)
                                     : 0.0;
        d.points.at(n_upper + i, 0) = 1.0 - std::cos(t);
        d.points.at(n_upper + i, 1) = 0.5 - std::sin(t);
    }
    if (noise > 0.0)
        for (long i = 0; i < d.points.size(); ++i) d.points[i] += rng.normal(0.0, noise);
    return d;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError("idx: '" + path + "' truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

LabeledData load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw IoError("idx: cannot open images file '" + images_path + "'");
    if (read_be32(imgs, images_path) != 0x00000803u)
        throw IoError("idx: bad magic in images file '" + images_path + "' (want 0x00000803)");
    const std::uint32_t count = read_be32(imgs, images_path);
    const std::uint32_t rows = read_be32(imgs, images_path);
    const std::uint32_t cols = read_be32(imgs, images_path);
    const long width = static_cast<long>(rows) * static_cast<long>(cols);

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw IoError("idx: cannot open labels file '" + labels_path + "'");
    if (read_be32(labs, labels_path) != 0x00000801u)
        throw IoError("idx: bad magic in labels file '" + labels_path + "' (want 0x00000801)");
    const std::uint32_t lab_count = read_be32(labs, labels_path);
    if (lab_count != count)
        throw IoError("idx: image count " + std::to_string(count) + " != label count " + std::to_string(lab_count));

    LabeledData d;
    d.points = Tensor(count, width);
    d.labels.assign(count, 0);
    d.class_ids.resize(count);

    std::vector<unsigned char> buf(width);
    for (std::uint32_t i = 0; i < count; ++i) {
        imgs.read(reinterpret_cast<char*>(buf.data()), width);
        if (!imgs) throw IoError("idx: images file '" + images_path + "' truncated at row " + std::to_string(i));
        for (long c = 0; c < width; ++c) d.points.at(i, c) = static_cast<double>(buf[c]) / 255.0;
        unsigned char lab;
        labs.read(reinterpret_cast<char*>(&lab), 1);
        if (!labs) throw IoError("idx: labels file '" + labels_path + "' truncated at row " + std::to_string(i));
        d.class_ids[i] = lab;
    }
    return d;
}

void write_idx_images(const std::string& path, const Tensor& images01, long side) {
    if (images01.cols() != side * side) throw ContractError("write_idx_images: width != side^2");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_idx_images: cannot open '" + path + "'");
    write_be32(out, 0x00000803u);
    write_be32(out, static_cast<std::uint32_t>(images01.rows()));
    write_be32(out, static_cast<std::uint32_t>(side));
    write_be32(out, static_cast<std::uint32_t>(side));
    std::vector<unsigned char> buf(images01.cols());
    for (long r = 0; r < images01.rows(); ++r) {
        for (long c = 0; c < images01.cols(); ++c) {
            const double v = std::clamp(images01.at(r, c), 0.0, 1.0);
            buf[c] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw IoError("write_idx_images: write failed for '" + path + "'");
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_idx_labels: cannot open '" + path + "'");
    write_be32(out, 0x00000801u);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        out.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!out) throw IoError("write_idx_labels: write failed for '" + path + "'");
}

LabeledData contaminate(const LabeledData& nominal, const LabeledData& anomalies, double gamma, std::uint64_t seed) {
    if (gamma < 0.0 || gamma >= 0.5) throw ContractError("contaminate: gamma must be in [0, 0.5)");
    if (gamma > 0.0 && anomalies.dim() != nominal.dim()) throw DimensionError("contaminate: dimension mismatch");
    const long n = nominal.size();
    const long a = static_cast<long>(std::llround(gamma * static_cast<double>(n) / (1.0 - gamma)));
    if (a > anomalies.size())
        throw ContractError("contaminate: anomaly pool exhausted (need " + std::to_string(a) + ", have " +
                            std::to_string(anomalies.size()) + ")");

    LabeledData out;
    out.points = Tensor(n + a, nominal.dim());
    out.labels.assign(n + a, 0);
    const bool classes = !nominal.class_ids.empty() && !anomalies.class_ids.empty();
    if (classes) out.class_ids.resize(n + a);
    for (long i = 0; i < n; ++i) {
        for (long c = 0; c < nominal.dim(); ++c) out.points.at(i, c) = nominal.points.at(i, c);
        if (classes) out.class_ids[i] = nominal.class_ids[i];
    }
    if (a > 0) {
        Rng rng = Rng(seed).child("contaminate");
        const auto picks = rng.sample_without_replacement(static_cast<int>(anomalies.size()), static_cast<int>(a));
        for (long i = 0; i < a; ++i) {
            const long src = picks[i];
            for (long c = 0; c < nominal.dim(); ++c) out.points.at(n + i, c) = anomalies.points.at(src, c);
            out.labels[n + i] = 1;
            if (classes) out.class_ids[n + i] = anomalies.class_ids[src];
        }
    }
    return out;
}

LabeledData synthetic_tabular(long n, std::uint64_t seed) {
    if (n < 100) throw ContractError("synthetic_tabular: n must be >= 100");
    constexpr long kDim = 10;
    constexpr long kComponents = 3;
    Rng root(seed);
    Rng rng_means = root.child("tabular-means");
    Rng rng_draw = root.child("tabular-draw");
    Rng rng_anom = root.child("tabular-anomaly");

    // mixture component means and per-component scales
    std::vector<double> means(kComponents * kDim);
    std::vector<double> scales(kComponents * kDim);
    for (long i = 0; i < kComponents * kDim; ++i) {
        means[i] = rng_means.normal(0.0, 1.5);
        scales[i] = 0.4 + 0.6 * rng_means.uniform();
    }

    const long n_anom = n / 4;
    Tensor raw(n, kDim);
    for (long i = 0; i < n; ++i) {
        const long comp = static_cast<long>(rng_draw.uniform_int(kComponents));
        for (long c = 0; c < kDim; ++c)
            raw.at(i, c) = rng_draw.normal(means[comp * kDim + c], scales[comp * kDim + c]);
    }
    const Standardizer std_fit = fit_standardizer(raw);
    Tensor nominal = std_fit.apply(raw);

    LabeledData d;
    d.points = Tensor(n + n_anom, kDim);
    d.labels.assign(n + n_anom, 0);
    for (long i = 0; i < n; ++i)
        for (long c = 0; c < kDim; ++c) d.points.at(i, c) = nominal.at(i, c);
    // anomalies: copies of nominal rows with the "lab value" coordinate
    // pushed past +2 standard deviations
    for (long i = 0; i < n_anom; ++i) {
        const long src = static_cast<long>(rng_anom.uniform_int(static_cast<std::uint64_t>(n)));
        for (long c = 0; c < kDim; ++c) d.points.at(n + i, c) = nominal.at(src, c);
        d.points.at(n + i, 0) = 2.0 + std::abs(rng_anom.normal(0.7, 0.4)) + 1e-9;
        d.labels[n + i] = 1;
    }
    return d;
}

Standardizer fit_standardizer(const Tensor& x) {
    if (x.rows() < 1) throw ContractError("fit_standardizer: empty input");
    Standardizer s;
    s.mean.assign(x.cols(), 0.0);
    s.stddev.assign(x.cols(), 0.0);
    for (long r = 0; r < x.rows(); ++r)
        for (long c = 0; c < x.cols(); ++c) s.mean[c] += x.at(r, c);
    for (long c = 0; c < x.cols(); ++c) s.mean[c] /= static_cast<double>(x.rows());
    for (long r = 0; r < x.rows(); ++r)
        for (long c = 0; c < x.cols(); ++c) {
            const double d = x.at(r, c) - s.mean[c];
            s.stddev[c] += d * d;
        }
    for (long c = 0; c < x.cols(); ++c)
        s.stddev[c] = std::max(std::sqrt(s.stddev[c] / static_cast<double>(x.rows())), 1e-8);
    return s;
}

Tensor Standardizer::apply(const Tensor& x) const {
    if (x.cols() != static_cast<long>(mean.size())) throw DimensionError("standardize: width mismatch");
    Tensor out(x.rows(), x.cols());
    for (long r = 0; r < x.rows(); ++r)
        for (long c = 0; c < x.cols(); ++c) out.at(r, c) = (x.at(r, c) - mean[c]) / stddev[c];
    return out;
}

Tensor Standardizer::invert(const Tensor& x) const {
    if (x.cols() != static_cast<long>(mean.size())) throw DimensionError("standardize: width mismatch");
    Tensor out(x.rows(), x.cols());
    for (long r = 0; r < x.rows(); ++r)
        for (long c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(r, c) * stddev[c] + mean[c];
    return out;
}

Tensor black_image() { return Tensor(1, 784); }

LabeledData select_rows(const LabeledData& d, const std::vector<long>& rows) {
    LabeledData out;
    out.points = Tensor(static_cast<long>(rows.size()), d.dim());
    out.labels.reserve(rows.size());
    const bool classes = !d.class_ids.empty();
    for (size_t i = 0; i < rows.size(); ++i) {
        const long r = rows[i];
        if (r < 0 || r >= d.size()) throw ContractError("select_rows: index out of range");
        for (long c = 0; c < d.dim(); ++c) out.points.at(static_cast<long>(i), c) = d.points.at(r, c);
        out.labels.push_back(d.labels.empty() ? 0 : d.labels[r]);
        if (classes) out.class_ids.push_back(d.class_ids[r]);
    }
    return out;
}

LabeledData filter_by_class(const LabeledData& d, int class_id, bool keep) {
    if (d.class_ids.empty()) throw ContractError("filter_by_class: data has no class ids");
    std::vector<long> rows;
    for (long i = 0; i < d.size(); ++i)
        if ((d.class_ids[i] == class_id) == keep) rows.push_back(i);
    return select_rows(d, rows);
}

} // namespace lipad
