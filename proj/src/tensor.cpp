#include "lipad/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace lipad {

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;
} // namespace

Tensor::Tensor(long rows, long cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols), 0.0) {
    if (rows < 0 || cols < 0) throw DimensionError("tensor: negative dimension");
}

Tensor::Tensor(long rows, long cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
    if (static_cast<long>(data_.size()) != rows * cols)
        throw DimensionError("tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_str());
}

Tensor Tensor::full(long rows, long cols, double v) {
    Tensor t(rows, cols);
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t.data_[0] = v;
    return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const long r = static_cast<long>(rows.size());
    const long c = r == 0 ? 0 : static_cast<long>(rows.begin()->size());
    Tensor t(r, c);
    long i = 0;
    for (const auto& row : rows) {
        if (static_cast<long>(row.size()) != c) throw DimensionError("tensor: ragged initializer");
        long j = 0;
        for (double v : row) t.at(i, j++) = v;
        ++i;
    }
    return t;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::scalar_value() const {
    if (size() != 1) throw DimensionError("tensor: scalar_value on shape " + shape_str());
    return data_[0];
}

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    const long ar = trans_a ? a.cols() : a.rows();
    const long ac = trans_a ? a.rows() : a.cols();
    const long br = trans_b ? b.cols() : b.rows();
    const long bc = trans_b ? b.rows() : b.cols();
    if (ac != br)
        throw DimensionError("matmul: inner dimensions " + a.shape_str() + (trans_a ? "^T" : "") + " * " +
                             b.shape_str() + (trans_b ? "^T" : "") + " do not agree");
    Tensor out(ar, bc);
    ECMap ma(a.data(), a.rows(), a.cols());
    ECMap mb(b.data(), b.rows(), b.cols());
    EMap mo(out.data(), ar, bc);
    if (!trans_a && !trans_b)
        mo.noalias() = ma * mb;
    else if (!trans_a && trans_b)
        mo.noalias() = ma * mb.transpose();
    else if (trans_a && !trans_b)
        mo.noalias() = ma.transpose() * mb;
    else
        mo.noalias() = ma.transpose() * mb.transpose();
    return out;
}

Tensor pairwise_sqdist(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) throw DimensionError("pairwise_sqdist: width mismatch");
    Tensor out(a.rows(), b.rows());
    ECMap ma(a.data(), a.rows(), a.cols());
    ECMap mb(b.data(), b.rows(), b.cols());
    EMap mo(out.data(), a.rows(), b.rows());
    Eigen::VectorXd na = ma.rowwise().squaredNorm();
    Eigen::VectorXd nb = mb.rowwise().squaredNorm();
    mo.noalias() = -2.0 * (ma * mb.transpose());
    mo.colwise() += na;
    mo.rowwise() += nb.transpose();
    mo = mo.cwiseMax(0.0);
    return out;
}

double max_abs(const Tensor& t) {
    double m = 0.0;
    for (double v : t.flat()) m = std::max(m, std::abs(v));
    return m;
}

void check_finite(const Tensor& t, const std::string& context) {
    if (!t.all_finite()) throw NumericError(context + ": non-finite value");
}

} // namespace lipad
