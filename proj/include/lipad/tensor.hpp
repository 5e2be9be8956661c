#pragma once

#include <cstdint>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "lipad/errors.hpp"

namespace lipad {

/// 64-byte-aligned storage so vectorized kernels take the same code path for
/// every allocation; keeps repeated runs bit-identical.
template <typename T> struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U> AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U> bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedDoubles = std::vector<double, AlignedAllocator<double>>;

/// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xN.
class Tensor {
  public:
    Tensor() = default;
    Tensor(long rows, long cols);
    Tensor(long rows, long cols, std::vector<double> data);

    static Tensor zeros(long rows, long cols) { return Tensor(rows, cols); }
    static Tensor full(long rows, long cols, double v);
    static Tensor scalar(double v);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    long rows() const { return rows_; }
    long cols() const { return cols_; }
    long size() const { return rows_ * cols_; }
    bool empty() const { return size() == 0; }

    double& at(long r, long c) { return data_[r * cols_ + c]; }
    double at(long r, long c) const { return data_[r * cols_ + c]; }
    double& operator[](long i) { return data_[i]; }
    double operator[](long i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> row(long r) const { return {data_.data() + r * cols_, static_cast<size_t>(cols_)}; }
    std::span<const double> flat() const { return {data_.data(), data_.size()}; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;

    bool all_finite() const;
    double scalar_value() const; // requires 1x1

    bool operator==(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_; }

  private:
    long rows_ = 0;
    long cols_ = 0;
    AlignedDoubles data_;
};

/// a(ta) * b(tb), dispatched to Eigen.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

/// Squared-distance matrix between row sets: out[i][j] = ||a_i - b_j||^2, clamped at 0.
Tensor pairwise_sqdist(const Tensor& a, const Tensor& b);

double max_abs(const Tensor& t);

void check_finite(const Tensor& t, const std::string& context);

} // namespace lipad
