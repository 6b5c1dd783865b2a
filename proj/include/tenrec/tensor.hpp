#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tenrec {

using Shape = std::vector<std::size_t>;

/// Number of entries described by a shape.
std::size_t element_count(const Shape& shape);

/// "40x40x40"
std::string shape_to_string(const Shape& shape);

/// Dense N-way real tensor. Entries are stored with the first index varying
/// fastest, i.e. entry (i_1, ..., i_N) lives at i_1 + n_1 (i_2 + n_2 (...)).
class DenseTensor {
public:
    DenseTensor() = default;
    explicit DenseTensor(Shape shape);
    DenseTensor(Shape shape, std::vector<double> data);

    static DenseTensor zeros(const Shape& shape) { return DenseTensor(shape); }
    static DenseTensor filled(const Shape& shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t order() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    double operator[](std::size_t linear) const { return data_[linear]; }
    double& operator[](std::size_t linear) { return data_[linear]; }

    /// Zero-based multi-index access.
    double at(std::span<const std::size_t> index) const;
    std::size_t linear_index(std::span<const std::size_t> index) const;

    Eigen::Map<const Eigen::VectorXd> vec() const
    {
        return {data_.data(), static_cast<Eigen::Index>(data_.size())};
    }
    Eigen::Map<Eigen::VectorXd> vec() { return {data_.data(), static_cast<Eigen::Index>(data_.size())}; }

    DenseTensor& operator+=(const DenseTensor& other);
    DenseTensor& operator-=(const DenseTensor& other);
    DenseTensor& operator*=(double scale);

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

DenseTensor operator+(DenseTensor lhs, const DenseTensor& rhs);
DenseTensor operator-(DenseTensor lhs, const DenseTensor& rhs);
DenseTensor operator*(double scale, DenseTensor rhs);

/// Column-major real matrix (same first-index-fastest convention as DenseTensor).
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    explicit DenseMatrix(const Eigen::Ref<const Eigen::MatrixXd>& m);

    static DenseMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> diag);
    /// Row-major nested initializer, convenient for fixtures.
    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    double operator()(std::size_t r, std::size_t c) const { return data_[r + rows_ * c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r + rows_ * c]; }

    Eigen::Map<const Eigen::MatrixXd> mat() const
    {
        return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
    }
    Eigen::Map<Eigen::MatrixXd> mat()
    {
        return {data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
    }

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix lhs, const DenseMatrix& rhs);
DenseMatrix operator-(DenseMatrix lhs, const DenseMatrix& rhs);

/// Indicator set of observed entries. The complement is the exact negation.
class ObservationMask {
public:
    ObservationMask() = default;
    /// All entries unobserved.
    explicit ObservationMask(Shape shape);
    ObservationMask(Shape shape, std::vector<bool> observed);

    static ObservationMask all(const Shape& shape);
    static ObservationMask none(const Shape& shape) { return ObservationMask(shape); }
    /// Observed wherever `indicator` is nonzero.
    static ObservationMask from_indicator(const DenseTensor& indicator);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return observed_.size(); }
    std::size_t count() const noexcept { return count_; }

    bool observed(std::size_t linear) const { return observed_[linear]; }
    void set(std::size_t linear, bool value);

    /// 1.0 on observed entries, 0.0 elsewhere.
    DenseTensor indicator() const;
    ObservationMask complement() const;

    friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

private:
    Shape shape_;
    std::vector<bool> observed_;
    std::size_t count_ = 0;
};

/// Mode-m matricization (zero-based mode). Result is n_m x prod_{k != m} n_k.
DenseMatrix unfold(const DenseTensor& x, std::size_t mode);

/// Inverse of unfold.
DenseTensor fold(const DenseMatrix& m, std::size_t mode, const Shape& shape);

/// Copy of x with every unobserved entry set to zero.
DenseTensor mask_apply(const DenseTensor& x, const ObservationMask& mask);

/// Copy of x with every observed entry set to zero.
DenseTensor mask_complement_apply(const DenseTensor& x, const ObservationMask& mask);

double l2_norm(const DenseTensor& x);
double frobenius_norm(const DenseMatrix& m);

void require_same_shape(const Shape& a, const Shape& b, const char* what);

} // namespace tenrec
