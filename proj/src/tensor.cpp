#include "tenrec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace tenrec {

namespace {

void validate_shape(const Shape& shape)
{
    if (shape.size() < 2)
        throw std::invalid_argument("tensor order must be at least 2");
    if (std::any_of(shape.begin(), shape.end(), [](std::size_t n) { return n == 0; }))
        throw std::invalid_argument("tensor dimensions must be positive");
}

// Entries before / after `mode` in the first-index-fastest layout.
std::pair<std::size_t, std::size_t> outer_extents(const Shape& shape, std::size_t mode)
{
    std::size_t left = 1;
    for (std::size_t k = 0; k < mode; ++k)
        left *= shape[k];
    std::size_t right = 1;
    for (std::size_t k = mode + 1; k < shape.size(); ++k)
        right *= shape[k];
    return {left, right};
}

} // namespace

std::size_t element_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_to_string(const Shape& shape)
{
    std::string out;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k)
            out += 'x';
        out += std::to_string(shape[k]);
    }
    return out;
}

void require_same_shape(const Shape& a, const Shape& b, const char* what)
{
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": shape mismatch (" + shape_to_string(a) + " vs "
                                    + shape_to_string(b) + ")");
}

// ---------------------------------------------------------------------------
// DenseTensor

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape))
{
    validate_shape(shape_);
    data_.assign(element_count(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    validate_shape(shape_);
    if (data_.size() != element_count(shape_))
        throw std::invalid_argument("tensor data length does not match shape " + shape_to_string(shape_));
}

DenseTensor DenseTensor::filled(const Shape& shape, double value)
{
    DenseTensor t(shape);
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const
{
    if (index.size() != shape_.size())
        throw std::out_of_range("multi-index has wrong order");
    std::size_t linear = 0;
    for (std::size_t k = shape_.size(); k-- > 0;) {
        if (index[k] >= shape_[k])
            throw std::out_of_range("multi-index out of range");
        linear = linear * shape_[k] + index[k];
    }
    return linear;
}

double DenseTensor::at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }

DenseTensor& DenseTensor::operator+=(const DenseTensor& other)
{
    require_same_shape(shape_, other.shape_, "tensor +=");
    vec() += other.vec();
    return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other)
{
    require_same_shape(shape_, other.shape_, "tensor -=");
    vec() -= other.vec();
    return *this;
}

DenseTensor& DenseTensor::operator*=(double scale)
{
    vec() *= scale;
    return *this;
}

DenseTensor operator+(DenseTensor lhs, const DenseTensor& rhs) { return lhs += rhs; }
DenseTensor operator-(DenseTensor lhs, const DenseTensor& rhs) { return lhs -= rhs; }
DenseTensor operator*(double scale, DenseTensor rhs) { return rhs *= scale; }

// ---------------------------------------------------------------------------
// DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0)
{
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("matrix dimensions must be positive");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
  : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("matrix dimensions must be positive");
    if (data_.size() != rows * cols)
        throw std::invalid_argument("matrix data length does not match dimensions");
}

DenseMatrix::DenseMatrix(const Eigen::Ref<const Eigen::MatrixXd>& m)
  : DenseMatrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()))
{
    mat() = m;
}

DenseMatrix DenseMatrix::identity(std::size_t n)
{
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag)
{
    DenseMatrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i)
        m(i, i) = diag[i];
    return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty())
        throw std::invalid_argument("matrix needs at least one row");
    DenseMatrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols())
            throw std::invalid_argument("ragged matrix rows");
        for (std::size_t c = 0; c < m.cols(); ++c)
            m(r, c) = rows[r][c];
    }
    return m;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other)
{
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw std::invalid_argument("matrix +=: dimension mismatch");
    mat() += other.mat();
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other)
{
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw std::invalid_argument("matrix -=: dimension mismatch");
    mat() -= other.mat();
    return *this;
}

DenseMatrix operator+(DenseMatrix lhs, const DenseMatrix& rhs) { return lhs += rhs; }
DenseMatrix operator-(DenseMatrix lhs, const DenseMatrix& rhs) { return lhs -= rhs; }

// ---------------------------------------------------------------------------
// ObservationMask

ObservationMask::ObservationMask(Shape shape) : shape_(std::move(shape))
{
    validate_shape(shape_);
    observed_.assign(element_count(shape_), false);
}

ObservationMask::ObservationMask(Shape shape, std::vector<bool> observed)
  : shape_(std::move(shape)), observed_(std::move(observed))
{
    validate_shape(shape_);
    if (observed_.size() != element_count(shape_))
        throw std::invalid_argument("mask length does not match shape " + shape_to_string(shape_));
    count_ = static_cast<std::size_t>(std::count(observed_.begin(), observed_.end(), true));
}

ObservationMask ObservationMask::all(const Shape& shape)
{
    return ObservationMask(shape, std::vector<bool>(element_count(shape), true));
}

ObservationMask ObservationMask::from_indicator(const DenseTensor& indicator)
{
    std::vector<bool> observed(indicator.size());
    for (std::size_t i = 0; i < indicator.size(); ++i)
        observed[i] = indicator[i] != 0.0;
    return ObservationMask(indicator.shape(), std::move(observed));
}

void ObservationMask::set(std::size_t linear, bool value)
{
    if (observed_.at(linear) == value)
        return;
    observed_[linear] = value;
    if (value)
        ++count_;
    else
        --count_;
}

DenseTensor ObservationMask::indicator() const
{
    DenseTensor t(shape_);
    for (std::size_t i = 0; i < observed_.size(); ++i)
        t[i] = observed_[i] ? 1.0 : 0.0;
    return t;
}

ObservationMask ObservationMask::complement() const
{
    std::vector<bool> flipped(observed_.size());
    for (std::size_t i = 0; i < observed_.size(); ++i)
        flipped[i] = !observed_[i];
    return ObservationMask(shape_, std::move(flipped));
}

// ---------------------------------------------------------------------------
// Operators

DenseMatrix unfold(const DenseTensor& x, std::size_t mode)
{
    if (mode >= x.order())
        throw std::out_of_range("unfold: mode " + std::to_string(mode) + " out of range for order "
                                + std::to_string(x.order()));
    const std::size_t n = x.dim(mode);
    const auto [left, right] = outer_extents(x.shape(), mode);
    DenseMatrix out(n, left * right);

    // Linear index a + left (i + n b) maps to row i, column a + left b.
    const double* src = x.data().data();
    double* dst = out.data().data();
    for (std::size_t b = 0; b < right; ++b)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < left; ++a)
                dst[i + n * (a + left * b)] = src[a + left * (i + n * b)];
    return out;
}

DenseTensor fold(const DenseMatrix& m, std::size_t mode, const Shape& shape)
{
    if (mode >= shape.size())
        throw std::out_of_range("fold: mode out of range");
    const std::size_t n = shape[mode];
    const auto [left, right] = outer_extents(shape, mode);
    if (m.rows() != n || m.cols() != left * right)
        throw std::invalid_argument("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols())
                                    + ", expected " + std::to_string(n) + "x" + std::to_string(left * right));
    DenseTensor out(shape);
    const double* src = m.data().data();
    double* dst = out.data().data();
    for (std::size_t b = 0; b < right; ++b)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < left; ++a)
                dst[a + left * (i + n * b)] = src[i + n * (a + left * b)];
    return out;
}

DenseTensor mask_apply(const DenseTensor& x, const ObservationMask& mask)
{
    require_same_shape(x.shape(), mask.shape(), "mask_apply");
    DenseTensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        if (mask.observed(i))
            out[i] = x[i];
    return out;
}

DenseTensor mask_complement_apply(const DenseTensor& x, const ObservationMask& mask)
{
    require_same_shape(x.shape(), mask.shape(), "mask_complement_apply");
    DenseTensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!mask.observed(i))
            out[i] = x[i];
    return out;
}

double l2_norm(const DenseTensor& x) { return x.vec().norm(); }

double frobenius_norm(const DenseMatrix& m) { return m.mat().norm(); }

} // namespace tenrec
