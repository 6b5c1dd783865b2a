#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "tenrec/tensor.hpp"

namespace tenrec {

/// M = U diag(singulars) V^T with k = min(rows, cols) columns in U and V.
struct ThinSVD {
    DenseMatrix U;
    std::vector<double> singulars; // nonincreasing, nonnegative
    DenseMatrix V;

    DenseMatrix reconstruct() const;
};

/// Per-mode weights, mode coefficients and Schatten exponent of a weighted
/// tensor Schatten-p norm.
struct WeightSpec {
    std::vector<std::vector<double>> per_mode; // nondecreasing, length min-dim of unfold_m
    std::vector<double> gamma;                 // positive, sums to 1
    double p = 1.0;

    /// Throws std::invalid_argument if the spec does not fit `shape`.
    void validate(const Shape& shape) const;
};

/// min(rows, cols) of unfold_m for a tensor of the given shape.
std::size_t unfold_min_dim(const Shape& shape, std::size_t mode);

/// gamma_m = 1/N.
std::vector<double> equal_gamma(std::size_t order);

ThinSVD thin_svd(const DenseMatrix& m);

/// Singular values only.
std::vector<double> singular_values(const DenseMatrix& m);

/// Global minimizer of (1/2)(y - x)^2 + w |x|^p for 0 < p <= 1. Closed forms
/// for p in {1, 1/2, 2/3}; other exponents use a bracketed root search on
/// the stationarity condition. At the jump point of p < 1 the nonzero
/// minimizer is returned.
double scalar_p_threshold(double y, double w, double p);

/// Replaces sigma_i by scalar_p_threshold(sigma_i, w_i, p).
ThinSVD weighted_sv_shrink(const ThinSVD& svd, std::span<const double> w, double p);

/// Proximal map of the weighted Schatten-p penalty: U S_{w,p}(Sigma) V^T.
DenseMatrix wspn_prox(const DenseMatrix& m, std::span<const double> w, double p);

/// sum_k w_k sigma_k(m)^p
double wspn_value(const DenseMatrix& m, std::span<const double> w, double p);

/// sum_m gamma_m wspn_value(unfold_m(x), w_m, p)
double wtspn_value(const DenseTensor& x, const WeightSpec& spec);

/// Best rank-r approximation (keeps the r largest singular values).
DenseMatrix rank_truncate(const DenseMatrix& m, std::size_t r);

/// Number of singular values above 1e-12 * sigma_max (or `rel_floor` * sigma_max).
std::size_t numerical_rank(std::span<const double> singulars, double rel_floor = 1e-12);

/// Euclidean projection onto the ball of `radius` around `center`.
DenseTensor ball_project(const DenseTensor& point, const DenseTensor& center, double radius);

/// Diagnostic dump: index,sigma,weight,shrunk
void write_shrink_csv(std::ostream& out, std::span<const double> sigma, std::span<const double> w,
                      std::span<const double> shrunk);

} // namespace tenrec
