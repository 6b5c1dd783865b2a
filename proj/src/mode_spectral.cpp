#include "tenrec/mode_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "tenrec/spectral.hpp"

namespace tenrec {

namespace {

struct ModeLayout {
    std::size_t left;  // prod_{k < m} n_k
    std::size_t n;     // n_m
    std::size_t right; // prod_{k > m} n_k
};

ModeLayout layout_of(const Shape& shape, std::size_t mode)
{
    if (mode >= shape.size())
        throw std::out_of_range("mode " + std::to_string(mode) + " out of range");
    ModeLayout l{1, shape[mode], 1};
    for (std::size_t k = 0; k < mode; ++k)
        l.left *= shape[k];
    for (std::size_t k = mode + 1; k < shape.size(); ++k)
        l.right *= shape[k];
    return l;
}

using ConstBlock = Eigen::Map<const Eigen::MatrixXd>;
using Block = Eigen::Map<Eigen::MatrixXd>;

// unfold_m(x) unfold_m(x)^T. The columns of the unfolding that share the
// trailing index b form the transpose of the contiguous left x n block b.
Eigen::MatrixXd mode_gram(const DenseTensor& x, const ModeLayout& l)
{
    const auto n = static_cast<Eigen::Index>(l.n);
    const double* base = x.data().data();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    if (l.left == 1) {
        const ConstBlock m(base, n, static_cast<Eigen::Index>(l.right));
        gram.noalias() = m * m.transpose();
    } else {
        const auto left = static_cast<Eigen::Index>(l.left);
        for (std::size_t b = 0; b < l.right; ++b) {
            const ConstBlock block(base + l.left * l.n * b, left, n);
            gram.noalias() += block.transpose() * block;
        }
    }
    return gram;
}

// out = fold_m(coeff * unfold_m(x)) for a symmetric coeff.
void apply_left(const DenseTensor& x, const ModeLayout& l, const Eigen::MatrixXd& coeff, DenseTensor& out)
{
    const auto n = static_cast<Eigen::Index>(l.n);
    const double* src = x.data().data();
    double* dst = out.data().data();
    if (l.left == 1) {
        const auto cols = static_cast<Eigen::Index>(l.right);
        Block(dst, n, cols).noalias() = coeff * ConstBlock(src, n, cols);
    } else {
        const auto left = static_cast<Eigen::Index>(l.left);
        for (std::size_t b = 0; b < l.right; ++b) {
            const std::size_t offset = l.left * l.n * b;
            Block(dst + offset, left, n).noalias() = ConstBlock(src + offset, left, n) * coeff;
        }
    }
}

// Eigen-decomposes the Gram matrix and applies U diag(gain(i, sigma_i)) U^T,
// singular values sorted nonincreasing. `gain` returns f(sigma) / sigma.
template <class Gain> void gram_spectral_map(const DenseTensor& x, const ModeLayout& l, DenseTensor& out, Gain&& gain)
{
    if (!x.vec().allFinite())
        throw std::invalid_argument("spectral map: non-finite input");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mode_gram(x, l));
    const Eigen::Index n = static_cast<Eigen::Index>(l.n);
    const auto& values = eig.eigenvalues(); // ascending
    const double top = std::sqrt(std::max(values(n - 1), 0.0));
    const double resolved = std::sqrt(static_cast<double>(n) * std::numeric_limits<double>::epsilon()) * top;

    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sigma = std::sqrt(std::max(values(n - 1 - i), 0.0));
        g(n - 1 - i) = gain(static_cast<std::size_t>(i), sigma, sigma > resolved);
    }
    const auto& u = eig.eigenvectors();
    const Eigen::MatrixXd coeff = u * g.asDiagonal() * u.transpose();
    apply_left(x, l, coeff, out);
}

void prepare_output(const DenseTensor& x, DenseTensor& out)
{
    if (&out == &x)
        throw std::invalid_argument("spectral map: output must not alias the input");
    if (out.shape() != x.shape())
        out = DenseTensor(x.shape());
}

} // namespace

void mode_wspn_prox_into(const DenseTensor& x, std::size_t mode, std::span<const double> w, double p, DenseTensor& out)
{
    const ModeLayout l = layout_of(x.shape(), mode);
    const std::size_t k = std::min(l.n, l.left * l.right);
    if (w.size() != k)
        throw std::invalid_argument("mode_wspn_prox: " + std::to_string(w.size()) + " weights for " + std::to_string(k)
                                    + " singular values");
    prepare_output(x, out);
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) {
        out.vec() = x.vec();
        return;
    }
    if (l.n > l.left * l.right) {
        out = fold(wspn_prox(unfold(x, mode), w, p), mode, x.shape());
        return;
    }
    for (std::size_t i = 1; i < w.size(); ++i)
        if (w[i] < w[i - 1])
            throw std::invalid_argument("mode_wspn_prox: weights must be nondecreasing");

    gram_spectral_map(x, l, out, [&](std::size_t i, double sigma, bool resolved) {
        if (w[i] == 0.0)
            return 1.0;
        if (!resolved)
            return 0.0;
        return scalar_p_threshold(sigma, w[i], p) / sigma;
    });
}

void mode_rank_truncate_into(const DenseTensor& x, std::size_t mode, std::size_t rank, DenseTensor& out)
{
    const ModeLayout l = layout_of(x.shape(), mode);
    const std::size_t k = std::min(l.n, l.left * l.right);
    if (rank > k)
        throw std::out_of_range("mode_rank_truncate: rank " + std::to_string(rank) + " exceeds " + std::to_string(k));
    prepare_output(x, out);
    if (rank == k) {
        out.vec() = x.vec();
        return;
    }
    if (l.n > l.left * l.right) {
        out = fold(rank_truncate(unfold(x, mode), rank), mode, x.shape());
        return;
    }
    gram_spectral_map(x, l, out, [&](std::size_t i, double, bool) { return i < rank ? 1.0 : 0.0; });
}

DenseTensor mode_wspn_prox(const DenseTensor& x, std::size_t mode, std::span<const double> w, double p)
{
    DenseTensor out;
    mode_wspn_prox_into(x, mode, w, p, out);
    return out;
}

DenseTensor mode_rank_truncate(const DenseTensor& x, std::size_t mode, std::size_t rank)
{
    DenseTensor out;
    mode_rank_truncate_into(x, mode, rank, out);
    return out;
}

} // namespace tenrec
