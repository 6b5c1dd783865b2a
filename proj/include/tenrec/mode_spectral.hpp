#pragma once

#include <span>

#include "tenrec/tensor.hpp"

namespace tenrec {

// Spectral maps on a mode-m unfolding computed directly on the folded tensor.
// For a wide unfolding M (n_m <= prod_{k != m} n_k) any map that sends a zero
// singular value to zero satisfies
//   U f(Sigma) V^T = U diag(f(sigma) / sigma) U^T M,
// so only the n_m x n_m Gram matrix M M^T is decomposed and the unfolding is
// never materialized. Tall unfoldings fall back to thin_svd.
//
// Singular values below sqrt(eps) * sigma_1 are not resolved by the Gram
// route; they are mapped to zero unless their weight is exactly zero.

/// fold_m(wspn_prox(unfold_m(x), w, p))
DenseTensor mode_wspn_prox(const DenseTensor& x, std::size_t mode, std::span<const double> w, double p);

/// fold_m(rank_truncate(unfold_m(x), rank))
DenseTensor mode_rank_truncate(const DenseTensor& x, std::size_t mode, std::size_t rank);

/// Same maps writing into `out`, which is reshaped if needed and must not
/// alias x. Reuses out's storage when the shape already matches.
void mode_wspn_prox_into(const DenseTensor& x, std::size_t mode, std::span<const double> w, double p, DenseTensor& out);
void mode_rank_truncate_into(const DenseTensor& x, std::size_t mode, std::size_t rank, DenseTensor& out);

} // namespace tenrec
