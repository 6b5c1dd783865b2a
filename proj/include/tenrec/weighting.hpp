#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "tenrec/spectral.hpp"
#include "tenrec/tensor.hpp"

namespace tenrec {

enum class WeightScheme { Ideal, Observation, Uniform };

std::string_view to_string(WeightScheme scheme);
WeightScheme parse_weight_scheme(std::string_view text);

/// Singular values below clamp * sigma_1 are raised to that floor before they
/// are inverted, so exactly low-rank references still give finite weights.
inline constexpr double kDefaultWeightClamp = 1e-8;

/// w_i = R sigma_i^{-alpha} / sum_k sigma_k^{-alpha} per mode, with sigma taken
/// from unfold_m(reference) and R its smaller dimension. Gamma is filled with
/// 1/N and p with 1; callers override them.
WeightSpec ideal_weights(const DenseTensor& reference, double alpha, double clamp = kDefaultWeightClamp);

/// Observed entries kept, every missing entry replaced by the observed mean.
DenseTensor mean_fill(const DenseTensor& y, const ObservationMask& mask);

/// ideal_weights applied to mean_fill(y, mask).
WeightSpec observation_weights(const DenseTensor& y, const ObservationMask& mask, double alpha,
                               double clamp = kDefaultWeightClamp);

/// All-ones weights.
WeightSpec uniform_weights(const Shape& shape);

/// mode,index,weight (one-based mode and index)
void write_weights_csv(std::ostream& out, const WeightSpec& spec);

} // namespace tenrec
