#include "tenrec/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tenrec/tensor_io.hpp"

namespace tenrec {

namespace {

std::vector<double> inverse_power_weights(std::vector<double> sigma, double alpha, double clamp)
{
    const double top = sigma.empty() ? 0.0 : sigma.front();
    const double R = static_cast<double>(sigma.size());
    if (!(top > 0.0))
        return std::vector<double>(sigma.size(), 1.0);

    const double floor = clamp * top;
    for (double& s : sigma)
        s = std::max(s, floor);
    // Ratios against the smallest clamped value keep the powers in [0, 1].
    const double smallest = sigma.back();
    std::vector<double> w(sigma.size());
    double total = 0.0;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        w[i] = std::pow(sigma[i] / smallest, -alpha);
        total += w[i];
    }
    for (double& v : w)
        v *= R / total;
    // sigma is nonincreasing, so w is nondecreasing up to rounding.
    for (std::size_t i = 1; i < w.size(); ++i)
        w[i] = std::max(w[i], w[i - 1]);
    return w;
}

} // namespace

std::string_view to_string(WeightScheme scheme)
{
    switch (scheme) {
    case WeightScheme::Ideal: return "ideal";
    case WeightScheme::Observation: return "observation";
    case WeightScheme::Uniform: return "uniform";
    }
    return "unknown";
}

WeightScheme parse_weight_scheme(std::string_view text)
{
    if (text == "ideal" || text == "id" || text == "Id")
        return WeightScheme::Ideal;
    if (text == "observation" || text == "obs" || text == "Obs")
        return WeightScheme::Observation;
    if (text == "uniform" || text == "uni" || text == "Uni")
        return WeightScheme::Uniform;
    throw std::invalid_argument("unknown weight scheme '" + std::string(text) + "'");
}

WeightSpec ideal_weights(const DenseTensor& reference, double alpha, double clamp)
{
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("ideal_weights: alpha must be finite and nonnegative");
    if (!(clamp > 0.0 && clamp < 1.0))
        throw std::invalid_argument("ideal_weights: clamp must lie in (0, 1)");
    WeightSpec spec;
    spec.gamma = equal_gamma(reference.order());
    spec.p = 1.0;
    for (std::size_t m = 0; m < reference.order(); ++m)
        spec.per_mode.push_back(inverse_power_weights(singular_values(unfold(reference, m)), alpha, clamp));
    return spec;
}

DenseTensor mean_fill(const DenseTensor& y, const ObservationMask& mask)
{
    require_same_shape(y.shape(), mask.shape(), "mean_fill");
    if (mask.count() == 0)
        throw std::invalid_argument("mean_fill: no observed entries");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (mask.observed(i))
            sum += y[i];
    const double mean = sum / static_cast<double>(mask.count());
    DenseTensor out = y;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!mask.observed(i))
            out[i] = mean;
    return out;
}

WeightSpec observation_weights(const DenseTensor& y, const ObservationMask& mask, double alpha, double clamp)
{
    return ideal_weights(mean_fill(y, mask), alpha, clamp);
}

WeightSpec uniform_weights(const Shape& shape)
{
    WeightSpec spec;
    spec.gamma = equal_gamma(shape.size());
    spec.p = 1.0;
    for (std::size_t m = 0; m < shape.size(); ++m)
        spec.per_mode.emplace_back(unfold_min_dim(shape, m), 1.0);
    return spec;
}

void write_weights_csv(std::ostream& out, const WeightSpec& spec)
{
    out << "mode,index,weight\n";
    for (std::size_t m = 0; m < spec.per_mode.size(); ++m)
        for (std::size_t i = 0; i < spec.per_mode[m].size(); ++i)
            out << m + 1 << ',' << i + 1 << ',' << format_double(spec.per_mode[m][i]) << '\n';
}

} // namespace tenrec
