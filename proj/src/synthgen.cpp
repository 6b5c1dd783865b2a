#include "tenrec/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace tenrec {

void TuckerSpec::validate() const
{
    if (shape.size() < 2)
        throw std::invalid_argument("tucker spec: order must be at least 2");
    if (ranks.size() != shape.size())
        throw std::invalid_argument("tucker spec: need one rank per mode");
    for (std::size_t m = 0; m < shape.size(); ++m)
        if (ranks[m] < 1 || ranks[m] > shape[m])
            throw std::invalid_argument("tucker spec: rank " + std::to_string(ranks[m]) + " invalid for mode of size "
                                        + std::to_string(shape[m]));
}

void ObservationSpec::validate() const
{
    if (!(missing_rate >= 0.0 && missing_rate < 1.0))
        throw std::invalid_argument("observation spec: missing rate must lie in [0, 1)");
    if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n))
        throw std::invalid_argument("observation spec: sigma_n must be finite and nonnegative");
}

// ---------------------------------------------------------------------------

RandomStream::RandomStream(std::uint64_t seed, Purpose purpose)
  : RandomStream(seed, static_cast<std::uint32_t>(purpose))
{
}

RandomStream::RandomStream(std::uint64_t seed, std::uint32_t stream_id)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      stream_id, 0x7e5f1a2bu};
    engine_.seed(seq);
}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RandomStream::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t RandomStream::below(std::uint64_t bound)
{
    if (bound == 0)
        throw std::invalid_argument("RandomStream::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do {
        draw = engine_();
    } while (draw >= limit);
    return draw % bound;
}

// ---------------------------------------------------------------------------

DenseTensor mode_product(const DenseTensor& x, const DenseMatrix& factor, std::size_t mode)
{
    if (factor.cols() != x.dim(mode))
        throw std::invalid_argument("mode_product: factor columns do not match tensor mode size");
    Shape shape = x.shape();
    shape[mode] = factor.rows();
    const DenseMatrix unfolded = unfold(x, mode);
    return fold(DenseMatrix(factor.mat() * unfolded.mat()), mode, shape);
}

DenseTensor generate_tucker(const TuckerSpec& spec)
{
    spec.validate();
    RandomStream core_rng(spec.seed, RandomStream::Purpose::Core);
    RandomStream factor_rng(spec.seed, RandomStream::Purpose::Factors);

    DenseTensor x(Shape(spec.ranks.begin(), spec.ranks.end()));
    for (double& v : x.data())
        v = core_rng.uniform();
    for (std::size_t k = 0; k < spec.shape.size(); ++k) {
        DenseMatrix factor(spec.shape[k], spec.ranks[k]);
        for (double& v : factor.data())
            v = factor_rng.uniform(-0.5, 0.5);
        x = mode_product(x, factor, k);
    }

    const auto [lo, hi] = std::minmax_element(x.data().begin(), x.data().end());
    const double range = *hi - *lo;
    if (range > 0.0)
        x *= 1.0 / range;
    return x;
}

Observation observe(const DenseTensor& x_org, const ObservationSpec& spec)
{
    spec.validate();
    const std::size_t total = x_org.size();
    const auto observed_count =
        static_cast<std::size_t>(std::llround((1.0 - spec.missing_rate) * static_cast<double>(total)));

    // Partial Fisher-Yates: the first `observed_count` slots form Omega.
    RandomStream mask_rng(spec.seed, RandomStream::Purpose::Mask);
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < observed_count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(mask_rng.below(total - i));
        std::swap(order[i], order[j]);
    }
    ObservationMask mask(x_org.shape());
    for (std::size_t i = 0; i < observed_count; ++i)
        mask.set(order[i], true);

    // Noise is drawn for every entry so Omega does not shift the noise field.
    RandomStream noise_rng(spec.seed, RandomStream::Purpose::Noise);
    DenseTensor y(x_org.shape());
    for (std::size_t i = 0; i < total; ++i) {
        const double noise = spec.sigma_n * noise_rng.normal();
        if (mask.observed(i))
            y[i] = x_org[i] + noise;
    }
    return {std::move(y), std::move(mask)};
}

double recovery_error(const DenseTensor& x_hat, const DenseTensor& x_ref)
{
    require_same_shape(x_hat.shape(), x_ref.shape(), "recovery_error");
    return (x_hat.vec() - x_ref.vec()).norm() / static_cast<double>(x_hat.size());
}

} // namespace tenrec
