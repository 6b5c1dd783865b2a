#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tenrec/tensor.hpp"

namespace tenrec {

struct TuckerSpec {
    Shape shape;
    std::vector<std::size_t> ranks;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ObservationSpec {
    double missing_rate = 0.0; // in [0, 1)
    double sigma_n = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Observation {
    DenseTensor y;
    ObservationMask mask;
};

/// Independent pseudorandom streams derived from one seed. Only raw 64-bit
/// engine output is used, so draws are identical across standard libraries.
class RandomStream {
public:
    enum class Purpose : std::uint32_t { Core = 1, Factors = 2, Noise = 3, Mask = 4, Test = 99 };

    RandomStream(std::uint64_t seed, Purpose purpose);
    RandomStream(std::uint64_t seed, std::uint32_t stream_id);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller.
    double normal();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Sum_j S(j) prod_k U_k(i_k, j_k) with S ~ U[0,1], U_k ~ U[-0.5,0.5], then
/// scaled so that max - min = 1. Scaling (no shift) keeps the Tucker ranks.
DenseTensor generate_tucker(const TuckerSpec& spec);

/// Y = A_Omega(X + V), V ~ N(0, sigma_n^2) i.i.d., |Omega| = round((1 - missing_rate) * size)
/// entries chosen uniformly without replacement.
Observation observe(const DenseTensor& x_org, const ObservationSpec& spec);

/// ||x_hat - x_ref||_2 divided by the number of entries.
double recovery_error(const DenseTensor& x_hat, const DenseTensor& x_ref);

/// Mode-m product: result = x x_m factor, factor is (new_dim x n_m).
DenseTensor mode_product(const DenseTensor& x, const DenseMatrix& factor, std::size_t mode);

} // namespace tenrec
