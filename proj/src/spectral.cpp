#include "tenrec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/SVD>

#include "tenrec/tensor_io.hpp"

namespace tenrec {

namespace {

constexpr double kTwoThirds = 2.0 / 3.0;

bool is_exponent(double p, double target) { return std::abs(p - target) <= 1e-12; }

void require_nondecreasing(std::span<const double> w, const char* what)
{
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
            throw std::invalid_argument(std::string(what) + ": weights must be finite and nonnegative");
        if (i > 0 && w[i] < w[i - 1])
            throw std::invalid_argument(std::string(what) + ": weights must be nondecreasing");
    }
}

double objective(double a, double x, double w, double p)
{
    const double d = a - x;
    return 0.5 * d * d + w * std::pow(x, p);
}

// Keeps the stationary candidate x when it is at least as good as zero.
double pick(double a, double x, double w, double p)
{
    if (!(x > 0.0))
        return 0.0;
    return objective(a, x, w, p) <= 0.5 * a * a ? x : 0.0;
}

// p = 1/2. With x = s^2 the stationarity condition reads s^3 - a s + w/2 = 0;
// a positive local minimizer exists only when that cubic has three real roots,
// and it is the square of the largest one.
double half_threshold(double a, double w)
{
    const double z = (3.0 * w / (4.0 * a)) * std::sqrt(3.0 / a);
    if (z >= 1.0)
        return 0.0;
    const double s = 2.0 * std::sqrt(a / 3.0) * std::cos(std::acos(-z) / 3.0);
    return pick(a, s * s, w, 0.5);
}

// p = 2/3. With x = t^3: t^4 - a t + c = 0, c = 2w/3. Ferrari: the resolvent
// m^3 - c m - a^2/8 = 0 has a positive root m, and the largest real root is
// t = (A + sqrt(2a/A - A^2)) / 2 with A = sqrt(2m).
double two_thirds_threshold(double a, double w)
{
    const double c = 2.0 * w / 3.0;
    const double arg = (3.0 * a * a / (16.0 * c)) * std::sqrt(3.0 / c);
    const double scale = 2.0 * std::sqrt(c / 3.0);
    const double m = arg >= 1.0 ? scale * std::cosh(std::acosh(arg) / 3.0) : scale * std::cos(std::acos(arg) / 3.0);
    const double A = std::sqrt(2.0 * m);
    const double radicand = 2.0 * a / A - A * A;
    if (radicand < 0.0)
        return 0.0;
    const double t = 0.5 * (A + std::sqrt(radicand));
    return pick(a, t * t * t, w, kTwoThirds);
}

// Any 0 < p < 1: the objective is convex beyond its inflection point
// (w p (1 - p))^{1/(2-p)}, where the derivative x - a + w p x^{p-1} is
// increasing, so a bracketed root search finds the only candidate.
double generic_threshold(double a, double w, double p)
{
    auto grad = [&](double x) { return x - a + w * p * std::pow(x, p - 1.0); };
    double lo = std::pow(w * p * (1.0 - p), 1.0 / (2.0 - p));
    double hi = a;
    if (lo >= hi || grad(lo) > 0.0)
        return 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (grad(mid) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
        const double h = 1.0 + w * p * (p - 1.0) * std::pow(x, p - 2.0);
        if (h <= 0.0)
            break;
        const double next = x - grad(x) / h;
        if (!(next > 0.0) || !std::isfinite(next))
            break;
        x = next;
    }
    return pick(a, x, w, p);
}

} // namespace

DenseMatrix ThinSVD::reconstruct() const
{
    const Eigen::Map<const Eigen::VectorXd> s(singulars.data(), static_cast<Eigen::Index>(singulars.size()));
    return DenseMatrix(U.mat() * s.asDiagonal() * V.mat().transpose());
}

std::size_t unfold_min_dim(const Shape& shape, std::size_t mode)
{
    const std::size_t n = shape.at(mode);
    return std::min(n, element_count(shape) / n);
}

std::vector<double> equal_gamma(std::size_t order)
{
    return std::vector<double>(order, 1.0 / static_cast<double>(order));
}

void WeightSpec::validate(const Shape& shape) const
{
    const std::size_t order = shape.size();
    if (per_mode.size() != order || gamma.size() != order)
        throw std::invalid_argument("weight spec has " + std::to_string(per_mode.size()) + " modes / "
                                    + std::to_string(gamma.size()) + " gammas for an order-"
                                    + std::to_string(order) + " tensor");
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("weight spec exponent must lie in (0, 1]");
    double sum = 0.0;
    for (std::size_t m = 0; m < order; ++m) {
        if (!(gamma[m] > 0.0))
            throw std::invalid_argument("gamma entries must be positive");
        sum += gamma[m];
        if (per_mode[m].size() != unfold_min_dim(shape, m))
            throw std::invalid_argument("weight vector for mode " + std::to_string(m) + " has length "
                                        + std::to_string(per_mode[m].size()) + ", expected "
                                        + std::to_string(unfold_min_dim(shape, m)));
        require_nondecreasing(per_mode[m], "weight spec");
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("gamma entries must sum to 1");
}

ThinSVD thin_svd(const DenseMatrix& m)
{
    const auto a = m.mat();
    if (!a.allFinite())
        throw std::invalid_argument("thin_svd: non-finite input");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    return {DenseMatrix(svd.matrixU()), std::vector<double>(s.data(), s.data() + s.size()),
            DenseMatrix(svd.matrixV())};
}

std::vector<double> singular_values(const DenseMatrix& m)
{
    const auto a = m.mat();
    if (!a.allFinite())
        throw std::invalid_argument("singular_values: non-finite input");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

double scalar_p_threshold(double y, double w, double p)
{
    if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("scalar_p_threshold: weight must be finite and nonnegative");
    if (!(p > 0.0))
        throw std::invalid_argument("scalar_p_threshold: exponent must be positive");
    if (p > 1.0)
        throw std::invalid_argument("scalar_p_threshold: exponents above 1 are not supported");
    if (!std::isfinite(y))
        throw std::invalid_argument("scalar_p_threshold: non-finite input");
    if (w == 0.0 || y == 0.0)
        return y;

    const double a = std::abs(y);
    double x;
    if (p == 1.0)
        x = std::max(a - w, 0.0);
    else if (p == 0.5)
        x = half_threshold(a, w);
    else if (is_exponent(p, kTwoThirds))
        x = two_thirds_threshold(a, w);
    else
        x = generic_threshold(a, w, p);
    return std::copysign(x, y);
}

ThinSVD weighted_sv_shrink(const ThinSVD& svd, std::span<const double> w, double p)
{
    if (w.size() != svd.singulars.size())
        throw std::invalid_argument("weighted_sv_shrink: " + std::to_string(w.size()) + " weights for "
                                    + std::to_string(svd.singulars.size()) + " singular values");
    require_nondecreasing(w, "weighted_sv_shrink");
    ThinSVD out = svd;
    double top = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.singulars[i] = scalar_p_threshold(svd.singulars[i], w[i], p);
        top = std::max(top, out.singulars[i]);
    }
    for (std::size_t i = 1; i < w.size(); ++i)
        if (out.singulars[i] > out.singulars[i - 1] + 1e-12 * top)
            throw std::logic_error("weighted_sv_shrink: shrunk singular values lost their ordering");
    return out;
}

DenseMatrix wspn_prox(const DenseMatrix& m, std::span<const double> w, double p)
{
    require_nondecreasing(w, "wspn_prox");
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; }) && w.size() == std::min(m.rows(), m.cols()))
        return m;
    return weighted_sv_shrink(thin_svd(m), w, p).reconstruct();
}

double wspn_value(const DenseMatrix& m, std::span<const double> w, double p)
{
    const auto s = singular_values(m);
    if (w.size() != s.size())
        throw std::invalid_argument("wspn_value: " + std::to_string(w.size()) + " weights for "
                                    + std::to_string(s.size()) + " singular values");
    double total = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k)
        total += w[k] * std::pow(s[k], p);
    return total;
}

double wtspn_value(const DenseTensor& x, const WeightSpec& spec)
{
    spec.validate(x.shape());
    double total = 0.0;
    for (std::size_t m = 0; m < x.order(); ++m)
        total += spec.gamma[m] * wspn_value(unfold(x, m), spec.per_mode[m], spec.p);
    return total;
}

DenseMatrix rank_truncate(const DenseMatrix& m, std::size_t r)
{
    const std::size_t k = std::min(m.rows(), m.cols());
    if (r > k)
        throw std::out_of_range("rank_truncate: rank " + std::to_string(r) + " exceeds " + std::to_string(k));
    if (r == 0)
        return DenseMatrix(m.rows(), m.cols());
    ThinSVD svd = thin_svd(m);
    const auto idx = static_cast<Eigen::Index>(r);
    const Eigen::Map<const Eigen::VectorXd> s(svd.singulars.data(), idx);
    return DenseMatrix(svd.U.mat().leftCols(idx) * s.asDiagonal() * svd.V.mat().leftCols(idx).transpose());
}

std::size_t numerical_rank(std::span<const double> singulars, double rel_floor)
{
    if (singulars.empty())
        return 0;
    const double top = *std::max_element(singulars.begin(), singulars.end());
    if (top == 0.0)
        return 0;
    return static_cast<std::size_t>(
        std::count_if(singulars.begin(), singulars.end(), [&](double s) { return s > rel_floor * top; }));
}

DenseTensor ball_project(const DenseTensor& point, const DenseTensor& center, double radius)
{
    require_same_shape(point.shape(), center.shape(), "ball_project");
    if (!(radius >= 0.0))
        throw std::invalid_argument("ball_project: radius must be nonnegative");
    DenseTensor offset = point - center;
    const double dist = l2_norm(offset);
    if (dist <= radius)
        return point;
    offset *= radius / dist;
    return center + offset;
}

void write_shrink_csv(std::ostream& out, std::span<const double> sigma, std::span<const double> w,
                      std::span<const double> shrunk)
{
    if (sigma.size() != w.size() || sigma.size() != shrunk.size())
        throw std::invalid_argument("write_shrink_csv: length mismatch");
    out << "index,sigma,weight,shrunk\n";
    for (std::size_t i = 0; i < sigma.size(); ++i)
        out << i + 1 << ',' << format_double(sigma[i]) << ',' << format_double(w[i]) << ','
            << format_double(shrunk[i]) << '\n';
}

} // namespace tenrec
