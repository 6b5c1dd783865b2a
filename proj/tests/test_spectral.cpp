#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tenrec/mode_spectral.hpp"
#include "tenrec/spectral.hpp"

using namespace tenrec;

namespace {

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b)
{
    return (a.mat() - b.mat()).cwiseAbs().maxCoeff();
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b)
{
    return (a.vec() - b.vec()).cwiseAbs().maxCoeff();
}

// 1/2 ||X - M||^2 + sum w_k sigma_k(X)^p, singular values from the oracle.
double prox_objective(const DenseMatrix& x, const DenseMatrix& m, const std::vector<double>& w, double p)
{
    const double fit = (x.mat() - m.mat()).squaredNorm();
    const auto s = oracle::singular_values(x);
    double pen = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
        pen += w[k] * std::pow(s[k], p);
    return 0.5 * fit + pen;
}

std::vector<double> sorted_weights(std::size_t n, RandomStream& rng, double scale)
{
    std::vector<double> w(n);
    for (double& v : w)
        v = rng.uniform(0.0, scale);
    std::sort(w.begin(), w.end());
    return w;
}

const oracle::PowerTable& table_for(double p)
{
    static const oracle::PowerTable t1(1.0, 1'000'001), th(0.5, 1'000'001), tt(2.0 / 3.0, 1'000'001);
    return p == 1.0 ? t1 : (p == 0.5 ? th : tt);
}

} // namespace

TEST(ThinSvd, IdentityAndDiagonal)
{
    const ThinSVD id = thin_svd(DenseMatrix::identity(3));
    EXPECT_EQ(id.singulars.size(), 3u);
    for (double s : id.singulars)
        EXPECT_NEAR(s, 1.0, 1e-14);

    const std::vector<double> d{3, 2, 1};
    const ThinSVD svd = thin_svd(DenseMatrix::diagonal(d));
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(svd.singulars[i], d[i], 1e-14);
        EXPECT_NEAR(std::abs(svd.U(i, i)), 1.0, 1e-14);
        EXPECT_NEAR(std::abs(svd.V(i, i)), 1.0, 1e-14);
    }
}

TEST(ThinSvd, RandomMatchesEigenOracle)
{
    RandomStream rng(21, RandomStream::Purpose::Test);
    for (int t = 0; t < 20; ++t) {
        const DenseMatrix m = oracle::random_matrix(5, 4, rng);
        const ThinSVD svd = thin_svd(m);
        EXPECT_LE(max_abs_diff(svd.reconstruct(), m) / frobenius_norm(m), 1e-10);
        const auto ref = oracle::singular_values(m);
        for (std::size_t i = 0; i < 4; ++i)
            EXPECT_NEAR(svd.singulars[i], ref[i], 1e-8);
    }
}

TEST(ThinSvd, RejectsNonFinite)
{
    DenseMatrix m = DenseMatrix::identity(2);
    m(0, 1) = std::nan("");
    EXPECT_THROW(thin_svd(m), std::invalid_argument);
}

TEST(ScalarThreshold, SoftThresholdExample)
{
    EXPECT_DOUBLE_EQ(scalar_p_threshold(5, 2, 1), 3.0);
    EXPECT_DOUBLE_EQ(scalar_p_threshold(-5, 2, 1), -3.0);
    EXPECT_DOUBLE_EQ(scalar_p_threshold(1.5, 2, 1), 0.0);
}

TEST(ScalarThreshold, ZeroWeightIsIdentity)
{
    for (double p : {1.0, 0.5, 2.0 / 3.0, 0.3})
        for (double y : {-3.0, 0.0, 0.25, 7.0})
            EXPECT_EQ(scalar_p_threshold(y, 0.0, p), y);
}

TEST(ScalarThreshold, HalfPowerExampleMatchesBruteForce)
{
    const auto ref = oracle::brute_force_threshold(2.0, 1.0, table_for(0.5));
    const double x = scalar_p_threshold(2.0, 1.0, 0.5);
    EXPECT_NEAR(x, ref.x, 1e-6);
    EXPECT_LE(oracle::scalar_objective(x, 2.0, 1.0, 0.5) - ref.f, 1e-10);
}

TEST(ScalarThreshold, RejectsBadArguments)
{
    EXPECT_THROW(scalar_p_threshold(1, -1, 1), std::invalid_argument);
    EXPECT_THROW(scalar_p_threshold(1, 1, 0), std::invalid_argument);
    EXPECT_THROW(scalar_p_threshold(1, 1, -0.5), std::invalid_argument);
}

TEST(ScalarThreshold, OracleAgreementSampled)
{
    RandomStream rng(22, RandomStream::Purpose::Test);
    for (double p : {1.0, 0.5, 2.0 / 3.0}) {
        for (int t = 0; t < 150; ++t) {
            const double y = rng.uniform(-10, 10), w = rng.uniform(0, 5);
            const auto ref = oracle::brute_force_threshold(y, w, table_for(p));
            const double x = scalar_p_threshold(y, w, p);
            const double f = oracle::scalar_objective(x, y, w, p);
            ASSERT_LE(f - ref.f, 1e-10) << "y=" << y << " w=" << w << " p=" << p;
            if (std::abs(ref.f_zero - ref.f_nonzero) > 1e-9)
                ASSERT_NEAR(x, ref.x, 1e-6) << "y=" << y << " w=" << w << " p=" << p;
        }
    }
}

TEST(ScalarThreshold, GenericExponentMatchesBruteForce)
{
    RandomStream rng(23, RandomStream::Purpose::Test);
    const oracle::PowerTable table(0.3, 200'001);
    for (int t = 0; t < 100; ++t) {
        const double y = rng.uniform(-10, 10), w = rng.uniform(0, 5);
        const auto ref = oracle::brute_force_threshold(y, w, table);
        const double x = scalar_p_threshold(y, w, 0.3);
        EXPECT_LE(oracle::scalar_objective(x, y, w, 0.3) - ref.f, 1e-10);
    }
}

TEST(ScalarThreshold, TieReturnsNonzeroRoot)
{
    // p = 1/2: the jump sits at |y| = (3/2) w^{2/3}; at that point both
    // 0 and the nonzero root 2|y|/3 are optimal.
    const double w = 1.0;
    const double y = 1.5 * std::pow(w, 2.0 / 3.0);
    const double x = scalar_p_threshold(y, w, 0.5);
    EXPECT_GT(x, 0.0);
    EXPECT_NEAR(oracle::scalar_objective(x, y, w, 0.5), 0.5 * y * y, 1e-12);
}

TEST(ScalarThreshold, Monotonicity)
{
    RandomStream rng(24, RandomStream::Purpose::Test);
    for (double p : {1.0, 0.5, 2.0 / 3.0, 0.4}) {
        for (int t = 0; t < 200; ++t) {
            const double w = rng.uniform(0, 5);
            const double y1 = rng.uniform(-10, 10), y2 = rng.uniform(-10, 10);
            const double lo = std::min(y1, y2), hi = std::max(y1, y2);
            EXPECT_LE(scalar_p_threshold(lo, w, p), scalar_p_threshold(hi, w, p));
            const double x = scalar_p_threshold(y1, w, p);
            EXPECT_LE(std::abs(x), std::abs(y1));
            const double wa = rng.uniform(0, 5), wb = rng.uniform(0, 5);
            const double y = std::abs(y1);
            EXPECT_GE(scalar_p_threshold(y, std::min(wa, wb), p), scalar_p_threshold(y, std::max(wa, wb), p));
        }
    }
}

TEST(WeightedShrink, Examples)
{
    ThinSVD svd = thin_svd(DenseMatrix::diagonal(std::vector<double>{5, 3, 1}));
    const std::vector<double> zeros(3, 0.0), ones(3, 1.0);
    EXPECT_EQ(weighted_sv_shrink(svd, zeros, 1.0).singulars, svd.singulars);
    const auto soft = weighted_sv_shrink(svd, ones, 1.0).singulars;
    EXPECT_NEAR(soft[0], 4, 1e-14);
    EXPECT_NEAR(soft[1], 2, 1e-14);
    EXPECT_EQ(soft[2], 0.0);

    const std::vector<double> w{0.5, 1, 2};
    const auto half = weighted_sv_shrink(svd, w, 0.5).singulars;
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_NEAR(half[i], oracle::brute_force_threshold(svd.singulars[i], w[i], table_for(0.5)).x, 1e-6);
}

TEST(WeightedShrink, RejectsBadWeights)
{
    const ThinSVD svd = thin_svd(DenseMatrix::identity(3));
    EXPECT_THROW(weighted_sv_shrink(svd, std::vector<double>{1, 1}, 1), std::invalid_argument);
    EXPECT_THROW(weighted_sv_shrink(svd, std::vector<double>{2, 1, 3}, 1), std::invalid_argument);
}

TEST(WspnProx, Examples)
{
    const DenseMatrix m = DenseMatrix::from_rows({{1, 2}, {3, 4}, {5, 7}});
    EXPECT_LE(max_abs_diff(wspn_prox(m, std::vector<double>{0, 0}, 0.5), m), 1e-12);
    const DenseMatrix d = wspn_prox(DenseMatrix::diagonal(std::vector<double>{5, 3}), std::vector<double>{1, 1}, 1.0);
    EXPECT_LE(max_abs_diff(d, DenseMatrix::diagonal(std::vector<double>{4, 2})), 1e-12);
    EXPECT_THROW(wspn_prox(m, std::vector<double>{2, 1}, 1.0), std::invalid_argument);
}

TEST(WspnProx, RandomProbesNeverBeatOutput)
{
    RandomStream rng(25, RandomStream::Purpose::Test);
    for (double p : {1.0, 0.5, 2.0 / 3.0}) {
        const DenseMatrix m = oracle::random_matrix(6, 4, rng);
        const auto w = sorted_weights(4, rng, 0.8);
        const DenseMatrix x = wspn_prox(m, w, p);
        const double best = prox_objective(x, m, w, p);
        EXPECT_LE(best, prox_objective(m, m, w, p) + 1e-12);
        for (int t = 0; t < 10'000; ++t) {
            const double eps = std::pow(10.0, rng.uniform(-4, -1));
            DenseMatrix c = x;
            for (double& v : c.data())
                v += eps * rng.uniform(-1, 1);
            ASSERT_GE(prox_objective(c, m, w, p), best - 1e-12) << "p=" << p << " probe " << t;
        }
    }
}

TEST(WspnProx, ShrinksSpectrum)
{
    RandomStream rng(26, RandomStream::Purpose::Test);
    for (int t = 0; t < 50; ++t) {
        const DenseMatrix m = oracle::random_matrix(5, 7, rng);
        const auto w = sorted_weights(5, rng, 1.5);
        const double p = (t % 3 == 0) ? 1.0 : (t % 3 == 1 ? 0.5 : 2.0 / 3.0);
        const DenseMatrix x = wspn_prox(m, w, p);
        const auto sx = singular_values(x), sm = singular_values(m);
        for (std::size_t i = 0; i < sx.size(); ++i)
            EXPECT_LE(sx[i], sm[i] + 1e-12);
        EXPECT_LE(wspn_value(x, w, p), wspn_value(m, w, p) + 1e-12);
    }
}

TEST(WspnValue, Examples)
{
    EXPECT_EQ(wspn_value(DenseMatrix::zeros(2, 3), std::vector<double>{1, 2}, 1.0), 0.0);
    EXPECT_NEAR(wspn_value(DenseMatrix::diagonal(std::vector<double>{4}), std::vector<double>{1}, 0.5), 2.0, 1e-14);
    EXPECT_NEAR(wspn_value(DenseMatrix::diagonal(std::vector<double>{3, 2, 1}), std::vector<double>{1, 2, 3}, 1.0),
                10.0, 1e-13);
    EXPECT_THROW(wspn_value(DenseMatrix::identity(3), std::vector<double>{1, 1}, 1.0), std::invalid_argument);
}

TEST(WtspnValue, ZeroAndNuclearNormAverage)
{
    RandomStream rng(27, RandomStream::Purpose::Test);
    const Shape s{4, 4, 4};
    WeightSpec spec;
    for (std::size_t m = 0; m < 3; ++m)
        spec.per_mode.push_back(std::vector<double>(4, 1.0));
    spec.gamma = equal_gamma(3);
    spec.p = 1.0;
    EXPECT_EQ(wtspn_value(DenseTensor::zeros(s), spec), 0.0);

    const DenseTensor x = oracle::random_tensor(s, rng);
    double nuclear = 0.0;
    for (std::size_t m = 0; m < 3; ++m)
        for (double v : oracle::singular_values(unfold(x, m)))
            nuclear += v;
    EXPECT_NEAR(wtspn_value(x, spec), nuclear / 3.0, 1e-10);
}

TEST(WtspnValue, RandomMatchesPerModeRecomputation)
{
    RandomStream rng(28, RandomStream::Purpose::Test);
    const DenseTensor x = oracle::random_tensor({4, 4, 4}, rng);
    WeightSpec spec;
    spec.gamma = {0.5, 0.3, 0.2};
    spec.p = 2.0 / 3.0;
    for (std::size_t m = 0; m < 3; ++m)
        spec.per_mode.push_back(sorted_weights(4, rng, 2.0));
    double ref = 0.0;
    for (std::size_t m = 0; m < 3; ++m) {
        const auto s = oracle::singular_values(unfold(x, m));
        for (std::size_t k = 0; k < 4; ++k)
            ref += spec.gamma[m] * spec.per_mode[m][k] * std::pow(s[k], spec.p);
    }
    EXPECT_NEAR(wtspn_value(x, spec), ref, 1e-10);
    spec.gamma = {0.5, 0.5, 0.5};
    EXPECT_THROW(wtspn_value(x, spec), std::invalid_argument);
}

TEST(RankTruncate, Examples)
{
    RandomStream rng(29, RandomStream::Purpose::Test);
    const DenseMatrix m = oracle::random_matrix(4, 6, rng);
    EXPECT_LE(max_abs_diff(rank_truncate(m, 4), m), 1e-12);
    const DenseMatrix d = rank_truncate(DenseMatrix::diagonal(std::vector<double>{3, 2, 1}), 2);
    EXPECT_LE(max_abs_diff(d, DenseMatrix::diagonal(std::vector<double>{3, 2, 0})), 1e-14);
    EXPECT_THROW(rank_truncate(m, 5), std::out_of_range);
}

TEST(RankTruncate, EckartYoung)
{
    RandomStream rng(30, RandomStream::Purpose::Test);
    for (int t = 0; t < 10; ++t) {
        const DenseMatrix m = oracle::random_matrix(5, 5, rng);
        const auto s = oracle::singular_values(m);
        for (std::size_t r = 0; r <= 5; ++r) {
            const DenseMatrix x = rank_truncate(m, r);
            double tail = 0.0;
            for (std::size_t i = r; i < 5; ++i)
                tail += s[i] * s[i];
            const double dist = (x.mat() - m.mat()).norm();
            EXPECT_NEAR(dist, std::sqrt(tail), 1e-10);
            EXPECT_LE(numerical_rank(singular_values(x), 1e-10), r);
            if (r == 0 || r == 5)
                continue;
            for (int c = 0; c < 100; ++c) {
                const DenseMatrix a = oracle::random_matrix(5, r, rng), b = oracle::random_matrix(r, 5, rng);
                const DenseMatrix cand(a.mat() * b.mat());
                ASSERT_GE((cand.mat() - m.mat()).norm(), dist - 1e-12);
            }
        }
    }
}

TEST(NumericalRank, FloorIsRelative)
{
    EXPECT_EQ(numerical_rank(std::vector<double>{1, 1e-11, 1e-13}), 2u);
    EXPECT_EQ(numerical_rank(std::vector<double>{0, 0}), 0u);
}

TEST(BallProject, Examples)
{
    const DenseTensor center = DenseTensor::zeros({2, 2});
    const DenseTensor inside({2, 2}, {0.1, 0.2, -0.3, 0.1});
    EXPECT_EQ(ball_project(inside, center, 1.0), inside);
    EXPECT_EQ(ball_project(center, center, 0.0), center);
    const DenseTensor p({2, 2}, {2, 2, 2, -2}); // norm 4
    EXPECT_LE(max_abs_diff(ball_project(p, center, 1.0), 0.25 * p), 1e-15);
    EXPECT_THROW(ball_project(p, center, -1.0), std::invalid_argument);
    EXPECT_THROW(ball_project(p, DenseTensor::zeros({4, 1}), 1.0), std::invalid_argument);
}

TEST(BallProject, FeasibleIdempotentNonexpansive)
{
    RandomStream rng(31, RandomStream::Purpose::Test);
    const Shape s{3, 4, 2};
    for (int t = 0; t < 500; ++t) {
        const DenseTensor c = oracle::random_tensor(s, rng);
        const DenseTensor p1 = oracle::random_tensor(s, rng, -3, 3), p2 = oracle::random_tensor(s, rng, -3, 3);
        const double radius = rng.uniform(0, 4);
        const DenseTensor q1 = ball_project(p1, c, radius), q2 = ball_project(p2, c, radius);
        ASSERT_LE(l2_norm(q1 - c), radius + 1e-12);
        ASSERT_LE(max_abs_diff(ball_project(q1, c, radius), q1), 1e-14);
        ASSERT_LE(l2_norm(q1 - q2), l2_norm(p1 - p2) + 1e-12);
    }
}

TEST(ShrinkCsv, Format)
{
    std::ostringstream out;
    write_shrink_csv(out, std::vector<double>{5, 3}, std::vector<double>{1, 1}, std::vector<double>{4, 2});
    EXPECT_EQ(out.str(), "index,sigma,weight,shrunk\n1,5,1,4\n2,3,1,2\n");
}

// The folded-tensor maps take a Gram-matrix route for wide unfoldings and
// must agree with the explicit unfold / SVD / fold composition.
TEST(ModeSpectral, ProxMatchesExplicitPath)
{
    RandomStream rng(32, RandomStream::Purpose::Test);
    const std::vector<Shape> shapes{{5, 6, 7}, {8, 2, 3}, {4, 4, 4, 4}, {3, 9}, {9, 3}};
    for (const Shape& s : shapes) {
        const DenseTensor x = oracle::random_tensor(s, rng);
        for (std::size_t m = 0; m < s.size(); ++m) {
            const std::size_t k = unfold_min_dim(s, m);
            const auto w = sorted_weights(k, rng, 0.5);
            for (double p : {1.0, 0.5}) {
                const DenseTensor ref = fold(wspn_prox(unfold(x, m), w, p), m, s);
                EXPECT_LE(max_abs_diff(mode_wspn_prox(x, m, w, p), ref), 1e-10) << shape_to_string(s) << " m=" << m;
            }
            for (std::size_t r = 0; r <= k; ++r) {
                const DenseTensor ref = fold(rank_truncate(unfold(x, m), r), m, s);
                EXPECT_LE(max_abs_diff(mode_rank_truncate(x, m, r), ref), 1e-10) << shape_to_string(s) << " r=" << r;
            }
        }
    }
}

TEST(ModeSpectral, ZeroWeightsKeepLowRankInput)
{
    RandomStream rng(33, RandomStream::Purpose::Test);
    // rank-1 in every mode: many unresolved singular values
    DenseTensor x({6, 5, 4});
    std::vector<double> a(6), b(5), c(4);
    for (double& v : a)
        v = rng.uniform(-1, 1);
    for (double& v : b)
        v = rng.uniform(-1, 1);
    for (double& v : c)
        v = rng.uniform(-1, 1);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t i = 0; i < 6; ++i)
                x[i + 6 * (j + 5 * k)] = a[i] * b[j] * c[k];
    for (std::size_t m = 0; m < 3; ++m) {
        const std::vector<double> w(unfold_min_dim(x.shape(), m), 0.0);
        EXPECT_LE(max_abs_diff(mode_wspn_prox(x, m, w, 1.0), x), 1e-12);
    }
}

TEST(ModeSpectral, IntoReusesOutput)
{
    RandomStream rng(34, RandomStream::Purpose::Test);
    const DenseTensor x = oracle::random_tensor({4, 5, 6}, rng);
    DenseTensor out;
    const std::vector<double> w(4, 0.1);
    mode_wspn_prox_into(x, 0, w, 1.0, out);
    EXPECT_EQ(out, mode_wspn_prox(x, 0, w, 1.0));
    mode_rank_truncate_into(x, 2, 2, out);
    EXPECT_EQ(out, mode_rank_truncate(x, 2, 2));
}
