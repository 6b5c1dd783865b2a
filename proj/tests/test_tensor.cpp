#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tenrec/tensor.hpp"
#include "tenrec/tensor_io.hpp"

using namespace tenrec;

namespace {

DenseTensor counting_cube()
{
    std::vector<double> v(8);
    std::iota(v.begin(), v.end(), 1.0);
    return DenseTensor({2, 2, 2}, v);
}

// [1,2;3,4] stored first-index-fastest.
DenseTensor two_by_two() { return DenseTensor({2, 2}, {1, 3, 2, 4}); }

ObservationMask diagonal_mask() { return ObservationMask({2, 2}, {true, false, false, true}); }

std::vector<std::size_t> multi_index(std::size_t linear, const Shape& shape)
{
    std::vector<std::size_t> idx(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k) {
        idx[k] = linear % shape[k];
        linear /= shape[k];
    }
    return idx;
}

Shape random_shape(RandomStream& rng)
{
    const std::size_t order = 3 + rng.below(2);
    Shape s(order);
    for (auto& d : s)
        d = 1 + rng.below(5);
    return s;
}

} // namespace

TEST(Unfold, CountingCubeModeOne)
{
    const DenseMatrix m = unfold(counting_cube(), 0);
    EXPECT_EQ(m, DenseMatrix::from_rows({{1, 3, 5, 7}, {2, 4, 6, 8}}));
}

TEST(Unfold, CountingCubeModeThree)
{
    const DenseMatrix m = unfold(counting_cube(), 2);
    EXPECT_EQ(m, DenseMatrix::from_rows({{1, 2, 3, 4}, {5, 6, 7, 8}}));
}

TEST(Unfold, CountingCubeModeTwoMatchesIndexMap)
{
    const DenseTensor x = counting_cube();
    const DenseMatrix m = unfold(x, 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto [r, c] = oracle::unfold_position(x.shape(), 1, multi_index(i, x.shape()));
        EXPECT_EQ(m(r, c), x[i]);
    }
}

TEST(Unfold, OrderTwoModeOneIsTheMatrix)
{
    const DenseMatrix m = unfold(two_by_two(), 0);
    EXPECT_EQ(m, DenseMatrix::from_rows({{1, 2}, {3, 4}}));
}

TEST(Unfold, ModeOutOfRangeThrows)
{
    EXPECT_THROW(unfold(counting_cube(), 3), std::out_of_range);
}

TEST(Unfold, EntryMapOnRandomShapes)
{
    RandomStream rng(11, RandomStream::Purpose::Test);
    for (int t = 0; t < 50; ++t) {
        const Shape s = random_shape(rng);
        const DenseTensor x = oracle::random_tensor(s, rng);
        for (std::size_t m = 0; m < s.size(); ++m) {
            const DenseMatrix u = unfold(x, m);
            ASSERT_EQ(u.rows(), s[m]);
            ASSERT_EQ(u.cols(), x.size() / s[m]);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const auto [r, c] = oracle::unfold_position(s, m, multi_index(i, s));
                ASSERT_EQ(u(r, c), x[i]);
            }
        }
    }
}

TEST(Fold, InverseOfCountingExample)
{
    const DenseMatrix m = DenseMatrix::from_rows({{1, 3, 5, 7}, {2, 4, 6, 8}});
    EXPECT_EQ(fold(m, 0, {2, 2, 2}), counting_cube());
}

TEST(Fold, ZeroMatrixGivesZeroTensor)
{
    EXPECT_EQ(fold(DenseMatrix::zeros(3, 8), 1, {2, 3, 4}), DenseTensor::zeros({2, 3, 4}));
}

TEST(Fold, DimensionMismatchThrows)
{
    EXPECT_THROW(fold(DenseMatrix::zeros(2, 3), 0, {2, 2, 2}), std::invalid_argument);
}

TEST(Fold, RoundtripIsBitExact)
{
    RandomStream rng(12, RandomStream::Purpose::Test);
    for (int t = 0; t < 200; ++t) {
        const Shape s = random_shape(rng);
        const DenseTensor x = oracle::random_tensor(s, rng, -1e3, 1e3);
        for (std::size_t m = 0; m < s.size(); ++m) {
            const DenseMatrix u = unfold(x, m);
            ASSERT_EQ(fold(u, m, s), x);
            // entry bijection
            std::vector<double> a(x.data().begin(), x.data().end()), b(u.data().begin(), u.data().end());
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            ASSERT_EQ(a, b);
            ASSERT_DOUBLE_EQ(l2_norm(x), frobenius_norm(u));
        }
    }
}

TEST(Mask, ApplyDiagonal)
{
    EXPECT_EQ(mask_apply(two_by_two(), diagonal_mask()), DenseTensor({2, 2}, {1, 0, 0, 4}));
}

TEST(Mask, ComplementDiagonal)
{
    EXPECT_EQ(mask_complement_apply(two_by_two(), diagonal_mask()), DenseTensor({2, 2}, {0, 3, 2, 0}));
}

TEST(Mask, AllAndNone)
{
    const DenseTensor x = counting_cube();
    EXPECT_EQ(mask_apply(x, ObservationMask::all(x.shape())), x);
    EXPECT_EQ(mask_apply(x, ObservationMask::none(x.shape())), DenseTensor::zeros(x.shape()));
    EXPECT_EQ(mask_complement_apply(x, ObservationMask::all(x.shape())), DenseTensor::zeros(x.shape()));
}

TEST(Mask, ShapeMismatchThrows)
{
    EXPECT_THROW(mask_apply(counting_cube(), diagonal_mask()), std::invalid_argument);
}

TEST(Mask, PartitionAndIdempotence)
{
    RandomStream rng(13, RandomStream::Purpose::Test);
    for (int t = 0; t < 50; ++t) {
        const Shape s = random_shape(rng);
        const DenseTensor x = oracle::random_tensor(s, rng);
        const ObservationMask mask = oracle::random_mask(s, 0.5, rng);
        const DenseTensor in = mask_apply(x, mask);
        EXPECT_EQ(mask_apply(in, mask), in);
        EXPECT_EQ(in + mask_complement_apply(x, mask), x);
        EXPECT_EQ(mask.complement().count(), mask.size() - mask.count());
    }
}

TEST(Norm, Examples)
{
    EXPECT_EQ(l2_norm(DenseTensor::zeros({2, 3})), 0.0);
    EXPECT_DOUBLE_EQ(l2_norm(DenseTensor::filled({2, 2, 2}, 1.0)), std::sqrt(8.0));
    EXPECT_DOUBLE_EQ(l2_norm(DenseTensor({1, 2}, {3, 4})), 5.0);
}

TEST(Tensor, RejectsBadShapes)
{
    EXPECT_THROW(DenseTensor(Shape{4}), std::invalid_argument);
    EXPECT_THROW(DenseTensor(Shape{2, 0}), std::invalid_argument);
    EXPECT_THROW(DenseTensor({2, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST(TensorIo, StreamRoundtrip)
{
    RandomStream rng(14, RandomStream::Purpose::Test);
    const DenseTensor x = oracle::random_tensor({3, 4, 2, 2}, rng);
    std::stringstream buf;
    write_tensor(buf, x);
    EXPECT_EQ(buf.str().substr(0, 4), "TNR1");
    EXPECT_EQ(buf.str().size(), 4 + 4 + 4 * 8 + x.size() * 8);
    EXPECT_EQ(read_tensor(buf), x);
}

TEST(TensorIo, RejectsBadMagicAndTruncation)
{
    std::stringstream bad("XXXX0000");
    EXPECT_THROW(read_tensor(bad), std::runtime_error);
    std::stringstream buf;
    write_tensor(buf, counting_cube());
    std::string s = buf.str();
    s.resize(s.size() - 3);
    std::stringstream cut(s);
    EXPECT_THROW(read_tensor(cut), std::runtime_error);
}

TEST(TensorIo, FileRoundtripWithMask)
{
    const auto dir = std::filesystem::temp_directory_path() / "tenrec_test_io";
    std::filesystem::create_directories(dir);
    RandomStream rng(15, RandomStream::Purpose::Test);
    const DenseTensor x = oracle::random_tensor({5, 3, 2}, rng);
    const ObservationMask mask = oracle::random_mask(x.shape(), 0.3, rng);
    save_tensor(dir / "x.tnr", x);
    save_mask(dir / "m.tnr", mask);
    EXPECT_EQ(load_tensor(dir / "x.tnr"), x);
    EXPECT_EQ(load_mask(dir / "m.tnr"), mask);
    std::filesystem::remove_all(dir);
}

TEST(TensorIo, MatrixCsv)
{
    std::ostringstream out;
    write_matrix_csv(out, DenseMatrix::from_rows({{1, 0.5}, {-2, 3}}));
    EXPECT_EQ(out.str(), "1,0.5\n-2,3\n");
}

TEST(TensorIo, FormatDoubleRoundtrips)
{
    RandomStream rng(16, RandomStream::Purpose::Test);
    for (int t = 0; t < 1000; ++t) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(std::nan("")), "nan");
}
