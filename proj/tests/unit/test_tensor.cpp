#include "oracles.hpp"

#include "tdb/error.hpp"
#include "tdb/tensor.hpp"

#include <gtest/gtest.h>

using namespace tdb;

namespace {

std::mt19937_64 rng_for(unsigned seed) { return std::mt19937_64(seed); }

} // namespace

TEST(DenseTensor, RejectsBadShapes) {
    EXPECT_THROW(DenseTensor(Shape{}), Error);
    EXPECT_THROW(DenseTensor(Shape{2, 0}), Error);
    EXPECT_THROW(DenseTensor(Shape{2, 2}, std::vector<double>(3)), Error);
}

TEST(DenseTensor, FirstIndexFastest) {
    DenseTensor t(Shape{2, 3});
    t({1, 2}) = 5.0;
    EXPECT_EQ(t.values()[1 + 2 * 2], 5.0);
    EXPECT_EQ(t.linear_index(std::vector<Index>{1, 2}), 5u);
}

TEST(Unfold, SpecExample2x2x2) {
    // T[i,j,k] = i + 2(j-1) + 4(k-1), 1-based.
    DenseTensor t(Shape{2, 2, 2});
    for (Index k = 0; k < 2; ++k)
        for (Index j = 0; j < 2; ++j)
            for (Index i = 0; i < 2; ++i) t({i, j, k}) = static_cast<double>((i + 1) + 2 * j + 4 * k);
    const Matrix m = unfold(t, 0);
    Matrix expected(2, 4);
    expected << 1, 3, 5, 7, 2, 4, 6, 8;
    EXPECT_EQ(m, expected);
}

TEST(Unfold, MatchesIndexEnumeration) {
    auto rng = rng_for(1);
    const DenseTensor t = oracle::random_tensor({3, 4, 2}, rng);
    for (Index n = 0; n < 3; ++n) EXPECT_EQ(unfold(t, n), oracle::unfold(t, n)) << "mode " << n;
    const DenseTensor t4 = oracle::random_tensor({2, 3, 2, 3}, rng);
    for (Index n = 0; n < 4; ++n) EXPECT_EQ(unfold(t4, n), oracle::unfold(t4, n)) << "mode " << n;
}

TEST(Unfold, FoldIsExactInverse) {
    auto rng = rng_for(2);
    const DenseTensor t = oracle::random_tensor({4, 3, 5}, rng);
    for (Index n = 0; n < 3; ++n) EXPECT_EQ(fold(unfold(t, n), n, t.dims()), t);
}

TEST(Unfold, ModeOutOfRange) {
    DenseTensor t(Shape{2, 2});
    try {
        (void)unfold(t, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::range);
    }
}

TEST(Fold, ZeroMatrixAndShapeMismatch) {
    EXPECT_EQ(fold(Matrix::Zero(3, 8), 1, {2, 3, 4}), DenseTensor(Shape{2, 3, 4}));
    EXPECT_THROW((void)fold(Matrix::Zero(3, 7), 1, {2, 3, 4}), Error);
}

TEST(Fold, OrderOneIsReshape) {
    DenseTensor t(Shape{4}, {1, 2, 3, 4});
    const Matrix m = unfold(t, 0);
    EXPECT_EQ(m.rows(), 4);
    EXPECT_EQ(m.cols(), 1);
    EXPECT_EQ(fold(m, 0, {4}), t);
}

TEST(ModeProduct, IdentityLeavesTensorUnchanged) {
    auto rng = rng_for(3);
    const DenseTensor t = oracle::random_tensor({3, 4, 2}, rng);
    for (Index n = 0; n < 3; ++n) EXPECT_LT(oracle::max_rel_error(mode_product(t, Matrix::Identity(t.dim(n), t.dim(n)), n), t), 1e-15);
}

TEST(ModeProduct, RankOneMultilinearity) {
    Vector u(3), v(2), w(4);
    u << 1, -2, 0.5;
    v << 3, 1;
    w << 1, 2, 3, 4;
    DenseTensor t(Shape{3, 2, 4});
    for (Index k = 0; k < 4; ++k)
        for (Index j = 0; j < 2; ++j)
            for (Index i = 0; i < 3; ++i) t({i, j, k}) = u[i] * v[j] * w[k];
    Matrix a(2, 3);
    a << 1, 0, 2, -1, 1, 1;
    const Vector au = a * u;
    const DenseTensor r = mode_product(t, a, 0);
    for (Index k = 0; k < 4; ++k)
        for (Index j = 0; j < 2; ++j)
            for (Index i = 0; i < 2; ++i) EXPECT_NEAR(r({i, j, k}), au[i] * v[j] * w[k], 1e-13);
}

TEST(ModeProduct, MatchesBruteForceContraction) {
    auto rng = rng_for(4);
    for (int trial = 0; trial < 10; ++trial) {
        const DenseTensor t = oracle::random_tensor({3, 3, 3}, rng);
        const Matrix a = oracle::random_matrix(2, 3, rng);
        for (Index n = 0; n < 3; ++n)
            EXPECT_LT(oracle::max_rel_error(mode_product(t, a, n), oracle::mode_product(t, a, n)), 1e-13);
    }
    const DenseTensor t = oracle::random_tensor({4, 5, 3, 2}, rng);
    for (Index n = 0; n < 4; ++n) {
        const Matrix a = oracle::random_matrix(6, t.dim(n), rng);
        EXPECT_LT(oracle::max_rel_error(mode_product(t, a, n), oracle::mode_product(t, a, n)), 1e-13);
    }
}

TEST(ModeProduct, Commutes) {
    auto rng = rng_for(5);
    const DenseTensor t = oracle::random_tensor({4, 5, 3}, rng);
    const Matrix a = oracle::random_matrix(2, 4, rng);
    const Matrix b = oracle::random_matrix(6, 3, rng);
    const DenseTensor ab = mode_product(mode_product(t, a, 0), b, 2);
    const DenseTensor ba = mode_product(mode_product(t, b, 2), a, 0);
    EXPECT_LT(oracle::max_rel_error(ab, ba), 1e-13);
}

TEST(ModeProduct, DimensionMismatch) {
    DenseTensor t(Shape{3, 2});
    EXPECT_THROW((void)mode_product(t, Matrix::Zero(2, 2), 0), Error);
}

TEST(WeightedInner, Examples) {
    const std::vector<double> one{1, 1}, half{0.5, 0.5};
    EXPECT_DOUBLE_EQ(weighted_inner(one, one, half), 1.0);
    const std::vector<double> a{1, 1}, b{1, -1};
    EXPECT_DOUBLE_EQ(weighted_inner(a, b, half), 0.0);
    EXPECT_THROW((void)weighted_inner(a, std::vector<double>{1}, half), Error);
}

TEST(WeightedInner, MatchesDirectSum) {
    auto rng = rng_for(6);
    const Vector u = oracle::random_matrix(17, 1, rng), v = oracle::random_matrix(17, 1, rng);
    const Vector w = oracle::random_weights(17, rng);
    double s = 0.0;
    for (int i = 0; i < 17; ++i) s += u[i] * v[i] * w[i];
    EXPECT_NEAR(weighted_inner(u, v, w), s, 1e-14 * std::abs(s) + 1e-15);
}

TEST(WeightedFrobenius, Examples) {
    DenseTensor ones(Shape{2, 2}, {1, 1, 1, 1});
    EXPECT_DOUBLE_EQ(weighted_frobenius(ones, ModeWeights::unit(ones.dims())), 2.0);
    DenseTensor zero(Shape{3, 2});
    EXPECT_DOUBLE_EQ(weighted_frobenius(zero, ModeWeights::unit(zero.dims())), 0.0);
}

TEST(WeightedFrobenius, MatchesFullSumAndEuclidean) {
    auto rng = rng_for(7);
    const DenseTensor t = oracle::random_tensor({4, 3, 5}, rng);
    const ModeWeights w({oracle::random_weights(4, rng), oracle::random_weights(3, rng), oracle::random_weights(5, rng)});
    const double ref = oracle::weighted_frobenius(t, w);
    EXPECT_NEAR(weighted_frobenius(t, w), ref, 1e-14 * ref);

    double e = 0.0;
    for (double x : t.values()) e += x * x;
    EXPECT_NEAR(weighted_frobenius(t, ModeWeights::unit(t.dims())), std::sqrt(e), 1e-14 * std::sqrt(e));
    EXPECT_THROW((void)weighted_frobenius(t, ModeWeights::unit(Shape{4, 3})), Error);
}

TEST(WeightedFrobenius, OrthonormalProjectionBound) {
    auto rng = rng_for(8);
    const Vector w0 = oracle::random_weights(6, rng);
    const ModeWeights w({w0, Vector::Ones(4), Vector::Ones(3)});
    const Matrix a = oracle::random_weighted_basis(w0, 2, rng);
    const DenseTensor t = oracle::random_tensor({6, 4, 3}, rng);
    const DenseTensor c = mode_product(t, weighted_transpose(a, w0), 0);
    const ModeWeights wc({Vector::Ones(2), Vector::Ones(4), Vector::Ones(3)});
    EXPECT_LE(weighted_frobenius(c, wc), weighted_frobenius(t, w) * (1 + 1e-14));

    // Fibers inside span(A): equality.
    const DenseTensor inside = mode_product(oracle::random_tensor({2, 4, 3}, rng), a, 0);
    const DenseTensor ci = mode_product(inside, weighted_transpose(a, w0), 0);
    EXPECT_NEAR(weighted_frobenius(ci, wc), weighted_frobenius(inside, w), 1e-12);
}

TEST(ModeWeights, Validation) {
    EXPECT_THROW(ModeWeights({Vector::Zero(3)}), Error);
    Vector neg(2);
    neg << 1, -1;
    EXPECT_THROW(ModeWeights({neg}), Error);
    Vector some(2);
    some << 0, 2;
    EXPECT_NO_THROW(ModeWeights({some}));
}

TEST(ModeWeights, Trapezoid) {
    const Vector w = ModeWeights::trapezoid(5, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(w[0], 0.125);
    EXPECT_DOUBLE_EQ(w[2], 0.25);
    EXPECT_NEAR(w.sum(), 1.0, 1e-15);
}

TEST(MultiRank, Feasibility) {
    EXPECT_TRUE(is_feasible(Shape{2, 2, 2}, Shape{4, 4, 4}));
    EXPECT_FALSE(is_feasible(Shape{5, 1, 2}, Shape{8, 8, 8}));
    EXPECT_FALSE(is_feasible(Shape{0, 1, 1}, Shape{8, 8, 8}));
    EXPECT_FALSE(is_feasible(Shape{9, 3, 3}, Shape{8, 8, 8}));
    EXPECT_THROW(check_multirank(Shape{5, 1, 2}, Shape{8, 8, 8}), Error);
    const MultiRank c = clamp_feasible({5, 1, 2}, Shape{8, 8, 8});
    EXPECT_TRUE(is_feasible(c, Shape{8, 8, 8}));
}

TEST(UnfoldingColumnWeights, MatchesUnfoldingOrder) {
    auto rng = rng_for(9);
    const ModeWeights w({oracle::random_weights(2, rng), oracle::random_weights(3, rng), oracle::random_weights(4, rng)});
    const Vector cw = unfolding_column_weights(w, 1);
    ASSERT_EQ(cw.size(), 8);
    for (Index k = 0; k < 4; ++k)
        for (Index i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(cw[i + 2 * k], w[0][i] * w[2][k]);
}
