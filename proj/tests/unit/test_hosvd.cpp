#include "oracles.hpp"

#include "tdb/adaptivity.hpp"
#include "tdb/datagen.hpp"
#include "tdb/error.hpp"
#include "tdb/hosvd.hpp"

#include <gtest/gtest.h>

using namespace tdb;

namespace {

std::shared_ptr<const ModeWeights> unit_weights(const Shape& dims) {
    return std::make_shared<const ModeWeights>(ModeWeights::unit(dims));
}

double orthonormality(const Matrix& u, const Vector& w) {
    return (u.transpose() * w.asDiagonal() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

} // namespace

TEST(ModeSvd, SuperdiagonalTensor) {
    DenseTensor t(Shape{3, 3, 3});
    t({0, 0, 0}) = 3;
    t({1, 1, 1}) = 2;
    t({2, 2, 2}) = 1;
    const ModeSpectrum s = mode_svd(t, 0, ModeWeights::unit(t.dims()), 3);
    EXPECT_NEAR(s.singular_values[0], 3, 1e-14);
    EXPECT_NEAR(s.singular_values[1], 2, 1e-14);
    EXPECT_NEAR(s.singular_values[2], 1, 1e-14);
    EXPECT_LT((s.vectors - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ModeSvd, RankOneTensor) {
    std::mt19937_64 rng(11);
    const Vector w0 = oracle::random_weights(4, rng), w1 = oracle::random_weights(3, rng), w2 = oracle::random_weights(5, rng);
    const Vector u = oracle::random_matrix(4, 1, rng), v = oracle::random_matrix(3, 1, rng), x = oracle::random_matrix(5, 1, rng);
    DenseTensor t(Shape{4, 3, 5});
    for (Index k = 0; k < 5; ++k)
        for (Index j = 0; j < 3; ++j)
            for (Index i = 0; i < 4; ++i) t({i, j, k}) = u[i] * v[j] * x[k];
    const ModeWeights w({w0, w1, w2});
    const double expected = std::sqrt(weighted_inner(u, u, w0) * weighted_inner(v, v, w1) * weighted_inner(x, x, w2));
    for (Index n = 0; n < 3; ++n) {
        const Vector s = mode_singular_values(t, n, w);
        EXPECT_NEAR(s[0], expected, 1e-12 * expected);
        for (Eigen::Index i = 1; i < s.size(); ++i) EXPECT_LT(s[i], 1e-7 * expected);
    }
}

TEST(ModeSvd, MatchesDenseWeightedSvd) {
    std::mt19937_64 rng(12);
    const DenseTensor t = oracle::random_tensor({6, 5, 4}, rng);
    const ModeWeights w({oracle::random_weights(6, rng), oracle::random_weights(5, rng), oracle::random_weights(4, rng)});
    for (Index n = 0; n < 3; ++n) {
        const ModeSpectrum s = mode_svd(t, n, w, t.dim(n));
        const Vector ref = oracle::weighted_mode_singular_values(t, n, w);
        for (Eigen::Index i = 0; i < ref.size(); ++i) EXPECT_NEAR(s.singular_values[i], ref[i], 1e-12 * ref[0]);
        EXPECT_LT(orthonormality(s.vectors, w[n]), 1e-10);
        // Sign convention: largest-magnitude entry of every vector positive.
        for (Eigen::Index j = 0; j < s.vectors.cols(); ++j) {
            Eigen::Index imax = 0;
            s.vectors.col(j).cwiseAbs().maxCoeff(&imax);
            EXPECT_GT(s.vectors(imax, j), 0.0);
        }
    }
}

TEST(ModeSvd, Errors) {
    DenseTensor t(Shape{3, 2});
    const ModeWeights w = ModeWeights::unit(t.dims());
    EXPECT_THROW((void)mode_svd(t, 0, w, 0), Error);
    EXPECT_THROW((void)mode_svd(t, 0, w, 4), Error);
    t({0, 0}) = std::numeric_limits<double>::quiet_NaN();
    try {
        (void)mode_svd(t, 0, w, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::numeric);
    }
}

TEST(ModeSvd, ZeroWeightRowsGiveZeroEntries) {
    std::mt19937_64 rng(13);
    const DenseTensor t = oracle::random_tensor({5, 4}, rng);
    Vector w0 = Vector::Ones(5);
    w0[2] = 0.0;
    const ModeSpectrum s = mode_svd(t, 0, ModeWeights({w0, Vector::Ones(4)}), 3);
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_EQ(s.vectors(2, j), 0.0);
}

TEST(ModeSvd, InvariantUnderPermutingOtherModes) {
    std::mt19937_64 rng(14);
    const DenseTensor t = oracle::random_tensor({4, 3, 5}, rng);
    DenseTensor p(Shape{4, 5, 3});
    for (Index k = 0; k < 5; ++k)
        for (Index j = 0; j < 3; ++j)
            for (Index i = 0; i < 4; ++i) p({i, k, j}) = t({i, j, k});
    const Vector a = mode_singular_values(t, 0, ModeWeights::unit(t.dims()));
    const Vector b = mode_singular_values(p, 0, ModeWeights::unit(p.dims()));
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(HosvdTruncate, ExactMultirankIsLossless) {
    std::mt19937_64 rng(15);
    const TdbState truth = oracle::random_state({6, 5, 4}, {2, 2, 2}, rng);
    const DenseTensor v = reconstruct(truth);
    const TdbState s = hosvd_truncate(v, truth.weights, {2, 2, 2});
    EXPECT_LT(compute_error(v, s), 1e-12 * weighted_frobenius(v, *truth.weights));
    for (Index n = 0; n < 3; ++n) EXPECT_LT(orthonormality(s.bases[n], (*truth.weights)[n]), 1e-10);
}

TEST(HosvdTruncate, FullRankReproducesData) {
    std::mt19937_64 rng(16);
    const DenseTensor v = oracle::random_tensor({4, 3, 5}, rng);
    const auto w = unit_weights(v.dims());
    const TdbState s = hosvd_truncate(v, w, {4, 3, 5});
    EXPECT_LT(oracle::max_rel_error(reconstruct(s), v), 1e-12);
}

TEST(HosvdTruncate, InfeasibleRanks) {
    const DenseTensor v(Shape{4, 4, 4});
    EXPECT_THROW((void)hosvd_truncate(v, unit_weights(v.dims()), {4, 1, 1}), Error);
}

TEST(HosvdTruncate, ErrorBoundedByTail) {
    std::mt19937_64 rng(17);
    const DenseTensor v = oracle::random_tensor({6, 5, 4}, rng);
    const auto w = std::make_shared<const ModeWeights>(
        std::vector<Vector>{oracle::random_weights(6, rng), oracle::random_weights(5, rng), oracle::random_weights(4, rng)});
    const HosvdResult h = hosvd(v, w, {3, 2, 2});
    EXPECT_LE(compute_error(v, h.state), hosvd_tail_bound(h.spectra, Shape{3, 2, 2}) * (1 + 1e-11));
    EXPECT_NEAR(compute_error(v, h.state), oracle::hosvd_error(v, *w, {3, 2, 2}), 1e-11);
}

TEST(HosvdTruncate, RungeMatchesDenseOracle) {
    RungeParams p;
    p.grid_points = 32;
    const RungeStream stream(p);
    const DenseTensor v = stream.evaluate(0.0);
    const TdbState s = hosvd_truncate(v, stream.weights(), {3, 3, 3});
    EXPECT_NEAR(compute_error(v, s), oracle::hosvd_error(v, *stream.weights(), {3, 3, 3}), 1e-10);
}

TEST(RanksForEnergy, Examples) {
    Vector s1(4);
    s1 << 1, 0, 0, 0;
    EXPECT_EQ(rank_for_energy(s1, 99.9), 1u);
    Vector s2(2);
    s2 << 2, 1;
    EXPECT_EQ(rank_for_energy(s2, 79.0), 1u);
    EXPECT_EQ(rank_for_energy(s2, 81.0), 2u);
    EXPECT_THROW((void)rank_for_energy(Vector(), 90.0), Error);
    EXPECT_THROW((void)rank_for_energy(s2, 100.0), Error);
    EXPECT_THROW((void)ranks_for_energy({}, 90.0, Shape{}), Error);
}

TEST(RanksForEnergy, ClampedToFeasible) {
    ModeSpectrum wide{Vector::Ones(6), Matrix::Identity(6, 6)};
    ModeSpectrum narrow{(Vector(6) << 1, 0, 0, 0, 0, 0).finished(), Matrix::Identity(6, 6)};
    const MultiRank r = ranks_for_energy({wide, narrow, narrow}, 99.0, Shape{6, 6, 6});
    EXPECT_TRUE(is_feasible(r, Shape{6, 6, 6}));
    EXPECT_EQ(r[1], 1u);
}

TEST(RanksForEnergy, RungeInitialRank) {
    // The tail-energy rule on the t = 0 Runge spectra under trapezoid weights.
    RungeParams p;
    p.grid_points = 64;
    const RungeStream stream(p);
    const HosvdResult h = hosvd(stream.evaluate(0.0), stream.weights(), {1, 1, 1});
    const MultiRank r = ranks_for_energy(h.spectra, 99.999, Shape{64, 64, 64});
    EXPECT_EQ(r, (MultiRank{4, 4, 4}));
    EXPECT_EQ(ranks_for_energy(h.spectra, 99.99, Shape{64, 64, 64}), (MultiRank{3, 3, 3}));
}
