#include "oracles.hpp"

#include "tdb/archive.hpp"
#include "tdb/compressor.hpp"
#include "tdb/error.hpp"
#include "tdb/hosvd.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

using namespace tdb;

namespace {

ExactRankParams exact_params() {
    ExactRankParams p;
    p.dims = {12, 10, 8};
    p.ranks = {3, 3, 2};
    p.steps = 60;
    p.dt = 1e-2;
    p.seed = 9;
    return p;
}

bool bit_equal(const TdbState& a, const TdbState& b) {
    if (a.core.dims() != b.core.dims() || a.time != b.time) return false;
    if (std::memcmp(a.core.data(), b.core.data(), a.core.size() * sizeof(double)) != 0) return false;
    for (Index n = 0; n < a.order(); ++n)
        if (a.bases[n] != b.bases[n]) return false;
    return true;
}

} // namespace

TEST(Compressor, DisabledControllerMatchesPlainEvolution) {
    ExactRankStream stream(exact_params());
    CompressorConfig c;
    c.initial_ranks = {3, 3, 2};
    std::vector<TdbState> seen;
    const RunSummary r = compress_stream(stream, c, [&](const TdbState& s, const StepLog&) { seen.push_back(s); });
    ASSERT_EQ(seen.size(), 61u);
    EXPECT_EQ(r.steps, 60u);
    EXPECT_EQ(r.reinitializations, 0u);

    const HosvdResult init = hosvd(stream.snapshot(0), stream.weights(), MultiRank(3, 1), 0.0);
    TdbState s = truncate_from_spectra(stream.snapshot(0), stream.weights(), init.spectra, {3, 3, 2}, 0.0);
    EXPECT_TRUE(bit_equal(s, seen[0]));
    // The compressor samples V̇ at grid times t_k = t0 + k·Δt.
    const DerivativeFn d = [&](double t) {
        return stream.derivative(stream.time_at(static_cast<Index>(std::lround(t / stream.dt()))));
    };
    for (Index k = 0; k < 60; ++k) {
        s = step(s, d, stream.dt(), Integrator::rk2);
        s.time = stream.time_at(k + 1);
        ASSERT_TRUE(bit_equal(s, seen[k + 1])) << "step " << k + 1;
    }
    EXPECT_LT(r.max_error, 1e-6);
}

TEST(Compressor, LogContents) {
    ExactRankStream stream(exact_params());
    CompressorConfig c;
    c.initial_ranks = {3, 3, 2};
    c.adaptive.check_interval = 4;
    c.max_steps = 10;
    const RunSummary r = compress_stream(stream, c);
    ASSERT_EQ(r.log.size(), 11u);
    for (const StepLog& e : r.log) {
        EXPECT_EQ(e.checked, e.step % 4 == 0);
        EXPECT_EQ(std::isnan(e.record.error), !e.checked);
        EXPECT_DOUBLE_EQ(e.record.time, stream.time_at(e.step));
        EXPECT_DOUBLE_EQ(e.compression_ratio, compression_ratio(stream.dims(), Shape{3, 3, 2}));
        if (e.checked) {
            ASSERT_EQ(e.record.captured.size(), 3u);
            for (double g : e.record.captured) EXPECT_GT(g, 99.99);
        }
    }
    EXPECT_DOUBLE_EQ(r.weighted_compression_ratio, r.log[0].compression_ratio);
}

TEST(Compressor, InitialRanksFromEnergy) {
    ExactRankStream stream(exact_params());
    CompressorConfig c;
    c.max_steps = 1;
    c.adaptive.energy_threshold = 99.999;
    const RunSummary r = compress_stream(stream, c);
    EXPECT_EQ(r.log[0].record.ranks, ranks_for_energy(hosvd(stream.snapshot(0), stream.weights(), {1, 1, 1}).spectra, 99.999, stream.dims()));
}

TEST(Compressor, FiniteDifferenceSchemes) {
    double err_fd1 = 0, err_fd2 = 0, err_exact = 0;
    for (auto [scheme, out] : {std::pair{DerivativeScheme::fd1, &err_fd1}, std::pair{DerivativeScheme::fd2, &err_fd2},
                               std::pair{DerivativeScheme::exact, &err_exact}}) {
        ExactRankStream stream(exact_params());
        CompressorConfig c;
        c.initial_ranks = {3, 3, 2};
        c.scheme = scheme;
        *out = compress_stream(stream, c).max_error;
    }
    EXPECT_LT(err_exact, err_fd2);
    EXPECT_LT(err_fd2, err_fd1);
}

TEST(Compressor, ControllerAddsModes) {
    ExactRankStream stream(exact_params());
    CompressorConfig c;
    c.initial_ranks = {1, 1, 1};
    c.adaptive.error_threshold = 1e-6 * weighted_frobenius(stream.snapshot(0), *stream.weights());
    c.max_steps = 20;
    const RunSummary r = compress_stream(stream, c);
    EXPECT_EQ(r.log[0].record.action, Action::reinit_add);
    EXPECT_EQ(r.log[0].record.ranks, (MultiRank{3, 3, 2}));
    EXPECT_GE(r.rank_changes, 1u);
    EXPECT_LE(r.max_error, c.adaptive.error_threshold);
    // Harmonic time-weighted mean of the per-step ratios.
    double denom = 0.0;
    for (Index k = 1; k < r.log.size(); ++k) denom += stream.dt() / r.log[k].compression_ratio;
    EXPECT_NEAR(r.weighted_compression_ratio, 20 * stream.dt() / denom, 1e-12);
}

TEST(Compressor, ThresholdIsHeldByReinitialization) {
    ExactRankParams p = exact_params();
    p.rotation_rate = 1.0;
    p.core_variation = 0.5;
    ExactRankStream stream(p);
    CompressorConfig c;
    c.initial_ranks = {3, 3, 2};
    c.integrator = Integrator::euler;
    c.scheme = DerivativeScheme::fd1;
    const double norm = weighted_frobenius(stream.snapshot(0), *stream.weights());
    const RunSummary free_run = compress_stream(stream, c);
    c.adaptive.error_threshold = 0.25 * free_run.max_error;
    ASSERT_GT(free_run.max_error, 1e-6 * norm);
    const RunSummary r = compress_stream(stream, c);
    EXPECT_GT(r.reinitializations, 0u);
    EXPECT_LE(r.max_error, c.adaptive.error_threshold);
    for (const StepLog& e : r.log) {
        if (e.record.reinit) {
            EXPECT_NE(e.record.action, Action::none);
        }
    }
}

TEST(Compressor, ConfigValidation) {
    ExactRankStream stream(exact_params());
    CompressorConfig c;
    c.scheme = DerivativeScheme::central;
    EXPECT_NO_THROW(c.validate(stream)); // generated streams allow lookahead
    c.initial_ranks = {13, 3, 2};
    EXPECT_THROW(c.validate(stream), Error);
    c.initial_ranks = {};
    c.adaptive.energy_threshold = 100.0;
    EXPECT_THROW(c.validate(stream), Error);
}

TEST(Compressor, CentralSchemeOffline) {
    ExactRankStream stream(exact_params());
    CompressorConfig c;
    c.initial_ranks = {3, 3, 2};
    c.scheme = DerivativeScheme::central;
    c.integrator = Integrator::euler;
    const RunSummary r = compress_stream(stream, c);
    EXPECT_EQ(r.steps, 60u);
    EXPECT_TRUE(std::isfinite(r.max_error));
}
