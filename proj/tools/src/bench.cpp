#include "tdbc/commands.hpp"

#include "tdb/evolve.hpp"
#include "tdb/hosvd.hpp"
#include "tdbc/format.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>

namespace tdbc {

using tdb::Index;

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    tdb::require(x.size() == y.size() && x.size() >= 2, tdb::ErrorCategory::shape,
                 "slope needs at least two paired points");
    double mx = 0.0, my = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

namespace {

using Clock = std::chrono::steady_clock;

// One timed kernel. Each sample repeats the body enough times to last at
// least kMinSample, which keeps scheduler noise small for fast kernels.
class Timer {
public:
    explicit Timer(std::function<void()> body) : body_(std::move(body)) {
        const auto start = Clock::now();
        do {
            body_();
            ++reps_;
        } while (Clock::now() - start < kMinSample);
    }
    void sample() {
        const auto start = Clock::now();
        for (Index i = 0; i < reps_; ++i) body_();
        samples_.push_back(std::chrono::duration<double>(Clock::now() - start).count() /
                           static_cast<double>(reps_));
    }
    double median() {
        const auto mid = samples_.begin() + static_cast<std::ptrdiff_t>(samples_.size() / 2);
        std::nth_element(samples_.begin(), mid, samples_.end());
        return *mid;
    }

private:
    static constexpr std::chrono::milliseconds kMinSample{20};
    std::function<void()> body_;
    Index reps_ = 0;
    std::vector<double> samples_;
};

tdb::DenseTensor random_tensor(const tdb::Shape& dims, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    tdb::DenseTensor t(dims);
    for (double& x : t.values()) x = normal(rng);
    return t;
}

} // namespace

BenchResult cmd_bench(const BenchOptions& options) {
    tdb::require(options.trials >= 1, tdb::ErrorCategory::config, "trials must be >= 1");
    tdb::require(options.order >= 2, tdb::ErrorCategory::config, "order must be >= 2");
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;

    // Per-size inputs, kept alive so trials can cycle through all sizes;
    // slow phases of a shared machine then hit every size alike.
    struct Case {
        Index n;
        tdb::TdbState state;
        tdb::DenseTensor v, vdot;
        std::shared_ptr<const tdb::ModeWeights> weights;
        tdb::MultiRank ranks;
        std::optional<Timer> tdb_timer, hosvd_timer;
    };
    std::vector<std::unique_ptr<Case>> cases;
    for (Index n : options.sizes) {
        tdb::require(n >= options.rank, tdb::ErrorCategory::config, "every size must be >= rank");
        auto c = std::make_unique<Case>();
        c->n = n;
        const tdb::Shape dims(options.order, n);
        c->ranks = tdb::MultiRank(options.order, options.rank);
        c->weights = std::make_shared<const tdb::ModeWeights>(tdb::ModeWeights::unit(dims));
        c->state.weights = c->weights;
        c->state.core = random_tensor(c->ranks, rng);
        for (Index m = 0; m < options.order; ++m) {
            tdb::Matrix g(n, options.rank);
            for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
            Eigen::HouseholderQR<tdb::Matrix> qr(g);
            c->state.bases.push_back(qr.householderQ() * tdb::Matrix::Identity(n, options.rank));
        }
        c->vdot = random_tensor(dims, rng);
        c->v = random_tensor(dims, rng);
        Case* raw = c.get();
        c->tdb_timer.emplace([raw, integrator = options.integrator] {
            const tdb::DerivativeFn derivative = [raw](double) { return raw->vdot; };
            const tdb::TdbState next = tdb::step(raw->state, derivative, 1e-3, integrator);
            if (!next.core.all_finite()) tdb::fail(tdb::ErrorCategory::numeric, "bench step diverged");
        });
        c->hosvd_timer.emplace([raw] {
            const tdb::HosvdResult h = tdb::hosvd(raw->v, raw->weights, raw->ranks);
            if (!h.state.core.all_finite()) tdb::fail(tdb::ErrorCategory::numeric, "bench HOSVD diverged");
        });
        cases.push_back(std::move(c));
    }
    for (Index trial = 0; trial < options.trials; ++trial) {
        for (auto& c : cases) {
            c->tdb_timer->sample();
            c->hosvd_timer->sample();
        }
    }

    BenchResult result;
    for (auto& c : cases) {
        BenchRow row;
        row.n = c->n;
        row.size = std::pow(static_cast<double>(c->n), static_cast<double>(options.order));
        row.tdb_seconds = c->tdb_timer->median();
        row.hosvd_seconds = c->hosvd_timer->median();
        result.rows.push_back(row);
    }
    if (result.rows.size() >= 2) {
        std::vector<double> s, a, b;
        for (const auto& r : result.rows) {
            s.push_back(r.size);
            a.push_back(r.tdb_seconds);
            b.push_back(r.hosvd_seconds);
        }
        result.tdb_slope = loglog_slope(s, a);
        result.hosvd_slope = loglog_slope(s, b);
    }
    return result;
}

void write_bench_csv(std::ostream& out, const BenchResult& result) {
    CsvWriter csv(out);
    csv.row({"n", "size", "tdb_seconds", "hosvd_seconds"});
    for (const auto& r : result.rows)
        csv.row({format_index(r.n), format_double(r.size), format_double(r.tdb_seconds),
                 format_double(r.hosvd_seconds)});
    if (result.rows.size() >= 2)
        csv.row({"slope", "", format_double(result.tdb_slope), format_double(result.hosvd_slope)});
}

} // namespace tdbc
